//! Always-on property suite: structural invariants checked over randomized
//! inputs.

use proptest::prelude::*;

use trottersim::errors::{delta_pointwise, delta_time_avg};
use trottersim::evolution::trotter_evolve;
use trottersim::models::{a2a_ising, heisenberg, HeisenbergParams, IsingParams};
use trottersim::rmt::{eigenvector_components, DegeneracyMode, Ensemble, EnsembleDensity};
use trottersim::runner::{
    parse_csv, run_sweep, to_csv, ResultRow, SignatureKind, SweepConfig, TauGrid,
};
use trottersim::signatures::{
    participation_ratio, subsystem_entropy, PrBasis, TimeSeries,
};

fn small_j() -> impl Strategy<Value = f64> {
    (1u32..=8).prop_map(|two_j| two_j as f64 / 2.0 + 0.5)
}

fn tau_strategy() -> impl Strategy<Value = f64> {
    0.01f64..1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trotter_step_is_unitary(j in small_j(), tau in tau_strategy()) {
        let m = a2a_ising(j, IsingParams::default()).unwrap();
        let u = m.trotter_step_unitary(tau).unwrap();
        prop_assert!(u.unitarity_error() < 1e-9);
    }

    #[test]
    fn evolution_preserves_norm(j in small_j(), tau in tau_strategy(), r in 1usize..40) {
        let m = a2a_ising(j, IsingParams::default()).unwrap();
        let rec = trotter_evolve(&m, tau, r, &m.default_state).unwrap();
        for s in &rec.states_dig {
            let norm: f64 = (0..s.dim()).map(|i| s.amps()[i].norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pr_and_entropy_stay_bounded(n in 2usize..5, tau in tau_strategy(), r in 1usize..20) {
        let m = heisenberg(n, HeisenbergParams::default()).unwrap();
        let rec = trotter_evolve(&m, tau, r, &m.default_state).unwrap();
        let basis = PrBasis::Computational { dim: m.dim() };
        let pr = participation_ratio(&rec.states_dig, &basis, tau, 1).unwrap();
        for v in &pr.values {
            prop_assert!((1.0 / m.dim() as f64 - 1e-12..=1.0 + 1e-12).contains(v));
        }
        let ent = subsystem_entropy(&rec.states_dig, &[0], tau, 1).unwrap();
        for v in &ent.values {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(v));
        }
    }

    #[test]
    fn pointwise_error_dominates_averaged(
        values in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..40),
        t in 0.1f64..10.0,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
        let dig = TimeSeries::new("dig", 0.1, 1, a);
        let ide = TimeSeries::new("ide", 0.1, 1, b);
        let avg = delta_time_avg(&dig, &ide, t).unwrap();
        let point = delta_pointwise(&dig, &ide, t).unwrap();
        prop_assert!(point >= avg - 1e-12);
    }

    #[test]
    fn eigenvector_components_sum_to_dimension(j in small_j(), tau in tau_strategy()) {
        let m = a2a_ising(j, IsingParams::default()).unwrap();
        let u = m.trotter_step_unitary(tau).unwrap();
        let comps = eigenvector_components(&u, None, DegeneracyMode::None).unwrap();
        let sum: f64 = comps.iter().sum();
        prop_assert!((sum - m.dim() as f64).abs() < 1e-8);
        for &c in &comps {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c));
        }
    }

    #[test]
    fn ensemble_densities_normalized(d in 3u32..400) {
        for ens in [Ensemble::Coe, Ensemble::Cue, Ensemble::Cse] {
            let density = EnsembleDensity::new(ens, d as f64).unwrap();
            let total = density.density_mean(0.0, 1.0).unwrap();
            prop_assert!((total - 1.0).abs() < 1e-6, "{ens:?} d={d}: {total}");
        }
    }

    #[test]
    fn csv_round_trip_is_lossless(
        rows in prop::collection::vec(
            (
                "[a-z_]{1,12}",
                0.5f64..300.0,
                proptest::num::f64::POSITIVE,
                "[a-z_]{1,12}",
                0.0f64..500.0,
                proptest::num::f64::ANY.prop_filter("finite", |v| v.is_finite()),
            ),
            0..20,
        )
    ) {
        let rows: Vec<ResultRow> = rows
            .into_iter()
            .map(|(model, size, tau, signature, window, value)| ResultRow {
                model,
                size,
                tau,
                signature,
                window,
                value,
                provenance: String::new(),
            })
            .collect();
        let text = to_csv(&rows);
        let parsed = parse_csv(&text).unwrap();
        prop_assert_eq!(to_csv(&parsed), text);
        prop_assert_eq!(parsed, rows);
    }
}

#[test]
fn sweep_is_deterministic_and_cache_replays_exactly() {
    let config = SweepConfig {
        model: "heisenberg".into(),
        sizes: vec![3.0],
        tau: TauGrid::linear(0.1, 0.4, 3),
        signatures: vec![SignatureKind::Jz, SignatureKind::Infidelity],
        windows: vec![3.0],
        ..SweepConfig::default()
    };
    let a = run_sweep(&config, None).unwrap();
    let b = run_sweep(&config, None).unwrap();
    assert_eq!(a.rows, b.rows);
    let dir = tempfile::tempdir().unwrap();
    let warm = run_sweep(&config, Some(dir.path())).unwrap();
    let replay = run_sweep(&config, Some(dir.path())).unwrap();
    assert_eq!(replay.computed_rows, 0);
    assert_eq!(warm.rows, replay.rows);
    assert_eq!(to_csv(&warm.rows), to_csv(&replay.rows));
}
