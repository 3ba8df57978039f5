//! Stroboscopic state evolution: repeated Trotter steps and step-sampled
//! exact evolution.

use faer::c64;

use crate::linalg::{eig_unitary, HermitianEig, Operator, StateVector};
use crate::models::{phase_time, ModelInstance};
use crate::{Error, Result};

/// Maximum tolerated norm drift of the running state before aborting.
const NORM_DRIFT_ABORT: f64 = 1e-6;

/// States of one Trotterised evolution at stroboscopic times n tau,
/// optionally paired with the exact evolution sampled at the same times.
#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub tau: f64,
    pub n_steps: usize,
    /// Keep-every-k storage stride; index i holds the state after i*stride steps.
    pub stride: usize,
    pub states_dig: Vec<StateVector>,
    pub states_ide: Option<Vec<StateVector>>,
}

impl EvolutionRecord {
    /// Stroboscopic time (units 2 pi / g) of stored index i.
    pub fn time_at(&self, i: usize) -> f64 {
        (i * self.stride) as f64 * self.tau
    }
}

/// Applies `u` r times to `psi0`, storing every `stride`-th state (the t=0
/// state always included). Uses repeated matrix-vector products for short
/// runs and one unitary eigendecomposition when r exceeds the dimension.
pub fn evolve_unitary(
    u: &Operator,
    r: usize,
    psi0: &StateVector,
    stride: usize,
) -> Result<Vec<StateVector>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    if u.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "unitary dim {} vs state dim {}",
            u.dim(),
            psi0.dim()
        )));
    }
    if r > u.dim() {
        evolve_by_eigendecomposition(u, r, psi0, stride)
    } else {
        evolve_by_multiplication(u, r, psi0, stride)
    }
}

fn store(
    out: &mut Vec<StateVector>,
    amps: &faer::Col<c64>,
    factor_dims: &[usize],
    step: usize,
) -> Result<()> {
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let drift = (norm - 1.0).abs();
    if drift > NORM_DRIFT_ABORT {
        return Err(Error::NormDrift { drift, step });
    }
    out.push(StateVector::from_unnormalized(
        amps.clone(),
        factor_dims.to_vec(),
    )?);
    Ok(())
}

fn evolve_by_multiplication(
    u: &Operator,
    r: usize,
    psi0: &StateVector,
    stride: usize,
) -> Result<Vec<StateVector>> {
    let dims = psi0.factor_dims().to_vec();
    let mut out = Vec::with_capacity(r / stride + 1);
    let mut amps = psi0.amps().clone();
    store(&mut out, &amps, &dims, 0)?;
    for n in 1..=r {
        amps = u.mat() * &amps;
        if n % stride == 0 {
            store(&mut out, &amps, &dims, n)?;
        }
    }
    Ok(out)
}

fn evolve_by_eigendecomposition(
    u: &Operator,
    r: usize,
    psi0: &StateVector,
    stride: usize,
) -> Result<Vec<StateVector>> {
    let eig = eig_unitary(u)?;
    let dims = psi0.factor_dims().to_vec();
    let d = u.dim();
    let coeffs = eig.vectors.adjoint() * psi0.amps();
    let mut out = Vec::with_capacity(r / stride + 1);
    for n in (0..=r).step_by(stride) {
        let mut rotated = coeffs.clone();
        for k in 0..d {
            rotated[k] *= c64::from_polar(1.0, eig.phases[k] * n as f64);
        }
        let amps = &eig.vectors * rotated;
        store(&mut out, &amps, &dims, n)?;
    }
    Ok(out)
}

/// Trotterised evolution: builds U_tau once and applies it r times.
pub fn trotter_evolve(
    model: &ModelInstance,
    tau: f64,
    r: usize,
    psi0: &StateVector,
) -> Result<EvolutionRecord> {
    trotter_evolve_strided(model, tau, r, psi0, 1)
}

/// As [`trotter_evolve`] with keep-every-`stride` state storage.
pub fn trotter_evolve_strided(
    model: &ModelInstance,
    tau: f64,
    r: usize,
    psi0: &StateVector,
    stride: usize,
) -> Result<EvolutionRecord> {
    if r == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let u = model.trotter_step_unitary(tau)?;
    let states_dig = evolve_unitary(&u, r, psi0, stride)?;
    Ok(EvolutionRecord {
        tau,
        n_steps: r,
        stride,
        states_dig,
        states_ide: None,
    })
}

impl EvolutionRecord {
    /// Attaches the exact evolution sampled at the same stroboscopic times.
    pub fn with_ideal(mut self, model: &ModelInstance, psi0: &StateVector) -> Result<Self> {
        let ide = ideal_sampled_strided(model, self.tau, self.n_steps, psi0, self.stride)?;
        if ide.len() != self.states_dig.len() {
            return Err(Error::DimensionMismatch(
                "ideal series length mismatch".into(),
            ));
        }
        self.states_ide = Some(ide);
        Ok(self)
    }
}

/// Exact target-model states at times n tau, n = 0..=r, from one
/// eigendecomposition of H_M.
pub fn ideal_sampled(
    model: &ModelInstance,
    tau: f64,
    r: usize,
    psi0: &StateVector,
) -> Result<Vec<StateVector>> {
    ideal_sampled_strided(model, tau, r, psi0, 1)
}

pub fn ideal_sampled_strided(
    model: &ModelInstance,
    tau: f64,
    r: usize,
    psi0: &StateVector,
    stride: usize,
) -> Result<Vec<StateVector>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let eig = HermitianEig::decompose(&model.h_m)?;
    let mut out = Vec::with_capacity(r / stride + 1);
    for n in (0..=r).step_by(stride) {
        out.push(eig.propagate_state(phase_time(n as f64 * tau), psi0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{a2a_ising, dicke, heisenberg, DickeParams, HeisenbergParams, IsingParams};

    #[test]
    fn commuting_summands_match_target_evolution() {
        // Dicke at g = 0 has commuting (diagonal) summands
        let m = dicke(
            1.0,
            6,
            DickeParams {
                g: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        let rec = trotter_evolve(&m, 0.21, 12, &m.default_state)
            .unwrap()
            .with_ideal(&m, &m.default_state)
            .unwrap();
        let ide = rec.states_ide.as_ref().unwrap();
        for (d, i) in rec.states_dig.iter().zip(ide) {
            assert!((1.0 - d.fidelity(i)).abs() < 1e-9);
        }
    }

    #[test]
    fn two_qubit_heisenberg_is_exact() {
        let m = heisenberg(2, HeisenbergParams::default()).unwrap();
        for tau in [0.05, 0.3, 0.8] {
            let rec = trotter_evolve(&m, tau, 30, &m.default_state)
                .unwrap()
                .with_ideal(&m, &m.default_state)
                .unwrap();
            let ide = rec.states_ide.as_ref().unwrap();
            for (d, i) in rec.states_dig.iter().zip(ide) {
                assert!((1.0 - d.fidelity(i)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn matches_naive_multiplication_oracle() {
        let m = a2a_ising(4.0, IsingParams::default()).unwrap();
        let (tau, r) = (0.02, 100);
        let rec = trotter_evolve(&m, tau, r, &m.default_state).unwrap();
        // independent oracle: accumulate the full product matrix step by step
        let u = m.trotter_step_unitary(tau).unwrap();
        let mut acc = Operator::identity(vec![m.dim()]);
        for (n, state) in rec.states_dig.iter().enumerate() {
            if n > 0 {
                acc = &u * &acc;
            }
            let oracle = acc.apply(&m.default_state).unwrap();
            for i in 0..m.dim() {
                assert!((oracle.amps()[i] - state.amps()[i]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn eig_and_multiplication_paths_agree() {
        let m = a2a_ising(3.0, IsingParams::default()).unwrap();
        let u = m.trotter_step_unitary(0.3).unwrap();
        let a = evolve_by_multiplication(&u, 20, &m.default_state, 1).unwrap();
        let b = evolve_by_eigendecomposition(&u, 20, &m.default_state, 1).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for i in 0..m.dim() {
                assert!((x.amps()[i] - y.amps()[i]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn prefix_stability_and_stride() {
        let m = a2a_ising(2.0, IsingParams::default()).unwrap();
        let short = trotter_evolve(&m, 0.1, 10, &m.default_state).unwrap();
        let long = trotter_evolve(&m, 0.1, 25, &m.default_state).unwrap();
        for n in 0..=10 {
            for i in 0..m.dim() {
                assert!(
                    (short.states_dig[n].amps()[i] - long.states_dig[n].amps()[i]).norm() < 1e-10
                );
            }
        }
        let strided = trotter_evolve_strided(&m, 0.1, 25, &m.default_state, 5).unwrap();
        assert_eq!(strided.states_dig.len(), 6);
        assert!((strided.time_at(2) - 1.0).abs() < 1e-12);
        for (k, s) in strided.states_dig.iter().enumerate() {
            for i in 0..m.dim() {
                assert!((s.amps()[i] - long.states_dig[5 * k].amps()[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn ideal_sampling_matches_direct_expm() {
        let m = a2a_ising(2.0, IsingParams::default()).unwrap();
        let states = ideal_sampled(&m, 0.1, 7, &m.default_state).unwrap();
        // n = 0 is the initial state
        for i in 0..m.dim() {
            assert!((states[0].amps()[i] - m.default_state.amps()[i]).norm() < 1e-12);
        }
        let direct = m
            .target_unitary(0.7)
            .unwrap()
            .apply(&m.default_state)
            .unwrap();
        for i in 0..m.dim() {
            assert!((states[7].amps()[i] - direct.amps()[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn ideal_eigenstate_populations_constant() {
        // free Dicke Hamiltonian is diagonal; basis states are eigenstates
        let m = dicke(
            0.5,
            4,
            DickeParams {
                g: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        let states = ideal_sampled(&m, 0.3, 9, &m.default_state).unwrap();
        for s in &states {
            assert!((s.amps()[0].norm() - 1.0).abs() < 1e-10);
        }
    }
}
