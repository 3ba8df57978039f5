//! Dynamical signatures computed from stroboscopic state series: observable
//! expectations, participation ratio, perturbation fidelity, sub-system
//! entropy, simulation fidelity, and time averages.

use std::collections::BTreeMap;

use crate::evolution::{evolve_unitary, EvolutionRecord};
use crate::linalg::{partial_trace, HermitianEig, Operator, StateVector};
use crate::models::ModelInstance;
use crate::{Error, Result};

/// A scalar signature sampled at stroboscopic times i * stride * tau.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TimeSeries {
    pub label: String,
    pub tau: f64,
    pub stride: usize,
    pub values: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, tau: f64, stride: usize, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            tau,
            stride,
            values,
            meta: BTreeMap::new(),
        }
    }

    pub fn time_at(&self, i: usize) -> f64 {
        (i * self.stride) as f64 * self.tau
    }
}

/// Real expectation values <psi|O|psi> along a state series; O must be
/// Hermitian (enforced by the imaginary-residue check per sample).
pub fn expectation(
    states: &[StateVector],
    op: &Operator,
    tau: f64,
    stride: usize,
    label: &str,
) -> Result<TimeSeries> {
    let values = states
        .iter()
        .map(|s| s.expectation(op))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries::new(label, tau, stride, values))
}

/// A localisation basis for the participation ratio. All paper bases are
/// (subsets of) the computational product basis: the J_z ladder for spin
/// models, qubit states for the chain, and Fock (x) J_z products for Dicke.
#[derive(Debug, Clone)]
pub enum PrBasis {
    /// The full computational basis of the given dimension.
    Computational { dim: usize },
    /// A subset of computational basis states; the PR dimension is the
    /// subset size.
    Subset { indices: Vec<usize>, dim: usize },
}

impl PrBasis {
    pub fn size(&self) -> usize {
        match self {
            PrBasis::Computational { dim } => *dim,
            PrBasis::Subset { indices, .. } => indices.len(),
        }
    }
}

/// The Dicke PR basis: the first (2 dim_j)^2 Fock (x) J_z product states
/// ordered by free energy (stable index tie-break).
pub fn dicke_pr_basis(model: &ModelInstance) -> Result<PrBasis> {
    if model.name != "dicke" {
        return Err(Error::InvalidArgument(
            "dicke_pr_basis requires a Dicke model".into(),
        ));
    }
    let dim = model.dim();
    let dim_j = *model.factor_dims().last().unwrap();
    let take = (2 * dim_j) * (2 * dim_j);
    if take > dim {
        return Err(Error::InvalidArgument(format!(
            "PR basis size {take} exceeds Hilbert space dim {dim}; increase dim_c"
        )));
    }
    // free Hamiltonian is diagonal in the product basis
    let h = model.free_hamiltonian.mat();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        h[(a, a)]
            .re
            .total_cmp(&h[(b, b)].re)
            .then(a.cmp(&b))
    });
    order.truncate(take);
    Ok(PrBasis::Subset {
        indices: order,
        dim,
    })
}

/// Participation ratio PR = (1/D) (sum_k |<k|psi>|^4)^-1 over the given
/// basis; 1/D for a localised state, 1 for a uniform superposition. Values
/// are clamped to [1/D, 1] (a truncated basis can push the raw value above 1
/// when weight leaks outside the basis).
pub fn participation_ratio(
    states: &[StateVector],
    basis: &PrBasis,
    tau: f64,
    stride: usize,
) -> Result<TimeSeries> {
    let d_eff = basis.size();
    if d_eff == 0 {
        return Err(Error::InvalidArgument("empty PR basis".into()));
    }
    let values = states
        .iter()
        .map(|s| {
            let fourth: f64 = match basis {
                PrBasis::Computational { dim } => {
                    if *dim != s.dim() {
                        return Err(Error::DimensionMismatch("PR basis vs state".into()));
                    }
                    s.amps().iter().map(|z| z.norm_sqr().powi(2)).sum()
                }
                PrBasis::Subset { indices, dim } => {
                    if *dim != s.dim() {
                        return Err(Error::DimensionMismatch("PR basis vs state".into()));
                    }
                    indices
                        .iter()
                        .map(|&k| s.amps()[k].norm_sqr().powi(2))
                        .sum()
                }
            };
            let pr = 1.0 / (d_eff as f64 * fourth);
            Ok(pr.clamp(1.0 / d_eff as f64, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ts = TimeSeries::new("participation_ratio", tau, stride, values);
    ts.meta
        .insert("pr_basis_size".into(), d_eff.to_string());
    Ok(ts)
}

/// |<a_i|b_i>|^2 per index for two aligned state series.
pub fn fidelity_series(a: &[StateVector], b: &[StateVector]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "state series lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.fidelity(y)).collect())
}

/// Fidelity between evolutions under U_tau and the perturbed step unitary
/// exp(-i H_pert strength 2 pi tau) U_tau, from the same initial state.
pub fn perturbation_fidelity(
    model: &ModelInstance,
    tau: f64,
    r: usize,
    psi0: &StateVector,
    strength: f64,
) -> Result<TimeSeries> {
    let u = model.trotter_step_unitary(tau)?;
    let up = model.perturbed_step_unitary(tau, strength)?;
    let a = evolve_unitary(&u, r, psi0, 1)?;
    let b = evolve_unitary(&up, r, psi0, 1)?;
    let mut ts = TimeSeries::new("perturbation_fidelity", tau, 1, fidelity_series(&a, &b)?);
    ts.meta
        .insert("perturbation_strength".into(), format!("{strength}"));
    Ok(ts)
}

/// Normalized sub-system entropy S = -(1 / ln D_i) Tr(rho_i ln rho_i) of the
/// kept factors, in [0, 1]. Marginal eigenvalues in [-1e-12, 0) are clipped
/// to 0 before the logarithm.
pub fn subsystem_entropy(
    states: &[StateVector],
    keep: &[usize],
    tau: f64,
    stride: usize,
) -> Result<TimeSeries> {
    let values = states
        .iter()
        .map(|s| {
            let rho = partial_trace(&s.to_density(), keep)?;
            let d_i = rho.dim() as f64;
            let eig = HermitianEig::decompose(&Operator::new(
                rho.mat().clone(),
                rho.factor_dims().to_vec(),
            )?)?;
            let mut h = 0.0;
            for &p in &eig.eigenvalues {
                if p < -1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "marginal eigenvalue {p} below clipping tolerance"
                    )));
                }
                if p > 0.0 {
                    h -= p * p.ln();
                }
            }
            Ok((h / d_i.ln()).clamp(0.0, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries::new("subsystem_entropy", tau, stride, values))
}

/// Simulation fidelity |<psi_dig|psi_ide>|^2 at matched stroboscopic times.
pub fn simulation_fidelity(record: &EvolutionRecord) -> Result<TimeSeries> {
    let ide = record
        .states_ide
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("record has no ideal series".into()))?;
    Ok(TimeSeries::new(
        "simulation_fidelity",
        record.tau,
        record.stride,
        fidelity_series(&record.states_dig, ide)?,
    ))
}

/// Plain mean over stroboscopic samples with time <= t_max, inclusive of the
/// t = 0 sample.
pub fn time_average(series: &TimeSeries, t_max: f64) -> Result<f64> {
    if t_max < 0.0 {
        return Err(Error::InvalidArgument("negative averaging window".into()));
    }
    let step = series.stride as f64 * series.tau;
    let count = ((t_max / step + 1e-9).floor() as usize + 1).min(series.values.len());
    if count == 0 {
        return Err(Error::InvalidArgument("empty averaging window".into()));
    }
    Ok(series.values[..count].iter().sum::<f64>() / count as f64)
}
