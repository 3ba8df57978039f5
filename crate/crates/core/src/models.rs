//! Model definitions: the all-to-all Ising (kicked top), nearest-neighbour
//! Heisenberg chain, and Rabi-Dicke cavity models, each packaged as a target
//! Hamiltonian plus its ordered Trotter summands; and the three
//! symmetry-class kicked tops used as static references.
//!
//! Time units: all frequencies are stored in units of the coupling g, and the
//! simulated time t and step size tau are expressed in units of 2 pi / g, so
//! one Trotter step applies exp(-i H_l 2 pi tau) per summand. The stored
//! summand list is in literal matrix-product order: the step unitary is the
//! left-to-right product of the summand unitaries, so the *last* summand's
//! unitary acts first on the state.

use std::collections::BTreeMap;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::linalg::{expm_hermitian, tensor, Operator, StateVector};
use crate::operators::{
    bosonic_algebra, chain_operator, qubit_state, spin_algebra, Axis,
};
use crate::{Error, Result};

/// Phase time for one Trotter step of size tau (units 2 pi / g).
pub fn phase_time(tau: f64) -> f64 {
    std::f64::consts::TAU * tau
}

/// A target Hamiltonian with its ordered Trotter decomposition.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub name: String,
    /// Target Hamiltonian H_M = sum of summands.
    pub h_m: Operator,
    /// Named summands in literal product order: U_tau = prod_l U(summands[l]).
    pub summands: Vec<(String, Operator)>,
    /// Parameter snapshot (units of g) for provenance.
    pub params: BTreeMap<String, f64>,
    pub default_state: StateVector,
    /// The g -> 0 limit of H_M; its eigenbasis is the RMT reference basis.
    pub free_hamiltonian: Operator,
    /// Generator for the perturbed step unitary, where defined.
    pub perturbation_generator: Option<Operator>,
    pub warnings: Vec<String>,
}

impl ModelInstance {
    pub fn dim(&self) -> usize {
        self.h_m.dim()
    }

    pub fn factor_dims(&self) -> &[usize] {
        self.h_m.factor_dims()
    }

    /// One Trotter step U_tau: the left-to-right product of summand unitaries
    /// at phase time 2 pi tau.
    pub fn trotter_step_unitary(&self, tau: f64) -> Result<Operator> {
        if tau <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {tau}"
            )));
        }
        let t = phase_time(tau);
        let mut u: Option<Operator> = None;
        for (_, h) in &self.summands {
            let ul = expm_hermitian(h, t)?;
            u = Some(match u {
                None => ul,
                Some(acc) => &acc * &ul,
            });
        }
        let u = u.ok_or_else(|| Error::InvalidArgument("model has no summands".into()))?;
        u.require_unitary(1e-9)?;
        Ok(u)
    }

    /// Exact target evolution e^{-i H_M 2 pi t}.
    pub fn target_unitary(&self, t: f64) -> Result<Operator> {
        expm_hermitian(&self.h_m, phase_time(t))
    }

    /// Perturbed step unitary exp(-i H_pert strength 2 pi tau) U_tau.
    pub fn perturbed_step_unitary(&self, tau: f64, strength: f64) -> Result<Operator> {
        let u = self.trotter_step_unitary(tau)?;
        let pert = self.perturbation_generator.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "model '{}' has no designated perturbation generator",
                self.name
            ))
        })?;
        if strength == 0.0 {
            return Ok(u);
        }
        let up = expm_hermitian(pert, strength * phase_time(tau))?;
        Ok(&up * &u)
    }

    fn check_summand_sum(&self) -> Result<()> {
        let mut sum = Operator::zeros(self.factor_dims().to_vec());
        for (_, h) in &self.summands {
            sum = &sum + h;
        }
        let dev = (&sum - &self.h_m).max_abs();
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "summands do not sum to the target Hamiltonian (max dev {dev:.3e})"
            )));
        }
        Ok(())
    }
}

/// All-to-all Ising parameters (units of g = g_z).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct IsingParams {
    pub omega_x: f64,
    pub g_x: f64,
    pub omega_z: f64,
    pub g_z: f64,
}

impl Default for IsingParams {
    fn default() -> Self {
        Self {
            omega_x: 0.1,
            g_x: 0.7,
            omega_z: 0.3,
            g_z: 1.0,
        }
    }
}

/// All-to-all Ising model (quantum kicked top): H_mu = omega_mu J_mu +
/// g_mu J_mu^2 / (2j + 1) for mu in {x, z}, stepped as U_tau = U_z U_x.
/// Initial state |j, j>.
pub fn a2a_ising(j: f64, params: IsingParams) -> Result<ModelInstance> {
    let alg = spin_algebra(j)?;
    let norm = 2.0 * j + 1.0;
    let h_mu = |jmu: &Operator, omega: f64, gmu: f64| -> Operator {
        let lin = jmu.scale(c64::new(omega, 0.0));
        let quad = (jmu * jmu).scale(c64::new(gmu / norm, 0.0));
        &lin + &quad
    };
    let h_x = h_mu(&alg.jx, params.omega_x, params.g_x);
    let h_z = h_mu(&alg.jz, params.omega_z, params.g_z);
    let h_m = &h_z + &h_x;
    let free = &alg.jx.scale(c64::new(params.omega_x, 0.0))
        + &alg.jz.scale(c64::new(params.omega_z, 0.0));
    let model = ModelInstance {
        name: "a2a_ising".into(),
        h_m,
        summands: vec![("H_z".into(), h_z.clone()), ("H_x".into(), h_x)],
        params: BTreeMap::from([
            ("j".into(), j),
            ("omega_x".into(), params.omega_x),
            ("g_x".into(), params.g_x),
            ("omega_z".into(), params.omega_z),
            ("g_z".into(), params.g_z),
        ]),
        default_state: StateVector::basis_state(0, vec![alg.dim_j])?,
        free_hamiltonian: free,
        perturbation_generator: Some(h_z),
        warnings: Vec::new(),
    };
    model.check_summand_sum()?;
    Ok(model)
}

/// Heisenberg chain parameters (units of g).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct HeisenbergParams {
    pub omega: f64,
    pub g: f64,
}

impl Default for HeisenbergParams {
    fn default() -> Self {
        Self { omega: 1.0, g: 1.0 }
    }
}

/// Nearest-neighbour Heisenberg chain H_H = (omega/2) sum sigma_z^k +
/// g sum (xx + yy + zz), stepped as U_tau = U_z prod_k U_xy^(k,k+1)
/// prod_k U_xz^(k,k+1) prod_k U_yz^(k,k+1) with g' = g/2 in each two-axis
/// bond term. Overlapping bonds within one axis pair do not commute, so the
/// bonds are separate summands. Initial state |1>_1 |0>^(N-1).
pub fn heisenberg(n: usize, params: HeisenbergParams) -> Result<ModelInstance> {
    if !(2..=10).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "chain length must be in 2..=10, got {n}"
        )));
    }
    let site_z: Vec<(usize, Axis, f64)> = (0..n).map(|k| (k, Axis::Z, params.omega / 2.0)).collect();
    let h_z = chain_operator(n, &site_z, &[])?;
    let gp = params.g / 2.0;
    let mut summands = vec![("H_z".to_string(), h_z.clone())];
    for (a, b) in [(Axis::X, Axis::Y), (Axis::X, Axis::Z), (Axis::Y, Axis::Z)] {
        for k in 0..n - 1 {
            let bond = chain_operator(
                n,
                &[],
                &[(k, k + 1, a, a, gp), (k, k + 1, b, b, gp)],
            )?;
            summands.push((format!("H_{a:?}{b:?}_{}{}", k + 1, k + 2).to_lowercase(), bond));
        }
    }
    // independent build of the undecomposed target
    let mut full_pairs = Vec::new();
    for k in 0..n - 1 {
        for ax in [Axis::X, Axis::Y, Axis::Z] {
            full_pairs.push((k, k + 1, ax, ax, params.g));
        }
    }
    let h_m = chain_operator(n, &site_z, &full_pairs)?;

    let mut bits = vec![0u8; n];
    bits[0] = 1;
    let model = ModelInstance {
        name: "heisenberg".into(),
        h_m,
        summands,
        params: BTreeMap::from([
            ("n".into(), n as f64),
            ("omega".into(), params.omega),
            ("g".into(), params.g),
        ]),
        default_state: qubit_state(&bits)?,
        free_hamiltonian: h_z.clone(),
        perturbation_generator: Some(h_z),
        warnings: Vec::new(),
    };
    model.check_summand_sum()?;
    Ok(model)
}

/// Rabi-Dicke parameters (units of g). The detuning split is constrained by
/// omega_c = 2 delta_c and omega_j = delta_j_tc - delta_j_atc; the default is
/// the symmetric split delta_c = omega_c / 2, delta_j_tc = +omega_j / 2,
/// delta_j_atc = -omega_j / 2, overridable per field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct DickeParams {
    pub omega_j: f64,
    pub omega_c: f64,
    pub g: f64,
    pub delta_c: Option<f64>,
    pub delta_j_tc: Option<f64>,
    pub delta_j_atc: Option<f64>,
}

impl Default for DickeParams {
    fn default() -> Self {
        Self {
            omega_j: 3.5,
            omega_c: 3.5,
            g: 1.0,
            delta_c: None,
            delta_j_tc: None,
            delta_j_atc: None,
        }
    }
}

/// Photon-number normalization n_j = 7 * dim_j used for Dicke observables.
pub fn dicke_photon_norm(dim_j: usize) -> f64 {
    7.0 * dim_j as f64
}

/// Cavity truncation for dynamics runs: headroom factor 1.5 over the observed
/// maximum photon number n_j = 7 * dim_j.
pub fn dicke_dynamic_dim_c(dim_j: usize) -> usize {
    (1.5 * dicke_photon_norm(dim_j)).ceil() as usize
}

/// Rabi-Dicke model on the cavity (x) spin space: H_D = omega_c a^dag a +
/// omega_j J_z + (g / sqrt(2j)) (a^dag + a) (J_+ + J_-) with halved ladders
/// J_+- = (Jx +- i Jy)/2, stepped as U_tau = U_TC U_ATC. Initial state
/// |0>_cavity (x) |j, j>.
pub fn dicke(j: f64, dim_c: usize, params: DickeParams) -> Result<ModelInstance> {
    let spin = spin_algebra(j)?;
    let cav = bosonic_algebra(dim_c)?;
    let delta_c = params.delta_c.unwrap_or(params.omega_c / 2.0);
    let delta_j_tc = params.delta_j_tc.unwrap_or(params.omega_j / 2.0);
    let delta_j_atc = params
        .delta_j_atc
        .unwrap_or(delta_j_tc - params.omega_j);
    if (2.0 * delta_c - params.omega_c).abs() > 1e-12
        || (delta_j_tc - delta_j_atc - params.omega_j).abs() > 1e-12
    {
        return Err(Error::InvalidArgument(
            "detuning split violates omega_c = 2 delta_c or omega_j = delta_j_tc - delta_j_atc"
                .into(),
        ));
    }
    let id_c = Operator::identity(vec![dim_c]);
    let id_j = Operator::identity(vec![spin.dim_j]);
    let coupling = params.g / (2.0 * j).sqrt();
    let n_full = tensor(&cav.n, &id_j);
    let jz_full = tensor(&id_c, &spin.jz);
    // TC: a^dag J_- + a J_+; ATC: a^dag J_+ + a J_- (halved ladders)
    let tc_coupling = &tensor(&cav.a_dag, &spin.jminus_half) + &tensor(&cav.a, &spin.jplus_half);
    let atc_coupling = &tensor(&cav.a_dag, &spin.jplus_half) + &tensor(&cav.a, &spin.jminus_half);
    let h_tc = &(&n_full.scale(c64::new(delta_c, 0.0))
        + &jz_full.scale(c64::new(delta_j_tc, 0.0)))
        + &tc_coupling.scale(c64::new(coupling, 0.0));
    let h_atc = &(&n_full.scale(c64::new(delta_c, 0.0))
        + &jz_full.scale(c64::new(-delta_j_atc, 0.0)))
        + &atc_coupling.scale(c64::new(coupling, 0.0));
    // independent build of the collective form
    let x_coupling = tensor(&(&cav.a_dag + &cav.a), &spin.jx);
    let h_m = &(&n_full.scale(c64::new(params.omega_c, 0.0))
        + &jz_full.scale(c64::new(params.omega_j, 0.0)))
        + &x_coupling.scale(c64::new(coupling, 0.0));
    let free = &n_full.scale(c64::new(params.omega_c, 0.0))
        + &jz_full.scale(c64::new(params.omega_j, 0.0));

    let mut warnings = Vec::new();
    let needed = dicke_photon_norm(spin.dim_j) as usize;
    if dim_c < needed {
        warnings.push(format!(
            "cavity truncation dim_c = {dim_c} below the observed photon reach {needed} (7 * dim_j); dynamics may be truncated"
        ));
    }

    let model = ModelInstance {
        name: "dicke".into(),
        h_m,
        summands: vec![("H_TC".into(), h_tc), ("H_ATC".into(), h_atc)],
        params: BTreeMap::from([
            ("j".into(), j),
            ("dim_c".into(), dim_c as f64),
            ("omega_j".into(), params.omega_j),
            ("omega_c".into(), params.omega_c),
            ("g".into(), params.g),
            ("delta_c".into(), delta_c),
            ("delta_j_tc".into(), delta_j_tc),
            ("delta_j_atc".into(), delta_j_atc),
        ]),
        default_state: StateVector::basis_state(0, vec![dim_c, spin.dim_j])?,
        free_hamiltonian: free,
        perturbation_generator: None,
        warnings,
    };
    model.check_summand_sum()?;
    Ok(model)
}

/// Dicke parity operator Pi = e^{i pi (a^dag a + J_z + j)}, diagonal in the
/// Fock (x) J_z product basis.
pub fn dicke_parity(j: f64, dim_c: usize) -> Result<Operator> {
    let spin = spin_algebra(j)?;
    let dim_j = spin.dim_j;
    let global = c64::from_polar(1.0, std::f64::consts::PI * 2.0 * j); // e^{i 2 pi j}
    let mat = faer::Mat::from_fn(dim_c * dim_j, dim_c * dim_j, |r, c| {
        if r != c {
            return c64::new(0.0, 0.0);
        }
        let (n_ph, s) = (r / dim_j, r % dim_j);
        // m + j = 2j - s, so the exponent n + m + j gives e^{i 2 pi j} (-1)^(n+s)
        let sign = if (n_ph + s) % 2 == 0 { 1.0 } else { -1.0 };
        global * c64::new(sign, 0.0)
    });
    Operator::new(mat, vec![dim_c, dim_j])
}

/// Excitation-number parity of an N-qubit chain, the product of all sigma_z
/// operators. Commutes with the Heisenberg step unitary (the longitudinal
/// field and every two-axis exchange bond preserve it).
pub fn heisenberg_parity(n: usize) -> Result<Operator> {
    let dim = 1usize << n;
    let mat = faer::Mat::from_fn(dim, dim, |r, c| {
        if r != c {
            return c64::new(0.0, 0.0);
        }
        let sign = if (r.count_ones() % 2) == 0 { 1.0 } else { -1.0 };
        c64::new(sign, 0.0)
    });
    Operator::new(mat, vec![2; n])
}

/// Kicked-top symmetry class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum KickedTopVariant {
    Coe,
    Cue,
    Cse,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct KickedTopParams {
    pub p: f64,
    pub lambda: f64,
    pub k: f64,
    pub k_prime: f64,
    pub k_double_prime: f64,
}

impl Default for KickedTopParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            lambda: 10.0,
            k: 6.0,
            k_prime: 0.5,
            k_double_prime: 3.0,
        }
    }
}

impl KickedTopParams {
    /// Chaotic-regime defaults per symmetry class.
    pub fn defaults(variant: KickedTopVariant) -> Self {
        match variant {
            KickedTopVariant::Coe => Self {
                p: 1.0,
                lambda: 10.0,
                ..Default::default()
            },
            KickedTopVariant::Cue => Self {
                p: 1.7,
                k: 6.0,
                k_prime: 0.5,
                ..Default::default()
            },
            KickedTopVariant::Cse => Self {
                p: 4.5,
                k: 1.5,
                k_prime: 2.0,
                k_double_prime: 3.0,
                ..Default::default()
            },
        }
    }
}

/// A kicked top: its Floquet operator and construction parameters.
#[derive(Debug, Clone)]
pub struct KickedTopInstance {
    pub variant: KickedTopVariant,
    pub j: f64,
    pub params: KickedTopParams,
    pub floquet: Operator,
}

/// Builds the kicked-top Floquet operator for the given symmetry class.
/// Kick phases are applied as written, with no 2 pi time rescaling: one kick
/// is one application of F.
pub fn kicked_top(variant: KickedTopVariant, j: f64, params: KickedTopParams) -> Result<KickedTopInstance> {
    let alg = spin_algebra(j)?;
    let two_j = 2.0 * j;
    if variant == KickedTopVariant::Cse && (two_j.round() as i64) % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "CSE kicked top requires half-integer j, got {j}"
        )));
    }
    let floquet = match variant {
        KickedTopVariant::Coe => {
            let h0 = alg.jy.scale(c64::new(params.p, 0.0));
            let v = (&alg.jz * &alg.jz).scale(c64::new(params.lambda / two_j, 0.0));
            &expm_hermitian(&v, 1.0)? * &expm_hermitian(&h0, 1.0)?
        }
        KickedTopVariant::Cue => {
            let fx = expm_hermitian(&(&alg.jx * &alg.jx).scale(c64::new(params.k_prime / two_j, 0.0)), 1.0)?;
            let fz = expm_hermitian(&(&alg.jz * &alg.jz).scale(c64::new(params.k / two_j, 0.0)), 1.0)?;
            let fy = expm_hermitian(&alg.jy.scale(c64::new(params.p, 0.0)), 1.0)?;
            &(&fx * &fz) * &fy
        }
        KickedTopVariant::Cse => {
            let h0 = (&alg.jz * &alg.jz).scale(c64::new(params.p / j, 0.0));
            let jz2 = &alg.jz * &alg.jz;
            let xz = &(&alg.jx * &alg.jz) + &(&alg.jz * &alg.jx);
            let xy = &(&alg.jx * &alg.jy) + &(&alg.jy * &alg.jx);
            let v = &(&jz2 + &xz.scale(c64::new(params.k_prime, 0.0)))
                + &xy.scale(c64::new(params.k_double_prime, 0.0));
            let v = v.scale(c64::new(params.k / j, 0.0));
            &expm_hermitian(&v, 1.0)? * &expm_hermitian(&h0, 1.0)?
        }
    };
    floquet.require_unitary(1e-10)?;
    Ok(KickedTopInstance {
        variant,
        j,
        params,
        floquet,
    })
}

impl KickedTopInstance {
    /// The standard kicked-top perturbation: kick strength scaled to
    /// `factor * lambda` (COE only, where lambda is the kick strength).
    pub fn perturbed(&self, factor: f64) -> Result<KickedTopInstance> {
        if self.variant != KickedTopVariant::Coe {
            return Err(Error::InvalidArgument(
                "kick-strength perturbation is defined for the COE kicked top".into(),
            ));
        }
        let mut params = self.params;
        params.lambda *= factor;
        kicked_top(self.variant, self.j, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor_states;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ising_defaults_and_summand_sum() {
        let m = a2a_ising(4.0, IsingParams::default()).unwrap();
        assert_abs_diff_eq!(m.params["omega_x"], 0.1);
        assert_abs_diff_eq!(m.params["g_x"], 0.7);
        assert_abs_diff_eq!(m.params["omega_z"], 0.3);
        assert_abs_diff_eq!(m.params["g_z"], 1.0);
        // independent target build
        let alg = spin_algebra(4.0).unwrap();
        let d = 9.0;
        let target = &(&(&alg.jx.scale(c64::new(0.1, 0.0))
            + &(&alg.jx * &alg.jx).scale(c64::new(0.7 / d, 0.0)))
            + &alg.jz.scale(c64::new(0.3, 0.0)))
            + &(&alg.jz * &alg.jz).scale(c64::new(1.0 / d, 0.0));
        assert!((&m.h_m - &target).max_abs() < 1e-12);
        // initial state |j, j>
        assert!((m.default_state.amps()[0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ising_spin_half_quadratic_terms_are_identity_like() {
        let m = a2a_ising(0.5, IsingParams::default()).unwrap();
        // J_mu^2 = 1/4 for spin 1/2, so H_x - omega_x Jx is proportional to identity
        let alg = spin_algebra(0.5).unwrap();
        let h_x = &m.summands[1].1;
        // g_x J_x^2/(2j+1) = 0.7 * (1/4) / 2
        let expected = 0.7 * 0.25 / 2.0;
        let resid = &(h_x - &alg.jx.scale(c64::new(0.1, 0.0)))
            - &Operator::identity(vec![2]).scale(c64::new(expected, 0.0));
        assert!(resid.max_abs() < 1e-14);
    }

    #[test]
    fn ising_step_order_is_z_then_x_applied() {
        // U_tau = U_z U_x: acting on a state applies U_x first
        let m = a2a_ising(1.0, IsingParams::default()).unwrap();
        let tau = 0.13;
        let u = m.trotter_step_unitary(tau).unwrap();
        let uz = expm_hermitian(&m.summands[0].1, phase_time(tau)).unwrap();
        let ux = expm_hermitian(&m.summands[1].1, phase_time(tau)).unwrap();
        assert!((&u - &(&uz * &ux)).max_abs() < 1e-12);
    }

    #[test]
    fn heisenberg_decomposition_sums_to_target() {
        let m = heisenberg(3, HeisenbergParams::default()).unwrap();
        m.check_summand_sum().unwrap();
        // H_z plus three axis pairs times two bonds
        assert_eq!(m.summands.len(), 7);
        assert_eq!(m.dim(), 8);
        // default state |1 0 0>
        let target = qubit_state(&[1, 0, 0]).unwrap();
        for i in 0..8 {
            assert_eq!(m.default_state.amps()[i], target.amps()[i]);
        }
    }

    #[test]
    fn heisenberg_xz_summand_is_rotated_exchange() {
        let m = heisenberg(2, HeisenbergParams::default()).unwrap();
        let h_xy = &m.summands[1].1;
        let h_xz = &m.summands[2].1;
        // R_x(pi/2) per qubit: exp(-i (pi/2) sigma_x / 2)
        let sx_half = crate::operators::pauli(Axis::X).scale(c64::new(0.5, 0.0));
        let r1 = expm_hermitian(&sx_half, std::f64::consts::FRAC_PI_2).unwrap();
        let r = tensor(&r1, &r1);
        let rotated = &(&r * h_xy) * &r.dagger();
        assert!((&rotated - h_xz).max_abs() < 1e-12);
    }

    #[test]
    fn dicke_decomposition_and_uncoupled_limit() {
        let m = dicke(1.0, 8, DickeParams::default()).unwrap();
        m.check_summand_sum().unwrap();
        assert_eq!(m.factor_dims(), &[8, 3]);
        // g -> 0: both summands diagonal in the free basis, commuting
        let m0 = dicke(
            1.0,
            8,
            DickeParams {
                g: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        let comm = m0.summands[0].1.commutator(&m0.summands[1].1).unwrap();
        assert!(comm.max_abs() < 1e-12);
        // default state: vacuum (x) |j, j>
        let vac = StateVector::basis_state(0, vec![8]).unwrap();
        let up = StateVector::basis_state(0, vec![3]).unwrap();
        let prod = tensor_states(&vac, &up);
        for i in 0..24 {
            assert_eq!(m.default_state.amps()[i], prod.amps()[i]);
        }
    }

    #[test]
    fn dicke_truncation_warning() {
        let small = dicke(1.0, 8, DickeParams::default()).unwrap();
        assert_eq!(small.warnings.len(), 1); // 8 < 7 * 3
        let big = dicke(1.0, 21, DickeParams::default()).unwrap();
        assert!(big.warnings.is_empty());
    }

    #[test]
    fn dicke_parity_commutes_with_target() {
        let m = dicke(2.0, 10, DickeParams::default()).unwrap();
        let pi = dicke_parity(2.0, 10).unwrap();
        assert!(m.h_m.commutator(&pi).unwrap().max_abs() < 1e-10);
        assert!(pi.unitarity_error() < 1e-12);
    }

    #[test]
    fn kicked_top_coe_vanishing_kick_is_rotation() {
        let kt = kicked_top(
            KickedTopVariant::Coe,
            5.0,
            KickedTopParams {
                lambda: 0.0,
                ..KickedTopParams::defaults(KickedTopVariant::Coe)
            },
        )
        .unwrap();
        let alg = spin_algebra(5.0).unwrap();
        let rot = expm_hermitian(&alg.jy, 1.0).unwrap();
        assert!((&kt.floquet - &rot).max_abs() < 1e-12);
    }

    #[test]
    fn kicked_top_variants_unitary_and_cse_guard() {
        for (variant, j) in [
            (KickedTopVariant::Coe, 20.0),
            (KickedTopVariant::Cue, 20.0),
            (KickedTopVariant::Cse, 19.5),
        ] {
            let kt = kicked_top(variant, j, KickedTopParams::defaults(variant)).unwrap();
            assert!(kt.floquet.unitarity_error() < 1e-10);
        }
        assert!(kicked_top(
            KickedTopVariant::Cse,
            20.0,
            KickedTopParams::defaults(KickedTopVariant::Cse)
        )
        .is_err());
    }

    #[test]
    fn kicked_top_perturbation_scales_lambda() {
        let kt = kicked_top(
            KickedTopVariant::Coe,
            5.0,
            KickedTopParams::defaults(KickedTopVariant::Coe),
        )
        .unwrap();
        let p = kt.perturbed(1.001).unwrap();
        assert_abs_diff_eq!(p.params.lambda, 10.01, epsilon = 1e-12);
        assert!((&p.floquet - &kt.floquet).max_abs() > 1e-6);
    }

    #[test]
    fn perturbed_step_zero_strength_is_plain_step() {
        let m = a2a_ising(2.0, IsingParams::default()).unwrap();
        let u = m.trotter_step_unitary(0.1).unwrap();
        let up = m.perturbed_step_unitary(0.1, 0.0).unwrap();
        assert!((&u - &up).max_abs() < 1e-14);
        let up = m.perturbed_step_unitary(0.1, 0.05).unwrap();
        assert!(up.unitarity_error() < 1e-9);
        assert!((&u - &up).max_abs() > 1e-6);
    }
}
