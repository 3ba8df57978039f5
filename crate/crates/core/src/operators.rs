//! Physical operator constructors: spin-j angular momenta, Pauli chains,
//! truncated bosonic ladders, coherent states, random initial states, and
//! symmetry projectors.
//!
//! Qubit convention: the single-qubit Paulis are the standard matrices with
//! `sigma_z = diag(1, -1)`, so basis index 0 is the excited state |1> (sigma_z
//! eigenvalue +1) and index 1 is the ground state |0> (eigenvalue -1). Use
//! [`qubit_state`] to build computational states from bit labels without
//! touching raw indices.

use faer::{c64, Col, Mat};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::linalg::{eig_unitary, expm_hermitian, HermitianEig, Operator, StateVector, HERM_TOL, UNITARY_TOL};
use crate::{Error, Result};

/// Spin-j angular momentum algebra on the (2j+1)-dimensional ladder basis
/// |j,j>, |j,j-1>, ..., |j,-j> (highest weight first).
///
/// `jplus`/`jminus` are the unhalved ladders J+- = Jx +- i Jy with
/// <m+1|J+|m> = sqrt(j(j+1) - m(m+1)); the halved variants
/// (Jx +- i Jy)/2 are exposed separately so each model can name which
/// convention it uses.
#[derive(Debug, Clone)]
pub struct SpinAlgebra {
    pub j: f64,
    pub dim_j: usize,
    pub jx: Operator,
    pub jy: Operator,
    pub jz: Operator,
    pub jplus: Operator,
    pub jminus: Operator,
    pub jplus_half: Operator,
    pub jminus_half: Operator,
}

pub fn spin_algebra(j: f64) -> Result<SpinAlgebra> {
    let two_j = 2.0 * j;
    if j <= 0.0 || (two_j - two_j.round()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "j must be a positive half-integer, got {j}"
        )));
    }
    let dim_j = two_j.round() as usize + 1;
    let m_of = |idx: usize| j - idx as f64; // index 0 <-> m = j

    let jz = Mat::from_fn(dim_j, dim_j, |r, c| {
        if r == c {
            c64::new(m_of(r), 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    // J+ raises m: |m> at index i maps to |m+1> at index i-1.
    let mut jplus = Mat::<c64>::zeros(dim_j, dim_j);
    for i in 1..dim_j {
        let m = m_of(i);
        jplus[(i - 1, i)] = c64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let jminus = jplus.adjoint().to_owned();
    let jx = faer::Scale(c64::new(0.5, 0.0)) * (&jplus + &jminus);
    let jy = faer::Scale(c64::new(0.0, -0.5)) * (&jplus - &jminus);
    let half = faer::Scale(c64::new(0.5, 0.0));
    let jplus_half = half * &jplus;
    let jminus_half = half * &jminus;
    let wrap = |m: Mat<c64>| Operator::from_mat(m);
    Ok(SpinAlgebra {
        j,
        dim_j,
        jx: wrap(jx),
        jy: wrap(jy),
        jz: wrap(jz),
        jplus: wrap(jplus),
        jminus: wrap(jminus),
        jplus_half: wrap(jplus_half),
        jminus_half: wrap(jminus_half),
    })
}

/// Truncated bosonic mode on Fock states |0>..|dim_c - 1>.
///
/// The canonical commutator [a, a^dag] = 1 holds everywhere except the top
/// Fock level, where truncation leaves a single -dim_c entry.
#[derive(Debug, Clone)]
pub struct BosonicAlgebra {
    pub dim_c: usize,
    pub a: Operator,
    pub a_dag: Operator,
    pub n: Operator,
}

pub fn bosonic_algebra(dim_c: usize) -> Result<BosonicAlgebra> {
    if dim_c < 2 {
        return Err(Error::InvalidArgument(format!(
            "Fock truncation dim_c must be >= 2, got {dim_c}"
        )));
    }
    let mut a = Mat::<c64>::zeros(dim_c, dim_c);
    for k in 1..dim_c {
        a[(k - 1, k)] = c64::new((k as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint().to_owned();
    let n = Mat::from_fn(dim_c, dim_c, |r, c| {
        if r == c {
            c64::new(r as f64, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    Ok(BosonicAlgebra {
        dim_c,
        a: Operator::from_mat(a),
        a_dag: Operator::from_mat(a_dag),
        n: Operator::from_mat(n),
    })
}

/// Pauli axis for chain operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// 2x2 Pauli matrix entries.
    fn entry(self, r: usize, c: usize) -> c64 {
        match (self, r, c) {
            (Axis::X, 0, 1) | (Axis::X, 1, 0) => c64::new(1.0, 0.0),
            (Axis::Y, 0, 1) => c64::new(0.0, -1.0),
            (Axis::Y, 1, 0) => c64::new(0.0, 1.0),
            (Axis::Z, 0, 0) => c64::new(1.0, 0.0),
            (Axis::Z, 1, 1) => c64::new(-1.0, 0.0),
            _ => c64::new(0.0, 0.0),
        }
    }
}

pub fn pauli(axis: Axis) -> Operator {
    Operator::from_mat(Mat::from_fn(2, 2, |r, c| axis.entry(r, c)))
}

/// Accumulates coeff * (product of Paulis at `sites`) embedded in an N-qubit
/// chain, iterating only over the nonzero pattern.
fn add_embedded_paulis(mat: &mut Mat<c64>, n: usize, sites: &[(usize, Axis)], coeff: f64) {
    let dim = 1usize << n;
    let bit_pos = |site: usize| n - 1 - site; // site 0 is the most significant bit
    for i in 0..dim {
        // enumerate column bit choices on the Pauli sites
        let p = sites.len();
        for mask in 0..(1usize << p) {
            let mut amp = c64::new(coeff, 0.0);
            let mut j = i;
            for (k, &(site, axis)) in sites.iter().enumerate() {
                let pos = bit_pos(site);
                let r = (i >> pos) & 1;
                let c = (mask >> k) & 1;
                amp *= axis.entry(r, c);
                if amp.norm_sqr() == 0.0 {
                    break;
                }
                j = (j & !(1 << pos)) | (c << pos);
            }
            if amp.norm_sqr() != 0.0 {
                mat[(i, j)] += amp;
            }
        }
    }
}

/// Sum of single-site Paulis and nearest-neighbour Pauli pairs on an open
/// chain of `n` qubits. Sites are 0-indexed; pair terms must couple adjacent
/// sites (k, k+1).
pub fn chain_operator(
    n: usize,
    site_terms: &[(usize, Axis, f64)],
    pair_terms: &[(usize, usize, Axis, Axis, f64)],
) -> Result<Operator> {
    if n == 0 || n > 12 {
        return Err(Error::InvalidArgument(format!(
            "chain length must be in 1..=12, got {n}"
        )));
    }
    for &(s, _, _) in site_terms {
        if s >= n {
            return Err(Error::InvalidArgument(format!(
                "site index {s} out of range for chain length {n}"
            )));
        }
    }
    for &(a, b, _, _, _) in pair_terms {
        if a >= n || b >= n {
            return Err(Error::InvalidArgument(format!(
                "pair ({a}, {b}) out of range for chain length {n}"
            )));
        }
        if b != a + 1 {
            return Err(Error::InvalidArgument(format!(
                "pair ({a}, {b}) is not nearest-neighbour"
            )));
        }
    }
    let dim = 1usize << n;
    let mut mat = Mat::<c64>::zeros(dim, dim);
    for &(s, axis, coeff) in site_terms {
        add_embedded_paulis(&mut mat, n, &[(s, axis)], coeff);
    }
    for &(a, b, ax_a, ax_b, coeff) in pair_terms {
        add_embedded_paulis(&mut mat, n, &[(a, ax_a), (b, ax_b)], coeff);
    }
    Operator::new(mat, vec![2; n])
}

/// Index of the computational basis state with the given qubit labels,
/// site 0 first. Bit 1 (excited, sigma_z = +1) maps to local index 0.
pub fn qubit_basis_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (1 - b as usize))
}

/// Computational basis state |b_1 b_2 ... b_N> from qubit labels.
pub fn qubit_state(bits: &[u8]) -> Result<StateVector> {
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidArgument("qubit labels must be 0 or 1".into()));
    }
    StateVector::basis_state(qubit_basis_index(bits), vec![2; bits.len()])
}

/// Spin coherent state |theta, phi> = exp(i theta (Jx sin phi - Jy cos phi)) |j, j>.
pub fn spin_coherent_state(j: f64, theta: f64, phi: f64) -> Result<StateVector> {
    let alg = spin_algebra(j)?;
    let g = &alg.jx.scale(c64::new(phi.sin(), 0.0)) - &alg.jy.scale(c64::new(phi.cos(), 0.0));
    // e^{+i theta G} = expm_hermitian(-G, theta)
    let u = expm_hermitian(&g.scale(c64::new(-1.0, 0.0)), theta)?;
    let highest = StateVector::basis_state(0, vec![alg.dim_j])?;
    u.apply(&highest)
}

/// Random initial-state families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKind {
    /// Uniform on the sphere (cos theta uniform, phi uniform); dims = [2j+1].
    SpinCoherent,
    /// I.i.d. Haar single-qubit states; dims all 2.
    Product,
    /// Normalized i.i.d. standard complex Gaussian vector over the full space.
    HaarPure,
}

/// Draws a random state from the given family. Same seed, same state, on any
/// platform (ChaCha12 PRNG).
pub fn random_state(kind: RandomKind, dims: &[usize], seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    random_state_with_rng(kind, dims, &mut rng)
}

/// As [`random_state`] but drawing from a caller-owned stream, for sampling
/// many states from one seed.
pub fn random_state_with_rng(
    kind: RandomKind,
    dims: &[usize],
    rng: &mut impl Rng,
) -> Result<StateVector> {
    match kind {
        RandomKind::SpinCoherent => {
            if dims.len() != 1 || dims[0] < 2 {
                return Err(Error::InvalidArgument(
                    "spin_coherent kind needs dims = [2j+1] with one factor".into(),
                ));
            }
            let j = (dims[0] - 1) as f64 / 2.0;
            let cos_theta: f64 = rng.gen_range(-1.0..=1.0);
            let theta = cos_theta.acos();
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            spin_coherent_state(j, theta, phi)
        }
        RandomKind::Product => {
            if dims.iter().any(|&d| d != 2) {
                return Err(Error::InvalidArgument(
                    "product kind needs all-qubit dims".into(),
                ));
            }
            let mut state: Option<StateVector> = None;
            for _ in 0..dims.len() {
                let one = haar_vector(2, rng)?;
                state = Some(match state {
                    None => one,
                    Some(s) => crate::linalg::tensor_states(&s, &one),
                });
            }
            state.ok_or_else(|| Error::InvalidArgument("empty dims".into()))
        }
        RandomKind::HaarPure => {
            let d: usize = dims.iter().product();
            if d < 2 || dims.is_empty() {
                return Err(Error::InvalidArgument("haar_pure needs dim >= 2".into()));
            }
            let v = haar_vector(d, rng)?;
            StateVector::new(v.amps().clone(), dims.to_vec())
        }
    }
}

fn haar_vector(d: usize, rng: &mut impl Rng) -> Result<StateVector> {
    let amps = Col::from_fn(d, |_| {
        c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    StateVector::from_unnormalized(amps, vec![d])
}

/// One symmetry sector of a normal operator: a representative eigenvalue and
/// the orthogonal projector onto its eigenspace.
#[derive(Debug, Clone)]
pub struct SymmetrySector {
    pub eigenvalue: c64,
    pub dim: usize,
    pub projector: Operator,
}

/// Default eigenvalue-clustering tolerance for [`symmetry_projectors`].
pub const CLUSTER_TOL: f64 = 1e-8;

/// Spectral projectors of a Hermitian or unitary symmetry operator, with
/// eigenvalues clustered to absolute tolerance `tol` in the complex plane.
pub fn symmetry_projectors(s: &Operator, tol: f64) -> Result<Vec<SymmetrySector>> {
    let normal_dev = {
        let lhs = s.mat().adjoint() * s.mat();
        let rhs = s.mat() * s.mat().adjoint();
        let mut max = 0.0f64;
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                max = max.max((lhs[(i, j)] - rhs[(i, j)]).norm());
            }
        }
        max
    };
    if normal_dev > 1e-8 {
        return Err(Error::NotNormal(normal_dev));
    }
    // eigenvalues and vectors via the Hermitian or unitary path
    let (vals, vecs): (Vec<c64>, Mat<c64>) = if s.hermiticity_error().0 <= HERM_TOL {
        let eig = HermitianEig::decompose(s)?;
        (
            eig.eigenvalues.iter().map(|&x| c64::new(x, 0.0)).collect(),
            eig.vectors,
        )
    } else if s.unitarity_error() <= UNITARY_TOL {
        let eig = eig_unitary(s)?;
        (
            eig.phases.iter().map(|&p| c64::from_polar(1.0, p)).collect(),
            eig.vectors,
        )
    } else {
        return Err(Error::InvalidArgument(
            "symmetry operator must be Hermitian or unitary".into(),
        ));
    };

    let d = s.dim();
    // greedy clustering in sorted order; eigenvalues arrive sorted by value
    // (Hermitian) or phase (unitary)
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in 0..d {
        match clusters.last_mut() {
            Some(cluster) if (vals[k] - vals[cluster[0]]).norm() <= tol => cluster.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    // unitary spectra wrap at +-pi: merge first and last clusters if adjacent
    // on the circle
    if clusters.len() > 1 {
        let first = &clusters[0];
        let last = clusters.last().unwrap();
        if (vals[first[0]] - vals[last[0]]).norm() <= tol {
            let last = clusters.pop().unwrap();
            clusters[0].extend(last);
        }
    }

    let mut sectors = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        let mut p = Mat::<c64>::zeros(d, d);
        for &k in &cluster {
            for i in 0..d {
                for j in 0..d {
                    p[(i, j)] += vecs[(i, k)] * vecs[(j, k)].conj();
                }
            }
        }
        sectors.push(SymmetrySector {
            eigenvalue: vals[cluster[0]],
            dim: cluster.len(),
            projector: Operator::new(p, s.factor_dims().to_vec())?,
        });
    }
    Ok(sectors)
}
