//! Dense complex linear algebra: Hermitian/unitary eigendecomposition, matrix
//! exponential, tensor products, partial trace.
//!
//! Every generator in this crate is Hermitian, so the matrix exponential goes
//! through one code path: eigendecompose and exponentiate the spectrum. The
//! same decompositions are reused for the random-matrix analyses.

use faer::{c64, Col, Mat, Side};

use crate::{Error, Result};

/// Hermiticity tolerance on max |H - H^dag| entries.
pub const HERM_TOL: f64 = 1e-10;
/// Unitarity tolerance on max |U^dag U - I| entries.
pub const UNITARY_TOL: f64 = 1e-8;

/// Dense complex square matrix with a declared Hilbert-space factorization.
#[derive(Debug, Clone)]
pub struct Operator {
    factor_dims: Vec<usize>,
    mat: Mat<c64>,
}

impl Operator {
    /// Wraps a square matrix with its subsystem factorization.
    pub fn new(mat: Mat<c64>, factor_dims: Vec<usize>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let prod: usize = factor_dims.iter().product();
        if prod != mat.nrows() || factor_dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "factor_dims {:?} do not multiply to dim {}",
                factor_dims,
                mat.nrows()
            )));
        }
        for i in 0..mat.nrows() {
            for j in 0..mat.ncols() {
                let z = mat[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite entry at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { factor_dims, mat })
    }

    /// Single-factor wrapper: factorization is the whole space.
    pub fn from_mat(mat: Mat<c64>) -> Self {
        let d = mat.nrows();
        Self::new(mat, vec![d]).expect("square finite matrix")
    }

    pub fn identity(factor_dims: Vec<usize>) -> Self {
        let d: usize = factor_dims.iter().product();
        Self {
            factor_dims,
            mat: Mat::identity(d, d),
        }
    }

    pub fn zeros(factor_dims: Vec<usize>) -> Self {
        let d: usize = factor_dims.iter().product();
        Self {
            factor_dims,
            mat: Mat::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn mat(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    /// Replaces the declared factorization (dimensions must still match).
    pub fn with_factor_dims(mut self, factor_dims: Vec<usize>) -> Result<Self> {
        let prod: usize = factor_dims.iter().product();
        if prod != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "factor_dims {:?} do not multiply to dim {}",
                factor_dims,
                self.dim()
            )));
        }
        self.factor_dims = factor_dims;
        Ok(self)
    }

    pub fn dagger(&self) -> Self {
        Self {
            factor_dims: self.factor_dims.clone(),
            mat: self.mat.adjoint().to_owned(),
        }
    }

    pub fn scale(&self, z: c64) -> Self {
        Self {
            factor_dims: self.factor_dims.clone(),
            mat: faer::Scale(z) * &self.mat,
        }
    }

    /// Max |A - A^dag| entry with its location.
    pub fn hermiticity_error(&self) -> (f64, usize, usize) {
        let mut max = 0.0;
        let (mut row, mut col) = (0, 0);
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let dev = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                if dev > max {
                    max = dev;
                    row = i;
                    col = j;
                }
            }
        }
        (max, row, col)
    }

    pub fn require_hermitian(&self, tol: f64) -> Result<()> {
        let (max_dev, row, col) = self.hermiticity_error();
        if max_dev > tol {
            Err(Error::NotHermitian { max_dev, row, col })
        } else {
            Ok(())
        }
    }

    /// Max |U^dag U - I| entry.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.mat.adjoint() * &self.mat;
        let mut max = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let target = if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) };
                max = max.max((g[(i, j)] - target).norm());
            }
        }
        max
    }

    pub fn require_unitary(&self, tol: f64) -> Result<()> {
        let err = self.unitarity_error();
        if err > tol {
            Err(Error::NotUnitary(err))
        } else {
            Ok(())
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                max = max.max(self.mat[(i, j)].norm());
            }
        }
        max
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    /// A*B - B*A.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "commutator of dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self {
            factor_dims: self.factor_dims.clone(),
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if self.dim() != psi.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} applied to state dim {}",
                self.dim(),
                psi.dim()
            )));
        }
        Ok(StateVector {
            factor_dims: psi.factor_dims.clone(),
            amps: &self.mat * &psi.amps,
        })
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dims must match");
        Operator {
            factor_dims: self.factor_dims.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dims must match");
        Operator {
            factor_dims: self.factor_dims.clone(),
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dims must match");
        Operator {
            factor_dims: self.factor_dims.clone(),
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// Normalized complex vector over a factorized Hilbert space.
#[derive(Debug, Clone)]
pub struct StateVector {
    factor_dims: Vec<usize>,
    amps: Col<c64>,
}

impl StateVector {
    /// Norm tolerance for constructed states.
    pub const NORM_TOL: f64 = 1e-10;

    pub fn new(amps: Col<c64>, factor_dims: Vec<usize>) -> Result<Self> {
        let prod: usize = factor_dims.iter().product();
        if prod != amps.nrows() || factor_dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "factor_dims {:?} do not multiply to dim {}",
                factor_dims,
                amps.nrows()
            )));
        }
        let s = Self { factor_dims, amps };
        let n = s.norm();
        if (n - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state norm {n} deviates from 1 beyond {:.0e}",
                Self::NORM_TOL
            )));
        }
        Ok(s)
    }

    /// Normalizes the amplitudes before wrapping.
    pub fn from_unnormalized(amps: Col<c64>, factor_dims: Vec<usize>) -> Result<Self> {
        let n: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        Self::new(faer::Scale(c64::new(1.0 / n, 0.0)) * &amps, factor_dims)
    }

    /// Computational basis state |index> in the given factorized space.
    pub fn basis_state(index: usize, factor_dims: Vec<usize>) -> Result<Self> {
        let d: usize = factor_dims.iter().product();
        if index >= d {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dim {d}"
            )));
        }
        let mut amps = Col::<c64>::zeros(d);
        amps[index] = c64::new(1.0, 0.0);
        Self::new(amps, factor_dims)
    }

    pub fn dim(&self) -> usize {
        self.amps.nrows()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn amps(&self) -> &Col<c64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <self|other>.
    pub fn inner(&self, other: &Self) -> c64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// <self|O|self>, asserting the imaginary residue stays below 1e-10 for
    /// Hermitian observables.
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        let o_psi = op.apply(self)?;
        let val = self.inner(&o_psi);
        if val.im.abs() > 1e-10 * (1.0 + val.re.abs()) {
            return Err(Error::InvalidArgument(format!(
                "expectation has imaginary residue {:.3e}",
                val.im
            )));
        }
        Ok(val.re)
    }

    pub fn to_density(&self) -> DensityOperator {
        let d = self.dim();
        let mat = Mat::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj());
        DensityOperator {
            factor_dims: self.factor_dims.clone(),
            mat,
        }
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    factor_dims: Vec<usize>,
    mat: Mat<c64>,
}

impl DensityOperator {
    pub const TOL: f64 = 1e-10;

    pub fn new(mat: Mat<c64>, factor_dims: Vec<usize>) -> Result<Self> {
        let op = Operator::new(mat, factor_dims)?;
        op.require_hermitian(Self::TOL)?;
        let tr = op.trace();
        if (tr.re - 1.0).abs() > Self::TOL || tr.im.abs() > Self::TOL {
            return Err(Error::InvalidArgument(format!(
                "density trace {tr} deviates from 1"
            )));
        }
        let rho = Self {
            factor_dims: op.factor_dims.clone(),
            mat: op.mat,
        };
        if rho.eigenvalues()?.iter().any(|&p| p < -Self::TOL) {
            return Err(Error::InvalidArgument(
                "density operator has a negative eigenvalue beyond tolerance".into(),
            ));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn mat(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = HermitianEig::decompose_mat(&self.mat)?;
        Ok(eig.eigenvalues)
    }
}

/// Eigendecomposition H = V diag(lambda) V^dag of a Hermitian matrix.
///
/// Reused both for matrix exponentials and as the reference-basis source in
/// the random-matrix analyses. Eigenvalues are sorted ascending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues` order.
    pub vectors: Mat<c64>,
}

impl HermitianEig {
    pub fn decompose(h: &Operator) -> Result<Self> {
        h.require_hermitian(HERM_TOL)?;
        Self::decompose_mat(h.mat())
    }

    fn decompose_mat(mat: &Mat<c64>) -> Result<Self> {
        let eig = mat
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
        let d = mat.nrows();
        let svec = eig.S().column_vector();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| svec[a].re.total_cmp(&svec[b].re));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| svec[k].re).collect();
        let u = eig.U();
        let vectors = Mat::from_fn(d, d, |i, j| u[(i, order[j])]);
        Ok(Self {
            eigenvalues,
            vectors,
        })
    }

    /// e^{-i H t} from the stored decomposition.
    pub fn propagator(&self, t: f64, factor_dims: &[usize]) -> Operator {
        let d = self.eigenvalues.len();
        let phases: Vec<c64> = self
            .eigenvalues
            .iter()
            .map(|&lam| c64::from_polar(1.0, -lam * t))
            .collect();
        // V diag(e^{-i lambda t}) V^dag
        let mut scaled = self.vectors.clone();
        for j in 0..d {
            for i in 0..d {
                scaled[(i, j)] *= phases[j];
            }
        }
        let mat = scaled * self.vectors.adjoint();
        Operator {
            factor_dims: factor_dims.to_vec(),
            mat,
        }
    }

    /// Applies e^{-i H t} to a state without forming the matrix.
    pub fn propagate_state(&self, t: f64, psi: &StateVector) -> StateVector {
        let coeffs = self.vectors.adjoint() * psi.amps();
        let d = self.eigenvalues.len();
        let mut rotated = coeffs;
        for k in 0..d {
            rotated[k] *= c64::from_polar(1.0, -self.eigenvalues[k] * t);
        }
        StateVector {
            factor_dims: psi.factor_dims().to_vec(),
            amps: &self.vectors * rotated,
        }
    }
}

/// e^{-i H t} for Hermitian H, via eigendecomposition.
pub fn expm_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    let eig = HermitianEig::decompose(h)?;
    Ok(eig.propagator(t, h.factor_dims()))
}

/// Eigendecomposition U = V diag(e^{i phi}) V^dag of a unitary matrix.
///
/// Phases are principal values in (-pi, pi], sorted ascending.
#[derive(Debug, Clone)]
pub struct UnitaryEig {
    pub phases: Vec<f64>,
    pub vectors: Mat<c64>,
}

/// Reconstruction residual tolerance for unitary eigendecomposition.
const UNITARY_EIG_RESIDUAL: f64 = 1e-8;

/// Diagonalizes a unitary by diagonalizing the Hermitian combination
/// C = (e^{-i gamma} U + e^{i gamma} U^dag)/2, which shares eigenvectors with
/// U whenever its own spectrum resolves the phases. A failed reconstruction
/// (phase pairs colliding at cos(phi - gamma)) retries with a different gamma.
pub fn eig_unitary(u: &Operator) -> Result<UnitaryEig> {
    u.require_unitary(UNITARY_TOL)?;
    let d = u.dim();
    let mut last_residual = f64::INFINITY;
    for &gamma in &[0.0, 0.7521113, 2.1415331] {
        let rot = c64::from_polar(1.0, -gamma);
        let half = faer::Scale(c64::new(0.5, 0.0));
        let c_mat = half * (faer::Scale(rot) * u.mat() + faer::Scale(rot.conj()) * u.mat().adjoint().to_owned());
        let herm = HermitianEig::decompose_mat(&c_mat)?;
        let uv = u.mat() * &herm.vectors;
        let mut phases = Vec::with_capacity(d);
        for j in 0..d {
            let lam: c64 = (0..d).map(|i| herm.vectors[(i, j)].conj() * uv[(i, j)]).sum();
            let mut phi = lam.im.atan2(lam.re);
            if phi <= -std::f64::consts::PI {
                phi = std::f64::consts::PI;
            }
            phases.push(phi);
        }
        // residual max |U v - e^{i phi} v|
        let mut residual = 0.0f64;
        for j in 0..d {
            let lam = c64::from_polar(1.0, phases[j]);
            for i in 0..d {
                residual = residual.max((uv[(i, j)] - herm.vectors[(i, j)] * lam).norm());
            }
        }
        if residual < UNITARY_EIG_RESIDUAL {
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
            let vectors = Mat::from_fn(d, d, |i, j| herm.vectors[(i, order[j])]);
            let phases = order.iter().map(|&k| phases[k]).collect();
            return Ok(UnitaryEig { phases, vectors });
        }
        last_residual = last_residual.min(residual);
    }
    Err(Error::EigenSolver(format!(
        "unitary eigendecomposition residual {last_residual:.3e} after retries"
    )))
}

/// Kronecker product of operators; factor dimensions concatenate.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let mat = Mat::from_fn(da * db, da * db, |i, j| {
        a.mat[(i / db, j / db)] * b.mat[(i % db, j % db)]
    });
    let mut factor_dims = a.factor_dims.clone();
    factor_dims.extend_from_slice(&b.factor_dims);
    Operator { factor_dims, mat }
}

/// Kronecker product of state vectors; factor dimensions concatenate.
pub fn tensor_states(a: &StateVector, b: &StateVector) -> StateVector {
    let (da, db) = (a.dim(), b.dim());
    let amps = Col::from_fn(da * db, |i| a.amps[i / db] * b.amps[i % db]);
    let mut factor_dims = a.factor_dims.clone();
    factor_dims.extend_from_slice(&b.factor_dims);
    StateVector { factor_dims, amps }
}

/// Traces out every factor not listed in `keep` (ascending factor indices).
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let dims = rho.factor_dims();
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep set must be nonempty".into()));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "keep {:?} out of range for {} factors",
            keep,
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let trace_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = keep_dims.iter().product();
    let dt: usize = trace_dims.iter().product();

    // full index from (kept multi-index, traced multi-index)
    let full_index = |ki: usize, ti: usize| -> usize {
        let mut kd = Vec::with_capacity(keep.len());
        let mut rest = ki;
        for &d in keep_dims.iter().rev() {
            kd.push(rest % d);
            rest /= d;
        }
        kd.reverse();
        let mut td = Vec::with_capacity(traced.len());
        let mut rest = ti;
        for &d in trace_dims.iter().rev() {
            td.push(rest % d);
            rest /= d;
        }
        td.reverse();
        let mut idx = 0;
        let (mut pk, mut pt) = (0, 0);
        for (f, &d) in dims.iter().enumerate() {
            let digit = if keep.contains(&f) {
                let v = kd[pk];
                pk += 1;
                v
            } else {
                let v = td[pt];
                pt += 1;
                v
            };
            idx = idx * d + digit;
        }
        idx
    };

    let mut out = Mat::<c64>::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = c64::new(0.0, 0.0);
            for t in 0..dt {
                acc += rho.mat[(full_index(a, t), full_index(b, t))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(DensityOperator {
        factor_dims: keep_dims,
        mat: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_hermitian(d: usize, seed: u64) -> Operator {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let a = Mat::from_fn(d, d, |_, _| {
            c64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        Operator::from_mat(faer::Scale(c64::new(0.5, 0.0)) * (&a + a.adjoint().to_owned()))
    }

    /// Independent Taylor-series expm with scaling and squaring.
    fn expm_taylor(h: &Mat<c64>, t: f64) -> Mat<c64> {
        let d = h.nrows();
        let mut norm = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                norm = norm.max(h[(i, j)].norm());
            }
        }
        let scale = ((norm * t.abs() * d as f64).log2().ceil().max(0.0)) as u32 + 4;
        let m = faer::Scale(c64::new(0.0, -t / f64::powi(2.0, scale as i32))) * h;
        let mut term = Mat::<c64>::identity(d, d);
        let mut sum = Mat::<c64>::identity(d, d);
        for k in 1..30 {
            term = faer::Scale(c64::new(1.0 / k as f64, 0.0)) * (&term * &m);
            sum += &term;
        }
        for _ in 0..scale {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn expm_zero_generator_is_identity() {
        let h = Operator::zeros(vec![3]);
        let u = expm_hermitian(&h, 1.7).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(u.mat()[(i, j)].re, target, epsilon = 1e-14);
                assert_abs_diff_eq!(u.mat()[(i, j)].im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn expm_sigma_z_half_pi() {
        let sz = Operator::from_mat(Mat::from_fn(2, 2, |i, j| {
            if i == j {
                c64::new(if i == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        }));
        let u = expm_hermitian(&sz, std::f64::consts::FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(u.mat()[(0, 0)].im, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.mat()[(1, 1)].im, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        let h = random_hermitian(4, 7);
        let u = expm_hermitian(&h, 0.37).unwrap();
        let oracle = expm_taylor(h.mat(), 0.37);
        for i in 0..4 {
            for j in 0..4 {
                assert!((u.mat()[(i, j)] - oracle[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn expm_output_is_unitary_and_composes() {
        let h = random_hermitian(6, 11);
        let u1 = expm_hermitian(&h, 0.4).unwrap();
        assert!(u1.unitarity_error() < 1e-10);
        let u2 = expm_hermitian(&h, 0.9).unwrap();
        let u12 = expm_hermitian(&h, 1.3).unwrap();
        let prod = &u1 * &u2;
        for i in 0..6 {
            for j in 0..6 {
                assert!((prod.mat()[(i, j)] - u12.mat()[(i, j)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 1)] = c64::new(1.0, 0.0);
        let op = Operator::from_mat(m);
        match expm_hermitian(&op, 1.0) {
            Err(Error::NotHermitian { max_dev, .. }) => assert!(max_dev > 0.5),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn eig_unitary_identity_and_diagonal() {
        let id = Operator::identity(vec![3]);
        let eig = eig_unitary(&id).unwrap();
        for p in &eig.phases {
            assert_abs_diff_eq!(*p, 0.0, epsilon = 1e-12);
        }
        let u = Operator::from_mat(Mat::from_fn(2, 2, |i, j| {
            if i != j {
                c64::new(0.0, 0.0)
            } else if i == 0 {
                c64::from_polar(1.0, 0.3)
            } else {
                c64::from_polar(1.0, -1.1)
            }
        }));
        let eig = eig_unitary(&u).unwrap();
        assert_abs_diff_eq!(eig.phases[0], -1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.phases[1], 0.3, epsilon = 1e-12);
        // vectors are the computational basis (up to phase)
        assert!(eig.vectors[(0, 1)].norm() > 0.999);
        assert!(eig.vectors[(1, 0)].norm() > 0.999);
    }

    #[test]
    fn eig_unitary_reconstructs_random_unitary() {
        let h = random_hermitian(12, 3);
        let u = expm_hermitian(&h, 1.3).unwrap();
        let eig = eig_unitary(&u).unwrap();
        // phases ascending
        for w in eig.phases.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // reconstruction
        let d = u.dim();
        let mut rec = eig.vectors.clone();
        for j in 0..d {
            let lam = c64::from_polar(1.0, eig.phases[j]);
            for i in 0..d {
                rec[(i, j)] *= lam;
            }
        }
        let rec = rec * eig.vectors.adjoint();
        for i in 0..d {
            for j in 0..d {
                assert!((rec[(i, j)] - u.mat()[(i, j)]).norm() < 1e-8);
            }
        }
        // orthonormality and per-vector weight normalization
        let g = eig.vectors.adjoint() * &eig.vectors;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - c64::new(target, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn eig_unitary_rejects_non_unitary() {
        let m = Mat::from_fn(2, 2, |i, j| c64::new((i + j) as f64, 0.0));
        match eig_unitary(&Operator::from_mat(m)) {
            Err(Error::NotUnitary(e)) => assert!(e > 0.1),
            other => panic!("expected NotUnitary, got {other:?}"),
        }
    }

    #[test]
    fn tensor_identities() {
        let t = tensor(&Operator::identity(vec![2]), &Operator::identity(vec![3]));
        assert_eq!(t.factor_dims(), &[2, 3]);
        for i in 0..6 {
            assert_abs_diff_eq!(t.mat()[(i, i)].re, 1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(t.trace().re, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn tensor_action_factorizes() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut rand_op = |d: usize| {
            Operator::from_mat(Mat::from_fn(d, d, |_, _| {
                c64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            }))
        };
        let a = rand_op(2);
        let b = rand_op(2);
        let mut rng2 = ChaCha12Rng::seed_from_u64(6);
        let mut rand_state = || {
            StateVector::from_unnormalized(
                Col::from_fn(2, |_| c64::new(rng2.gen::<f64>() - 0.5, rng2.gen::<f64>() - 0.5)),
                vec![2],
            )
            .unwrap()
        };
        let x = rand_state();
        let y = rand_state();
        let lhs = tensor(&a, &b).apply(&tensor_states(&x, &y)).unwrap();
        let rhs = tensor_states(&a.apply(&x).unwrap(), &b.apply(&y).unwrap());
        for i in 0..4 {
            assert!((lhs.amps()[i] - rhs.amps()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut rand_state = |d: usize| {
            StateVector::from_unnormalized(
                Col::from_fn(d, |_| c64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)),
                vec![d],
            )
            .unwrap()
        };
        let s1 = rand_state(2);
        let s2 = rand_state(3);
        let rho = tensor_states(&s1, &s2).to_density();
        let r1 = partial_trace(&rho, &[0]).unwrap();
        let expect = s1.to_density();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r1.mat()[(i, j)] - expect.mat()[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_bell_state() {
        let mut amps = Col::<c64>::zeros(4);
        amps[0] = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[3] = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rho = StateVector::new(amps, vec![2, 2]).unwrap().to_density();
        let marginal = partial_trace(&rho, &[0]).unwrap();
        assert_abs_diff_eq!(marginal.mat()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(marginal.mat()[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert!(marginal.mat()[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace_tripartite() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let psi = StateVector::from_unnormalized(
            Col::from_fn(2 * 3 * 2, |_| {
                c64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            }),
            vec![2, 3, 2],
        )
        .unwrap();
        let rho = psi.to_density();
        let r = partial_trace(&rho, &[1]).unwrap();
        assert_abs_diff_eq!(r.trace().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.trace().im, 0.0, epsilon = 1e-12);
        let (herm, ..) = Operator::new(r.mat().clone(), vec![3]).unwrap().hermiticity_error();
        assert!(herm < 1e-12);
        // tracing every factor leaves the scalar Tr(rho)
        let all = partial_trace(&rho, &[0, 1, 2]).unwrap();
        assert_eq!(all.dim(), 12);
        let none_kept_equiv = {
            // keep one factor, trace it from the result
            let r0 = partial_trace(&rho, &[0]).unwrap();
            r0.trace()
        };
        assert_abs_diff_eq!(none_kept_equiv.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(all.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_keep() {
        let psi = StateVector::basis_state(0, vec![2, 2]).unwrap();
        let rho = psi.to_density();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[5]).is_err());
    }
}
