//! Random-matrix statics: eigenvector-component statistics against the
//! circular-ensemble densities, the reduced chi-squared goodness-of-fit
//! statistic, and level-spacing statistics with local-mean unfolding.

use faer::{c64, Mat};
use serde::Serialize;

use crate::linalg::{eig_unitary, HermitianEig, Operator};
use crate::models::ModelInstance;
use crate::operators::SymmetrySector;
use crate::{Error, Result};

/// Circular random-matrix ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Ensemble {
    Coe,
    Cue,
    Cse,
}

impl Ensemble {
    pub fn label(self) -> &'static str {
        match self {
            Ensemble::Coe => "COE",
            Ensemble::Cue => "CUE",
            Ensemble::Cse => "CSE",
        }
    }
}

/// A reduced eigenvector-component density P~(eta) for one ensemble at an
/// effective (fit) dimension. The fit dimension may be fractional (it is
/// halved under degeneracy pairing).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnsembleDensity {
    pub ensemble: Ensemble,
    pub d_fit: f64,
}

impl EnsembleDensity {
    pub fn new(ensemble: Ensemble, d_fit: f64) -> Result<Self> {
        let min = match ensemble {
            Ensemble::Coe | Ensemble::Cse => 3.0,
            Ensemble::Cue => 2.0,
        };
        if d_fit < min {
            return Err(Error::InvalidArgument(format!(
                "fit dimension {d_fit} below the {} minimum {min}",
                ensemble.label()
            )));
        }
        Ok(Self { ensemble, d_fit })
    }

    /// P~(eta) for eta in (0, 1). The CSE form is renormalized to unit area
    /// (the textbook form integrates to (D-1)(D-2)/(D(D+1)) at finite D).
    pub fn density(&self, eta: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&eta) || eta == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "eta = {eta} outside (0, 1)"
            )));
        }
        let d = self.d_fit;
        Ok(match self.ensemble {
            Ensemble::Coe => {
                let pref = (libm::lgamma(d / 2.0) - libm::lgamma((d - 1.0) / 2.0)).exp();
                pref * (1.0 - eta).powf((d - 3.0) / 2.0) / (std::f64::consts::PI * eta).sqrt()
            }
            Ensemble::Cue => (d - 1.0) * (1.0 - eta).powf(d - 2.0),
            Ensemble::Cse => d * (d + 1.0) * eta * (1.0 - eta).powf(d - 1.0),
        })
    }

    /// Mean of the density over a histogram bin [lo, hi). The COE density
    /// diverges like 1/sqrt(eta) at the origin, so a bin-center evaluation
    /// understates the first bin's target by up to sqrt(2); the bin mean is
    /// the quantity an area-normalized histogram actually estimates. The
    /// integrable singularity is removed by the substitution eta = u^2.
    pub fn density_mean(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "bad bin bounds [{lo}, {hi})"
            )));
        }
        if lo >= 1.0 {
            return Ok(0.0);
        }
        let hi_c = hi.min(1.0);
        let d = self.d_fit;
        // Simpson on a smooth integrand; the interval count scales with the
        // bin width measured against the density's decay scale, so wide bins
        // (up to the whole support) stay accurate
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, scale: f64| -> f64 {
            let n = (((b - a) / scale * 16.0).ceil() as usize).clamp(16, 50_000);
            let n = n + n % 2;
            let h = (b - a) / n as f64;
            let mut acc = f(a) + f(b);
            for i in 1..n {
                acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        let integral = match self.ensemble {
            Ensemble::Coe => {
                let pref = (libm::lgamma(d / 2.0) - libm::lgamma((d - 1.0) / 2.0)).exp()
                    / std::f64::consts::PI.sqrt();
                let g = |u: f64| 2.0 * pref * (1.0 - u * u).powf((d - 3.0) / 2.0);
                simpson(&g, lo.sqrt(), hi_c.sqrt(), 1.0 / d.sqrt())
            }
            Ensemble::Cue => {
                let g = |x: f64| (d - 1.0) * (1.0 - x).powf(d - 2.0);
                simpson(&g, lo, hi_c, 1.0 / d)
            }
            Ensemble::Cse => {
                let g = |x: f64| d * (d + 1.0) * x * (1.0 - x).powf(d - 1.0);
                simpson(&g, lo, hi_c, 1.0 / d)
            }
        };
        Ok(integral / (hi - lo))
    }
}

/// The CSE component density as printed in the literature, which only
/// normalizes asymptotically; kept for reference and oracle tests.
pub fn cse_printed_density(d: f64, eta: f64) -> f64 {
    (d - 1.0) * (d - 2.0) * eta * (1.0 - eta).powf(d - 1.0)
}

/// Handling of spectral degeneracies when collecting eigenvector components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DegeneracyMode {
    /// One sample per (eigenvector, basis state).
    None,
    /// Pair eigenvectors whose eigenphases match within `tol` (sorted order)
    /// and sum the paired component populations. Errors when a phase has no
    /// partner.
    PairDegenerate { tol: f64 },
    /// Pair consecutive eigenvectors by phase regardless of spacing (valid
    /// whenever any two levels may be merged); an odd leftover is dropped.
    PairConsecutive,
}

impl DegeneracyMode {
    fn label(&self) -> String {
        match self {
            DegeneracyMode::None => "none".into(),
            DegeneracyMode::PairDegenerate { tol } => format!("pair_degenerate(tol={tol:e})"),
            DegeneracyMode::PairConsecutive => "pair_consecutive".into(),
        }
    }
}

/// Component populations eta = |<k|phi_i>|^2 of the eigenvectors of `u` in a
/// reference basis. `ref_basis` columns must be orthonormal; `None` uses the
/// computational basis (which is the J_z / Fock product basis throughout this
/// crate).
pub fn eigenvector_components(
    u: &Operator,
    ref_basis: Option<&Mat<c64>>,
    mode: DegeneracyMode,
) -> Result<Vec<f64>> {
    let eig = eig_unitary(u)?;
    let d = u.dim();
    let coeffs: Mat<c64> = match ref_basis {
        None => eig.vectors.clone(),
        Some(b) => {
            if b.nrows() != d {
                return Err(Error::DimensionMismatch(format!(
                    "reference basis rows {} vs unitary dim {d}",
                    b.nrows()
                )));
            }
            b.adjoint() * &eig.vectors
        }
    };
    let k_count = coeffs.nrows();
    let column_eta = |i: usize| -> Vec<f64> {
        (0..k_count).map(|k| coeffs[(k, i)].norm_sqr()).collect()
    };
    match mode {
        DegeneracyMode::None => {
            let mut out = Vec::with_capacity(d * k_count);
            for i in 0..d {
                out.extend(column_eta(i));
            }
            Ok(out)
        }
        DegeneracyMode::PairDegenerate { tol } => {
            let mut out = Vec::with_capacity(d / 2 * k_count);
            let mut i = 0;
            while i < d {
                if i + 1 >= d || (eig.phases[i + 1] - eig.phases[i]).abs() > tol {
                    return Err(Error::UnpairedEigenphase(eig.phases[i]));
                }
                let (a, b) = (column_eta(i), column_eta(i + 1));
                out.extend(a.iter().zip(&b).map(|(x, y)| x + y));
                i += 2;
            }
            Ok(out)
        }
        DegeneracyMode::PairConsecutive => {
            let pairs = d / 2;
            let mut out = Vec::with_capacity(pairs * k_count);
            for p in 0..pairs {
                let (a, b) = (column_eta(2 * p), column_eta(2 * p + 1));
                out.extend(a.iter().zip(&b).map(|(x, y)| x + y));
            }
            Ok(out)
        }
    }
}

/// Component populations restricted to symmetry sectors, in the
/// computational basis. When the step unitary conserves a symmetry whose
/// eigenspaces are spanned by computational basis states, each eigenvector
/// has exact zeros outside its own sector; the meaningful statistics are the
/// within-sector components, fit at the sector dimension. Each eigenvector
/// is assigned to the sector holding most of its weight, and its components
/// on that sector's basis states become the samples.
pub fn sector_components(u: &Operator, sectors: &[SymmetrySector]) -> Result<Vec<f64>> {
    if sectors.is_empty() {
        return Err(Error::InvalidArgument("no symmetry sectors given".into()));
    }
    let d = u.dim();
    // basis membership from the projector diagonals
    let mut membership: Vec<Vec<usize>> = Vec::with_capacity(sectors.len());
    let mut covered = 0usize;
    for sector in sectors {
        let mut idx = Vec::new();
        for k in 0..d {
            let p = sector.projector.mat()[(k, k)].re;
            if (p - 1.0).abs() < 1e-8 {
                idx.push(k);
            } else if p.abs() > 1e-8 {
                return Err(Error::InvalidArgument(
                    "symmetry sectors are not spanned by computational basis states".into(),
                ));
            }
        }
        covered += idx.len();
        membership.push(idx);
    }
    if covered != d {
        return Err(Error::InvalidArgument(format!(
            "sector basis states cover {covered} of {d} dimensions"
        )));
    }
    // the unitary must be block-diagonal over the sectors; diagonalizing each
    // block separately keeps eigenvectors of (near-)degenerate cross-sector
    // eigenphases from being mixed by the solver
    let mut sector_of = vec![0usize; d];
    for (s, idx) in membership.iter().enumerate() {
        for &k in idx {
            sector_of[k] = s;
        }
    }
    let mut off_block = 0.0f64;
    for r in 0..d {
        for c in 0..d {
            if sector_of[r] != sector_of[c] {
                off_block = off_block.max(u.mat()[(r, c)].norm());
            }
        }
    }
    if off_block > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "unitary is not block-diagonal over the given sectors (off-block max {off_block:.2e})"
        )));
    }
    let mut out = Vec::new();
    for idx in &membership {
        let b = idx.len();
        let block = Operator::from_mat(Mat::from_fn(b, b, |r, c| u.mat()[(idx[r], idx[c])]));
        let eig = eig_unitary(&block)?;
        for i in 0..b {
            out.extend((0..b).map(|k| eig.vectors[(k, i)].norm_sqr()));
        }
    }
    Ok(out)
}

/// As [`sector_components`] for symmetries whose eigenspaces are not spanned
/// by computational basis states (a kicked top's pi-rotation parity, say).
/// Each sector is rotated into an orthonormal basis built from its
/// projector's spectral decomposition; the unitary's block in that basis is
/// diagonalized and the within-block component populations are the samples.
pub fn projected_sector_components(u: &Operator, sectors: &[SymmetrySector]) -> Result<Vec<f64>> {
    if sectors.is_empty() {
        return Err(Error::InvalidArgument("no symmetry sectors given".into()));
    }
    let d = u.dim();
    let total: usize = sectors.iter().map(|s| s.dim).sum();
    if total != d {
        return Err(Error::DimensionMismatch(format!(
            "sector dims sum to {total}, unitary dim {d}"
        )));
    }
    let mut out = Vec::new();
    for sector in sectors {
        // orthonormalize the projected computational basis {P|k>} by
        // modified Gram-Schmidt; unlike the projector's (degenerate, hence
        // solver-arbitrary) eigenbasis, this basis is anchored to the
        // computational one and stays real for a real projector, so it does
        // not scramble the component statistics
        let mut basis: Vec<faer::Col<c64>> = Vec::with_capacity(sector.dim);
        for k in 0..d {
            if basis.len() == sector.dim {
                break;
            }
            let mut col = faer::Col::<c64>::from_fn(d, |r| sector.projector.mat()[(r, k)]);
            for b in &basis {
                let ip: c64 = (0..d).map(|r| b[r].conj() * col[r]).sum();
                for r in 0..d {
                    col[r] -= ip * b[r];
                }
            }
            let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for r in 0..d {
                    col[r] *= c64::new(1.0 / norm, 0.0);
                }
                basis.push(col);
            }
        }
        if basis.len() != sector.dim {
            return Err(Error::InvalidArgument(format!(
                "projector rank {} disagrees with sector dim {}",
                basis.len(),
                sector.dim
            )));
        }
        let v = Mat::from_fn(d, sector.dim, |r, c| basis[c][r]);
        let block = Operator::from_mat(v.adjoint() * u.mat() * &v);
        // a unitary block certifies [U, P] = 0 on this sector
        let udev = block.unitarity_error();
        if udev > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "unitary does not conserve the given symmetry (block unitarity defect {udev:.2e})"
            )));
        }
        let b = sector.dim;
        let beig = eig_unitary(&block)?;
        for i in 0..b {
            out.extend((0..b).map(|k| beig.vectors[(k, i)].norm_sqr()));
        }
    }
    Ok(out)
}

/// The RMT reference basis of a model: the eigenbasis of its free
/// (uncoupled) Hamiltonian. Returns `None` when the free Hamiltonian is
/// diagonal, in which case the computational product basis is the canonical
/// eigenbasis (deterministic under degeneracies). A non-diagonal free
/// Hamiltonian must have a non-degenerate spectrum.
pub fn free_reference_basis(model: &ModelInstance) -> Result<Option<Mat<c64>>> {
    let h = &model.free_hamiltonian;
    let d = h.dim();
    let mut off = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                off = off.max(h.mat()[(i, j)].norm());
            }
        }
    }
    if off < 1e-12 {
        return Ok(None);
    }
    let eig = HermitianEig::decompose(h)?;
    for w in eig.eigenvalues.windows(2) {
        if (w[1] - w[0]).abs() < 1e-10 {
            return Err(Error::InvalidArgument(
                "non-diagonal free Hamiltonian has a degenerate spectrum; reference basis would be solver-dependent".into(),
            ));
        }
    }
    Ok(Some(eig.vectors))
}

/// Default bin count: ceil(sqrt(sample count)), clamped to [35, 1000]. The
/// lower clamp keeps the statistic resolving for very small samples, where a
/// sqrt-rule histogram would be too coarse to register disagreement with the
/// target density.
pub fn default_bin_count(sample_count: usize) -> usize {
    ((sample_count as f64).sqrt().ceil() as usize).clamp(35, 1000)
}

/// Area-normalized histogram over [0, max_sample] with equal-width bins.
pub fn histogram_density(samples: &[f64], n_bins: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "histogram needs a positive maximum sample, got {max}"
        )));
    }
    let width = max / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &s in samples {
        if !(0.0..=max).contains(&s) {
            return Err(Error::InvalidArgument(format!(
                "sample {s} outside [0, {max}]"
            )));
        }
        let idx = ((s / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let m = samples.len() as f64;
    let centers = (0..n_bins)
        .map(|i| (i as f64 + 0.5) * width)
        .collect::<Vec<_>>();
    let densities = counts
        .iter()
        .map(|&c| c as f64 / (m * width))
        .collect::<Vec<_>>();
    Ok((centers, densities, width))
}

/// Interpretation of the histogram content entering the chi-squared sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinContentMode {
    /// Compare area-normalized bin densities to the target density (the
    /// reading that reproduces the published statistic values). Default.
    Density,
    /// Pearson form: compare raw bin counts to expected counts
    /// M * width * P~(x_i), whose value sits near 1 for true samples.
    Count,
}

/// Settings for [`chi_squared_rmt`], all recorded in the report.
#[derive(Debug, Clone, Serialize)]
pub struct ChiSquaredSettings {
    pub ensembles: Vec<EnsembleDensity>,
    /// None picks [`default_bin_count`].
    pub n_bins: Option<usize>,
    pub mode: BinContentMode,
    /// Bins whose target density falls below this fraction of the target's
    /// peak are excluded from the sum. The default is 0 (no exclusion):
    /// occupied far-tail bins with tiny target density are precisely what
    /// separates regular spectra and stable islands from the random-matrix
    /// prediction, while empty tail bins only contribute their (negligible)
    /// target density.
    pub exclusion_floor_ratio: f64,
    /// Occupied bins holding fewer than this many samples are excluded when
    /// both neighbouring bins are empty, provided all such bins together
    /// hold at most [`Self::max_outlier_fraction`] of the samples. An
    /// isolated stray sample deep in the tail (a localized edge-of-spectrum
    /// eigenvector, say) would otherwise dominate the statistic, while a
    /// contiguous fat tail — the signature of genuinely non-random
    /// eigenvectors — is kept even where its bins hold few samples.
    pub min_bin_count: usize,
    /// Outlier removal is an all-or-nothing large-sample correction: if the
    /// isolated understaffed bins hold more than this fraction of the
    /// samples they are not outliers but structure, and every bin is kept.
    pub max_outlier_fraction: f64,
}

impl ChiSquaredSettings {
    pub fn new(ensembles: Vec<EnsembleDensity>) -> Self {
        Self {
            ensembles,
            n_bins: None,
            mode: BinContentMode::Density,
            exclusion_floor_ratio: 0.0,
            min_bin_count: 2,
            max_outlier_fraction: 1e-4,
        }
    }
}

/// One ensemble's goodness-of-fit result.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleFit {
    pub ensemble: Ensemble,
    pub d_fit: f64,
    pub chi_squared: f64,
    pub excluded_bins: usize,
}

/// Histogram, per-ensemble reduced chi-squared values, and the minimum.
#[derive(Debug, Clone, Serialize)]
pub struct StatReport {
    pub bin_centers: Vec<f64>,
    pub bin_densities: Vec<f64>,
    pub bin_width: f64,
    pub sample_count: usize,
    pub n_bins: usize,
    pub mode: BinContentMode,
    pub exclusion_floor_ratio: f64,
    pub degeneracy_mode: String,
    pub fits: Vec<EnsembleFit>,
    pub minimum: f64,
    pub best_ensemble: Ensemble,
}

impl StatReport {
    pub fn chi_squared(&self, ensemble: Ensemble) -> Option<f64> {
        self.fits
            .iter()
            .find(|f| f.ensemble == ensemble)
            .map(|f| f.chi_squared)
    }
}

/// Reduced chi-squared of the sample histogram against each requested
/// ensemble density, and the minimum over ensembles.
pub fn chi_squared_rmt(
    samples: &[f64],
    settings: &ChiSquaredSettings,
    degeneracy_mode_label: &str,
) -> Result<StatReport> {
    if settings.ensembles.is_empty() {
        return Err(Error::InvalidArgument("no ensembles requested".into()));
    }
    let n_bins = settings.n_bins.unwrap_or(default_bin_count(samples.len()));
    let (centers, densities, width) = histogram_density(samples, n_bins)?;
    let m = samples.len() as f64;
    let counts: Vec<usize> = densities
        .iter()
        .map(|&d| (d * m * width).round() as usize)
        .collect();
    let isolated: Vec<bool> = (0..counts.len())
        .map(|i| {
            let left = if i > 0 { counts[i - 1] } else { 0 };
            let right = if i + 1 < counts.len() { counts[i + 1] } else { 0 };
            counts[i] > 0 && counts[i] < settings.min_bin_count && left == 0 && right == 0
        })
        .collect();
    let outlier_total: usize = counts
        .iter()
        .zip(&isolated)
        .filter(|(_, &iso)| iso)
        .map(|(&c, _)| c)
        .sum();
    let drop_outliers = outlier_total as f64 <= settings.max_outlier_fraction * m;
    let mut fits = Vec::with_capacity(settings.ensembles.len());
    for ens in &settings.ensembles {
        let targets = centers
            .iter()
            .map(|&x| ens.density_mean((x - width / 2.0).max(0.0), x + width / 2.0))
            .collect::<Result<Vec<_>>>()?;
        let peak = targets.iter().cloned().fold(0.0f64, f64::max);
        let floor = settings.exclusion_floor_ratio * peak;
        let mut sum = 0.0;
        let mut used = 0usize;
        for (i, &t) in targets.iter().enumerate() {
            if floor > 0.0 && t < floor {
                continue;
            }
            if drop_outliers && isolated[i] {
                continue;
            }
            used += 1;
            // deep-tail targets underflow to 0; clamp so occupied far-tail
            // bins register as huge-but-finite disagreement
            let t = t.max(1e-100);
            match settings.mode {
                BinContentMode::Density => {
                    let n_i = densities[i];
                    sum += (n_i - t).powi(2) / t;
                }
                BinContentMode::Count => {
                    let observed = densities[i] * m * width;
                    let expected = t * m * width;
                    sum += (observed - expected).powi(2) / expected;
                }
            }
        }
        if used < 2 {
            return Err(Error::AllBinsExcluded);
        }
        fits.push(EnsembleFit {
            ensemble: ens.ensemble,
            d_fit: ens.d_fit,
            chi_squared: sum / (used as f64 - 1.0),
            excluded_bins: n_bins - used,
        });
    }
    let best = fits
        .iter()
        .min_by(|a, b| a.chi_squared.total_cmp(&b.chi_squared))
        .unwrap();
    let (minimum, best_ensemble) = (best.chi_squared, best.ensemble);
    Ok(StatReport {
        bin_centers: centers,
        bin_densities: densities,
        bin_width: width,
        sample_count: samples.len(),
        n_bins,
        mode: settings.mode,
        exclusion_floor_ratio: settings.exclusion_floor_ratio,
        degeneracy_mode: degeneracy_mode_label.into(),
        fits,
        minimum,
        best_ensemble,
    })
}

/// Per-model eigenvector-statistics defaults: ensemble and fit dimension.
/// The chain and spin-cavity models carry a conserved parity, so their fit
/// dimension is the sector dimension D/2; the collective-spin model has no
/// such symmetry and fits the full dimension against COE.
pub fn default_rmt_settings(model: &ModelInstance) -> Result<ChiSquaredSettings> {
    let d = model.dim() as f64;
    match model.name.as_str() {
        "a2a_ising" => Ok(ChiSquaredSettings::new(vec![EnsembleDensity::new(
            Ensemble::Coe,
            d,
        )?])),
        "heisenberg" => Ok(ChiSquaredSettings::new(vec![EnsembleDensity::new(
            Ensemble::Cue,
            d / 2.0,
        )?])),
        "dicke" => Ok(ChiSquaredSettings::new(vec![EnsembleDensity::new(
            Ensemble::Coe,
            d / 2.0,
        )?])),
        other => Err(Error::InvalidArgument(format!(
            "no RMT defaults for model '{other}'"
        ))),
    }
}

/// The symmetry whose sectors split a model's step unitary, if any.
pub fn model_symmetry_sectors(model: &ModelInstance) -> Result<Option<Vec<SymmetrySector>>> {
    match model.name.as_str() {
        "heisenberg" => {
            let n = model.params["n"] as usize;
            let parity = crate::models::heisenberg_parity(n)?;
            Ok(Some(crate::operators::symmetry_projectors(&parity, 1e-8)?))
        }
        "dicke" => {
            let j = model.params["j"];
            let dim_c = model.factor_dims()[0];
            let parity = crate::models::dicke_parity(j, dim_c)?;
            Ok(Some(crate::operators::symmetry_projectors(&parity, 1e-8)?))
        }
        _ => Ok(None),
    }
}

/// Full pipeline for one Trotter step unitary: eigenvector components in the
/// model's reference basis (the J_z / free product basis, computational in
/// all cases), restricted to symmetry sectors where the model has them, then
/// the chi-squared report.
pub fn model_chi_squared(model: &ModelInstance, tau: f64) -> Result<StatReport> {
    model_chi_squared_with(model, tau, None)
}

/// [`model_chi_squared`] with an explicit histogram bin count (None picks
/// [`default_bin_count`]).
pub fn model_chi_squared_with(
    model: &ModelInstance,
    tau: f64,
    n_bins: Option<usize>,
) -> Result<StatReport> {
    let mut settings = default_rmt_settings(model)?;
    settings.n_bins = n_bins;
    let u = model.trotter_step_unitary(tau)?;
    let (samples, label) = match model_symmetry_sectors(model)? {
        Some(sectors) => (
            sector_components(&u, &sectors)?,
            format!("symmetry_sectors({})", sectors.len()),
        ),
        None => (
            eigenvector_components(&u, None, DegeneracyMode::None)?,
            DegeneracyMode::None.label(),
        ),
    };
    chi_squared_rmt(&samples, &settings, &label)
}

/// Sectors of the pi-rotation parity exp(-i pi Jy) conserved by the COE and
/// CUE kicked tops; the CSE top carries no such symmetry (None).
pub fn kicked_top_symmetry_sectors(
    kt: &crate::models::KickedTopInstance,
) -> Result<Option<Vec<SymmetrySector>>> {
    use crate::models::KickedTopVariant;
    match kt.variant {
        KickedTopVariant::Coe | KickedTopVariant::Cue => {
            let alg = crate::operators::spin_algebra(kt.j)?;
            let rot = crate::linalg::expm_hermitian(&alg.jy, std::f64::consts::PI)?;
            Ok(Some(crate::operators::symmetry_projectors(&rot, 1e-6)?))
        }
        KickedTopVariant::Cse => Ok(None),
    }
}

/// Eigenvector-component samples of a kicked top's Floquet operator in the
/// J_z basis: within parity sectors for COE/CUE, Kramers-pair-summed for
/// CSE.
pub fn kicked_top_components(kt: &crate::models::KickedTopInstance) -> Result<Vec<f64>> {
    match kicked_top_symmetry_sectors(kt)? {
        Some(sectors) => projected_sector_components(&kt.floquet, &sectors),
        None => eigenvector_components(
            &kt.floquet,
            None,
            DegeneracyMode::PairDegenerate { tol: 1e-8 },
        ),
    }
}

/// Chi-squared of a kicked top's component statistics against all three
/// circular ensembles, at the symmetry-reduced fit dimension (D/2 for
/// COE/CUE parity sectors, the full D for CSE whose density already folds in
/// the Kramers pairing).
pub fn kicked_top_chi_squared(kt: &crate::models::KickedTopInstance) -> Result<StatReport> {
    kicked_top_chi_squared_with(kt, None)
}

/// [`kicked_top_chi_squared`] with an explicit histogram bin count.
pub fn kicked_top_chi_squared_with(
    kt: &crate::models::KickedTopInstance,
    n_bins: Option<usize>,
) -> Result<StatReport> {
    let has_parity = !matches!(kt.variant, crate::models::KickedTopVariant::Cse);
    let d = kt.floquet.dim() as f64;
    let d_fit = if has_parity { d / 2.0 } else { d };
    let samples = kicked_top_components(kt)?;
    let mut settings = ChiSquaredSettings::new(vec![
        EnsembleDensity::new(Ensemble::Coe, d_fit)?,
        EnsembleDensity::new(Ensemble::Cue, d_fit)?,
        EnsembleDensity::new(Ensemble::Cse, d_fit)?,
    ]);
    settings.n_bins = n_bins;
    // the kicked-top verdicts discriminate between ensembles of comparable
    // shape, not against astronomically mismatched spectra; dropping
    // negligible-target bins concentrates the statistic where the ensembles
    // actually differ
    settings.exclusion_floor_ratio = 1e-3;
    let label = if has_parity {
        "parity_sectors".to_string()
    } else {
        DegeneracyMode::PairDegenerate { tol: 1e-8 }.label()
    };
    chi_squared_rmt(&samples, &settings, &label)
}

/// Wigner-Dyson nearest-neighbour spacing density A_b s^b exp(-B_b s^2) with
/// unit mean spacing; beta in {1, 2, 4}.
pub fn wigner_dyson_density(beta: u8, s: f64) -> Result<f64> {
    use std::f64::consts::PI;
    let (a, b) = match beta {
        1 => (PI / 2.0, PI / 4.0),
        2 => (32.0 / (PI * PI), 4.0 / PI),
        4 => (262144.0 / (729.0 * PI * PI * PI), 64.0 / (9.0 * PI)),
        other => {
            return Err(Error::InvalidArgument(format!(
                "beta must be 1, 2, or 4, got {other}"
            )))
        }
    };
    Ok(a * s.powi(beta as i32) * (-b * s * s).exp())
}

/// Poisson spacing density e^{-s} (regular spectra).
pub fn poisson_density(s: f64) -> f64 {
    (-s).exp()
}

/// Unfolded nearest-neighbour spacings superimposed over symmetry subspaces.
#[derive(Debug, Clone)]
pub struct SpacingData {
    pub spacings: Vec<f64>,
    pub retained_subspaces: usize,
    pub skipped_subspaces: usize,
}

/// Groups the eigenphases of `u` by symmetry sector, assigning each
/// eigenvector to the sector with the largest projector expectation.
pub fn group_phases_by_sector(u: &Operator, sectors: &[SymmetrySector]) -> Result<Vec<Vec<f64>>> {
    if sectors.is_empty() {
        return Err(Error::InvalidArgument("no symmetry sectors given".into()));
    }
    let eig = eig_unitary(u)?;
    let d = u.dim();
    let mut groups = vec![Vec::new(); sectors.len()];
    for i in 0..d {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (si, sector) in sectors.iter().enumerate() {
            let pv = sector.projector.mat() * eig.vectors.col(i);
            let w: f64 = (0..d)
                .map(|k| (eig.vectors[(k, i)].conj() * pv[k]).re)
                .sum();
            if w > best.1 {
                best = (si, w);
            }
        }
        groups[best.0].push(eig.phases[i]);
    }
    Ok(groups)
}

/// Local-mean unfolding: each raw spacing is divided by the mean of the raw
/// spacings in a window of half-width `w` around it (per subspace), then all
/// subspaces are superimposed and the global mean is normalized to 1.
/// Subspaces with fewer than w + 2 levels are skipped.
pub fn level_spacings(subspace_phases: &[Vec<f64>], w: usize) -> Result<SpacingData> {
    let mut all = Vec::new();
    let mut retained = 0usize;
    let mut skipped = 0usize;
    for phases in subspace_phases {
        if phases.len() < w + 2 {
            skipped += 1;
            continue;
        }
        retained += 1;
        let mut sorted = phases.clone();
        sorted.sort_by(f64::total_cmp);
        let raw: Vec<f64> = sorted.windows(2).map(|p| p[1] - p[0]).collect();
        let n = raw.len();
        for i in 0..n {
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(n - 1);
            let local: f64 = raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
            if local > 0.0 {
                all.push(raw[i] / local);
            } else {
                all.push(0.0);
            }
        }
    }
    if all.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    if mean > 0.0 {
        for s in &mut all {
            *s /= mean;
        }
    }
    Ok(SpacingData {
        spacings: all,
        retained_subspaces: retained,
        skipped_subspaces: skipped,
    })
}
