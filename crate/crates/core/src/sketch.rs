//! Randomized SVD with Gaussian test matrices drawn from `N(0, K)`.
//!
//! Besides the range finder and projection error, this module evaluates the
//! covariance quality factors
//!
//! ```text
//! γ_k = k / (λ_1 Tr((V_1ᵀ K V_1)^{-1}))
//! β_k = Tr(Σ_2² V_2ᵀ K V_2) / (λ_1 ‖Σ_2‖_F²)
//! ```
//!
//! the probabilistic error bounds built from them, and Monte-Carlo checks of
//! the moment and tail estimates behind those bounds.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ensure_square, pivoted_qr, scale_rows, svd_desc, sym_eigen_desc};
use crate::sampling::{draw_mvn_matrix, FactoredCovariance, RandomSource};
use crate::{Error, Result};

/// Relative pivot size below which sketch columns are dropped as dependent.
pub const RANGE_DROP_TOL: f64 = 1e-12;

/// A linear map available through products with blocks of vectors.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A X`.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ Y`.
    fn apply_adjoint(&self, y: &DMatrix<f64>) -> DMatrix<f64>;
    /// Dense matrix, if cheap to form.
    fn to_dense(&self) -> Option<DMatrix<f64>> {
        None
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }
    fn apply_adjoint(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(y)
    }
    fn to_dense(&self) -> Option<DMatrix<f64>> {
        Some(self.clone())
    }
}

/// Target rank, oversampling and the bound parameters `t`, `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchConfig {
    pub k: usize,
    pub p: usize,
    pub t: f64,
    pub u: f64,
}

impl SketchConfig {
    pub fn new(k: usize, p: usize, t: f64, u: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("target rank must be positive"));
        }
        if !(t >= 1.0 && u >= 1.0) {
            return Err(Error::invalid(format!("bound parameters need t, u >= 1, got t={t}, u={u}")));
        }
        Ok(Self { k, p, t, u })
    }

    /// Number of sketch columns `k + p`.
    pub fn samples(&self) -> usize {
        self.k + self.p
    }

    /// Checks `k + p <= n` for an operator with `n` columns.
    pub fn check_dims(&self, n: usize) -> Result<()> {
        if self.samples() > n {
            return Err(Error::invalid(format!(
                "k + p = {} exceeds the column count {n}",
                self.samples()
            )));
        }
        Ok(())
    }

    fn check_bound(&self) -> Result<()> {
        if self.p < 4 {
            return Err(Error::invalid(format!("bounds need p >= 4, got {}", self.p)));
        }
        if !(self.t >= 1.0 && self.u >= 1.0) {
            return Err(Error::invalid("bounds need t, u >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityFactors {
    pub gamma_k: f64,
    pub beta_k: f64,
    /// Largest eigenvalue of the covariance.
    pub lambda1: f64,
    /// Set when `Σ_2 = 0`: the matrix has rank at most `k` and `β_k` is
    /// defined as 0.
    pub exact_low_rank: bool,
}

/// `Q` with orthonormal columns and `B = QᵀA`.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    pub q: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LowRankFactors {
    pub fn from_range<A: LinearOperator + ?Sized>(a: &A, q: DMatrix<f64>) -> Self {
        let b = a.apply_adjoint(&q).transpose();
        Self { q, b }
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    pub fn approximation(&self) -> DMatrix<f64> {
        &self.q * &self.b
    }
}

/// Which theorem's inequality to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundMode {
    /// The bound for sketches drawn from `N(0, K)`.
    Generalized,
    /// The classical bound for standard Gaussian sketches; needs `σ_{k+1}`.
    StandardHmt { sigma_next: f64 },
}

/// Orthonormal basis for the range of `A Ω`, found by column-pivoted QR.
/// Columns whose pivot falls below `1e-12 ‖AΩ‖_F` are dropped; a zero sketch
/// gives a basis with no columns.
pub fn range_finder<A: LinearOperator + ?Sized>(a: &A, omega: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if omega.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: omega.nrows(),
        });
    }
    let y = a.apply(omega);
    Ok(pivoted_qr(&y, RANGE_DROP_TOL).q)
}

/// `‖A - QQᵀA‖_F`.
pub fn project_error(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    if q.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: q.nrows(),
        });
    }
    if q.ncols() == 0 {
        return Ok(a.norm());
    }
    let b = q.tr_mul(a);
    Ok((a - q * b).norm())
}

/// `‖A - QQᵀA‖_F / ‖A‖_F`, or 0 for `A = 0`.
pub fn project_error_rel(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    let e = project_error(a, q)?;
    let n = a.norm();
    Ok(if n > 0.0 { e / n } else { 0.0 })
}

/// `√(sum_{j>k} σ_j²)`, the best rank-`k` Frobenius error.
pub fn svd_tail(singular_values: &[f64], k: usize) -> Result<f64> {
    if k > singular_values.len() {
        return Err(Error::invalid(format!(
            "rank {k} exceeds the {} available singular values",
            singular_values.len()
        )));
    }
    let mut s = 0.0;
    for &x in singular_values[k..].iter().rev() {
        s += x * x;
    }
    Ok(s.sqrt())
}

fn largest_eigenvalue(k: &DMatrix<f64>) -> f64 {
    sym_eigen_desc(k).values.get(0).copied().unwrap_or(0.0)
}

/// `γ_k = k / (λ_1 Tr((V_1ᵀ K V_1)^{-1}))`, with the trace taken from the
/// eigenvalues of the `k × k` matrix.
pub fn gamma_k(k_cov: &DMatrix<f64>, v1: &DMatrix<f64>) -> Result<f64> {
    let lambda1 = largest_eigenvalue(k_cov);
    gamma_k_with(k_cov, v1, lambda1)
}

fn gamma_k_with(k_cov: &DMatrix<f64>, v1: &DMatrix<f64>, lambda1: f64) -> Result<f64> {
    let n = ensure_square(k_cov)?;
    if v1.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v1.nrows(),
        });
    }
    let k = v1.ncols();
    if k == 0 {
        return Err(Error::invalid("V_1 must have at least one column"));
    }
    if !(lambda1 > 0.0) {
        return Err(Error::BlindCovariance);
    }
    let mut m = v1.tr_mul(&(k_cov * v1));
    m = (&m + m.transpose()) * 0.5;
    let mu = sym_eigen_desc(&m).values;
    if mu[k - 1] <= 1e-14 * lambda1 {
        return Err(Error::BlindCovariance);
    }
    let trace_inv: f64 = mu.iter().rev().map(|x| 1.0 / x).sum();
    Ok(k as f64 / (lambda1 * trace_inv))
}

/// `β_k = Tr(Σ_2² V_2ᵀ K V_2) / (λ_1 ‖Σ_2‖_F²)`; 0 when `Σ_2 = 0`.
pub fn beta_k(k_cov: &DMatrix<f64>, v2: &DMatrix<f64>, sigma2: &[f64]) -> Result<f64> {
    let lambda1 = largest_eigenvalue(k_cov);
    beta_k_with(k_cov, v2, sigma2, lambda1)
}

fn beta_k_with(k_cov: &DMatrix<f64>, v2: &DMatrix<f64>, sigma2: &[f64], lambda1: f64) -> Result<f64> {
    let n = ensure_square(k_cov)?;
    if v2.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v2.nrows(),
        });
    }
    if v2.ncols() != sigma2.len() {
        return Err(Error::DimensionMismatch {
            expected: v2.ncols(),
            got: sigma2.len(),
        });
    }
    let denom: f64 = sigma2.iter().map(|s| s * s).sum();
    if denom == 0.0 {
        return Ok(0.0);
    }
    if !(lambda1 > 0.0) {
        return Ok(0.0);
    }
    let kv = k_cov * v2;
    let mut num = 0.0;
    for (j, s) in sigma2.iter().enumerate() {
        num += s * s * v2.column(j).dot(&kv.column(j));
    }
    Ok((num / (lambda1 * denom)).max(0.0))
}

/// `sum_{j=k+1}^{n} λ_{j-k} σ_j² / (λ_1 sum_{j>k} σ_j²)`, an upper bound on
/// `β_k` from the covariance eigenvalues `lambdas` and all singular values
/// `sigma`, both descending.
pub fn beta_k_upper_bound(lambdas: &[f64], sigma: &[f64], k: usize) -> Result<f64> {
    if k > sigma.len() {
        return Err(Error::invalid("k exceeds the number of singular values"));
    }
    let tail = &sigma[k..];
    if lambdas.len() < tail.len() {
        return Err(Error::DimensionMismatch {
            expected: tail.len(),
            got: lambdas.len(),
        });
    }
    let denom: f64 = tail.iter().map(|s| s * s).sum();
    let lambda1 = lambdas.first().copied().unwrap_or(0.0);
    if denom == 0.0 || lambda1 <= 0.0 {
        return Ok(0.0);
    }
    let num: f64 = tail.iter().zip(lambdas).map(|(s, l)| l * s * s).sum();
    Ok(num / (lambda1 * denom))
}

/// Both quality factors against the SVD of `a`.
pub fn quality_factors(a: &DMatrix<f64>, k_cov: &DMatrix<f64>, k: usize) -> Result<QualityFactors> {
    let svd = svd_desc(a);
    quality_factors_from_svd(&svd.v, &svd.singular_values, k_cov, k)
}

/// Quality factors from right singular vectors `v` (columns) and singular
/// values `sigma`, both in descending order.
pub fn quality_factors_from_svd(
    v: &DMatrix<f64>,
    sigma: &[f64],
    k_cov: &DMatrix<f64>,
    k: usize,
) -> Result<QualityFactors> {
    if k > v.ncols() {
        return Err(Error::invalid(format!("k = {k} exceeds the {} singular vectors", v.ncols())));
    }
    let lambda1 = largest_eigenvalue(k_cov);
    let gamma = gamma_k_with(k_cov, &v.columns(0, k).clone_owned(), lambda1)?;
    let v2 = v.columns(k, v.ncols() - k).clone_owned();
    let s2 = &sigma[k..v.ncols()];
    let beta = beta_k_with(k_cov, &v2, s2, lambda1)?;
    Ok(QualityFactors {
        gamma_k: gamma,
        beta_k: beta,
        lambda1,
        exact_low_rank: s2.iter().all(|&s| s == 0.0),
    })
}

/// Right-hand side of the selected error bound for best error `tail`.
pub fn bound_rhs(cfg: &SketchConfig, qf: &QualityFactors, tail: f64, mode: BoundMode) -> Result<f64> {
    cfg.check_bound()?;
    if !(tail >= 0.0) {
        return Err(Error::invalid("tail must be nonnegative"));
    }
    let k = cfg.k as f64;
    let p = cfg.p as f64;
    match mode {
        BoundMode::Generalized => {
            if !(qf.gamma_k > 0.0) {
                return Err(Error::BlindCovariance);
            }
            let ratio = qf.beta_k / qf.gamma_k;
            let c = (k + p) * 3.0 * k / (p + 1.0) * ratio;
            Ok((1.0 + cfg.u * cfg.t * c.sqrt()) * tail)
        }
        BoundMode::StandardHmt { sigma_next } => {
            if !(sigma_next >= 0.0) {
                return Err(Error::invalid("sigma_{k+1} must be nonnegative"));
            }
            let lead = 1.0 + cfg.t * (3.0 * k / (p + 1.0)).sqrt();
            Ok(lead * tail + cfg.u * cfg.t * ((k + p).sqrt() / (p + 1.0)) * sigma_next)
        }
    }
}

/// Probability that the selected bound fails.
pub fn failure_probability(cfg: &SketchConfig, mode: BoundMode) -> f64 {
    let p = cfg.p as i32;
    match mode {
        BoundMode::Generalized => {
            let base = cfg.u * (-(cfg.u * cfg.u - 1.0) / 2.0).exp();
            cfg.t.powi(-p) + base.powi((cfg.k + cfg.p) as i32)
        }
        BoundMode::StandardHmt { .. } => 2.0 * cfg.t.powi(-p) + (-(cfg.u * cfg.u)).exp(),
    }
}

/// Monte-Carlo estimate with its analytic counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub analytic: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Empirical exceedance rate against an analytic tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub rate: f64,
    pub bound: f64,
    /// Binomial standard error `√(rate(1-rate)/trials)`.
    pub std_error: f64,
    pub trials: usize,
}

impl TailEstimate {
    /// Whether the rate stays below the bound plus three standard errors.
    /// A zero empirical rate is judged with the bound's own standard error.
    pub fn within_bound(&self) -> bool {
        let se = self
            .std_error
            .max((self.bound.min(1.0) * (1.0 - self.bound.min(1.0)) / self.trials as f64).sqrt());
        self.rate <= self.bound + 3.0 * se
    }
}

// Σ_2 V_2ᵀ basis diag(√λ): draws of Σ_2 V_2ᵀ ω for ω ~ N(0, K) are this
// matrix times standard normals.
fn trailing_factor(sigma2: &[f64], v2: &DMatrix<f64>, fac: &FactoredCovariance) -> Result<DMatrix<f64>> {
    if v2.nrows() != fac.dim() {
        return Err(Error::DimensionMismatch {
            expected: fac.dim(),
            got: v2.nrows(),
        });
    }
    if v2.ncols() != sigma2.len() {
        return Err(Error::DimensionMismatch {
            expected: v2.ncols(),
            got: sigma2.len(),
        });
    }
    let proj = scale_rows(&v2.tr_mul(fac.basis()), sigma2);
    Ok(crate::linalg::scale_cols(&proj, fac.sqrt_eigenvalues()))
}

fn trace_sigma_k(sigma2: &[f64], v2: &DMatrix<f64>, k_cov: &DMatrix<f64>) -> f64 {
    let kv = k_cov * v2;
    sigma2
        .iter()
        .enumerate()
        .map(|(j, s)| s * s * v2.column(j).dot(&kv.column(j)))
        .sum()
}

fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            g[(i, j)] = rng.sample(StandardNormal);
        }
    }
    g
}

/// Monte-Carlo check of `E‖Σ_2 V_2ᵀ Ω T‖_F² = Tr(Σ_2² V_2ᵀ K V_2) ‖T‖_F²`
/// where `Ω` has `T.nrows()` columns drawn from `N(0, K)`. Trial `i` uses
/// `rng.substream(i)`.
pub fn mc_expectation_identity(
    sigma2: &[f64],
    v2: &DMatrix<f64>,
    fac: &FactoredCovariance,
    t: &DMatrix<f64>,
    trials: usize,
    rng: RandomSource,
) -> Result<McEstimate> {
    if trials < 2 {
        return Err(Error::invalid("need at least two trials"));
    }
    let m = trailing_factor(sigma2, v2, fac)?;
    let analytic = trace_sigma_k(sigma2, v2, fac.covariance()) * t.norm_squared();
    let ell = t.nrows();
    let values: Vec<f64> = (0..trials)
        .map(|i| {
            let mut g = rng.substream(i as u64).rng();
            let z = gaussian(&mut g, fac.terms(), ell);
            (&m * z * t).norm_squared()
        })
        .collect();
    let (mean, sd) = crate::linalg::mean_std(&values);
    Ok(McEstimate {
        mean,
        analytic,
        std_error: sd / (trials as f64).sqrt(),
        trials,
    })
}

/// `(1+s)^{ℓ/2} e^{-sℓ/2}`.
pub fn chi_square_tail_bound(ell: usize, s: f64) -> f64 {
    let l = ell as f64;
    ((0.5 * l) * ((1.0 + s).ln() - s)).exp()
}

/// Monte-Carlo check of
/// `P{‖Σ_2 V_2ᵀ Ω‖_F² > ℓ(1+s) Tr(Σ_2² V_2ᵀ K V_2)} <= (1+s)^{ℓ/2} e^{-sℓ/2}`
/// with `Ω` of `ℓ` columns drawn from `N(0, K)`.
pub fn mc_tail_bound(
    sigma2: &[f64],
    v2: &DMatrix<f64>,
    fac: &FactoredCovariance,
    ell: usize,
    s: f64,
    trials: usize,
    rng: RandomSource,
) -> Result<TailEstimate> {
    if trials == 0 || ell == 0 {
        return Err(Error::invalid("need at least one trial and one column"));
    }
    if !(s >= 0.0) {
        return Err(Error::invalid(format!("s must be nonnegative, got {s}")));
    }
    let m = trailing_factor(sigma2, v2, fac)?;
    let threshold = ell as f64 * (1.0 + s) * trace_sigma_k(sigma2, v2, fac.covariance());
    let exceed = (0..trials)
        .filter(|&i| {
            let mut g = rng.substream(i as u64).rng();
            let z = gaussian(&mut g, fac.terms(), ell);
            (&m * z).norm_squared() > threshold
        })
        .count();
    let rate = exceed as f64 / trials as f64;
    Ok(TailEstimate {
        rate,
        bound: chi_square_tail_bound(ell, s),
        std_error: (rate * (1.0 - rate) / trials as f64).sqrt(),
        trials,
    })
}

/// Outcome of one generalized randomized SVD.
#[derive(Debug, Clone)]
pub struct SketchResult {
    pub k: usize,
    pub p: usize,
    pub seed: u64,
    pub omega: DMatrix<f64>,
    pub factors: LowRankFactors,
    pub error_fro: f64,
    pub error_rel: f64,
    /// Best rank-`k` error, when the SVD of `A` was computed.
    pub tail: Option<f64>,
    pub quality: Option<QualityFactors>,
    /// Generalized bound at the configured `t`, `u`.
    pub bound_rhs: Option<f64>,
}

/// Whether [`generalized_rsvd`] also computes the dense SVD diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnostics {
    /// Error only.
    Off,
    /// Error plus best error, `γ_k`, `β_k` and the bound; needs a dense `A`.
    Full,
}

/// Sketches `A` with `k + p` columns drawn from `N(0, K)` and returns the
/// projection `QQᵀA` with its error.
pub fn generalized_rsvd<A: LinearOperator + ?Sized>(
    a: &A,
    cov: &FactoredCovariance,
    cfg: &SketchConfig,
    rng: RandomSource,
    diagnostics: Diagnostics,
) -> Result<SketchResult> {
    let n = a.ncols();
    if cov.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cov.dim(),
        });
    }
    cfg.check_dims(n)?;
    let omega = draw_mvn_matrix(cov, rng, cfg.samples());
    let q = range_finder(a, &omega)?;
    let factors = LowRankFactors::from_range(a, q);
    let dense = a.to_dense();
    let (error_fro, a_norm) = match &dense {
        Some(d) => (project_error(d, &factors.q)?, d.norm()),
        None => residual_norm_matrix_free(a, &factors),
    };
    let error_rel = if a_norm > 0.0 { error_fro / a_norm } else { 0.0 };

    let mut tail = None;
    let mut quality = None;
    let mut rhs = None;
    if let (Diagnostics::Full, Some(d)) = (diagnostics, dense.as_ref()) {
        let svd = svd_desc(d);
        let t = svd_tail(&svd.singular_values, cfg.k.min(svd.singular_values.len()))?;
        tail = Some(t);
        if cfg.k <= svd.v.ncols() {
            let qf = quality_factors_from_svd(&svd.v, &svd.singular_values, cov.covariance(), cfg.k)?;
            if cfg.p >= 4 {
                rhs = Some(bound_rhs(cfg, &qf, t, BoundMode::Generalized)?);
            }
            quality = Some(qf);
        }
    }
    Ok(SketchResult {
        k: cfg.k,
        p: cfg.p,
        seed: rng.seed,
        omega,
        factors,
        error_fro,
        error_rel,
        tail,
        quality,
        bound_rhs: rhs,
    })
}

// ‖A - QB‖_F and ‖A‖_F by probing with the identity, for operators without
// a dense form.
fn residual_norm_matrix_free<A: LinearOperator + ?Sized>(a: &A, f: &LowRankFactors) -> (f64, f64) {
    let n = a.ncols();
    let mut err = 0.0;
    let mut nrm = 0.0;
    let block = 64;
    let mut start = 0;
    while start < n {
        let w = block.min(n - start);
        let mut e = DMatrix::zeros(n, w);
        for j in 0..w {
            e[(start + j, j)] = 1.0;
        }
        let cols = a.apply(&e);
        let approx = &f.q * f.b.columns(start, w);
        nrm += cols.norm_squared();
        err += (cols - approx).norm_squared();
        start += w;
    }
    (err.sqrt(), nrm.sqrt())
}

/// Diagonal matrix with the given entries.
pub fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::factor_covariance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use alloc::vec;

    fn gauss(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        gaussian(&mut rng, rows, cols)
    }

    fn orthonormal(n: usize, seed: u64) -> DMatrix<f64> {
        pivoted_qr(&gauss(n, n, seed), 0.0).q
    }

    #[test]
    fn range_of_identity_and_rank_one() {
        let a = DMatrix::<f64>::identity(4, 4);
        let mut e1 = DMatrix::zeros(4, 1);
        e1[(0, 0)] = 1.0;
        let q = range_finder(&a, &e1).unwrap();
        assert_eq!(q.ncols(), 1);
        assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-15);

        let u = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]).normalize();
        let v = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let a = &u * v.transpose();
        let q = range_finder(&a, &gauss(3, 3, 1)).unwrap();
        assert_eq!(q.ncols(), 1);
        assert!((q.column(0).dot(&u).abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_sketch_gives_empty_range() {
        let a = DMatrix::<f64>::zeros(5, 4);
        let q = range_finder(&a, &gauss(4, 2, 2)).unwrap();
        assert_eq!(q.ncols(), 0);
        assert_eq!(project_error(&a, &q).unwrap(), 0.0);
    }

    #[test]
    fn range_is_orthonormal() {
        let a = gauss(50, 40, 3);
        let q = range_finder(&a, &gauss(40, 20, 4)).unwrap();
        assert_eq!(q.ncols(), 20);
        let g = q.tr_mul(&q) - DMatrix::identity(20, 20);
        assert!(g.amax() <= 1e-10);
    }

    #[test]
    fn projection_error_examples() {
        let a = diag(&[3.0, 2.0, 1.0]);
        let q = DMatrix::identity(3, 2);
        assert!((project_error(&a, &q).unwrap() - 1.0).abs() < 1e-15);
        assert!((project_error(&a, &DMatrix::zeros(3, 0)).unwrap() - 14f64.sqrt()).abs() < 1e-15);
        assert!(project_error(&a, &DMatrix::identity(3, 3)).unwrap() < 1e-10);
    }

    #[test]
    fn tail_examples() {
        let s = [3.0, 2.0, 1.0];
        assert_eq!(svd_tail(&s, 3).unwrap(), 0.0);
        assert!((svd_tail(&s, 1).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert!((svd_tail(&s, 0).unwrap() - 14f64.sqrt()).abs() < 1e-15);
        assert!(svd_tail(&s, 4).is_err());
    }

    #[test]
    fn identity_covariance_gives_unit_factors() {
        let a = gauss(12, 10, 5);
        let qf = quality_factors(&a, &DMatrix::identity(10, 10), 4).unwrap();
        assert!((qf.gamma_k - 1.0).abs() < 1e-12);
        assert!((qf.beta_k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_on_diagonal_covariance() {
        let l = [5.0, 3.0, 2.0, 0.5, 0.1];
        let k = diag(&l);
        let v1 = DMatrix::identity(5, 3);
        let expect = 3.0 / (5.0 * (1.0 / 5.0 + 1.0 / 3.0 + 1.0 / 2.0));
        assert!((gamma_k(&k, &v1).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn gamma_blind_covariance_errors() {
        let k = diag(&[1.0, 1.0, 0.0]);
        let mut v1 = DMatrix::zeros(3, 1);
        v1[(2, 0)] = 1.0;
        assert_eq!(gamma_k(&k, &v1), Err(Error::BlindCovariance));
    }

    #[test]
    fn beta_vanishes_for_leading_subspace_prior() {
        let a = gauss(8, 8, 6);
        let svd = svd_desc(&a);
        let v1 = svd.v.columns(0, 3).clone_owned();
        let k = &v1 * v1.transpose();
        let v2 = svd.v.columns(3, 5).clone_owned();
        let b = beta_k(&k, &v2, &svd.singular_values[3..]).unwrap();
        assert!(b.abs() < 1e-14);
        assert_eq!(beta_k(&k, &v2, &[0.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn bound_examples() {
        let cfg = SketchConfig::new(10, 5, 1.0, 1.0).unwrap();
        let qf = QualityFactors {
            gamma_k: 0.5,
            beta_k: 0.5,
            lambda1: 1.0,
            exact_low_rank: false,
        };
        let rhs = bound_rhs(&cfg, &qf, 1.0, BoundMode::Generalized).unwrap();
        assert!((rhs - (1.0 + 75f64.sqrt())).abs() < 1e-12);
        let zero = QualityFactors { beta_k: 0.0, ..qf };
        assert_eq!(bound_rhs(&cfg, &zero, 0.7, BoundMode::Generalized).unwrap(), 0.7);
        let bad = SketchConfig::new(10, 3, 1.0, 1.0).unwrap();
        assert!(bound_rhs(&bad, &qf, 1.0, BoundMode::Generalized).is_err());
        let hmt = bound_rhs(&cfg, &qf, 1.0, BoundMode::StandardHmt { sigma_next: 0.5 }).unwrap();
        let expect = 1.0 + 5f64.sqrt() + 15f64.sqrt() / 6.0 * 0.5;
        assert!((hmt - expect).abs() < 1e-12);
    }

    #[test]
    fn failure_probability_examples() {
        let cfg = SketchConfig::new(10, 5, 4.0, 3.0).unwrap();
        assert!(failure_probability(&cfg, BoundMode::Generalized) <= 0.001);
        let u1 = SketchConfig::new(10, 5, 2.0, 1.0).unwrap();
        assert!((failure_probability(&u1, BoundMode::Generalized) - (2f64.powi(-5) + 1.0)).abs() < 1e-15);
        let huge = SketchConfig::new(10, 5, 1e12, 3.0).unwrap();
        let u_term = (3.0 * (-4.0f64).exp()).powi(15);
        assert!((failure_probability(&huge, BoundMode::Generalized) - u_term).abs() < 1e-30 + 1e-12 * u_term);
        let hmt = failure_probability(&cfg, BoundMode::StandardHmt { sigma_next: 0.0 });
        assert!((hmt - (2.0 / 1024.0 + (-9.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn expectation_identity_trivial_cases() {
        let n = 6;
        let k = 2;
        let fac = factor_covariance(&DMatrix::identity(n, n)).unwrap();
        let v2 = orthonormal(n, 7).columns(k, n - k).clone_owned();
        let sig = [1.0; 4];
        let est = mc_expectation_identity(&sig, &v2, &fac, &DMatrix::zeros(3, k), 10, RandomSource::new(1)).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.analytic, 0.0);
        let t = DMatrix::identity(k, k);
        let est = mc_expectation_identity(&sig, &v2, &fac, &t, 10, RandomSource::new(1)).unwrap();
        assert!((est.analytic - ((n - k) * k) as f64).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_is_vacuous_at_zero_and_decreasing() {
        assert_eq!(chi_square_tail_bound(10, 0.0), 1.0);
        let b = chi_square_tail_bound(10, 3.0);
        assert!((b - 4f64.powi(5) * (-15.0f64).exp()).abs() < 1e-15);
        let mut last = 1.0;
        for i in 1..50 {
            let v = chi_square_tail_bound(10, i as f64 * 0.1);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn rank_k_matrix_is_captured() {
        let a = gauss(20, 4, 8) * gauss(4, 15, 9);
        let fac = factor_covariance(&DMatrix::identity(15, 15)).unwrap();
        let cfg = SketchConfig::new(4, 2, 1.0, 1.0).unwrap();
        let r = generalized_rsvd(&a, &fac, &cfg, RandomSource::new(3), Diagnostics::Full).unwrap();
        assert!(r.error_fro <= 1e-10 * a.norm());
        assert!(r.quality.unwrap().exact_low_rank || r.tail.unwrap() < 1e-10 * a.norm());
    }

    #[test]
    fn aligned_prior_reaches_near_best_error() {
        let n = 30;
        let u = orthonormal(n, 10);
        let v = orthonormal(n, 11);
        let s: Vec<f64> = (0..n).map(|j| 0.5f64.powi(j as i32)).collect();
        let a = &u * diag(&s) * v.transpose();
        let v1 = v.columns(0, 5).clone_owned();
        let k = &v1 * v1.transpose() + DMatrix::identity(n, n) * 1e-8;
        let fac = factor_covariance(&k).unwrap();
        let cfg = SketchConfig::new(5, 0, 1.0, 1.0).unwrap();
        let r = generalized_rsvd(&a, &fac, &cfg, RandomSource::new(1), Diagnostics::Full).unwrap();
        let best = svd_tail(&s, 5).unwrap();
        assert!(r.error_fro <= 10.0 * best, "{} vs {best}", r.error_fro);
    }

    #[test]
    fn generalized_bound_holds_on_decaying_diagonal() {
        let s: Vec<f64> = (0..10).map(|j| 10f64.powi(-j)).collect();
        let a = diag(&s);
        let fac = factor_covariance(&DMatrix::identity(10, 10)).unwrap();
        let cfg = SketchConfig::new(5, 4, 1.0, 1.0).unwrap();
        let base = RandomSource::new(2024);
        let mut ok = 0;
        for i in 0..1000 {
            let r = generalized_rsvd(&a, &fac, &cfg, base.substream(i), Diagnostics::Full).unwrap();
            if r.error_fro <= r.bound_rhs.unwrap() {
                ok += 1;
            }
        }
        assert!(ok >= 990, "{ok}");
    }

    #[test]
    fn dimension_checks() {
        let a = gauss(5, 4, 1);
        let fac = factor_covariance(&DMatrix::identity(3, 3)).unwrap();
        let cfg = SketchConfig::new(2, 1, 1.0, 1.0).unwrap();
        assert!(generalized_rsvd(&a, &fac, &cfg, RandomSource::new(0), Diagnostics::Off).is_err());
        let fac = factor_covariance(&DMatrix::identity(4, 4)).unwrap();
        let cfg = SketchConfig::new(3, 2, 1.0, 1.0).unwrap();
        assert!(generalized_rsvd(&a, &fac, &cfg, RandomSource::new(0), Diagnostics::Off).is_err());
        assert!(SketchConfig::new(0, 1, 1.0, 1.0).is_err());
        assert!(SketchConfig::new(1, 1, 0.5, 1.0).is_err());
    }
}
