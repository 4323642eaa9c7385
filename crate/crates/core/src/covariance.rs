//! Covariance kernels and their Mercer representations.
//!
//! Closed-form kernels (squared exponential, periodic) are sampled pointwise.
//! Mercer kernels are built from an orthonormal basis and a designed
//! eigenvalue sequence:
//!
//! * weighted Jacobi polynomials `w^{1/2} P̃_j^{(α,α)}` on `[-1, 1]`, which
//!   vanish at both endpoints for `α > 0`;
//! * the sine eigenbasis of the Dirichlet Laplacian Green's function on
//!   `[0, 1]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::linalg::{ensure_symmetric, numerical_rank, sym_eigen_desc, weight_similarity};
use crate::quadrature::QuadratureGrid;
use crate::{Error, Result};

/// Number of terms summed directly when computing the Rissanen constant.
pub const RISSANEN_CUTOFF: u64 = 10_000_000;

/// Default truncation of Mercer expansions.
pub const DEFAULT_MERCER_TERMS: usize = 500;

/// Relative symmetry tolerance for discretized covariances.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Smallest admissible weighted eigenvalue of a discretized covariance,
/// relative to the largest.
pub const PSD_TOL: f64 = 1e-10;

/// Iterated binary logarithm `log2(j) + log2(log2(j)) + ...`, summing the
/// positive iterates and stopping once an iterate is at most 1.
pub fn log2_star(j: u64) -> f64 {
    let mut sum = 0.0;
    let mut v = (j as f64).log2();
    while v > 0.0 {
        sum += v;
        if v <= 1.0 {
            break;
        }
        v = v.log2();
    }
    sum
}

/// Closed-form estimate of `sum_{i > cutoff} 2^{-log2*(i)}`, integrating the
/// summand piecewise over the ranges where the number of iterates is fixed.
pub fn rissanen_tail_estimate(cutoff: u64) -> f64 {
    let ln2 = core::f64::consts::LN_2;
    // m = number of iterates of log2 at `cutoff` that are >= 1.
    let mut m = 0i32;
    let mut v = cutoff as f64;
    let mut last = v;
    while v >= 2.0 {
        v = v.log2();
        m += 1;
        last = v;
    }
    if m == 0 {
        return f64::INFINITY;
    }
    // `last` is the m-th iterate, in [1, 2).
    ln2.powi(m) * (ln2 - last.ln()) + ln2.powi(m + 2) / (1.0 - ln2)
}

static RISSANEN_C0_BITS: AtomicU64 = AtomicU64::new(0);

/// Normalizing constant `c0 = sum_{i>=2} 2^{-log2*(i)}`, summed directly up
/// to [`RISSANEN_CUTOFF`] plus [`rissanen_tail_estimate`]. Computed once per
/// process.
pub fn rissanen_constant() -> f64 {
    let bits = RISSANEN_C0_BITS.load(Ordering::Relaxed);
    if bits != 0 {
        return f64::from_bits(bits);
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 2..=RISSANEN_CUTOFF {
        let term = (-log2_star(i)).exp2();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    let partial = sum + comp;
    let tail = rissanen_tail_estimate(RISSANEN_CUTOFF);
    log::debug!("rissanen constant: partial sum {partial}, tail estimate {tail}");
    let c0 = partial + tail;
    RISSANEN_C0_BITS.store(c0.to_bits(), Ordering::Relaxed);
    c0
}

/// Family of a designed eigenvalue sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceKind {
    /// `R_j = 2^{-log2(c0) - log2*(j)}`.
    Rissanen,
    /// `R_j / j`.
    ScaledRissanen,
    /// `j^{-nu}` with `nu > 1`.
    PowerLaw { nu: f64 },
    /// Caller-provided positive nonincreasing values.
    Explicit(Vec<f64>),
}

/// Positive nonincreasing Mercer weights `λ_1, ..., λ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSequence {
    kind: SequenceKind,
    len: usize,
}

impl EigenSequence {
    pub fn rissanen(n: usize) -> Result<Self> {
        Self::new(SequenceKind::Rissanen, n)
    }

    pub fn scaled_rissanen(n: usize) -> Result<Self> {
        Self::new(SequenceKind::ScaledRissanen, n)
    }

    pub fn power_law(nu: f64, n: usize) -> Result<Self> {
        Self::new(SequenceKind::PowerLaw { nu }, n)
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(SequenceKind::Explicit(values), n)
    }

    pub fn new(kind: SequenceKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("eigenvalue sequence must have at least one term"));
        }
        match &kind {
            SequenceKind::PowerLaw { nu } if !(*nu > 1.0 && nu.is_finite()) => {
                return Err(Error::invalid(format!("power-law exponent must exceed 1, got {nu}")));
            }
            SequenceKind::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
                if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::invalid("explicit eigenvalues must be positive and finite"));
                }
                if v.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::invalid("explicit eigenvalues must be nonincreasing"));
                }
            }
            _ => {}
        }
        Ok(Self { kind, len: n })
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// Truncation length `n`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `λ_j` for `1 <= j <= n`.
    pub fn eval(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.len {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.len,
            });
        }
        Ok(self.eval_unchecked(j))
    }

    fn eval_unchecked(&self, j: usize) -> f64 {
        match &self.kind {
            SequenceKind::Rissanen => (-log2_star(j as u64)).exp2() / rissanen_constant(),
            SequenceKind::ScaledRissanen => {
                (-log2_star(j as u64)).exp2() / rissanen_constant() / j as f64
            }
            SequenceKind::PowerLaw { nu } => (j as f64).powf(-nu),
            SequenceKind::Explicit(v) => v[j - 1],
        }
    }

    /// All weights `λ_1..λ_n`.
    pub fn values(&self) -> Vec<f64> {
        (1..=self.len).map(|j| self.eval_unchecked(j)).collect()
    }

    /// Whether `sum_j j λ_j` converges, the condition for a continuous
    /// `α = 2` Jacobi kernel. Exact for the built-in families; explicit
    /// sequences are judged by the decay exponent over their last octave.
    pub fn first_moment_summable(&self) -> bool {
        match &self.kind {
            SequenceKind::Rissanen => false,
            SequenceKind::ScaledRissanen => true,
            SequenceKind::PowerLaw { nu } => *nu > 2.0,
            SequenceKind::Explicit(v) => {
                let n = v.len();
                if n < 4 {
                    return true;
                }
                let h = n / 2;
                let nu = (v[h - 1] / v[n - 1]).ln() / (n as f64 / h as f64).ln();
                nu > 2.0
            }
        }
    }

    /// `M = max_j λ_j j^ν` for a power-law sequence, the constant in
    /// `λ_j <= M j^{-ν}`.
    pub fn power_law_constant(&self) -> Option<(f64, f64)> {
        let SequenceKind::PowerLaw { nu } = self.kind else {
            return None;
        };
        let m = (1..=self.len)
            .map(|j| self.eval_unchecked(j) * (j as f64).powf(nu))
            .fold(0.0f64, f64::max);
        Some((m, nu))
    }
}

// ---------------------------------------------------------------------------
// Jacobi polynomials

/// Unnormalized Jacobi polynomials `P_0..P_{terms-1}` at `x`, by the standard
/// three-term recurrence.
pub fn jacobi_p_all(terms: usize, a: f64, b: f64, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; terms];
    if terms == 0 {
        return out;
    }
    out[0] = 1.0;
    if terms == 1 {
        return out;
    }
    out[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
    for n in 2..terms {
        let nf = n as f64;
        let s = 2.0 * nf + a + b;
        let c1 = 2.0 * nf * (nf + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (nf + a - 1.0) * (nf + b - 1.0) * s;
        out[n] = (c2 * out[n - 1] - c3 * out[n - 2]) / c1;
    }
    out
}

/// `∫ (1-x²)^α P_j^{(α,α)}(x)² dx` over `[-1, 1]` for integer `α`.
pub fn jacobi_norm_sq(j: usize, alpha: u32) -> f64 {
    let a = alpha as f64;
    let jf = j as f64;
    // Γ(j+α+1)² / (Γ(j+2α+1) j!) = prod_{i=1}^{α} (j+i) / prod_{i=α+1}^{2α} (j+i)
    let mut ratio = 1.0;
    for i in 1..=alpha {
        ratio *= (jf + i as f64) / (jf + (alpha + i) as f64);
    }
    (2.0f64).powf(2.0 * a + 1.0) / (2.0 * jf + 2.0 * a + 1.0) * ratio
}

fn check_alpha(alpha: u32) -> Result<()> {
    if !alpha.is_multiple_of(2) {
        return Err(Error::invalid(format!("Jacobi parameter must be even, got {alpha}")));
    }
    Ok(())
}

fn check_unit_interval(x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutsideDomain { x, a: -1.0, b: 1.0 });
    }
    Ok(())
}

/// Values `w^{1/2}(x) P̃_j^{(α,α)}(x)` for `j = 0..terms`, each of unit
/// L²([-1,1]) norm. No argument checks.
pub fn weighted_jacobi_all(terms: usize, alpha: u32, x: f64) -> Vec<f64> {
    let a = alpha as f64;
    let mut p = jacobi_p_all(terms, a, a, x);
    let w_half = ((1.0 - x) * (1.0 + x)).powi((alpha / 2) as i32);
    for (j, v) in p.iter_mut().enumerate() {
        *v *= w_half / jacobi_norm_sq(j, alpha).sqrt();
    }
    p
}

/// `w_{α,α}(x)^{1/2} P̃_j^{(α,α)}(x)`, normalized to unit L² norm on
/// `[-1, 1]`.
pub fn jacobi_poly_weighted(j: usize, alpha: u32, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_unit_interval(x)?;
    Ok(weighted_jacobi_all(j + 1, alpha, x)[j])
}

/// Truncated Jacobi Mercer kernel with precomputed weights.
#[derive(Debug, Clone)]
pub struct JacobiKernel {
    alpha: u32,
    lambdas: Vec<f64>,
}

impl JacobiKernel {
    pub fn new(alpha: u32, seq: &EigenSequence) -> Result<Self> {
        check_alpha(alpha)?;
        if seq.is_empty() {
            return Err(Error::invalid("empty eigenvalue sequence"));
        }
        if alpha == 2 && !seq.first_moment_summable() {
            log::warn!(
                "sum of j*lambda_j does not appear to converge for {:?}; \
                 the alpha = 2 Jacobi kernel may not be continuous",
                seq.kind()
            );
        }
        Ok(Self {
            alpha,
            lambdas: seq.values(),
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_unit_interval(x)?;
        check_unit_interval(y)?;
        let n = self.lambdas.len();
        let px = weighted_jacobi_all(n, self.alpha, x);
        let py = weighted_jacobi_all(n, self.alpha, y);
        Ok(self
            .lambdas
            .iter()
            .zip(px.iter().zip(&py))
            .map(|(l, (a, b))| l * a * b)
            .sum())
    }
}

/// `sum_{j<n} λ_{j+1} w^{1/2}P̃_j(x) w^{1/2}P̃_j(y)`.
pub fn jacobi_kernel_eval(alpha: u32, seq: &EigenSequence, x: f64, y: f64) -> Result<f64> {
    JacobiKernel::new(alpha, seq)?.eval(x, y)
}

// ---------------------------------------------------------------------------
// Laplacian Green's function

/// Eigenpair of the Green's function of `-d²/dx²` on `[0, 1]` with
/// homogeneous Dirichlet conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEigenpair {
    pub index: usize,
    pub eigenvalue: f64,
}

impl LaplaceEigenpair {
    /// `√2 sin(nπx)`.
    pub fn eval(&self, x: f64) -> f64 {
        core::f64::consts::SQRT_2 * (self.index as f64 * PI * x).sin()
    }
}

pub fn laplace_green_eigen(n: usize) -> Result<LaplaceEigenpair> {
    if n == 0 {
        return Err(Error::invalid("Laplacian eigenpair index starts at 1"));
    }
    let nf = n as f64;
    Ok(LaplaceEigenpair {
        index: n,
        eigenvalue: 1.0 / (PI * PI * nf * nf),
    })
}

// ---------------------------------------------------------------------------
// Covariance specifications

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceForm {
    /// `exp(-|x-y|²/(2ℓ²))`.
    SqExp { ell: f64 },
    /// `exp(-(2/ℓ²) sin²((x-y)/2))`.
    Periodic { ell: f64 },
    /// Weighted Jacobi Mercer kernel with `α = β`.
    JacobiMercer { alpha: u32, seq: EigenSequence },
    /// Laplacian Green's function truncated to `terms` eigenpairs.
    LaplaceGreen { terms: usize },
    /// A covariance given directly as a matrix on some grid.
    ExplicitMatrix(DMatrix<f64>),
}

/// A covariance kernel together with its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    form: CovarianceForm,
    domain: (f64, f64),
}

fn check_ell(ell: f64) -> Result<()> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::invalid(format!("length scale must be positive, got {ell}")));
    }
    Ok(())
}

fn check_domain(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(format!("degenerate domain [{a}, {b}]")));
    }
    Ok(())
}

impl CovarianceSpec {
    pub fn sq_exp(ell: f64, domain: (f64, f64)) -> Result<Self> {
        check_ell(ell)?;
        check_domain(domain.0, domain.1)?;
        Ok(Self {
            form: CovarianceForm::SqExp { ell },
            domain,
        })
    }

    pub fn periodic(ell: f64, domain: (f64, f64)) -> Result<Self> {
        check_ell(ell)?;
        check_domain(domain.0, domain.1)?;
        Ok(Self {
            form: CovarianceForm::Periodic { ell },
            domain,
        })
    }

    /// Jacobi Mercer kernel on `[-1, 1]`.
    pub fn jacobi(alpha: u32, seq: EigenSequence) -> Result<Self> {
        check_alpha(alpha)?;
        if alpha == 2 && !seq.first_moment_summable() {
            log::warn!(
                "sum of j*lambda_j does not appear to converge for {:?}; \
                 the alpha = 2 Jacobi kernel may not be continuous",
                seq.kind()
            );
        }
        Ok(Self {
            form: CovarianceForm::JacobiMercer { alpha, seq },
            domain: (-1.0, 1.0),
        })
    }

    /// Laplacian Green's covariance on `[0, 1]` with `terms` eigenpairs.
    pub fn laplace_green(terms: usize) -> Result<Self> {
        if terms == 0 {
            return Err(Error::invalid("Laplacian Green covariance needs at least one term"));
        }
        Ok(Self {
            form: CovarianceForm::LaplaceGreen { terms },
            domain: (0.0, 1.0),
        })
    }

    pub fn matrix(k: DMatrix<f64>, domain: (f64, f64)) -> Result<Self> {
        check_domain(domain.0, domain.1)?;
        ensure_symmetric(&k, SYMMETRY_TOL)?;
        Ok(Self {
            form: CovarianceForm::ExplicitMatrix(k),
            domain,
        })
    }

    pub fn form(&self) -> &CovarianceForm {
        &self.form
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn check_point(&self, x: f64) -> Result<()> {
        let (a, b) = self.domain;
        let slack = 1e-12 * (b - a);
        if !(x >= a - slack && x <= b + slack) {
            return Err(Error::OutsideDomain { x, a, b });
        }
        Ok(())
    }

    /// Closed-form kernel value; only for squared-exponential and periodic
    /// specs.
    pub fn kernel_eval(&self, x: f64, y: f64) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        match self.form {
            CovarianceForm::SqExp { ell } => {
                let d = x - y;
                Ok((-(d * d) / (2.0 * ell * ell)).exp())
            }
            CovarianceForm::Periodic { ell } => {
                let s = (0.5 * (x - y)).sin();
                Ok((-(2.0 / (ell * ell)) * s * s).exp())
            }
            _ => Err(Error::NotClosedForm),
        }
    }

    /// Mercer weights, when the spec is given in Mercer form.
    pub fn mercer_eigenvalues(&self) -> Option<Vec<f64>> {
        match &self.form {
            CovarianceForm::JacobiMercer { seq, .. } => Some(seq.values()),
            CovarianceForm::LaplaceGreen { terms } => Some(
                (1..=*terms)
                    .map(|n| 1.0 / (PI * PI * (n * n) as f64))
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Mercer basis functions evaluated at `nodes`, one column per term.
    pub fn mercer_basis(&self, nodes: &[f64]) -> Result<Option<DMatrix<f64>>> {
        for &x in nodes {
            self.check_point(x)?;
        }
        let (a, b) = self.domain;
        let clamp = |x: f64| x.max(a).min(b);
        match &self.form {
            CovarianceForm::JacobiMercer { alpha, seq } => {
                let terms = seq.len();
                let mut m = DMatrix::zeros(nodes.len(), terms);
                for (i, &x) in nodes.iter().enumerate() {
                    let vals = weighted_jacobi_all(terms, *alpha, clamp(x));
                    for (j, v) in vals.into_iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
                Ok(Some(m))
            }
            CovarianceForm::LaplaceGreen { terms } => {
                let m = DMatrix::from_fn(nodes.len(), *terms, |i, j| {
                    core::f64::consts::SQRT_2 * ((j + 1) as f64 * PI * clamp(nodes[i])).sin()
                });
                Ok(Some(m))
            }
            _ => Ok(None),
        }
    }

    /// Kernel matrix `K(x_i, x_k)` at arbitrary nodes. Mercer forms are
    /// assembled as `Ψ diag(λ) Ψᵀ`; closed forms are sampled pointwise.
    pub fn eval_matrix(&self, nodes: &[f64]) -> Result<DMatrix<f64>> {
        let n = nodes.len();
        match &self.form {
            CovarianceForm::ExplicitMatrix(k) => {
                if k.nrows() != n {
                    return Err(Error::DimensionMismatch {
                        expected: k.nrows(),
                        got: n,
                    });
                }
                Ok(k.clone())
            }
            CovarianceForm::SqExp { .. } | CovarianceForm::Periodic { .. } => {
                let mut k = DMatrix::zeros(n, n);
                for j in 0..n {
                    for i in j..n {
                        let v = self.kernel_eval(nodes[i], nodes[j])?;
                        k[(i, j)] = v;
                        k[(j, i)] = v;
                    }
                }
                Ok(k)
            }
            CovarianceForm::JacobiMercer { .. } | CovarianceForm::LaplaceGreen { .. } => {
                let psi = self.mercer_basis(nodes)?.ok_or(Error::NoMercerBasis)?;
                let lambdas = self.mercer_eigenvalues().ok_or(Error::NoMercerBasis)?;
                let scaled = crate::linalg::scale_cols(&psi, &lambdas);
                let mut k = scaled * psi.transpose();
                // exact symmetry
                for j in 0..n {
                    for i in (j + 1)..n {
                        let v = 0.5 * (k[(i, j)] + k[(j, i)]);
                        k[(i, j)] = v;
                        k[(j, i)] = v;
                    }
                }
                Ok(k)
            }
        }
    }

    /// Kernel value for any non-matrix spec: closed form or truncated Mercer
    /// sum.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match &self.form {
            CovarianceForm::SqExp { .. } | CovarianceForm::Periodic { .. } => self.kernel_eval(x, y),
            CovarianceForm::ExplicitMatrix(_) => Err(Error::NoMercerBasis),
            _ => Ok(self.eval_matrix(&[x, y])?[(0, 1)]),
        }
    }
}

/// Kernel matrix of `spec` on the nodes of `grid`.
pub fn discretize_covariance(spec: &CovarianceSpec, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    let (a, b) = spec.domain();
    let (ga, gb) = grid.interval();
    let slack = 1e-12 * (b - a);
    if !matches!(spec.form(), CovarianceForm::ExplicitMatrix(_)) && (ga < a - slack || gb > b + slack) {
        return Err(Error::GridMismatch(format!(
            "grid [{ga}, {gb}] is not inside the covariance domain [{a}, {b}]"
        )));
    }
    spec.eval_matrix(grid.nodes())
}

/// Eigenvalues, descending, of the weighted eigenproblem
/// `W^{1/2} K W^{1/2} v = λ v` on `grid`.
pub fn weighted_eigenvalues(k: &DMatrix<f64>, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    ensure_symmetric(k, SYMMETRY_TOL)?;
    if k.nrows() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: k.nrows(),
        });
    }
    let kw = weight_similarity(k, &grid.sqrt_weights());
    Ok(sym_eigen_desc(&kw).values.iter().copied().collect())
}

/// Smallest weighted eigenvalue over the largest. Values below `-PSD_TOL`
/// mean the discretization is not positive semidefinite.
pub fn psd_defect(k: &DMatrix<f64>, grid: &QuadratureGrid) -> Result<f64> {
    let ev = weighted_eigenvalues(k, grid)?;
    let top = ev.first().copied().unwrap_or(0.0);
    let bottom = ev.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0.0);
    }
    Ok(bottom / top)
}

/// Number of weighted eigenvalues above `relative_tol * λ_1`. Eigenvalues
/// below the rounding floor of the eigensolver are never counted.
pub fn covariance_numerical_rank(
    k: &DMatrix<f64>,
    grid: &QuadratureGrid,
    relative_tol: f64,
) -> Result<usize> {
    if !(relative_tol > 0.0 && relative_tol < 1.0) {
        return Err(Error::invalid(format!(
            "relative tolerance must lie in (0, 1), got {relative_tol}"
        )));
    }
    let ev = weighted_eigenvalues(k, grid)?;
    Ok(numerical_rank(&ev, relative_tol, k.nrows()))
}
