//! Multivariate Gaussian draws and Gaussian-process sample paths.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::{discretize_covariance, CovarianceSpec, EigenSequence, SYMMETRY_TOL};
use crate::linalg::{ensure_symmetric, scale_cols, sym_eigen_desc};
use crate::quadrature::QuadratureGrid;
use crate::{Error, Result};

/// Eigenvalues below `-INDEFINITE_TOL * λ_1` are treated as a genuinely
/// indefinite covariance rather than rounding.
pub const INDEFINITE_TOL: f64 = 1e-6;

/// Seed plus stream identifier for a ChaCha8 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Independent child source for trial `index`, e.g. one per Monte-Carlo
    /// trial, so results do not depend on the order trials run in.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(1))),
        }
    }
}

/// `K = basis · diag(sqrt_eigenvalues²) · basisᵀ`.
#[derive(Debug, Clone)]
pub struct FactoredCovariance {
    basis: DMatrix<f64>,
    sqrt_eigenvalues: Vec<f64>,
    covariance: DMatrix<f64>,
}

impl FactoredCovariance {
    /// Factorization from an explicit Mercer expansion: `basis` holds the
    /// basis functions at the nodes (one column per term) and `lambdas` the
    /// nonincreasing weights.
    pub fn from_mercer(basis: DMatrix<f64>, lambdas: &[f64]) -> Result<Self> {
        if basis.ncols() != lambdas.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.ncols(),
                got: lambdas.len(),
            });
        }
        if lambdas.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::invalid("Mercer weights must be nonnegative"));
        }
        let sqrt_eigenvalues: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
        let scaled = scale_cols(&basis, lambdas);
        let covariance = scaled * basis.transpose();
        Ok(Self {
            basis,
            sqrt_eigenvalues,
            covariance,
        })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn sqrt_eigenvalues(&self) -> &[f64] {
        &self.sqrt_eigenvalues
    }

    /// The covariance matrix this factorization represents.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Dimension of each draw.
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Number of independent normals consumed per draw.
    pub fn terms(&self) -> usize {
        self.sqrt_eigenvalues.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let sq: Vec<f64> = self.sqrt_eigenvalues.iter().map(|s| s * s).collect();
        scale_cols(&self.basis, &sq) * self.basis.transpose()
    }

    fn effective_terms(&self) -> usize {
        self.sqrt_eigenvalues
            .iter()
            .rposition(|&s| s > 0.0)
            .map_or(0, |i| i + 1)
    }
}

/// Eigen-factorization of a symmetric PSD matrix.
///
/// Eigenvalues are sorted descending with the sign of each eigenvector fixed
/// by its largest entry. Negative eigenvalues are clamped to zero, and so are
/// positive ones below `ε·λ_1`, which the eigensolver cannot resolve.
pub fn factor_covariance(k: &DMatrix<f64>) -> Result<FactoredCovariance> {
    ensure_symmetric(k, SYMMETRY_TOL)?;
    let eig = sym_eigen_desc(k);
    let n = k.nrows();
    let top = eig.values.get(0).copied().unwrap_or(0.0).max(0.0);
    let bottom = eig.values.get(n.wrapping_sub(1)).copied().unwrap_or(0.0);
    if bottom < -INDEFINITE_TOL * top || (top == 0.0 && bottom < 0.0) {
        return Err(Error::Indefinite {
            min: bottom,
            max: top,
        });
    }
    let floor = f64::EPSILON * top;
    let sqrt_eigenvalues = eig
        .values
        .iter()
        .map(|&l| if l > floor { l.sqrt() } else { 0.0 })
        .collect();
    Ok(FactoredCovariance {
        basis: eig.vectors,
        sqrt_eigenvalues,
        covariance: k.clone(),
    })
}

/// `count` i.i.d. draws from `N(0, K)` as the columns of a `dim × count`
/// matrix. Column `j` only depends on the `j`-th block of the stream, so
/// the first columns of a larger draw equal a smaller draw.
pub fn draw_mvn_matrix(fac: &FactoredCovariance, rng: RandomSource, count: usize) -> DMatrix<f64> {
    let mut g = rng.rng();
    draw_with(fac, &mut g, count)
}

pub(crate) fn draw_with<R: Rng + ?Sized>(
    fac: &FactoredCovariance,
    rng: &mut R,
    count: usize,
) -> DMatrix<f64> {
    let r = fac.terms();
    let used = fac.effective_terms();
    let mut coeffs = DMatrix::zeros(used, count);
    for j in 0..count {
        for i in 0..r {
            let z: f64 = rng.sample(StandardNormal);
            if i < used {
                coeffs[(i, j)] = fac.sqrt_eigenvalues[i] * z;
            }
        }
    }
    if used == 0 {
        return DMatrix::zeros(fac.dim(), count);
    }
    fac.basis.columns(0, used) * coeffs
}

/// Draws grid values of `GP(0, K)` for a fixed covariance and grid.
///
/// Mercer-form covariances are sampled through their own expansion
/// `u = sum_j √λ_j c_j ψ_j`; other forms through an eigen-factorization of
/// the kernel matrix at the nodes.
#[derive(Debug, Clone)]
pub struct GpSampler {
    factor: FactoredCovariance,
}

impl GpSampler {
    pub fn new(spec: &CovarianceSpec, grid: &QuadratureGrid) -> Result<Self> {
        let factor = match (spec.mercer_basis(grid.nodes())?, spec.mercer_eigenvalues()) {
            (Some(basis), Some(lambdas)) => FactoredCovariance::from_mercer(basis, &lambdas)?,
            _ => factor_covariance(&discretize_covariance(spec, grid)?)?,
        };
        Ok(Self { factor })
    }

    pub fn from_factor(factor: FactoredCovariance) -> Self {
        Self { factor }
    }

    pub fn factor(&self) -> &FactoredCovariance {
        &self.factor
    }

    pub fn sample(&self, rng: RandomSource) -> DVector<f64> {
        self.sample_many(rng, 1).column(0).clone_owned()
    }

    /// `count` independent sample paths as columns.
    pub fn sample_many(&self, rng: RandomSource, count: usize) -> DMatrix<f64> {
        draw_mvn_matrix(&self.factor, rng, count)
    }
}

/// Grid values of one draw from `GP(0, K)`.
pub fn sample_gp_function(
    spec: &CovarianceSpec,
    grid: &QuadratureGrid,
    rng: RandomSource,
) -> Result<DVector<f64>> {
    Ok(GpSampler::new(spec, grid)?.sample(rng))
}

/// Sup-norm bound `S_n = 2√M sum_{j=n+2}^{N} |c_{j-1}| j^{(1-ν)/2}` on the
/// truncation error of a weighted Jacobi (`α = 2`) expansion with
/// coefficients `c_0..c_{N-1}`, assuming `λ_{j} <= M j^{-ν}`.
///
/// The partial sum `f_n` keeps the terms `j = 0..=n`; the bound covers
/// everything the finite draw `coeffs` contributes beyond that.
pub fn truncation_tail_sup_with(nu: f64, m: f64, n: usize, coeffs: &[f64]) -> Result<f64> {
    if !(nu > 1.0) {
        return Err(Error::invalid(format!("decay exponent must exceed 1, got {nu}")));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::invalid(format!("bound constant must be finite and nonnegative, got {m}")));
    }
    let expo = 0.5 * (1.0 - nu);
    let mut sum = 0.0;
    // Smallest terms first.
    for j in ((n + 2)..=coeffs.len()).rev() {
        sum += coeffs[j - 1].abs() * (j as f64).powf(expo);
    }
    Ok(2.0 * m.sqrt() * sum)
}

/// [`truncation_tail_sup_with`] for a power-law sequence, with `M` taken as
/// `max_j λ_j j^ν` over the realized sequence.
pub fn truncation_tail_sup(seq: &EigenSequence, n: usize, coeffs: &[f64]) -> Result<f64> {
    let (m, nu) = seq
        .power_law_constant()
        .ok_or_else(|| Error::invalid("tail bound needs a power-law eigenvalue sequence"))?;
    truncation_tail_sup_with(nu, m, n, coeffs)
}

/// `sum_{j=0}^{n} √λ_{j+1} c_j w^{1/2}P̃_j(x)` at each of `xs`.
pub fn jacobi_partial_sum(
    alpha: u32,
    seq: &EigenSequence,
    coeffs: &[f64],
    n: usize,
    xs: &[f64],
) -> Result<Vec<f64>> {
    let terms = (n + 1).min(coeffs.len()).min(seq.len());
    let lambdas = seq.values();
    let mut out = vec![0.0; xs.len()];
    for (o, &x) in out.iter_mut().zip(xs) {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::OutsideDomain { x, a: -1.0, b: 1.0 });
        }
        let basis = crate::covariance::weighted_jacobi_all(terms, alpha, x);
        *o = (0..terms).map(|j| lambdas[j].sqrt() * coeffs[j] * basis[j]).sum();
    }
    Ok(out)
}

/// Standard normal coefficients from `rng`, the same ones a Mercer draw of
/// that length would use.
pub fn standard_normals(rng: RandomSource, count: usize) -> Vec<f64> {
    let mut g = rng.rng();
    (0..count).map(|_| g.sample(StandardNormal)).collect()
}
