//! Randomized low-rank approximation of Hilbert–Schmidt integral operators
//! `(F f)(x) = ∫ G(x, y) f(y) dy`, discretized on quadrature grids.
//!
//! Functions are stored by their values at grid nodes and inner products use
//! the quadrature weights, so a column of values behaves like a function in
//! L². Random inputs are Gaussian-process draws on the `y` grid.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::covariance::CovarianceSpec;
use crate::linalg::{
    numerical_rank, pivoted_qr_with, scale_cols, scale_rows, singular_values_desc, svd_desc, weight_similarity, DropScale,
};
use crate::quadrature::QuadratureGrid;
use crate::sampling::{GpSampler, RandomSource};
use crate::{Error, Result};

/// Relative threshold used for numerical ranks of kernels.
pub const MACHINE_RANK_TOL: f64 = 1.0 / 4_503_599_627_370_496.0; // 2^-52

/// Relative pivot size below which sampled outputs are dropped as dependent.
pub const QR_DROP_TOL: f64 = 1e-12;

/// Largest `|x|` accepted by [`bessel_j0`].
pub const BESSEL_ENVELOPE: f64 = 1e4;

/// Bessel function `J_0(x) = (1/π) ∫_0^π cos(x sin t) dt`.
///
/// The integrand is smooth and π-periodic, so the trapezoid rule with
/// `⌈8 + 1.5|x|⌉` intervals converges to rounding level.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !(x.abs() <= BESSEL_ENVELOPE) {
        return Err(Error::OutOfEnvelope(x));
    }
    let m = (8.0 + 1.5 * x.abs()).ceil() as usize;
    let h = core::f64::consts::PI / m as f64;
    // Symmetric about π/2: pair node i with m - i.
    let mut sum = 1.0; // t = 0
    let mut i = 1;
    while 2 * i < m {
        sum += 2.0 * (x * (h * i as f64).sin()).cos();
        i += 1;
    }
    if m.is_multiple_of(2) {
        sum += x.cos(); // t = π/2
    }
    Ok(sum / m as f64)
}

/// Kernels with closed forms on `[-1, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKernel {
    /// `cos(10(x² + y)) sin(10(x + y²))`.
    CosSin,
    /// `J_0(100(xy + y²))`.
    Bessel,
}

impl BuiltinKernel {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinKernel::CosSin => "cossin",
            BuiltinKernel::Bessel => "bessel",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "cossin" => Ok(BuiltinKernel::CosSin),
            "bessel" => Ok(BuiltinKernel::Bessel),
            other => Err(Error::invalid(format!("unknown builtin kernel {other:?}"))),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            BuiltinKernel::CosSin => Ok((10.0 * (x * x + y)).cos() * (10.0 * (x + y * y)).sin()),
            BuiltinKernel::Bessel => bessel_j0(100.0 * (x * y + y * y)),
        }
    }
}

/// Where the values of a [`DiscretizedKernel`] came from.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelProvenance {
    Builtin(BuiltinKernel),
    Tabulated(String),
}

/// Kernel values `G(x_i, y_j)`, rows indexed by the `x` grid.
#[derive(Debug, Clone)]
pub struct DiscretizedKernel {
    grid_x: QuadratureGrid,
    grid_y: QuadratureGrid,
    values: DMatrix<f64>,
    provenance: KernelProvenance,
}

impl DiscretizedKernel {
    pub fn builtin(kernel: BuiltinKernel, grid_x: QuadratureGrid, grid_y: QuadratureGrid) -> Result<Self> {
        let mut values = DMatrix::zeros(grid_x.len(), grid_y.len());
        for (j, &y) in grid_y.nodes().iter().enumerate() {
            for (i, &x) in grid_x.nodes().iter().enumerate() {
                values[(i, j)] = kernel.eval(x, y)?;
            }
        }
        Ok(Self {
            grid_x,
            grid_y,
            values,
            provenance: KernelProvenance::Builtin(kernel),
        })
    }

    /// Kernel given by its values; the grids are used as declared.
    pub fn tabulated(
        grid_x: QuadratureGrid,
        grid_y: QuadratureGrid,
        values: DMatrix<f64>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if values.nrows() != grid_x.len() {
            return Err(Error::DimensionMismatch {
                expected: grid_x.len(),
                got: values.nrows(),
            });
        }
        if values.ncols() != grid_y.len() {
            return Err(Error::DimensionMismatch {
                expected: grid_y.len(),
                got: values.ncols(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("kernel values must be finite"));
        }
        Ok(Self {
            grid_x,
            grid_y,
            values,
            provenance: KernelProvenance::Tabulated(source.into()),
        })
    }

    pub fn grid_x(&self) -> &QuadratureGrid {
        &self.grid_x
    }

    pub fn grid_y(&self) -> &QuadratureGrid {
        &self.grid_y
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn provenance(&self) -> &KernelProvenance {
        &self.provenance
    }

    /// `G W_y F` for a block of functions on the `y` grid.
    pub fn apply_block(&self, f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if f.nrows() != self.grid_y.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid_y.len(),
                got: f.nrows(),
            });
        }
        Ok(&self.values * scale_rows(f, self.grid_y.weights()))
    }

    /// `Gᵀ W_x Q` for a block of functions on the `x` grid.
    pub fn apply_adjoint_block(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if q.nrows() != self.grid_x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid_x.len(),
                got: q.nrows(),
            });
        }
        Ok(self.values.tr_mul(&scale_rows(q, self.grid_x.weights())))
    }

    /// `‖G‖` in L²(x) ⊗ L²(y).
    pub fn l2_norm(&self) -> f64 {
        weighted_fro(&self.values, &self.grid_x, &self.grid_y)
    }

    /// SVD of the operator, in weighted coordinates.
    pub fn svd(&self) -> KernelSvd {
        let scaled = scale_cols(
            &scale_rows(&self.values, &self.grid_x.sqrt_weights()),
            &self.grid_y.sqrt_weights(),
        );
        let svd = svd_desc(&scaled);
        KernelSvd {
            x_basis: svd.u,
            y_basis: svd.v,
            singular_values: svd.singular_values,
        }
    }

    /// Singular values of the operator, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let scaled = scale_cols(
            &scale_rows(&self.values, &self.grid_x.sqrt_weights()),
            &self.grid_y.sqrt_weights(),
        );
        singular_values_desc(&scaled)
    }

    /// Number of singular values above `rel_tol · σ_1`, never counting values
    /// below the rounding floor of the decomposition.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let s = self.singular_values();
        numerical_rank(&s, rel_tol, self.grid_x.len().max(self.grid_y.len()))
    }
}

fn weighted_fro(m: &DMatrix<f64>, gx: &QuadratureGrid, gy: &QuadratureGrid) -> f64 {
    let wx = gx.weights();
    let wy = gy.weights();
    let mut s = 0.0;
    for j in 0..m.ncols() {
        let mut col = 0.0;
        for i in 0..m.nrows() {
            col += wx[i] * m[(i, j)] * m[(i, j)];
        }
        s += wy[j] * col;
    }
    s.sqrt()
}

/// `(F f)(x_i) = sum_j w_j G(x_i, y_j) f(y_j)`.
pub fn apply_operator(kernel: &DiscretizedKernel, f: &[f64]) -> Result<Vec<f64>> {
    let block = DMatrix::from_column_slice(f.len(), 1, f);
    Ok(kernel.apply_block(&block)?.iter().copied().collect())
}

/// `(F_t q)(y_j) = sum_i w_i G(x_i, y_j) q(x_i)`.
pub fn apply_adjoint(kernel: &DiscretizedKernel, q: &[f64]) -> Result<Vec<f64>> {
    let block = DMatrix::from_column_slice(q.len(), 1, q);
    Ok(kernel.apply_adjoint_block(&block)?.iter().copied().collect())
}

/// Singular functions and values of a discretized operator. The bases hold
/// coefficient vectors `W^{1/2} u` with Euclidean-orthonormal columns.
#[derive(Debug, Clone)]
pub struct KernelSvd {
    pub x_basis: DMatrix<f64>,
    pub y_basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

/// Which side of the kernel a singular basis lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSide {
    X,
    Y,
}

impl KernelSvd {
    /// `√(sum_{j>k} σ_j²) / ‖G‖`.
    pub fn best_error_rel(&self, k: usize) -> f64 {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        if total == 0.0 {
            return 0.0;
        }
        if k == 0 {
            return 1.0;
        }
        let k = k.min(self.singular_values.len());
        let tail: f64 = self.singular_values[k..].iter().rev().map(|s| s * s).sum();
        (tail / total).sqrt()
    }

    /// `γ_k` of a covariance, given by its kernel matrix `cov` at the nodes
    /// of `grid`, against the leading `k` singular functions on `side`.
    pub fn gamma_k(&self, side: KernelSide, cov: &DMatrix<f64>, grid: &QuadratureGrid, k: usize) -> Result<f64> {
        let basis = match side {
            KernelSide::X => &self.x_basis,
            KernelSide::Y => &self.y_basis,
        };
        if basis.nrows() != grid.len() || cov.nrows() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.nrows(),
                got: cov.nrows(),
            });
        }
        if k == 0 || k > basis.ncols() {
            return Err(Error::invalid(format!("k = {k} outside 1..={}", basis.ncols())));
        }
        let kw = weight_similarity(cov, &grid.sqrt_weights());
        crate::sketch::gamma_k(&kw, &basis.columns(0, k).clone_owned())
    }
}

/// Columns orthonormal under `sum_i w_i f_i g_i` spanning the columns of
/// `y`. Nearly dependent columns (pivot below `1e-12` of the largest
/// weighted column norm) are dropped.
pub fn weighted_qr(y: &DMatrix<f64>, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    if y.nrows() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: y.nrows(),
        });
    }
    let sw = grid.sqrt_weights();
    let qr = pivoted_qr_with(&scale_rows(y, &sw), QR_DROP_TOL, DropScale::LeadingPivot);
    // Restore input column order among the kept columns, so an orthonormal
    // input comes back unchanged up to signs.
    let mut order: Vec<usize> = (0..qr.rank()).collect();
    order.sort_by_key(|&i| qr.pivots[i]);
    let inv: Vec<f64> = sw.iter().map(|s| 1.0 / s).collect();
    let mut q = DMatrix::zeros(y.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..y.nrows() {
            q[(i, dst)] = qr.q[(i, src)] * inv[i];
        }
    }
    Ok(q)
}

/// `G_k(x, y) = sum_i q_i(x) (F_t q_i)(y)`.
#[derive(Debug, Clone)]
pub struct LearnedKernel {
    /// Weighted-orthonormal functions on the `x` grid.
    pub q: DMatrix<f64>,
    /// Row `i` holds `F_t q_i` on the `y` grid.
    pub b: DMatrix<f64>,
    grid_x: QuadratureGrid,
    grid_y: QuadratureGrid,
}

impl LearnedKernel {
    pub fn grid_x(&self) -> &QuadratureGrid {
        &self.grid_x
    }

    pub fn grid_y(&self) -> &QuadratureGrid {
        &self.grid_y
    }

    /// Number of basis functions `q_i`.
    pub fn columns(&self) -> usize {
        self.q.ncols()
    }

    /// Tabulated values of `G_k`.
    pub fn values(&self) -> DMatrix<f64> {
        if self.q.ncols() == 0 {
            return DMatrix::zeros(self.grid_x.len(), self.grid_y.len());
        }
        &self.q * &self.b
    }

    /// Singular values of `G_k`, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        // Q is orthonormal in L²(x), so G_k shares its singular values with B.
        singular_values_desc(&scale_cols(&self.b, &self.grid_y.sqrt_weights()))
    }

    /// Numerical rank of `G_k` at relative threshold `rel_tol`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        numerical_rank(
            &self.singular_values(),
            rel_tol,
            self.grid_x.len().max(self.grid_y.len()),
        )
    }

    /// The learned kernel as a tabulated kernel on the same grids.
    pub fn to_kernel(&self, source: impl Into<String>) -> Result<DiscretizedKernel> {
        DiscretizedKernel::tabulated(self.grid_x.clone(), self.grid_y.clone(), self.values(), source)
    }
}

/// Learns a rank `<= k` approximation of the operator from `k` random input
/// functions drawn from `GP(0, cov)` on the `y` grid.
pub fn hs_randomized_svd(
    kernel: &DiscretizedKernel,
    cov: &CovarianceSpec,
    k: usize,
    rng: RandomSource,
) -> Result<LearnedKernel> {
    let (a, b) = cov.domain();
    let (ya, yb) = kernel.grid_y().interval();
    let slack = 1e-12 * (b - a);
    if (ya - a).abs() > slack || (yb - b).abs() > slack {
        return Err(Error::GridMismatch(format!(
            "covariance domain [{a}, {b}] does not match the input grid [{ya}, {yb}]"
        )));
    }
    let sampler = GpSampler::new(cov, kernel.grid_y())?;
    hs_randomized_svd_with(kernel, &sampler, k, rng)
}

/// [`hs_randomized_svd`] with a prepared sampler on the `y` grid, so the
/// covariance is factored once across many runs.
pub fn hs_randomized_svd_with(
    kernel: &DiscretizedKernel,
    sampler: &GpSampler,
    k: usize,
    rng: RandomSource,
) -> Result<LearnedKernel> {
    if sampler.factor().dim() != kernel.grid_y().len() {
        return Err(Error::GridMismatch(format!(
            "sampler produces {} values, input grid has {} nodes",
            sampler.factor().dim(),
            kernel.grid_y().len()
        )));
    }
    let omega = sampler.sample_many(rng, k);
    let y = kernel.apply_block(&omega)?;
    learn_from_outputs(kernel, &y)
}

/// Finishes the approximation from sampled outputs `Y = [F f_1, ..., F f_k]`
/// on the `x` grid: orthonormalizes them and applies the adjoint to each
/// basis function. Because sample draws are prefix-stable, the first `j`
/// columns of one large `Y` give the rank-`j` run with the same source.
pub fn learn_from_outputs(kernel: &DiscretizedKernel, y: &DMatrix<f64>) -> Result<LearnedKernel> {
    let q = weighted_qr(y, kernel.grid_x())?;
    let b = kernel.apply_adjoint_block(&q)?.transpose();
    Ok(LearnedKernel {
        q,
        b,
        grid_x: kernel.grid_x().clone(),
        grid_y: kernel.grid_y().clone(),
    })
}

/// Absolute and relative L² distance between a kernel and its approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Error {
    pub abs: f64,
    pub rel: f64,
}

/// `√(sum_ij w_i w_j (G_ij - G_k,ij)²)` and its ratio to `‖G‖`.
pub fn l2_error(kernel: &DiscretizedKernel, learned: &LearnedKernel) -> Result<L2Error> {
    if !kernel.grid_x().same_as(learned.grid_x()) || !kernel.grid_y().same_as(learned.grid_y()) {
        return Err(Error::GridMismatch("learned kernel lives on different grids".into()));
    }
    let diff = kernel.values() - learned.values();
    let abs = weighted_fro(&diff, kernel.grid_x(), kernel.grid_y());
    let nrm = kernel.l2_norm();
    Ok(L2Error {
        abs,
        rel: if nrm > 0.0 { abs / nrm } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GridFamily;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cc(n: usize) -> QuadratureGrid {
        QuadratureGrid::new(GridFamily::ChebyshevCC, n, -1.0, 1.0).unwrap()
    }

    // Midpoint rule with ten times the nodes of the production rule.
    fn j0_oracle(x: f64) -> f64 {
        let m = 10 * (8.0 + 1.5 * x.abs()).ceil() as usize;
        let h = std::f64::consts::PI / m as f64;
        (0..m).map(|i| (x * (h * (i as f64 + 0.5)).sin()).cos()).sum::<f64>() / m as f64
    }

    #[test]
    fn bessel_values() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = rng.random::<f64>() * 400.0;
            assert_eq!(bessel_j0(x).unwrap(), bessel_j0(-x).unwrap());
            assert!((bessel_j0(x).unwrap() - j0_oracle(x)).abs() < 1e-12);
        }
        assert!(bessel_j0(2e4).is_err());
        assert!(bessel_j0(f64::NAN).is_err());
        // power series, fine for small arguments
        for &x in &[0.5, 1.0, 3.0] {
            let mut term = 1.0;
            let mut s = 1.0;
            for m in 1..40 {
                term *= -(x * x / 4.0) / (m * m) as f64;
                s += term;
            }
            assert!((bessel_j0(x).unwrap() - s).abs() < 1e-14);
        }
    }

    #[test]
    fn bessel_first_root() {
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j0_oracle(lo) * j0_oracle(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - 2.40482555769577).abs() < 1e-12);
        assert!(bessel_j0(root).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn builtin_values() {
        assert_eq!(BuiltinKernel::CosSin.eval(0.0, 0.0).unwrap(), 0.0);
        for &x in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(BuiltinKernel::Bessel.eval(x, 0.0).unwrap(), 1.0);
        }
        assert!(BuiltinKernel::from_name("airy").is_err());
        assert_eq!(BuiltinKernel::from_name("bessel").unwrap().name(), "bessel");
    }

    #[test]
    fn operator_examples() {
        let g = cc(30);
        let ones = DiscretizedKernel::tabulated(g.clone(), g.clone(), DMatrix::from_element(30, 30, 1.0), "ones").unwrap();
        let out = apply_operator(&ones, &[1.0; 30]).unwrap();
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-10));
        assert!(apply_operator(&ones, &[0.0; 30]).unwrap().iter().all(|&v| v == 0.0));
        assert!(apply_operator(&ones, &[0.0; 29]).is_err());

        let a: Vec<f64> = g.nodes().iter().map(|x| x.cos()).collect();
        let b: Vec<f64> = g.nodes().iter().map(|x| 1.0 + x * x).collect();
        let f: Vec<f64> = g.nodes().iter().map(|x| x.exp()).collect();
        let sep = DMatrix::from_fn(30, 30, |i, j| a[i] * b[j]);
        let k = DiscretizedKernel::tabulated(g.clone(), g.clone(), sep, "sep").unwrap();
        let out = apply_operator(&k, &f).unwrap();
        let ip = g.inner(&b, &f);
        for i in 0..30 {
            assert!((out[i] - a[i] * ip).abs() < 1e-10);
        }
    }

    #[test]
    fn adjoint_identity() {
        let g = cc(200);
        let k = DiscretizedKernel::builtin(BuiltinKernel::CosSin, g.clone(), g.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let f: Vec<f64> = (0..200).map(|_| rng.random::<f64>() - 0.5).collect();
            let h: Vec<f64> = (0..200).map(|_| rng.random::<f64>() - 0.5).collect();
            let lhs = g.inner(&apply_operator(&k, &f).unwrap(), &h);
            let rhs = g.inner(&f, &apply_adjoint(&k, &h).unwrap());
            worst = worst.max((lhs - rhs).abs());
        }
        assert!(worst <= 1e-10);
        assert!(apply_adjoint(&k, &[0.0; 200]).unwrap().iter().all(|&v| v == 0.0));

        let sym = DMatrix::from_fn(200, 200, |i, j| (g.nodes()[i] * g.nodes()[j]).cos());
        let s = DiscretizedKernel::tabulated(g.clone(), g.clone(), sym, "sym").unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| x.exp()).collect();
        let a = apply_operator(&s, &f).unwrap();
        let b = apply_adjoint(&s, &f).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-13));
    }

    #[test]
    fn weighted_qr_examples() {
        let g = cc(40);
        let f: Vec<f64> = g.nodes().iter().map(|x| 1.0 + x).collect();
        let q = weighted_qr(&DMatrix::from_column_slice(40, 1, &f), &g).unwrap();
        let nrm = g.norm(&f);
        let sign = q[(20, 0)].signum();
        for i in 0..40 {
            assert!((sign * q[(i, 0)] - f[i] / nrm).abs() < 1e-12);
        }

        let y = DMatrix::from_fn(40, 10, |i, j| (g.nodes()[i] * (j + 1) as f64).sin() + 0.1 * j as f64);
        let q = weighted_qr(&y, &g).unwrap();
        let gram = q.transpose() * scale_rows(&q, g.weights());
        assert!((gram - DMatrix::identity(10, 10)).amax() <= 1e-10);

        let again = weighted_qr(&q, &g).unwrap();
        for j in 0..10 {
            let d1 = (again.column(j) - q.column(j)).amax();
            let d2 = (again.column(j) + q.column(j)).amax();
            assert!(d1.min(d2) < 1e-10);
        }

        let mut dep = y.clone();
        let c0 = dep.column(0).clone_owned();
        dep.set_column(3, &(c0 * 2.0));
        assert_eq!(weighted_qr(&dep, &g).unwrap().ncols(), 9);
    }

    #[test]
    fn learns_separable_kernel() {
        let g = cc(60);
        let sep = DMatrix::from_fn(60, 60, |i, j| g.nodes()[i].exp() * (2.0 * g.nodes()[j]).sin());
        let k = DiscretizedKernel::tabulated(g.clone(), g.clone(), sep, "sep").unwrap();
        let cov = CovarianceSpec::sq_exp(0.1, (-1.0, 1.0)).unwrap();
        let learned = hs_randomized_svd(&k, &cov, 3, RandomSource::new(2)).unwrap();
        assert_eq!(learned.columns(), 1);
        assert!(l2_error(&k, &learned).unwrap().rel <= 1e-10);
    }

    #[test]
    fn l2_error_oracles() {
        let g = cc(50);
        let k = DiscretizedKernel::builtin(BuiltinKernel::CosSin, g.clone(), g.clone()).unwrap();
        let empty = LearnedKernel {
            q: DMatrix::zeros(50, 0),
            b: DMatrix::zeros(0, 50),
            grid_x: g.clone(),
            grid_y: g.clone(),
        };
        let e = l2_error(&k, &empty).unwrap();
        assert!((e.abs - k.l2_norm()).abs() < 1e-14);
        assert!((e.rel - 1.0).abs() < 1e-14);

        let cov = CovarianceSpec::sq_exp(0.05, (-1.0, 1.0)).unwrap();
        let learned = hs_randomized_svd(&k, &cov, 6, RandomSource::new(3)).unwrap();
        let e = l2_error(&k, &learned).unwrap();
        let gk = learned.values();
        let mut brute = 0.0;
        for i in 0..50 {
            for j in 0..50 {
                let d = k.values()[(i, j)] - gk[(i, j)];
                brute += g.weights()[i] * g.weights()[j] * d * d;
            }
        }
        assert!((e.abs - brute.sqrt()).abs() < 1e-12);

        let exact = LearnedKernel {
            q: DMatrix::identity(50, 50),
            b: k.values().clone(),
            grid_x: g.clone(),
            grid_y: g.clone(),
        };
        assert_eq!(l2_error(&k, &exact).unwrap().abs, 0.0);
        let other = cc(51);
        let k2 = DiscretizedKernel::builtin(BuiltinKernel::CosSin, other.clone(), other).unwrap();
        assert!(l2_error(&k2, &exact).is_err());
    }

    #[test]
    fn covariance_domain_must_match() {
        let g = cc(20);
        let k = DiscretizedKernel::builtin(BuiltinKernel::CosSin, g.clone(), g).unwrap();
        let cov = CovarianceSpec::sq_exp(0.1, (0.0, 1.0)).unwrap();
        assert!(matches!(
            hs_randomized_svd(&k, &cov, 3, RandomSource::new(0)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn cossin_rank_is_grid_converged() {
        let r1 = DiscretizedKernel::builtin(BuiltinKernel::CosSin, cc(400), cc(400))
            .unwrap()
            .numerical_rank(MACHINE_RANK_TOL);
        let r2 = DiscretizedKernel::builtin(BuiltinKernel::CosSin, cc(800), cc(800))
            .unwrap()
            .numerical_rank(MACHINE_RANK_TOL);
        assert_eq!(r1, r2);
        assert_eq!(r1, 4);
    }

    #[test]
    fn learned_rank_matches_singular_values() {
        let g = cc(80);
        let k = DiscretizedKernel::builtin(BuiltinKernel::CosSin, g.clone(), g.clone()).unwrap();
        let cov = CovarianceSpec::sq_exp(0.1, (-1.0, 1.0)).unwrap();
        let learned = hs_randomized_svd(&k, &cov, 10, RandomSource::new(1)).unwrap();
        let direct = learned.to_kernel("learned").unwrap().singular_values();
        let cheap = learned.singular_values();
        for (a, b) in direct.iter().zip(&cheap) {
            assert!((a - b).abs() < 1e-12 * direct[0]);
        }
        assert_eq!(learned.numerical_rank(MACHINE_RANK_TOL), 4);
    }
}
