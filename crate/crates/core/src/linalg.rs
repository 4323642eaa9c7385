//! Dense helpers shared by the sketching and operator modules.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Symmetric eigendecomposition sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

/// Eigendecomposition of a symmetric matrix with a deterministic layout:
/// eigenvalues descending, and each eigenvector signed so that its
/// largest-magnitude entry (lowest index on ties) is positive.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> SortedEigen {
    let n = m.nrows();
    if n == 0 {
        return SortedEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut best = 0;
        for i in 1..n {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        let sign = if col[best] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    SortedEigen { values, vectors }
}

/// Largest entrywise asymmetry relative to the largest entry.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub(crate) fn ensure_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    ensure_square(m)?;
    let asym = relative_asymmetry(m);
    if asym > tol {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Relative level below which computed singular values or eigenvalues of an
/// `dim`-sized matrix are indistinguishable from rounding noise.
pub fn noise_floor(dim: usize) -> f64 {
    (dim.max(1) as f64).sqrt() * f64::EPSILON
}

/// Count of values exceeding `rel_tol * values[0]`, where `values` is sorted
/// descending. The threshold never drops below the rounding-noise floor of
/// a `dim`-sized decomposition, so unresolved noise is not counted as rank.
pub fn numerical_rank(values_desc: &[f64], rel_tol: f64, dim: usize) -> usize {
    let Some(&top) = values_desc.first() else {
        return 0;
    };
    if top <= 0.0 {
        return 0;
    }
    let threshold = rel_tol.max(noise_floor(dim)) * top;
    values_desc.iter().take_while(|&&v| v > threshold).count()
}

/// Thin orthonormal factor from a column-pivoted Householder QR.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Orthonormal columns spanning the retained part of the range.
    pub q: DMatrix<f64>,
    /// Original column index chosen at each step.
    pub pivots: Vec<usize>,
    /// Magnitudes of the retained diagonal entries of `R`.
    pub r_diag: Vec<f64>,
}

impl PivotedQr {
    pub fn rank(&self) -> usize {
        self.q.ncols()
    }
}

/// What the drop tolerance of [`pivoted_qr_with`] is relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropScale {
    /// `‖Y‖_F`.
    Frobenius,
    /// The first pivot `|R_11|`, the largest column norm of `Y`. Unlike
    /// `‖Y‖_F` it does not grow with the number of columns.
    LeadingPivot,
}

/// Householder QR with column pivoting. Elimination stops once the largest
/// remaining column norm falls to `drop_tol * ||Y||_F` or below; those
/// columns are treated as numerically dependent and dropped. Pivot ties go
/// to the lowest column index.
pub fn pivoted_qr(y: &DMatrix<f64>, drop_tol: f64) -> PivotedQr {
    pivoted_qr_with(y, drop_tol, DropScale::Frobenius)
}

/// [`pivoted_qr`] with the drop threshold taken relative to `scale`.
pub fn pivoted_qr_with(y: &DMatrix<f64>, drop_tol: f64, scale: DropScale) -> PivotedQr {
    let (m, n) = y.shape();
    let fro = y.norm();
    let mut a = y.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors: Vec<DVector<f64>> = Vec::new();
    let mut r_diag = Vec::new();
    let mut threshold = drop_tol * fro;

    if fro > 0.0 {
        for j in 0..m.min(n) {
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..n {
                let nrm = a.view((j, c), (m - j, 1)).norm();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = c;
                }
            }
            if j == 0 && scale == DropScale::LeadingPivot {
                threshold = drop_tol * best_norm;
            }
            if best_norm <= threshold {
                break;
            }
            if best != j {
                a.swap_columns(j, best);
                perm.swap(j, best);
            }
            let x = a.view((j, j), (m - j, 1)).clone_owned();
            let alpha = if x[0] >= 0.0 { -best_norm } else { best_norm };
            let mut v = DVector::from_column_slice(x.as_slice());
            v[0] -= alpha;
            let vn = v.norm();
            if vn > 0.0 {
                v /= vn;
                let mut sub = a.view_mut((j, j), (m - j, n - j));
                let w = sub.tr_mul(&v);
                sub.ger(-2.0, &v, &w, 1.0);
            }
            reflectors.push(v);
            r_diag.push(best_norm);
        }
    }

    let rank = reflectors.len();
    let mut q = DMatrix::zeros(m, rank);
    for i in 0..rank {
        q[(i, i)] = 1.0;
    }
    for (j, v) in reflectors.iter().enumerate().rev() {
        let mut sub = q.view_mut((j, 0), (m - j, rank));
        let w = sub.tr_mul(v);
        sub.ger(-2.0, v, &w, 1.0);
    }
    perm.truncate(rank);
    PivotedQr {
        q,
        pivots: perm,
        r_diag,
    }
}

/// `diag(d) * m`.
pub fn scale_rows(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, &s) in d.iter().enumerate() {
        out.row_mut(i).scale_mut(s);
    }
    out
}

/// `m * diag(d)`.
pub fn scale_cols(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, &s) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(s);
    }
    out
}

/// `diag(d) * m * diag(d)`, the symmetric similarity used for weighted
/// eigenproblems.
pub fn weight_similarity(m: &DMatrix<f64>, sqrt_w: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| sqrt_w[i] * m[(i, j)] * sqrt_w[j])
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    s
}

/// Thin SVD with singular values sorted descending and the singular vector
/// columns permuted to match.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: DMatrix<f64>,
}

pub fn svd_desc(m: &DMatrix<f64>) -> SortedSvd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let r = svd.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut su = DMatrix::zeros(u.nrows(), r);
    let mut sv = DMatrix::zeros(v_t.ncols(), r);
    let mut s = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &v_t.row(src).transpose());
        s.push(svd.singular_values[src]);
    }
    SortedSvd {
        u: su,
        singular_values: s,
        v: sv,
    }
}

/// Sample mean and sample standard deviation (n - 1 denominator).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
