//! Randomized SVD of a discretized inverse differential operator, with the
//! identity and a Laplacian Green's function as sketch covariances.

use gsketch_core::covariance::CovarianceSpec;
use gsketch_core::linalg::{mean_std, pivoted_qr, singular_values_desc};
use gsketch_core::sampling::{draw_mvn_matrix, FactoredCovariance, RandomSource};
use gsketch_core::sketch::{project_error, svd_tail, RANGE_DROP_TOL};
use gsketch_core::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::output::write_csv;

/// Smallest grid that still resolves `sin(5πx)`.
pub const MIN_N: usize = 50;
pub const DEFAULT_N: usize = 500;

// Errors below this fraction of ‖A‖_F are rounding noise; both numerator
// and denominator of a ratio are floored there.
const RATIO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct MatrixPriorRow {
    pub samples: usize,
    pub mean_ratio_identity: f64,
    pub std_identity: f64,
    pub mean_ratio_prior: f64,
    pub std_prior: f64,
}

/// Interior nodes `i/(n+1)` of `[0, 1]`.
pub fn interior_nodes(n: usize) -> Vec<f64> {
    let h = 1.0 / (n + 1) as f64;
    (1..=n).map(|i| i as f64 * h).collect()
}

/// Inverse of the central-difference discretization of
/// `u'' - 100 sin(5πx) u` with zero Dirichlet data on `[0, 1]`.
pub fn inverse_operator(n: usize) -> Result<DMatrix<f64>> {
    if n < MIN_N {
        return Err(Error::config(format!("n = {n} cannot resolve sin(5πx); use n >= {MIN_N}")));
    }
    let x = interior_nodes(n);
    let h2 = {
        let h = 1.0 / (n + 1) as f64;
        h * h
    };
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = -2.0 / h2 - 100.0 * (5.0 * std::f64::consts::PI * x[i]).sin();
        if i > 0 {
            l[(i, i - 1)] = 1.0 / h2;
        }
        if i + 1 < n {
            l[(i, i + 1)] = 1.0 / h2;
        }
    }
    l.try_inverse()
        .ok_or_else(|| Error::Numerical("discretized operator is singular".into()))
}

/// Roughly log-spaced sample counts from 1 to `n`, always including `n`.
pub fn sample_counts(n: usize) -> Vec<usize> {
    let steps = 30;
    let top = (n as f64).ln();
    let mut out: Vec<usize> = (0..=steps)
        .map(|i| (top * i as f64 / steps as f64).exp().round() as usize)
        .map(|c| c.clamp(1, n))
        .collect();
    out.dedup();
    out
}

/// Laplacian Green's function with `n` terms at the interior nodes.
pub fn green_prior(n: usize) -> Result<FactoredCovariance> {
    let spec = CovarianceSpec::laplace_green(n)?;
    let x = interior_nodes(n);
    let basis = spec.mercer_basis(&x)?.expect("Mercer form");
    let lambdas = spec.mercer_eigenvalues().expect("Mercer form");
    Ok(FactoredCovariance::from_mercer(basis, &lambdas)?)
}

fn identity_prior(n: usize) -> Result<FactoredCovariance> {
    Ok(FactoredCovariance::from_mercer(DMatrix::identity(n, n), &vec![1.0; n])?)
}

// Error ratios for every count, one trial. Draws are prefix-stable, so the
// sketch with `c` columns is the first `c` columns of the largest one.
fn trial_ratios(
    a: &DMatrix<f64>,
    sigma: &[f64],
    fac: &FactoredCovariance,
    counts: &[usize],
    rng: RandomSource,
) -> Result<Vec<f64>> {
    let floor = RATIO_FLOOR * a.norm();
    let max = *counts.last().unwrap_or(&0);
    let y = a * draw_mvn_matrix(fac, rng, max);
    counts
        .iter()
        .map(|&c| {
            let q = pivoted_qr(&y.columns(0, c).clone_owned(), RANGE_DROP_TOL).q;
            let err = project_error(a, &q)?;
            let best = svd_tail(sigma, c)?;
            Ok(err.max(floor) / best.max(floor))
        })
        .collect()
}

/// Mean and standard deviation over `trials` of the error ratio for each
/// sample count. Both covariances see the same standard normals in a given
/// trial.
pub fn matrix_prior(n: usize, counts: &[usize], trials: usize, seed: u64) -> Result<Vec<MatrixPriorRow>> {
    if counts.iter().any(|&c| c == 0 || c > n) {
        return Err(Error::config(format!("sample counts must lie in 1..={n}")));
    }
    let a = inverse_operator(n)?;
    let sigma = singular_values_desc(&a);
    let id = identity_prior(n)?;
    let prior = green_prior(n)?;
    let root = RandomSource::new(seed);
    let per_trial: Vec<(Vec<f64>, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let src = root.substream(t as u64);
            Ok((
                trial_ratios(&a, &sigma, &id, counts, src)?,
                trial_ratios(&a, &sigma, &prior, counts, src)?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &samples)| {
            let ids: Vec<f64> = per_trial.iter().map(|(r, _)| r[i]).collect();
            let prs: Vec<f64> = per_trial.iter().map(|(_, r)| r[i]).collect();
            let (mi, si) = mean_std(&ids);
            let (mp, sp) = mean_std(&prs);
            MatrixPriorRow {
                samples,
                mean_ratio_identity: mi,
                std_identity: si,
                mean_ratio_prior: mp,
                std_prior: sp,
            }
        })
        .collect())
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<MatrixPriorRow>> {
    let n = cfg.n.unwrap_or(DEFAULT_N);
    let mut counts = sample_counts(n);
    if let Some(k) = cfg.k_max {
        counts.retain(|&c| c <= k);
    }
    let rows = matrix_prior(n, &counts, cfg.trials, cfg.seed)?;
    write_csv(&cfg.out, &cfg.header_json(), &rows)?;
    Ok(rows)
}
