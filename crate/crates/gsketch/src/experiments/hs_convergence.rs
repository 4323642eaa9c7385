//! Relative L² error of learned kernels as the number of samples grows.

use gsketch_core::covariance::CovarianceSpec;
use gsketch_core::hsop::{l2_error, learn_from_outputs, BuiltinKernel, DiscretizedKernel};
use gsketch_core::linalg::mean_std;
use gsketch_core::quadrature::{GridFamily, QuadratureGrid};
use gsketch_core::sampling::{GpSampler, RandomSource};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, NamedCovariance};
use crate::error::{Error, Result};
use crate::output::write_csv;
use crate::tabulated::read_kernel;

pub const DEFAULT_K_MAX: usize = 100;

/// Covariances compared when none is selected.
pub const DEFAULT_COVARIANCES: [(&str, Option<f64>, Option<f64>); 4] = [
    ("sqexp", Some(0.01), None),
    ("sqexp", Some(0.1), None),
    ("sqexp", Some(1.0), None),
    ("jacobi", None, Some(3.0)),
];

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub covariance: String,
    pub mean_rel_error: f64,
    pub std_rel_error: f64,
    pub best_rel_error: f64,
}

/// Grid size resolving a builtin kernel with room to spare.
pub fn default_grid_size(kernel: BuiltinKernel) -> usize {
    match kernel {
        BuiltinKernel::CosSin => 600,
        BuiltinKernel::Bessel => 1000,
    }
}

/// A builtin kernel on a Clenshaw–Curtis grid over `[-1, 1]²`, or a
/// tabulated kernel read from the file `name`.
pub fn load_kernel(name: &str, n: Option<usize>) -> Result<DiscretizedKernel> {
    if let Ok(b) = BuiltinKernel::from_name(name) {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, n.unwrap_or(default_grid_size(b)), -1.0, 1.0)?;
        return Ok(DiscretizedKernel::builtin(b, g.clone(), g)?);
    }
    let path = std::path::Path::new(name);
    if !path.exists() {
        return Err(Error::config(format!(
            "unknown kernel {name:?}: not a builtin (cossin, bessel) and no such file"
        )));
    }
    if n.is_some() {
        log::warn!("--n is ignored for tabulated kernels, which keep their own grids");
    }
    read_kernel(path)
}

/// Sampler for `cov` on the input grid of `kernel`, after checking that the
/// covariance lives on that interval.
pub fn sampler_for(kernel: &DiscretizedKernel, cov: &CovarianceSpec) -> Result<GpSampler> {
    let (a, b) = cov.domain();
    let (ya, yb) = kernel.grid_y().interval();
    let slack = 1e-12 * (b - a);
    if (ya - a).abs() > slack || (yb - b).abs() > slack {
        return Err(Error::config(format!(
            "covariance domain [{a}, {b}] does not match the kernel's input grid [{ya}, {yb}]"
        )));
    }
    Ok(GpSampler::new(cov, kernel.grid_y())?)
}

/// Relative errors at each of `ks` for one draw of `max(ks)` functions.
/// Draws are prefix-stable, so the run with `k` samples uses the first `k`
/// columns.
pub fn trial_errors(kernel: &DiscretizedKernel, sampler: &GpSampler, ks: &[usize], rng: RandomSource) -> Result<Vec<f64>> {
    let k_max = ks.iter().copied().max().unwrap_or(0);
    let y = kernel.apply_block(&sampler.sample_many(rng, k_max))?;
    ks.iter()
        .map(|&k| {
            if k == 0 {
                return Ok(if kernel.l2_norm() > 0.0 { 1.0 } else { 0.0 });
            }
            let learned = learn_from_outputs(kernel, &y.columns(0, k).clone_owned())?;
            Ok(l2_error(kernel, &learned)?.rel)
        })
        .collect()
}

/// Mean and spread of the relative error over `trials` runs for each
/// covariance and each `k`, with the best rank-`k` error alongside.
pub fn convergence(
    kernel: &DiscretizedKernel,
    covariances: &[NamedCovariance],
    ks: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    if covariances.is_empty() {
        return Err(Error::config("no covariance selected"));
    }
    let svd = kernel.svd();
    let mut rows = Vec::new();
    for (c, named) in covariances.iter().enumerate() {
        let sampler = sampler_for(kernel, &named.spec)?;
        let root = RandomSource::with_stream(seed, c as u64);
        let per_trial: Vec<Vec<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| trial_errors(kernel, &sampler, ks, root.substream(t as u64)))
            .collect::<Result<_>>()?;
        for (i, &k) in ks.iter().enumerate() {
            let errs: Vec<f64> = per_trial.iter().map(|e| e[i]).collect();
            let (mean, sd) = mean_std(&errs);
            rows.push(ConvergenceRow {
                k,
                covariance: named.name.clone(),
                mean_rel_error: mean,
                std_rel_error: sd,
                best_rel_error: svd.best_error_rel(k),
            });
        }
    }
    Ok(rows)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    let kernel = load_kernel(cfg.kernel.as_deref().unwrap_or("bessel"), cfg.n)?;
    let covs = cfg.covariances(&DEFAULT_COVARIANCES)?;
    let k_max = cfg.k_max.unwrap_or(DEFAULT_K_MAX);
    let ks: Vec<usize> = (0..=k_max).collect();
    let rows = convergence(&kernel, &covs, &ks, cfg.trials, cfg.seed)?;
    write_csv(&cfg.out, &cfg.header_json(), &rows)?;
    Ok(rows)
}
