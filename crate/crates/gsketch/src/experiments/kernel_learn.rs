//! Learns one kernel and writes it in the tabulated format.

use gsketch_core::hsop::{l2_error, DiscretizedKernel, LearnedKernel, MACHINE_RANK_TOL};
use gsketch_core::sampling::RandomSource;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiments::hs_convergence::{load_kernel, sampler_for};
use crate::output::{sibling, write_json};
use crate::tabulated::write_kernel;

pub const DEFAULT_K: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct LearnSummary {
    pub rank: usize,
    pub rel_error: f64,
    pub k: usize,
    pub seed: u64,
}

pub fn learn(
    kernel: &DiscretizedKernel,
    cov: &gsketch_core::covariance::CovarianceSpec,
    k: usize,
    seed: u64,
) -> Result<(LearnedKernel, LearnSummary)> {
    let sampler = sampler_for(kernel, cov)?;
    let learned = gsketch_core::hsop::hs_randomized_svd_with(kernel, &sampler, k, RandomSource::new(seed))?;
    let err = l2_error(kernel, &learned)?;
    let summary = LearnSummary {
        rank: learned.numerical_rank(MACHINE_RANK_TOL),
        rel_error: err.rel,
        k,
        seed,
    };
    Ok((learned, summary))
}

/// Writes the learned kernel to `cfg.out` and the summary to
/// `<out>.summary.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<LearnSummary> {
    let kernel = load_kernel(cfg.kernel.as_deref().unwrap_or("bessel"), cfg.n)?;
    let mut covs = cfg.covariances(&[("sqexp", Some(0.01), None)])?;
    if covs.len() != 1 {
        return Err(Error::config("kernel_learn takes exactly one covariance"));
    }
    let cov = covs.remove(0);
    let k = cfg.k_max.unwrap_or(DEFAULT_K);
    let (learned, summary) = learn(&kernel, &cov.spec, k, cfg.seed)?;
    let dump = learned.to_kernel(format!("learned:{}", cov.name))?;
    write_kernel(&cfg.out, &dump, Some(&format!("config: {}", cfg.header_json())))?;
    write_json(&sibling(&cfg.out, "summary.json"), &summary)?;
    Ok(summary)
}
