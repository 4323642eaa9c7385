//! Monte-Carlo checks of the error bound, its lemmas and the quality-factor
//! inequalities on small random instances.

use gsketch_core::linalg::{pivoted_qr, svd_desc, sym_eigen_desc};
use gsketch_core::sampling::{factor_covariance, standard_normals, FactoredCovariance, RandomSource};
use gsketch_core::sketch::{
    beta_k, beta_k_upper_bound, bound_rhs, diag, failure_probability, gamma_k, generalized_rsvd,
    mc_expectation_identity, mc_tail_bound, quality_factors, svd_tail, BoundMode, Diagnostics, SketchConfig,
};
use gsketch_core::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::output::write_json;

pub const MIN_TRIALS: usize = 1000;
pub const DEFAULT_N: usize = 30;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_P: usize = 5;
pub const T: f64 = 4.0;
pub const U: f64 = 3.0;
/// Allowed fraction of trials above the bound.
pub const VIOLATION_RATE: f64 = 0.002;
/// Allowed relative gap between the Monte-Carlo mean and its expectation.
pub const EXPECTATION_TOL: f64 = 0.05;
pub const TAIL_ELL: usize = 10;
pub const TAIL_S: [f64; 3] = [1.0, 2.0, 3.0];
pub const RANDOM_INSTANCES: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub bound: f64,
    pub empirical: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleSketch {
    pub covariance: String,
    pub k: usize,
    pub p: usize,
    pub error_fro: f64,
    pub best_error: f64,
    pub gamma_k: f64,
    pub beta_k: f64,
    pub bound_rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub t: f64,
    pub u: f64,
    pub checks: Vec<Check>,
    pub example_sketch: ExampleSketch,
    pub all_pass: bool,
}

fn gaussian(rows: usize, cols: usize, rng: RandomSource) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, &standard_normals(rng, rows * cols))
}

fn random_orthogonal(n: usize, rng: RandomSource) -> DMatrix<f64> {
    pivoted_qr(&gaussian(n, n, rng), 0.0).q
}

/// `U diag(2^{-1}, ..., 2^{-n}) Vᵀ` with random orthogonal `U`, `V`.
pub fn geometric_instance(n: usize, rng: RandomSource) -> DMatrix<f64> {
    let s: Vec<f64> = (1..=n).map(|j| 0.5f64.powi(j as i32)).collect();
    random_orthogonal(n, rng.substream(0)) * diag(&s) * random_orthogonal(n, rng.substream(1)).transpose()
}

/// `diag(1, 2^{-2}, ..., n^{-2})`.
pub fn power_law_covariance(n: usize) -> DMatrix<f64> {
    let l: Vec<f64> = (1..=n).map(|j| (j as f64).powi(-2)).collect();
    diag(&l)
}

/// Fraction of sketches whose error exceeds the generalized bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Validity {
    pub rate: f64,
    pub bound_rhs: f64,
    pub failure_probability: f64,
}

pub fn validity(
    a: &DMatrix<f64>,
    cov: &FactoredCovariance,
    cfg: &SketchConfig,
    trials: usize,
    rng: RandomSource,
) -> Result<Validity> {
    let svd = svd_desc(a);
    let tail = svd_tail(&svd.singular_values, cfg.k)?;
    let qf = gsketch_core::sketch::quality_factors_from_svd(&svd.v, &svd.singular_values, cov.covariance(), cfg.k)?;
    let rhs = bound_rhs(cfg, &qf, tail, BoundMode::Generalized)?;
    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| Ok(generalized_rsvd(a, cov, cfg, rng.substream(i as u64), Diagnostics::Off)?.error_fro))
        .collect::<Result<_>>()?;
    let bad = errors.iter().filter(|&&e| e > rhs).count();
    Ok(Validity {
        rate: bad as f64 / trials as f64,
        bound_rhs: rhs,
        failure_probability: failure_probability(cfg, BoundMode::Generalized),
    })
}

/// Trailing singular values, trailing right singular vectors and the
/// factored covariance of a lemma instance.
pub struct LemmaInstance {
    pub sigma2: Vec<f64>,
    pub v2: DMatrix<f64>,
    pub cov: FactoredCovariance,
}

impl LemmaInstance {
    pub fn new(a: &DMatrix<f64>, cov: &DMatrix<f64>, k: usize) -> Result<Self> {
        let svd = svd_desc(a);
        let n = svd.v.ncols();
        if k >= n {
            return Err(Error::config(format!("k = {k} leaves no trailing singular values for n = {n}")));
        }
        Ok(Self {
            sigma2: svd.singular_values[k..n].to_vec(),
            v2: svd.v.columns(k, n - k).clone_owned(),
            cov: factor_covariance(cov)?,
        })
    }
}

/// Relative gap between the Monte-Carlo mean and the exact expectation,
/// with the standard error of that mean (also relative).
pub fn expectation_gap(inst: &LemmaInstance, t: &DMatrix<f64>, trials: usize, rng: RandomSource) -> Result<(f64, f64)> {
    let est = mc_expectation_identity(&inst.sigma2, &inst.v2, &inst.cov, t, trials, rng)?;
    Ok((
        (est.mean - est.analytic).abs() / est.analytic,
        est.std_error / est.analytic,
    ))
}

/// Violations of `1/γ_k <= (1/k) sum λ_1/λ_{n-i+1}` and of
/// `β_k <= upper bound`, beyond `1e-12` relative, over `count` random
/// instances with `n <= 40`.
pub fn quality_inequality_violations(count: usize, rng: RandomSource) -> Result<(usize, usize)> {
    let mut gamma_bad = 0;
    let mut beta_bad = 0;
    for i in 0..count {
        let src = rng.substream(i as u64);
        let n = 4 + (i * 7) % 37;
        let k = 1 + (i * 5) % (n - 1);
        let a = gaussian(n, n, src.substream(0));
        let g = gaussian(n, n, src.substream(1));
        let cov = g.transpose() * g + DMatrix::identity(n, n) * 1e-3;
        let lambdas: Vec<f64> = sym_eigen_desc(&cov).values.iter().copied().collect();
        let svd = svd_desc(&a);
        let gamma = gamma_k(&cov, &svd.v.columns(0, k).clone_owned())?;
        let inv_bound: f64 = (n - k..n).map(|j| lambdas[0] / lambdas[j]).sum::<f64>() / k as f64;
        if 1.0 / gamma > inv_bound * (1.0 + 1e-12) {
            gamma_bad += 1;
        }
        let beta = beta_k(&cov, &svd.v.columns(k, n - k).clone_owned(), &svd.singular_values[k..])?;
        let ub = beta_k_upper_bound(&lambdas, &svd.singular_values, k)?;
        if beta > ub + 1e-12 {
            beta_bad += 1;
        }
    }
    Ok((gamma_bad, beta_bad))
}

fn check(name: impl Into<String>, bound: f64, empirical: f64, pass: bool) -> Check {
    Check {
        name: name.into(),
        bound,
        empirical,
        pass,
    }
}

pub fn bound_check(seed: u64, trials: usize, n: usize, k: usize, p: usize) -> Result<BoundReport> {
    if trials < MIN_TRIALS {
        return Err(Error::config(format!("bound_check needs at least {MIN_TRIALS} trials, got {trials}")));
    }
    let cfg = SketchConfig::new(k, p, T, U).map_err(|e| Error::config(e.to_string()))?;
    if p < 4 {
        return Err(Error::config("the bound needs p >= 4"));
    }
    cfg.check_dims(n).map_err(|e| Error::config(e.to_string()))?;

    let root = RandomSource::new(seed);
    let a = geometric_instance(n, root.substream(0));
    let power = power_law_covariance(n);
    let mut checks = Vec::new();

    let inst = LemmaInstance::new(&a, &power, k)?;
    let tmat = gaussian(k + p, k, root.substream(1));
    let (gap, _) = expectation_gap(&inst, &tmat, trials, root.substream(2))?;
    checks.push(check("expectation_identity_rel_gap", EXPECTATION_TOL, gap, gap <= EXPECTATION_TOL));

    for (i, s) in TAIL_S.into_iter().enumerate() {
        let est = mc_tail_bound(&inst.sigma2, &inst.v2, &inst.cov, TAIL_ELL, s, trials, root.substream(3 + i as u64))?;
        checks.push(check(
            format!("tail_bound_ell{TAIL_ELL}_s{s}"),
            est.bound,
            est.rate,
            est.within_bound(),
        ));
    }

    let covs = [
        ("identity", factor_covariance(&DMatrix::identity(n, n))?),
        ("power_law", inst.cov.clone()),
    ];
    for (i, (name, fac)) in covs.iter().enumerate() {
        let v = validity(&a, fac, &cfg, trials, root.substream(10 + i as u64))?;
        checks.push(check(
            format!("bound_violation_rate_{name}"),
            VIOLATION_RATE,
            v.rate,
            v.rate <= VIOLATION_RATE,
        ));
    }

    // Standard errors from T and 4T trials; their ratio should be near 1/2.
    let small = mc_expectation_identity(&inst.sigma2, &inst.v2, &inst.cov, &tmat, trials, root.substream(20))?;
    let large = mc_expectation_identity(&inst.sigma2, &inst.v2, &inst.cov, &tmat, 4 * trials, root.substream(20))?;
    let ratio = large.std_error / small.std_error;
    checks.push(check("std_error_ratio_4x_trials", 0.5, ratio, (0.4..=0.6).contains(&ratio)));

    let (gb, bb) = quality_inequality_violations(RANDOM_INSTANCES, root.substream(30))?;
    checks.push(check("gamma_inequality_violations", 0.0, gb as f64, gb == 0));
    checks.push(check("beta_inequality_violations", 0.0, bb as f64, bb == 0));

    let id = quality_factors(&a, &DMatrix::identity(n, n), k)?;
    let dev = (id.gamma_k - 1.0).abs().max((id.beta_k - 1.0).abs());
    checks.push(check("identity_gamma_beta_deviation", 1e-12, dev, dev <= 1e-12));

    let ex = generalized_rsvd(&a, &inst.cov, &cfg, root.substream(40), Diagnostics::Full)?;
    let q = ex.quality.expect("dense diagnostics");
    let example_sketch = ExampleSketch {
        covariance: "power_law".into(),
        k,
        p,
        error_fro: ex.error_fro,
        best_error: ex.tail.unwrap_or(f64::NAN),
        gamma_k: q.gamma_k,
        beta_k: q.beta_k,
        bound_rhs: ex.bound_rhs.unwrap_or(f64::NAN),
    };
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(BoundReport {
        seed,
        trials,
        n,
        k,
        p,
        t: T,
        u: U,
        checks,
        example_sketch,
        all_pass,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<BoundReport> {
    let n = cfg.n.unwrap_or(DEFAULT_N);
    let k = cfg.k_max.unwrap_or(DEFAULT_K);
    let p = cfg.p.unwrap_or(DEFAULT_P);
    let report = bound_check(cfg.seed, cfg.trials, n, k, p)?;
    write_json(&cfg.out, &report)?;
    Ok(report)
}
