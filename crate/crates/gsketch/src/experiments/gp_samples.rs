//! Kernel slices and sample paths of weighted Jacobi covariances.

use gsketch_core::covariance::{CovarianceSpec, EigenSequence, DEFAULT_MERCER_TERMS};
use gsketch_core::quadrature::{GridFamily, QuadratureGrid};
use gsketch_core::sampling::{GpSampler, RandomSource};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::output::write_csv;

/// Points of the output grid.
pub const GRID_POINTS: usize = 401;
/// `y` values of the emitted kernel slices `K(x, y0)`.
pub const SLICES: [f64; 3] = [-0.5, 0.0, 0.5];
/// Draws with `|x|` above this count toward the boundary statistic.
pub const BOUNDARY: f64 = 0.95;

#[derive(Debug, Clone, Serialize)]
pub struct GpSeriesRow {
    pub sequence: String,
    pub series: String,
    pub x: f64,
    pub value: f64,
}

/// Named eigenvalue sequences: `power_law4`, `power_law3` and
/// `scaled_rissanen`.
pub fn sequence_by_name(name: &str, terms: usize) -> Result<EigenSequence> {
    let seq = match name {
        "power_law4" => EigenSequence::power_law(4.0, terms),
        "power_law3" => EigenSequence::power_law(3.0, terms),
        "scaled_rissanen" => EigenSequence::scaled_rissanen(terms),
        other => return Err(Error::config(format!("unknown eigenvalue sequence {other:?}"))),
    };
    seq.map_err(|e| Error::config(e.to_string()))
}

pub const SEQUENCES: [&str; 3] = ["power_law4", "power_law3", "scaled_rissanen"];

/// Mean over draws (columns) of `max |f|` on the nodes with `|x| > 0.95`.
pub fn boundary_statistic(draws: &gsketch_core::DMatrix<f64>, nodes: &[f64]) -> f64 {
    if draws.ncols() == 0 {
        return 0.0;
    }
    let total: f64 = draws
        .column_iter()
        .map(|c| {
            nodes
                .iter()
                .zip(c.iter())
                .filter(|(x, _)| x.abs() > BOUNDARY)
                .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
        })
        .sum();
    total / draws.ncols() as f64
}

/// Output grid and `count` draws from `GP(0, K_Jac)` for the sequence.
pub fn draws(sequence: &str, terms: usize, count: usize, rng: RandomSource) -> Result<(QuadratureGrid, gsketch_core::DMatrix<f64>)> {
    let spec = CovarianceSpec::jacobi(2, sequence_by_name(sequence, terms)?)?;
    let grid = QuadratureGrid::new(GridFamily::ChebyshevCC, GRID_POINTS, -1.0, 1.0)?;
    let sampler = GpSampler::new(&spec, &grid)?;
    let d = sampler.sample_many(rng, count);
    Ok((grid, d))
}

/// Long-format rows: the diagonal `K(x, x)`, slices `K(x, y0)` and `count`
/// draws for each sequence.
pub fn gp_samples(sequences: &[&str], terms: usize, count: usize, seed: u64) -> Result<Vec<GpSeriesRow>> {
    let mut rows = Vec::new();
    for (s, &name) in sequences.iter().enumerate() {
        let spec = CovarianceSpec::jacobi(2, sequence_by_name(name, terms)?)?;
        let (grid, d) = draws(name, terms, count, RandomSource::with_stream(seed, s as u64))?;
        let mut push = |series: String, x: f64, value: f64| {
            rows.push(GpSeriesRow {
                sequence: name.to_string(),
                series,
                x,
                value,
            })
        };
        for &x in grid.nodes() {
            push("diagonal".into(), x, spec.eval(x, x)?);
        }
        for y0 in SLICES {
            for &x in grid.nodes() {
                push(format!("slice_y{y0}"), x, spec.eval(x, y0)?);
            }
        }
        for (j, col) in d.column_iter().enumerate() {
            for (&x, &v) in grid.nodes().iter().zip(col.iter()) {
                push(format!("draw{j}"), x, v);
            }
        }
    }
    Ok(rows)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<GpSeriesRow>> {
    let terms = cfg.n.unwrap_or(DEFAULT_MERCER_TERMS);
    let rows = gp_samples(&SEQUENCES, terms, cfg.trials, cfg.seed)?;
    write_csv(&cfg.out, &cfg.header_json(), &rows)?;
    Ok(rows)
}
