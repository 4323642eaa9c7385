use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gsketch::config::{Command, ExperimentConfig, Overrides};
use gsketch::experiments::{bound_check, gp_samples, hs_convergence, kernel_learn, matrix_prior};
use gsketch::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Cmd {
    MatrixPrior,
    HsConvergence,
    GpSamples,
    BoundCheck,
    KernelLearn,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::MatrixPrior => Command::MatrixPrior,
            Cmd::HsConvergence => Command::HsConvergence,
            Cmd::GpSamples => Command::GpSamples,
            Cmd::BoundCheck => Command::BoundCheck,
            Cmd::KernelLearn => Command::KernelLearn,
        }
    }
}

/// Randomized low-rank approximation with prior covariances: experiment
/// driver. Flags override values from `--config`.
#[derive(Debug, Parser)]
#[command(name = "gsketch", version)]
struct Cli {
    command: Cmd,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Problem size: matrix dimension, grid points or Mercer terms.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "k-max")]
    k_max: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// `cossin`, `bessel` or the path of a tabulated kernel.
    #[arg(long)]
    kernel: Option<String>,
    /// `sqexp`, `periodic`, `jacobi`, `jacobi_rissanen` or `laplace_green`.
    #[arg(long)]
    cov: Option<String>,
    /// JSON file with any of the settings above.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run(cli: Cli) -> gsketch::Result<()> {
    let flags = Overrides {
        seed: cli.seed,
        trials: cli.trials,
        out: cli.out,
        n: cli.n,
        k_max: cli.k_max,
        p: cli.p,
        ell: cli.ell,
        nu: cli.nu,
        kernel: cli.kernel,
        cov: cli.cov,
        cov_spec: None,
    };
    let merged = match &cli.config {
        Some(path) => flags.over(Overrides::from_file(path)?),
        None => flags,
    };
    let cfg = ExperimentConfig::resolve(cli.command.into(), merged)?;
    log::info!("running {:?} with {}", cfg.command, cfg.header_json());
    match cfg.command {
        Command::MatrixPrior => {
            matrix_prior::run(&cfg)?;
        }
        Command::HsConvergence => {
            hs_convergence::run(&cfg)?;
        }
        Command::GpSamples => {
            gp_samples::run(&cfg)?;
        }
        Command::BoundCheck => {
            let report = bound_check::run(&cfg)?;
            for c in &report.checks {
                println!(
                    "{} {}: empirical {:e}, bound {:e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.empirical,
                    c.bound
                );
            }
        }
        Command::KernelLearn => {
            let summary = kernel_learn::run(&cfg)?;
            println!("{}", serde_json::to_string(&summary).map_err(Error::from)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
