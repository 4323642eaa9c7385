//! JSON forms of covariance specifications and experiment configuration.

use std::path::{Path, PathBuf};

use gsketch_core::covariance::{CovarianceForm, CovarianceSpec, EigenSequence, SequenceKind, DEFAULT_MERCER_TERMS};
use gsketch_core::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    Sqexp,
    Periodic,
    Jacobi,
    LaplaceGreen,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceName {
    Rissanen,
    ScaledRissanen,
    PowerLaw,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceJson {
    pub kind: SequenceName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// `{"form": ..., "ell": ..., "alpha": ..., "seq": {...}, "domain": [a, b]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceJson {
    pub form: FormName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<SequenceJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    /// Number of eigenpairs for `laplace_green`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    /// Rows of the covariance matrix for `matrix`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl SequenceJson {
    pub fn to_sequence(&self) -> Result<EigenSequence> {
        let n = self.n.unwrap_or(DEFAULT_MERCER_TERMS);
        let seq = match self.kind {
            SequenceName::Rissanen => EigenSequence::rissanen(n),
            SequenceName::ScaledRissanen => EigenSequence::scaled_rissanen(n),
            SequenceName::PowerLaw => {
                let nu = self.nu.ok_or_else(|| Error::config("power_law sequence needs \"nu\""))?;
                EigenSequence::power_law(nu, n)
            }
            SequenceName::Explicit => {
                let v = self
                    .values
                    .clone()
                    .ok_or_else(|| Error::config("explicit sequence needs \"values\""))?;
                EigenSequence::explicit(v)
            }
        };
        seq.map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_sequence(seq: &EigenSequence) -> Self {
        let (kind, nu, values) = match seq.kind() {
            SequenceKind::Rissanen => (SequenceName::Rissanen, None, None),
            SequenceKind::ScaledRissanen => (SequenceName::ScaledRissanen, None, None),
            SequenceKind::PowerLaw { nu } => (SequenceName::PowerLaw, Some(*nu), None),
            SequenceKind::Explicit(v) => (SequenceName::Explicit, None, Some(v.clone())),
        };
        Self {
            kind,
            nu,
            n: Some(seq.len()),
            values,
        }
    }
}

impl CovarianceJson {
    pub fn to_spec(&self) -> Result<CovarianceSpec> {
        let domain = self.domain.map(|[a, b]| (a, b));
        let need_ell = || self.ell.ok_or_else(|| Error::config("this covariance needs \"ell\""));
        let spec = match self.form {
            FormName::Sqexp => CovarianceSpec::sq_exp(need_ell()?, domain.unwrap_or((-1.0, 1.0))),
            FormName::Periodic => CovarianceSpec::periodic(need_ell()?, domain.unwrap_or((-1.0, 1.0))),
            FormName::Jacobi => {
                if domain.is_some_and(|d| d != (-1.0, 1.0)) {
                    return Err(Error::config("jacobi covariances live on [-1, 1]"));
                }
                let seq = self
                    .seq
                    .as_ref()
                    .ok_or_else(|| Error::config("jacobi covariance needs \"seq\""))?
                    .to_sequence()?;
                CovarianceSpec::jacobi(self.alpha.unwrap_or(2), seq)
            }
            FormName::LaplaceGreen => {
                if domain.is_some_and(|d| d != (0.0, 1.0)) {
                    return Err(Error::config("laplace_green covariances live on [0, 1]"));
                }
                CovarianceSpec::laplace_green(self.terms.unwrap_or(DEFAULT_MERCER_TERMS))
            }
            FormName::Matrix => {
                let rows = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::config("matrix covariance needs \"matrix\""))?;
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::config("covariance matrix must be square"));
                }
                let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                CovarianceSpec::matrix(m, domain.unwrap_or((-1.0, 1.0)))
            }
        };
        spec.map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_spec(spec: &CovarianceSpec) -> Self {
        let (a, b) = spec.domain();
        let mut out = Self {
            form: FormName::Sqexp,
            ell: None,
            alpha: None,
            seq: None,
            domain: Some([a, b]),
            terms: None,
            matrix: None,
        };
        match spec.form() {
            CovarianceForm::SqExp { ell } => out.ell = Some(*ell),
            CovarianceForm::Periodic { ell } => {
                out.form = FormName::Periodic;
                out.ell = Some(*ell);
            }
            CovarianceForm::JacobiMercer { alpha, seq } => {
                out.form = FormName::Jacobi;
                out.alpha = Some(*alpha);
                out.seq = Some(SequenceJson::from_sequence(seq));
            }
            CovarianceForm::LaplaceGreen { terms } => {
                out.form = FormName::LaplaceGreen;
                out.terms = Some(*terms);
            }
            CovarianceForm::ExplicitMatrix(m) => {
                out.form = FormName::Matrix;
                out.matrix = Some(m.row_iter().map(|r| r.iter().copied().collect()).collect());
            }
        }
        out
    }
}

/// A covariance with a short label used in output columns.
#[derive(Debug, Clone)]
pub struct NamedCovariance {
    pub name: String,
    pub spec: CovarianceSpec,
}

/// Resolves a covariance name such as `sqexp`, `periodic` or `jacobi`,
/// using `ell` and `nu` where the family needs them.
pub fn covariance_by_name(name: &str, ell: Option<f64>, nu: Option<f64>) -> Result<NamedCovariance> {
    let cfg = |e: gsketch_core::Error| Error::config(e.to_string());
    let (label, spec) = match name {
        "sqexp" | "se" => {
            let ell = ell.unwrap_or(0.01);
            (format!("sqexp_ell{ell}"), CovarianceSpec::sq_exp(ell, (-1.0, 1.0)).map_err(cfg)?)
        }
        "periodic" => {
            let ell = ell.unwrap_or(1.0);
            (format!("periodic_ell{ell}"), CovarianceSpec::periodic(ell, (-1.0, 1.0)).map_err(cfg)?)
        }
        "jacobi" => {
            let nu = nu.unwrap_or(3.0);
            let seq = EigenSequence::power_law(nu, DEFAULT_MERCER_TERMS).map_err(cfg)?;
            (format!("jacobi_nu{nu}"), CovarianceSpec::jacobi(2, seq).map_err(cfg)?)
        }
        "jacobi_rissanen" => {
            let seq = EigenSequence::scaled_rissanen(DEFAULT_MERCER_TERMS).map_err(cfg)?;
            ("jacobi_scaled_rissanen".to_string(), CovarianceSpec::jacobi(2, seq).map_err(cfg)?)
        }
        "laplace_green" => (
            "laplace_green".to_string(),
            CovarianceSpec::laplace_green(DEFAULT_MERCER_TERMS).map_err(cfg)?,
        ),
        other => return Err(Error::config(format!("unknown covariance {other:?}"))),
    };
    Ok(NamedCovariance { name: label, spec })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    MatrixPrior,
    HsConvergence,
    GpSamples,
    BoundCheck,
    KernelLearn,
}

impl Command {
    pub fn default_trials(self) -> usize {
        match self {
            Command::MatrixPrior | Command::HsConvergence => 10,
            Command::GpSamples => 5,
            Command::BoundCheck => 1000,
            Command::KernelLearn => 1,
        }
    }
}

/// Optional settings, as read from a JSON config file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub k_max: Option<usize>,
    pub p: Option<usize>,
    pub ell: Option<f64>,
    pub nu: Option<f64>,
    pub kernel: Option<String>,
    pub cov: Option<String>,
    pub cov_spec: Option<CovarianceJson>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Values from `self`, falling back to `base` where unset.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            seed: self.seed.or(base.seed),
            trials: self.trials.or(base.trials),
            out: self.out.or(base.out),
            n: self.n.or(base.n),
            k_max: self.k_max.or(base.k_max),
            p: self.p.or(base.p),
            ell: self.ell.or(base.ell),
            nu: self.nu.or(base.nu),
            kernel: self.kernel.or(base.kernel),
            cov: self.cov.or(base.cov),
            cov_spec: self.cov_spec.or(base.cov_spec),
        }
    }
}

/// Fully resolved settings of one command run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
    pub n: Option<usize>,
    pub k_max: Option<usize>,
    pub p: Option<usize>,
    pub ell: Option<f64>,
    pub nu: Option<f64>,
    pub kernel: Option<String>,
    pub cov: Option<String>,
    pub cov_spec: Option<CovarianceJson>,
}

impl ExperimentConfig {
    pub fn resolve(command: Command, o: Overrides) -> Result<Self> {
        let seed = o.seed.ok_or_else(|| Error::config("--seed is required"))?;
        let out = o.out.ok_or_else(|| Error::config("--out is required"))?;
        let trials = o.trials.unwrap_or(command.default_trials());
        if trials == 0 {
            return Err(Error::config("--trials must be positive"));
        }
        if o.cov.is_some() && o.cov_spec.is_some() {
            return Err(Error::config("give either a covariance name or a cov_spec, not both"));
        }
        Ok(Self {
            command,
            seed,
            trials,
            out,
            n: o.n,
            k_max: o.k_max,
            p: o.p,
            ell: o.ell,
            nu: o.nu,
            kernel: o.kernel,
            cov: o.cov,
            cov_spec: o.cov_spec,
        })
    }

    /// One-line JSON embedded in output headers.
    pub fn header_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// The covariances selected by `cov`, `cov_spec`, `ell` or `nu`, or
    /// `defaults` when none is given.
    pub fn covariances(&self, defaults: &[(&str, Option<f64>, Option<f64>)]) -> Result<Vec<NamedCovariance>> {
        if let Some(js) = &self.cov_spec {
            return Ok(vec![NamedCovariance {
                name: format!("{:?}", js.form).to_lowercase(),
                spec: js.to_spec()?,
            }]);
        }
        if let Some(name) = &self.cov {
            return Ok(vec![covariance_by_name(name, self.ell, self.nu)?]);
        }
        let mut out = Vec::new();
        if self.ell.is_some() {
            out.push(covariance_by_name("sqexp", self.ell, None)?);
        }
        if self.nu.is_some() {
            out.push(covariance_by_name("jacobi", None, self.nu)?);
        }
        if out.is_empty() {
            for (name, ell, nu) in defaults {
                out.push(covariance_by_name(name, *ell, *nu)?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_json_round_trip() {
        let text = r#"{"form": "jacobi", "alpha": 2, "seq": {"kind": "power_law", "nu": 4.0, "n": 50}}"#;
        let js: CovarianceJson = serde_json::from_str(text).unwrap();
        let spec = js.to_spec().unwrap();
        let back = CovarianceJson::from_spec(&spec);
        assert_eq!(back.to_spec().unwrap(), spec);

        let se: CovarianceJson = serde_json::from_str(r#"{"form": "sqexp", "ell": 0.1, "domain": [0, 2]}"#).unwrap();
        assert_eq!(se.to_spec().unwrap().domain(), (0.0, 2.0));
        let m: CovarianceJson = serde_json::from_str(r#"{"form": "matrix", "matrix": [[1, 0], [0, 1]]}"#).unwrap();
        assert_eq!(CovarianceJson::from_spec(&m.to_spec().unwrap()).to_spec().unwrap(), m.to_spec().unwrap());
    }

    #[test]
    fn bad_covariances_are_config_errors() {
        for text in [
            r#"{"form": "sqexp"}"#,
            r#"{"form": "sqexp", "ell": -1}"#,
            r#"{"form": "jacobi", "seq": {"kind": "power_law", "nu": 0.5}}"#,
            r#"{"form": "jacobi", "alpha": 3, "seq": {"kind": "rissanen"}}"#,
            r#"{"form": "matrix", "matrix": [[1, 2], [0, 1]]}"#,
        ] {
            let js: CovarianceJson = serde_json::from_str(text).unwrap();
            assert!(matches!(js.to_spec(), Err(Error::Config(_))), "{text}");
        }
        assert!(serde_json::from_str::<CovarianceJson>(r#"{"form": "matern"}"#).is_err());
        assert!(covariance_by_name("matern", None, None).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = Overrides {
            seed: Some(1),
            trials: Some(3),
            out: Some("a.csv".into()),
            ..Default::default()
        };
        let flags = Overrides {
            seed: Some(2),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(Command::MatrixPrior, flags.over(file)).unwrap();
        assert_eq!(cfg.seed, 2);
        assert_eq!(cfg.trials, 3);
        assert!(ExperimentConfig::resolve(Command::MatrixPrior, Overrides::default()).is_err());
    }
}
