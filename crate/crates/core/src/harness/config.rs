//! Experiment configuration, one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gd::GdStep;
use crate::ippm::{InexactCriterion, Inexactness};
use crate::ppm::{Method, StepSchedule};
use crate::regularity::Sampling;
use crate::zoo::{BenchmarkId, MlKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemConfig,
    /// Fixed by the subcommand when omitted.
    #[serde(default)]
    pub solver: Option<Method>,
    #[serde(default)]
    pub schedule: Option<StepSchedule>,
    /// Inexact PPM only.
    #[serde(default)]
    pub criterion: Option<InexactCriterion>,
    /// Inexact PPM only.
    #[serde(default)]
    pub inexactness: Option<Inexactness>,
    /// Gradient descent only.
    #[serde(default)]
    pub gd: Option<GdConfig>,
    #[serde(default)]
    pub x0: Option<StartPoint>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Sublevel offset for rate checks and estimation.
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub gap_tol: Option<f64>,
    #[serde(default)]
    pub inner_tol: Option<f64>,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub test_mode: bool,
    #[serde(default)]
    pub estimate: bool,
    #[serde(default)]
    pub audit: bool,
    #[serde(default)]
    pub estimation: Option<EstimationConfig>,
}

fn default_max_iter() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Benchmark {
        id: String,
    },
    Ml {
        kind: MlKind,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        mu_en: Option<f64>,
        #[serde(default)]
        rho_svm: Option<f64>,
        data: DataConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    /// Standard-normal A (n×m) and a ground truth with s zeros.
    SyntheticRegression { n: usize, m: usize, s: usize },
    /// Two Gaussian blobs with ±1 labels.
    SyntheticBlobs {
        n: usize,
        d: usize,
        #[serde(default = "default_separation")]
        separation: f64,
    },
    /// LIBSVM text; relative paths resolve against the config file.
    Libsvm { path: PathBuf },
}

fn default_separation() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartPoint {
    /// Every coordinate set to this value.
    Fill(f64),
    Vector(Vec<f64>),
}

/// Overrides for gradient descent; missing constants come from the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdConfig {
    #[serde(default = "default_gd_step")]
    pub step: GdStep,
    #[serde(default)]
    pub l: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

fn default_gd_step() -> GdStep {
    GdStep::MuOverL2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    #[serde(default)]
    pub nu: Option<f64>,
    /// Sample without a sublevel restriction (ν = ∞).
    #[serde(default)]
    pub global: bool,
    #[serde(default)]
    pub sampling: Option<Sampling>,
    #[serde(default)]
    pub tau_s: Option<f64>,
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parse and validate a config; syntax and schema errors carry a line number.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::ParseError {
            line: e.line(),
            message: format!("column {}: {e}", e.column()),
        })?;
        cfg.validate_fields()?;
        Ok(cfg)
    }

    /// Read a config and resolve relative data paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let ProblemConfig::Ml {
            data: DataConfig::Libsvm { path: data },
            ..
        } = &mut cfg.problem
        {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn check_files(&self) -> Result<()> {
        if let ProblemConfig::Ml {
            data: DataConfig::Libsvm { path },
            ..
        } = &self.problem
        {
            if !path.is_file() {
                return Err(config_error(
                    "problem.data.path",
                    format!("{} does not exist", path.display()),
                ));
            }
        }
        Ok(())
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| match &self.problem {
            ProblemConfig::Benchmark { id } => id.clone(),
            ProblemConfig::Ml { kind, .. } => serde_json::to_value(kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
        })
    }

    /// Checks that do not depend on the solver.
    pub fn validate_fields(&self) -> Result<()> {
        match &self.problem {
            ProblemConfig::Benchmark { id } => {
                id.parse::<BenchmarkId>()
                    .map_err(|e| config_error("problem.id", e.to_string()))?;
            }
            ProblemConfig::Ml {
                kind,
                lambda,
                mu_en,
                rho_svm,
                data,
            } => {
                let (need_lambda, need_mu, need_rho) = match kind {
                    MlKind::Svm => (false, false, true),
                    MlKind::Lasso => (true, false, false),
                    MlKind::ElasticNet => (true, true, false),
                };
                for (field, present, needed) in [
                    ("problem.lambda", lambda.is_some(), need_lambda),
                    ("problem.mu_en", mu_en.is_some(), need_mu),
                    ("problem.rho_svm", rho_svm.is_some(), need_rho),
                ] {
                    if present && !needed {
                        return Err(config_error(field, "not used by this problem kind"));
                    }
                    if needed && !present {
                        return Err(config_error(field, "required by this problem kind"));
                    }
                }
                let classification = matches!(
                    data,
                    DataConfig::SyntheticBlobs { .. } | DataConfig::Libsvm { .. }
                );
                if classification != (*kind == MlKind::Svm) {
                    return Err(config_error(
                        "problem.data",
                        "data source does not match the problem kind",
                    ));
                }
            }
        }
        if self.max_iter == 0 {
            return Err(config_error("max_iter", "must be at least 1"));
        }
        for (field, v) in [
            ("nu", self.nu),
            ("gap_tol", self.gap_tol),
            ("inner_tol", self.inner_tol),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(config_error(field, format!("must be positive, got {v}")));
                }
            }
        }
        if let Some(StartPoint::Vector(v)) = &self.x0 {
            if v.is_empty() {
                return Err(config_error("x0", "empty start point"));
            }
        }
        if let Some(s) = &self.solver {
            self.validate_for(*s)?;
        }
        Ok(())
    }

    /// Solver-specific fields are present exactly when `solver` needs them.
    pub fn validate_for(&self, solver: Method) -> Result<()> {
        if let Some(s) = self.solver {
            if s != solver {
                return Err(config_error(
                    "solver",
                    format!("config is for {s:?}, requested {solver:?}"),
                ));
            }
        }
        let ippm = solver == Method::Ippm;
        let gd = solver == Method::Gd;
        if self.criterion.is_some() != ippm {
            return Err(config_error(
                "criterion",
                if ippm {
                    "required by the inexact PPM"
                } else {
                    "only valid for the inexact PPM"
                },
            ));
        }
        if self.inexactness.is_some() && !ippm {
            return Err(config_error(
                "inexactness",
                "only valid for the inexact PPM",
            ));
        }
        if self.schedule.is_some() == gd {
            return Err(config_error(
                "schedule",
                if gd {
                    "not used by gradient descent"
                } else {
                    "required by the proximal point methods"
                },
            ));
        }
        if self.gd.is_some() && !gd {
            return Err(config_error("gd", "only valid for gradient descent"));
        }
        if let Some(c) = &self.criterion {
            c.validate()
                .map_err(|e| config_error("criterion", e.to_string()))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LASSO: &str = r#"{
        "name": "lasso",
        "problem": {"type": "ml", "kind": "lasso", "lambda": 10,
                    "data": {"source": "synthetic_regression", "n": 20, "m": 50, "s": 10}},
        "solver": "ppm",
        "schedule": {"kind": "constant", "c": 0.16},
        "seed": 7
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_json(LASSO).unwrap();
        assert_eq!(cfg.max_iter, 200);
        assert_eq!(cfg.schedule, Some(StepSchedule::constant(0.16)));
        let again = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_field_reports_line() {
        let text =
            "{\n \"problem\": {\"type\": \"benchmark\", \"id\": \"quad1d\"},\n \"bogus\": 1\n}";
        match ExperimentConfig::from_json(text) {
            Err(Error::ParseError { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn solver_specific_fields() {
        let base = r#"{"problem": {"type": "benchmark", "id": "quad1d"}, "schedule": {"kind": "constant", "c": 1}"#;
        let ppm = ExperimentConfig::from_json(&format!("{base}}}")).unwrap();
        assert!(ppm.validate_for(Method::Ppm).is_ok());
        assert!(matches!(
            ppm.validate_for(Method::Ippm),
            Err(Error::Config { ref field, .. }) if field == "criterion"
        ));
        assert!(matches!(
            ppm.validate_for(Method::Gd),
            Err(Error::Config { ref field, .. }) if field == "schedule"
        ));
        let with_crit = format!(r#"{base}, "criterion": {{"kind": "Aprime"}}}}"#);
        let ippm = ExperimentConfig::from_json(&with_crit).unwrap();
        assert!(ippm.validate_for(Method::Ippm).is_ok());
        assert!(ippm.validate_for(Method::Ppm).is_err());
    }

    #[test]
    fn problem_fields_match_kind() {
        let bad = LASSO.replace("\"lambda\": 10", "\"lambda\": 10, \"rho_svm\": 1");
        assert!(matches!(
            ExperimentConfig::from_json(&bad),
            Err(Error::Config { ref field, .. }) if field == "problem.rho_svm"
        ));
        let bad_id = r#"{"problem": {"type": "benchmark", "id": "nope"}}"#;
        assert!(ExperimentConfig::from_json(bad_id).is_err());
    }

    #[test]
    fn missing_data_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("svm.json");
        std::fs::write(
            &cfg_path,
            r#"{"problem": {"type": "ml", "kind": "svm", "rho_svm": 1,
                "data": {"source": "libsvm", "path": "missing.txt"}}}"#,
        )
        .unwrap();
        assert!(matches!(
            ExperimentConfig::load(&cfg_path),
            Err(Error::Config { ref field, .. }) if field == "problem.data.path"
        ));
        std::fs::write(dir.path().join("missing.txt"), "+1 1:1\n-1 1:-1\n").unwrap();
        let cfg = ExperimentConfig::load(&cfg_path).unwrap();
        match cfg.problem {
            ProblemConfig::Ml {
                data: DataConfig::Libsvm { path },
                ..
            } => assert!(path.is_absolute() || path.starts_with(dir.path())),
            _ => unreachable!(),
        }
    }
}
