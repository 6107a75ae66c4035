//! TOML run configuration.
//!
//! ```toml
//! [run]
//! lambda_sq = 100.0
//! window_rho_max = 20.0
//! target_ball_M = 3.0
//! seed = 42
//! replicas = 1
//! grid_size = 4096
//!
//! [marks]
//! kind = "uniform"      # "deterministic" | "uniform" | "two_point"
//! a = 0.5
//! b = 1.5
//! size_biased = true
//! ```
//!
//! Optional `[sweep]`, `[covariogram]` and `[verify]` sections tune the
//! corresponding subcommands. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vacancy_core::coupling::{MarkKind, MarkLaw, RunConfig};

use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "defaults::lambda_sq")]
    pub lambda_sq: f64,
    #[serde(default = "defaults::window")]
    pub window_rho_max: f64,
    #[serde(rename = "target_ball_M", default = "defaults::ball")]
    pub target_ball_m: f64,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::replicas")]
    pub replicas: usize,
    #[serde(default = "defaults::grid")]
    pub grid_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkKindName {
    Deterministic,
    Uniform,
    TwoPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkSection {
    pub kind: MarkKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default = "defaults::yes")]
    pub size_biased: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "defaults::sweep_grid")]
    pub lambda_sq: Vec<f64>,
    #[serde(default = "defaults::sweep_replicas")]
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariogramSection {
    #[serde(default = "defaults::cov_samples")]
    pub samples: usize,
    /// Directions per realization; separations are `2π k / grid_size`.
    #[serde(default = "defaults::cov_grid")]
    pub grid_size: usize,
    /// Fraction trimmed from each tail for the robust estimate.
    #[serde(default = "defaults::trim")]
    pub trim: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "defaults::p_threshold")]
    pub p_threshold: f64,
    #[serde(default)]
    pub tests: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub marks: MarkSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub covariogram: CovariogramSection,
    #[serde(default)]
    pub verify: VerifySection,
}

mod defaults {
    pub fn lambda_sq() -> f64 {
        100.0
    }
    pub fn window() -> f64 {
        20.0
    }
    pub fn ball() -> f64 {
        3.0
    }
    pub fn seed() -> u64 {
        42
    }
    pub fn replicas() -> usize {
        1
    }
    pub fn grid() -> usize {
        4096
    }
    pub fn yes() -> bool {
        true
    }
    pub fn sweep_grid() -> Vec<f64> {
        vec![1e2, 1e3, 1e4]
    }
    pub fn sweep_replicas() -> usize {
        200
    }
    pub fn cov_samples() -> usize {
        25_000
    }
    pub fn cov_grid() -> usize {
        128
    }
    pub fn trim() -> f64 {
        0.01
    }
    pub fn p_threshold() -> f64 {
        1e-3
    }
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            lambda_sq: defaults::lambda_sq(),
            window_rho_max: defaults::window(),
            target_ball_m: defaults::ball(),
            seed: defaults::seed(),
            replicas: defaults::replicas(),
            grid_size: defaults::grid(),
        }
    }
}

impl Default for MarkSection {
    fn default() -> Self {
        MarkSection {
            kind: MarkKindName::Uniform,
            a: Some(0.5),
            b: Some(1.5),
            r1: None,
            p1: None,
            r2: None,
            size_biased: true,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { lambda_sq: defaults::sweep_grid(), replicas: defaults::sweep_replicas() }
    }
}

impl Default for CovariogramSection {
    fn default() -> Self {
        CovariogramSection {
            samples: defaults::cov_samples(),
            grid_size: defaults::cov_grid(),
            trim: defaults::trim(),
        }
    }
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { p_threshold: defaults::p_threshold(), tests: Vec::new() }
    }
}

fn need(v: Option<f64>, key: &str) -> Result<f64, Error> {
    v.ok_or_else(|| Error::Config(format!("marks.{key} is required for this mark kind")))
}

impl MarkSection {
    pub fn law(&self) -> Result<MarkLaw, Error> {
        let kind = match self.kind {
            MarkKindName::Deterministic => MarkKind::Deterministic,
            MarkKindName::Uniform => MarkKind::Uniform { a: need(self.a, "a")?, b: need(self.b, "b")? },
            MarkKindName::TwoPoint => MarkKind::TwoPoint {
                r1: need(self.r1, "r1")?,
                p1: need(self.p1, "p1")?,
                r2: need(self.r2, "r2")?,
            },
        };
        MarkLaw::new(kind, self.size_biased).map_err(|e| Error::Config(format!("marks: {e}")))
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, Error> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn run_config(&self) -> Result<RunConfig, Error> {
        Ok(RunConfig {
            lambda_sq: self.run.lambda_sq,
            mark_law: self.marks.law()?,
            window_rho_max: self.run.window_rho_max,
            target_ball_m: self.run.target_ball_m,
            seed: self.run.seed,
            replicas: self.run.replicas,
            grid_size: self.run.grid_size,
        })
    }

    pub fn validate(&self) -> Result<(), Error> {
        let rc = self.run_config()?;
        rc.validate().map_err(|e| Error::Config(format!("run: {e}")))?;
        if self.sweep.lambda_sq.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("sweep.lambda_sq values must be positive".into()));
        }
        if self.covariogram.grid_size < 4 || !self.covariogram.grid_size.is_multiple_of(2) {
            return Err(Error::Config("covariogram.grid_size must be even and at least 4".into()));
        }
        if !(0.0..0.5).contains(&self.covariogram.trim) {
            return Err(Error::Config("covariogram.trim must lie in [0, 0.5)".into()));
        }
        if !(self.verify.p_threshold > 0.0 && self.verify.p_threshold < 1.0) {
            return Err(Error::Config("verify.p_threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        let rc = c.run_config().unwrap();
        assert_eq!(rc.lambda_sq, 100.0);
        assert_eq!(rc.mark_law.r_star(), 0.5);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::parse("[run]\nlambda = 3.0\n").unwrap_err().to_string();
        assert!(err.contains("lambda"), "{err}");
        let err = Config::parse("[runs]\n").unwrap_err().to_string();
        assert!(err.contains("runs"), "{err}");
    }

    #[test]
    fn invalid_values() {
        assert!(Config::parse("[run]\nwindow_rho_max = 1.0\n").is_err());
        assert!(Config::parse("[marks]\nkind = \"uniform\"\na = 0.5\nb = 2.0\n").is_err());
        assert!(Config::parse("[marks]\nkind = \"two_point\"\nr1 = 0.5\n").is_err());
        let c = Config::parse("[marks]\nkind = \"deterministic\"\n[run]\ntarget_ball_M = 2.0\n").unwrap();
        assert!(c.marks.law().unwrap().is_degenerate());
        assert_eq!(c.run.target_ball_m, 2.0);
    }
}
