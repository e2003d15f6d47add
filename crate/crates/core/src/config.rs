//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MIN_OUTLINE_POINTS;
use crate::simbackend::FrequencyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub f_low: f64,
    pub f_high: f64,
}

impl Band {
    pub fn new(f_low: f64, f_high: f64) -> Result<Self> {
        if !(f_low.is_finite() && f_high.is_finite() && f_low > 0.0 && f_high > f_low) {
            return Err(Error::Config(format!("invalid band [{f_low}, {f_high}] GHz")));
        }
        Ok(Self { f_low, f_high })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.f_low + self.f_high)
    }
}

impl std::str::FromStr for Band {
    type Err = Error;

    /// `5:6`, `5-6` or `5,6` (GHz).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split([':', ',', '-']).map(str::trim).collect();
        match parts.as_slice() {
            [a, b] => {
                let num = |t: &str| {
                    t.parse::<f64>()
                        .map_err(|e| Error::Config(format!("band {s:?}: {e}")))
                };
                Band::new(num(a)?, num(b)?)
            }
            _ => Err(Error::Config(format!("band {s:?}: expected <low>:<high>"))),
        }
    }
}

/// Evaluation budgets. The total is shared by every stage of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    /// Cap on the whole run in coarse-equivalent simulations.
    pub total_coarse_eq: f64,
    /// Random candidates drawn before giving up.
    pub max_candidates: usize,
    /// Stored candidates re-simulated during a warm start.
    pub warm_start_checks: usize,
    pub coarse_max_iterations: usize,
    pub fine_max_iterations: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            total_coarse_eq: 2000.0,
            max_candidates: 1000,
            warm_start_checks: 2,
            coarse_max_iterations: 100,
            fine_max_iterations: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub band: Band,
    /// Classifier acceptance threshold (dB).
    pub e_t: f64,
    /// Optimization target (dB); stricter than `r_goal` to leave a margin.
    pub r_max: f64,
    /// Specification (dB).
    pub r_goal: f64,
    /// Reference scale (mm).
    pub c0: f64,
    /// Scale offsets for the scaling-model fit, relative to `c0`.
    pub delta: Vec<f64>,
    /// Number of designs used for the scaling-model fit.
    pub scaling_designs: usize,
    /// Outline points `L`.
    pub outline_len: usize,
    pub grid: FrequencyGrid,
    /// `mock` or `tabulated:<dir>`.
    pub backend: String,
    pub budgets: Budgets,
    pub sigma: f64,
    pub lambda0: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Candidate database (JSON lines). Defaults to `<output_dir>/designs.jsonl`.
    pub database: Option<PathBuf>,
    /// Scaling model file; fitted and written there when absent.
    /// Defaults to `<output_dir>/scaling.toml`.
    pub scaling_model: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            band: Band {
                f_low: 5.0,
                f_high: 6.0,
            },
            e_t: -5.0,
            r_max: -11.0,
            r_goal: -10.0,
            c0: 30.0,
            delta: vec![0.0, -5.0, 15.0],
            scaling_designs: 3,
            outline_len: 25,
            grid: FrequencyGrid::default(),
            backend: "mock".to_string(),
            budgets: Budgets::default(),
            sigma: 0.02,
            lambda0: 1.0,
            seed: 0,
            output_dir: PathBuf::from("out"),
            database: None,
            scaling_model: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        Band::new(self.band.f_low, self.band.f_high)?;
        self.grid.validate()?;
        self.grid.band_indices(self.band.f_low, self.band.f_high)?;
        if self.r_max > self.r_goal {
            return bad(format!("r_max {} must not exceed r_goal {}", self.r_max, self.r_goal));
        }
        if !(self.c0 > 0.0) {
            return bad(format!("c0 must be positive, got {}", self.c0));
        }
        if self.delta.first() != Some(&0.0) {
            return bad("delta must start with 0 (the reference scale)".into());
        }
        if self.delta.iter().any(|d| self.c0 + d <= 0.0) {
            return bad("every c0 + delta must be positive".into());
        }
        if self.scaling_designs == 0 {
            return bad("scaling_designs must be at least 1".into());
        }
        if self.outline_len < MIN_OUTLINE_POINTS {
            return bad(format!("outline_len must be at least {MIN_OUTLINE_POINTS}"));
        }
        if !(self.sigma > 0.0 && self.lambda0 > 0.0) {
            return bad("sigma and lambda0 must be positive".into());
        }
        if !(self.budgets.total_coarse_eq > 0.0) || self.budgets.max_candidates == 0 {
            return bad("budgets must be positive".into());
        }
        // TOML integers are signed.
        if i64::try_from(self.seed).is_err() {
            return bad(format!("seed {} exceeds {}", self.seed, i64::MAX));
        }
        Ok(())
    }

    /// Scale values for the scaling fit, reference first.
    pub fn c_values(&self) -> Vec<f64> {
        self.delta.iter().map(|d| self.c0 + d).collect()
    }

    /// Design-vector length `2L + 3`.
    pub fn dim(&self) -> usize {
        2 * self.outline_len + 3
    }

    pub fn database_path(&self) -> PathBuf {
        self.database
            .clone()
            .unwrap_or_else(|| self.output_dir.join("designs.jsonl"))
    }

    pub fn scaling_model_path(&self) -> PathBuf {
        self.scaling_model
            .clone()
            .unwrap_or_else(|| self.output_dir.join("scaling.toml"))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.c_values(), vec![30.0, 25.0, 45.0]);
        assert_eq!(c.dim(), 53);
        assert_eq!((c.grid.f_min, c.grid.f_max, c.grid.n_points), (1.0, 10.0, 451));
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig {
            band: Band::new(6.0, 7.0).unwrap(),
            seed: 17,
            database: Some("db.jsonl".into()),
            ..RunConfig::default()
        };
        let text = c.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = RunConfig::from_toml("seed = 3\n[band]\nf_low = 6.0\nf_high = 7.0\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.band.f_low, 6.0);
        assert_eq!(c.r_goal, -10.0);
    }

    #[test]
    fn rejects_inverted_targets() {
        assert!(RunConfig::from_toml("r_max = -9.0").is_err());
        assert!(RunConfig::from_toml("[band]\nf_low = 6.0\nf_high = 5.0").is_err());
    }

    #[test]
    fn band_parsing() {
        assert_eq!("5:6".parse::<Band>().unwrap(), Band::new(5.0, 6.0).unwrap());
        assert_eq!("6-7".parse::<Band>().unwrap().center(), 6.5);
        assert!("7".parse::<Band>().is_err());
    }
}
