use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentError, ModelKind};
use crate::data::six_bus;
use crate::instance::UcInstance;
use crate::robust::CcgConfig;
use crate::solver::{BackendKind, SolveParams, Solver};
use crate::system::{load_forecast, load_system};
use crate::wasserstein::WassersteinConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub backend: BackendKind,
    pub mip_gap: f64,
    /// Seconds per MILP solve.
    pub time_limit: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: BackendKind::Highs,
            mip_gap: SolveParams::default().mip_gap,
            time_limit: None,
            seed: None,
        }
    }
}

impl SolverConfig {
    pub fn build(&self) -> Solver {
        let params = SolveParams {
            mip_gap: self.mip_gap,
            time_limit: self.time_limit,
            seed: self.seed,
            ..SolveParams::default()
        };
        Solver::new(self.backend, params)
    }
}

/// Settings of a comparison run, read from TOML or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// System JSON; the bundled 6-bus system when absent.
    pub system: Option<PathBuf>,
    /// Forecast CSV; required with `system`.
    pub forecast: Option<PathBuf>,
    pub models: Vec<ModelKind>,
    /// Training sample sizes S.
    pub sample_sizes: Vec<usize>,
    pub eval_scenarios: usize,
    pub seeds: Vec<u64>,
    /// Error standard deviation as a fraction of the forecast.
    pub sigma_ratio: f64,
    pub epsilon_grid: Vec<f64>,
    /// Fixed radius; skips the holdout selection when set.
    pub epsilon: Option<f64>,
    pub beta: f64,
    /// Training fraction of the holdout split.
    pub holdout_split: f64,
    pub output_dir: Option<PathBuf>,
    pub solver: SolverConfig,
    pub ccg: CcgConfig,
}

pub const DEFAULT_EPSILON_GRID: [f64; 6] = [0.001, 0.005, 0.01, 0.05, 0.1, 0.5];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: None,
            forecast: None,
            models: vec![ModelKind::Suc, ModelKind::Ruc, ModelKind::Awdruc],
            sample_sizes: vec![10, 40],
            eval_scenarios: 10_000,
            seeds: (0..10).collect(),
            sigma_ratio: 0.2,
            epsilon_grid: DEFAULT_EPSILON_GRID.to_vec(),
            epsilon: None,
            beta: 100.0,
            holdout_split: 0.7,
            output_dir: None,
            solver: SolverConfig::default(),
            ccg: CcgConfig {
                max_iter: crate::affine::DEFAULT_MAX_ITER,
                ..CcgConfig::default()
            },
        }
    }
}

impl ExperimentConfig {
    /// Parses by extension: `.json` as JSON, anything else as TOML.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))?
        };
        // Relative data paths are taken from the config file's directory.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.system, &mut cfg.forecast, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.models.is_empty() {
            return bad("no models requested".into());
        }
        if self.sample_sizes.iter().any(|&s| s == 0) || self.sample_sizes.is_empty() {
            return bad("sample sizes must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        if !(self.holdout_split > 0.0 && self.holdout_split < 1.0) {
            return bad(format!("holdout split must lie in (0, 1), got {}", self.holdout_split));
        }
        if self.epsilon.is_none() && self.epsilon_grid.is_empty() {
            return bad("epsilon grid is empty".into());
        }
        if self.sigma_ratio < 0.0 {
            return bad("sigma ratio must be >= 0".into());
        }
        if self.system.is_some() != self.forecast.is_some() {
            return bad("system and forecast must be given together".into());
        }
        WassersteinConfig::new(self.epsilon.unwrap_or(0.0), self.beta).map_err(ExperimentError::Config)?;
        for e in &self.epsilon_grid {
            WassersteinConfig::new(*e, self.beta).map_err(ExperimentError::Config)?;
        }
        Ok(())
    }

    pub fn load_instance(&self) -> Result<UcInstance, ExperimentError> {
        match (&self.system, &self.forecast) {
            (Some(s), Some(f)) => {
                let system = load_system(s)?;
                let forecast = load_forecast(&system, f)?;
                Ok(UcInstance::new(system, forecast)?)
            }
            _ => Ok(six_bus()),
        }
    }
}
