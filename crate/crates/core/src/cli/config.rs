//! Experiment configuration: a flat TOML document whose missing keys take
//! the reference parameter values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bidding::ScoringMode;
use crate::channel::ChannelParams;
use crate::evaluation::{RangeSetting, Scenario};
use crate::geometry::{BoundaryMode, Window};
use crate::scheduling::Policy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    #[default]
    NoiseLimited,
    InterferenceLimited,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub boundary_mode: BoundaryMode,
    pub lambda_t: f64,
    pub lambda_r: f64,
    pub catalog_size: usize,
    pub cache_size: usize,
    pub gamma_r: f64,
    pub gamma_c: f64,
    pub alpha: f64,
    pub mu: f64,
    pub noise_power: f64,
    pub threshold: f64,
    pub bandwidth: f64,
    pub range_mode: RangeMode,
    /// Communication radius when `range_mode = "fixed"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_range: Option<f64>,
    pub scoring_mode: ScoringMode,
    pub policies: Vec<Policy>,
    pub pa_grid: Vec<f64>,
    pub n_realizations: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let channel = ChannelParams::default();
        ExperimentConfig {
            x_min: -5.0,
            x_max: 5.0,
            y_min: -5.0,
            y_max: 5.0,
            boundary_mode: BoundaryMode::Plain,
            lambda_t: 3.0,
            lambda_r: 3.0,
            catalog_size: 100,
            cache_size: 10,
            gamma_r: 5.0,
            gamma_c: 2.5,
            alpha: channel.alpha,
            mu: channel.mu,
            noise_power: channel.noise,
            threshold: channel.threshold,
            bandwidth: channel.bandwidth,
            range_mode: RangeMode::NoiseLimited,
            fixed_range: None,
            scoring_mode: ScoringMode::Exact,
            policies: Policy::ALL.to_vec(),
            pa_grid: default_grid(),
            n_realizations: 100,
            seed: 1,
        }
    }
}

fn default_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(doc: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(doc).map_err(|e| {
            let line = e
                .span()
                .map(|s| doc[..s.start.min(doc.len())].matches('\n').count() + 1)
                .unwrap_or(1);
            ConfigError::Parse {
                line,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn window(&self) -> Result<Window, ConfigError> {
        Window::new(self.x_min, self.x_max, self.y_min, self.y_max, self.boundary_mode)
            .map_err(|e| ConfigError::invalid("window", e.to_string()))
    }

    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            alpha: self.alpha,
            mu: self.mu,
            noise: self.noise_power,
            threshold: self.threshold,
            bandwidth: self.bandwidth,
        }
    }

    pub fn range(&self) -> Result<RangeSetting, ConfigError> {
        match (self.range_mode, self.fixed_range) {
            (RangeMode::NoiseLimited, None) => Ok(RangeSetting::NoiseLimited),
            (RangeMode::InterferenceLimited, None) => Ok(RangeSetting::InterferenceLimited),
            (RangeMode::Fixed, Some(r)) => Ok(RangeSetting::Fixed(r)),
            (RangeMode::Fixed, None) => Err(ConfigError::invalid(
                "fixed_range",
                "required when range_mode = \"fixed\"",
            )),
            (_, Some(_)) => Err(ConfigError::invalid(
                "fixed_range",
                "only allowed when range_mode = \"fixed\"",
            )),
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        Ok(Scenario {
            window: self.window()?,
            lambda_t: self.lambda_t,
            lambda_r: self.lambda_r,
            catalog_size: self.catalog_size,
            cache_size: self.cache_size,
            gamma_r: self.gamma_r,
            gamma_c: self.gamma_c,
            channel: self.channel(),
            range: self.range()?,
            scoring: self.scoring_mode,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let scenario = self.scenario()?;
        scenario.validate().map_err(|e| match e {
            crate::Error::InvalidParameter { name, reason } => ConfigError::invalid(name, reason),
            other => ConfigError::invalid("config", other.to_string()),
        })?;
        if self.policies.is_empty() {
            return Err(ConfigError::invalid("policies", "at least one policy is required"));
        }
        validate_grid(&self.pa_grid)?;
        if self.range_mode == RangeMode::InterferenceLimited {
            if let Some(p) = self.pa_grid.iter().find(|&&p| p <= 0.0 || p >= 1.0) {
                return Err(ConfigError::invalid(
                    "pa_grid",
                    format!("interference_limited range needs every p_A in (0, 1), got {p}"),
                ));
            }
        }
        if self.n_realizations == 0 {
            return Err(ConfigError::invalid("n_realizations", "must be >= 1"));
        }
        Ok(())
    }
}

fn validate_grid(grid: &[f64]) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(ConfigError::invalid("pa_grid", "must not be empty"));
    }
    if let Some(p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ConfigError::invalid(
            "pa_grid",
            format!("p_A must lie in [0, 1], got {p}"),
        ));
    }
    Ok(())
}

/// Reads and validates a config file. An empty file yields the defaults.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let doc = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::from_toml_str(&doc)
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_pa_grid(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = |msg: &str| ConfigError::invalid("pa_grid", format!("`{spec}`: {msg}"));
    if parts.len() != 3 {
        return Err(bad("expected start:stop:step"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("not a number"))?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) {
        return Err(bad("step must be > 0"));
    }
    if stop < start {
        return Err(bad("stop must be >= start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // rounding to 12 decimals keeps 0.1 + 2·0.1 printing as 0.3
    let grid: Vec<f64> = (0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect();
    validate_grid(&grid)?;
    Ok(grid)
}

/// Parses a comma-separated policy list.
pub fn parse_policies(list: &str) -> Result<Vec<Policy>, ConfigError> {
    let policies = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Policy>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ConfigError::invalid("policies", e.to_string()))?;
    if policies.is_empty() {
        return Err(ConfigError::invalid("policies", "empty policy list"));
    }
    Ok(policies)
}
