use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acceptance::Profile;
use crate::error::{Error, Result};
use crate::gaussgen::{HurstParam, Method};
use crate::sde::DriftKind;
use crate::stats::{TwoSampleStat, DEFAULT_BOOTSTRAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SampleFbm,
    Penalized,
    Limit,
    Sde,
    DriftTable,
    Compare,
    Persistence,
    Accept,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SampleFbm => "sample-fbm",
            Experiment::Penalized => "penalized",
            Experiment::Limit => "limit",
            Experiment::Sde => "sde",
            Experiment::DriftTable => "drift-table",
            Experiment::Compare => "compare",
            Experiment::Persistence => "persistence",
            Experiment::Accept => "accept",
        }
    }
}

/// One experiment, as a flat key-value file. Every field is optional so that
/// a file, the command line and the defaults can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_unit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<DriftKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_noise: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoints: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stat: Option<TwoSampleStat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boot: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! layer {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<file>".to_string());
            Error::config(field, e.message().trim().to_string())
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &ExperimentConfig) -> Self {
        layer!(self, top; experiment, hurst, horizon, horizons, steps, steps_per_unit, count, dt,
            seed, out_dir, method, ess_floor, kind, zero_noise, endpoints, t_grid, x_grid, dump,
            a, b, stat, boot, time, threshold, profile, threads);
        self
    }

    /// Fill unset fields with the defaults of `experiment`.
    pub fn with_defaults(self, experiment: Experiment) -> Self {
        let mut d = ExperimentConfig {
            experiment: Some(experiment),
            seed: Some(0),
            out_dir: Some(PathBuf::from(".")),
            ..Default::default()
        };
        match experiment {
            Experiment::SampleFbm => {
                d.hurst = Some(0.5);
                d.horizon = Some(1.0);
                d.steps = Some(1024);
                d.count = Some(100);
                d.method = Some(Method::Auto);
            }
            Experiment::Penalized | Experiment::Persistence => {
                d.hurst = Some(0.5);
                d.horizons = Some(vec![64.0, 256.0, 1024.0]);
                d.steps_per_unit = Some(crate::penalize::DEFAULT_STEPS_PER_UNIT);
                d.count = Some(10_000);
            }
            Experiment::Limit => {
                d.hurst = Some(0.5);
                d.steps = Some(1024);
                d.count = Some(100_000);
                d.boot = Some(DEFAULT_BOOTSTRAP);
                d.dump = Some(false);
                d.ess_floor = Some(crate::penalize::DEFAULT_ESS_FLOOR);
            }
            Experiment::Sde => {
                d.kind = Some(DriftKind::Penalized);
                d.dt = Some(1e-3);
                d.count = Some(1000);
                d.zero_noise = Some(false);
                d.endpoints = Some(false);
            }
            Experiment::DriftTable => {
                d.kind = Some(DriftKind::Penalized);
                d.t_grid = Some((0..10).map(|i| i as f64 / 10.0).collect());
                d.x_grid = Some((1..=20).map(|i| i as f64 * 0.25).collect());
            }
            Experiment::Compare => {
                d.stat = Some(TwoSampleStat::Ks);
                d.boot = Some(DEFAULT_BOOTSTRAP);
                d.time = Some(1.0);
                d.threshold = Some(0.02);
            }
            Experiment::Accept => {
                d.profile = Some(Profile::Full);
            }
        }
        d.overlay(&self)
    }

    pub fn require<T: Clone>(field: &str, value: &Option<T>) -> Result<T> {
        value.clone().ok_or_else(|| Error::config(field, "missing value"))
    }

    pub fn hurst_param(&self) -> Result<HurstParam> {
        let h = Self::require("hurst", &self.hurst)?;
        HurstParam::new(h).map_err(|e| Error::config("hurst", e.to_string()))
    }

    pub fn positive(field: &str, value: &Option<f64>) -> Result<f64> {
        let v = Self::require(field, value)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::config(field, format!("must be positive, got {v}")))
        }
    }

    pub fn at_least(field: &str, value: &Option<usize>, min: usize) -> Result<usize> {
        let v = Self::require(field, value)?;
        if v >= min {
            Ok(v)
        } else {
            Err(Error::config(field, format!("must be at least {min}, got {v}")))
        }
    }

    /// Number of Euler steps for `dt`, which must divide 1.
    pub fn euler_steps(&self) -> Result<usize> {
        let dt = Self::positive("dt", &self.dt)?;
        let n = (1.0 / dt).round();
        if dt > 1.0 || ((n * dt) - 1.0).abs() > 1e-9 {
            return Err(Error::config("dt", format!("1/dt must be a positive integer, got dt={dt}")));
        }
        Ok(n as usize)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_toml() {
        for e in [Experiment::SampleFbm, Experiment::Sde, Experiment::Compare, Experiment::Accept] {
            let cfg = ExperimentConfig::default().with_defaults(e);
            let text = cfg.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn flags_win_over_file() {
        let file = ExperimentConfig::from_toml("hurst = 0.3\ncount = 10\n").unwrap();
        let flags = ExperimentConfig { hurst: Some(0.7), ..Default::default() };
        let cfg = file.overlay(&flags).with_defaults(Experiment::SampleFbm);
        assert_eq!(cfg.hurst, Some(0.7));
        assert_eq!(cfg.count, Some(10));
        assert_eq!(cfg.steps, Some(1024));
    }

    #[test]
    fn unknown_key_names_the_field() {
        match ExperimentConfig::from_toml("hurts = 0.3\n") {
            Err(Error::ConfigInvalid { field, .. }) => assert_eq!(field, "hurts"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_errors_name_the_field() {
        let cfg = ExperimentConfig { hurst: Some(1.0), dt: Some(0.3), ..Default::default() };
        assert!(matches!(cfg.hurst_param(), Err(Error::ConfigInvalid { field, .. }) if field == "hurst"));
        assert!(matches!(cfg.euler_steps(), Err(Error::ConfigInvalid { field, .. }) if field == "dt"));
        let ok = ExperimentConfig { dt: Some(1e-4), ..Default::default() };
        assert_eq!(ok.euler_steps().unwrap(), 10_000);
    }
}
