//! Benchmark campaign configuration.

use serde::{Deserialize, Serialize};

use crate::distributions::{ExponentialThreshold, NoiseSpec};
use crate::error::{Error, Result};
use crate::models::{
    build_gas_reactor, build_sequence_forecast, build_wiener_velocity, MismatchCase,
    StateSpaceModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Wiener,
    Sequence,
    Reactor,
}

impl SystemKind {
    pub fn build(&self, case: MismatchCase) -> StateSpaceModel {
        match self {
            SystemKind::Wiener => build_wiener_velocity(case),
            SystemKind::Sequence => build_sequence_forecast(case),
            SystemKind::Reactor => build_gas_reactor(case),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Wiener => "wiener",
            SystemKind::Sequence => "sequence",
            SystemKind::Reactor => "reactor",
        }
    }

    pub fn parse(s: &str) -> Result<SystemKind> {
        match s {
            "wiener" => Ok(SystemKind::Wiener),
            "sequence" => Ok(SystemKind::Sequence),
            "reactor" => Ok(SystemKind::Reactor),
            other => Err(Error::config(format!("unknown system '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Kf,
    Convkf,
    HuberKf,
    Ekf,
    Convekf,
    Iekf,
    Ukf,
    Convukf,
    HuberUkf,
    Pf,
    Convpf,
    Apf,
    Stpf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 13] = [
        FilterKind::Kf,
        FilterKind::Convkf,
        FilterKind::HuberKf,
        FilterKind::Ekf,
        FilterKind::Convekf,
        FilterKind::Iekf,
        FilterKind::Ukf,
        FilterKind::Convukf,
        FilterKind::HuberUkf,
        FilterKind::Pf,
        FilterKind::Convpf,
        FilterKind::Apf,
        FilterKind::Stpf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Kf => "kf",
            FilterKind::Convkf => "convkf",
            FilterKind::HuberKf => "huber_kf",
            FilterKind::Ekf => "ekf",
            FilterKind::Convekf => "convekf",
            FilterKind::Iekf => "iekf",
            FilterKind::Ukf => "ukf",
            FilterKind::Convukf => "convukf",
            FilterKind::HuberUkf => "huber_ukf",
            FilterKind::Pf => "pf",
            FilterKind::Convpf => "convpf",
            FilterKind::Apf => "apf",
            FilterKind::Stpf => "stpf",
        }
    }

    pub fn parse(s: &str) -> Result<FilterKind> {
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown filter '{s}'")))
    }

    pub fn is_particle_family(&self) -> bool {
        matches!(
            self,
            FilterKind::Pf | FilterKind::Convpf | FilterKind::Apf | FilterKind::Stpf
        )
    }
}

/// (De)serialize a threshold as a positive number or the string "off".
pub mod threshold_serde {
    use super::*;
    use serde::de::Error as DeError;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        t: &ExponentialThreshold,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match t {
            ExponentialThreshold::Disabled => ser.serialize_str("off"),
            ExponentialThreshold::Rate(r) => ser.serialize_f64(*r),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<ExponentialThreshold, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(r) => {
                ExponentialThreshold::rate(r).map_err(|e| D::Error::custom(e.to_string()))
            }
            Raw::Text(s) if s == "off" || s == "-" => Ok(ExponentialThreshold::Disabled),
            Raw::Text(s) => Err(D::Error::custom(format!("invalid threshold '{s}'"))),
        }
    }
}

pub fn parse_threshold(s: &str) -> Result<ExponentialThreshold> {
    if s == "off" || s == "-" {
        return Ok(ExponentialThreshold::Disabled);
    }
    let rate: f64 = s
        .parse()
        .map_err(|_| Error::config(format!("invalid threshold '{s}'")))?;
    ExponentialThreshold::rate(rate)
}

fn default_runs() -> usize {
    100
}
fn default_steps() -> usize {
    40
}
fn default_particles() -> usize {
    200
}
fn disabled() -> ExponentialThreshold {
    ExponentialThreshold::Disabled
}

/// One benchmark campaign: (system × case × filter × parameters), seeded.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub case: MismatchCase,
    pub filter: FilterKind,
    #[serde(with = "threshold_serde", default = "disabled")]
    pub alpha: ExponentialThreshold,
    #[serde(with = "threshold_serde", default = "disabled")]
    pub beta: ExponentialThreshold,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub huber_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ut_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ut_prior_knowledge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ut_secondary: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stpf_dof: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(system: SystemKind, case: MismatchCase, filter: FilterKind) -> Self {
        Self {
            system,
            case,
            filter,
            alpha: ExponentialThreshold::Disabled,
            beta: ExponentialThreshold::Disabled,
            runs: default_runs(),
            steps: default_steps(),
            particles: default_particles(),
            seed: 0,
            huber_delta: None,
            ut_spread: None,
            ut_prior_knowledge: None,
            ut_secondary: None,
            stpf_dof: None,
        }
    }

    /// Reject incompatible or degenerate configurations before any run.
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs must be >= 1"));
        }
        if self.steps == 0 {
            return Err(Error::config("steps must be >= 1"));
        }
        if self.filter.is_particle_family() && self.particles < 2 {
            return Err(Error::config("particle filters need particles >= 2"));
        }
        if let Some(d) = self.huber_delta {
            if d <= 0.0 {
                return Err(Error::config("huber_delta must be positive"));
            }
        }
        if let Some(d) = self.stpf_dof {
            if d <= 0.0 {
                return Err(Error::config("stpf_dof must be positive"));
            }
        }
        // compatibility matrix: conv particle filtering needs noise families
        // closed under rescaling
        if self.filter == FilterKind::Convpf {
            let model = self.system.build(self.case);
            let closed = |n: &NoiseSpec| {
                matches!(n, NoiseSpec::Gaussian(_) | NoiseSpec::Laplace(_))
            };
            if !closed(&model.nominal_process_noise) || !closed(&model.nominal_meas_noise) {
                return Err(Error::config(format!(
                    "convpf on system '{}' requires Gaussian or Laplace nominal noises",
                    self.system.name()
                )));
            }
        }
        Ok(())
    }
}
