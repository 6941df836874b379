//! The three published parameter scenarios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{ModelParams, ProliferationBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    /// No peripheral proliferation.
    One,
    /// No homeostatic reduction in thymic export or change of naive death rate.
    Two,
    /// Homeostatic alteration of naive death rate but not of thymic export.
    Three,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::One, Scenario::Two, Scenario::Three];

    pub fn id(self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
            Scenario::Three => 3,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::One => "no peripheral proliferation",
            Scenario::Two => "no homeostatic reduction in thymic export, no homeostatic alteration of naive death rate",
            Scenario::Three => "homeostatic alteration of naive death rate but not thymic export",
        }
    }

    /// Preset parameters, deriving `c` from `mu_n` where the scenario leaves
    /// it unset.
    pub fn params(self) -> ModelParams {
        self.params_with(ProliferationBasis::default())
    }

    pub fn params_with(self, basis: ProliferationBasis) -> ModelParams {
        let base = ModelParams::default();
        match self {
            Scenario::One => ModelParams {
                c: 0.0,
                lambda_n: 0.22,
                lambda_mn: 0.05,
                np_bar: 387.0,
                s_bar: 0.48,
                b: 3.4,
                mu_np: 0.13,
                ..base
            },
            Scenario::Two => {
                let p = ModelParams {
                    s_bar: 0.0,
                    b: 0.0,
                    lambda_n: 2.1,
                    lambda_mn: 0.0,
                    np_bar: 713.0,
                    ..base
                };
                ModelParams {
                    c: basis.rate(&p),
                    ..p
                }
            }
            Scenario::Three => {
                let p = ModelParams {
                    s_bar: 0.0,
                    lambda_n: 0.003,
                    lambda_mn: 0.0,
                    np_bar: 392.0,
                    b: 4.2,
                    ..base
                };
                ModelParams {
                    c: basis.rate(&p),
                    ..p
                }
            }
        }
    }
}

impl TryFrom<u8> for Scenario {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self, Error> {
        match id {
            1 => Ok(Scenario::One),
            2 => Ok(Scenario::Two),
            3 => Ok(Scenario::Three),
            other => Err(Error::Config(format!("unknown scenario {other}"))),
        }
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.id()
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.trim()
            .parse::<u8>()
            .map_err(|_| Error::Config(format!("unknown scenario {s:?}")))
            .and_then(Scenario::try_from)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// A preset scenario or a fully user-specified parameter set. Serialized as
/// the scenario number or the string `"custom"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenarioId", into = "RawScenarioId")]
pub enum ScenarioId {
    Preset(Scenario),
    Custom,
}

impl ScenarioId {
    pub fn preset(self) -> Option<Scenario> {
        match self {
            ScenarioId::Preset(s) => Some(s),
            ScenarioId::Custom => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawScenarioId {
    Number(u64),
    Text(String),
}

impl TryFrom<RawScenarioId> for ScenarioId {
    type Error = Error;

    fn try_from(raw: RawScenarioId) -> Result<Self, Error> {
        match raw {
            RawScenarioId::Number(n) => u8::try_from(n)
                .map_err(|_| Error::Config(format!("unknown scenario {n}")))
                .and_then(Scenario::try_from)
                .map(ScenarioId::Preset),
            RawScenarioId::Text(s) => s.parse(),
        }
    }
}

impl From<ScenarioId> for RawScenarioId {
    fn from(id: ScenarioId) -> Self {
        match id {
            ScenarioId::Preset(s) => RawScenarioId::Number(s.id().into()),
            ScenarioId::Custom => RawScenarioId::Text("custom".into()),
        }
    }
}

impl From<Scenario> for ScenarioId {
    fn from(s: Scenario) -> Self {
        ScenarioId::Preset(s)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioId::Preset(s) => s.fmt(f),
            ScenarioId::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.trim() == "custom" {
            Ok(ScenarioId::Custom)
        } else {
            s.parse().map(ScenarioId::Preset)
        }
    }
}
