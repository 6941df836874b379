//! JSON scenario configuration.
//!
//! ```json
//! {
//!   "scenario": 1,
//!   "overrides": { "b": 0.0 },
//!   "c_basis": "mu_n",
//!   "sd": { "dt": 0.0009765625 },
//!   "abs": { "seed": 7, "replicates": 30 }
//! }
//! ```
//!
//! Every field other than `scenario` is optional. Absent values keep the
//! preset; `"custom"` starts from the base parameter table.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thymodyn_core::abs::initial_agents;
use thymodyn_core::model::ProliferationBasis;
use thymodyn_core::sd::INITIAL_NAIVE;
use thymodyn_core::{AbsConfig, ModelParams, ScenarioId, SdConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_np: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_mn: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub np_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl ParamOverrides {
    pub fn apply(&self, p: &mut ModelParams) {
        let fields = [
            (self.s0, &mut p.s0),
            (self.lambda_t, &mut p.lambda_t),
            (self.lambda_n, &mut p.lambda_n),
            (self.mu_n, &mut p.mu_n),
            (self.mu_np, &mut p.mu_np),
            (self.c, &mut p.c),
            (self.lambda_mn, &mut p.lambda_mn),
            (self.mu_m, &mut p.mu_m),
            (self.lambda_a, &mut p.lambda_a),
            (self.np_bar, &mut p.np_bar),
            (self.s_bar, &mut p.s_bar),
            (self.b, &mut p.b),
        ];
        for (value, slot) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scenario: ScenarioId,
    #[serde(default, skip_serializing_if = "is_default")]
    pub overrides: ParamOverrides,
    #[serde(default, skip_serializing_if = "is_default")]
    pub c_basis: ProliferationBasis,
    #[serde(default, skip_serializing_if = "is_default")]
    pub sd: SdOverrides,
    #[serde(default, skip_serializing_if = "is_default")]
    pub abs: AbsOverrides,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

impl ScenarioSpec {
    pub fn preset(id: impl Into<ScenarioId>) -> Self {
        Self {
            scenario: id.into(),
            overrides: ParamOverrides::default(),
            c_basis: ProliferationBasis::default(),
            sd: SdOverrides::default(),
            abs: AbsOverrides::default(),
        }
    }

    /// Preset parameters with the overrides applied, unvalidated.
    pub fn raw_params(&self) -> ModelParams {
        let mut p = match self.scenario.preset() {
            Some(s) => s.params_with(self.c_basis),
            None => ModelParams::default(),
        };
        self.overrides.apply(&mut p);
        p
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let p = self.raw_params();
        p.validate()?;
        Ok(p)
    }

    pub fn sd_config(&self) -> SdConfig {
        let d = SdConfig::default();
        SdConfig {
            dt: self.sd.dt.unwrap_or(d.dt),
            horizon: self.sd.horizon.unwrap_or(d.horizon),
            record_every: self.sd.record_every.unwrap_or(d.record_every),
            ..d
        }
    }

    pub fn abs_config(&self) -> AbsConfig {
        let d = AbsConfig::default();
        let scale = self.abs.scale.unwrap_or(d.scale);
        AbsConfig {
            dt: self.abs.dt.unwrap_or(d.dt),
            horizon: self.abs.horizon.unwrap_or(d.horizon),
            record_every: self.abs.record_every.unwrap_or(d.record_every),
            seed: self.abs.seed.unwrap_or(d.seed),
            scale,
            initial_naive: initial_agents(INITIAL_NAIVE, scale),
            replicates: self.abs.replicates.unwrap_or(d.replicates),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario spec serializes")
    }
}

/// Parses a JSON config. Syntax errors, unknown keys and parameter
/// violations all report the line they refer to.
pub fn parse_config_str(text: &str) -> Result<ScenarioSpec, CliError> {
    let spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!(
            "line {} column {}: {}",
            e.line(),
            e.column(),
            strip_position(&e)
        ))
    })?;
    if let Err(e) = spec.raw_params().validate() {
        let line = match &e {
            thymodyn_core::Error::InvalidParam { name, .. } => line_of_key(text, name),
            _ => None,
        };
        return Err(CliError::Config(match line {
            Some(l) => format!("line {l}: {e}"),
            None => e.to_string(),
        }));
    }
    Ok(spec)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioSpec, CliError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn strip_position(e: &serde_json::Error) -> String {
    let full = e.to_string();
    match full.rfind(" at line ") {
        Some(i) => full[..i].to_string(),
        None => full,
    }
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&quoted))
        .map(|i| i + 1)
}
