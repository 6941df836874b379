use crate::error::{Error, Result};

const GRID_TOL: f64 = 1e-9;

/// Fixed integration grid shared by both engines, so their recorded samples
/// land on identical time points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: u64,
    pub stride: u64,
}

impl TimeGrid {
    pub fn new(dt: f64, horizon: f64, record_every: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if !(record_every.is_finite() && record_every >= dt) {
            return Err(Error::Config(format!(
                "record_every ({record_every}) must be at least dt ({dt})"
            )));
        }
        if !(horizon.is_finite() && horizon >= record_every) {
            return Err(Error::Config(format!(
                "horizon ({horizon}) must be at least record_every ({record_every})"
            )));
        }
        let steps = whole_multiple(horizon, dt).ok_or_else(|| {
            Error::Config(format!(
                "horizon ({horizon}) is not a whole number of dt ({dt}) steps"
            ))
        })?;
        let stride = whole_multiple(record_every, dt).ok_or_else(|| {
            Error::Config(format!(
                "record_every ({record_every}) is not a whole number of dt ({dt}) steps"
            ))
        })?;
        Ok(Self { dt, steps, stride })
    }

    pub fn time(&self, step: u64) -> f64 {
        step as f64 * self.dt
    }

    pub fn records(&self, step: u64) -> bool {
        step.is_multiple_of(self.stride) || step == self.steps
    }

    /// Number of recorded samples, including the initial one.
    pub fn record_count(&self) -> usize {
        (self.steps / self.stride) as usize
            + 1
            + usize::from(!self.steps.is_multiple_of(self.stride))
    }
}

fn whole_multiple(x: f64, unit: f64) -> Option<u64> {
    let k = (x / unit).round();
    ((k * unit - x).abs() <= GRID_TOL * x.abs().max(1.0) && k >= 1.0).then_some(k as u64)
}
