//! Deterministic stock-flow engine: fixed-step RK4 over the three stocks.

use serde::{Deserialize, Serialize};

use crate::actives::ActivesTable;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::{Derivatives, ModelParams, StateVector};
use crate::trajectory::{ClampEvent, Sample, Stock, Trajectory};

pub const DEFAULT_DT: f64 = 1.0 / 1024.0;
pub const DEFAULT_HORIZON: f64 = 100.0;
pub const DEFAULT_RECORD_EVERY: f64 = 0.25;
/// Thymus-derived naive density at birth, cells·mm⁻³.
pub const INITIAL_NAIVE: f64 = 3673.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdConfig {
    pub dt: f64,
    pub horizon: f64,
    pub record_every: f64,
    pub initial: StateVector,
}

impl Default for SdConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            horizon: DEFAULT_HORIZON,
            record_every: DEFAULT_RECORD_EVERY,
            initial: StateVector::new(0.0, INITIAL_NAIVE, 0.0, 0.0),
        }
    }
}

impl SdConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        let g = TimeGrid::new(self.dt, self.horizon, self.record_every)?;
        let StateVector { t, n, np, m } = self.initial;
        if t != 0.0 {
            return Err(Error::Config(format!(
                "initial state must start at t = 0, got {t}"
            )));
        }
        if [n, np, m].iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "initial stocks must be finite and non-negative".into(),
            ));
        }
        Ok(g)
    }
}

fn checked(d: Derivatives, t: f64) -> Result<Derivatives> {
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Diverged { t })
    }
}

fn advance(s: &StateVector, d: &Derivatives, h: f64) -> StateVector {
    StateVector::new(s.t + h, s.n + h * d.dn, s.np + h * d.dnp, s.m + h * d.dm)
}

/// One classic fourth-order Runge-Kutta step. Stocks that land below zero
/// are reset to zero and logged in `clamps`.
pub fn rk4_step(
    state: &StateVector,
    dt: f64,
    p: &ModelParams,
    actives: &ActivesTable,
    clamps: &mut Vec<ClampEvent>,
) -> Result<StateVector> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    let k1 = checked(p.derivatives(state, actives), state.t)?;
    let k2 = checked(
        p.derivatives(&advance(state, &k1, half), actives),
        state.t + half,
    )?;
    let k3 = checked(
        p.derivatives(&advance(state, &k2, half), actives),
        state.t + half,
    )?;
    let k4 = checked(
        p.derivatives(&advance(state, &k3, dt), actives),
        state.t + dt,
    )?;

    let sixth = dt / 6.0;
    let combine = |a: f64, b: f64, c: f64, d: f64| sixth * (a + 2.0 * b + 2.0 * c + d);
    let t = state.t + dt;
    let mut next = StateVector::new(
        t,
        state.n + combine(k1.dn, k2.dn, k3.dn, k4.dn),
        state.np + combine(k1.dnp, k2.dnp, k3.dnp, k4.dnp),
        state.m + combine(k1.dm, k2.dm, k3.dm, k4.dm),
    );
    for (stock, value) in [
        (Stock::N, &mut next.n),
        (Stock::Np, &mut next.np),
        (Stock::M, &mut next.m),
    ] {
        if !value.is_finite() {
            return Err(Error::Diverged { t });
        }
        if *value < 0.0 {
            clamps.push(ClampEvent {
                t,
                stock,
                value: *value,
            });
            *value = 0.0;
        }
    }
    Ok(next)
}

/// Integrates from `cfg.initial` to `cfg.horizon`, recording every
/// `cfg.record_every` years.
pub fn run_sd(cfg: &SdConfig, p: &ModelParams, actives: &ActivesTable) -> Result<Trajectory> {
    p.validate()?;
    let grid = cfg.grid()?;
    let mut traj = Trajectory {
        samples: Vec::with_capacity(grid.record_count()),
        clamps: Vec::new(),
    };
    let mut state = cfg.initial;
    traj.samples.push(Sample::from(state));
    for step in 1..=grid.steps {
        state = rk4_step(&state, grid.dt, p, actives, &mut traj.clamps)?;
        // pin t to the grid so long runs do not accumulate rounding drift
        state.t = grid.time(step);
        if grid.records(step) {
            traj.samples.push(Sample::from(state));
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn zeros() -> ActivesTable {
        ActivesTable::zeros()
    }

    #[test]
    fn fixed_point_only_advances_time() {
        let p = ModelParams {
            s0: 0.0,
            ..Scenario::Two.params()
        };
        let s = StateVector::new(2.0, 0.0, 0.0, 0.0);
        let mut clamps = Vec::new();
        let next = rk4_step(&s, 0.01, &p, &zeros(), &mut clamps).unwrap();
        assert_eq!(next, StateVector::new(2.01, 0.0, 0.0, 0.0));
        assert!(clamps.is_empty());
    }

    #[test]
    fn one_step_matches_fine_euler() {
        let p = Scenario::Two.params();
        let s = StateVector::default();
        let next = rk4_step(&s, 0.001, &p, &zeros(), &mut Vec::new()).unwrap();

        // brute-force oracle: forward Euler with dt = 1e-7
        let mut e = s;
        let h = 1e-7;
        for i in 0..10_000 {
            let d = p.derivatives(&e, &zeros());
            e = StateVector::new(
                (i + 1) as f64 * h,
                e.n + h * d.dn,
                e.np + h * d.dnp,
                e.m + h * d.dm,
            );
        }
        assert!((next.n - e.n).abs() < 1e-4, "rk4 {} euler {}", next.n, e.n);
        assert!((next.np - e.np).abs() < 1e-4);
        // s0*dt less the decay during the step
        assert!((next.n - 56.430).abs() < 1e-3, "n = {}", next.n);
    }

    #[test]
    fn linear_decay_step() {
        // dN/dt = -N
        let p = ModelParams {
            s0: 0.0,
            lambda_n: 0.0,
            mu_n: 1.0,
            b: 0.0,
            ..ModelParams::default()
        };
        let s = StateVector::new(0.0, 1.0, 0.0, 0.0);
        let next = rk4_step(&s, 0.1, &p, &zeros(), &mut Vec::new()).unwrap();
        let h: f64 = 0.1;
        let taylor4 = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((next.n - taylor4).abs() < 1e-15);
        // local error is the h^5/120 truncation term, 8.2e-8
        let err = (next.n - (-h).exp()).abs();
        assert!(err < 1e-7 && err > 8e-8, "err = {err}");
    }

    #[test]
    fn negative_overshoot_is_clamped_and_logged() {
        // explosive Np growth raises the N death rate sharply within the step
        let p = ModelParams {
            s0: 0.0,
            lambda_n: 0.0,
            mu_n: 1.0,
            b: 50.0,
            c: 1000.0,
            np_bar: 100.0,
            ..ModelParams::default()
        };
        let s = StateVector::new(0.0, 10.0, 10.0, 0.0);
        let mut clamps = Vec::new();
        let next = rk4_step(&s, 0.1, &p, &zeros(), &mut clamps).unwrap();
        assert_eq!(next.n, 0.0);
        assert_eq!(clamps.len(), 1);
        assert_eq!(clamps[0].stock, Stock::N);
        assert!(clamps[0].value < 0.0);
    }

    #[test]
    fn overflow_reports_divergence() {
        let p = ModelParams {
            s0: f64::MAX,
            ..Scenario::Two.params()
        };
        let s = StateVector::new(0.0, f64::MAX, 0.0, 0.0);
        let err = rk4_step(&s, 1.0, &p, &zeros(), &mut Vec::new()).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn zero_system_gives_zero_trajectory() {
        let p = ModelParams {
            s0: 0.0,
            ..Scenario::Three.params()
        };
        let cfg = SdConfig {
            initial: StateVector::default(),
            ..SdConfig::default()
        };
        let tr = run_sd(&cfg, &p, &zeros()).unwrap();
        assert_eq!(tr.len(), 401);
        assert!(tr
            .samples
            .iter()
            .all(|s| s.n == 0.0 && s.np == 0.0 && s.m == 0.0 && s.trec_pct == 0.0));
    }

    #[test]
    fn trajectory_shape_and_determinism() {
        let cfg = SdConfig::default();
        let p = Scenario::One.params();
        let a = run_sd(&cfg, &p, &zeros()).unwrap();
        let b = run_sd(&cfg, &p, &zeros()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples[0], Sample::from(cfg.initial));
        assert!(a.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(a.horizon(), 100.0);
        assert!(a
            .samples
            .iter()
            .all(|s| (0.0..=100.0).contains(&s.trec_pct)));
    }

    #[test]
    fn scenario_one_np_peaks_then_decays() {
        let tr = run_sd(&SdConfig::default(), &Scenario::One.params(), &zeros()).unwrap();
        let (i_peak, peak) = tr
            .samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.np.total_cmp(&b.1.np))
            .unwrap();
        assert!(peak.t > 1.0 && peak.t < 30.0, "peak at {}", peak.t);
        assert!(tr.samples[i_peak..].windows(2).all(|w| w[1].np <= w[0].np));
        assert!(tr.samples.last().unwrap().np < 0.2 * peak.np);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let p = Scenario::One.params();
        let cfg = SdConfig {
            dt: -1.0,
            ..SdConfig::default()
        };
        assert!(run_sd(&cfg, &p, &zeros()).unwrap_err().is_config());
        let cfg = SdConfig {
            initial: StateVector::new(0.0, -1.0, 0.0, 0.0),
            ..SdConfig::default()
        };
        assert!(run_sd(&cfg, &p, &zeros()).is_err());
    }
}
