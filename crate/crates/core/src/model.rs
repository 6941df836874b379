//! Rate constants, homeostatic modifiers and the right-hand side of the
//! naive/proliferated-naive/memory ODE system.
//!
//! Populations are densities in cells per mm³ of peripheral blood and time is
//! measured in years.

use serde::{Deserialize, Serialize};

use crate::actives::ActivesTable;
use crate::error::{Error, Result};

/// Thymic output at birth, cells·mm⁻³·year⁻¹.
pub const THYMIC_OUTPUT_AT_BIRTH: f64 = 56615.0;
/// Thymic half-life in years.
pub const THYMIC_HALF_LIFE: f64 = 15.7;
/// Death rate of thymus-derived naive cells, year⁻¹.
pub const NAIVE_DEATH_RATE: f64 = 4.4;
/// Death rate of proliferation-derived naive cells, year⁻¹.
pub const PROLIF_NAIVE_DEATH_RATE: f64 = 0.13;
pub const MEMORY_DEATH_RATE: f64 = 0.05;
/// Total naive density the proliferation feedback settles at once thymic
/// export has stopped, cells·mm⁻³.
pub const NAIVE_SET_POINT: f64 = 300.0;

/// All rate and scaling constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Thymic output at birth, cells·mm⁻³·year⁻¹.
    pub s0: f64,
    /// Thymic decay rate, year⁻¹.
    pub lambda_t: f64,
    /// Naive to proliferated-naive conversion rate, year⁻¹.
    pub lambda_n: f64,
    /// Baseline death rate of thymus-derived naive cells, year⁻¹.
    pub mu_n: f64,
    /// Death rate of proliferation-derived naive cells, year⁻¹.
    pub mu_np: f64,
    /// Peripheral proliferation rate, year⁻¹.
    pub c: f64,
    /// Memory to proliferated-naive reversion rate, year⁻¹.
    pub lambda_mn: f64,
    /// Memory death rate, year⁻¹.
    pub mu_m: f64,
    /// Activated to memory conversion rate, year⁻¹.
    pub lambda_a: f64,
    /// Equilibrium scaling density for the feedback terms, cells·mm⁻³.
    pub np_bar: f64,
    /// Strength of homeostatic reduction in thymic export.
    pub s_bar: f64,
    /// Strength of homeostatic increase in naive death.
    pub b: f64,
}

impl Default for ModelParams {
    /// Base rates shared by every scenario. Scenario-specific constants take
    /// the scenario-1 values, except that homeostasis and proliferation are
    /// switched off.
    fn default() -> Self {
        Self {
            s0: THYMIC_OUTPUT_AT_BIRTH,
            lambda_t: std::f64::consts::LN_2 / THYMIC_HALF_LIFE,
            lambda_n: 0.22,
            mu_n: NAIVE_DEATH_RATE,
            mu_np: PROLIF_NAIVE_DEATH_RATE,
            c: 0.0,
            lambda_mn: 0.0,
            mu_m: MEMORY_DEATH_RATE,
            lambda_a: 0.0,
            np_bar: 387.0,
            s_bar: 0.0,
            b: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 12] = [
            ("s0", self.s0),
            ("lambda_t", self.lambda_t),
            ("lambda_n", self.lambda_n),
            ("mu_n", self.mu_n),
            ("mu_np", self.mu_np),
            ("c", self.c),
            ("lambda_mn", self.lambda_mn),
            ("mu_m", self.mu_m),
            ("lambda_a", self.lambda_a),
            ("np_bar", self.np_bar),
            ("s_bar", self.s_bar),
            ("b", self.b),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be finite, got {value}"),
                });
            }
            if value < 0.0 {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be non-negative, got {value}"),
                });
            }
        }
        if self.np_bar <= 0.0 {
            return Err(Error::InvalidParam {
                name: "np_bar",
                reason: format!("must be positive, got {}", self.np_bar),
            });
        }
        Ok(())
    }

    /// Reduction of thymic export as the proliferated pool grows, in (0, 1].
    pub fn export_modifier(&self, np: f64) -> f64 {
        1.0 / (1.0 + self.s_bar * np / self.np_bar)
    }

    /// Multiplier on the thymus-derived naive death rate, in [1, 1 + b).
    pub fn death_modifier(&self, np: f64) -> f64 {
        let x = np / self.np_bar;
        1.0 + self.b * x / (1.0 + x)
    }

    /// Dilution of proliferation by the total naive pool, in (0, 1].
    pub fn dilution_modifier(&self, n: f64, np: f64) -> f64 {
        1.0 / (1.0 + (n + np) / self.np_bar)
    }

    /// Cells leaving the thymus per mm³ per year at age `t`.
    pub fn thymic_export_rate(&self, t: f64, np: f64) -> f64 {
        self.s0 * (-self.lambda_t * t).exp() * self.export_modifier(np)
    }

    /// Time derivatives of the three stocks.
    pub fn derivatives(&self, state: &StateVector, actives: &ActivesTable) -> Derivatives {
        let StateVector { t, n, np, m } = *state;
        let dn = self.thymic_export_rate(t, np)
            - (self.lambda_n + self.mu_n * self.death_modifier(np)) * n;
        let dnp = self.lambda_n * n
            + (self.c * self.dilution_modifier(n, np) - self.mu_np) * np
            + self.lambda_mn * m;
        let dm = self.lambda_a * actives.lookup(t) - self.mu_m * m - self.lambda_mn * m;
        Derivatives { dn, dnp, dm }
    }
}

/// Free-function forms of the modifiers, for callers that hold parameters
/// separately from state.
pub fn export_modifier(np: f64, p: &ModelParams) -> f64 {
    p.export_modifier(np)
}

pub fn death_modifier(np: f64, p: &ModelParams) -> f64 {
    p.death_modifier(np)
}

pub fn dilution_modifier(n: f64, np: f64, p: &ModelParams) -> f64 {
    p.dilution_modifier(n, np)
}

pub fn thymic_export_rate(t: f64, np: f64, p: &ModelParams) -> f64 {
    p.thymic_export_rate(t, np)
}

pub fn derivatives(state: &StateVector, p: &ModelParams, actives: &ActivesTable) -> Derivatives {
    p.derivatives(state, actives)
}

/// Proliferation rate that makes a proliferated-naive pool of
/// [`NAIVE_SET_POINT`] cells stationary when it dies at `death_rate`.
pub fn set_point_proliferation_rate(death_rate: f64, np_bar: f64) -> f64 {
    death_rate * (1.0 + NAIVE_SET_POINT / np_bar)
}

/// Which death rate feeds [`set_point_proliferation_rate`] when a preset
/// derives `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProliferationBasis {
    /// Thymus-derived naive death rate `mu_n`.
    #[default]
    MuN,
    /// Proliferated-naive death rate `mu_np`.
    MuNp,
}

impl ProliferationBasis {
    pub fn rate(self, p: &ModelParams) -> f64 {
        let death = match self {
            ProliferationBasis::MuN => p.mu_n,
            ProliferationBasis::MuNp => p.mu_np,
        };
        set_point_proliferation_rate(death, p.np_bar)
    }
}

/// Stocks at one instant, cells·mm⁻³.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub t: f64,
    /// Naive cells of direct thymic origin.
    pub n: f64,
    /// Naive cells that have undergone peripheral proliferation.
    pub np: f64,
    /// Memory cells.
    pub m: f64,
}

impl StateVector {
    pub fn new(t: f64, n: f64, np: f64, m: f64) -> Self {
        Self { t, n, np, m }
    }

    /// Share of naive cells that are of thymic origin, in percent. Zero for
    /// an empty naive compartment.
    pub fn trec_pct(&self) -> f64 {
        let total = self.n + self.np;
        if total > 0.0 {
            100.0 * self.n / total
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub dn: f64,
    pub dnp: f64,
    pub dm: f64,
}

impl Derivatives {
    pub fn is_finite(&self) -> bool {
        self.dn.is_finite() && self.dnp.is_finite() && self.dm.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn s1() -> ModelParams {
        Scenario::One.params()
    }

    #[test]
    fn base_defaults() {
        let p = ModelParams::default();
        assert_eq!(p.lambda_t, std::f64::consts::LN_2 / 15.7);
        assert_eq!(p.mu_n, 4.4);
        assert_eq!(p.mu_m, 0.05);
        assert_eq!(p.lambda_a, 0.0);
        assert_eq!(p.s0, 56615.0);
        p.validate().unwrap();
    }

    #[test]
    fn validate_rejects_bad_values() {
        let p = ModelParams {
            mu_n: -1.0,
            ..ModelParams::default()
        };
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParam { name: "mu_n", .. })
        ));
        let p = ModelParams {
            np_bar: 0.0,
            ..ModelParams::default()
        };
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParam { name: "np_bar", .. })
        ));
        let p = ModelParams {
            c: f64::NAN,
            ..ModelParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn export_modifier_examples() {
        for s_bar in [0.0, 0.48, 3.0] {
            let p = ModelParams { s_bar, ..s1() };
            assert_eq!(p.export_modifier(0.0), 1.0);
        }
        let p = ModelParams { s_bar: 0.0, ..s1() };
        assert_eq!(p.export_modifier(500.0), 1.0);
        let p = ModelParams {
            s_bar: 0.48,
            np_bar: 387.0,
            ..s1()
        };
        assert_relative_eq!(p.export_modifier(387.0), 1.0 / 1.48, max_relative = 1e-15);
        assert_relative_eq!(p.export_modifier(387.0), 0.6757, epsilon = 1e-4);
    }

    #[test]
    fn death_modifier_examples() {
        assert_eq!(s1().death_modifier(0.0), 1.0);
        let p = ModelParams { b: 0.0, ..s1() };
        assert_eq!(p.death_modifier(10_000.0), 1.0);
        let p = ModelParams { b: 4.2, ..s1() };
        assert_relative_eq!(p.death_modifier(p.np_bar), 3.1, max_relative = 1e-15);
    }

    #[test]
    fn dilution_modifier_examples() {
        assert_eq!(s1().dilution_modifier(0.0, 0.0), 1.0);
        let p = s1();
        assert_relative_eq!(
            p.dilution_modifier(200.0, p.np_bar - 200.0),
            0.5,
            max_relative = 1e-15
        );
        let p = ModelParams {
            np_bar: 392.0,
            ..s1()
        };
        assert_relative_eq!(p.dilution_modifier(3673.0, 0.0), 0.0964, epsilon = 1e-4);
    }

    #[test]
    fn thymic_export_examples() {
        let p = ModelParams { s_bar: 0.0, ..s1() };
        assert_eq!(p.thymic_export_rate(0.0, 0.0), 56615.0);
        assert_relative_eq!(
            p.thymic_export_rate(15.7, 0.0),
            28307.5,
            max_relative = 1e-12
        );
        assert!(p.thymic_export_rate(1e4, 0.0) < 1e-100);
    }

    #[test]
    fn derivative_examples() {
        let acts = ActivesTable::zeros();
        let p2 = Scenario::Two.params();
        let d = p2.derivatives(&StateVector::new(0.0, 0.0, 0.0, 0.0), &acts);
        assert_eq!((d.dn, d.dnp, d.dm), (56615.0, 0.0, 0.0));

        let d = p2.derivatives(&StateVector::new(3.0, 500.0, 800.0, 0.0), &acts);
        assert_eq!(d.dm, 0.0);

        let d = s1().derivatives(&StateVector::new(4.0, 0.0, 100.0, 0.0), &acts);
        assert_relative_eq!(d.dnp, -13.0, max_relative = 1e-14);
    }

    #[test]
    fn proliferation_rate_examples() {
        assert_relative_eq!(
            set_point_proliferation_rate(0.13, 300.0),
            0.26,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            set_point_proliferation_rate(0.13, 713.0),
            0.1847,
            epsilon = 1e-4
        );
        assert_eq!(set_point_proliferation_rate(0.0, 123.0), 0.0);
    }

    #[test]
    fn set_point_is_stationary_and_attracting() {
        let base = ModelParams {
            s0: 0.0,
            lambda_mn: 0.0,
            ..Scenario::Three.params()
        };
        let p = ModelParams {
            c: ProliferationBasis::MuNp.rate(&base),
            ..base
        };
        let acts = ActivesTable::zeros();
        let at = |np| {
            p.derivatives(&StateVector::new(10.0, 0.0, np, 0.0), &acts)
                .dnp
        };
        assert!(
            at(300.0).abs() < 1e-12,
            "dNp/dt at set point = {}",
            at(300.0)
        );
        assert!(at(150.0) > 0.0);
        assert!(at(600.0) < 0.0);
    }

    #[test]
    fn trec_pct_of_empty_naive_pool_is_zero() {
        assert_eq!(StateVector::new(0.0, 0.0, 0.0, 5.0).trec_pct(), 0.0);
        assert_eq!(StateVector::new(0.0, 3.0, 1.0, 0.0).trec_pct(), 75.0);
    }

    fn linear_rhs(p: &ModelParams, s: &StateVector) -> f64 {
        p.s0 * (-p.lambda_t * s.t).exp() - (p.lambda_n + p.mu_n) * s.n
    }

    proptest! {
        #[test]
        fn modifiers_stay_in_range(np in 0.0f64..1e6, n in 0.0f64..1e6, b in 0.0f64..10.0, s_bar in 0.0f64..5.0) {
            let p = ModelParams { b, s_bar, ..s1() };
            let s = p.export_modifier(np);
            prop_assert!(s > 0.0 && s <= 1.0);
            let g = p.death_modifier(np);
            prop_assert!(g >= 1.0 && g <= 1.0 + b);
            if b > 0.0 {
                prop_assert!(g < 1.0 + b);
            }
            let h = p.dilution_modifier(n, np);
            prop_assert!(h > 0.0 && h <= 1.0);
        }

        #[test]
        fn modifiers_are_monotone(a in 0.0f64..1e5, d in 0.0f64..1e5) {
            let p = ModelParams { b: 4.2, s_bar: 0.48, ..s1() };
            let (lo, hi) = (a, a + d);
            prop_assert!(p.export_modifier(hi) <= p.export_modifier(lo));
            prop_assert!(p.death_modifier(hi) >= p.death_modifier(lo));
            prop_assert!(p.dilution_modifier(hi, 0.0) <= p.dilution_modifier(lo, 0.0));
        }

        #[test]
        fn neutral_homeostasis_reduces_to_linear_naive_equation(
            t in 0.0f64..100.0, n in 0.0f64..2e4, np in 0.0f64..2e5, m in 0.0f64..1e3,
        ) {
            let p = Scenario::Two.params();
            let s = StateVector::new(t, n, np, m);
            let d = p.derivatives(&s, &ActivesTable::zeros());
            prop_assert_eq!(d.dn, linear_rhs(&p, &s));
        }

        #[test]
        fn memory_is_inert_without_activation(t in 0.0f64..100.0, n in 0.0f64..2e4, np in 0.0f64..2e5) {
            let p = s1();
            let d = p.derivatives(&StateVector::new(t, n, np, 0.0), &ActivesTable::zeros());
            prop_assert_eq!(d.dm, 0.0);
        }
    }
}
