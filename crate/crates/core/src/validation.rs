//! TREC validation data, the SSE precision metric, engine comparison and the
//! qualitative shape checks for the three scenarios.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioId;
use crate::trajectory::{write_rows, Sample, Trajectory};

/// One age group of the TREC dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrecBin {
    pub age_lo: u32,
    pub age_hi: u32,
    /// Mean log10 TREC per 10⁶ PBMC.
    pub log10_trec: f64,
    /// Individuals in the age group.
    pub n: u32,
}

impl TrecBin {
    /// Bin midpoint; the newborn bin maps to age 0.
    pub fn age_mid(&self) -> f64 {
        0.5 * f64::from(self.age_lo + self.age_hi)
    }
}

const fn bin(age_lo: u32, age_hi: u32, log10_trec: f64, n: u32) -> TrecBin {
    TrecBin {
        age_lo,
        age_hi,
        log10_trec,
        n,
    }
}

/// TREC content of peripheral blood by age, 506 individuals in 12 groups.
pub const TREC_BINS: [TrecBin; 12] = [
    bin(0, 0, 5.03, 48),
    bin(1, 4, 4.93, 53),
    bin(5, 9, 4.86, 19),
    bin(10, 14, 4.86, 19),
    bin(15, 19, 4.56, 33),
    bin(20, 24, 3.88, 26),
    bin(25, 29, 3.75, 47),
    bin(30, 34, 3.61, 65),
    bin(35, 39, 3.54, 73),
    bin(40, 44, 3.52, 52),
    bin(45, 49, 3.37, 55),
    bin(50, 54, 3.17, 16),
];

pub const DATASET_CSV_HEADER: [&str; 4] = ["age_lo", "age_hi", "log10_trec", "n"];

#[derive(Debug, Clone, PartialEq)]
pub struct TrecDataset {
    pub bins: Vec<TrecBin>,
}

impl Default for TrecDataset {
    fn default() -> Self {
        Self::embedded()
    }
}

/// A dataset observation expressed on the model's scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub age: f64,
    pub pct: f64,
}

impl TrecDataset {
    pub fn embedded() -> Self {
        Self {
            bins: TREC_BINS.to_vec(),
        }
    }

    pub fn total_individuals(&self) -> u32 {
        self.bins.iter().map(|b| b.n).sum()
    }

    /// Thymic-origin percentage per bin, normalised so the newborn bin is
    /// 100%: `100 * 10^(v - v_newborn)`.
    pub fn to_percentage(&self) -> Vec<DataPoint> {
        let Some(first) = self.bins.first() else {
            return Vec::new();
        };
        let v0 = first.log10_trec;
        self.bins
            .iter()
            .map(|b| DataPoint {
                age: b.age_mid(),
                pct: 100.0 * 10f64.powf(b.log10_trec - v0),
            })
            .collect()
    }

    pub fn last_age(&self) -> f64 {
        self.bins.last().map_or(0.0, TrecBin::age_mid)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &DATASET_CSV_HEADER, &self.bins)
    }
}

pub fn dataset_to_percentage(ds: &TrecDataset) -> Vec<DataPoint> {
    ds.to_percentage()
}

/// Model-minus-data difference at one dataset age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub age: f64,
    pub model_pct: f64,
    pub data_pct: f64,
}

impl Residual {
    pub fn value(&self) -> f64 {
        self.model_pct - self.data_pct
    }
}

/// Residuals of `traj.trec_pct`, linearly interpolated at each bin midpoint.
pub fn residuals(traj: &Trajectory, ds: &TrecDataset) -> Result<Vec<Residual>> {
    ds.to_percentage()
        .into_iter()
        .map(|d| {
            let model_pct = traj.trec_pct_at(d.age).ok_or(Error::Coverage {
                horizon: traj.horizon(),
                needed: ds.last_age(),
            })?;
            Ok(Residual {
                age: d.age,
                model_pct,
                data_pct: d.pct,
            })
        })
        .collect()
}

pub fn sse(traj: &Trajectory, ds: &TrecDataset) -> Result<f64> {
    Ok(residuals(traj, ds)?.iter().map(|r| r.value().powi(2)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Sd,
    Abs,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Sd => "sd",
            Engine::Abs => "abs",
        })
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sd" => Ok(Engine::Sd),
            "abs" => Ok(Engine::Abs),
            other => Err(Error::Config(format!("unknown engine {other:?}"))),
        }
    }
}

/// Precision and cost of one engine run on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub scenario: ScenarioId,
    pub engine: Engine,
    pub sse: f64,
    pub wall_time_s: f64,
    pub peak_mem_bytes: Option<u64>,
    /// Model minus data, one per dataset bin.
    pub residuals: Vec<f64>,
}

impl FitReport {
    pub fn new(
        scenario: ScenarioId,
        engine: Engine,
        traj: &Trajectory,
        ds: &TrecDataset,
        wall_time_s: f64,
        peak_mem_bytes: Option<u64>,
    ) -> Result<Self> {
        let residuals: Vec<f64> = residuals(traj, ds)?.iter().map(Residual::value).collect();
        Ok(Self {
            scenario,
            engine,
            sse: residuals.iter().map(|r| r * r).sum(),
            wall_time_s,
            peak_mem_bytes,
            residuals,
        })
    }
}

/// Peak resident set size of this process, where the platform reports it.
pub fn peak_memory_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub scenario: ScenarioId,
    pub sd_sse: f64,
    pub abs_sse: f64,
    /// ABS over SD.
    pub sse_ratio: f64,
    pub sd_wall_time_s: f64,
    pub abs_wall_time_s: f64,
    /// ABS over SD.
    pub time_ratio: f64,
    pub sd_peak_mem_bytes: Option<u64>,
    pub abs_peak_mem_bytes: Option<u64>,
    pub mem_ratio: Option<f64>,
    /// SD took less wall time, and no more memory where both are known.
    pub sd_cheaper: bool,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

pub fn compare_engines(scenario: ScenarioId, sd: &FitReport, abs: &FitReport) -> ComparisonSummary {
    let mem_ratio = match (sd.peak_mem_bytes, abs.peak_mem_bytes) {
        (Some(s), Some(a)) => Some(ratio(a as f64, s as f64)),
        _ => None,
    };
    ComparisonSummary {
        scenario,
        sd_sse: sd.sse,
        abs_sse: abs.sse,
        sse_ratio: ratio(abs.sse, sd.sse),
        sd_wall_time_s: sd.wall_time_s,
        abs_wall_time_s: abs.wall_time_s,
        time_ratio: ratio(abs.wall_time_s, sd.wall_time_s),
        sd_peak_mem_bytes: sd.peak_mem_bytes,
        abs_peak_mem_bytes: abs.peak_mem_bytes,
        mem_ratio,
        sd_cheaper: sd.wall_time_s < abs.wall_time_s && mem_ratio.is_none_or(|r| r >= 1.0),
    }
}

/// Window over which plateaus are judged, years.
pub const PLATEAU_WINDOW: (f64, f64) = (60.0, 100.0);
/// Largest relative range (max - min) / max that still counts as a plateau.
pub const PLATEAU_TOLERANCE: f64 = 0.02;
/// The thymus-derived pool must peak by this age for an early decay.
pub const EARLY_PEAK_BY: f64 = 5.0;
/// ...and fall to at most this fraction of the peak by age 10.
pub const EARLY_DECAY_FRACTION: f64 = 0.5;
/// Mid-life stability: decline rate over [10, 20] at most this multiple of
/// the thymic decay rate.
pub const MID_LIFE_RATE_FACTOR: f64 = 1.5;
/// Post-20 decline: log-linear fit slope within this factor band of the
/// thymic decay rate, with at least this R².
pub const TREND_RATE_BAND: (f64, f64) = (0.5, 1.5);
pub const TREND_MIN_R2: f64 = 0.99;

const THYMIC_DECAY_RATE: f64 = std::f64::consts::LN_2 / crate::model::THYMIC_HALF_LIFE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub scenario: u8,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl Finding {
    fn new(scenario: u8, check: &str, passed: bool, detail: String) -> Self {
        Self {
            scenario,
            check: check.to_string(),
            passed,
            detail,
        }
    }
}

/// Relative range (max - min) / max of `field` over `[lo, hi]`. `None` when
/// the window is empty or the series is not positive there.
pub fn relative_range(
    traj: &Trajectory,
    lo: f64,
    hi: f64,
    field: fn(&Sample) -> f64,
) -> Option<f64> {
    let (min, max) = traj
        .window(lo, hi)
        .map(field)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    (max > 0.0 && max.is_finite()).then(|| (max - min) / max)
}

fn peak(traj: &Trajectory, field: fn(&Sample) -> f64) -> Option<(usize, f64, f64)> {
    traj.samples
        .iter()
        .enumerate()
        .max_by(|a, b| field(a.1).total_cmp(&field(b.1)))
        .map(|(i, s)| (i, s.t, field(s)))
        .filter(|&(_, _, v)| v > 0.0)
}

/// Least-squares slope and R² of `ln(field)` against `t` on `[lo, hi]`.
fn log_linear_fit(
    traj: &Trajectory,
    lo: f64,
    hi: f64,
    field: fn(&Sample) -> f64,
) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = traj.window(lo, hi).map(|s| (s.t, field(s))).collect();
    if pts.len() < 3 || pts.iter().any(|&(_, v)| v <= 0.0) {
        return None;
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let (dt, dy) = (t - mt, v.ln() - my);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sty / stt, sty * sty / (stt * syy)))
}

fn np_decays_after_peak(traj: &Trajectory) -> Finding {
    let f = |s: &Sample| s.np;
    let res = peak(traj, f).map(|(i, t, v)| {
        let monotone = traj.samples[i..].windows(2).all(|w| w[1].np <= w[0].np);
        let end = traj.samples.last().map_or(0.0, |s| s.np);
        (t, v, end, monotone && i + 1 < traj.len() && end <= 0.5 * v)
    });
    match res {
        Some((t, v, end, ok)) => Finding::new(
            1,
            "np-peak-then-decay",
            ok,
            format!("Np peaks at {v:.1} (t = {t}), ends at {end:.1}"),
        ),
        None => Finding::new(1, "np-peak-then-decay", false, "Np never positive".into()),
    }
}

fn plateau_finding(scenario: u8, check: &str, traj: &Trajectory, want_plateau: bool) -> Finding {
    let (lo, hi) = PLATEAU_WINDOW;
    let covered = traj.horizon() >= hi;
    match relative_range(traj, lo, hi, |s| s.np).filter(|_| covered) {
        Some(r) => Finding::new(
            scenario,
            check,
            (r < PLATEAU_TOLERANCE) == want_plateau,
            format!("Np relative range over [{lo}, {hi}] = {:.4}", r),
        ),
        None => Finding::new(
            scenario,
            check,
            false,
            format!("no positive Np over [{lo}, {hi}]"),
        ),
    }
}

fn n_early_decay(traj: &Trajectory) -> Finding {
    let check = "n-early-decay";
    let Some((_, t_peak, n_peak)) = peak(traj, |s| s.n) else {
        return Finding::new(3, check, false, "N never positive".into());
    };
    match traj.interpolate(10.0, |s| s.n) {
        Some(n10) => Finding::new(
            3,
            check,
            t_peak <= EARLY_PEAK_BY && n10 <= EARLY_DECAY_FRACTION * n_peak,
            format!("N peaks at {n_peak:.1} (t = {t_peak}), N(10) = {n10:.1}"),
        ),
        None => Finding::new(3, check, false, "trajectory ends before t = 10".into()),
    }
}

fn n_mid_life_stability(traj: &Trajectory) -> Finding {
    let check = "n-mid-life-stability";
    let n10 = traj.interpolate(10.0, |s| s.n);
    let n20 = traj.interpolate(20.0, |s| s.n);
    match (n10, n20) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => {
            let rate = (a / b).ln().abs() / 10.0;
            Finding::new(
                3,
                check,
                rate <= MID_LIFE_RATE_FACTOR * THYMIC_DECAY_RATE,
                format!("|d ln N/dt| over [10, 20] = {rate:.4} per year"),
            )
        }
        _ => Finding::new(3, check, false, "N not positive over [10, 20]".into()),
    }
}

fn n_exponential_trend(traj: &Trajectory) -> Finding {
    let check = "n-exponential-decline-after-20";
    match log_linear_fit(traj, 20.0, traj.horizon(), |s| s.n) {
        Some((slope, r2)) => {
            let rate = -slope;
            let (lo, hi) = TREND_RATE_BAND;
            Finding::new(
                3,
                check,
                rate >= lo * THYMIC_DECAY_RATE && rate <= hi * THYMIC_DECAY_RATE && r2 >= TREND_MIN_R2,
                format!("log-linear decay rate {rate:.4} per year (thymic {THYMIC_DECAY_RATE:.4}), R² = {r2:.5}"),
            )
        }
        None => Finding::new(3, check, false, "N not positive after t = 20".into()),
    }
}

/// Trajectories of the three preset scenarios, from either engine.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioTrajectories<'a> {
    pub one: &'a Trajectory,
    pub two: &'a Trajectory,
    pub three: &'a Trajectory,
}

/// Shape findings per scenario. Findings are reported, never raised.
pub fn qualitative_checks(t: ScenarioTrajectories<'_>) -> Vec<Finding> {
    vec![
        np_decays_after_peak(t.one),
        plateau_finding(1, "np-no-plateau", t.one, false),
        plateau_finding(2, "np-plateau", t.two, true),
        n_early_decay(t.three),
        n_mid_life_stability(t.three),
        n_exponential_trend(t.three),
    ]
}
