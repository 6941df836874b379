//! Stochastic agent engine.
//!
//! Agents are homogeneous within a state, so the population is kept as
//! per-state counts and each time slice draws binomial counts for the
//! competing transitions. This has the same law as drawing one uniform per
//! agent and partitioning it into death, conversion or nothing.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actives::ActivesTable;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::ModelParams;
use crate::sd::{DEFAULT_DT, DEFAULT_HORIZON, DEFAULT_RECORD_EVERY, INITIAL_NAIVE};
use crate::trajectory::{read_rows, write_rows, Sample, Trajectory};

/// Largest allowed `rate * dt` for any configured rate.
pub const MAX_RATE_DT: f64 = 0.1;
pub const DEFAULT_REPLICATES: usize = 30;

pub const ENSEMBLE_CSV_HEADER: [&str; 9] = [
    "t",
    "mean_n",
    "sd_n",
    "mean_np",
    "sd_np",
    "mean_m",
    "sd_m",
    "mean_trec_pct",
    "sd_trec_pct",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsConfig {
    pub dt: f64,
    pub horizon: f64,
    pub record_every: f64,
    pub seed: u64,
    /// Cells per mm³ represented by one agent.
    pub scale: f64,
    /// Naive agents present at t = 0.
    pub initial_naive: u64,
    pub replicates: usize,
}

impl Default for AbsConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            horizon: DEFAULT_HORIZON,
            record_every: DEFAULT_RECORD_EVERY,
            seed: 0,
            scale: 1.0,
            initial_naive: INITIAL_NAIVE as u64,
            replicates: DEFAULT_REPLICATES,
        }
    }
}

impl AbsConfig {
    /// Default configuration at the given scale, with the initial naive
    /// density converted to agents.
    pub fn with_scale(scale: f64) -> Self {
        Self {
            scale,
            initial_naive: initial_agents(INITIAL_NAIVE, scale),
            ..Self::default()
        }
    }

    pub fn validate(&self, p: &ModelParams) -> Result<TimeGrid> {
        p.validate()?;
        let grid = TimeGrid::new(self.dt, self.horizon, self.record_every)?;
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Config(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        let (name, rate) = fastest_rate(p);
        if rate * self.dt > MAX_RATE_DT {
            return Err(Error::Config(format!(
                "{name} exit rate {rate} per year times dt {} exceeds {MAX_RATE_DT}",
                self.dt
            )));
        }
        Ok(grid)
    }
}

/// Agents needed to represent `cells` per mm³ at `scale` cells per agent.
pub fn initial_agents(cells: f64, scale: f64) -> u64 {
    (cells / scale).round().max(0.0) as u64
}

/// Largest total per-agent event rate over the three states, using the
/// upper bounds of the homeostatic modifiers.
fn fastest_rate(p: &ModelParams) -> (&'static str, f64) {
    [
        ("naive", p.mu_n * (1.0 + p.b) + p.lambda_n),
        ("naive-proliferating", p.mu_np + p.c),
        ("memory", p.mu_m + p.lambda_mn),
    ]
    .into_iter()
    .max_by(|a, b| a.1.total_cmp(&b.1))
    .expect("non-empty")
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentPopulation {
    pub naive: u64,
    pub naive_prolif: u64,
    pub memory: u64,
    /// Expected thymic arrivals not yet realised, in [0, 1).
    pub thymic_residue: f64,
    /// Expected memory arrivals not yet realised, in [0, 1).
    pub memory_residue: f64,
    pub t: f64,
}

impl AgentPopulation {
    pub fn new(naive: u64) -> Self {
        Self {
            naive,
            ..Self::default()
        }
    }

    pub fn total(&self) -> u64 {
        self.naive + self.naive_prolif + self.memory
    }

    pub fn sample(&self, scale: f64) -> Sample {
        let n = self.naive as f64 * scale;
        let np = self.naive_prolif as f64 * scale;
        let total = n + np;
        Sample {
            t: self.t,
            n,
            np,
            m: self.memory as f64 * scale,
            trec_pct: if total > 0.0 { 100.0 * n / total } else { 0.0 },
        }
    }
}

/// Event counts of one time slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SliceTally {
    pub thymic_births: u64,
    pub divisions: u64,
    pub memory_influx: u64,
    pub naive_deaths: u64,
    pub prolif_deaths: u64,
    pub memory_deaths: u64,
    pub conversions: u64,
    pub reversions: u64,
}

impl SliceTally {
    pub fn births(&self) -> u64 {
        self.thymic_births + self.divisions + self.memory_influx
    }

    pub fn deaths(&self) -> u64 {
        self.naive_deaths + self.prolif_deaths + self.memory_deaths
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p)
        .expect("p checked to lie in (0, 1)")
        .sample(rng)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("mean checked positive")
        .sample(rng) as u64
}

/// Competing exits from one state: returns (first, second) counts.
fn compete<R: Rng + ?Sized>(
    count: u64,
    p_first: f64,
    p_second: f64,
    state: &'static str,
    t: f64,
    rng: &mut R,
) -> Result<(u64, u64)> {
    let total = p_first + p_second;
    if total > 1.0 {
        return Err(Error::ProbabilityOverflow { state, total, t });
    }
    let first = binomial(count, p_first, rng);
    let second = if p_second > 0.0 {
        binomial(count - first, p_second / (1.0 - p_first), rng)
    } else {
        0
    };
    Ok((first, second))
}

/// Moves expected arrivals into `residue` and releases whole agents as a
/// Poisson draw.
fn arrivals<R: Rng + ?Sized>(expected: f64, residue: &mut f64, rng: &mut R) -> u64 {
    *residue += expected;
    let whole = residue.floor();
    *residue -= whole;
    poisson(whole, rng)
}

/// Advances the population by one slice of length `dt`. Homeostatic
/// modifiers are evaluated on the densities at the start of the slice.
pub fn step_abs<R: Rng + ?Sized>(
    pop: &mut AgentPopulation,
    dt: f64,
    scale: f64,
    p: &ModelParams,
    actives: &ActivesTable,
    rng: &mut R,
) -> Result<SliceTally> {
    let t = pop.t;
    let n = pop.naive as f64 * scale;
    let np = pop.naive_prolif as f64 * scale;

    let mut tally = SliceTally {
        thymic_births: arrivals(
            p.thymic_export_rate(t, np) * dt / scale,
            &mut pop.thymic_residue,
            rng,
        ),
        ..SliceTally::default()
    };

    (tally.naive_deaths, tally.conversions) = compete(
        pop.naive,
        p.mu_n * p.death_modifier(np) * dt,
        p.lambda_n * dt,
        "naive",
        t,
        rng,
    )?;
    (tally.prolif_deaths, tally.divisions) = compete(
        pop.naive_prolif,
        p.mu_np * dt,
        p.c * p.dilution_modifier(n, np) * dt,
        "naive-proliferating",
        t,
        rng,
    )?;
    (tally.memory_deaths, tally.reversions) =
        compete(pop.memory, p.mu_m * dt, p.lambda_mn * dt, "memory", t, rng)?;
    tally.memory_influx = arrivals(
        p.lambda_a * actives.lookup(t) * dt / scale,
        &mut pop.memory_residue,
        rng,
    );

    pop.naive = pop.naive - tally.naive_deaths - tally.conversions + tally.thymic_births;
    pop.naive_prolif = pop.naive_prolif - tally.prolif_deaths
        + tally.divisions
        + tally.conversions
        + tally.reversions;
    pop.memory = pop.memory - tally.memory_deaths - tally.reversions + tally.memory_influx;
    pop.t = t + dt;
    Ok(tally)
}

/// RNG for replicate `index` of an ensemble seeded with `seed`. Each
/// replicate gets its own ChaCha stream.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs one replicate on `grid`.
pub fn run_replicate(
    cfg: &AbsConfig,
    grid: &TimeGrid,
    index: usize,
    p: &ModelParams,
    actives: &ActivesTable,
) -> Result<Trajectory> {
    let mut rng = replicate_rng(cfg.seed, index);
    let mut pop = AgentPopulation::new(cfg.initial_naive);
    let mut traj = Trajectory {
        samples: Vec::with_capacity(grid.record_count()),
        clamps: Vec::new(),
    };
    traj.samples.push(pop.sample(cfg.scale));
    for step in 1..=grid.steps {
        step_abs(&mut pop, grid.dt, cfg.scale, p, actives, &mut rng)?;
        pop.t = grid.time(step);
        if grid.records(step) {
            traj.samples.push(pop.sample(cfg.scale));
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePoint {
    pub t: f64,
    pub mean_n: f64,
    pub sd_n: f64,
    pub mean_np: f64,
    pub sd_np: f64,
    pub mean_m: f64,
    pub sd_m: f64,
    pub mean_trec_pct: f64,
    pub sd_trec_pct: f64,
}

/// Per-time-point mean and sample standard deviation across replicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnsembleStats {
    pub replicates: usize,
    pub points: Vec<EnsemblePoint>,
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, sum) = values
        .clone()
        .fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = sum / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (count - 1) as f64).sqrt())
}

impl EnsembleStats {
    /// Builds statistics from replicates recorded on a common grid.
    pub fn from_replicates(reps: &[Trajectory]) -> Result<Self> {
        let first = reps
            .first()
            .ok_or_else(|| Error::Config("ensemble needs at least one replicate".into()))?;
        if reps.iter().any(|r| r.len() != first.len()) {
            return Err(Error::Config("replicates are not on a common grid".into()));
        }
        let points = (0..first.len())
            .map(|i| {
                let col = move |f: fn(&Sample) -> f64| reps.iter().map(move |r| f(&r.samples[i]));
                let (mean_n, sd_n) = mean_sd(col(|s| s.n));
                let (mean_np, sd_np) = mean_sd(col(|s| s.np));
                let (mean_m, sd_m) = mean_sd(col(|s| s.m));
                let (mean_trec_pct, sd_trec_pct) = mean_sd(col(|s| s.trec_pct));
                EnsemblePoint {
                    t: first.samples[i].t,
                    mean_n,
                    sd_n,
                    mean_np,
                    sd_np,
                    mean_m,
                    sd_m,
                    mean_trec_pct,
                    sd_trec_pct,
                }
            })
            .collect();
        Ok(Self {
            replicates: reps.len(),
            points,
        })
    }

    /// The ensemble mean as a trajectory; `trec_pct` is the mean of the
    /// per-replicate percentages.
    pub fn mean_trajectory(&self) -> Trajectory {
        Trajectory {
            samples: self
                .points
                .iter()
                .map(|p| Sample {
                    t: p.t,
                    n: p.mean_n,
                    np: p.mean_np,
                    m: p.mean_m,
                    trec_pct: p.mean_trec_pct,
                })
                .collect(),
            clamps: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &ENSEMBLE_CSV_HEADER, &self.points)
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Parses the CSV written by [`EnsembleStats::write_csv`]. The file does
    /// not record how many replicates went into it.
    pub fn from_csv<R: Read>(reader: R, replicates: usize) -> Result<Self> {
        Ok(Self {
            replicates,
            points: read_rows(reader, &ENSEMBLE_CSV_HEADER, "ensemble")?,
        })
    }

    pub fn from_csv_path(path: impl AsRef<Path>, replicates: usize) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?, replicates)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsRun {
    pub replicates: Vec<Trajectory>,
    pub stats: EnsembleStats,
}

/// Runs `cfg.replicates` independent replicates in parallel. Output order
/// follows replicate index, so scheduling cannot change the result.
pub fn run_abs(cfg: &AbsConfig, p: &ModelParams, actives: &ActivesTable) -> Result<AbsRun> {
    let grid = cfg.validate(p)?;
    let replicates = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, &grid, r, p, actives))
        .collect::<Result<Vec<_>>>()?;
    let stats = EnsembleStats::from_replicates(&replicates)?;
    Ok(AbsRun { replicates, stats })
}
