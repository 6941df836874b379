use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thymodyn_core::validation::peak_memory_bytes;
use thymodyn_core::{run_abs, run_sd, ActivesTable, Engine, FitReport, TrecDataset};

use crate::config::ScenarioSpec;
use crate::error::CliError;

/// Files written by one run, plus its report.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: FitReport,
    pub files: Vec<PathBuf>,
}

/// File-name prefix shared by every output of a run, e.g. `sd_3`.
pub fn stem(engine: Engine, spec: &ScenarioSpec) -> String {
    format!("{engine}_{}", spec.scenario)
}

pub fn report_path(out_dir: &Path, engine: Engine, spec: &ScenarioSpec) -> PathBuf {
    out_dir.join(format!("{}_report.json", stem(engine, spec)))
}

/// Refuses horizons that end before the oldest dataset bin.
pub(crate) fn check_coverage(horizon: f64, ds: &TrecDataset) -> Result<(), CliError> {
    if horizon < ds.last_age() {
        return Err(CliError::Config(format!(
            "horizon {horizon} ends before the last dataset age {}",
            ds.last_age()
        )));
    }
    Ok(())
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Runs one engine on one scenario and writes its time series and report
/// into `out_dir`. Wall time covers the simulation only.
pub fn cmd_run(
    engine: Engine,
    spec: &ScenarioSpec,
    actives: &ActivesTable,
    out_dir: &Path,
) -> Result<RunOutput, CliError> {
    let params = spec.params()?;
    let ds = TrecDataset::embedded();
    create_dir(out_dir)?;
    let prefix = stem(engine, spec);
    let mut files = Vec::new();

    let report = match engine {
        Engine::Sd => {
            let cfg = spec.sd_config();
            check_coverage(cfg.horizon, &ds)?;
            let start = Instant::now();
            let traj = run_sd(&cfg, &params, actives)?;
            let wall = start.elapsed().as_secs_f64();
            let path = out_dir.join(format!("{prefix}_trajectory.csv"));
            traj.write_csv_path(&path)?;
            files.push(path);
            FitReport::new(spec.scenario, engine, &traj, &ds, wall, peak_memory_bytes())?
        }
        Engine::Abs => {
            let cfg = spec.abs_config();
            check_coverage(cfg.horizon, &ds)?;
            let start = Instant::now();
            let run = run_abs(&cfg, &params, actives)?;
            let wall = start.elapsed().as_secs_f64();
            for (i, rep) in run.replicates.iter().enumerate() {
                let path = out_dir.join(format!("{prefix}_rep_{i:03}.csv"));
                rep.write_csv_path(&path)?;
                files.push(path);
            }
            let path = out_dir.join(format!("{prefix}_ensemble.csv"));
            run.stats.write_csv_path(&path)?;
            files.push(path);
            let mean = run.stats.mean_trajectory();
            FitReport::new(spec.scenario, engine, &mean, &ds, wall, peak_memory_bytes())?
        }
    };

    let path = report_path(out_dir, engine, spec);
    write_json(&path, &report)?;
    files.push(path);
    Ok(RunOutput { report, files })
}
