use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thymodyn_core::validation::{compare_engines, peak_memory_bytes, ComparisonSummary};
use thymodyn_core::{run_abs, run_sd, ActivesTable, Engine, FitReport, TrecDataset};

use crate::config::ScenarioSpec;
use crate::error::CliError;
use crate::run::{check_coverage, create_dir, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<FitReport>,
    /// One entry per scenario that ran under both engines.
    pub comparisons: Vec<ComparisonSummary>,
}

/// Times each requested engine on each scenario, one run at a time. Peak
/// memory is the process high-water mark after the run.
pub fn cmd_bench(
    specs: &[ScenarioSpec],
    engines: &[Engine],
    actives: &ActivesTable,
) -> Result<BenchTable, CliError> {
    if specs.is_empty() {
        return Err(CliError::Config("bench needs at least one scenario".into()));
    }
    let ds = TrecDataset::embedded();
    let mut rows = Vec::new();
    let mut comparisons = Vec::new();
    for spec in specs {
        let params = spec.params()?;
        let mut sd_row = None;
        let mut abs_row = None;
        for &engine in engines {
            let row = match engine {
                Engine::Sd => {
                    let cfg = spec.sd_config();
                    check_coverage(cfg.horizon, &ds)?;
                    let start = Instant::now();
                    let traj = run_sd(&cfg, &params, actives)?;
                    let wall = start.elapsed().as_secs_f64();
                    FitReport::new(spec.scenario, engine, &traj, &ds, wall, peak_memory_bytes())?
                }
                Engine::Abs => {
                    let cfg = spec.abs_config();
                    check_coverage(cfg.horizon, &ds)?;
                    let start = Instant::now();
                    let run = run_abs(&cfg, &params, actives)?;
                    let wall = start.elapsed().as_secs_f64();
                    let mean = run.stats.mean_trajectory();
                    FitReport::new(spec.scenario, engine, &mean, &ds, wall, peak_memory_bytes())?
                }
            };
            match engine {
                Engine::Sd => sd_row = Some(row.clone()),
                Engine::Abs => abs_row = Some(row.clone()),
            }
            rows.push(row);
        }
        if let (Some(sd), Some(abs)) = (&sd_row, &abs_row) {
            comparisons.push(compare_engines(spec.scenario, sd, abs));
        }
    }
    Ok(BenchTable { rows, comparisons })
}

fn mem_cell(bytes: Option<u64>) -> String {
    bytes.map_or_else(
        || "n/a".to_string(),
        |b| format!("{:.1}", b as f64 / (1024.0 * 1024.0)),
    )
}

impl BenchTable {
    /// Aligned plain-text table, one line per row.
    pub fn render(&self) -> String {
        let header = ["scenario", "engine", "wall_time_s", "peak_mem_mib", "sse"];
        let cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.scenario.to_string(),
                    r.engine.to_string(),
                    format!("{:.4}", r.wall_time_s),
                    mem_cell(r.peak_mem_bytes),
                    format!("{:.2}", r.sse),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[&str]| {
            let parts: Vec<String> = row
                .iter()
                .zip(width)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i < 2 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
        };
        line(&mut out, &header);
        for row in &cells {
            line(&mut out, &row.each_ref().map(String::as_str));
        }
        for c in &self.comparisons {
            writeln!(
                out,
                "scenario {}: abs/sd time {:.1}x, sd cheaper: {}",
                c.scenario,
                c.time_ratio,
                if c.sd_cheaper { "yes" } else { "no" }
            )
            .unwrap();
        }
        out
    }

    /// Writes `bench.txt` and `bench.json` into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        create_dir(out_dir)?;
        let txt = out_dir.join("bench.txt");
        std::fs::write(&txt, self.render())
            .map_err(|e| CliError::io(format!("writing {}", txt.display()), e))?;
        let json = out_dir.join("bench.json");
        write_json(&json, self)?;
        Ok(vec![txt, json])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use thymodyn_core::{Scenario, ScenarioId};

    fn row(scenario: u8, engine: Engine, wall: f64) -> FitReport {
        FitReport {
            scenario: ScenarioId::Preset(Scenario::try_from(scenario).unwrap()),
            engine,
            sse: 1234.5,
            wall_time_s: wall,
            peak_mem_bytes: None,
            residuals: vec![],
        }
    }

    #[test]
    fn render_aligns_columns() {
        let table = BenchTable {
            rows: vec![row(1, Engine::Sd, 0.02), row(1, Engine::Abs, 12.5)],
            comparisons: vec![],
        };
        let text = table.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("scenario  engine"));
        let col = |l: &str| l.find("1234.50").unwrap();
        assert_eq!(col(lines[1]), col(lines[2]));
        assert!(lines[1].contains("n/a"));
    }

    #[test]
    fn empty_spec_list_is_rejected() {
        assert_eq!(
            cmd_bench(&[], &[Engine::Sd], &ActivesTable::zeros())
                .unwrap_err()
                .code(),
            2
        );
    }

    #[test]
    fn sd_only_bench() {
        let specs: Vec<ScenarioSpec> = Scenario::ALL
            .into_iter()
            .map(ScenarioSpec::preset)
            .collect();
        let table = cmd_bench(&specs, &[Engine::Sd], &ActivesTable::zeros()).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert!(table.comparisons.is_empty());
        assert!(table
            .rows
            .iter()
            .all(|r| r.engine == Engine::Sd && r.sse.is_finite()));
    }
}
