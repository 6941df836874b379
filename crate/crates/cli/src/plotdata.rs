use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thymodyn_core::abs::EnsembleStats;
use thymodyn_core::{dataset_to_percentage, Trajectory, TrecDataset};

use crate::error::CliError;

pub const OVERLAY_HEADER: &str = "series,age,pct";

/// Builds an overlay table: the model curve (`series = model`) followed by
/// the dataset percentages (`series = data`).
pub fn overlay(model: &Trajectory, ds: &TrecDataset) -> String {
    let mut out = String::new();
    writeln!(out, "{OVERLAY_HEADER}").unwrap();
    for s in &model.samples {
        writeln!(out, "model,{},{}", s.t, s.trec_pct).unwrap();
    }
    for p in dataset_to_percentage(ds) {
        writeln!(out, "data,{},{}", p.age, p.pct).unwrap();
    }
    out
}

fn model_curve(dir: &Path, name: &str) -> Result<Option<(String, Trajectory)>, CliError> {
    let path = dir.join(name);
    if let Some(stem) = name.strip_suffix("_trajectory.csv") {
        return Ok(Some((stem.to_string(), Trajectory::from_csv_path(&path)?)));
    }
    if let Some(stem) = name.strip_suffix("_ensemble.csv") {
        let stats = EnsembleStats::from_csv_path(&path, 0)?;
        return Ok(Some((stem.to_string(), stats.mean_trajectory())));
    }
    Ok(None)
}

/// Writes `<run>_overlay.csv` for every trajectory or ensemble in `out_dir`,
/// plus the embedded dataset as `dataset.csv`.
pub fn cmd_plotdata(out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(out_dir)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", out_dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    names.sort();

    let ds = TrecDataset::embedded();
    let mut written = Vec::new();
    for name in &names {
        if let Some((stem, model)) = model_curve(out_dir, name)? {
            let path = out_dir.join(format!("{stem}_overlay.csv"));
            fs::write(&path, overlay(&model, &ds))
                .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
            written.push(path);
        }
    }
    if written.is_empty() {
        return Err(CliError::Config(format!(
            "no run outputs in {}; run `thymodyn run` first",
            out_dir.display()
        )));
    }

    let path = out_dir.join("dataset.csv");
    let file = fs::File::create(&path)
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    ds.write_csv(std::io::BufWriter::new(file))?;
    written.push(path);
    Ok(written)
}
