use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::Summary;
use crate::experiment::{AggregateReport, RunReport};
use crate::pipeline::PipelineMode;

/// Valid reports found under a directory plus one warning per file that
/// failed to parse or validate.
#[derive(Clone, Debug)]
pub struct LoadedReports {
    pub reports: Vec<RunReport>,
    pub warnings: Vec<String>,
}

fn json_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            json_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json")
            && path.file_name().is_some_and(|n| n != AggregateReport::FILE_NAME)
        {
            out.push(path);
        }
    }
    Ok(())
}

/// Recursively reads every run report below `dir`. Invalid files are skipped
/// with a warning; finding no valid report at all is an error.
pub fn load_reports(dir: &Path) -> Result<LoadedReports> {
    let mut files = Vec::new();
    json_files(dir, &mut files)?;
    files.sort();
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for path in files {
        match RunReport::read(&path) {
            Ok(r) => reports.push(r),
            Err(e) => warnings.push(format!("skipping {}: {e}", path.display())),
        }
    }
    if reports.is_empty() {
        return Err(Error::Report(format!("no valid run reports under {}", dir.display())));
    }
    Ok(LoadedReports { reports, warnings })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub method: String,
    pub seeds: Vec<u64>,
    pub rmse: Summary,
    pub mape: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

fn method_rank(report: &RunReport) -> usize {
    PipelineMode::ALL
        .iter()
        .position(|&m| m == report.config.mode)
        .unwrap_or(usize::MAX)
}

/// Groups reports by (dataset, method) and summarizes each cell over seeds.
/// A cell mixing data or noise fingerprints, or repeating a seed, is refused.
pub fn summarize(reports: &[RunReport]) -> Result<ComparisonTable> {
    let mut cells: BTreeMap<(String, usize, String), Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        cells
            .entry((r.dataset.clone(), method_rank(r), r.method.clone()))
            .or_default()
            .push(r);
    }
    let mut rows = Vec::with_capacity(cells.len());
    for ((dataset, _, method), mut runs) in cells {
        let first = runs[0];
        if let Some(other) = runs
            .iter()
            .find(|r| r.data_fingerprint != first.data_fingerprint || r.noise_fingerprint != first.noise_fingerprint)
        {
            return Err(Error::Report(format!(
                "{dataset} / {method}: experiments {} and {} use different data or noise",
                first.name, other.name
            )));
        }
        runs.sort_by_key(|r| r.seed);
        if let Some(w) = runs.windows(2).find(|w| w[0].seed == w[1].seed) {
            return Err(Error::Report(format!(
                "{dataset} / {method}: seed {} appears in both {} and {}",
                w[0].seed, w[0].name, w[1].name
            )));
        }
        let rmse: Vec<f64> = runs.iter().map(|r| r.test.rmse).collect();
        let mape: Vec<f64> = runs.iter().map(|r| r.test.mape).collect();
        rows.push(ComparisonRow {
            dataset,
            method,
            seeds: runs.iter().map(|r| r.seed).collect(),
            rmse: Summary::of(&rmse)?,
            mape: Summary::of(&mape)?,
        });
    }
    Ok(ComparisonTable { rows })
}

impl ComparisonTable {
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.method.chars().count())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for row in &self.rows {
            if current != Some(row.dataset.as_str()) {
                if current.is_some() {
                    out.push('\n');
                }
                let _ = writeln!(out, "{}", row.dataset);
                let _ = writeln!(
                    out,
                    "  {:<width$}  {:>5}  {:>17}  {:>17}",
                    "method", "seeds", "RMSE", "MAPE"
                );
                current = Some(&row.dataset);
            }
            let _ = writeln!(
                out,
                "  {:<width$}  {:>5}  {:>17}  {:>17}",
                row.method,
                row.seeds.len(),
                row.rmse.to_string(),
                row.mape.to_string()
            );
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Report(e.to_string());
        w.write_record([
            "dataset",
            "method",
            "seeds",
            "rmse",
            "mape",
            "rmse_mean",
            "rmse_std",
            "mape_mean",
            "mape_std",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.method.clone(),
                r.seeds.len().to_string(),
                r.rmse.to_string(),
                r.mape.to_string(),
                r.rmse.mean.to_string(),
                r.rmse.std.to_string(),
                r.mape.mean.to_string(),
                r.mape.std.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
    }
}
