//! Report rendering: a flat CSV with one record per metric cell, a plain-text
//! table with "mean (se)" cells, and the per-city locality summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::eval::EvalReport;
use crate::ingest::CitySummary;
use crate::metrics::{Level, Metric};
use crate::recommenders::ModelKind;

#[derive(Serialize)]
struct CellRecord<'a> {
    city: &'a str,
    model: &'a str,
    level: &'a str,
    metric: &'a str,
    mean: String,
    se: String,
    folds: String,
}

/// Writes the machine-readable report. Values use Rust's shortest
/// round-trip float formatting so reruns are byte-identical.
pub fn write_cells_csv<W: Write>(report: &EvalReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for cell in report.cells() {
        out.serialize(CellRecord {
            city: &cell.city,
            model: cell.model.name(),
            level: cell.level.name(),
            metric: cell.metric.name(),
            mean: cell.mean.to_string(),
            se: cell.se.to_string(),
            folds: cell
                .folds
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FailureRecord<'a> {
    city: &'a str,
    model: &'a str,
    fold: String,
    message: &'a str,
}

pub fn write_failures_csv<W: Write>(report: &EvalReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for f in report.failures() {
        out.serialize(FailureRecord {
            city: &f.city,
            model: f.model.name(),
            fold: f.fold.map(|v| v.to_string()).unwrap_or_default(),
            message: &f.message,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Plain-text tables, one per level: rows are metric x model, columns are
/// cities plus the average of the city means.
pub fn render_table(report: &EvalReport, models: &[ModelKind]) -> String {
    let cities: Vec<&str> = report.cities.iter().map(|c| c.city.as_str()).collect();
    let cells: BTreeMap<(&str, ModelKind, Level, Metric), (f64, f64)> = report
        .cells()
        .map(|c| {
            (
                (c.city.as_str(), c.model, c.level, c.metric),
                (c.mean, c.se),
            )
        })
        .collect();
    let failed: BTreeMap<(&str, ModelKind), ()> = report
        .failures()
        .map(|f| ((f.city.as_str(), f.model), ()))
        .collect();

    let width = 16;
    let mut s = String::new();
    for level in Level::ALL {
        let title = match level {
            Level::Track => "Tracks",
            Level::Artist => "Artists",
        };
        let _ = writeln!(s, "{title}");
        let _ = write!(s, "{:<8}{:<12}", "", "");
        for c in &cities {
            let _ = write!(s, "{c:>width$}");
        }
        let _ = writeln!(s, "{:>10}", "Average");
        for metric in Metric::ALL {
            for &model in models {
                let _ = write!(s, "{:<8}{:<12}", metric.label(), model.label());
                let mut means = Vec::new();
                for &city in &cities {
                    let text = match cells.get(&(city, model, level, metric)) {
                        Some(&(mean, se)) => {
                            means.push(mean);
                            format!("{mean:.3} ({se:.3})")
                        }
                        None if failed.contains_key(&(city, model)) => "failed".to_string(),
                        None => "-".to_string(),
                    };
                    let _ = write!(s, "{text:>width$}");
                }
                let avg = if means.len() == cities.len() && !means.is_empty() {
                    format!("{:.3}", means.iter().sum::<f64>() / means.len() as f64)
                } else {
                    "-".to_string()
                };
                let _ = writeln!(s, "{avg:>10}");
            }
        }
        s.push('\n');
    }
    let failures: Vec<_> = report.failures().collect();
    if !failures.is_empty() {
        let _ = writeln!(s, "Failures");
        for f in failures {
            let fold = f.fold.map(|v| format!(" fold {v}")).unwrap_or_default();
            let _ = writeln!(s, "  {} / {}{fold}: {}", f.city, f.model, f.message);
        }
    }
    s
}

pub fn write_summary_csv<W: Write>(summaries: &[CitySummary], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in summaries {
        out.serialize(s)?;
    }
    out.flush()?;
    Ok(())
}
