//! CSV and text renderings of an evaluation report.

use std::path::Path;

use super::cv::{EvalReport, ImportanceRow, Summary};
use super::metrics::{MetricSet, P_AT_THRESHOLDS_MM};
use super::Result;
use crate::io::{self, Cell};

pub const REPORT_HEADERS: [&str; 16] = [
    "model",
    "fold",
    "n_train",
    "n_val",
    "n_test",
    "best_iteration",
    "rmse_mm",
    "mae_mm",
    "medae_mm",
    "r2",
    "p10",
    "p20",
    "p30",
    "p40",
    "p50",
    "runtime_s",
];

/// Marker written where R² is undefined.
pub const UNDEFINED: &str = "undefined";

fn metric_cells(m: &MetricSet) -> Vec<Cell> {
    let mut cells = vec![
        Cell::Real(m.rmse_mm),
        Cell::Real(m.mae_mm),
        Cell::Real(m.medae_mm),
        m.r2.map_or(Cell::from(UNDEFINED), Cell::Real),
    ];
    cells.extend(m.p_at.iter().map(|&p| Cell::Real(p)));
    cells.push(Cell::Real(m.runtime_s));
    cells
}

fn summary_rows(s: &Summary) -> [Vec<Cell>; 2] {
    let pick = |half: bool| {
        let sel = |v: (f64, f64)| Cell::Real(if half { v.1 } else { v.0 });
        let mut row = vec![
            Cell::from(s.model.name()),
            Cell::from(if half { "ci95" } else { "mean" }),
            Cell::from(""),
            Cell::from(""),
            Cell::from(""),
            Cell::from(""),
            sel(s.rmse_mm),
            sel(s.mae_mm),
            sel(s.medae_mm),
            s.r2.map_or(Cell::from(UNDEFINED), sel),
        ];
        row.extend(s.p_at.iter().map(|&v| sel(v)));
        row.push(if half {
            Cell::from("")
        } else {
            Cell::Real(s.runtime_s)
        });
        row
    };
    [pick(false), pick(true)]
}

/// Per-fold rows, then a `mean` and a `ci95` row per model.
pub fn report_rows(report: &EvalReport) -> Result<Vec<Vec<Cell>>> {
    let mut rows = Vec::new();
    for model in report.models() {
        for r in report.fold_results(model) {
            let mut row = vec![
                Cell::from(model.name()),
                Cell::Real(r.fold as f64),
                Cell::Real(r.n_train as f64),
                Cell::Real(r.n_val as f64),
                Cell::Real(r.n_test as f64),
                r.best_iteration
                    .map_or(Cell::from(""), |b| Cell::Real(b as f64)),
            ];
            row.extend(metric_cells(&r.metrics));
            rows.push(row);
        }
        if report.fold_results(model).len() >= 2 {
            rows.extend(summary_rows(&report.summary(model)?));
        }
    }
    Ok(rows)
}

pub fn write_report_csv(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    io::write_table(&REPORT_HEADERS, &report_rows(report)?, path)?;
    Ok(())
}

/// `feature,fold,delta_rmse_mm`.
pub fn write_importance_csv(rows: &[ImportanceRow], path: impl AsRef<Path>) -> Result<()> {
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::from(r.feature.as_str()),
                Cell::Real(r.fold as f64),
                Cell::Real(r.delta_rmse_mm),
            ]
        })
        .collect();
    io::write_table(&["feature", "fold", "delta_rmse_mm"], &cells, path)?;
    Ok(())
}

fn pm(v: (f64, f64), digits: usize) -> String {
    format!("{:.*} ± {:.*}", digits, v.0, digits, v.1)
}

/// Side-by-side table: error metrics and runtime, then the P@m rows.
pub fn render_summary(report: &EvalReport) -> Result<String> {
    let summaries = report
        .models()
        .into_iter()
        .map(|m| report.summary(m))
        .collect::<Result<Vec<_>>>()?;
    let mut lines: Vec<(String, Vec<String>)> = vec![
        (
            "Metric".into(),
            summaries
                .iter()
                .map(|s| s.model.label().to_string())
                .collect(),
        ),
        (
            "RMSE (mm)".into(),
            summaries.iter().map(|s| pm(s.rmse_mm, 2)).collect(),
        ),
        (
            "MAE (mm)".into(),
            summaries.iter().map(|s| pm(s.mae_mm, 2)).collect(),
        ),
        (
            "MedAE (mm)".into(),
            summaries.iter().map(|s| pm(s.medae_mm, 2)).collect(),
        ),
        (
            "R²".into(),
            summaries
                .iter()
                .map(|s| s.r2.map_or(UNDEFINED.to_string(), |v| pm(v, 3)))
                .collect(),
        ),
        (
            "Runtime / fold (s)".into(),
            summaries
                .iter()
                .map(|s| format!("{:.1}", s.runtime_s))
                .collect(),
        ),
        (String::new(), vec![String::new(); summaries.len()]),
    ];
    for (i, t) in P_AT_THRESHOLDS_MM.iter().enumerate() {
        lines.push((
            format!("P@{t} mm"),
            summaries.iter().map(|s| pm(s.p_at[i], 3)).collect(),
        ));
    }
    let label_width = lines
        .iter()
        .map(|(l, _)| l.chars().count())
        .max()
        .unwrap_or(0);
    let col_width = lines
        .iter()
        .flat_map(|(_, c)| c.iter().map(|v| v.chars().count()))
        .max()
        .unwrap_or(0);
    let mut out = format!(
        "{}-fold spatial cross-validation (mean ± 95% CI)\n",
        report.n_folds
    );
    for (label, cols) in lines {
        let mut line = format!("{label:<label_width$}");
        for c in cols {
            line.push_str(&format!("  {c:>col_width$}"));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    Ok(out)
}
