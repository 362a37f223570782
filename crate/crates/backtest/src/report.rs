//! Report serialisation: long CSV, nested JSON and markdown tables.

use std::fmt::Write as _;

use crate::engine::{BacktestReport, PortfolioStatus, INDEX};
use crate::error::{BacktestError, Result};
use crate::grid::{GridCell, PanelSpec};

pub const CSV_HEADER: [&str; 10] = [
    "regime",
    "universe",
    "window",
    "alpha",
    "theta0_scale",
    "portfolio",
    "two_month_return",
    "sharpe",
    "sortino",
    "status",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per portfolio per cell plus one index row per cell. A failed
/// cell contributes a single row with status `error`.
pub fn cells_to_csv(cells: &[GridCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| BacktestError::Serialise(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    for cell in cells {
        let p = &cell.params;
        let lead = [
            p.regime.clone(),
            p.universe.clone(),
            p.window.to_string(),
            p.alpha.to_string(),
            p.theta0_scale.to_string(),
        ];
        let Some(report) = &cell.report else {
            let mut rec = lead.to_vec();
            rec.extend([
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "error".into(),
            ]);
            w.write_record(&rec).map_err(ser)?;
            continue;
        };
        for pf in &report.portfolios {
            let mut rec = lead.to_vec();
            rec.extend([
                pf.name.clone(),
                opt(pf.two_month_return),
                opt(pf.sharpe),
                opt(pf.sortino),
                pf.status.as_str().to_string(),
            ]);
            w.write_record(&rec).map_err(ser)?;
        }
        if report.index_return.is_some() {
            let mut rec = lead.to_vec();
            rec.extend([
                INDEX.to_string(),
                opt(report.index_return),
                String::new(),
                String::new(),
                "index".into(),
            ]);
            w.write_record(&rec).map_err(ser)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| BacktestError::Serialise(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BacktestError::Serialise(e.to_string()))
}

pub fn report_to_csv(report: &BacktestReport) -> Result<String> {
    cells_to_csv(&[GridCell {
        params: report.params.clone(),
        report: Some(report.clone()),
        error: None,
    }])
}

/// `{"cells": [...]}`, pretty-printed.
pub fn cells_to_json(cells: &[GridCell]) -> Result<String> {
    #[derive(serde::Serialize)]
    struct Doc<'a> {
        cells: &'a [GridCell],
    }
    serde_json::to_string_pretty(&Doc { cells }).map_err(|e| BacktestError::Serialise(e.to_string()))
}

/// Daily test returns, one column per portfolio (and the index).
pub fn daily_to_csv(report: &BacktestReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| BacktestError::Serialise(e.to_string());
    let shown: Vec<_> = report
        .portfolios
        .iter()
        .filter(|p| p.status == PortfolioStatus::Optimal)
        .collect();
    let mut header = vec!["date".to_string()];
    header.extend(shown.iter().map(|p| p.name.clone()));
    if report.index_daily.is_some() {
        header.push(INDEX.into());
    }
    w.write_record(&header).map_err(ser)?;
    for (k, d) in report.test_dates.iter().enumerate() {
        let mut rec = vec![d.to_string()];
        rec.extend(shown.iter().map(|p| p.daily_returns[k].to_string()));
        if let Some(ix) = &report.index_daily {
            rec.push(ix[k].to_string());
        }
        w.write_record(&rec).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| BacktestError::Serialise(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BacktestError::Serialise(e.to_string()))
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}%", 100.0 * x)).unwrap_or_else(|| "n/a".into())
}

fn ratio(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

fn portfolio_names(cells: &[GridCell]) -> Vec<String> {
    cells
        .iter()
        .filter_map(|c| c.report.as_ref())
        .map(|r| r.portfolios.iter().map(|p| p.name.clone()).collect())
        .next()
        .unwrap_or_default()
}

/// Rows for one panel: a line per portfolio with return/Sharpe/Sortino
/// per regime.
fn panel_rows(out: &mut String, cells: &[GridCell], with_index: bool) {
    for name in portfolio_names(cells) {
        let mut line = format!("| {name} |");
        for c in cells {
            match c.report.as_ref().and_then(|r| r.portfolio(&name)) {
                Some(p) if p.status == PortfolioStatus::Optimal => {
                    let _ = write!(
                        line,
                        " {} | {} | {} |",
                        pct(p.two_month_return),
                        ratio(p.sharpe),
                        ratio(p.sortino)
                    );
                }
                Some(p) => {
                    let _ = write!(line, " {} | | |", p.status.as_str());
                }
                None => line.push_str(" error | | |"),
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    if with_index {
        let mut line = String::from("| Index two-month return |");
        for c in cells {
            let v = c.report.as_ref().and_then(|r| r.index_return);
            let _ = write!(line, " {} | | |", pct(v));
        }
        out.push_str(&line);
        out.push('\n');
    }
}

fn cell_notes(spec: &PanelSpec, cells: &[GridCell]) -> Vec<String> {
    let where_ = spec.panel.as_deref().unwrap_or(&spec.caption);
    let mut notes = Vec::new();
    for c in cells {
        if let Some(e) = &c.error {
            notes.push(format!("{where_}, {}: {e}", c.params.regime));
        }
        for w in c.report.iter().flat_map(|r| &r.warnings) {
            notes.push(format!("{where_}, {}: {w}", c.params.regime));
        }
    }
    notes
}

fn flush_notes(out: &mut String, notes: &mut Vec<String>) {
    if !notes.is_empty() {
        out.push('\n');
        for n in notes.drain(..) {
            let _ = writeln!(out, "- {n}");
        }
    }
}

/// Markdown tables in the published shape: one table per caption, panels
/// stacked, regimes side by side.
pub fn panels_to_markdown(results: &[(PanelSpec, Vec<GridCell>)]) -> String {
    let mut out = String::new();
    let mut notes = Vec::new();
    let mut current: Option<usize> = None;
    for (spec, cells) in results {
        if current != Some(spec.table) {
            flush_notes(&mut out, &mut notes);
            current = Some(spec.table);
            let _ = writeln!(
                out,
                "{}## Table {}: {}\n",
                if out.is_empty() { "" } else { "\n" },
                spec.table,
                spec.caption
            );
            if let Some(u) = &spec.universe {
                let _ = writeln!(out, "Universe: {u}\n");
            }
            let mut head = String::from("| Portfolio |");
            let mut rule = String::from("|---|");
            for c in cells {
                let r = &c.params.regime;
                let _ = write!(head, " {r} two-month return | {r} Sharpe ratio | {r} Sortino ratio |");
                rule.push_str("---:|---:|---:|");
            }
            let _ = writeln!(out, "{head}\n{rule}");
        }
        if let Some(label) = &spec.panel {
            let _ = writeln!(out, "| **{label}** |{}", " |".repeat(3 * cells.len()));
        }
        panel_rows(&mut out, cells, spec.table == 1);
        notes.extend(cell_notes(spec, cells));
    }
    flush_notes(&mut out, &mut notes);
    out
}
