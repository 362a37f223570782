//! Sensitivity runs: Cartesian override grids and the one-at-a-time panel
//! layout of the published tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_backtest, BacktestConfig, BacktestReport, CellParams, MarketData};
use crate::error::{BacktestError, Result};

/// Values to sweep. An empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOverrides {
    pub window: Vec<usize>,
    pub alpha: Vec<f64>,
    pub theta0_scale: Vec<f64>,
    pub universe: Vec<String>,
}

impl GridOverrides {
    pub fn validate(&self, data: &MarketData) -> Result<()> {
        let bad = |m: String| Err(BacktestError::Config(m));
        if let Some(w) = self.window.iter().find(|w| **w < 2) {
            return bad(format!("window override {w} is below 2"));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("alpha override {a} is outside (0, 1)"));
        }
        if let Some(s) = self.theta0_scale.iter().find(|s| !s.is_finite()) {
            return bad(format!("theta0 scale override {s} is not finite"));
        }
        if let Some(u) = self.universe.iter().find(|u| !data.universes.contains_key(*u)) {
            return Err(BacktestError::UnknownUniverse(u.clone()));
        }
        Ok(())
    }

    /// Base config with every combination applied, in the order universe,
    /// window, alpha, theta0 scale (last varies fastest).
    pub fn expand(&self, base: &BacktestConfig) -> Vec<BacktestConfig> {
        fn or_base<T: Clone>(v: &[T], b: T) -> Vec<T> {
            if v.is_empty() {
                vec![b]
            } else {
                v.to_vec()
            }
        }
        let mut out = Vec::new();
        for u in or_base(&self.universe, base.universe.clone()) {
            for &w in &or_base(&self.window, base.window) {
                for &a in &or_base(&self.alpha, base.alpha) {
                    for &s in &or_base(&self.theta0_scale, base.theta0_scale) {
                        out.push(BacktestConfig {
                            universe: u.clone(),
                            window: w,
                            alpha: a,
                            theta0_scale: s,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

/// One grid cell: its parameters and either a report or the error that
/// stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub params: CellParams,
    pub report: Option<BacktestReport>,
    pub error: Option<String>,
}

/// Runs configs in parallel; the output order matches the input order.
pub fn run_cells(cfgs: &[BacktestConfig], data: &MarketData) -> Vec<GridCell> {
    cfgs.par_iter()
        .map(|cfg| match run_backtest(cfg, data) {
            Ok(report) => GridCell {
                params: CellParams::of(cfg),
                report: Some(report),
                error: None,
            },
            Err(e) => {
                log::warn!("cell {:?} failed: {e}", CellParams::of(cfg));
                GridCell {
                    params: CellParams::of(cfg),
                    report: None,
                    error: Some(e.to_string()),
                }
            }
        })
        .collect()
}

/// Cartesian sweep of `overrides` around `base`. Bad override values fail
/// up front; a cell that fails later is recorded and the grid completes.
pub fn sensitivity_grid(base: &BacktestConfig, data: &MarketData, overrides: &GridOverrides) -> Result<Vec<GridCell>> {
    base.validate()?;
    overrides.validate(data)?;
    Ok(run_cells(&overrides.expand(base), data))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variation {
    Baseline,
    Window(usize),
    Alpha(f64),
    Theta0Scale(f64),
}

impl Variation {
    pub fn apply(&self, base: &BacktestConfig) -> BacktestConfig {
        let mut cfg = base.clone();
        match *self {
            Variation::Baseline => {}
            Variation::Window(w) => cfg.window = w,
            Variation::Alpha(a) => cfg.alpha = a,
            Variation::Theta0Scale(s) => cfg.theta0_scale = base.theta0_scale * s,
        }
        cfg
    }

    fn label(&self) -> String {
        match *self {
            Variation::Baseline => "Benchmark case".into(),
            Variation::Window(w) => format!("Change time window to T = {w}"),
            Variation::Alpha(a) => format!("Change level to α = {a:.2}"),
            Variation::Theta0Scale(s) if s >= 1.0 => format!("Change target return to θ × {s}"),
            Variation::Theta0Scale(s) => format!("Change target return to θ / {}", 1.0 / s),
        }
    }
}

/// Where a set of cells appears in the output tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub table: usize,
    pub caption: String,
    /// `None` for single-panel tables.
    pub panel: Option<String>,
    /// `None` keeps the base universe.
    pub universe: Option<String>,
    pub variation: Variation,
}

impl PanelSpec {
    pub fn apply(&self, base: &BacktestConfig) -> BacktestConfig {
        let mut cfg = self.variation.apply(base);
        if let Some(u) = &self.universe {
            cfg.universe = u.clone();
        }
        cfg
    }
}

/// The values swept one at a time in the panel tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelLayout {
    pub windows: Vec<usize>,
    pub alphas: Vec<f64>,
    pub theta0_scales: Vec<f64>,
}

impl Default for PanelLayout {
    fn default() -> Self {
        Self {
            windows: vec![120, 180],
            alphas: vec![0.90, 0.99],
            theta0_scales: vec![2.0, 0.5],
        }
    }
}

impl PanelLayout {
    pub fn validate(&self) -> Result<()> {
        GridOverrides {
            window: self.windows.clone(),
            alpha: self.alphas.clone(),
            theta0_scale: self.theta0_scales.clone(),
            universe: Vec::new(),
        }
        .validate(&MarketData::default())
    }
}

fn panel_letter(k: usize) -> char {
    (b'A' + (k % 26) as u8) as char
}

/// The published layout: the baseline, then one table each for the
/// window, level and target sweeps, then (with `alt_universe`) the
/// baseline and every sweep again on the other universe.
pub fn table_panels(layout: &PanelLayout, alt_universe: Option<&str>) -> Vec<PanelSpec> {
    let spec =
        |table: usize, caption: &str, panel: Option<String>, universe: Option<&str>, variation: Variation| PanelSpec {
            table,
            caption: caption.to_string(),
            panel,
            universe: universe.map(str::to_string),
            variation,
        };
    let sweeps: [(usize, &str, Vec<Variation>); 3] = [
        (
            2,
            "Change Time Window",
            layout.windows.iter().map(|w| Variation::Window(*w)).collect(),
        ),
        (
            3,
            "Change Level",
            layout.alphas.iter().map(|a| Variation::Alpha(*a)).collect(),
        ),
        (
            4,
            "Change Target Return",
            layout
                .theta0_scales
                .iter()
                .map(|s| Variation::Theta0Scale(*s))
                .collect(),
        ),
    ];
    let mut out = vec![spec(1, "Baseline Results", None, None, Variation::Baseline)];
    for (table, caption, vars) in &sweeps {
        for (k, v) in vars.iter().enumerate() {
            let label = format!("Panel {}: {}", panel_letter(k), v.label());
            out.push(spec(*table, caption, Some(label), None, v.clone()));
        }
    }
    if let Some(alt) = alt_universe {
        let all = std::iter::once(Variation::Baseline).chain(sweeps.iter().flat_map(|s| s.2.iter().cloned()));
        for (k, v) in all.enumerate() {
            let label = format!("Panel {}: {}", panel_letter(k), v.label());
            out.push(spec(5, "Change Underlying Assets", Some(label), Some(alt), v));
        }
    }
    out
}

/// Runs every panel for every regime base config. Cells come back in
/// panel order, regimes inner.
pub fn run_panels(
    bases: &[BacktestConfig],
    data: &MarketData,
    panels: &[PanelSpec],
) -> Result<Vec<(PanelSpec, Vec<GridCell>)>> {
    for b in bases {
        b.validate()?;
    }
    for p in panels {
        if let Some(u) = &p.universe {
            if !data.universes.contains_key(u) {
                return Err(BacktestError::UnknownUniverse(u.clone()));
            }
        }
    }
    let cfgs: Vec<BacktestConfig> = panels
        .iter()
        .flat_map(|p| bases.iter().map(move |b| p.apply(b)))
        .collect();
    let mut cells = run_cells(&cfgs, data).into_iter();
    Ok(panels
        .iter()
        .map(|p| (p.clone(), cells.by_ref().take(bases.len()).collect()))
        .collect())
}
