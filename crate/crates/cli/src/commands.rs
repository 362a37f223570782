//! The subcommands. Each loads and validates the configuration, runs, and
//! writes its files under the output directory.

use std::path::{Path, PathBuf};

use riskquad_backtest::{
    build_models, cells_to_csv, cells_to_json, daily_to_csv, panels_to_markdown, price_csv, run_backtest, run_panels,
    sensitivity_grid, table_panels, BacktestReport, GridCell, PanelSpec, PortfolioStatus, Variation, INDEX,
};
use riskquad_core::wgrm::zoo::NamedFunctional;
use riskquad_lp::{export_lp_file, solve_portfolio, LpStatus};
use serde::Serialize;

use crate::config::{self, slug, Loaded};
use crate::error::{CliError, Result};
use crate::svg::line_chart;
use crate::verify::{render, run_verify, VerifyOptions, VerifyReport};

pub const DEFAULT_OUT: &str = "riskquad-out";

/// Options shared by the commands that read a run configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub fetch: bool,
}

struct Run {
    loaded: Loaded,
    out: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn serialise<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn start(opts: &RunOptions) -> Result<Run> {
    let loaded = config::load(&opts.config, opts.fetch)?;
    let out = match (&opts.out, &loaded.config.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) if o.is_absolute() => o.clone(),
        (None, Some(o)) => opts.config.parent().unwrap_or(Path::new("")).join(o),
        (None, None) => PathBuf::from(DEFAULT_OUT),
    };
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    for (name, table) in &loaded.fetched {
        write(&out.join("data").join(format!("{}.csv", slug(name))), &price_csv(table))?;
    }
    Ok(Run { loaded, out })
}

fn lp_status(s: LpStatus) -> PortfolioStatus {
    match s {
        LpStatus::Optimal => PortfolioStatus::Optimal,
        LpStatus::Infeasible => PortfolioStatus::Infeasible,
        LpStatus::Unbounded => PortfolioStatus::Unbounded,
        LpStatus::NumericalFailure => PortfolioStatus::NumericalFailure,
    }
}

#[derive(Debug, Serialize)]
struct SolvedPortfolio {
    name: String,
    status: &'static str,
    objective: Option<f64>,
    weights: Vec<f64>,
    shift: Option<f64>,
    offsets: Vec<f64>,
    warnings: Vec<String>,
    mps: Option<String>,
}

#[derive(Debug, Serialize)]
struct SolvedRegime {
    regime: String,
    universe: String,
    tickers: Vec<String>,
    portfolios: Vec<SolvedPortfolio>,
}

fn mps_path(regime: &str, portfolio: &str) -> String {
    format!("mps/{}/{}.mps", slug(regime), slug(portfolio))
}

/// Writes every program of every regime as MPS; returns the relative paths.
fn export_models(run: &Run) -> Result<Vec<(String, String, Option<riskquad_lp::LpModel>)>> {
    let mut out = Vec::new();
    for base in run.loaded.config.base_configs() {
        for (name, model) in build_models(&base, &run.loaded.data)? {
            if let Some(m) = &model {
                write(&run.out.join(mps_path(&base.regime, &name)), &export_lp_file(m))?;
            }
            out.push((base.regime.clone(), name, model));
        }
    }
    Ok(out)
}

/// Solves each regime's programs and writes weights, objectives and MPS
/// files. Infeasible programs are reported, not errors.
pub fn cmd_optimize(opts: &RunOptions) -> Result<()> {
    let run = start(opts)?;
    let cfg = &run.loaded.config;
    let tickers = run.loaded.data.universes[&cfg.universe].tickers().to_vec();
    let mut regimes: Vec<SolvedRegime> = Vec::new();
    for (regime, name, model) in export_models(&run)? {
        if regimes.last().map(|r| &r.regime) != Some(&regime) {
            regimes.push(SolvedRegime {
                regime: regime.clone(),
                universe: cfg.universe.clone(),
                tickers: tickers.clone(),
                portfolios: Vec::new(),
            });
        }
        let solved = match &model {
            None => SolvedPortfolio {
                name: name.clone(),
                status: PortfolioStatus::EmptyScenario.as_str(),
                objective: None,
                weights: Vec::new(),
                shift: None,
                offsets: Vec::new(),
                warnings: vec!["a scenario selects no training days".into()],
                mps: None,
            },
            Some(m) => {
                let s = solve_portfolio(m, cfg.solver_tol).map_err(|e| CliError::Internal(e.to_string()))?;
                let optimal = s.status == LpStatus::Optimal;
                SolvedPortfolio {
                    name: name.clone(),
                    status: lp_status(s.status).as_str(),
                    objective: optimal.then_some(s.objective),
                    weights: s.weights,
                    shift: optimal.then_some(s.shift),
                    offsets: s.offsets,
                    warnings: s.warnings,
                    mps: Some(mps_path(&regime, &name)),
                }
            }
        };
        println!(
            "{regime} / {}: {}{}",
            solved.name,
            solved.status,
            solved.objective.map(|o| format!(", objective {o}")).unwrap_or_default()
        );
        regimes.last_mut().expect("pushed above").portfolios.push(solved);
    }

    let mut csv = String::from("regime,portfolio,status,objective,ticker,weight\n");
    for r in &regimes {
        for p in &r.portfolios {
            let objective = p.objective.map(|o| o.to_string()).unwrap_or_default();
            if p.weights.is_empty() {
                csv.push_str(&format!(
                    "{},{},{},{objective},,\n",
                    csv_field(&r.regime),
                    csv_field(&p.name),
                    p.status
                ));
            }
            for (t, w) in r.tickers.iter().zip(&p.weights) {
                csv.push_str(&format!(
                    "{},{},{},{objective},{},{w}\n",
                    csv_field(&r.regime),
                    csv_field(&p.name),
                    p.status,
                    csv_field(t)
                ));
            }
        }
    }
    write(&run.out.join("optimize.csv"), &csv)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        regimes: &'a [SolvedRegime],
    }
    write(&run.out.join("optimize.json"), &serialise(&Doc { regimes: &regimes })?)?;
    println!("wrote {}", run.out.display());
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes the MPS files only.
pub fn cmd_export_lp(opts: &RunOptions) -> Result<()> {
    let run = start(opts)?;
    for (regime, name, model) in export_models(&run)? {
        match model {
            Some(_) => println!("{}", run.out.join(mps_path(&regime, &name)).display()),
            None => println!("{regime} / {name}: empty scenario, no program"),
        }
    }
    Ok(())
}

fn baseline_spec() -> PanelSpec {
    PanelSpec {
        table: 1,
        caption: "Baseline Results".into(),
        panel: None,
        universe: None,
        variation: Variation::Baseline,
    }
}

fn as_cell(report: BacktestReport) -> GridCell {
    GridCell {
        params: report.params.clone(),
        report: Some(report),
        error: None,
    }
}

fn summarise(cells: &[GridCell]) {
    for c in cells {
        let p = &c.params;
        let head = format!(
            "{} [{} T={} alpha={} scale={}]",
            p.regime, p.universe, p.window, p.alpha, p.theta0_scale
        );
        match (&c.report, &c.error) {
            (Some(r), _) => {
                for pf in &r.portfolios {
                    let ret = pf
                        .two_month_return
                        .map(|v| format!("{:.4}", v))
                        .unwrap_or_else(|| "n/a".into());
                    println!("{head} {}: {} return {ret}", pf.name, pf.status.as_str());
                }
                if let Some(ix) = r.index_return {
                    println!("{head} {INDEX}: return {ix:.4}");
                }
            }
            (None, Some(e)) => println!("{head}: error: {e}"),
            (None, None) => {}
        }
    }
}

/// Runs one backtest per regime and writes the report, daily returns, the
/// chart and the baseline table.
pub fn cmd_backtest(opts: &RunOptions, chart: bool) -> Result<()> {
    let run = start(opts)?;
    let mut cells = Vec::new();
    for base in run.loaded.config.base_configs() {
        let report = run_backtest(&base, &run.loaded.data)?;
        let name = slug(&base.regime);
        write(
            &run.out.join("daily").join(format!("{name}.csv")),
            &daily_to_csv(&report)?,
        )?;
        if chart {
            let mut series: Vec<(String, Vec<f64>)> = report
                .portfolios
                .iter()
                .filter(|p| p.status == PortfolioStatus::Optimal)
                .map(|p| (p.name.clone(), p.daily_returns.clone()))
                .collect();
            if let Some(ix) = &report.index_daily {
                series.push((INDEX.into(), ix.clone()));
            }
            let title = format!("Baseline Portfolio Daily Return ({})", base.regime);
            write(
                &run.out.join("chart").join(format!("{name}.svg")),
                &line_chart(&title, &report.test_dates, &series),
            )?;
        }
        cells.push(as_cell(report));
    }
    summarise(&cells);
    write(&run.out.join("backtest.csv"), &cells_to_csv(&cells)?)?;
    write(&run.out.join("backtest.json"), &cells_to_json(&cells)?)?;
    write(
        &run.out.join("backtest.md"),
        &panels_to_markdown(&[(baseline_spec(), cells)]),
    )?;
    println!("wrote {}", run.out.display());
    Ok(())
}

/// The Cartesian grid when the config has one, otherwise the table panels.
/// A cell that fails is recorded in the output and the run continues.
pub fn cmd_sensitivity(opts: &RunOptions) -> Result<()> {
    let run = start(opts)?;
    let cfg = &run.loaded.config;
    let bases = cfg.base_configs();
    let cells: Vec<GridCell> = match &cfg.sensitivity.grid {
        Some(grid) => {
            let mut all = Vec::new();
            for base in &bases {
                all.extend(sensitivity_grid(base, &run.loaded.data, grid)?);
            }
            all
        }
        None => {
            let panels = table_panels(&cfg.sensitivity.panels, cfg.alt_universe.as_deref());
            let results = run_panels(&bases, &run.loaded.data, &panels)?;
            write(&run.out.join("tables.md"), &panels_to_markdown(&results))?;
            results.into_iter().flat_map(|(_, c)| c).collect()
        }
    };
    summarise(&cells);
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    write(&run.out.join("sensitivity.csv"), &cells_to_csv(&cells)?)?;
    write(&run.out.join("sensitivity.json"), &cells_to_json(&cells)?)?;
    println!("{} cells, {failed} failed; wrote {}", cells.len(), run.out.display());
    Ok(())
}

/// Prints the verification report, optionally writes it as JSON, and
/// fails with a mismatch error when any check disagrees.
pub fn cmd_verify(catalog: &[NamedFunctional], opts: &VerifyOptions, out: Option<&Path>) -> Result<VerifyReport> {
    let report = run_verify(catalog, opts)?;
    print!("{}", render(&report));
    if let Some(dir) = out {
        write(&dir.join("verify.json"), &serialise(&report)?)?;
    }
    let mismatches = report.mismatches();
    if mismatches.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Mismatch(mismatches.join("; ")))
    }
}
