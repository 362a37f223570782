//! One backtest cell: split the window, build each analyst's scenario,
//! solve the analyst and manager programs on the training days, and hold
//! the weights fixed over the test days.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use riskquad_core::{Level, WeightVector};
use riskquad_data::{
    compute_returns, estimate_theta, select_periods, AnalystRule, MacroSeries, PriceTable, ReturnTable,
};
use riskquad_lp::{
    build_analyst_lp, build_manager_lp, solve_portfolio, LpModel, LpStatus, PortfolioProblem, TargetMode,
};
use serde::{Deserialize, Serialize};

use crate::error::{BacktestError, Result};
use crate::metrics::{cumulative_return, sharpe_with, sortino_with, MetricConventions};

/// How the target daily return is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Theta0Spec {
    /// Used as given.
    Value(f64),
    /// A month's cumulative return and its trading-day count, divided.
    MonthReturn { cumulative: f64, trading_days: u32 },
    /// The index's mean daily return over a calendar month, `"YYYY-MM"`.
    IndexMonth(String),
}

/// The resolved target and, for month specs, the figures behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta0 {
    pub value: f64,
    pub cumulative: Option<f64>,
    pub trading_days: Option<u32>,
}

/// `cumulative / trading_days`.
pub fn month_mean_return(cumulative: f64, trading_days: u32) -> f64 {
    cumulative / trading_days as f64
}

fn parse_month(s: &str) -> Option<(i32, u32)> {
    let (y, m) = s.split_once('-')?;
    let (y, m) = (y.parse().ok()?, m.parse().ok()?);
    (1..=12).contains(&m).then_some((y, m))
}

/// Resolves a target spec. Index months need `index` and, when `before` is
/// given, must end before that date so the target uses training data only.
pub fn resolve_theta0(spec: &Theta0Spec, index: Option<&PriceTable>, before: Option<NaiveDate>) -> Result<Theta0> {
    match spec {
        Theta0Spec::Value(v) => {
            if !v.is_finite() {
                return Err(BacktestError::Config("target return must be finite".into()));
            }
            Ok(Theta0 {
                value: *v,
                cumulative: None,
                trading_days: None,
            })
        }
        Theta0Spec::MonthReturn {
            cumulative,
            trading_days,
        } => {
            if *trading_days == 0 || !cumulative.is_finite() {
                return Err(BacktestError::Config(
                    "month return needs a finite return and at least one day".into(),
                ));
            }
            Ok(Theta0 {
                value: month_mean_return(*cumulative, *trading_days),
                cumulative: Some(*cumulative),
                trading_days: Some(*trading_days),
            })
        }
        Theta0Spec::IndexMonth(month) => {
            let (y, m) = parse_month(month)
                .ok_or_else(|| BacktestError::Config(format!("bad month {month:?}, expected YYYY-MM")))?;
            let index = index
                .ok_or_else(|| BacktestError::MissingInput("an index price series for the target month".into()))?;
            let in_month = |d: &NaiveDate| d.year() == y && d.month() == m;
            let dates = index.dates();
            let first = dates
                .iter()
                .position(in_month)
                .ok_or_else(|| BacktestError::MonthAbsent(month.clone()))?;
            if first == 0 {
                // No close before the month to measure the first day from.
                return Err(BacktestError::MonthAbsent(month.clone()));
            }
            let last = dates.iter().rposition(in_month).expect("month has a first day");
            if let Some(cut) = before {
                if dates[last] >= cut {
                    return Err(BacktestError::Config(format!(
                        "target month {month} is not before the cutoff {cut}"
                    )));
                }
            }
            let p = |k: usize| index.prices()[k][0];
            let cumulative = p(last) / p(first - 1) - 1.0;
            let days = (last - first + 1) as u32;
            Ok(Theta0 {
                value: month_mean_return(cumulative, days),
                cumulative: Some(cumulative),
                trading_days: Some(days),
            })
        }
    }
}

/// One analyst: a label, a day-selection rule and a weight in the manager's
/// aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalystSpec {
    pub name: String,
    pub rule: AnalystRule,
    pub weight: f64,
}

/// Four analysts, rate and CPI above and below median, equally weighted.
pub fn default_analysts() -> Vec<AnalystSpec> {
    [
        AnalystRule::RateAboveMedian,
        AnalystRule::RateBelowMedian,
        AnalystRule::CpiAboveMedian,
        AnalystRule::CpiBelowMedian,
    ]
    .into_iter()
    .enumerate()
    .map(|(i, rule)| AnalystSpec {
        name: format!("Analyst {}", i + 1),
        rule,
        weight: 0.25,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// Label of the market regime, carried into reports.
    pub regime: String,
    pub universe: String,
    pub cutoff: NaiveDate,
    /// Last date the window may reach; `None` uses the end of the data.
    pub end: Option<NaiveDate>,
    /// Number of return days in the window.
    pub window: usize,
    pub alpha: f64,
    pub theta0: Theta0Spec,
    pub theta0_scale: f64,
    pub rf_annual: f64,
    pub analysts: Vec<AnalystSpec>,
    pub manager_mode: Option<TargetMode>,
    pub analyst_mode: Option<TargetMode>,
    pub conventions: MetricConventions,
    pub solver_tol: f64,
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BacktestError::Config(m));
        if self.window < 2 {
            return bad(format!("window must be at least 2 days, got {}", self.window));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !self.theta0_scale.is_finite() {
            return bad("theta0 scale must be finite".into());
        }
        if !self.rf_annual.is_finite() {
            return bad("risk-free rate must be finite".into());
        }
        if self.analysts.is_empty() {
            return bad("at least one analyst is required".into());
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1e-3) {
            return bad(format!("solver tolerance {} is out of range", self.solver_tol));
        }
        if !(self.conventions.periods_per_year > 0.0) {
            return bad("periods per year must be positive".into());
        }
        self.weights()?;
        let mut names = std::collections::HashSet::new();
        for a in &self.analysts {
            if a.name.is_empty() || a.name == MANAGER || a.name == INDEX || !names.insert(&a.name) {
                return bad(format!("analyst name {:?} is empty, reserved or repeated", a.name));
            }
        }
        if let Some(end) = self.end.filter(|e| *e < self.cutoff) {
            return bad(format!("end {end} precedes the cutoff {}", self.cutoff));
        }
        Ok(())
    }

    pub fn weights(&self) -> Result<WeightVector> {
        Ok(WeightVector::new(self.analysts.iter().map(|a| a.weight).collect())?)
    }
}

pub const MANAGER: &str = "Manager";
pub const INDEX: &str = "Index";

/// Everything a run reads. Universes map a name to its price table.
#[derive(Debug, Clone, Default)]
pub struct MarketData {
    pub universes: BTreeMap<String, PriceTable>,
    pub index: Option<PriceTable>,
    pub rate: Option<MacroSeries>,
    pub cpi: Option<MacroSeries>,
}

/// The training and test segments of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: ReturnTable,
    pub test: ReturnTable,
}

/// Takes the last `window` return days ending on or before `end` and cuts
/// them at `cutoff`: train strictly before it, test on or after it.
pub fn split(r: &ReturnTable, cutoff: NaiveDate, window: usize, end: Option<NaiveDate>) -> Result<Split> {
    let stop = match end {
        Some(e) => r.dates().partition_point(|d| *d <= e),
        None => r.num_days(),
    };
    if stop < window {
        return Err(BacktestError::ShortData {
            needed: window,
            available: stop,
        });
    }
    let start = stop - window;
    let dates = &r.dates()[start..stop];
    let (first, last) = (dates[0], dates[window - 1]);
    if cutoff < first || cutoff > last {
        return Err(BacktestError::CutoffOutsideWindow {
            cutoff,
            start: first,
            end: last,
        });
    }
    let cut = start + dates.partition_point(|d| *d < cutoff);
    if cut == start {
        return Err(BacktestError::EmptySegment("training"));
    }
    if cut == stop {
        return Err(BacktestError::EmptySegment("test"));
    }
    Ok(Split {
        train: r.slice(start..cut),
        test: r.slice(cut..stop),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortfolioStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    /// A scenario selected no training days.
    EmptyScenario,
}

impl PortfolioStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PortfolioStatus::Optimal => "optimal",
            PortfolioStatus::Infeasible => "infeasible",
            PortfolioStatus::Unbounded => "unbounded",
            PortfolioStatus::NumericalFailure => "numerical_failure",
            PortfolioStatus::EmptyScenario => "empty_scenario",
        }
    }
}

impl From<LpStatus> for PortfolioStatus {
    fn from(s: LpStatus) -> Self {
        match s {
            LpStatus::Optimal => PortfolioStatus::Optimal,
            LpStatus::Infeasible => PortfolioStatus::Infeasible,
            LpStatus::Unbounded => PortfolioStatus::Unbounded,
            LpStatus::NumericalFailure => PortfolioStatus::NumericalFailure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioReport {
    pub name: String,
    pub status: PortfolioStatus,
    /// Optimal program value (weighted ES of the training losses).
    pub objective: Option<f64>,
    pub weights: Vec<f64>,
    pub daily_returns: Vec<f64>,
    pub two_month_return: Option<f64>,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    pub warnings: Vec<String>,
}

impl PortfolioReport {
    fn failed(name: &str, status: PortfolioStatus, warning: Option<String>) -> Self {
        Self {
            name: name.to_string(),
            status,
            objective: None,
            weights: Vec::new(),
            daily_returns: Vec::new(),
            two_month_return: None,
            sharpe: None,
            sortino: None,
            warnings: warning.into_iter().collect(),
        }
    }
}

/// The parameters that identify a cell of a sensitivity grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub regime: String,
    pub universe: String,
    pub window: usize,
    pub alpha: f64,
    pub theta0_scale: f64,
}

impl CellParams {
    pub fn of(cfg: &BacktestConfig) -> Self {
        Self {
            regime: cfg.regime.clone(),
            universe: cfg.universe.clone(),
            window: cfg.window,
            alpha: cfg.alpha,
            theta0_scale: cfg.theta0_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub params: CellParams,
    pub tickers: Vec<String>,
    pub train_dates: (NaiveDate, NaiveDate),
    pub test_dates: Vec<NaiveDate>,
    /// Target after scaling.
    pub theta0: f64,
    pub theta0_source: Theta0,
    /// Training days picked by each analyst.
    pub scenario_days: Vec<usize>,
    /// Analysts in configuration order, then the manager.
    pub portfolios: Vec<PortfolioReport>,
    pub index_daily: Option<Vec<f64>>,
    pub index_return: Option<f64>,
    pub warnings: Vec<String>,
}

impl BacktestReport {
    pub fn portfolio(&self, name: &str) -> Option<&PortfolioReport> {
        self.portfolios.iter().find(|p| p.name == name)
    }
}

/// Daily portfolio returns `Σ_j x_j r_jk`.
pub fn apply_weights(x: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Index returns on `dates`, or the first date the index does not cover.
fn index_returns_on(index: &PriceTable, dates: &[NaiveDate]) -> Result<std::result::Result<Vec<f64>, NaiveDate>> {
    let r = compute_returns(index)?;
    let mut out = Vec::with_capacity(dates.len());
    for d in dates {
        match r.dates().binary_search(d) {
            Ok(k) => out.push(r.rows()[k][0]),
            Err(_) => return Ok(Err(*d)),
        }
    }
    Ok(Ok(out))
}

fn evaluate(name: &str, cfg: &BacktestConfig, model: LpModel, test: &ReturnTable) -> Result<PortfolioReport> {
    let sol = solve_portfolio(&model, cfg.solver_tol)?;
    let status = PortfolioStatus::from(sol.status);
    if status != PortfolioStatus::Optimal {
        log::warn!(
            "{} {}: {} ({})",
            cfg.regime,
            name,
            status.as_str(),
            sol.lp.diagnostics.clone().unwrap_or_default()
        );
        return Ok(PortfolioReport::failed(name, status, sol.lp.diagnostics.clone()));
    }
    let daily = apply_weights(&sol.weights, test.rows());
    Ok(PortfolioReport {
        name: name.to_string(),
        status,
        objective: Some(sol.objective),
        two_month_return: Some(cumulative_return(&daily)),
        sharpe: sharpe_with(&daily, cfg.rf_annual, &cfg.conventions),
        sortino: sortino_with(&daily, cfg.rf_annual, &cfg.conventions),
        weights: sol.weights,
        daily_returns: daily,
        warnings: sol.warnings,
    })
}

fn scenario_mask(data: &MarketData, rule: &AnalystRule, dates: &[NaiveDate]) -> Result<Vec<bool>> {
    let series = match rule {
        // The series is not consulted for a fixed mask.
        AnalystRule::CustomMask(_) => MacroSeries::new(vec![dates[0]], vec![0.0])?,
        r if r.uses_cpi() => data
            .cpi
            .clone()
            .ok_or_else(|| BacktestError::MissingInput("a CPI series".into()))?,
        _ => data
            .rate
            .clone()
            .ok_or_else(|| BacktestError::MissingInput("an interest-rate series".into()))?,
    };
    Ok(select_periods(&series, rule, dates)?)
}

/// A cell's inputs after splitting and scenario construction.
struct Prepared {
    train: ReturnTable,
    test: ReturnTable,
    source: Theta0,
    theta0: f64,
    alpha: Level,
    scenarios: Vec<ScenarioRows>,
}

/// One analyst's selected training rows and, if any, their mean returns.
type ScenarioRows = (Vec<Vec<f64>>, Option<Vec<f64>>);

impl Prepared {
    fn new(cfg: &BacktestConfig, data: &MarketData) -> Result<Self> {
        cfg.validate()?;
        let prices = data
            .universes
            .get(&cfg.universe)
            .ok_or_else(|| BacktestError::UnknownUniverse(cfg.universe.clone()))?;
        let returns = compute_returns(prices)?;
        let Split { train, test } = split(&returns, cfg.cutoff, cfg.window, cfg.end)?;
        let source = resolve_theta0(&cfg.theta0, data.index.as_ref(), Some(cfg.cutoff))?;
        let mut scenarios = Vec::with_capacity(cfg.analysts.len());
        for a in &cfg.analysts {
            let mask = scenario_mask(data, &a.rule, train.dates())?;
            let rows = train.select(&mask)?;
            let theta = if rows.is_empty() {
                None
            } else {
                Some(estimate_theta(&train, &mask)?)
            };
            scenarios.push((rows, theta));
        }
        Ok(Self {
            train,
            test,
            source,
            theta0: source.value * cfg.theta0_scale,
            alpha: Level::new(cfg.alpha)?,
            scenarios,
        })
    }

    fn analyst_model(&self, cfg: &BacktestConfig, i: usize) -> Result<Option<LpModel>> {
        let (rows, theta) = &self.scenarios[i];
        let Some(theta) = theta else { return Ok(None) };
        let p = PortfolioProblem {
            returns: vec![rows.clone()],
            theta: vec![theta.clone()],
            theta0: self.theta0,
            alpha: self.alpha,
            mu: WeightVector::vertex(1, 0)?,
            constraint_mode: cfg.analyst_mode,
        };
        Ok(Some(build_analyst_lp(&p, 0)?))
    }

    fn manager_model(&self, cfg: &BacktestConfig) -> Result<Option<LpModel>> {
        if self.scenarios.iter().any(|s| s.1.is_none()) {
            return Ok(None);
        }
        let p = PortfolioProblem {
            returns: self.scenarios.iter().map(|s| s.0.clone()).collect(),
            theta: self
                .scenarios
                .iter()
                .map(|s| s.1.clone().expect("checked above"))
                .collect(),
            theta0: self.theta0,
            alpha: self.alpha,
            mu: cfg.weights()?,
            constraint_mode: cfg.manager_mode,
        };
        Ok(Some(build_manager_lp(&p)?))
    }
}

/// Runs one cell. Data and configuration problems are errors; an
/// unsolvable program only marks its own portfolio.
pub fn run_backtest(cfg: &BacktestConfig, data: &MarketData) -> Result<BacktestReport> {
    let prep = Prepared::new(cfg, data)?;
    let mut portfolios = Vec::with_capacity(cfg.analysts.len() + 1);
    for (i, a) in cfg.analysts.iter().enumerate() {
        let report = match prep.analyst_model(cfg, i)? {
            Some(model) => evaluate(&a.name, cfg, model, &prep.test)?,
            None => PortfolioReport::failed(
                &a.name,
                PortfolioStatus::EmptyScenario,
                Some(format!("rule {} selects no training days", a.rule.name())),
            ),
        };
        portfolios.push(report);
    }
    portfolios.push(match prep.manager_model(cfg)? {
        Some(model) => evaluate(MANAGER, cfg, model, &prep.test)?,
        None => PortfolioReport::failed(
            MANAGER,
            PortfolioStatus::EmptyScenario,
            Some("an analyst scenario selects no training days".into()),
        ),
    });

    let mut warnings = Vec::new();
    let index_daily = match &data.index {
        Some(ix) => match index_returns_on(ix, prep.test.dates())? {
            Ok(v) => Some(v),
            Err(day) => {
                let msg = format!("index has no return on {day}; index comparison omitted");
                log::warn!("{msg}");
                warnings.push(msg);
                None
            }
        },
        None => None,
    };
    let index_return = index_daily.as_deref().map(cumulative_return);
    let train_dates = prep.train.dates();
    Ok(BacktestReport {
        params: CellParams::of(cfg),
        tickers: prep.train.tickers().to_vec(),
        train_dates: (train_dates[0], train_dates[train_dates.len() - 1]),
        test_dates: prep.test.dates().to_vec(),
        theta0: prep.theta0,
        theta0_source: prep.source,
        scenario_days: prep.scenarios.iter().map(|s| s.0.len()).collect(),
        portfolios,
        index_daily,
        index_return,
        warnings,
    })
}

/// The programs a cell would solve, without solving them: the analysts'
/// in order, then the manager's. `None` marks an empty scenario.
pub fn build_models(cfg: &BacktestConfig, data: &MarketData) -> Result<Vec<(String, Option<LpModel>)>> {
    let prep = Prepared::new(cfg, data)?;
    let mut out = Vec::with_capacity(cfg.analysts.len() + 1);
    for (i, a) in cfg.analysts.iter().enumerate() {
        out.push((a.name.clone(), prep.analyst_model(cfg, i)?));
    }
    out.push((MANAGER.to_string(), prep.manager_model(cfg)?));
    Ok(out)
}
