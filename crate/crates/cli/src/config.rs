//! The JSON run configuration, its validation and the data it points at.
//!
//! Relative paths resolve against `RISKQUAD_DATA_DIR` when set, otherwise
//! against the directory holding the config file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use riskquad_backtest::{
    default_analysts, AnalystSpec, BacktestConfig, GridOverrides, MarketData, MetricConventions, PanelLayout,
    Theta0Spec,
};
use riskquad_data::{fetch_prices, load_macro, load_prices, Cleaned, PriceTable};
use riskquad_lp::TargetMode;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DATA_DIR_ENV: &str = "RISKQUAD_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    /// Universe the regimes run on.
    pub universe: String,
    /// Universe for the changed-assets table.
    #[serde(default)]
    pub alt_universe: Option<String>,
    pub regimes: Vec<RegimeConfig>,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub theta0_scale: f64,
    #[serde(default = "default_rf")]
    pub rf_annual: f64,
    #[serde(default = "default_analysts")]
    pub analysts: Vec<AnalystSpec>,
    #[serde(default)]
    pub manager_mode: Option<TargetMode>,
    #[serde(default)]
    pub analyst_mode: Option<TargetMode>,
    #[serde(default)]
    pub conventions: MetricConventions,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
}

fn default_window() -> usize {
    150
}

fn default_alpha() -> f64 {
    0.95
}

fn one() -> f64 {
    1.0
}

fn default_rf() -> f64 {
    0.0365
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Universe name to wide price CSV.
    #[serde(default)]
    pub universes: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub index: Option<PathBuf>,
    #[serde(default)]
    pub rate: Option<PathBuf>,
    #[serde(default)]
    pub cpi: Option<PathBuf>,
    /// Used instead of the price files when `--fetch` is given.
    #[serde(default)]
    pub fetch: Option<FetchConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchConfig {
    /// URL template with `{ticker}`, `{start}` and `{end}` placeholders.
    pub endpoint: String,
    /// Universe name to tickers.
    pub tickers: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub index_ticker: Option<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub name: String,
    pub cutoff: NaiveDate,
    #[serde(default)]
    pub end: Option<NaiveDate>,
    pub theta0: Theta0Spec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    /// A Cartesian grid. Without one, `sensitivity` runs the table panels.
    pub grid: Option<GridOverrides>,
    pub panels: PanelLayout,
}

/// Lowercase file-name form of a label.
pub fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn config_err(m: impl Into<String>) -> CliError {
    CliError::Config(m.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// One backtest config per regime.
    pub fn base_configs(&self) -> Vec<BacktestConfig> {
        self.regimes
            .iter()
            .map(|r| BacktestConfig {
                regime: r.name.clone(),
                universe: self.universe.clone(),
                cutoff: r.cutoff,
                end: r.end,
                window: self.window,
                alpha: self.alpha,
                theta0: r.theta0.clone(),
                theta0_scale: self.theta0_scale,
                rf_annual: self.rf_annual,
                analysts: self.analysts.clone(),
                manager_mode: self.manager_mode,
                analyst_mode: self.analyst_mode,
                conventions: self.conventions,
                solver_tol: self.solver_tol,
            })
            .collect()
    }

    /// Universe names available for the run, from files or the fetch list.
    pub fn universe_names(&self, fetch: bool) -> BTreeSet<String> {
        match (&self.data.fetch, fetch) {
            (Some(f), true) => f.tickers.keys().cloned().collect(),
            _ => self.data.universes.keys().cloned().collect(),
        }
    }

    /// Structural checks that need no data on disk.
    pub fn validate(&self, fetch: bool) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(config_err("at least one regime is required"));
        }
        let mut slugs = BTreeSet::new();
        for r in &self.regimes {
            let s = slug(&r.name);
            if s.is_empty() || !slugs.insert(s) {
                return Err(config_err(format!("regime name {:?} is empty or repeated", r.name)));
            }
            if let Theta0Spec::IndexMonth(m) = &r.theta0 {
                NaiveDate::parse_from_str(&format!("{m}-01"), "%Y-%m-%d")
                    .map_err(|_| config_err(format!("theta0 month {m:?} is not YYYY-MM")))?;
            }
        }
        for b in self.base_configs() {
            b.validate()?;
        }

        if fetch && self.data.fetch.is_none() {
            return Err(CliError::Usage(
                "--fetch needs a data.fetch section in the config".into(),
            ));
        }
        let names = self.universe_names(fetch);
        if !names.contains(&self.universe) {
            return Err(config_err(format!("universe {:?} is not defined", self.universe)));
        }
        if let Some(alt) = &self.alt_universe {
            if !names.contains(alt) {
                return Err(config_err(format!("alt_universe {alt:?} is not defined")));
            }
            if *alt == self.universe {
                return Err(config_err("alt_universe repeats the base universe"));
            }
        }
        if let Some(f) = self.data.fetch.as_ref().filter(|_| fetch) {
            if f.end < f.start {
                return Err(config_err("fetch end precedes fetch start"));
            }
            if let Some((u, _)) = f.tickers.iter().find(|(_, t)| t.is_empty()) {
                return Err(config_err(format!("fetch universe {u:?} lists no tickers")));
            }
        }

        if self.analysts.iter().any(is_rate_rule) && self.data.rate.is_none() {
            return Err(config_err("an analyst uses the interest rate but data.rate is not set"));
        }
        if self.analysts.iter().any(|a| a.rule.uses_cpi()) && self.data.cpi.is_none() {
            return Err(config_err("an analyst uses CPI but data.cpi is not set"));
        }
        let fetch_index = fetch && self.data.fetch.as_ref().is_some_and(|f| f.index_ticker.is_some());
        if self
            .regimes
            .iter()
            .any(|r| matches!(r.theta0, Theta0Spec::IndexMonth(_)))
            && self.data.index.is_none()
            && !fetch_index
        {
            return Err(config_err(
                "a regime takes theta0 from an index month but no index is configured",
            ));
        }

        if let Some(g) = &self.sensitivity.grid {
            if let Some(u) = g.universe.iter().find(|u| !names.contains(*u)) {
                return Err(config_err(format!("grid universe {u:?} is not defined")));
            }
            GridOverrides {
                universe: Vec::new(),
                ..g.clone()
            }
            .validate(&MarketData::default())?;
        }
        self.sensitivity.panels.validate()?;
        Ok(())
    }
}

fn is_rate_rule(a: &AnalystSpec) -> bool {
    use riskquad_data::AnalystRule::*;
    matches!(a.rule, RateAboveMedian | RateBelowMedian)
}

/// Where relative data paths resolve.
pub fn data_root(config_path: &Path) -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    }
}

fn resolve(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

/// A validated config with its market data loaded.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub data: MarketData,
    /// Ingestion notes (dropped tickers, trimmed dates).
    pub warnings: Vec<String>,
    /// The fetched tables, for writing next to the results.
    pub fetched: BTreeMap<String, PriceTable>,
}

/// Reads, validates and loads everything a run needs. Nothing is computed
/// before every referenced input has been checked.
pub fn load(config_path: &Path, fetch: bool) -> Result<Loaded> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", config_path.display())))?;
    let config = RunConfig::parse(&text)?;
    config.validate(fetch)?;

    let root = data_root(config_path);
    let file = |p: &PathBuf| -> Result<PathBuf> {
        let path = resolve(&root, p);
        if path.is_file() {
            Ok(path)
        } else {
            Err(CliError::Data(format!("input file {} does not exist", path.display())))
        }
    };
    let rate = config.data.rate.as_ref().map(file).transpose()?;
    let cpi = config.data.cpi.as_ref().map(file).transpose()?;
    let fetch_cfg = config.data.fetch.as_ref().filter(|_| fetch);
    let index_path = match fetch_cfg.and_then(|f| f.index_ticker.as_ref()) {
        Some(_) => None,
        None => config.data.index.as_ref().map(file).transpose()?,
    };
    let price_paths: BTreeMap<String, PathBuf> = match fetch_cfg {
        Some(_) => BTreeMap::new(),
        None => config
            .data
            .universes
            .iter()
            .map(|(u, p)| Ok((u.clone(), file(p)?)))
            .collect::<Result<_>>()?,
    };

    let mut warnings = Vec::new();
    let mut note = |what: &str, c: Cleaned| -> PriceTable {
        for w in c.warnings {
            log::warn!("{what}: {w}");
            warnings.push(format!("{what}: {w}"));
        }
        if !c.dropped.is_empty() {
            let msg = format!("{what}: dropped {}", c.dropped.join(", "));
            log::warn!("{msg}");
            warnings.push(msg);
        }
        c.table
    };

    let mut data = MarketData::default();
    let mut fetched = BTreeMap::new();
    match fetch_cfg {
        Some(f) => {
            for (u, tickers) in &f.tickers {
                let table = note(u, fetch_prices(&f.endpoint, tickers, f.start, f.end)?);
                fetched.insert(u.clone(), table.clone());
                data.universes.insert(u.clone(), table);
            }
            if let Some(t) = &f.index_ticker {
                let table = note(
                    "index",
                    fetch_prices(&f.endpoint, std::slice::from_ref(t), f.start, f.end)?,
                );
                fetched.insert("index".into(), table.clone());
                data.index = Some(table);
            }
        }
        None => {
            for (u, p) in &price_paths {
                data.universes.insert(u.clone(), note(u, load_prices(p)?));
            }
        }
    }
    if let Some(p) = &index_path {
        let table = note("index", load_prices(p)?);
        if table.tickers().len() != 1 {
            return Err(CliError::Data(format!(
                "index file {} has {} price columns, expected one",
                p.display(),
                table.tickers().len()
            )));
        }
        data.index = Some(table);
    }
    data.rate = rate.as_deref().map(load_macro).transpose()?;
    data.cpi = cpi.as_deref().map(load_macro).transpose()?;
    Ok(Loaded {
        config,
        data,
        warnings,
        fetched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "data": {"universes": {"base": "p.csv"}, "rate": "r.csv", "cpi": "c.csv", "index": "i.csv"},
            "universe": "base",
            "regimes": [{"name": "Calm", "cutoff": "2024-05-01", "theta0": {"value": 0.001}}]
        })
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(&minimal().to_string()).unwrap();
        assert_eq!(c.window, 150);
        assert_eq!(c.alpha, 0.95);
        assert_eq!(c.analysts.len(), 4);
        assert!(c.sensitivity.grid.is_none());
        c.validate(false).unwrap();
    }

    #[test]
    fn rejects_bad_documents() {
        let mut v = minimal();
        v["typo"] = serde_json::json!(1);
        assert!(matches!(RunConfig::parse(&v.to_string()), Err(CliError::Config(_))));

        let check = |patch: &dyn Fn(&mut serde_json::Value)| {
            let mut v = minimal();
            patch(&mut v);
            RunConfig::parse(&v.to_string()).unwrap().validate(false)
        };
        assert!(check(&|v| v["universe"] = "nope".into()).is_err());
        assert!(check(&|v| v["alpha"] = 1.5.into()).is_err());
        assert!(check(&|v| v["regimes"] = serde_json::json!([])).is_err());
        assert!(check(&|v| {
            v["analysts"] = serde_json::json!([
                {"name": "a", "rule": {"indicator": "rate_above_median"}, "weight": 0.7},
                {"name": "b", "rule": {"indicator": "rate_below_median"}, "weight": 0.7}
            ])
        })
        .is_err());
        assert!(check(&|v| v["data"]["cpi"] = serde_json::Value::Null).is_err());
        assert!(check(&|v| v["regimes"][0]["theta0"] = serde_json::json!({"index_month": "2024/04"})).is_err());
        assert!(check(&|v| v["sensitivity"] = serde_json::json!({"grid": {"alpha": [1.2]}})).is_err());
        assert!(check(&|v| v["sensitivity"] = serde_json::json!({"grid": {"universe": ["x"]}})).is_err());
        assert!(check(&|v| v["alt_universe"] = "base".into()).is_err());
        let fetch = RunConfig::parse(&minimal().to_string()).unwrap().validate(true);
        assert!(matches!(fetch, Err(CliError::Usage(_))));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Analyst 1"), "analyst-1");
        assert_eq!(slug("  Low rate / high CPI "), "low-rate-high-cpi");
    }
}
