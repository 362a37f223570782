//! Backtests of scenario-weighted ES portfolios.
//!
//! A cell takes a window of daily returns, splits it at a cutoff date,
//! builds one scenario per analyst from the training days, solves each
//! analyst's program and the manager's aggregated program, and evaluates
//! the fixed weights over the test days. Grids of cells run in parallel
//! and come back in a fixed order.

pub mod engine;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod report;
pub mod synthetic;

pub use engine::{
    apply_weights, build_models, default_analysts, month_mean_return, resolve_theta0, run_backtest, split, AnalystSpec,
    BacktestConfig, BacktestReport, CellParams, MarketData, PortfolioReport, PortfolioStatus, Split, Theta0,
    Theta0Spec, INDEX, MANAGER,
};
pub use error::{BacktestError, Result};
pub use grid::{
    run_cells, run_panels, sensitivity_grid, table_panels, GridCell, GridOverrides, PanelLayout, PanelSpec, Variation,
};
pub use metrics::{
    cumulative_return, sharpe, sharpe_with, sortino, sortino_with, DownsideConvention, MetricConventions, RfCompounding,
};
pub use report::{cells_to_csv, cells_to_json, daily_to_csv, panels_to_markdown, report_to_csv, CSV_HEADER};
pub use synthetic::{macro_csv, price_csv, synthetic_market, SyntheticMarket};
