//! Market data for the scenario-weighted portfolio pipeline.
//!
//! Prices come from a wide CSV (`date,<ticker>,...`) or from an HTTP
//! endpoint; macro indicators from `date,value` CSVs. Returns are simple
//! daily returns. Each analyst keeps the training days on which a macro
//! indicator sits above (or at/below) its window median and estimates
//! expected returns from those days.

pub mod error;
pub mod fetch;
pub mod scenario;
pub mod tables;

pub use error::{DataError, Result};
pub use fetch::{fetch_prices, parse_close_csv};
pub use scenario::{estimate_theta, lower_median, manager_theta, select_periods, AnalystRule};
pub use tables::{
    compute_returns, load_macro, load_prices, parse_macro_csv, parse_price_csv, Cleaned, MacroSeries, PriceTable,
    RawPrices, ReturnTable, MAX_MISSING_FRACTION,
};
