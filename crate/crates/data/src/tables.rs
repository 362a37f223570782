//! Price, return and macro tables plus their CSV readers.

use std::path::Path;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

/// Tickers with a larger share of missing days are dropped by [`RawPrices::clean`].
pub const MAX_MISSING_FRACTION: f64 = 0.05;

pub(crate) fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    // Accept "YYYY-MM-DD" optionally followed by a time part.
    let head = if s.len() > 10 && matches!(s.as_bytes()[10], b' ' | b'T') {
        &s[..10]
    } else {
        s
    };
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

fn parse_cell(s: &str) -> std::result::Result<Option<f64>, String> {
    let t = s.trim();
    if t.is_empty()
        || t == "."
        || t.eq_ignore_ascii_case("na")
        || t.eq_ignore_ascii_case("null")
        || t.eq_ignore_ascii_case("nan")
    {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("bad number {t:?}")),
    }
}

fn strictly_increasing(dates: &[NaiveDate]) -> bool {
    dates.windows(2).all(|w| w[0] < w[1])
}

fn csv_err(context: &str, message: impl Into<String>) -> DataError {
    DataError::Csv {
        context: context.to_string(),
        message: message.into(),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Adjusted closes, one row per date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: Vec<Vec<f64>>,
}

impl PriceTable {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: Vec<Vec<f64>>) -> Result<Self> {
        if !strictly_increasing(&dates) {
            return Err(DataError::InvalidArgument("dates must be strictly increasing".into()));
        }
        if prices.len() != dates.len() {
            return Err(DataError::LengthMismatch {
                expected: dates.len(),
                actual: prices.len(),
            });
        }
        for (k, row) in prices.iter().enumerate() {
            if row.len() != tickers.len() {
                return Err(DataError::LengthMismatch {
                    expected: tickers.len(),
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(DataError::NonPositivePrice {
                        ticker: tickers[j].clone(),
                        date: dates[k],
                        value: v,
                    });
                }
            }
        }
        Ok(Self { dates, tickers, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// `prices()[k][j]`: close of ticker `j` on date `k`.
    pub fn prices(&self) -> &[Vec<f64>] {
        &self.prices
    }

    /// Keeps only the named tickers, in the given order.
    pub fn select_tickers(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.tickers
                    .iter()
                    .position(|t| t == n)
                    .ok_or_else(|| DataError::InvalidArgument(format!("unknown ticker {n}")))
            })
            .collect::<Result<_>>()?;
        let prices = self
            .prices
            .iter()
            .map(|row| idx.iter().map(|&j| row[j]).collect())
            .collect();
        Ok(Self {
            dates: self.dates.clone(),
            tickers: names.to_vec(),
            prices,
        })
    }
}

/// Prices as read, before cleaning. `None` marks a missing close.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPrices {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

/// A cleaned table and what cleaning did to get there.
#[derive(Debug, Clone, PartialEq)]
pub struct Cleaned {
    pub table: PriceTable,
    pub dropped: Vec<String>,
    pub warnings: Vec<String>,
}

impl RawPrices {
    /// Drops tickers missing more than `max_missing` of the dates, trims
    /// leading dates on which a kept ticker has no close yet, and
    /// forward-fills the remaining gaps.
    pub fn clean(&self, max_missing: f64) -> Result<Cleaned> {
        let n_dates = self.dates.len();
        let mut keep = Vec::new();
        let mut dropped = Vec::new();
        let mut warnings = Vec::new();
        for (j, t) in self.tickers.iter().enumerate() {
            let missing = self.cells.iter().filter(|row| row[j].is_none()).count();
            let frac = if n_dates == 0 {
                1.0
            } else {
                missing as f64 / n_dates as f64
            };
            if frac > max_missing {
                let msg = format!("dropping {t}: {missing} of {n_dates} days missing");
                log::warn!("{msg}");
                warnings.push(msg);
                dropped.push(t.clone());
            } else {
                keep.push(j);
            }
        }
        if keep.is_empty() {
            return Err(DataError::EmptyResult);
        }
        let start = self
            .cells
            .iter()
            .position(|row| keep.iter().all(|&j| row[j].is_some()))
            .ok_or(DataError::EmptyResult)?;
        if start > 0 {
            let msg = format!("trimming {start} leading dates with incomplete closes");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        let mut prices: Vec<Vec<f64>> = Vec::with_capacity(n_dates - start);
        let mut filled = 0usize;
        for row in &self.cells[start..] {
            let out: Vec<f64> = keep
                .iter()
                .enumerate()
                .map(|(c, &j)| match row[j] {
                    Some(v) => v,
                    None => {
                        filled += 1;
                        prices.last().expect("first kept row is complete")[c]
                    }
                })
                .collect();
            prices.push(out);
        }
        if filled > 0 {
            log::info!("forward-filled {filled} missing closes");
        }
        let tickers = keep.iter().map(|&j| self.tickers[j].clone()).collect();
        let table = PriceTable::new(self.dates[start..].to_vec(), tickers, prices)?;
        Ok(Cleaned {
            table,
            dropped,
            warnings,
        })
    }
}

/// Parses a wide price CSV: `date,<ticker1>,<ticker2>,...`. Rows may come
/// in any order; duplicate dates are rejected.
pub fn parse_price_csv(text: &str, context: &str) -> Result<RawPrices> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| csv_err(context, e.to_string()))?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(csv_err(context, "header must be `date,<ticker>,...`"));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows: Vec<(NaiveDate, Vec<Option<f64>>)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(context, e.to_string()))?;
        let at = |m: String| csv_err(context, format!("row {}: {m}", line + 2));
        let date = parse_date(&rec[0]).ok_or_else(|| at(format!("bad date {:?}", &rec[0])))?;
        let cells = rec
            .iter()
            .skip(1)
            .map(parse_cell)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(at)?;
        rows.push((date, cells));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(csv_err(context, format!("duplicate date {}", w[0].0)));
    }
    let (dates, cells) = rows.into_iter().unzip();
    Ok(RawPrices { dates, tickers, cells })
}

/// Reads and cleans a wide price CSV with the default missing-data rule.
pub fn load_prices(path: &Path) -> Result<Cleaned> {
    let text = read_file(path)?;
    parse_price_csv(&text, &path.display().to_string())?.clean(MAX_MISSING_FRACTION)
}

/// Simple daily returns `r_k = p_k / p_{k-1} - 1`, dated by the later day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnTable {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    returns: Vec<Vec<f64>>,
}

impl ReturnTable {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, returns: Vec<Vec<f64>>) -> Result<Self> {
        if !strictly_increasing(&dates) {
            return Err(DataError::InvalidArgument("dates must be strictly increasing".into()));
        }
        if returns.len() != dates.len() {
            return Err(DataError::LengthMismatch {
                expected: dates.len(),
                actual: returns.len(),
            });
        }
        for row in &returns {
            if row.len() != tickers.len() {
                return Err(DataError::LengthMismatch {
                    expected: tickers.len(),
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite() || *v <= -1.0) {
                return Err(DataError::InvalidArgument("returns must be finite and above -1".into()));
            }
        }
        Ok(Self {
            dates,
            tickers,
            returns,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// `rows()[k][j]`: return of ticker `j` on day `k`.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.returns
    }

    pub fn num_days(&self) -> usize {
        self.dates.len()
    }

    pub fn num_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.returns.iter().map(|r| r[j]).collect()
    }

    /// Days `range` as a new table.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            dates: self.dates[range.clone()].to_vec(),
            tickers: self.tickers.clone(),
            returns: self.returns[range].to_vec(),
        }
    }

    /// The rows picked by `mask`.
    pub fn select(&self, mask: &[bool]) -> Result<Vec<Vec<f64>>> {
        if mask.len() != self.num_days() {
            return Err(DataError::LengthMismatch {
                expected: self.num_days(),
                actual: mask.len(),
            });
        }
        Ok(self
            .returns
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(r, _)| r.clone())
            .collect())
    }
}

pub fn compute_returns(p: &PriceTable) -> Result<ReturnTable> {
    if p.dates.len() < 2 {
        return Err(DataError::TooFewDates {
            needed: 2,
            got: p.dates.len(),
        });
    }
    for (k, row) in p.prices.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v > 0.0) {
                return Err(DataError::NonPositivePrice {
                    ticker: p.tickers[j].clone(),
                    date: p.dates[k],
                    value: v,
                });
            }
        }
    }
    let returns = p
        .prices
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(now, before)| now / before - 1.0).collect())
        .collect();
    ReturnTable::new(p.dates[1..].to_vec(), p.tickers.clone(), returns)
}

/// A dated macro indicator (a yield, a price index level, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl MacroSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(DataError::LengthMismatch {
                expected: dates.len(),
                actual: values.len(),
            });
        }
        if dates.is_empty() {
            return Err(DataError::TooFewDates { needed: 1, got: 0 });
        }
        if !strictly_increasing(&dates) {
            return Err(DataError::InvalidArgument("dates must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::InvalidArgument("macro values must be finite".into()));
        }
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The most recent observation on or before `date`.
    pub fn value_on(&self, date: NaiveDate) -> Result<f64> {
        match self.dates.partition_point(|d| *d <= date) {
            0 => Err(DataError::MacroCoverage(date)),
            k => Ok(self.values[k - 1]),
        }
    }

    /// Year-over-year relative change `v(d) / v(d - 12 months) - 1` at each
    /// observation that has a year of history; the earlier value is
    /// forward-filled like any other lookup.
    pub fn yoy_change(&self) -> Result<Self> {
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for (d, v) in self.dates.iter().zip(&self.values) {
            let Some(back) = d.checked_sub_months(Months::new(12)) else {
                continue;
            };
            if let Ok(prev) = self.value_on(back) {
                if prev == 0.0 {
                    return Err(DataError::InvalidArgument(format!("zero level on or before {back}")));
                }
                dates.push(*d);
                values.push(v / prev - 1.0);
            }
        }
        if dates.is_empty() {
            return Err(DataError::InvalidArgument("series spans less than a year".into()));
        }
        Self::new(dates, values)
    }
}

/// Parses `date,value`. Blank, `.` and `NA` values are skipped.
pub fn parse_macro_csv(text: &str, context: &str) -> Result<MacroSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| csv_err(context, e.to_string()))?.clone();
    if header.len() != 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(csv_err(context, "header must be `date,value`"));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(context, e.to_string()))?;
        let at = |m: String| csv_err(context, format!("row {}: {m}", line + 2));
        let date = parse_date(&rec[0]).ok_or_else(|| at(format!("bad date {:?}", &rec[0])))?;
        if let Some(v) = parse_cell(&rec[1]).map_err(at)? {
            rows.push((date, v));
        }
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(csv_err(context, format!("duplicate date {}", w[0].0)));
    }
    let (dates, values) = rows.into_iter().unzip();
    MacroSeries::new(dates, values)
}

pub fn load_macro(path: &Path) -> Result<MacroSeries> {
    let text = read_file(path)?;
    parse_macro_csv(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    fn table(prices: &[&[f64]]) -> PriceTable {
        let dates = (0..prices.len())
            .map(|k| d("2025-01-01") + chrono::Days::new(k as u64))
            .collect();
        let tickers = (0..prices[0].len()).map(|j| format!("A{j}")).collect();
        PriceTable::new(dates, tickers, prices.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn return_examples() {
        let r = compute_returns(&table(&[&[100.0], &[110.0]])).unwrap();
        assert!((r.rows()[0][0] - 0.10).abs() < 1e-15);

        let r = compute_returns(&table(&[&[5.0, 7.0], &[5.0, 7.0], &[5.0, 7.0]])).unwrap();
        assert!(r.rows().iter().flatten().all(|v| *v == 0.0));

        let r = compute_returns(&table(&[&[100.0], &[90.0], &[99.0]])).unwrap();
        assert!((r.column(0)[0] + 0.10).abs() < 1e-15);
        assert!((r.column(0)[1] - 0.10).abs() < 1e-15);
        assert_eq!(r.dates()[0], d("2025-01-02"));
    }

    #[test]
    fn returns_need_two_dates_and_positive_prices() {
        assert!(matches!(
            compute_returns(&table(&[&[1.0]])),
            Err(DataError::TooFewDates { .. })
        ));
        let bad = PriceTable::new(vec![d("2025-01-01")], vec!["A".into()], vec![vec![0.0]]);
        assert!(matches!(bad, Err(DataError::NonPositivePrice { .. })));
    }

    #[test]
    fn price_csv_cleaning() {
        let mut text = String::from("date,AAA,BBB,CCC\n");
        for k in 0..40 {
            let date = d("2025-01-01") + chrono::Days::new(k);
            let b = if k == 10 { String::new() } else { format!("{}", 20 + k) };
            let c = if k % 5 == 0 { "NA".to_string() } else { "3".to_string() };
            text.push_str(&format!("{date},{},{b},{c}\n", 10 + k));
        }
        let cleaned = parse_price_csv(&text, "t")
            .unwrap()
            .clean(MAX_MISSING_FRACTION)
            .unwrap();
        assert_eq!(cleaned.dropped, vec!["CCC".to_string()]);
        assert_eq!(cleaned.table.tickers(), &["AAA".to_string(), "BBB".to_string()]);
        // BBB's gap on day 10 carries day 9 forward.
        assert_eq!(cleaned.table.prices()[10][1], 29.0);
        assert_eq!(cleaned.table.dates().len(), 40);
    }

    #[test]
    fn leading_gaps_are_trimmed() {
        let mut text = String::from("date,AAA,BBB\n");
        for k in 0..40 {
            let date = d("2025-01-01") + chrono::Days::new(k);
            let b = if k == 0 { "" } else { "2" };
            text.push_str(&format!("{date},1,{b}\n"));
        }
        let cleaned = parse_price_csv(&text, "t")
            .unwrap()
            .clean(MAX_MISSING_FRACTION)
            .unwrap();
        assert_eq!(cleaned.table.dates()[0], d("2025-01-02"));
        assert_eq!(cleaned.warnings.len(), 1);
    }

    #[test]
    fn price_csv_rejects_bad_input() {
        assert!(parse_price_csv("day,A\n2025-01-01,1\n", "t").is_err());
        assert!(parse_price_csv("date,A\n2025-13-01,1\n", "t").is_err());
        assert!(parse_price_csv("date,A\n2025-01-01,x\n", "t").is_err());
        assert!(parse_price_csv("date,A\n2025-01-01,1\n2025-01-01,2\n", "t").is_err());
        let raw = parse_price_csv("date,A\n2025-01-02,1\n2025-01-01,2\n", "t").unwrap();
        assert_eq!(raw.dates, vec![d("2025-01-01"), d("2025-01-02")]);
    }

    #[test]
    fn macro_lookup_forward_fills() {
        let m = parse_macro_csv("date,value\n2025-01-01,4.0\n2025-01-03,.\n2025-01-05,4.5\n", "m").unwrap();
        assert_eq!(m.dates().len(), 2);
        assert_eq!(m.value_on(d("2025-01-04")).unwrap(), 4.0);
        assert_eq!(m.value_on(d("2025-01-05")).unwrap(), 4.5);
        assert!(matches!(m.value_on(d("2024-12-31")), Err(DataError::MacroCoverage(_))));
    }

    #[test]
    fn yoy_change_of_monthly_levels() {
        let dates: Vec<NaiveDate> = (0..15)
            .map(|k| d("2024-01-01").checked_add_months(Months::new(k)).unwrap())
            .collect();
        let values: Vec<f64> = (0..15).map(|k| 100.0 + k as f64).collect();
        let yoy = MacroSeries::new(dates, values).unwrap().yoy_change().unwrap();
        assert_eq!(yoy.dates()[0], d("2025-01-01"));
        assert_eq!(yoy.values().len(), 3);
        assert!((yoy.values()[0] - (112.0 / 100.0 - 1.0)).abs() < 1e-15);
    }
}
