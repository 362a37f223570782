//! HTTP price ingestion. One GET per ticker against a configured URL
//! template; the responses are merged by date and cleaned like a local CSV.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{DataError, Result};
use crate::tables::{parse_date, Cleaned, RawPrices, MAX_MISSING_FRACTION};

/// Expands `{ticker}`, `{start}` and `{end}` (ISO dates) in `template`.
pub fn expand_template(template: &str, ticker: &str, start: NaiveDate, end: NaiveDate) -> String {
    template
        .replace("{ticker}", ticker)
        .replace("{start}", &start.to_string())
        .replace("{end}", &end.to_string())
}

/// Reads a per-ticker CSV with a `date` column and a close column
/// (`adj close`, `adj_close`, `adjclose` or `close`, case-insensitive; the
/// adjusted one wins). Rows outside `[start, end]` are ignored.
pub fn parse_close_csv(text: &str, ticker: &str, start: NaiveDate, end: NaiveDate) -> Result<Vec<(NaiveDate, f64)>> {
    let err = |message: String| DataError::Csv {
        context: ticker.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| err(e.to_string()))?.clone();
    let find = |names: &[&str]| {
        header
            .iter()
            .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
    };
    let date_col = find(&["date"]).ok_or_else(|| err("no date column".into()))?;
    let close_col = find(&["adj close", "adj_close", "adjclose"])
        .or_else(|| find(&["close"]))
        .ok_or_else(|| err("no close column".into()))?;
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let field = |c: usize| rec.get(c).ok_or_else(|| err(format!("row {} is short", line + 2)));
        let date = parse_date(field(date_col)?).ok_or_else(|| err(format!("row {}: bad date", line + 2)))?;
        let raw = field(close_col)?;
        if raw.is_empty() || raw.eq_ignore_ascii_case("null") || raw.eq_ignore_ascii_case("na") {
            continue;
        }
        let close: f64 = raw
            .parse()
            .map_err(|_| err(format!("row {}: bad close {raw:?}", line + 2)))?;
        if date >= start && date <= end {
            out.push((date, close));
        }
    }
    Ok(out)
}

fn fetch_one(template: &str, ticker: &str, start: NaiveDate, end: NaiveDate) -> Result<Vec<(NaiveDate, f64)>> {
    let url = expand_template(template, ticker, start, end);
    log::debug!("GET {url}");
    let http = |message: String| DataError::Http {
        ticker: ticker.to_string(),
        message,
    };
    let body = match ureq::get(&url).call() {
        Ok(resp) => resp.into_string().map_err(|e| http(e.to_string()))?,
        Err(ureq::Error::Status(code, _)) => return Err(http(format!("HTTP status {code}"))),
        Err(e) => return Err(http(e.to_string())),
    };
    parse_close_csv(&body, ticker, start, end)
}

/// Merges per-ticker close series into a raw table over the union of dates.
pub fn assemble(series: Vec<(String, Vec<(NaiveDate, f64)>)>) -> RawPrices {
    let mut all: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    let n = series.len();
    for (j, (_, rows)) in series.iter().enumerate() {
        for &(d, v) in rows {
            all.entry(d).or_insert_with(|| vec![None; n])[j] = Some(v);
        }
    }
    let tickers = series.into_iter().map(|(t, _)| t).collect();
    let (dates, cells) = all.into_iter().unzip();
    RawPrices { dates, tickers, cells }
}

/// Fetches all tickers (concurrently, one thread each) and cleans the
/// merged table. A ticker with no rows in range counts as fully missing and
/// is dropped by the cleaning rule; the call fails only if nothing is left.
pub fn fetch_prices(template: &str, tickers: &[String], start: NaiveDate, end: NaiveDate) -> Result<Cleaned> {
    if start > end {
        return Err(DataError::InvalidArgument(format!("start {start} is after end {end}")));
    }
    let results: Vec<Result<Vec<(NaiveDate, f64)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = tickers
            .iter()
            .map(|t| s.spawn(move || fetch_one(template, t, start, end)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fetch thread panicked"))
            .collect()
    });
    let mut series = Vec::with_capacity(tickers.len());
    for (t, r) in tickers.iter().zip(results) {
        series.push((t.clone(), r?));
    }
    if series.iter().all(|(_, rows)| rows.is_empty()) {
        return Err(DataError::EmptyResult);
    }
    assemble(series).clean(MAX_MISSING_FRACTION)
}
