use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

use chrono::NaiveDate;
use proptest::prelude::*;
use riskquad_data::{
    compute_returns, estimate_theta, fetch_prices, load_macro, load_prices, select_periods, AnalystRule, DataError,
    PriceTable,
};

fn d(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

/// Serves canned CSV bodies keyed by path; unknown paths get a 404.
fn serve(routes: HashMap<String, String>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request = String::new();
            reader.read_line(&mut request).unwrap();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
            }
            let path = request.split_whitespace().nth(1).unwrap_or("").to_string();
            log.lock().unwrap().push(path.clone());
            let key = path.split('?').next().unwrap().to_string();
            let (status, body) = match routes.get(&key) {
                Some(b) => ("200 OK", b.clone()),
                None => ("404 Not Found", "missing".to_string()),
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: text/csv\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (format!("http://{addr}"), seen)
}

fn daily_csv(days: usize, base: f64) -> String {
    let mut s = String::from("Date,Close\n");
    for k in 0..days {
        let date = d("2025-03-03") + chrono::Days::new(k as u64);
        s.push_str(&format!("{date},{}\n", base + k as f64));
    }
    s
}

#[test]
fn fetch_aligns_overlapping_tickers() {
    let routes = HashMap::from([
        ("/AAA.csv".to_string(), daily_csv(30, 10.0)),
        ("/BBB.csv".to_string(), daily_csv(30, 50.0)),
    ]);
    let (base, seen) = serve(routes);
    let tickers = vec!["AAA".to_string(), "BBB".to_string()];
    let got = fetch_prices(
        &format!("{base}/{{ticker}}.csv?from={{start}}&to={{end}}"),
        &tickers,
        d("2025-03-01"),
        d("2025-04-30"),
    )
    .unwrap();
    assert_eq!(got.table.tickers(), &tickers[..]);
    assert_eq!(got.table.dates().len(), 30);
    assert_eq!(got.table.prices()[0], vec![10.0, 50.0]);
    assert!(got.dropped.is_empty());
    assert!(seen
        .lock()
        .unwrap()
        .iter()
        .any(|p| p == "/AAA.csv?from=2025-03-01&to=2025-04-30"));
}

#[test]
fn fetch_drops_a_ticker_with_no_rows() {
    let routes = HashMap::from([
        ("/AAA.csv".to_string(), daily_csv(30, 10.0)),
        ("/ZZZ.csv".to_string(), "Date,Close\n".to_string()),
    ]);
    let (base, _) = serve(routes);
    let tickers = vec!["AAA".to_string(), "ZZZ".to_string()];
    let got = fetch_prices(
        &format!("{base}/{{ticker}}.csv"),
        &tickers,
        d("2025-03-01"),
        d("2025-04-30"),
    )
    .unwrap();
    assert_eq!(got.table.tickers(), &["AAA".to_string()]);
    assert_eq!(got.dropped, vec!["ZZZ".to_string()]);
    assert!(got.warnings.iter().any(|w| w.contains("ZZZ")));
}

#[test]
fn fetch_errors_are_distinct() {
    let routes = HashMap::from([
        ("/AAA.csv".to_string(), daily_csv(5, 10.0)),
        ("/BAD.csv".to_string(), "Date,Close\n2025-03-03,abc\n".to_string()),
        ("/NONE.csv".to_string(), "Date,Close\n".to_string()),
    ]);
    let (base, _) = serve(routes);
    let template = format!("{base}/{{ticker}}.csv");
    let range = (d("2025-03-01"), d("2025-04-30"));

    let err = fetch_prices(&template, &["AAA".into(), "GONE".into()], range.0, range.1).unwrap_err();
    match err {
        DataError::Http { ticker, message } => {
            assert_eq!(ticker, "GONE");
            assert!(message.contains("404"));
        }
        other => panic!("expected an HTTP error, got {other:?}"),
    }
    let err = fetch_prices(&template, &["BAD".into()], range.0, range.1).unwrap_err();
    assert!(matches!(err, DataError::Csv { ref context, .. } if context == "BAD"));
    let err = fetch_prices(&template, &["NONE".into()], range.0, range.1).unwrap_err();
    assert!(matches!(err, DataError::EmptyResult));
}

#[test]
fn csv_files_round_trip_through_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    let rates = dir.path().join("rates.csv");
    std::fs::write(
        &prices,
        "date,AAA,BBB\n2025-01-02,100,10\n2025-01-03,90,11\n2025-01-06,99,12\n2025-01-07,99,12\n",
    )
    .unwrap();
    std::fs::write(&rates, "date,value\n2024-12-31,4.0\n2025-01-03,4.2\n2025-01-06,4.1\n").unwrap();
    let cleaned = load_prices(&prices).unwrap();
    let r = compute_returns(&cleaned.table).unwrap();
    assert_eq!(r.num_days(), 3);
    let m = load_macro(&rates).unwrap();
    let mask = select_periods(&m, &AnalystRule::RateAboveMedian, r.dates()).unwrap();
    // 4.2, 4.1, 4.1 -> lower median 4.1.
    assert_eq!(mask, vec![true, false, false]);
    let theta = estimate_theta(&r, &mask).unwrap();
    assert!((theta[0] + 0.1).abs() < 1e-15);

    let missing = dir.path().join("nope.csv");
    assert!(matches!(load_prices(&missing), Err(DataError::Io { .. })));
}

proptest! {
    #[test]
    fn compounded_returns_recover_the_price_ratio(
        steps in prop::collection::vec(-0.2f64..0.2, 1..200),
        start in 1.0f64..500.0,
    ) {
        let mut prices = vec![start];
        for s in &steps {
            let last = *prices.last().unwrap();
            prices.push(last * (1.0 + s));
        }
        let dates = (0..prices.len()).map(|k| d("2020-01-01") + chrono::Days::new(k as u64)).collect();
        let table = PriceTable::new(dates, vec!["A".into()], prices.iter().map(|p| vec![*p]).collect()).unwrap();
        let r = compute_returns(&table).unwrap();
        let growth: f64 = r.column(0).iter().map(|v| 1.0 + v).product();
        let ratio = prices.last().unwrap() / prices[0];
        prop_assert!((growth - ratio).abs() <= 1e-12 * ratio.max(1.0));
    }
}
