//! Seeded synthetic market for fixtures and tests: a one-factor model for
//! asset returns whose drift leans on the interest-rate level, a random-walk
//! rate, monthly CPI levels and an index driven by the same factor.

use chrono::{Datelike, Days, Months, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use riskquad_data::{MacroSeries, PriceTable};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub prices: PriceTable,
    pub index: PriceTable,
    pub rate: MacroSeries,
    pub cpi: MacroSeries,
}

/// Weekdays from `start` on, `n` of them.
pub fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// `days` return days (so `days + 1` closes) for `assets` tickers named
/// `S01`, `S02`, ..., starting on the first weekday on or after `start`.
pub fn synthetic_market(seed: u64, assets: usize, days: usize, start: NaiveDate) -> SyntheticMarket {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let dates = weekdays(start, days + 1);

    let betas: Vec<f64> = (0..assets).map(|_| rng.gen_range(0.5..1.5)).collect();
    let vols: Vec<f64> = (0..assets).map(|_| rng.gen_range(0.005..0.02)).collect();
    let rate_tilt: Vec<f64> = (0..assets).map(|_| rng.gen_range(-0.002..0.002)).collect();

    let mut rate = vec![4.0];
    for _ in 1..dates.len() {
        let last = *rate.last().expect("nonempty");
        rate.push(last + 0.03 * unit.sample(&mut rng));
    }
    let rate_mid = rate.iter().sum::<f64>() / rate.len() as f64;

    let mut prices = vec![vec![100.0; assets]];
    let mut index = vec![vec![1000.0]];
    for k in 1..dates.len() {
        let factor = 0.0004 + 0.01 * unit.sample(&mut rng);
        let tilt = (rate[k - 1] - rate_mid).signum();
        let row: Vec<f64> = (0..assets)
            .map(|j| {
                let r = betas[j] * factor + tilt * rate_tilt[j] + vols[j] * unit.sample(&mut rng);
                prices[k - 1][j] * (1.0 + r.max(-0.5))
            })
            .collect();
        prices.push(row);
        let ix = index[k - 1][0] * (1.0 + factor);
        index.push(vec![ix]);
    }

    // Monthly CPI from 14 months before the first date.
    let first_month = NaiveDate::from_ymd_opt(dates[0].year(), dates[0].month(), 1).expect("valid month");
    let cpi_start = first_month.checked_sub_months(Months::new(14)).expect("in range");
    let last = dates[dates.len() - 1];
    let mut cpi_dates = Vec::new();
    let mut cpi_values = Vec::new();
    let mut level = 300.0;
    let mut m = cpi_start;
    while m <= last {
        cpi_dates.push(m);
        cpi_values.push(level);
        level *= 1.0 + 0.0025 + 0.002 * unit.sample(&mut rng);
        m = m.checked_add_months(Months::new(1)).expect("in range");
    }

    let tickers: Vec<String> = (1..=assets).map(|j| format!("S{j:02}")).collect();
    SyntheticMarket {
        prices: PriceTable::new(dates.clone(), tickers, prices).expect("positive prices"),
        index: PriceTable::new(dates.clone(), vec!["INDEX".into()], index).expect("positive prices"),
        rate: MacroSeries::new(dates, rate).expect("finite rates"),
        cpi: MacroSeries::new(cpi_dates, cpi_values).expect("finite levels"),
    }
}

/// Wide price CSV text for `p`.
pub fn price_csv(p: &PriceTable) -> String {
    let mut s = String::from("date");
    for t in p.tickers() {
        s.push(',');
        s.push_str(t);
    }
    s.push('\n');
    for (d, row) in p.dates().iter().zip(p.prices()) {
        s.push_str(&d.to_string());
        for v in row {
            s.push(',');
            s.push_str(&v.to_string());
        }
        s.push('\n');
    }
    s
}

/// `date,value` CSV text for `m`.
pub fn macro_csv(m: &MacroSeries) -> String {
    let mut s = String::from("date,value\n");
    for (d, v) in m.dates().iter().zip(m.values()) {
        s.push_str(&format!("{d},{v}\n"));
    }
    s
}
