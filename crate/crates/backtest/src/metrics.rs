//! Test-period performance: compounded return and annualised Sharpe and
//! Sortino ratios. Undefined ratios come back as `None`.

use riskquad_core::sum::exact_mean;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RfCompounding {
    /// `rf_annual / periods`.
    Arithmetic,
    /// `(1 + rf_annual)^(1/periods) - 1`.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownsideConvention {
    /// Squared shortfalls averaged over every day.
    FullSample,
    /// Squared shortfalls averaged over the days with a shortfall only.
    ShortfallDays,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConventions {
    pub periods_per_year: f64,
    pub rf_compounding: RfCompounding,
    pub downside: DownsideConvention,
}

impl Default for MetricConventions {
    fn default() -> Self {
        Self {
            periods_per_year: 252.0,
            rf_compounding: RfCompounding::Arithmetic,
            downside: DownsideConvention::FullSample,
        }
    }
}

impl MetricConventions {
    pub fn rf_daily(&self, rf_annual: f64) -> f64 {
        match self.rf_compounding {
            RfCompounding::Arithmetic => rf_annual / self.periods_per_year,
            RfCompounding::Geometric => (1.0 + rf_annual).powf(1.0 / self.periods_per_year) - 1.0,
        }
    }
}

/// `Π(1 + r_k) - 1`.
pub fn cumulative_return(daily: &[f64]) -> f64 {
    daily.iter().map(|r| 1.0 + r).product::<f64>() - 1.0
}

fn all_equal(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

pub fn sharpe(daily: &[f64], rf_annual: f64) -> Option<f64> {
    sharpe_with(daily, rf_annual, &MetricConventions::default())
}

/// `(mean - rf_daily) / sd · √periods` with the `n - 1` sample deviation.
pub fn sharpe_with(daily: &[f64], rf_annual: f64, conv: &MetricConventions) -> Option<f64> {
    if daily.len() < 2 || all_equal(daily) {
        return None;
    }
    let mean = exact_mean(daily);
    let ss: f64 = daily.iter().map(|r| (r - mean).powi(2)).sum();
    let sd = (ss / (daily.len() - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return None;
    }
    Some((mean - conv.rf_daily(rf_annual)) / sd * conv.periods_per_year.sqrt())
}

pub fn sortino(daily: &[f64], rf_annual: f64) -> Option<f64> {
    sortino_with(daily, rf_annual, &MetricConventions::default())
}

/// `(mean - rf_daily) / dd · √periods`, `dd` the root mean squared
/// shortfall below `rf_daily`.
pub fn sortino_with(daily: &[f64], rf_annual: f64, conv: &MetricConventions) -> Option<f64> {
    let rf = conv.rf_daily(rf_annual);
    let shortfalls: Vec<f64> = daily.iter().map(|r| (r - rf).min(0.0)).collect();
    let below = shortfalls.iter().filter(|s| **s < 0.0).count();
    if below == 0 {
        return None;
    }
    let denom = match conv.downside {
        DownsideConvention::FullSample => daily.len(),
        DownsideConvention::ShortfallDays => below,
    };
    let dd = (shortfalls.iter().map(|s| s * s).sum::<f64>() / denom as f64).sqrt();
    if !(dd > 0.0) {
        return None;
    }
    Some((exact_mean(daily) - rf) / dd * conv.periods_per_year.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sharpe_examples() {
        let rf = 0.0365;
        let rfd = rf / 252.0;
        let jitter = [rfd + 0.01, rfd - 0.01, rfd + 0.02, rfd - 0.02];
        assert!(sharpe(&jitter, rf).unwrap().abs() < 1e-9);
        assert_eq!(sharpe(&[0.001; 10], rf), None);
        assert_eq!(sharpe(&[0.001], rf), None);

        // Oracle: mean 0.005, sd = sqrt(0.00035 / 3).
        let s = sharpe(&[0.01, -0.01, 0.02, 0.00], 0.0).unwrap();
        let sd = (((0.005f64).powi(2) + 0.015f64.powi(2) + 0.015f64.powi(2) + 0.005f64.powi(2)) / 3.0).sqrt();
        assert!((sd - 0.012909944487358056).abs() < 1e-15);
        assert!((s - 0.005 / sd * 252f64.sqrt()).abs() < 1e-12);
        assert!((s - 6.148).abs() < 1e-3);
    }

    #[test]
    fn sortino_examples() {
        assert_eq!(sortino(&[0.01, 0.02, 0.03], 0.0), None);
        assert_eq!(sortino(&[0.02, -0.02], 0.0), Some(0.0));

        // Symmetric ±d around a positive drift: full-sample downside
        // deviation is d/√2, sample deviation is d·√(n/(n-1)).
        let (mu, dev, n) = (0.001, 0.01, 10usize);
        let daily: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { mu + dev } else { mu - dev }).collect();
        let so = sortino(&daily, 0.0).unwrap();
        let sh = sharpe(&daily, 0.0).unwrap();
        let corr = (n as f64 / (n - 1) as f64).sqrt();
        // Shortfall below 0 is dev - mu on half the days.
        let dd = ((dev - mu).powi(2) / 2.0).sqrt();
        assert!((so - mu / dd * 252f64.sqrt()).abs() < 1e-9);
        assert!((sh - mu / (dev * corr) * 252f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn conventions_change_the_numbers() {
        let daily = [0.01, -0.02, 0.015, -0.005, 0.003];
        let geo = MetricConventions {
            rf_compounding: RfCompounding::Geometric,
            ..Default::default()
        };
        assert!((geo.rf_daily(0.0365) - (1.0365f64.powf(1.0 / 252.0) - 1.0)).abs() < 1e-18);
        let loss_days = MetricConventions {
            downside: DownsideConvention::ShortfallDays,
            ..Default::default()
        };
        let a = sortino(&daily, 0.0).unwrap();
        let b = sortino_with(&daily, 0.0, &loss_days).unwrap();
        assert!((a / b - (5.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cumulative_matches_compounding(daily in prop::collection::vec(-0.1f64..0.1, 0..60)) {
            let mut wealth = 1.0;
            for r in &daily {
                wealth *= 1.0 + r;
            }
            prop_assert!((cumulative_return(&daily) - (wealth - 1.0)).abs() <= 1e-12);
        }

        #[test]
        fn sharpe_is_scale_free_at_zero_rate(
            daily in prop::collection::vec(-0.1f64..0.1, 3..40),
            k in 0.1f64..10.0,
        ) {
            let scaled: Vec<f64> = daily.iter().map(|r| r * k).collect();
            if let (Some(a), Some(b)) = (sharpe(&daily, 0.0), sharpe(&scaled, 0.0)) {
                prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
            }
        }
    }
}
