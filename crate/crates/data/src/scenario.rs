//! Analyst scenarios: median-split day masks and expected-return estimates.

use chrono::NaiveDate;
use riskquad_core::sum::exact_mean;
use riskquad_core::WeightVector;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::tables::{MacroSeries, ReturnTable};

/// Which training days an analyst keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "indicator", content = "mask")]
pub enum AnalystRule {
    RateAboveMedian,
    RateBelowMedian,
    /// Year-over-year CPI change above its window median.
    CpiAboveMedian,
    CpiBelowMedian,
    CustomMask(Vec<bool>),
}

impl AnalystRule {
    pub fn name(&self) -> &'static str {
        match self {
            AnalystRule::RateAboveMedian => "rate_above_median",
            AnalystRule::RateBelowMedian => "rate_below_median",
            AnalystRule::CpiAboveMedian => "cpi_above_median",
            AnalystRule::CpiBelowMedian => "cpi_below_median",
            AnalystRule::CustomMask(_) => "custom_mask",
        }
    }

    pub fn uses_cpi(&self) -> bool {
        matches!(self, AnalystRule::CpiAboveMedian | AnalystRule::CpiBelowMedian)
    }

    fn above(&self) -> bool {
        matches!(self, AnalystRule::RateAboveMedian | AnalystRule::CpiAboveMedian)
    }
}

/// Median with the lower middle value for an even count.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Splits `values` at their lower median: strictly above, or at/below.
pub fn median_mask(values: &[f64], above: bool) -> Vec<bool> {
    let Some(med) = lower_median(values) else {
        return Vec::new();
    };
    values.iter().map(|&v| if above { v > med } else { v <= med }).collect()
}

/// Day mask for `rule` over `window_dates`. Macro values are
/// forward-filled onto the window; CPI rules work on the year-over-year
/// change of the level series passed in `m`.
pub fn select_periods(m: &MacroSeries, rule: &AnalystRule, window_dates: &[NaiveDate]) -> Result<Vec<bool>> {
    if let AnalystRule::CustomMask(mask) = rule {
        if mask.len() != window_dates.len() {
            return Err(DataError::LengthMismatch {
                expected: window_dates.len(),
                actual: mask.len(),
            });
        }
        return Ok(mask.clone());
    }
    let transformed;
    let series = if rule.uses_cpi() {
        transformed = m.yoy_change()?;
        &transformed
    } else {
        m
    };
    let values = window_dates
        .iter()
        .map(|d| series.value_on(*d))
        .collect::<Result<Vec<f64>>>()?;
    Ok(median_mask(&values, rule.above()))
}

/// `θ_j` = mean return of asset `j` over the selected days.
pub fn estimate_theta(r: &ReturnTable, mask: &[bool]) -> Result<Vec<f64>> {
    let rows = r.select(mask)?;
    if rows.is_empty() {
        return Err(DataError::EmptySelection);
    }
    Ok((0..r.num_assets())
        .map(|j| exact_mean(&rows.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .collect())
}

/// Componentwise `Σ_i μ_i θ^i`.
pub fn manager_theta(thetas: &[Vec<f64>], mu: &WeightVector) -> Result<Vec<f64>> {
    if thetas.len() != mu.len() {
        return Err(DataError::LengthMismatch {
            expected: mu.len(),
            actual: thetas.len(),
        });
    }
    let m = thetas.first().map_or(0, Vec::len);
    if let Some(t) = thetas.iter().find(|t| t.len() != m) {
        return Err(DataError::LengthMismatch {
            expected: m,
            actual: t.len(),
        });
    }
    Ok((0..m)
        .map(|j| {
            let v: f64 = thetas.iter().zip(mu.as_slice()).map(|(t, w)| w * t[j]).sum();
            // Keep the convex combination inside the hull despite rounding.
            let lo = thetas.iter().map(|t| t[j]).fold(f64::INFINITY, f64::min);
            let hi = thetas.iter().map(|t| t[j]).fold(f64::NEG_INFINITY, f64::max);
            v.clamp(lo, hi)
        })
        .collect())
}
