//! Single-scenario empirical risk measures of the Expected Shortfall
//! quadrangle.
//!
//! All measures treat a [`LossSample`] as an equally weighted empirical
//! distribution of *losses* (positive = bad).

use serde::{Deserialize, Serialize};

use crate::types::{Level, LossSample, RiskVector};

/// Non-decreasing rearrangement of a risk vector. Ties keep their original
/// relative order.
pub fn sort_ascending(v: &RiskVector) -> RiskVector {
    RiskVector::new(sorted_copy(v.as_slice())).expect("permutation of a valid risk vector")
}

pub(crate) fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    out.sort_by(f64::total_cmp);
    out
}

/// Arithmetic mean of the losses.
pub fn expectation(s: &LossSample) -> f64 {
    let xs = s.as_slice();
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Left-continuous empirical quantile: the smallest sample value `v` with
/// `#{x <= v} / T >= alpha`.
pub fn var_alpha(s: &LossSample, a: Level) -> f64 {
    let sorted = sorted_copy(s.as_slice());
    let t = sorted.len() as f64;
    let alpha = a.value();
    let mut i = 0;
    while i < sorted.len() {
        // Extend over the run of ties so the count includes all of them.
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        if (j + 1) as f64 / t >= alpha {
            return sorted[i];
        }
        i = j + 1;
    }
    sorted[sorted.len() - 1]
}

/// `c + (1/(1-alpha)) * mean((loss - c)_+)`, the Rockafellar–Uryasev
/// objective whose minimum over `c` is the Expected Shortfall.
pub fn ru_objective(s: &LossSample, a: Level, c: f64) -> f64 {
    let xs = s.as_slice();
    let excess: f64 = xs.iter().map(|x| (x - c).max(0.0)).sum();
    c + a.tail_scale() * excess / xs.len() as f64
}

/// Expected Shortfall at level `alpha`.
///
/// Defined as `min_c { c + (1/(1-alpha)) mean((loss - c)_+) }`. The minimum
/// is attained at a sample value, so the distinct sample values are scanned
/// with suffix sums. When `alpha * T` is an integer the value is the mean of
/// the largest `(1 - alpha) * T` losses and is computed that way directly.
pub fn es_alpha(s: &LossSample, a: Level) -> f64 {
    let sorted = sorted_copy(s.as_slice());
    let n = sorted.len();
    let at = a.value() * n as f64;
    let k = at.round();
    if (at - k).abs() <= 1e-9 * n as f64 && (k as usize) < n {
        let tail = &sorted[k as usize..];
        return tail.iter().sum::<f64>() / tail.len() as f64;
    }
    ru_scan(&sorted, a)
}

/// Minimises the RU objective over the distinct values of an ascending
/// sample.
fn ru_scan(sorted: &[f64], a: Level) -> f64 {
    let n = sorted.len();
    let scale = a.tail_scale();
    // suffix[i] = sum of sorted[i..]
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + sorted[i];
    }
    let mut best = f64::INFINITY;
    let mut i = 0;
    while i < n {
        let c = sorted[i];
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == c {
            j += 1;
        }
        let above = n - (j + 1);
        let excess = suffix[j + 1] - above as f64 * c;
        let value = c + scale * excess / n as f64;
        if value < best {
            best = value;
        }
        i = j + 1;
    }
    best
}

/// ES regret: `(1/(1-alpha)) * mean(loss_+)`.
pub fn regret_es(s: &LossSample, a: Level) -> f64 {
    let xs = s.as_slice();
    a.tail_scale() * xs.iter().map(|x| x.max(0.0)).sum::<f64>() / xs.len() as f64
}

/// Rescaled Koenker–Bassett error:
/// `mean((alpha/(1-alpha)) loss_+ + loss_-)`.
pub fn error_kb(s: &LossSample, a: Level) -> f64 {
    let xs = s.as_slice();
    let alpha = a.value();
    let up = alpha / (1.0 - alpha);
    xs.iter().map(|&x| up * x.max(0.0) + (-x).max(0.0)).sum::<f64>() / xs.len() as f64
}

/// ES deviation: Expected Shortfall of the centred sample.
pub fn deviation_es(s: &LossSample, a: Level) -> f64 {
    es_alpha(&s.shifted(expectation(s)), a)
}

/// The ES quadrangle quartet with its statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsQuartet {
    pub risk: f64,
    pub deviation: f64,
    pub regret: f64,
    pub error: f64,
    pub statistic: f64,
}

pub fn es_quartet(s: &LossSample, a: Level) -> EsQuartet {
    EsQuartet {
        risk: es_alpha(s, a),
        deviation: deviation_es(s, a),
        regret: regret_es(s, a),
        error: error_kb(s, a),
        statistic: var_alpha(s, a),
    }
}
