//! The multi-scenario ES quadrangle.
//!
//! Risk, deviation and statistic are `μ`-weighted sums of the per-scenario
//! values. Regret and error carry an inner minimisation over offsets `b`
//! with `Σ μ_i b_i = 0`:
//!
//! ```text
//! V_Q(X) = min_b Σ μ_i V_i(X - b_i),   E_Q(X) = min_b Σ μ_i E_i(X - b_i).
//! ```
//!
//! Both share the same minimisers because `E_i(Y) = V_i(Y) - E_i[Y]` and the
//! constraint fixes `Σ μ_i E_i[X - b_i]`. [`min_regret_offsets`] solves it
//! exactly. [`offsets_b`] gives the centred statistics `S_i - S_Q`, which is
//! the minimiser once the position has been shifted by `S_Q`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::measures::{deviation_es, error_kb, es_alpha, expectation, regret_es, sorted_copy, var_alpha};
use crate::sum::exact_sum;
use crate::types::{Level, LossSample, WeightVector};

/// Iterations of the golden-section search in [`verify_identities`].
pub const GOLDEN_ITERATIONS: usize = 200;

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(CoreError::LengthMismatch { expected, actual })
    }
}

fn weighted(values: impl IntoIterator<Item = f64>, mu: &WeightVector) -> f64 {
    exact_sum(values.into_iter().zip(mu.as_slice()).map(|(v, m)| v * m))
}

/// `Σ_i μ_i E_i[X]`.
pub fn weighted_expectation(samples: &[LossSample], mu: &WeightVector) -> Result<f64> {
    check_len(mu.len(), samples.len())?;
    Ok(weighted(samples.iter().map(expectation), mu))
}

/// `b_i = S_i - Σ_j μ_j S_j`.
pub fn offsets_b(statistics: &[f64], mu: &WeightVector) -> Result<Vec<f64>> {
    check_len(mu.len(), statistics.len())?;
    let centre = weighted(statistics.iter().copied(), mu);
    Ok(statistics.iter().map(|s| s - centre).collect())
}

/// A position in `[0, 1]` of the form `num / den`, compared exactly.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    fn cmp(self, other: Ratio) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// Minimisers of `b ↦ V(X - b) + λ b` for `λ = w / (1 - α)`: the interval
/// of `b` with at most `wT` losses above `b` and at least `wT` at or above.
fn quantile_interval(sorted: &[f64], w: Ratio) -> (f64, f64) {
    let t = sorted.len() as u128;
    let scaled = w.num as u128 * t;
    let j = (scaled / w.den as u128) as usize;
    let exact = scaled.is_multiple_of(w.den as u128);
    let n = sorted.len();
    let at = |idx: isize| -> f64 {
        if idx < 0 {
            f64::NEG_INFINITY
        } else if idx as usize >= n {
            f64::INFINITY
        } else {
            sorted[idx as usize]
        }
    };
    let lower = at(n as isize - j as isize - 1);
    if exact {
        (lower, at(n as isize - j as isize))
    } else {
        (lower, lower)
    }
}

/// Exact minimiser `b` of `Σ μ_i V_i(X - b_i)` subject to `Σ μ_i b_i = 0`.
///
/// The objective is separable and piecewise linear, so a Lagrange
/// multiplier is searched over the finitely many kink levels `j / T_i`.
/// Each scenario's minimiser set at a level is an interval; the first level
/// whose weighted interval sum contains zero is optimal, and offsets are
/// then picked inside the intervals, preferring zero. Scenarios with zero
/// weight do not enter the problem and get their centred statistic.
pub fn min_regret_offsets(samples: &[LossSample], a: Level, mu: &WeightVector) -> Result<Vec<f64>> {
    check_len(mu.len(), samples.len())?;
    let weights = mu.as_slice();
    let statistics: Vec<f64> = samples.iter().map(|s| var_alpha(s, a)).collect();
    let mut offsets = offsets_b(&statistics, mu)?;
    let active: Vec<usize> = (0..samples.len()).filter(|&i| weights[i] > 0.0).collect();
    if active.len() == 1 {
        offsets[active[0]] = 0.0;
        return Ok(offsets);
    }
    let sorted: Vec<Vec<f64>> = active.iter().map(|&i| sorted_copy(samples[i].as_slice())).collect();

    let mut levels: Vec<Ratio> = sorted
        .iter()
        .flat_map(|s| {
            let t = s.len() as u64;
            (0..=t).map(move |j| Ratio { num: j, den: t })
        })
        .collect();
    levels.sort_by(|x, y| x.cmp(*y));
    levels.dedup_by(|x, y| x.cmp(*y).is_eq());

    for w in levels {
        let intervals: Vec<(f64, f64)> = sorted.iter().map(|s| quantile_interval(s, w)).collect();
        let lower = weighted_bound(&active, weights, intervals.iter().map(|iv| iv.0));
        if lower > 0.0 {
            continue;
        }
        let upper = weighted_bound(&active, weights, intervals.iter().map(|iv| iv.1));
        debug_assert!(upper >= 0.0);
        let chosen = spread_to_zero(&active, weights, &intervals);
        for (k, &i) in active.iter().enumerate() {
            offsets[i] = chosen[k];
        }
        return Ok(offsets);
    }
    unreachable!("the last level has an unbounded-below interval")
}

fn weighted_bound(active: &[usize], weights: &[f64], ends: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = active.iter().zip(ends).map(|(&i, e)| weights[i] * e).collect();
    if let Some(inf) = terms.iter().find(|t| t.is_infinite()) {
        return *inf;
    }
    exact_sum(terms)
}

/// Picks `b_k ∈ intervals[k]` with `Σ μ b = 0`, starting from the point of
/// each interval nearest zero and moving offsets in index order.
fn spread_to_zero(active: &[usize], weights: &[f64], intervals: &[(f64, f64)]) -> Vec<f64> {
    let mut b: Vec<f64> = intervals.iter().map(|&(lo, hi)| 0.0f64.clamp(lo, hi)).collect();
    let mu: Vec<f64> = active.iter().map(|&i| weights[i]).collect();
    let mut need = -exact_sum(b.iter().zip(&mu).map(|(x, m)| x * m));
    for k in 0..b.len() {
        if need == 0.0 {
            break;
        }
        let (lo, hi) = intervals[k];
        let room = if need > 0.0 { hi - b[k] } else { b[k] - lo };
        let step = (need.abs() / mu[k]).min(room);
        let moved = if need > 0.0 { b[k] + step } else { b[k] - step };
        need -= (moved - b[k]) * mu[k];
        b[k] = moved;
    }
    // The last scenario absorbs rounding so the constraint holds tightly.
    if need != 0.0 {
        let k = b.len() - 1;
        b[k] += need / mu[k];
    }
    b
}

/// `Σ μ_i V_i(X - b_i)` at the optimal offsets.
pub fn weighted_regret(samples: &[LossSample], a: Level, mu: &WeightVector) -> Result<f64> {
    let b = min_regret_offsets(samples, a, mu)?;
    Ok(weighted(
        samples.iter().zip(&b).map(|(s, bi)| regret_es(&s.shifted(*bi), a)),
        mu,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedQuartet {
    pub risk: f64,
    pub deviation: f64,
    pub regret: f64,
    pub error: f64,
    pub statistic: f64,
    /// Optimal offsets of the regret/error minimisation.
    pub offsets: Vec<f64>,
    pub weighted_expectation: f64,
}

pub fn mix_quartet(samples: &[LossSample], a: Level, mu: &WeightVector) -> Result<WeightedQuartet> {
    check_len(mu.len(), samples.len())?;
    let offsets = min_regret_offsets(samples, a, mu)?;
    let shifted: Vec<LossSample> = samples.iter().zip(&offsets).map(|(s, b)| s.shifted(*b)).collect();
    Ok(WeightedQuartet {
        risk: weighted(samples.iter().map(|s| es_alpha(s, a)), mu),
        deviation: weighted(samples.iter().map(|s| deviation_es(s, a)), mu),
        regret: weighted(shifted.iter().map(|s| regret_es(s, a)), mu),
        error: weighted(shifted.iter().map(|s| error_kb(s, a)), mu),
        statistic: weighted(samples.iter().map(|s| var_alpha(s, a)), mu),
        offsets,
        weighted_expectation: weighted_expectation(samples, mu)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub quartet: WeightedQuartet,
    /// `|R_Q - (E_Q[X] + D_Q)|`.
    pub risk_residual: f64,
    /// `|V_Q - (E_Q[X] + E_Q)|`.
    pub regret_residual: f64,
    /// `|Σ μ_i b_i|`.
    pub balance_residual: f64,
    /// `|min_c {c + V_Q(X - c)} - R_Q|`.
    pub minimum_residual: f64,
    /// `c + V_Q(X - c)` at `c = S_Q`, minus the searched minimum.
    pub statistic_gap: f64,
    pub minimiser: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Checks the quadrangle relations and that `S_Q` minimises
/// `c ↦ c + V_Q(X - c)` with minimum `R_Q`.
pub fn verify_identities(samples: &[LossSample], a: Level, mu: &WeightVector, tol: f64) -> Result<IdentityReport> {
    if !(tol > 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let q = mix_quartet(samples, a, mu)?;
    let risk_residual = (q.risk - (q.weighted_expectation + q.deviation)).abs();
    let regret_residual = (q.regret - (q.weighted_expectation + q.error)).abs();
    let balance_residual = weighted(q.offsets.iter().copied(), mu).abs();

    let objective = |c: f64| -> Result<f64> {
        let moved: Vec<LossSample> = samples.iter().map(|s| s.shifted(c)).collect();
        Ok(c + weighted_regret(&moved, a, mu)?)
    };
    let lo = samples.iter().map(LossSample::min).fold(f64::INFINITY, f64::min) - 1.0;
    let hi = samples.iter().map(LossSample::max).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let (minimiser, minimum) = golden_section(objective, lo, hi, GOLDEN_ITERATIONS)?;
    let minimum_residual = (minimum - q.risk).abs();
    let statistic_gap = objective(q.statistic)? - minimum;

    let passed = risk_residual <= tol
        && regret_residual <= tol
        && balance_residual <= tol
        && minimum_residual <= tol
        && statistic_gap <= tol;
    Ok(IdentityReport {
        quartet: q,
        risk_residual,
        regret_residual,
        balance_residual,
        minimum_residual,
        statistic_gap,
        minimiser,
        tol,
        passed,
    })
}

/// Minimises a convex function on `[lo, hi]`; returns the best point seen.
fn golden_section<F>(f: F, mut lo: f64, mut hi: f64, iterations: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iterations {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v < best.1 {
                best = (x, v);
            }
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::es_quartet;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn sample(xs: &[f64]) -> LossSample {
        LossSample::new(xs.to_vec()).unwrap()
    }

    fn range(lo: i32, hi: i32) -> LossSample {
        sample(&(lo..=hi).map(f64::from).collect::<Vec<_>>())
    }

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    fn lvl(a: f64) -> Level {
        Level::new(a).unwrap()
    }

    /// Brute-force regret objective for given offsets.
    fn regret_at(samples: &[LossSample], a: Level, mu: &WeightVector, b: &[f64]) -> f64 {
        samples
            .iter()
            .zip(b)
            .zip(mu.as_slice())
            .map(|((s, bi), m)| {
                m * a.tail_scale() * s.as_slice().iter().map(|x| (x - bi).max(0.0)).sum::<f64>() / s.len() as f64
            })
            .sum()
    }

    #[test]
    fn weighted_expectation_examples() {
        assert_eq!(
            weighted_expectation(&[sample(&[4.0; 3]), sample(&[4.0])], &wv(&[0.3, 0.7])).unwrap(),
            4.0
        );
        assert_eq!(
            weighted_expectation(&[sample(&[1.0]), sample(&[3.0])], &wv(&[0.5, 0.5])).unwrap(),
            2.0
        );
        let got = weighted_expectation(
            &[sample(&[0.0, 2.0]), sample(&[2.0]), sample(&[3.0])],
            &wv(&[0.5, 0.25, 0.25]),
        )
        .unwrap();
        assert!((got - 1.75).abs() < 1e-12);
        assert!(weighted_expectation(&[sample(&[1.0])], &wv(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn offsets_examples() {
        assert_eq!(offsets_b(&[1.0, 3.0], &wv(&[0.5, 0.5])).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(offsets_b(&[2.5; 3], &wv(&[0.2, 0.3, 0.5])).unwrap(), vec![0.0; 3]);
        let b = offsets_b(&[2.0, 4.0, 10.0], &wv(&[0.5, 0.3, 0.2])).unwrap();
        for (got, want) in b.iter().zip([-2.2, -0.2, 5.8]) {
            assert!((got - want).abs() < 1e-12);
        }
        let balance: f64 = b.iter().zip([0.5, 0.3, 0.2]).map(|(x, m)| x * m).sum();
        assert!(balance.abs() < 1e-12);
    }

    #[test]
    fn single_scenario_reduces_to_es_quartet() {
        let s = sample(&[3.0, -1.0, 7.0, 2.0, 2.0, 9.5, -4.0]);
        let a = lvl(0.7);
        let q = mix_quartet(std::slice::from_ref(&s), a, &wv(&[1.0])).unwrap();
        let e = es_quartet(&s, a);
        assert_eq!(q.offsets, vec![0.0]);
        assert_eq!(
            (q.risk, q.deviation, q.regret, q.error, q.statistic),
            (e.risk, e.deviation, e.regret, e.error, e.statistic)
        );
    }

    #[test]
    fn identical_scenarios_reduce_to_es_quartet() {
        let s = range(1, 10);
        let a = lvl(0.8);
        let samples = vec![s.clone(), s.clone(), s.clone()];
        let q = mix_quartet(&samples, a, &wv(&[0.2, 0.3, 0.5])).unwrap();
        let e = es_quartet(&s, a);
        for (got, want) in [
            (q.risk, e.risk),
            (q.deviation, e.deviation),
            (q.regret, e.regret),
            (q.error, e.error),
            (q.statistic, e.statistic),
        ] {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn two_scenario_risk() {
        let samples = vec![range(1, 10), range(11, 20)];
        let q = mix_quartet(&samples, lvl(0.8), &wv(&[0.5, 0.5])).unwrap();
        assert!((q.risk - 14.5).abs() < 1e-12);
        let r = verify_identities(&samples, lvl(0.8), &wv(&[0.5, 0.5]), 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn centred_statistics_are_not_the_unshifted_minimiser() {
        // Centred statistics minimise only after shifting by S_Q.
        let samples = vec![
            range(0, 9),
            sample(&(0..10).map(|k| 10.0 * k as f64).collect::<Vec<_>>()),
        ];
        let a = lvl(0.8);
        let mu = wv(&[0.5, 0.5]);
        let stats: Vec<f64> = samples.iter().map(|s| var_alpha(s, a)).collect();
        let centred = offsets_b(&stats, &mu).unwrap();
        assert!((regret_at(&samples, a, &mu, &centred) - 140.25).abs() < 1e-9);
        assert!((regret_at(&samples, a, &mu, &[0.0, 0.0]) - 123.75).abs() < 1e-9);
        let q = mix_quartet(&samples, a, &mu).unwrap();
        assert!(q.regret <= 123.75 + 1e-9);

        // After shifting by S_Q they are optimal.
        let s_q = q.statistic;
        let moved: Vec<LossSample> = samples.iter().map(|s| s.shifted(s_q)).collect();
        let at_centred = regret_at(&moved, a, &mu, &centred);
        let exact = weighted_regret(&moved, a, &mu).unwrap();
        assert!((at_centred - exact).abs() < 1e-9, "{at_centred} vs {exact}");
    }

    #[test]
    fn constant_samples() {
        let samples = vec![sample(&[4.0; 5]), sample(&[4.0; 3])];
        let q = mix_quartet(&samples, lvl(0.9), &wv(&[0.4, 0.6])).unwrap();
        assert_eq!(q.risk, 4.0);
        assert_eq!(q.statistic, 4.0);
        assert_eq!(q.deviation, 0.0);
        let r = verify_identities(&samples, lvl(0.9), &wv(&[0.4, 0.6]), 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn rejects_bad_tolerance() {
        let s = vec![range(1, 3)];
        assert!(verify_identities(&s, lvl(0.5), &wv(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn vertex_weights_select_one_scenario() {
        let samples = vec![range(1, 10), sample(&[5.0, -2.0, 8.0, 8.0]), range(-3, 3)];
        let a = lvl(0.75);
        for i in 0..3 {
            let q = mix_quartet(&samples, a, &WeightVector::vertex(3, i).unwrap()).unwrap();
            let e = es_quartet(&samples[i], a);
            assert_eq!(
                (q.risk, q.deviation, q.regret, q.error, q.statistic),
                (e.risk, e.deviation, e.regret, e.error, e.statistic)
            );
        }
    }

    fn random_case(rng: &mut rand_chacha::ChaCha8Rng) -> (Vec<LossSample>, WeightVector, Level) {
        let n = rng.gen_range(1..=4);
        let samples = (0..n)
            .map(|_| {
                let t = rng.gen_range(1..=25);
                let loc = rng.gen_range(-5.0..5.0);
                sample(&(0..t).map(|_| loc + rng.gen_range(-10.0..10.0)).collect::<Vec<_>>())
            })
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let residue = 1.0 - exact_sum(w.iter().copied());
        w[0] += residue;
        (samples, wv(&w), lvl(rng.gen_range(0.05..0.95)))
    }

    #[test]
    fn exact_offsets_beat_random_feasible_offsets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (samples, mu, a) = random_case(&mut rng);
            let q = mix_quartet(&samples, a, &mu).unwrap();
            let best = regret_at(&samples, a, &mu, &q.offsets);
            assert!((best - q.regret).abs() < 1e-9);
            for _ in 0..100 {
                let raw: Vec<f64> = (0..samples.len()).map(|_| rng.gen_range(-15.0..15.0)).collect();
                let centre: f64 = raw.iter().zip(mu.as_slice()).map(|(x, m)| x * m).sum();
                let b: Vec<f64> = raw.iter().map(|x| x - centre).collect();
                assert!(q.regret <= regret_at(&samples, a, &mu, &b) + 1e-9);
            }
        }
    }

    #[test]
    fn identities_hold_on_random_inputs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let (samples, mu, a) = random_case(&mut rng);
            let r = verify_identities(&samples, a, &mu, 1e-6).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.balance_residual <= 1e-10);
        }
    }

    #[test]
    fn deviation_is_zero_iff_every_scenario_is_constant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let (samples, mu, a) = random_case(&mut rng);
            let q = mix_quartet(&samples, a, &mu).unwrap();
            let all_constant = samples.iter().all(|s| s.min() == s.max());
            assert!(q.deviation >= 0.0);
            assert_eq!(q.deviation == 0.0, all_constant);
        }
        let q = mix_quartet(&[sample(&[1.0; 3]), sample(&[7.0; 2])], lvl(0.5), &wv(&[0.5, 0.5])).unwrap();
        assert_eq!(q.deviation, 0.0);
    }

    proptest! {
        #[test]
        fn risk_is_translation_equivariant_and_homogeneous(
            seed in any::<u64>(), shift in -20.0f64..20.0, scale in 0.0f64..5.0
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (samples, mu, a) = random_case(&mut rng);
            let base = mix_quartet(&samples, a, &mu).unwrap().risk;
            let moved: Vec<LossSample> = samples.iter().map(|s| s.shifted(-shift)).collect();
            let scaled: Vec<LossSample> = samples.iter().map(|s| s.scaled(scale)).collect();
            let tol = 1e-9 * (1.0 + base.abs() + shift.abs());
            prop_assert!((mix_quartet(&moved, a, &mu).unwrap().risk - (base + shift)).abs() <= tol);
            prop_assert!((mix_quartet(&scaled, a, &mu).unwrap().risk - scale * base).abs() <= tol * (1.0 + scale));
        }

        #[test]
        fn offsets_balance(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (samples, mu, a) = random_case(&mut rng);
            let q = mix_quartet(&samples, a, &mu).unwrap();
            let balance = exact_sum(q.offsets.iter().zip(mu.as_slice()).map(|(b, m)| b * m));
            prop_assert!(balance.abs() <= 1e-10);
            prop_assert!((q.regret - (q.weighted_expectation + q.error)).abs() <= 1e-10 * (1.0 + q.regret.abs()));
            prop_assert!((q.risk - (q.weighted_expectation + q.deviation)).abs() <= 1e-10 * (1.0 + q.risk.abs()));
        }
    }
}
