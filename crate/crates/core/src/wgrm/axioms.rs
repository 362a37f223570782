//! Randomised property checks of a black-box aggregation functional.
//!
//! Every axiom gets its own seeded random stream, so the outcome of one
//! axiom does not depend on which others were checked or in what order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Absolute tolerance for every axiom identity or inequality.
pub const AXIOM_TOL: f64 = 1e-8;

const RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    /// `f(aΦ + b𝟙) = a f(Φ) + b` for `a ≥ 0`.
    TranslationHomogeneity,
    /// `Φ ≤ Ψ` componentwise implies `f(Φ) ≤ f(Ψ)`.
    Monotonicity,
    /// `f(Φ + Ψ) ≤ f(Φ) + f(Ψ)` for comonotone pairs.
    ComonotoneSubadditivity,
    /// `f(Φ + Ψ) ≤ f(Φ) + f(Ψ)` for all pairs.
    Subadditivity,
    /// `f(Φ^π) = f(Φ)` for every permutation `π`.
    PermutationInvariance,
    /// `f(Φ + Ψ) = f(Φ) + f(Ψ)` for comonotone pairs.
    ComonotoneAdditivity,
    /// `f(Φ + Ψ) = f(Φ) + f(Ψ)` for all pairs.
    Additivity,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [
        Axiom::TranslationHomogeneity,
        Axiom::Monotonicity,
        Axiom::ComonotoneSubadditivity,
        Axiom::Subadditivity,
        Axiom::PermutationInvariance,
        Axiom::ComonotoneAdditivity,
        Axiom::Additivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::TranslationHomogeneity => "translation-homogeneity",
            Axiom::Monotonicity => "monotonicity",
            Axiom::ComonotoneSubadditivity => "comonotone-subadditivity",
            Axiom::Subadditivity => "subadditivity",
            Axiom::PermutationInvariance => "permutation-invariance",
            Axiom::ComonotoneAdditivity => "comonotone-additivity",
            Axiom::Additivity => "additivity",
        }
    }

    fn stream(self) -> u64 {
        Axiom::ALL.iter().position(|a| *a == self).unwrap() as u64
    }
}

impl std::fmt::Display for Axiom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The random inputs of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrialInput {
    Affine { x: Vec<f64>, scale: f64, shift: f64 },
    Pair { x: Vec<f64>, y: Vec<f64> },
    Permutation { x: Vec<f64>, perm: Vec<usize> },
}

/// A failing trial. [`Counterexample::replay`] re-evaluates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub axiom: Axiom,
    pub input: TrialInput,
    pub lhs: f64,
    pub rhs: f64,
}

impl Counterexample {
    /// Re-evaluates the trial against `f`; true if it still violates the axiom.
    pub fn replay<F: Fn(&[f64]) -> f64>(&self, f: F) -> bool {
        let (lhs, rhs) = sides(self.axiom, &f, &self.input);
        !holds(self.axiom, lhs, rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomOutcome {
    pub axiom: Axiom,
    pub passed: bool,
    /// Largest violation seen over all trials (zero when passed).
    pub worst_violation: f64,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub dimension: usize,
    pub trials: usize,
    pub seed: u64,
    pub outcomes: Vec<AxiomOutcome>,
}

impl AxiomReport {
    pub fn outcome(&self, axiom: Axiom) -> &AxiomOutcome {
        self.outcomes
            .iter()
            .find(|o| o.axiom == axiom)
            .expect("report covers every axiom")
    }

    pub fn passed(&self, axiom: Axiom) -> bool {
        self.outcome(axiom).passed
    }
}

/// `(lhs, rhs)` of the axiom's relation on one trial input.
fn sides<F: Fn(&[f64]) -> f64>(axiom: Axiom, f: &F, input: &TrialInput) -> (f64, f64) {
    match input {
        TrialInput::Affine { x, scale, shift } => {
            let moved: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            (f(&moved), scale * f(x) + shift)
        }
        TrialInput::Pair { x, y } => match axiom {
            Axiom::Monotonicity => (f(x), f(y)),
            _ => {
                let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                (f(&sum), f(x) + f(y))
            }
        },
        TrialInput::Permutation { x, perm } => {
            let permuted: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
            (f(&permuted), f(x))
        }
    }
}

fn violation(axiom: Axiom, lhs: f64, rhs: f64) -> f64 {
    if !lhs.is_finite() || !rhs.is_finite() {
        return f64::INFINITY;
    }
    match axiom {
        Axiom::Monotonicity | Axiom::ComonotoneSubadditivity | Axiom::Subadditivity => (lhs - rhs).max(0.0),
        _ => (lhs - rhs).abs(),
    }
}

fn holds(axiom: Axiom, lhs: f64, rhs: f64) -> bool {
    violation(axiom, lhs, rhs) <= AXIOM_TOL
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-RANGE..RANGE)).collect()
}

/// A random non-decreasing piecewise-linear map of the real line.
fn monotone_map(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let intercept = rng.gen_range(-RANGE..RANGE);
    let base_slope = rng.gen_range(0.0..2.0);
    let kinks: Vec<(f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(-RANGE..RANGE), rng.gen_range(-1.0..2.0f64).max(0.0)))
        .collect();
    move |z| intercept + base_slope * z + kinks.iter().map(|(k, s)| s * (z - k).max(0.0)).sum::<f64>()
}

fn draw(axiom: Axiom, rng: &mut ChaCha8Rng, n: usize) -> TrialInput {
    match axiom {
        Axiom::TranslationHomogeneity => TrialInput::Affine {
            x: uniform_vec(rng, n),
            scale: rng.gen_range(0.0..5.0),
            shift: rng.gen_range(-RANGE..RANGE),
        },
        Axiom::Monotonicity => {
            let x = uniform_vec(rng, n);
            let y = x
                .iter()
                .map(|v| {
                    if rng.gen_bool(0.5) {
                        v + rng.gen_range(0.0..5.0)
                    } else {
                        *v
                    }
                })
                .collect();
            TrialInput::Pair { x, y }
        }
        Axiom::ComonotoneSubadditivity | Axiom::ComonotoneAdditivity => {
            let z = uniform_vec(rng, n);
            let (g, h) = (monotone_map(rng), monotone_map(rng));
            TrialInput::Pair {
                x: z.iter().map(|&v| g(v)).collect(),
                y: z.iter().map(|&v| h(v)).collect(),
            }
        }
        Axiom::Subadditivity | Axiom::Additivity => TrialInput::Pair {
            x: uniform_vec(rng, n),
            y: uniform_vec(rng, n),
        },
        Axiom::PermutationInvariance => {
            let x = uniform_vec(rng, n);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            TrialInput::Permutation { x, perm }
        }
    }
}

/// Checks every [`Axiom`] on `trials` random inputs of dimension `n`.
///
/// The result is a deterministic function of `(f, n, trials, seed)`.
pub fn check_axioms<F>(f: F, n: usize, trials: usize, seed: u64) -> Result<AxiomReport>
where
    F: Fn(&[f64]) -> f64,
{
    if n == 0 || trials == 0 {
        return Err(CoreError::InvalidArgument(
            "dimension and trial count must be positive".into(),
        ));
    }
    let outcomes = Axiom::ALL
        .iter()
        .map(|&axiom| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(axiom.stream());
            let mut worst = 0.0f64;
            let mut counterexample = None;
            for _ in 0..trials {
                let input = draw(axiom, &mut rng, n);
                let (lhs, rhs) = sides(axiom, &f, &input);
                let v = violation(axiom, lhs, rhs);
                if v > AXIOM_TOL {
                    worst = worst.max(v);
                    counterexample.get_or_insert(Counterexample { axiom, input, lhs, rhs });
                }
            }
            AxiomOutcome {
                axiom,
                passed: counterexample.is_none(),
                worst_violation: worst,
                counterexample,
            }
        })
        .collect();
    Ok(AxiomReport {
        dimension: n,
        trials,
        seed,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max(x: &[f64]) -> f64 {
        x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn max_component_profile() {
        let r = check_axioms(max, 4, 500, 7).unwrap();
        for a in [
            Axiom::TranslationHomogeneity,
            Axiom::Monotonicity,
            Axiom::ComonotoneSubadditivity,
            Axiom::Subadditivity,
            Axiom::PermutationInvariance,
            Axiom::ComonotoneAdditivity,
        ] {
            assert!(r.passed(a), "{a} should pass");
        }
        let out = r.outcome(Axiom::Additivity);
        assert!(!out.passed);
        assert!(out.counterexample.as_ref().unwrap().replay(max));
    }

    #[test]
    fn hand_counterexample_for_max_replays() {
        let c = Counterexample {
            axiom: Axiom::Additivity,
            input: TrialInput::Pair {
                x: vec![1.0, 0.0],
                y: vec![0.0, 1.0],
            },
            lhs: 1.0,
            rhs: 2.0,
        };
        assert!(c.replay(max));
        assert!(!c.replay(|x: &[f64]| x.iter().sum::<f64>() / 2.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let f = |x: &[f64]| x[0];
        let a = check_axioms(f, 3, 50, 99).unwrap();
        let b = check_axioms(f, 3, 50, 99).unwrap();
        assert_eq!(a, b);
        assert!(!a.passed(Axiom::PermutationInvariance));
    }

    #[test]
    fn comonotone_pairs_are_comonotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let TrialInput::Pair { x, y } = draw(Axiom::ComonotoneAdditivity, &mut rng, 6) else {
                unreachable!()
            };
            for i in 0..6 {
                for j in 0..6 {
                    assert!((x[i] - x[j]) * (y[i] - y[j]) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_zero_trials() {
        assert!(check_axioms(max, 3, 0, 1).is_err());
        assert!(check_axioms(max, 0, 10, 1).is_err());
    }
}
