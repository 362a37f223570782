//! Weighted aggregation of per-scenario risk evaluations.
//!
//! A weighted generalized risk measure combines the risk values
//! `Φ = (Ψ(X|P_1), …, Ψ(X|P_n))` of one position under `n` scenarios into a
//! single number. The discrete forms implemented here are
//!
//! * [`aggregate`]: the fixed-weight inner product `⟨μ, Φ⟩`;
//! * [`aggregate_sup`]: the worst case `max_{μ∈W} ⟨μ, Φ^q⟩` over a finite
//!   weight set applied to the sorted vector `Φ^q`;
//! * [`density::aggregate_density`]: the discretised continuous analogue
//!   `∫ φ^q(t) ν(t) dt` with a piecewise-constant density.

pub mod axioms;
pub mod density;
pub mod zoo;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::measures::sorted_copy;
use crate::types::{RiskVector, WeightVector};

pub use axioms::{check_axioms, Axiom, AxiomOutcome, AxiomReport, Counterexample, TrialInput, AXIOM_TOL};
pub use density::{aggregate_density, DensityWeighting};

/// Tolerance used by [`recover_weights`] to accept the recovered vector.
pub const RECOVERY_TOL: f64 = 1e-8;

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(CoreError::LengthMismatch { expected, actual })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_i Ψ(X|P_i) μ_i`.
pub fn aggregate(v: &RiskVector, mu: &WeightVector) -> Result<f64> {
    check_len(v.len(), mu.len())?;
    Ok(dot(v.as_slice(), mu.as_slice()))
}

/// A finite set of candidate weight vectors, read as the vertex list of a
/// polytope of weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    members: Vec<WeightVector>,
    monotone_required: bool,
}

impl WeightSet {
    pub fn new(members: Vec<WeightVector>) -> Result<Self> {
        Self::build(members, false)
    }

    /// A weight set whose members must all be non-decreasing. The resulting
    /// sup-aggregation is fully sub-additive.
    pub fn monotone(members: Vec<WeightVector>) -> Result<Self> {
        Self::build(members, true)
    }

    fn build(members: Vec<WeightVector>, monotone_required: bool) -> Result<Self> {
        let first = members.first().ok_or(CoreError::EmptyWeightSet)?;
        let n = first.len();
        for m in &members {
            check_len(n, m.len())?;
            if monotone_required && !m.is_monotone() {
                let at = m.as_slice().windows(2).position(|p| p[1] < p[0]).map_or(0, |i| i + 1);
                return Err(CoreError::NotMonotone(at));
            }
        }
        Ok(Self {
            members,
            monotone_required,
        })
    }

    /// All `n` canonical basis vectors; the sup over them is the max component.
    pub fn vertices(n: usize) -> Result<Self> {
        let members = (0..n).map(|i| WeightVector::vertex(n, i)).collect::<Result<_>>()?;
        Self::new(members)
    }

    pub fn members(&self) -> &[WeightVector] {
        &self.members
    }

    pub fn dimension(&self) -> usize {
        self.members[0].len()
    }

    pub fn monotone_required(&self) -> bool {
        self.monotone_required
    }
}

/// `max_{μ ∈ W} ⟨μ, sort_ascending(Φ)⟩`.
pub fn aggregate_sup(v: &RiskVector, w: &WeightSet) -> Result<f64> {
    check_len(w.dimension(), v.len())?;
    let sorted = sorted_copy(v.as_slice());
    Ok(w.members
        .iter()
        .map(|mu| dot(&sorted, mu.as_slice()))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Recovers the unique weight vector of a comonotonically additive
/// functional from its values on the cumulative indicators
/// `u_k = (0, …, 0, 1, …, 1)` with `k` trailing ones:
/// `μ_{n-k+1} = f(u_k) - f(u_{k-1})`, `f(u_0) = 0`.
///
/// `f` is only ever evaluated on non-decreasing vectors.
pub fn recover_weights<F>(f: F, n: usize) -> Result<WeightVector>
where
    F: Fn(&[f64]) -> f64,
{
    if n == 0 {
        return Err(CoreError::InvalidArgument("dimension must be positive".into()));
    }
    let mut weights = vec![0.0; n];
    let mut prev = 0.0;
    let mut u = vec![0.0; n];
    for k in 1..=n {
        u[n - k] = 1.0;
        let value = f(&u);
        if !value.is_finite() {
            return Err(CoreError::AxiomsViolated(format!("f(u_{k}) is not finite")));
        }
        weights[n - k] = value - prev;
        prev = value;
    }
    for (i, &w) in weights.iter().enumerate() {
        if w < -RECOVERY_TOL {
            return Err(CoreError::AxiomsViolated(format!(
                "recovered weight {i} is negative ({w}); monotonicity fails"
            )));
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > RECOVERY_TOL {
        return Err(CoreError::AxiomsViolated(format!(
            "recovered weights sum to {total}; translation invariance fails"
        )));
    }
    for w in &mut weights {
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    WeightVector::with_tolerance(weights, RECOVERY_TOL)
}

/// Uncertainty-aversion check between a scenario set `Q` and a superset `R`:
/// true iff `Ψ(X|Q) <= Ψ(X|R)` for the given weighted aggregations.
pub fn a3_check(risk_q: &RiskVector, mu_q: &WeightVector, risk_r: &RiskVector, mu_r: &WeightVector) -> Result<bool> {
    if risk_q.len() > risk_r.len() {
        return Err(CoreError::InvalidArgument(
            "the smaller scenario set has more scenarios than the larger one".into(),
        ));
    }
    Ok(aggregate(risk_q, mu_q)? <= aggregate(risk_r, mu_r)?)
}
