//! Reference aggregation functionals with known axiom profiles.

use std::sync::Arc;

use super::axioms::Axiom;
use super::{aggregate_sup, WeightSet};
use crate::error::Result;
use crate::types::{RiskVector, WeightVector};

pub type Functional = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A functional together with the axioms it is expected to satisfy.
#[derive(Clone)]
pub struct NamedFunctional {
    pub name: String,
    pub dimension: usize,
    pub f: Functional,
    /// `(axiom, expected to pass)` for every axiom.
    pub expected: Vec<(Axiom, bool)>,
}

impl std::fmt::Debug for NamedFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NamedFunctional")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("expected", &self.expected)
            .finish()
    }
}

fn profile(failing: &[Axiom]) -> Vec<(Axiom, bool)> {
    Axiom::ALL.iter().map(|a| (*a, !failing.contains(a))).collect()
}

/// `Φ ↦ ⟨μ, Φ⟩`.
pub fn linear(mu: &WeightVector) -> Functional {
    let mu = mu.as_slice().to_vec();
    Arc::new(move |x: &[f64]| x.iter().zip(&mu).map(|(a, b)| a * b).sum())
}

/// Equal-weight mean.
pub fn mean() -> Functional {
    Arc::new(|x: &[f64]| x.iter().sum::<f64>() / x.len() as f64)
}

pub fn max_component() -> Functional {
    Arc::new(|x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn first_coordinate() -> Functional {
    Arc::new(|x: &[f64]| x[0])
}

/// `Φ ↦ max_{μ ∈ W} ⟨μ, Φ^q⟩`.
pub fn worst_case(w: WeightSet) -> Functional {
    Arc::new(move |x: &[f64]| {
        let v = RiskVector::new(x.to_vec()).expect("finite input");
        aggregate_sup(&v, &w).expect("dimension matches")
    })
}

/// The default verification catalog in dimension 3.
pub fn catalog() -> Result<Vec<NamedFunctional>> {
    let n = 3;
    let mu = WeightVector::new(vec![0.2, 0.3, 0.5])?;
    let w = WeightSet::monotone(vec![
        WeightVector::monotone(vec![0.0, 0.5, 0.5])?,
        WeightVector::monotone(vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0])?,
    ])?;
    Ok(vec![
        NamedFunctional {
            name: "linear(0.2,0.3,0.5)".into(),
            dimension: n,
            f: linear(&mu),
            expected: profile(&[Axiom::PermutationInvariance]),
        },
        NamedFunctional {
            name: "mean".into(),
            dimension: n,
            f: mean(),
            expected: profile(&[]),
        },
        NamedFunctional {
            name: "max".into(),
            dimension: n,
            f: max_component(),
            expected: profile(&[Axiom::Additivity]),
        },
        NamedFunctional {
            name: "first-coordinate".into(),
            dimension: n,
            f: first_coordinate(),
            expected: profile(&[Axiom::PermutationInvariance]),
        },
        NamedFunctional {
            name: "worst-case-monotone".into(),
            dimension: n,
            f: worst_case(w),
            expected: profile(&[Axiom::ComonotoneAdditivity, Axiom::Additivity]),
        },
    ])
}
