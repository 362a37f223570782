use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::sum::exact_sum;

/// Tolerance on `Σ weights = 1` for a [`WeightVector`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Confidence level `alpha` of VaR / ES, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Level(f64);

impl Level {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(CoreError::InvalidLevel(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 / (1 - alpha)`, the tail scaling factor.
    pub fn tail_scale(self) -> f64 {
        1.0 / (1.0 - self.0)
    }
}

impl TryFrom<f64> for Level {
    type Error = CoreError;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Level> for f64 {
    fn from(l: Level) -> f64 {
        l.0
    }
}

/// One scenario (probability measure) in a finite scenario family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub label: String,
    pub sample_count: usize,
}

/// Ordered, duplicate-free family of scenarios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(CoreError::EmptyScenarioSet);
        }
        let mut seen = HashSet::new();
        for s in &scenarios {
            if !seen.insert(s.id.as_str()) {
                return Err(CoreError::DuplicateScenario(s.id.clone()));
            }
            if s.sample_count == 0 {
                return Err(CoreError::ZeroSampleCount(s.id.clone()));
            }
        }
        Ok(Self { scenarios })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.scenarios.iter().position(|s| s.id == id)
    }
}

/// Probability weights over the scenarios of a [`ScenarioSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    /// Validates nonnegativity and `Σ w = 1` within [`SIMPLEX_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, SIMPLEX_TOL)
    }

    pub fn with_tolerance(weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(CoreError::NotSimplex("empty weight vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(CoreError::NonFinite { index: i });
            }
            if w < 0.0 {
                return Err(CoreError::NotSimplex(format!("weight {i} is negative ({w})")));
            }
        }
        let total = exact_sum(weights.iter().copied());
        if (total - 1.0).abs() > tol {
            return Err(CoreError::NotSimplex(format!("weights sum to {total}")));
        }
        Ok(Self { weights })
    }

    /// Additionally requires non-decreasing order (the monotone cone).
    pub fn monotone(weights: Vec<f64>) -> Result<Self> {
        let w = Self::new(weights)?;
        if let Some(i) = w.weights.windows(2).position(|p| p[1] < p[0]) {
            return Err(CoreError::NotMonotone(i + 1));
        }
        Ok(w)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::NotSimplex("empty weight vector".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Canonical basis vector `δ_i` of length `n`.
    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(CoreError::InvalidArgument(format!("vertex {i} out of range for n={n}")));
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Self::new(w)
    }

    pub fn is_monotone(&self) -> bool {
        self.weights.windows(2).all(|p| p[0] <= p[1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = CoreError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Vec<f64> {
        w.weights
    }
}

/// Per-scenario risk evaluations `(Ψ(X|P_1), …, Ψ(X|P_n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskVector {
    values: Vec<f64>,
}

impl RiskVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CoreError::InvalidArgument("risk vector must be nonempty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { index: i });
        }
        Ok(Self { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Equally weighted empirical observations of a loss under one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSample {
    losses: Vec<f64>,
}

impl LossSample {
    pub fn new(losses: Vec<f64>) -> Result<Self> {
        if losses.is_empty() {
            return Err(CoreError::EmptySample);
        }
        if let Some(i) = losses.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { index: i });
        }
        Ok(Self { losses })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.losses
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    /// The sample with every loss replaced by `loss - shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            losses: self.losses.iter().map(|x| x - shift).collect(),
        }
    }

    /// The sample with every loss multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            losses: self.losses.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.losses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.losses.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
