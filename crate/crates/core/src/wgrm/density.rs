//! Density-weighted aggregation over a continuum of scenarios, discretised.
//!
//! The scenario risk functional is given by its values on `m` equal cells of
//! `[0, 1]`. Its non-decreasing rearrangement is integrated against a
//! piecewise-constant density `ν`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::measures::sorted_copy;
use crate::sum::exact_sum;

/// Tolerance on `∫ ν = 1`.
pub const DENSITY_MASS_TOL: f64 = 1e-10;

/// Piecewise-constant density on `[0, 1]`: value `values[k]` on
/// `[breakpoints[k], breakpoints[k + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityWeighting {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    non_decreasing: bool,
}

impl DensityWeighting {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::build(breakpoints, values, false)
    }

    /// A density that must also be non-decreasing.
    pub fn monotone(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::build(breakpoints, values, true)
    }

    /// `ν ≡ 1`.
    pub fn uniform() -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            values: vec![1.0],
            non_decreasing: true,
        }
    }

    /// Staircase with `pieces` equal steps, each taking the value of `f` at
    /// the step midpoint.
    pub fn staircase<F: Fn(f64) -> f64>(pieces: usize, f: F) -> Result<Self> {
        if pieces == 0 {
            return Err(CoreError::InvalidDensity("at least one piece required".into()));
        }
        let breakpoints: Vec<f64> = (0..=pieces).map(|k| k as f64 / pieces as f64).collect();
        let values = (0..pieces).map(|k| f((k as f64 + 0.5) / pieces as f64)).collect();
        Self::new(breakpoints, values)
    }

    fn build(breakpoints: Vec<f64>, values: Vec<f64>, non_decreasing: bool) -> Result<Self> {
        let err = |m: String| Err(CoreError::InvalidDensity(m));
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return err(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                values.len()
            ));
        }
        if breakpoints[0] != 0.0 || breakpoints[breakpoints.len() - 1] != 1.0 {
            return err("breakpoints must start at 0 and end at 1".into());
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return err("breakpoints must be strictly increasing".into());
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return err(format!("density value {v} is negative or not finite"));
        }
        if non_decreasing && values.windows(2).any(|w| w[1] < w[0]) {
            return err("density is required to be non-decreasing".into());
        }
        let mass = exact_sum(
            values
                .iter()
                .zip(breakpoints.windows(2))
                .map(|(v, w)| v * (w[1] - w[0])),
        );
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return err(format!("density integrates to {mass}, not 1"));
        }
        Ok(Self {
            breakpoints,
            values,
            non_decreasing,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// `∫ ν` over each of `m` equal cells, measured in units of one cell
    /// (so a cell fully inside a piece of value `v` gets exactly `v`).
    fn cell_weights(&self, m: usize) -> Vec<f64> {
        let mf = m as f64;
        let mut weights = vec![0.0; m];
        for (k, w) in weights.iter_mut().enumerate() {
            let (lo, hi) = (k as f64, (k + 1) as f64);
            // Pieces are few relative to cells in practice; find the first
            // piece that can overlap this cell.
            let first = self.breakpoints.partition_point(|&b| b * mf <= lo).saturating_sub(1);
            let mut acc = Vec::new();
            for p in first..self.values.len() {
                let a = self.breakpoints[p] * mf;
                if a >= hi {
                    break;
                }
                let b = self.breakpoints[p + 1] * mf;
                let overlap = b.min(hi) - a.max(lo);
                if overlap > 0.0 {
                    acc.push(self.values[p] * overlap);
                }
            }
            *w = exact_sum(acc);
        }
        weights
    }
}

/// `∫_0^1 φ^q(t) ν(t) dt` where `φ^q` is the sorted step function through
/// `grid_values` (cell `k` of `m` holds the `k`-th smallest value).
///
/// The product of two step functions is integrated exactly on the common
/// refinement of the cell grid and the density breakpoints, which is what
/// the midpoint rule gives on that refinement.
pub fn aggregate_density(grid_values: &[f64], nu: &DensityWeighting) -> Result<f64> {
    if grid_values.is_empty() {
        return Err(CoreError::InvalidArgument("at least one grid value required".into()));
    }
    if let Some(i) = grid_values.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite { index: i });
    }
    let m = grid_values.len();
    let sorted = sorted_copy(grid_values);
    let weights = nu.cell_weights(m);
    Ok(exact_sum(sorted.iter().zip(&weights).map(|(v, w)| v * w)) / m as f64)
}
