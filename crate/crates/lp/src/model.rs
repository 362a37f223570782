use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{LpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    /// `(variable index, coefficient)`, sorted by index, no zeros.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimisation LP: `min cᵀx` over rows and variable bounds. Bounds may
/// be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpModel {
    pub name: String,
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            var_names: Vec::new(),
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.var_names.push(name.into());
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_names.len() - 1
    }

    /// Adds a row; coefficients are sorted by variable, duplicates merged
    /// and zeros dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let mut c: Vec<(usize, f64)> = coeffs.into_iter().collect();
        c.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
        for (j, v) in c {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        self.rows.push(Row {
            name: name.into(),
            coeffs: merged,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|n| n == name)
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.name == name)
    }

    /// Checks finiteness, bound order, index ranges and name uniqueness.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |m: String| Err(LpError::InvalidModel(m));
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return bad("variable arrays have different lengths".into());
        }
        let mut names = HashSet::new();
        for (j, name) in self.var_names.iter().enumerate() {
            if name.is_empty() || name.contains(char::is_whitespace) {
                return bad(format!("variable {j} has an empty or blank-containing name"));
            }
            if !names.insert(name.as_str()) {
                return bad(format!("duplicate variable name {name}"));
            }
            if !self.objective[j].is_finite() {
                return bad(format!("objective coefficient of {name} is not finite"));
            }
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return bad(format!("bounds [{lo}, {hi}] of {name} are invalid"));
            }
        }
        let mut row_names = HashSet::new();
        for r in &self.rows {
            if r.name.is_empty() || r.name.contains(char::is_whitespace) {
                return bad("row with an empty or blank-containing name".into());
            }
            if !row_names.insert(r.name.as_str()) {
                return bad(format!("duplicate row name {}", r.name));
            }
            if !r.rhs.is_finite() {
                return bad(format!("rhs of {} is not finite", r.name));
            }
            for &(j, v) in &r.coeffs {
                if j >= n {
                    return bad(format!("row {} references variable {j}", r.name));
                }
                if !v.is_finite() {
                    return bad(format!(
                        "coefficient of {} in {} is not finite",
                        self.var_names[j], r.name
                    ));
                }
            }
        }
        Ok(())
    }

    /// `Σ c_j x_j`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
            let v = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}
