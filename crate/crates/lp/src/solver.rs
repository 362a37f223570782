//! Bounded-variable primal revised simplex.
//!
//! The basis inverse is kept dense and updated by elementary row operations,
//! with a fresh Gauss-Jordan factorisation every few pivots. Phase one
//! minimises the sum of artificial variables; phase two the objective.
//! Pricing is Dantzig's largest reduced cost, falling back to Bland's rule
//! after a run of degenerate pivots.

use serde::{Deserialize, Serialize};

use crate::error::{LpError, Result};
use crate::model::{LpModel, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `cᵀx`; `NaN` unless optimal.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row duals `∂ objective / ∂ rhs`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub max_primal_residual: f64,
    pub max_dual_infeasibility: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Primal feasibility and optimality tolerance.
    pub tol: f64,
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            pivot_tol: 1e-9,
            max_iterations: 200_000,
            refactor_every: 64,
            degenerate_limit: 50,
        }
    }
}

/// Solves `model` with default options and the given tolerance.
pub fn solve(model: &LpModel, tol: f64) -> Result<LpSolution> {
    solve_with(
        model,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_with(model: &LpModel, opts: &SolverOptions) -> Result<LpSolution> {
    if !(opts.tol > 0.0) {
        return Err(LpError::InvalidModel(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    model.validate()?;
    let mut s = Simplex::new(model, opts);
    let outcome = s.run();
    Ok(s.finish(model, outcome))
}

enum Outcome {
    Optimal,
    Infeasible(f64),
    Unbounded,
    Failure(String),
}

enum Step {
    Optimal,
    Continue,
    Unbounded,
}

struct Simplex {
    m: usize,
    n_struct: usize,
    /// First artificial column; slacks sit between `n_struct` and here.
    first_art: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    objective: Vec<f64>,
    x: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Position in `basis`, or `usize::MAX` when nonbasic.
    pos: Vec<usize>,
    /// Row-major `m × m` basis inverse.
    binv: Vec<f64>,
    opts: SolverOptions,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
}

const NONBASIC: usize = usize::MAX;

impl Simplex {
    fn new(model: &LpModel, opts: &SolverOptions) -> Self {
        let m = model.num_rows();
        let n_struct = model.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
        for (i, r) in model.rows.iter().enumerate() {
            for &(j, v) in &r.coeffs {
                cols[j].push((i, v));
            }
        }
        let mut lower = model.lower.clone();
        let mut upper = model.upper.clone();
        // Nonbasic structurals start at a finite bound, or 0 when free.
        let mut x: Vec<f64> = (0..n_struct)
            .map(|j| {
                if lower[j].is_finite() {
                    lower[j]
                } else if upper[j].is_finite() {
                    upper[j]
                } else {
                    0.0
                }
            })
            .collect();
        let rhs: Vec<f64> = model.rows.iter().map(|r| r.rhs).collect();
        let mut activity = vec![0.0; m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                activity[i] += v * x[j];
            }
        }

        let mut basis = vec![NONBASIC; m];
        // Slacks: `a·x + s = b` for ≤ rows and `a·x - s = b` for ≥ rows.
        for (i, r) in model.rows.iter().enumerate() {
            let sign = match r.sense {
                Sense::Le => 1.0,
                Sense::Ge => -1.0,
                Sense::Eq => continue,
            };
            let j = cols.len();
            cols.push(vec![(i, sign)]);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            let residual = rhs[i] - activity[i];
            if residual * sign >= 0.0 {
                x.push(residual * sign);
                basis[i] = j;
            } else {
                x.push(0.0);
            }
        }
        let first_art = cols.len();
        for i in 0..m {
            if basis[i] != NONBASIC {
                continue;
            }
            let residual = rhs[i] - activity[i];
            let sign = if residual >= 0.0 { 1.0 } else { -1.0 };
            let j = cols.len();
            cols.push(vec![(i, sign)]);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            x.push(residual.abs());
            basis[i] = j;
        }
        let total = cols.len();
        let mut pos = vec![NONBASIC; total];
        let mut binv = vec![0.0; m * m];
        for (i, &j) in basis.iter().enumerate() {
            pos[j] = i;
            binv[i * m + i] = cols[j][0].1;
        }
        Self {
            m,
            n_struct,
            first_art,
            cols,
            lower,
            upper,
            cost: vec![0.0; total],
            objective: model.objective.clone(),
            x,
            rhs,
            basis,
            pos,
            binv,
            opts: *opts,
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
        }
    }

    fn run(&mut self) -> Outcome {
        let total = self.cols.len();
        // Phase one.
        for j in 0..total {
            self.cost[j] = if j >= self.first_art { 1.0 } else { 0.0 };
        }
        if self.first_art < total {
            match self.optimise() {
                Ok(Step::Optimal) => {}
                Ok(_) => return Outcome::Failure("phase one reported unbounded".into()),
                Err(e) => return Outcome::Failure(e),
            }
            let infeasibility: f64 = (self.first_art..total).map(|j| self.x[j]).sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeasibility > self.opts.tol * scale {
                return Outcome::Infeasible(infeasibility);
            }
            if let Err(e) = self.expel_artificials() {
                return Outcome::Failure(e);
            }
        }
        // Phase two.
        for j in self.first_art..total {
            self.lower[j] = 0.0;
            self.upper[j] = 0.0;
            if self.pos[j] == NONBASIC {
                self.x[j] = 0.0;
            }
        }
        for j in 0..total {
            self.cost[j] = 0.0;
        }
        self.cost[..self.n_struct].copy_from_slice(&self.objective);
        self.degenerate_run = 0;
        if let Err(e) = self.refactor() {
            return Outcome::Failure(e);
        }
        match self.optimise() {
            Ok(Step::Optimal) => Outcome::Optimal,
            Ok(Step::Unbounded) => Outcome::Unbounded,
            Ok(Step::Continue) => unreachable!(),
            Err(e) => Outcome::Failure(e),
        }
    }

    fn optimise(&mut self) -> std::result::Result<Step, String> {
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(format!("iteration limit {} reached", self.opts.max_iterations));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            match self.iterate()? {
                Step::Continue => self.iterations += 1,
                done => return Ok(done),
            }
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += c * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        self.cost[j] - self.cols[j].iter().map(|&(i, v)| y[i] * v).sum::<f64>()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(i, v) in &self.cols[j] {
            for (r, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[r * m + i] * v;
            }
        }
        alpha
    }

    fn iterate(&mut self) -> std::result::Result<Step, String> {
        let tol = self.opts.tol;
        let bland = self.degenerate_run >= self.opts.degenerate_limit;
        let y = self.duals();

        let mut entering: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for j in 0..self.cols.len() {
            if self.pos[j] != NONBASIC || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced_cost(j, &y);
            let dir = if d < -tol && self.x[j] < self.upper[j] {
                1.0
            } else if d > tol && self.x[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                entering = Some((j, dir));
                break;
            }
            if d.abs() > best {
                best = d.abs();
                entering = Some((j, dir));
            }
        }
        let Some((q, dir)) = entering else {
            return Ok(Step::Optimal);
        };

        let alpha = self.column(q);
        let mut theta = self.upper[q] - self.lower[q];
        let mut leave: Option<(usize, bool)> = None;
        let mut leave_pivot = 0.0f64;
        for r in 0..self.m {
            let a = alpha[r];
            if a.abs() <= self.opts.pivot_tol {
                continue;
            }
            let j = self.basis[r];
            let rate = -dir * a;
            let (ratio, to_upper) = if rate < 0.0 {
                if !self.lower[j].is_finite() {
                    continue;
                }
                (((self.x[j] - self.lower[j]) / -rate).max(0.0), false)
            } else {
                if !self.upper[j].is_finite() {
                    continue;
                }
                (((self.upper[j] - self.x[j]) / rate).max(0.0), true)
            };
            let better = match leave {
                None => ratio < theta,
                Some((lr, _)) => {
                    if ratio < theta - 1e-12 {
                        true
                    } else if ratio <= theta + 1e-12 {
                        if bland {
                            j < self.basis[lr]
                        } else {
                            a.abs() > leave_pivot
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                theta = if leave.is_some() { theta.min(ratio) } else { ratio };
                leave = Some((r, to_upper));
                leave_pivot = a.abs();
            }
        }
        if !theta.is_finite() {
            return Ok(Step::Unbounded);
        }

        // Move along the edge.
        for r in 0..self.m {
            if alpha[r] != 0.0 {
                let j = self.basis[r];
                self.x[j] -= dir * theta * alpha[r];
            }
        }
        self.x[q] += dir * theta;
        if theta <= 1e-12 {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }

        match leave {
            None => {
                // Bound flip.
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            }
            Some((r, to_upper)) => {
                let out = self.basis[r];
                self.x[out] = if to_upper { self.upper[out] } else { self.lower[out] };
                self.pivot(r, q, &alpha);
            }
        }
        Ok(Step::Continue)
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let out = self.basis[r];
        self.pos[out] = NONBASIC;
        self.basis[r] = q;
        self.pos[q] = r;
        let p = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= p;
        }
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (b, pr) in row.iter_mut().zip(&pivot_row) {
                *b -= f * pr;
            }
        }
        self.since_refactor += 1;
    }

    /// Recomputes the basis inverse and the basic values from scratch.
    fn refactor(&mut self) -> std::result::Result<(), String> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                a[i * m + r] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs()))
                .unwrap();
            let pv = a[p * m + c];
            if pv.abs() < 1e-11 {
                return Err(format!("basis matrix is singular at column {c}"));
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            for k in 0..m {
                a[c * m + k] /= pv;
                inv[c * m + k] /= pv;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[i * m + k] -= f * a[c * m + k];
                    inv[i * m + k] -= f * inv[c * m + k];
                }
            }
        }
        self.binv = inv;

        // x_B = B⁻¹ (b - N x_N)
        let mut resid = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.pos[j] == NONBASIC && self.x[j] != 0.0 {
                for &(i, v) in col {
                    resid[i] -= v * self.x[j];
                }
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.x[self.basis[r]] = row.iter().zip(&resid).map(|(b, v)| b * v).sum();
        }
        Ok(())
    }

    /// Pivots basic artificials (all at zero after a feasible phase one)
    /// out of the basis where some non-artificial column can replace them.
    fn expel_artificials(&mut self) -> std::result::Result<(), String> {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.first_art {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.first_art {
                if self.pos[j] != NONBASIC {
                    continue;
                }
                let rho: f64 = self.cols[j].iter().map(|&(i, v)| self.binv[r * m + i] * v).sum();
                if rho.abs() > self.opts.pivot_tol && best.is_none_or(|b| rho.abs() > b.1) {
                    best = Some((j, rho.abs()));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.column(j);
                let out = self.basis[r];
                self.x[out] = 0.0;
                self.pivot(r, j, &alpha);
            }
        }
        self.refactor()
    }

    fn finish(&mut self, model: &LpModel, outcome: Outcome) -> LpSolution {
        let n = self.n_struct;
        let mut sol = LpSolution {
            status: LpStatus::NumericalFailure,
            objective: f64::NAN,
            values: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            max_primal_residual: f64::NAN,
            max_dual_infeasibility: f64::NAN,
            iterations: self.iterations,
            tolerance: self.opts.tol,
            diagnostics: None,
        };
        match outcome {
            Outcome::Infeasible(v) => {
                sol.status = LpStatus::Infeasible;
                sol.diagnostics = Some(format!("phase one ended with infeasibility {v:e}"));
                return sol;
            }
            Outcome::Unbounded => {
                sol.status = LpStatus::Unbounded;
                return sol;
            }
            Outcome::Failure(msg) => {
                sol.diagnostics = Some(msg);
                return sol;
            }
            Outcome::Optimal => {}
        }
        if let Err(e) = self.refactor() {
            sol.diagnostics = Some(e);
            return sol;
        }
        let y = self.duals();
        let mut dual_inf = 0.0f64;
        let mut reduced = Vec::with_capacity(n);
        for j in 0..self.cols.len() {
            let d = if self.pos[j] == NONBASIC {
                self.reduced_cost(j, &y)
            } else {
                0.0
            };
            if j < n {
                reduced.push(d);
            }
            if self.pos[j] == NONBASIC && self.lower[j] != self.upper[j] {
                if self.x[j] < self.upper[j] {
                    dual_inf = dual_inf.max(-d);
                }
                if self.x[j] > self.lower[j] {
                    dual_inf = dual_inf.max(d);
                }
            }
        }
        let values = self.x[..n].to_vec();
        let residual = model.max_violation(&values);
        sol.objective = model.objective_value(&values);
        sol.values = values;
        sol.duals = y;
        sol.reduced_costs = reduced;
        sol.max_primal_residual = residual;
        sol.max_dual_infeasibility = dual_inf;
        if residual > self.opts.tol || dual_inf > self.opts.tol {
            sol.diagnostics = Some(format!(
                "final point violates tolerances: primal residual {residual:e}, dual infeasibility {dual_inf:e}"
            ));
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol
    }
}
