//! LP formulations of weighted-ES portfolio selection.
//!
//! Variable order is fixed: asset weights `X1..Xm`, the shift `C`, scenario
//! offsets `B1..Bn` (manager only), then the tail excess variables
//! `T{i}_{k}` grouped by scenario and day. Rows are `R{i}_{k}` per scenario
//! day, then `BAL` (offset balance), `RET` (target return) and `BUD`
//! (budget).

use riskquad_core::{es_alpha, Level, LossSample, WeightVector};
use serde::{Deserialize, Serialize};

use crate::error::{LpError, Result};
use crate::model::{LpModel, Sense};
use crate::solver::{solve, LpSolution, LpStatus};

/// Post-solve warning threshold for a weight at its upper bound.
pub const FULL_WEIGHT_WARN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    Equality,
    AtLeast,
}

impl TargetMode {
    fn sense(self) -> Sense {
        match self {
            TargetMode::Equality => Sense::Eq,
            TargetMode::AtLeast => Sense::Ge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioProblem {
    /// `returns[i][k][j]`: return of asset `j` on day `k` of scenario `i`.
    pub returns: Vec<Vec<Vec<f64>>>,
    /// `theta[i][j]`: expected return of asset `j` under scenario `i`.
    pub theta: Vec<Vec<f64>>,
    pub theta0: f64,
    pub alpha: Level,
    pub mu: WeightVector,
    /// `None` uses equality for the manager and at-least for an analyst.
    pub constraint_mode: Option<TargetMode>,
}

impl PortfolioProblem {
    /// Uses each scenario's sample mean returns as its `theta`.
    pub fn with_sample_means(returns: Vec<Vec<Vec<f64>>>, theta0: f64, alpha: Level, mu: WeightVector) -> Result<Self> {
        let theta = returns
            .iter()
            .map(|days| {
                let m = days.first().map_or(0, Vec::len);
                (0..m)
                    .map(|j| days.iter().map(|d| d[j]).sum::<f64>() / days.len() as f64)
                    .collect()
            })
            .collect();
        let p = Self {
            returns,
            theta,
            theta0,
            alpha,
            mu,
            constraint_mode: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_assets(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    pub fn num_scenarios(&self) -> usize {
        self.returns.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LpError::InvalidProblem(m));
        let n = self.returns.len();
        if n == 0 {
            return bad("at least one scenario required".into());
        }
        if self.theta.len() != n || self.mu.len() != n {
            return bad(format!(
                "{n} return scenarios, {} theta vectors, {} weights",
                self.theta.len(),
                self.mu.len()
            ));
        }
        let m = self.num_assets();
        if m == 0 {
            return bad("at least one asset required".into());
        }
        if !self.theta0.is_finite() {
            return bad("target return is not finite".into());
        }
        for (i, days) in self.returns.iter().enumerate() {
            if days.is_empty() {
                return bad(format!("scenario {} has no days", i + 1));
            }
            if self.theta[i].len() != m || self.theta[i].iter().any(|v| !v.is_finite()) {
                return bad(format!("theta of scenario {} is malformed", i + 1));
            }
            for (k, day) in days.iter().enumerate() {
                if day.len() != m || day.iter().any(|v| !v.is_finite()) {
                    return bad(format!("day {} of scenario {} is malformed", k + 1, i + 1));
                }
            }
        }
        Ok(())
    }

    /// `θ_j = Σ_i μ_i θ^i_j`.
    pub fn aggregate_theta(&self) -> Vec<f64> {
        (0..self.num_assets())
            .map(|j| self.theta.iter().zip(self.mu.as_slice()).map(|(t, m)| m * t[j]).sum())
            .collect()
    }
}

fn add_assets(model: &mut LpModel, m: usize) -> Vec<usize> {
    (0..m)
        .map(|j| model.add_var(format!("X{}", j + 1), 0.0, 0.0, 1.0))
        .collect()
}

fn add_tail_rows(
    model: &mut LpModel,
    scenario: usize,
    days: &[Vec<f64>],
    x: &[usize],
    c: usize,
    offset: Option<usize>,
    cost: f64,
) {
    for (k, day) in days.iter().enumerate() {
        let t = model.add_var(format!("T{}_{}", scenario + 1, k + 1), cost, 0.0, f64::INFINITY);
        let mut coeffs: Vec<(usize, f64)> = vec![(t, 1.0), (c, 1.0)];
        coeffs.extend(x.iter().zip(day).map(|(&xj, &r)| (xj, r)));
        if let Some(b) = offset {
            coeffs.push((b, 1.0));
        }
        model.add_row(format!("R{}_{}", scenario + 1, k + 1), coeffs, Sense::Ge, 0.0);
    }
}

fn add_portfolio_rows(model: &mut LpModel, x: &[usize], theta: &[f64], sense: Sense, theta0: f64) {
    model.add_row("RET", x.iter().zip(theta).map(|(&j, &t)| (j, t)), sense, theta0);
    model.add_row("BUD", x.iter().map(|&j| (j, 1.0)), Sense::Eq, 1.0);
}

/// The weighted-ES manager program:
///
/// ```text
/// min  c + 1/(1-α) Σ_i μ_i/T_i Σ_k t_ik
/// s.t. t_ik + Σ_j r_jk x_j + c + b_i ≥ 0,  Σ_i μ_i b_i = 0,
///      Σ_j θ_j x_j (= or ≥) θ₀,  Σ_j x_j = 1,  0 ≤ x ≤ 1,  t ≥ 0.
/// ```
pub fn build_manager_lp(p: &PortfolioProblem) -> Result<LpModel> {
    p.validate()?;
    let mut model = LpModel::new("MANAGER");
    let x = add_assets(&mut model, p.num_assets());
    let c = model.add_var("C", 1.0, f64::NEG_INFINITY, f64::INFINITY);
    let b: Vec<usize> = (0..p.num_scenarios())
        .map(|i| model.add_var(format!("B{}", i + 1), 0.0, f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    let scale = p.alpha.tail_scale();
    for (i, days) in p.returns.iter().enumerate() {
        let cost = p.mu.as_slice()[i] * scale / days.len() as f64;
        add_tail_rows(&mut model, i, days, &x, c, Some(b[i]), cost);
    }
    model.add_row(
        "BAL",
        b.iter().zip(p.mu.as_slice()).map(|(&bi, &m)| (bi, m)),
        Sense::Eq,
        0.0,
    );
    let mode = p.constraint_mode.unwrap_or(TargetMode::Equality);
    add_portfolio_rows(&mut model, &x, &p.aggregate_theta(), mode.sense(), p.theta0);
    Ok(model)
}

/// The single-scenario program of analyst `i`: no offsets, target return
/// on the analyst's own `θ^i`.
pub fn build_analyst_lp(p: &PortfolioProblem, i: usize) -> Result<LpModel> {
    p.validate()?;
    if i >= p.num_scenarios() {
        return Err(LpError::ScenarioOutOfRange {
            index: i,
            count: p.num_scenarios(),
        });
    }
    let mut model = LpModel::new(format!("ANALYST{}", i + 1));
    let x = add_assets(&mut model, p.num_assets());
    let c = model.add_var("C", 1.0, f64::NEG_INFINITY, f64::INFINITY);
    let days = &p.returns[i];
    let cost = p.alpha.tail_scale() / days.len() as f64;
    add_tail_rows(&mut model, i, days, &x, c, None, cost);
    let mode = p.constraint_mode.unwrap_or(TargetMode::AtLeast);
    add_portfolio_rows(&mut model, &x, &p.theta[i], mode.sense(), p.theta0);
    Ok(model)
}

/// `y ↦ slope·y + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: f64,
    pub intercept: f64,
}

/// `Y ↦ Σ_k weights[k]·Y_k + constant` over the scenario's sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunctional {
    pub weights: Vec<f64>,
    pub constant: f64,
}

/// A scenario regret written as a maximum of affine pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegretPieces {
    /// `V(Y) = mean_k max_p φ_p(Y_k)`: one epigraph variable per day.
    Separable(Vec<AffinePiece>),
    /// `V(Y) = max_p φ_p(Y)`: one epigraph variable per scenario.
    Functional(Vec<AffineFunctional>),
}

impl RegretPieces {
    /// `(1/(1-α)) E[Y₊]` as the pieces `{0, y/(1-α)}`.
    pub fn es_regret(alpha: Level) -> Self {
        RegretPieces::Separable(vec![
            AffinePiece {
                slope: 0.0,
                intercept: 0.0,
            },
            AffinePiece {
                slope: alpha.tail_scale(),
                intercept: 0.0,
            },
        ])
    }
}

/// Epigraph LP `min c + Σ_i μ_i V_i(X(x) - c - b_i)` for regrets given by
/// affine pieces, with the manager's balance and portfolio rows. The loss
/// on day `k` is `-Σ_j r_jk x_j`.
pub fn build_generic_regret_lp(pieces: &[RegretPieces], p: &PortfolioProblem) -> Result<LpModel> {
    p.validate()?;
    if pieces.len() != p.num_scenarios() {
        return Err(LpError::InvalidProblem(format!(
            "{} piece lists for {} scenarios",
            pieces.len(),
            p.num_scenarios()
        )));
    }
    let mut model = LpModel::new("REGRET");
    let x = add_assets(&mut model, p.num_assets());
    let c = model.add_var("C", 1.0, f64::NEG_INFINITY, f64::INFINITY);
    let b: Vec<usize> = (0..p.num_scenarios())
        .map(|i| model.add_var(format!("B{}", i + 1), 0.0, f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    for (i, (spec, days)) in pieces.iter().zip(&p.returns).enumerate() {
        let mu = p.mu.as_slice()[i];
        let t_days = days.len();
        match spec {
            RegretPieces::Separable(list) => {
                if list.is_empty() {
                    return Err(LpError::InvalidProblem(format!("scenario {} has no pieces", i + 1)));
                }
                if list.iter().any(|q| !q.slope.is_finite() || !q.intercept.is_finite()) {
                    return Err(LpError::InvalidProblem(format!(
                        "scenario {} has a non-finite piece",
                        i + 1
                    )));
                }
                for (k, day) in days.iter().enumerate() {
                    let t = model.add_var(
                        format!("T{}_{}", i + 1, k + 1),
                        mu / t_days as f64,
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                    );
                    // t ≥ s·(-Σ r x - c - b) + q  ⇔  t + s Σ r x + s c + s b ≥ q
                    for (pi, q) in list.iter().enumerate() {
                        let s = q.slope;
                        let mut coeffs = vec![(t, 1.0), (c, s), (b[i], s)];
                        coeffs.extend(x.iter().zip(day).map(|(&xj, &r)| (xj, s * r)));
                        model.add_row(
                            format!("P{}_{}_{}", i + 1, k + 1, pi + 1),
                            coeffs,
                            Sense::Ge,
                            q.intercept,
                        );
                    }
                }
            }
            RegretPieces::Functional(list) => {
                if list.is_empty() {
                    return Err(LpError::InvalidProblem(format!("scenario {} has no pieces", i + 1)));
                }
                let t = model.add_var(format!("T{}", i + 1), mu, f64::NEG_INFINITY, f64::INFINITY);
                for (pi, f) in list.iter().enumerate() {
                    if f.weights.len() != t_days {
                        return Err(LpError::InvalidProblem(format!(
                            "piece {} of scenario {} has {} weights for {} days",
                            pi + 1,
                            i + 1,
                            f.weights.len(),
                            t_days
                        )));
                    }
                    if !f.constant.is_finite() || f.weights.iter().any(|w| !w.is_finite()) {
                        return Err(LpError::InvalidProblem(format!(
                            "piece {} of scenario {} is not finite",
                            pi + 1,
                            i + 1
                        )));
                    }
                    let total: f64 = f.weights.iter().sum();
                    let mut coeffs = vec![(t, 1.0), (c, total), (b[i], total)];
                    for (w, day) in f.weights.iter().zip(days) {
                        coeffs.extend(x.iter().zip(day).map(|(&xj, &r)| (xj, w * r)));
                    }
                    model.add_row(format!("P{}_{}", i + 1, pi + 1), coeffs, Sense::Ge, f.constant);
                }
            }
        }
    }
    model.add_row(
        "BAL",
        b.iter().zip(p.mu.as_slice()).map(|(&bi, &m)| (bi, m)),
        Sense::Eq,
        0.0,
    );
    let mode = p.constraint_mode.unwrap_or(TargetMode::Equality);
    add_portfolio_rows(&mut model, &x, &p.aggregate_theta(), mode.sense(), p.theta0);
    Ok(model)
}

/// Daily losses `-Σ_j x_j r_jk`.
pub fn portfolio_losses(x: &[f64], returns: &[Vec<f64>]) -> Vec<f64> {
    returns
        .iter()
        .map(|day| -day.iter().zip(x).map(|(r, w)| r * w).sum::<f64>())
        .collect()
}

/// Expected Shortfall of the portfolio's daily losses.
pub fn es_of_portfolio(x: &[f64], returns: &[Vec<f64>], a: Level) -> Result<f64> {
    if x.iter().any(|w| !w.is_finite() || *w < -1e-8) || (x.iter().sum::<f64>() - 1.0).abs() > 1e-8 {
        return Err(LpError::InvalidProblem("weights are not on the simplex".into()));
    }
    if returns.iter().any(|d| d.len() != x.len()) {
        return Err(LpError::InvalidProblem("return rows do not match the weights".into()));
    }
    let losses = LossSample::new(portfolio_losses(x, returns))?;
    Ok(es_alpha(&losses, a))
}

/// The solved portfolio program with its named parts pulled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub weights: Vec<f64>,
    pub shift: f64,
    pub offsets: Vec<f64>,
    pub warnings: Vec<String>,
    pub lp: LpSolution,
}

/// Solves a model built by this module and extracts weights, shift and
/// offsets by variable name.
pub fn solve_portfolio(model: &LpModel, tol: f64) -> Result<PortfolioSolution> {
    let lp = solve(model, tol)?;
    let mut out = PortfolioSolution {
        status: lp.status,
        objective: lp.objective,
        weights: Vec::new(),
        shift: f64::NAN,
        offsets: Vec::new(),
        warnings: Vec::new(),
        lp,
    };
    if out.status != LpStatus::Optimal {
        return Ok(out);
    }
    for (j, name) in model.var_names.iter().enumerate() {
        let v = out.lp.values[j];
        if name.starts_with('X') {
            out.weights.push(v);
        } else if name == "C" {
            out.shift = v;
        } else if name.starts_with('B') {
            out.offsets.push(v);
        }
    }
    for (j, w) in out.weights.iter().enumerate() {
        if *w >= 1.0 - FULL_WEIGHT_WARN && out.weights.len() > 1 {
            let msg = format!("asset X{} holds the whole portfolio (weight {w})", j + 1);
            log::warn!("{msg}");
            out.warnings.push(msg);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(a: f64) -> Level {
        Level::new(a).unwrap()
    }

    fn single_asset(r: &[f64], alpha: f64) -> PortfolioProblem {
        let days: Vec<Vec<f64>> = r.iter().map(|v| vec![*v]).collect();
        PortfolioProblem::with_sample_means(vec![days], -1.0, lvl(alpha), WeightVector::new(vec![1.0]).unwrap())
            .unwrap()
    }

    #[test]
    fn one_asset_manager_objective_is_es() {
        let mut p = single_asset(&[0.01, -0.02, 0.03], 2.0 / 3.0);
        p.constraint_mode = Some(TargetMode::AtLeast);
        let s = solve_portfolio(&build_manager_lp(&p).unwrap(), 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 0.02).abs() < 1e-12, "{}", s.objective);
        assert_eq!(s.weights, vec![1.0]);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn one_asset_analyst_objective_is_es() {
        let p = single_asset(&[0.01, -0.02, 0.03, 0.0, -0.05], 0.6);
        let s = solve_portfolio(&build_analyst_lp(&p, 0).unwrap(), 1e-9).unwrap();
        let es = es_of_portfolio(&[1.0], &p.returns[0], p.alpha).unwrap();
        assert!((s.objective - es).abs() < 1e-12);
        assert!(build_analyst_lp(&p, 1).is_err());
    }

    #[test]
    fn layout_is_deterministic() {
        let returns = vec![
            vec![vec![0.01, 0.02], vec![-0.01, 0.0], vec![0.03, -0.02]],
            vec![vec![0.0, 0.01], vec![0.02, -0.01]],
        ];
        let p = PortfolioProblem::with_sample_means(returns, 0.0, lvl(0.5), WeightVector::new(vec![0.5, 0.5]).unwrap())
            .unwrap();
        let m = build_manager_lp(&p).unwrap();
        assert_eq!(
            m.var_names,
            ["X1", "X2", "C", "B1", "B2", "T1_1", "T1_2", "T1_3", "T2_1", "T2_2"]
        );
        let rows: Vec<&str> = m.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(rows, ["R1_1", "R1_2", "R1_3", "R2_1", "R2_2", "BAL", "RET", "BUD"]);
        assert!((m.objective[5] - 0.5 * 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.rows[6].sense, Sense::Eq);
        assert_eq!(build_analyst_lp(&p, 1).unwrap().rows.last().unwrap().name, "BUD");
        assert_eq!(build_analyst_lp(&p, 1).unwrap().rows[2].sense, Sense::Ge);
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        let returns = vec![vec![vec![0.01, 0.02], vec![0.03, 0.0]]];
        let mut p =
            PortfolioProblem::with_sample_means(returns, 0.5, lvl(0.5), WeightVector::new(vec![1.0]).unwrap()).unwrap();
        let s = solve_portfolio(&build_manager_lp(&p).unwrap(), 1e-8).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        p.constraint_mode = Some(TargetMode::AtLeast);
        let s = solve_portfolio(&build_analyst_lp(&p, 0).unwrap(), 1e-8).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn rejects_malformed_problems() {
        let mu = WeightVector::new(vec![1.0]).unwrap();
        assert!(PortfolioProblem::with_sample_means(vec![vec![]], 0.0, lvl(0.5), mu.clone()).is_err());
        assert!(
            PortfolioProblem::with_sample_means(vec![vec![vec![0.1], vec![0.1, 0.2]]], 0.0, lvl(0.5), mu.clone())
                .is_err()
        );
        assert!(PortfolioProblem::with_sample_means(vec![vec![vec![f64::NAN]]], 0.0, lvl(0.5), mu).is_err());
        assert!(es_of_portfolio(&[0.5, 0.6], &[vec![0.0, 0.0]], lvl(0.5)).is_err());
    }

    #[test]
    fn es_of_vertex_portfolio() {
        let returns = vec![vec![0.01, 0.05], vec![-0.03, 0.0], vec![0.02, -0.04], vec![0.0, 0.01]];
        let a = lvl(0.5);
        let asset0 = LossSample::new(returns.iter().map(|d| -d[0]).collect()).unwrap();
        assert_eq!(es_of_portfolio(&[1.0, 0.0], &returns, a).unwrap(), es_alpha(&asset0, a));
        let twin: Vec<Vec<f64>> = returns.iter().map(|d| vec![d[0], d[0]]).collect();
        let got = es_of_portfolio(&[0.5, 0.5], &twin, a).unwrap();
        assert!((got - es_alpha(&asset0, a)).abs() < 1e-15);
    }
}
