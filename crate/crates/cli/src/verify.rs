//! The `verify` command: axiom profiles of a functional catalog, weight
//! recovery round-trips, quadrangle identities on random instances and an
//! explicit nested-scenario example where the larger set carries less risk.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskquad_core::wgrm::zoo::NamedFunctional;
use riskquad_core::wgrm::{a3_check, aggregate, check_axioms, recover_weights, Axiom, Counterexample};
use riskquad_core::{es_alpha, verify_identities, Level, LossSample, RiskVector, WeightVector};
use serde::Serialize;

use crate::error::{CliError, Result};

/// Relations that are algebraic identities of the quartet.
pub const RELATION_TOL: f64 = 1e-10;
/// The searched minimum and the statistic's place in the argmin.
pub const MINIMUM_TOL: f64 = 1e-6;
pub const RECOVERY_ROUND_TRIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trials: usize,
    pub identity_instances: usize,
    pub recovery_vectors: usize,
}

impl VerifyOptions {
    pub fn new(seed: u64, trials: usize) -> Self {
        Self {
            seed,
            trials,
            identity_instances: 200,
            recovery_vectors: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogRow {
    pub functional: String,
    pub axiom: Axiom,
    pub expected: bool,
    pub observed: bool,
    pub worst_violation: f64,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub dimension: usize,
    pub vectors: usize,
    pub max_error: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IdentitySummary {
    pub instances: usize,
    pub failures: usize,
    pub max_risk_residual: f64,
    pub max_regret_residual: f64,
    pub max_balance_residual: f64,
    pub max_minimum_residual: f64,
    pub max_statistic_gap: f64,
}

/// Two scenarios for one loss: `Q` holds the first, `R` both.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedExample {
    pub alpha: f64,
    pub losses: Vec<Vec<f64>>,
    pub es: Vec<f64>,
    pub weights_q: Vec<f64>,
    pub weights_r: Vec<f64>,
    pub aggregate_q: f64,
    pub aggregate_r: f64,
    /// Whether `aggregate_q <= aggregate_r`.
    pub monotone_in_set: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub catalog: Vec<CatalogRow>,
    pub recovery: Vec<RecoveryRow>,
    pub identities: IdentitySummary,
    pub nested: NestedExample,
}

impl VerifyReport {
    /// Every disagreement with the expected outcome, one line each.
    pub fn mismatches(&self) -> Vec<String> {
        let mut out = Vec::new();
        for row in self.catalog.iter().filter(|r| r.expected != r.observed) {
            out.push(format!(
                "{} / {}: expected {}, observed {}",
                row.functional,
                row.axiom,
                verdict(row.expected),
                verdict(row.observed)
            ));
        }
        for row in self.recovery.iter().filter(|r| r.failures > 0) {
            out.push(format!(
                "weight recovery n = {}: {} of {} vectors off",
                row.dimension, row.failures, row.vectors
            ));
        }
        if self.identities.failures > 0 {
            out.push(format!(
                "quadrangle identities: {} of {} instances off",
                self.identities.failures, self.identities.instances
            ));
        }
        if self.nested.monotone_in_set {
            out.push("nested scenario example did not show a larger risk for the smaller set".into());
        }
        out
    }

    pub fn ok(&self) -> bool {
        self.mismatches().is_empty()
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Result<WeightVector> {
    let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = draws.iter().sum();
    WeightVector::new(draws.iter().map(|d| d / total).collect()).map_err(internal)
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

pub fn check_catalog(catalog: &[NamedFunctional], trials: usize, seed: u64) -> Result<Vec<CatalogRow>> {
    let mut rows = Vec::new();
    for entry in catalog {
        let report = check_axioms(entry.f.as_ref(), entry.dimension, trials, seed).map_err(internal)?;
        for (axiom, expected) in &entry.expected {
            let out = report.outcome(*axiom);
            rows.push(CatalogRow {
                functional: entry.name.clone(),
                axiom: *axiom,
                expected: *expected,
                observed: out.passed,
                worst_violation: out.worst_violation,
                counterexample: out.counterexample.clone(),
            });
        }
    }
    Ok(rows)
}

/// Round-trips random weights through the weighted aggregation for each
/// dimension `2..=8`.
pub fn check_recovery(vectors: usize, seed: u64) -> Result<Vec<RecoveryRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    let mut rows = Vec::new();
    for n in 2..=8 {
        let mut max_error: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..vectors {
            let mu = random_simplex(&mut rng, n)?;
            let f = |x: &[f64]| {
                let v = RiskVector::new(x.to_vec()).expect("finite indicator");
                aggregate(&v, &mu).expect("dimension matches")
            };
            let err = match recover_weights(f, n) {
                Ok(back) => back
                    .as_slice()
                    .iter()
                    .zip(mu.as_slice())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
                Err(_) => f64::INFINITY,
            };
            if !(err <= RECOVERY_ROUND_TRIP_TOL) {
                failures += 1;
            }
            max_error = max_error.max(err);
        }
        rows.push(RecoveryRow {
            dimension: n,
            vectors,
            max_error,
            failures,
        });
    }
    Ok(rows)
}

/// Random instances: one to four scenarios of one to forty losses each,
/// some on a coarse grid so that ties occur.
pub fn check_identities(instances: usize, seed: u64) -> Result<IdentitySummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0002);
    let mut s = IdentitySummary {
        instances,
        ..Default::default()
    };
    for _ in 0..instances {
        let n = rng.gen_range(1..=4);
        let coarse = rng.gen_bool(0.3);
        let samples: Vec<LossSample> = (0..n)
            .map(|_| {
                let len = rng.gen_range(1..=40);
                let losses = (0..len)
                    .map(|_| {
                        let x: f64 = rng.gen_range(-10.0..10.0);
                        if coarse {
                            x.round()
                        } else {
                            x
                        }
                    })
                    .collect();
                LossSample::new(losses).map_err(internal)
            })
            .collect::<Result<_>>()?;
        let a = Level::new(rng.gen_range(0.5..0.99)).map_err(internal)?;
        let mu = random_simplex(&mut rng, n)?;
        let r = verify_identities(&samples, a, &mu, MINIMUM_TOL).map_err(internal)?;
        let ok = r.passed
            && r.risk_residual <= RELATION_TOL
            && r.regret_residual <= RELATION_TOL
            && r.balance_residual <= RELATION_TOL;
        if !ok {
            s.failures += 1;
        }
        s.max_risk_residual = s.max_risk_residual.max(r.risk_residual);
        s.max_regret_residual = s.max_regret_residual.max(r.regret_residual);
        s.max_balance_residual = s.max_balance_residual.max(r.balance_residual);
        s.max_minimum_residual = s.max_minimum_residual.max(r.minimum_residual);
        s.max_statistic_gap = s.max_statistic_gap.max(r.statistic_gap);
    }
    Ok(s)
}

/// One loss viewed under a stressed and a calm scenario. Adding the calm
/// scenario to the set and spreading the weight lowers the aggregate.
pub fn nested_example() -> Result<NestedExample> {
    let alpha = 0.9;
    let stressed: Vec<f64> = (0..20).map(|k| -2.0 + 0.5 * k as f64).collect();
    let calm: Vec<f64> = (0..20).map(|k| (k as f64 - 30.0) / 10.0).collect();
    let a = Level::new(alpha).map_err(internal)?;
    let es: Vec<f64> = [&stressed, &calm]
        .iter()
        .map(|l| Ok(es_alpha(&LossSample::new(l.to_vec()).map_err(internal)?, a)))
        .collect::<Result<_>>()?;
    let weights_q = vec![1.0];
    let weights_r = vec![0.5, 0.5];
    let rq = RiskVector::new(es[..1].to_vec()).map_err(internal)?;
    let rr = RiskVector::new(es.clone()).map_err(internal)?;
    let mq = WeightVector::new(weights_q.clone()).map_err(internal)?;
    let mr = WeightVector::new(weights_r.clone()).map_err(internal)?;
    Ok(NestedExample {
        alpha,
        aggregate_q: aggregate(&rq, &mq).map_err(internal)?,
        aggregate_r: aggregate(&rr, &mr).map_err(internal)?,
        monotone_in_set: a3_check(&rq, &mq, &rr, &mr).map_err(internal)?,
        losses: vec![stressed, calm],
        es,
        weights_q,
        weights_r,
    })
}

/// Runs every suite against `catalog`.
pub fn run_verify(catalog: &[NamedFunctional], opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    Ok(VerifyReport {
        seed: opts.seed,
        trials: opts.trials,
        catalog: check_catalog(catalog, opts.trials, opts.seed)?,
        recovery: check_recovery(opts.recovery_vectors, opts.seed)?,
        identities: check_identities(opts.identity_instances, opts.seed)?,
        nested: nested_example()?,
    })
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

/// Plain-text report.
pub fn render(report: &VerifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verify: seed {}, {} trials per axiom", report.seed, report.trials);
    let _ = writeln!(out, "\naxiom catalog");
    for row in &report.catalog {
        let mark = if row.expected == row.observed {
            "ok      "
        } else {
            "MISMATCH"
        };
        let _ = writeln!(
            out,
            "  {mark} {:<22} {:<26} expected {} observed {}",
            row.functional,
            row.axiom.name(),
            verdict(row.expected),
            verdict(row.observed)
        );
        if let (false, Some(c)) = (row.observed, &row.counterexample) {
            let input = serde_json::to_string(&c.input).unwrap_or_default();
            let _ = writeln!(out, "           counterexample {input}: lhs {} rhs {}", c.lhs, c.rhs);
        }
    }
    let _ = writeln!(out, "\nweight recovery");
    for row in &report.recovery {
        let _ = writeln!(
            out,
            "  n = {}: {} vectors, max error {:e}, {} off",
            row.dimension, row.vectors, row.max_error, row.failures
        );
    }
    let s = &report.identities;
    let _ = writeln!(
        out,
        "\nquadrangle identities: {} instances, {} off",
        s.instances, s.failures
    );
    let _ = writeln!(
        out,
        "  max residuals: risk {:e}, regret {:e}, balance {:e}, minimum {:e}, statistic gap {:e}",
        s.max_risk_residual, s.max_regret_residual, s.max_balance_residual, s.max_minimum_residual, s.max_statistic_gap
    );
    let n = &report.nested;
    let _ = writeln!(
        out,
        "\nnested scenario sets (Q = {{P1}} inside R = {{P1, P2}}), ES at alpha = {}",
        n.alpha
    );
    let _ = writeln!(out, "  P1 losses {}", fmt_list(&n.losses[0]));
    let _ = writeln!(out, "  P2 losses {}", fmt_list(&n.losses[1]));
    let _ = writeln!(out, "  ES under P1 {}, under P2 {}", n.es[0], n.es[1]);
    let _ = writeln!(
        out,
        "  aggregate(Q) with weights {} = {}; aggregate(R) with weights {} = {}",
        fmt_list(&n.weights_q),
        n.aggregate_q,
        fmt_list(&n.weights_r),
        n.aggregate_r
    );
    let _ = writeln!(
        out,
        "  {}",
        if n.monotone_in_set {
            "aggregate(Q) <= aggregate(R): no counterexample"
        } else {
            "aggregate(Q) > aggregate(R): enlarging the scenario set lowered the risk"
        }
    );
    let mismatches = report.mismatches();
    let _ = writeln!(
        out,
        "\n{}",
        if mismatches.is_empty() {
            "result: all checks match".to_string()
        } else {
            format!("result: {} mismatches", mismatches.len())
        }
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_example_numbers() {
        let n = nested_example().unwrap();
        // Oracle: the top two of twenty equally likely losses carry the
        // 10% tail; stressed 7.0 and 7.5, calm -1.2 and -1.1.
        assert!((n.es[0] - 7.25).abs() < 1e-12);
        assert!((n.es[1] - -1.15).abs() < 1e-12);
        assert!((n.aggregate_r - 3.05).abs() < 1e-12);
        assert!(!n.monotone_in_set);
    }

    #[test]
    fn simplex_draws_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..10 {
            let w = random_simplex(&mut rng, n).unwrap();
            assert_eq!(w.len(), n);
        }
    }
}
