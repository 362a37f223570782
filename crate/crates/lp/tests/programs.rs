use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskquad_core::{es_alpha, Level, LossSample, WeightVector};
use riskquad_lp::*;

fn lvl(a: f64) -> Level {
    Level::new(a).unwrap()
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let residue = 1.0 - riskquad_core::sum::exact_sum(w.iter().copied());
    w[0] += residue;
    w
}

/// Random instance whose target is the return of a random feasible mix.
fn instance(rng: &mut ChaCha8Rng, n: usize, max_t: usize) -> PortfolioProblem {
    let m = rng.gen_range(1..=4);
    let returns: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| {
            let t = rng.gen_range(1..=max_t);
            let drift: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.01..0.01)).collect();
            (0..t)
                .map(|_| drift.iter().map(|d| d + rng.gen_range(-0.05..0.05)).collect())
                .collect()
        })
        .collect();
    let alpha = lvl(rng.gen_range(0.5..0.99));
    let mu = WeightVector::new(simplex(rng, n)).unwrap();
    let mut p = PortfolioProblem::with_sample_means(returns, 0.0, alpha, mu).unwrap();
    let mix = simplex(rng, m);
    p.theta0 = p.aggregate_theta().iter().zip(&mix).map(|(t, x)| t * x).sum();
    p
}

fn solved(model: &LpModel) -> PortfolioSolution {
    let s = solve_portfolio(model, 1e-9).unwrap();
    assert_eq!(s.status, LpStatus::Optimal, "{:?}", s.lp.diagnostics);
    s
}

/// `min_d Σ μ_i (d_i + 1/(1-α) mean((L_i - d_i)₊))` over the product of each
/// scenario's loss values, i.e. `c + b_i = d_i` on the VaR candidate grid.
fn grid_oracle(losses: &[Vec<f64>], mu: &[f64], a: Level) -> f64 {
    let per = |i: usize, d: f64| -> f64 {
        let l = &losses[i];
        d + a.tail_scale() * l.iter().map(|v| (v - d).max(0.0)).sum::<f64>() / l.len() as f64
    };
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; losses.len()];
    loop {
        let mut c = 0.0;
        let mut total = 0.0;
        for (i, &k) in idx.iter().enumerate() {
            c += mu[i] * losses[i][k];
        }
        // c + Σ μ_i V_i(L_i - c - b_i) with b_i = d_i - c.
        for (i, &k) in idx.iter().enumerate() {
            let d = losses[i][k];
            total += mu[i] * (per(i, d) - d);
        }
        best = best.min(c + total);
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < losses[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn single_scenario_optimum_is_es_of_optimal_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let p = instance(&mut rng, 1, 60);
        let s = solved(&build_manager_lp(&p).unwrap());
        let es = es_of_portfolio(&s.weights, &p.returns[0], p.alpha).unwrap();
        assert!((s.objective - es).abs() <= 1e-7, "{} vs {es}", s.objective);
    }
}

#[test]
fn weighted_optimum_decouples_per_scenario() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let p = instance(&mut rng, n, 30);
        let s = solved(&build_manager_lp(&p).unwrap());
        let losses: Vec<Vec<f64>> = p.returns.iter().map(|r| portfolio_losses(&s.weights, r)).collect();
        let decoupled: f64 = losses
            .iter()
            .zip(p.mu.as_slice())
            .map(|(l, m)| m * es_alpha(&LossSample::new(l.clone()).unwrap(), p.alpha))
            .sum();
        let grid = grid_oracle(&losses, p.mu.as_slice(), p.alpha);
        assert!(
            (s.objective - decoupled).abs() <= 1e-6,
            "{} vs {decoupled}",
            s.objective
        );
        assert!((s.objective - grid).abs() <= 1e-6, "{} vs grid {grid}", s.objective);
        let balance: f64 = s.offsets.iter().zip(p.mu.as_slice()).map(|(b, m)| b * m).sum();
        assert!(balance.abs() <= 1e-8);
    }
}

#[test]
fn relaxing_the_target_never_hurts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n = rng.gen_range(1..=3);
        let mut p = instance(&mut rng, n, 25);
        let strict = solved(&build_manager_lp(&p).unwrap()).objective;
        p.constraint_mode = Some(TargetMode::AtLeast);
        let relaxed = solved(&build_manager_lp(&p).unwrap()).objective;
        p.theta0 -= 0.01;
        let lower = solved(&build_manager_lp(&p).unwrap()).objective;
        assert!(relaxed <= strict + 1e-9);
        assert!(lower <= relaxed + 1e-9);
    }
}

#[test]
fn scaling_returns_scales_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..40 {
        let n = rng.gen_range(1..=3);
        let p = instance(&mut rng, n, 25);
        let k = rng.gen_range(0.2..5.0);
        let mut q = p.clone();
        for days in &mut q.returns {
            for day in days.iter_mut() {
                for r in day.iter_mut() {
                    *r *= k;
                }
            }
        }
        for t in &mut q.theta {
            for v in t.iter_mut() {
                *v *= k;
            }
        }
        q.theta0 *= k;
        let base = solved(&build_manager_lp(&p).unwrap());
        let scaled = solved(&build_manager_lp(&q).unwrap());
        assert!((scaled.objective - k * base.objective).abs() <= 1e-8 * (1.0 + k));
        // The original optimum stays optimal for the scaled program.
        let at_old: f64 = q
            .returns
            .iter()
            .zip(q.mu.as_slice())
            .map(|(r, m)| m * es_of_portfolio(&base.weights, r, q.alpha).unwrap())
            .sum();
        assert!((at_old - scaled.objective).abs() <= 1e-8 * (1.0 + k));
    }
}

#[test]
fn larger_level_never_lowers_analyst_risk() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let mut p = instance(&mut rng, 2, 30);
        p.theta0 = p.theta[1].iter().cloned().fold(f64::INFINITY, f64::min);
        p.alpha = lvl(0.8);
        let lo = solved(&build_analyst_lp(&p, 1).unwrap());
        p.alpha = lvl(0.9);
        let hi = solved(&build_analyst_lp(&p, 1).unwrap());
        assert!(hi.objective >= lo.objective - 1e-9);
    }
}

#[test]
fn target_above_every_asset_is_infeasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut p = instance(&mut rng, 2, 10);
    p.theta0 = p.aggregate_theta().iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-3;
    let s = solve_portfolio(&build_manager_lp(&p).unwrap(), 1e-9).unwrap();
    assert_eq!(s.status, LpStatus::Infeasible);
}

#[test]
fn one_scenario_manager_matches_analyst_columnwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut p = instance(&mut rng, 1, 8);
    p.constraint_mode = Some(TargetMode::AtLeast);
    let manager = build_manager_lp(&p).unwrap();
    let analyst = build_analyst_lp(&p, 0).unwrap();

    let b1 = manager.var_index("B1").unwrap();
    let keep: Vec<usize> = (0..manager.num_vars()).filter(|&j| j != b1).collect();
    let remap = |j: usize| if j > b1 { j - 1 } else { j };
    assert_eq!(
        keep.iter().map(|&j| manager.var_names[j].clone()).collect::<Vec<_>>(),
        analyst.var_names
    );
    assert_eq!(
        keep.iter().map(|&j| manager.objective[j]).collect::<Vec<_>>(),
        analyst.objective
    );
    let rows: Vec<_> = manager.rows.iter().filter(|r| r.name != "BAL").collect();
    assert_eq!(rows.len(), analyst.rows.len());
    for (r, a) in rows.iter().zip(&analyst.rows) {
        let coeffs: Vec<(usize, f64)> = r
            .coeffs
            .iter()
            .filter(|e| e.0 != b1)
            .map(|&(j, v)| (remap(j), v))
            .collect();
        assert_eq!((&r.name, &coeffs, r.sense, r.rhs), (&a.name, &a.coeffs, a.sense, a.rhs));
    }
    let bal = &manager.rows[manager.row_index("BAL").unwrap()];
    assert_eq!(bal.coeffs, vec![(b1, 1.0)]);
    assert_eq!(solved(&manager).objective, solved(&analyst).objective);
}

#[test]
fn es_pieces_reproduce_manager_program() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let returns: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|_| {
                (0..10)
                    .map(|_| vec![rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)])
                    .collect()
            })
            .collect();
        let mu = WeightVector::new(vec![0.3, 0.7]).unwrap();
        let mut p = PortfolioProblem::with_sample_means(returns, 0.0, lvl(0.8), mu).unwrap();
        let th = p.aggregate_theta();
        p.theta0 = 0.4 * th[0] + 0.6 * th[1];
        let manager = solved(&build_manager_lp(&p).unwrap()).objective;
        let pieces = vec![RegretPieces::es_regret(p.alpha); 2];
        let generic = solved(&build_generic_regret_lp(&pieces, &p).unwrap()).objective;
        assert!((manager - generic).abs() <= 1e-7, "{manager} vs {generic}");
    }
}

#[test]
fn degenerate_piece_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = instance(&mut rng, 2, 10);
    let zero = vec![
        RegretPieces::Separable(vec![AffinePiece {
            slope: 0.0,
            intercept: 0.0
        }]);
        2
    ];
    let s = solve_portfolio(&build_generic_regret_lp(&zero, &p).unwrap(), 1e-9).unwrap();
    assert_eq!(s.status, LpStatus::Unbounded);

    let steep = vec![
        RegretPieces::Separable(vec![AffinePiece {
            slope: 2.0,
            intercept: 0.0
        }]);
        2
    ];
    let s = solve_portfolio(&build_generic_regret_lp(&steep, &p).unwrap(), 1e-9).unwrap();
    assert_eq!(s.status, LpStatus::Unbounded);

    // Unit slope: the shift cancels and the optimum is the weighted mean loss.
    let unit = vec![
        RegretPieces::Separable(vec![AffinePiece {
            slope: 1.0,
            intercept: 0.0
        }]);
        2
    ];
    let s = solved(&build_generic_regret_lp(&unit, &p).unwrap());
    let mean_loss: f64 = p
        .returns
        .iter()
        .zip(p.mu.as_slice())
        .map(|(r, m)| {
            let l = portfolio_losses(&s.weights, r);
            m * l.iter().sum::<f64>() / l.len() as f64
        })
        .sum();
    assert!((s.objective - mean_loss).abs() <= 1e-9);

    assert!(build_generic_regret_lp(&[RegretPieces::Separable(vec![])], &p).is_err());
    let bad = vec![
        RegretPieces::Functional(vec![AffineFunctional {
            weights: vec![1.0],
            constant: 0.0,
        }]),
        RegretPieces::es_regret(p.alpha),
    ];
    assert!(build_generic_regret_lp(&bad, &p).is_err());
}

#[test]
fn functional_pieces_match_separable_on_one_day() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut p = instance(&mut rng, 1, 1);
    p.constraint_mode = Some(TargetMode::AtLeast);
    p.theta0 = -1.0;
    let k = p.alpha.tail_scale();
    let functional = vec![RegretPieces::Functional(vec![
        AffineFunctional {
            weights: vec![0.0],
            constant: 0.0,
        },
        AffineFunctional {
            weights: vec![k],
            constant: 0.0,
        },
    ])];
    let a = solved(&build_generic_regret_lp(&functional, &p).unwrap()).objective;
    let b = solved(&build_manager_lp(&p).unwrap()).objective;
    assert!((a - b).abs() <= 1e-9);
}

#[test]
fn manager_model_round_trips_through_mps() {
    let returns = vec![
        vec![vec![0.011, -0.004], vec![-0.023, 0.017], vec![0.005, 0.0]],
        vec![vec![0.002, 0.031], vec![-0.015, -0.008], vec![0.009, 0.004]],
    ];
    let mu = WeightVector::new(vec![0.25, 0.75]).unwrap();
    let mut p = PortfolioProblem::with_sample_means(returns, 0.0, lvl(0.95), mu).unwrap();
    p.theta0 = p.aggregate_theta()[0];
    let model = build_manager_lp(&p).unwrap();
    let text = export_lp_file(&model);
    assert_eq!(parse_lp_file(&text).unwrap(), model);
    assert_eq!(export_lp_file(&parse_lp_file(&text).unwrap()), text);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.5),
        -1e6f64..1e6,
        (-300i32..300).prop_map(|e| 10f64.powi(e)),
        (-1.0f64..1.0).prop_map(|v| v / 3.0),
    ]
}

fn bounds() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        Just((0.0, f64::INFINITY)),
        Just((f64::NEG_INFINITY, f64::INFINITY)),
        (finite(), 0.0f64..10.0).prop_map(|(l, w)| (l, l + w)),
        finite().prop_map(|u| (f64::NEG_INFINITY, u)),
        finite().prop_map(|l| (l, f64::INFINITY)),
    ]
}

proptest! {
    #[test]
    fn mps_round_trip_is_identity(
        vars in prop::collection::vec((finite(), bounds()), 0..8),
        rows in prop::collection::vec((prop::collection::vec((0usize..8, finite()), 0..6), 0..3u8, finite()), 0..6),
    ) {
        let mut m = LpModel::new("PROP");
        for (j, (c, (lo, hi))) in vars.iter().enumerate() {
            m.add_var(format!("V{j}"), *c, *lo, *hi);
        }
        let n = vars.len();
        for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
            if n == 0 { break; }
            let sense = [Sense::Le, Sense::Eq, Sense::Ge][*sense as usize];
            m.add_row(format!("R{i}"), coeffs.iter().map(|&(j, v)| (j % n, v)), sense, *rhs);
        }
        let back = parse_lp_file(&export_lp_file(&m)).unwrap();
        prop_assert_eq!(back, m);
    }
}
