//! Trajectory-level guarantees: pathwise `ρ/√n` bounds, audit and descent
//! gates, the probabilistic envelope of the sampled variant, and baseline
//! convergence rates.

use blackwell::approach::{Problem, ResponseOracle, Target, Variant};
use blackwell::games::{MixedAction, VectorGame};
use blackwell::harness::{run, sweep, Algorithm, OpponentStrategy, RunSpec};
use blackwell::regret::{
    build_blackwell_embedding, build_constrained, build_external_game, build_global_cost,
    build_ratio, CostFunctional, CostedGame,
};
use blackwell::sets::TargetSet;

const STEP_TOL: f64 = 1e-7;

fn pennies() -> Vec<Vec<f64>> {
    vec![vec![1.0, -1.0], vec![-1.0, 1.0]]
}

fn spec<'a>(problem: &'a Problem, algorithm: Algorithm, n_steps: u64) -> RunSpec<'a> {
    RunSpec {
        scenario_id: "bounds".into(),
        problem,
        algorithm,
        opponent: OpponentStrategy::AdversarialOmniscient,
        n_steps,
        delta: 0.1,
        inject: None,
    }
}

fn opponents() -> Vec<OpponentStrategy> {
    vec![
        OpponentStrategy::FixedMixed(MixedAction::new(vec![0.3, 0.7]).unwrap()),
        OpponentStrategy::PeriodicPure(vec![0, 1, 1]),
        OpponentStrategy::AdversarialOmniscient,
    ]
}

/// Ball-target planar game: mixing the first two actions cancels to the
/// origin against every column, so the ball around it is response-attainable.
fn ball_problem() -> Problem {
    let game = VectorGame::new(vec![
        vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        vec![vec![-1.0, 0.0], vec![-1.0, 0.0]],
        vec![vec![0.0, 1.0], vec![0.0, -1.0]],
    ])
    .unwrap();
    let target = Target::Set(TargetSet::ball(vec![0.0, 0.0], 0.1).unwrap());
    let oracle =
        ResponseOracle::new(|_q| MixedAction::new(vec![0.5, 0.5, 0.0]));
    Problem::new(game, target, oracle).unwrap()
}

/// Singleton-target planar game: the first action pins the payoff at the
/// origin regardless of the opponent.
fn singleton_problem() -> Problem {
    let game = VectorGame::new(vec![
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    ])
    .unwrap();
    let target = Target::Set(TargetSet::singleton(vec![0.0, 0.0]).unwrap());
    let oracle = ResponseOracle::new(|_q| Ok(MixedAction::pure(0, 2)));
    Problem::new(game, target, oracle).unwrap()
}

#[test]
fn smoothed_bound_holds_pathwise_for_every_opponent() {
    let problem = build_external_game(&pennies()).unwrap();
    let rho = problem.rho();
    for opponent in opponents() {
        for seed in [1, 2] {
            let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 3000);
            s.opponent = opponent.clone();
            let out = run(&s, seed).unwrap();
            assert!(out.report.audits_all_pass);
            assert!(out.report.descent_all_pass);
            for r in &out.records {
                let cap = rho / (r.n as f64).sqrt() + STEP_TOL;
                assert!(r.lambda_norm <= cap, "step {}: {} > {cap}", r.n, r.lambda_norm);
                assert!(
                    r.dist_to_s <= r.lambda_norm + STEP_TOL,
                    "step {}: dist {} exceeds lambda {}",
                    r.n,
                    r.dist_to_s,
                    r.lambda_norm
                );
            }
        }
    }
}

#[test]
fn idling_variant_keeps_the_distance_bound() {
    let problem = build_external_game(&pennies()).unwrap();
    let rho = problem.rho();
    for opponent in opponents() {
        let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Idling), 3000);
        s.opponent = opponent;
        let out = run(&s, 5).unwrap();
        assert!(out.report.audits_all_pass);
        for r in &out.records {
            let cap = rho / (r.n as f64).sqrt() + STEP_TOL;
            assert!(r.dist_to_s <= cap, "step {}: {} > {cap}", r.n, r.dist_to_s);
        }
    }
}

#[test]
fn unbounded_variant_certifies_with_clamped_steering() {
    let problem = build_external_game(&pennies()).unwrap();
    let rho = problem.rho();
    let s = spec(&problem, Algorithm::ResponseBased(Variant::Unbounded), 3000);
    let out = run(&s, 3).unwrap();
    assert!(out.report.audits_all_pass);
    assert!(out.report.bound_all_pass);
    for r in &out.records {
        let cap = rho / (r.n as f64).sqrt() + STEP_TOL;
        assert!(r.lambda_norm <= cap);
        assert!(r.dist_to_s <= r.lambda_norm + STEP_TOL);
    }
}

#[test]
fn stacked_constructions_hold_their_bounds() {
    let u3 = vec![
        vec![3.0, 0.0, 1.0],
        vec![1.0, 2.0, 0.0],
        vec![0.0, 1.0, 2.5],
    ];
    let u2 = vec![vec![1.0, -1.0], vec![-0.5, 2.0]];
    let loads = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
    let problems = vec![
        build_blackwell_embedding(&u3).unwrap(),
        build_global_cost(CostFunctional::AbsoluteValue, &u2).unwrap(),
        build_global_cost(CostFunctional::DNorm { d: 2.0 }, &loads).unwrap(),
        build_global_cost(CostFunctional::InfNorm, &loads).unwrap(),
        build_ratio(
            &[vec![3.0, 1.0], vec![2.0, 1.0]],
            &[vec![2.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap(),
        build_constrained(
            CostedGame::scalar(
                vec![vec![1.0, 0.2], vec![0.0, 0.6]],
                vec![vec![1.0, 0.4], vec![0.0, 0.3]],
            )
            .unwrap(),
            TargetSet::box_bounds(vec![f64::NEG_INFINITY], vec![0.5]).unwrap(),
        )
        .unwrap(),
    ];
    for problem in &problems {
        let s = spec(problem, Algorithm::ResponseBased(Variant::Smoothed), 1000);
        let out = run(&s, 11).unwrap();
        assert!(out.report.audits_all_pass);
        assert!(out.report.descent_all_pass);
        assert!(
            out.report.bound_all_pass,
            "max ratio {}",
            out.report.max_bound_ratio
        );
    }
}

#[test]
fn realized_variant_respects_the_envelope_statistically() {
    let problem = build_external_game(&pennies()).unwrap();
    let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Realized), 1000);
    s.opponent = OpponentStrategy::FixedMixed(MixedAction::new(vec![0.5, 0.5]).unwrap());
    let seeds: Vec<u64> = (0..60).collect();
    let swept = sweep(&s, &seeds, &[10, 100, 1000]).unwrap();
    for row in &swept.rows {
        assert!(
            row.violation_fraction <= s.delta,
            "checkpoint {}: fraction {} over envelope {}",
            row.n_checkpoint,
            row.violation_fraction,
            row.envelope
        );
    }
    // Spot audits on a couple of the swept seeds.
    for seed in [0, 17] {
        let out = run(&s, seed).unwrap();
        assert!(out.report.audits_all_pass);
    }
}

#[test]
fn smoothed_and_realized_averages_coalesce() {
    let problem = build_external_game(&pennies()).unwrap();
    let rho = problem.rho();
    let n: u64 = 10_000;
    let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), n);
    s.opponent = OpponentStrategy::FixedMixed(MixedAction::new(vec![0.5, 0.5]).unwrap());
    let mut within = 0usize;
    let total = 200usize;
    let cap = 10.0 * rho / (n as f64).sqrt();
    for seed in 0..total as u64 {
        let out = run(&s, seed).unwrap();
        let dim = problem.game().dim();
        let mut gap = vec![0.0f64; dim];
        for r in &out.records {
            #[allow(clippy::needless_range_loop)]
            for j in 0..dim {
                gap[j] += (r.realized_r[j] - r.r_n[j]) / n as f64;
            }
        }
        let gap_norm = gap.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gap_norm <= cap {
            within += 1;
        }
    }
    assert!(
        within as f64 >= 0.95 * total as f64,
        "only {within}/{total} seeds inside the sampling gap"
    );
}

#[test]
fn primal_baseline_converges_at_root_n_rate() {
    for problem in [singleton_problem(), ball_problem()] {
        let rho = problem.rho();
        for opponent in [
            OpponentStrategy::FixedMixed(MixedAction::new(vec![0.4, 0.6]).unwrap()),
            OpponentStrategy::AdversarialOmniscient,
        ] {
            let mut s = spec(&problem, Algorithm::PrimalBlackwell, 1000);
            s.opponent = opponent;
            let out = run(&s, 2).unwrap();
            let cap = 5.0 * rho / 1000f64.sqrt();
            assert!(
                out.report.final_dist <= cap,
                "final dist {} over {cap}",
                out.report.final_dist
            );
        }
    }
}

#[test]
fn gradient_baseline_converges_at_root_n_rate() {
    for problem in [singleton_problem(), ball_problem()] {
        let rho = problem.rho();
        for opponent in [
            OpponentStrategy::FixedMixed(MixedAction::new(vec![0.4, 0.6]).unwrap()),
            OpponentStrategy::AdversarialOmniscient,
        ] {
            let mut s = spec(&problem, Algorithm::OgdSupport, 1000);
            s.opponent = opponent;
            let out = run(&s, 2).unwrap();
            let cap = 5.0 * rho / 1000f64.sqrt();
            assert!(
                out.report.final_dist <= cap,
                "final dist {} over {cap}",
                out.report.final_dist
            );
        }
    }
}
