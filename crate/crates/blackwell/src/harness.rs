//! Deterministic simulation runner: opponent strategies, per-step
//! auditing, trajectory recording, and multi-seed sweeps.
//!
//! A whole trajectory is a pure function of the run configuration and the
//! seed. Randomness is split into named streams of a seedable generator
//! (stream 0 samples the agent's actions, stream 1 drives stochastic
//! opponents, stream 2 is reserved for scenario validation), so adding or
//! removing draws on one side never perturbs the other.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approach::{
    audit_recursion, commit_step, descent_margin, ogd_support_plan, plan_step, primal_plan,
    LearnerState, Problem, Variant, DEGENERATE_LAMBDA_TOL, DESCENT_TOL, RESPONSE_CERT_TOL,
};
use crate::games::{dot, norm, sample_action, smoothed_payoff, MixedAction, VectorGame};
use crate::{Error, Result};

/// Certification tolerance applied during scenario validation, tighter
/// than the runtime ceiling so marginal oracles are rejected up front.
pub const VALIDATION_CERT_TOL: f64 = 1e-7;
/// Slack allowed on the pathwise bound gate `‖λ_n‖√n ≤ ρ`.
pub const BOUND_GATE_TOL: f64 = 1e-7;
/// Number of random opponent mixes probed by [`validate`].
pub const VALIDATION_PROBES: usize = 20;
/// Fixed seed of the validation probe stream, independent of run seeds.
const VALIDATION_SEED: u64 = 424_242;

/// How the opponent chooses `z_n`.
#[derive(Clone, Debug)]
pub enum OpponentStrategy {
    /// Samples iid from a fixed mix each step.
    FixedMixed(MixedAction),
    /// Cycles through a fixed sequence of pure actions.
    PeriodicPure(Vec<usize>),
    /// Sees the agent's mixed action and the steering direction, then
    /// plays the `z` minimizing the steered payoff. The pathwise bound is
    /// uniform over opponent strategies, so this is a legal stress test.
    AdversarialOmniscient,
    /// Plays the `z` minimizing the agent's scalar utility at the agent's
    /// empirical average strategy.
    BestResponseToEmpirical { u: Vec<Vec<f64>> },
}

/// The part of the current plan an omniscient opponent may inspect.
pub struct PlanView<'a> {
    /// Direction pointing from the running average toward the target.
    pub steering: &'a [f64],
    pub p_n: &'a MixedAction,
    pub game: &'a VectorGame,
}

/// Condensed history handed to the opponent: the step number and the
/// agent's average planned strategy so far (uniform before step 1).
pub struct OpponentContext<'a> {
    pub n: u64,
    pub p_bar: &'a [f64],
    pub view: PlanView<'a>,
}

/// Chooses the opponent's action. Only [`OpponentStrategy::FixedMixed`]
/// consumes randomness, and exactly one draw per step.
pub fn opponent_act(
    strategy: &OpponentStrategy,
    ctx: &OpponentContext,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    match strategy {
        OpponentStrategy::FixedMixed(q) => Ok(sample_action(q, rng)),
        OpponentStrategy::PeriodicPure(seq) => {
            Ok(seq[((ctx.n - 1) as usize) % seq.len()])
        }
        OpponentStrategy::AdversarialOmniscient => {
            let game = ctx.view.game;
            let mut best = 0;
            let mut best_v = f64::INFINITY;
            for z in 0..game.n_opp() {
                let r = smoothed_payoff(game, ctx.view.p_n, z)?;
                let v = dot(ctx.view.steering, &r);
                if v < best_v {
                    best = z;
                    best_v = v;
                }
            }
            Ok(best)
        }
        OpponentStrategy::BestResponseToEmpirical { u } => {
            let nz = u[0].len();
            let mut best = 0;
            let mut best_v = f64::INFINITY;
            for z in 0..nz {
                let v: f64 = u.iter().zip(ctx.p_bar).map(|(row, &w)| w * row[z]).sum();
                if v < best_v {
                    best = z;
                    best_v = v;
                }
            }
            Ok(best)
        }
    }
}

/// Algorithm selector for a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Algorithm {
    ResponseBased(Variant),
    PrimalBlackwell,
    OgdSupport,
}

/// Offset added to every planned target point from a given step on; used
/// by failure-injection fixtures to prove the runtime certification guard
/// fires.
#[derive(Clone, Debug)]
pub struct Inject {
    pub from_step: u64,
    pub offset: Vec<f64>,
}

/// A fully specified run: problem, algorithm, opponent, and length.
pub struct RunSpec<'a> {
    pub scenario_id: String,
    pub problem: &'a Problem,
    pub algorithm: Algorithm,
    pub opponent: OpponentStrategy,
    pub n_steps: u64,
    /// Confidence parameter of the probabilistic envelope `√(6ρ²/(δn))`.
    pub delta: f64,
    pub inject: Option<Inject>,
}

/// Everything observed at one step.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub n: u64,
    pub p_n: Vec<f64>,
    pub a_n: usize,
    pub z_n: usize,
    pub q_star: Vec<f64>,
    pub p_star: Vec<f64>,
    /// Expected payoff `r(p_n, z_n)`.
    pub r_n: Vec<f64>,
    /// Realized payoff `r(a_n, z_n)`.
    pub realized_r: Vec<f64>,
    pub r_star: Vec<f64>,
    pub lambda_norm: f64,
    /// Membership violation of the running average: Euclidean distance for
    /// set targets, the goal residual for graph targets.
    pub dist_to_s: f64,
    pub game_value: f64,
    pub recursion_audit_pass: bool,
    pub descent_pass: bool,
    /// Fraction of the variant's bound consumed at this step.
    pub bound_ratio: f64,
    pub idle: bool,
}

/// Summary of one completed run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub scenario_id: String,
    pub seed: u64,
    pub n_steps: u64,
    pub max_bound_ratio: f64,
    pub final_dist: f64,
    pub audits_all_pass: bool,
    pub descent_all_pass: bool,
    /// Pathwise gate `bound_ratio ≤ 1 + tol` where the variant's bound is
    /// deterministic; vacuously true for the realized variant and the
    /// baselines, whose bounds are checked statistically.
    pub bound_all_pass: bool,
    pub wall_time_ms: f64,
}

/// A completed run: every step record plus the summary.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<StepRecord>,
    pub report: RunReport,
}

/// An aborted run: the failing step, the records completed before it, and
/// the cause.
#[derive(Debug)]
pub struct RunFailure {
    pub step: u64,
    pub records: Vec<StepRecord>,
    pub cause: Error,
}

/// One row of a sweep table at a checkpoint step.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub n_checkpoint: u64,
    pub quantile_50: f64,
    pub quantile_95: f64,
    pub max: f64,
    /// Probabilistic envelope `√(6ρ²/(δn))` at this checkpoint.
    pub envelope: f64,
    /// Fraction of seeds whose suffix maximum of `‖λ‖` from this
    /// checkpoint on exceeds the envelope.
    pub violation_fraction: f64,
}

/// Structural checks: opponent shapes, algorithm/target compatibility, and
/// parameter ranges. No oracle probing.
pub fn validate_structure(spec: &RunSpec) -> Result<()> {
    let game = spec.problem.game();
    match &spec.opponent {
        OpponentStrategy::FixedMixed(q) => {
            if q.len() != game.n_opp() {
                return Err(Error::DimensionMismatch {
                    context: "fixed opponent mix",
                    expected: game.n_opp(),
                    got: q.len(),
                });
            }
        }
        OpponentStrategy::PeriodicPure(seq) => {
            if seq.is_empty() {
                return Err(Error::InvalidProbabilities {
                    reason: "periodic opponent sequence is empty".into(),
                });
            }
            if let Some(&bad) = seq.iter().find(|&&z| z >= game.n_opp()) {
                return Err(Error::DimensionMismatch {
                    context: "periodic opponent action",
                    expected: game.n_opp(),
                    got: bad,
                });
            }
        }
        OpponentStrategy::AdversarialOmniscient => {}
        OpponentStrategy::BestResponseToEmpirical { u } => {
            if u.len() != game.n_agent() || u.iter().any(|row| row.len() != game.n_opp()) {
                return Err(Error::InvalidGame {
                    reason: "empirical best-response utilities differ in shape from the game"
                        .into(),
                });
            }
        }
    }
    if !(spec.delta > 0.0 && spec.delta < 1.0) {
        return Err(Error::Unsupported {
            reason: format!("confidence parameter {} must lie in (0, 1)", spec.delta),
        });
    }
    if let Some(inject) = &spec.inject {
        if inject.offset.len() != game.dim() {
            return Err(Error::DimensionMismatch {
                context: "injected target offset",
                expected: game.dim(),
                got: inject.offset.len(),
            });
        }
    }
    match spec.algorithm {
        Algorithm::ResponseBased(_) => {}
        Algorithm::PrimalBlackwell => {
            if spec.problem.target().as_set().is_none() {
                return Err(Error::Unsupported {
                    reason: "the primal baseline needs a geometric target set".into(),
                });
            }
        }
        Algorithm::OgdSupport => {
            let set = spec.problem.target().as_set().ok_or(Error::Unsupported {
                reason: "the support-gradient baseline needs a geometric target set".into(),
            })?;
            if set.diameter_bound()?.is_none() {
                return Err(Error::Unsupported {
                    reason: "the support-gradient baseline needs a compact target set".into(),
                });
            }
        }
    }
    Ok(())
}

/// Full scenario validation: structural checks plus an oracle
/// certification probe on [`VALIDATION_PROBES`] random opponent mixes
/// drawn from a fixed stream, at the tightened tolerance
/// [`VALIDATION_CERT_TOL`]. Baselines skip the probe; they never call the
/// oracle.
pub fn validate(spec: &RunSpec) -> Result<()> {
    validate_structure(spec)?;
    if !matches!(spec.algorithm, Algorithm::ResponseBased(_)) {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    rng.set_stream(2);
    let nz = spec.problem.game().n_opp();
    for _ in 0..VALIDATION_PROBES {
        let q = MixedAction::new(random_simplex(nz, &mut rng))?;
        let (_, _, residual) = spec.problem.respond_certified(&q)?;
        if residual > VALIDATION_CERT_TOL {
            return Err(Error::ResponseCertification {
                residual,
                tol: VALIDATION_CERT_TOL,
            });
        }
    }
    Ok(())
}

/// A point of the simplex via normalized exponential spacings; consumes
/// exactly `n` draws.
fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            // gen() is in [0, 1); flip to (0, 1] so the logarithm is finite.
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = x.iter().sum();
    for v in &mut x {
        *v /= total;
    }
    x
}

/// Executes one run. The trajectory is a pure function of `(spec, seed)`.
/// A response or solver failure aborts the run and reports the offending
/// step together with the records already completed.
pub fn run(spec: &RunSpec, seed: u64) -> std::result::Result<RunOutcome, Box<RunFailure>> {
    let started = Instant::now();
    let mut records: Vec<StepRecord> = Vec::with_capacity(spec.n_steps as usize);

    let fail = |step: u64, records: Vec<StepRecord>, cause: Error| {
        Err(Box::new(RunFailure {
            step,
            records,
            cause,
        }))
    };
    if let Err(cause) = validate_structure(spec) {
        return fail(0, records, cause);
    }

    let problem = spec.problem;
    let game = problem.game();
    let mut agent_rng = ChaCha8Rng::seed_from_u64(seed);
    agent_rng.set_stream(0);
    let mut opp_rng = ChaCha8Rng::seed_from_u64(seed);
    opp_rng.set_stream(1);

    // Average planned strategy, visible to the empirical opponent.
    let mut p_bar = vec![1.0 / game.n_agent() as f64; game.n_agent()];

    let outcome = match spec.algorithm {
        Algorithm::ResponseBased(variant) => run_response_based(
            spec,
            variant,
            &mut records,
            &mut agent_rng,
            &mut opp_rng,
            &mut p_bar,
        ),
        Algorithm::PrimalBlackwell | Algorithm::OgdSupport => run_baseline(
            spec,
            &mut records,
            &mut agent_rng,
            &mut opp_rng,
            &mut p_bar,
        ),
    };
    let final_dist = match outcome {
        Ok(final_dist) => final_dist,
        Err((step, cause)) => return fail(step, records, cause),
    };

    let max_bound_ratio = records
        .iter()
        .map(|r| r.bound_ratio)
        .fold(0.0_f64, f64::max);
    let audits_all_pass = records.iter().all(|r| r.recursion_audit_pass);
    let descent_all_pass = records.iter().all(|r| r.descent_pass);
    let bound_all_pass = match spec.algorithm {
        Algorithm::ResponseBased(Variant::Realized)
        | Algorithm::PrimalBlackwell
        | Algorithm::OgdSupport => true,
        Algorithm::ResponseBased(_) => records
            .iter()
            .all(|r| r.bound_ratio <= 1.0 + BOUND_GATE_TOL),
    };
    let report = RunReport {
        scenario_id: spec.scenario_id.clone(),
        seed,
        n_steps: spec.n_steps,
        max_bound_ratio,
        final_dist,
        audits_all_pass,
        descent_all_pass,
        bound_all_pass,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(RunOutcome { records, report })
}

type StepResult<T> = std::result::Result<T, (u64, Error)>;

fn run_response_based(
    spec: &RunSpec,
    variant: Variant,
    records: &mut Vec<StepRecord>,
    agent_rng: &mut ChaCha8Rng,
    opp_rng: &mut ChaCha8Rng,
    p_bar: &mut [f64],
) -> StepResult<f64> {
    let problem = spec.problem;
    let game = problem.game();
    let rho = problem.rho();
    let mut state = LearnerState::new(variant, game.dim());
    let mut final_dist = 0.0;

    for n in 1..=spec.n_steps {
        let at = |e: Error| (n, e);
        let mut planned = plan_step(&state, problem).map_err(at)?;
        if let Some(inject) = &spec.inject {
            if n >= inject.from_step {
                for (r, o) in planned.r_star.iter_mut().zip(&inject.offset) {
                    *r += o;
                }
                // The planner certified the original point; the corrupted
                // one must pass the same runtime check.
                let residual = problem.target().violation(&planned.r_star).map_err(at)?;
                if residual > RESPONSE_CERT_TOL {
                    return Err((
                        n,
                        Error::ResponseCertification {
                            residual,
                            tol: RESPONSE_CERT_TOL,
                        },
                    ));
                }
            }
        }

        let z_n = opponent_act(
            &spec.opponent,
            &OpponentContext {
                n,
                p_bar,
                view: PlanView {
                    steering: state.lambda(),
                    p_n: &planned.p_n,
                    game,
                },
            },
            opp_rng,
        )
        .map_err(at)?;
        let a_n = sample_action(&planned.p_n, agent_rng);

        let active = !planned.idle && norm(state.lambda()) > DEGENERATE_LAMBDA_TOL;
        let descent_pass = if active {
            descent_margin(game, state.lambda(), &planned.p_n, &planned.r_star).map_err(at)?
                >= -DESCENT_TOL
        } else {
            true
        };

        let next = commit_step(&state, problem, &planned, a_n, z_n).map_err(at)?;
        let r_n = smoothed_payoff(game, &planned.p_n, z_n).map_err(at)?;
        let realized_r = game.payoff(a_n, z_n).to_vec();
        let steered_payoff = if variant == Variant::Realized {
            &realized_r
        } else {
            &r_n
        };
        let recursion_audit_pass = audit_recursion(
            state.lambda(),
            next.lambda(),
            n,
            &planned.r_star,
            steered_payoff,
            rho,
        );

        let average = if variant == Variant::Realized {
            next.realized_bar()
        } else {
            next.r_bar()
        };
        let dist_to_s = problem.target().violation(average).map_err(at)?;
        let lambda_norm = next.lambda_norm();
        let bound_ratio = bound_ratio_response(variant, lambda_norm, n, rho, spec.delta);

        for (avg, &p) in p_bar.iter_mut().zip(planned.p_n.probs()) {
            *avg = ((n - 1) as f64 * *avg + p) / n as f64;
        }
        records.push(StepRecord {
            n,
            p_n: planned.p_n.probs().to_vec(),
            a_n,
            z_n,
            q_star: planned.q_star.probs().to_vec(),
            p_star: planned.p_star.probs().to_vec(),
            r_n,
            realized_r,
            r_star: planned.r_star.clone(),
            lambda_norm,
            dist_to_s,
            game_value: planned.game_value,
            recursion_audit_pass,
            descent_pass,
            bound_ratio,
            idle: planned.idle,
        });
        final_dist = dist_to_s;
        state = next;
    }
    Ok(final_dist)
}

fn bound_ratio_response(variant: Variant, lambda_norm: f64, n: u64, rho: f64, delta: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    match variant {
        Variant::Realized => {
            lambda_norm * (delta * n as f64).sqrt() / (6.0_f64.sqrt() * rho)
        }
        _ => lambda_norm * (n as f64).sqrt() / rho,
    }
}

fn run_baseline(
    spec: &RunSpec,
    records: &mut Vec<StepRecord>,
    agent_rng: &mut ChaCha8Rng,
    opp_rng: &mut ChaCha8Rng,
    p_bar: &mut [f64],
) -> StepResult<f64> {
    let problem = spec.problem;
    let game = problem.game();
    let rho = problem.rho();
    // validate_structure guarantees a geometric set target.
    let set = problem.target().as_set().expect("validated set target");
    let dim = game.dim();

    let mut r_bar = vec![0.0; dim];
    let mut realized_bar = vec![0.0; dim];
    let mut theta_prev = vec![0.0; dim];
    let mut r_prev = vec![0.0; dim];
    let mut final_dist = 0.0;

    for n in 1..=spec.n_steps {
        let at = |e: Error| (n, e);
        let (p_n, toward, game_value) = match spec.algorithm {
            Algorithm::PrimalBlackwell => primal_plan(&r_bar, set, game).map_err(at)?,
            Algorithm::OgdSupport => {
                let (theta, p, value) =
                    ogd_support_plan(&theta_prev, &r_prev, set, game, n).map_err(at)?;
                theta_prev = theta.clone();
                // The ascent direction points away from the set; steering
                // semantics point toward it.
                (p, theta.iter().map(|t| -t).collect(), value)
            }
            Algorithm::ResponseBased(_) => unreachable!("dispatched in run()"),
        };

        let z_n = opponent_act(
            &spec.opponent,
            &OpponentContext {
                n,
                p_bar,
                view: PlanView {
                    steering: &toward,
                    p_n: &p_n,
                    game,
                },
            },
            opp_rng,
        )
        .map_err(at)?;
        let a_n = sample_action(&p_n, agent_rng);

        let r_n = smoothed_payoff(game, &p_n, z_n).map_err(at)?;
        let realized_r = game.payoff(a_n, z_n).to_vec();
        let w_old = (n - 1) as f64 / n as f64;
        let w_new = 1.0 / n as f64;
        for ((avg, ravg), (smooth, real)) in r_bar
            .iter_mut()
            .zip(realized_bar.iter_mut())
            .zip(r_n.iter().zip(&realized_r))
        {
            *avg = w_old * *avg + w_new * smooth;
            *ravg = w_old * *ravg + w_new * real;
        }
        if spec.algorithm == Algorithm::OgdSupport {
            r_prev = r_n.clone();
        }

        let dist_to_s = set.distance(&r_bar).map_err(at)?;
        let bound_ratio = if rho <= 0.0 {
            0.0
        } else {
            dist_to_s * (n as f64).sqrt() / (5.0 * rho)
        };
        for (avg, &p) in p_bar.iter_mut().zip(p_n.probs()) {
            *avg = ((n - 1) as f64 * *avg + p) / n as f64;
        }
        records.push(StepRecord {
            n,
            p_n: p_n.probs().to_vec(),
            a_n,
            z_n,
            q_star: vec![],
            p_star: vec![],
            r_n,
            realized_r,
            r_star: vec![],
            lambda_norm: norm(&toward),
            dist_to_s,
            game_value,
            recursion_audit_pass: true,
            descent_pass: true,
            bound_ratio,
            idle: false,
        });
        final_dist = dist_to_s;
    }
    Ok(final_dist)
}

/// A completed sweep: the per-checkpoint table plus one report per seed,
/// in seed order.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<RunReport>,
}

/// Runs every seed in order and aggregates `‖λ‖` statistics at each
/// checkpoint: nearest-rank quantiles and the maximum across seeds, the
/// probabilistic envelope `√(6ρ²/(δn))`, and the fraction of seeds whose
/// suffix maximum from the checkpoint on exceeds it.
pub fn sweep(
    spec: &RunSpec,
    seeds: &[u64],
    checkpoints: &[u64],
) -> std::result::Result<SweepOutcome, Box<RunFailure>> {
    let bad_input = |reason: String| {
        Box::new(RunFailure {
            step: 0,
            records: Vec::new(),
            cause: Error::Unsupported { reason },
        })
    };
    if seeds.is_empty() {
        return Err(bad_input("sweep needs at least one seed".into()));
    }
    if checkpoints.is_empty() {
        return Err(bad_input("sweep needs at least one checkpoint".into()));
    }
    if let Some(&bad) = checkpoints.iter().find(|&&c| c == 0 || c > spec.n_steps) {
        return Err(bad_input(format!(
            "checkpoint {bad} outside 1..={}",
            spec.n_steps
        )));
    }

    let mut trajectories: Vec<Vec<f64>> = Vec::with_capacity(seeds.len());
    let mut reports: Vec<RunReport> = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let outcome = run(spec, seed)?;
        trajectories.push(outcome.records.iter().map(|r| r.lambda_norm).collect());
        reports.push(outcome.report);
    }

    let rho = spec.problem.rho();
    let mut rows = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        let idx = (c - 1) as usize;
        let mut values: Vec<f64> = trajectories.iter().map(|t| t[idx]).collect();
        let envelope = (6.0 * rho * rho / (spec.delta * c as f64)).sqrt();
        let violations = trajectories
            .iter()
            .filter(|t| t[idx..].iter().any(|&v| v > envelope))
            .count();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let max = *values.last().unwrap();
        rows.push(SweepRow {
            n_checkpoint: c,
            quantile_50: nearest_rank(&values, 0.50),
            quantile_95: nearest_rank(&values, 0.95),
            max,
            envelope,
            violation_fraction: violations as f64 / seeds.len() as f64,
        });
    }
    Ok(SweepOutcome { rows, reports })
}

/// Nearest-rank quantile of an ascending slice.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.max(1) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approach::{ResponseOracle, Target};
    use crate::regret::build_external_game;
    use crate::sets::TargetSet;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn matching_pennies() -> Vec<Vec<f64>> {
        vec![vec![1.0, -1.0], vec![-1.0, 1.0]]
    }

    /// 2-action game whose second action pins the payoff to the origin.
    fn anchor_problem() -> Problem {
        let game = crate::games::VectorGame::new(vec![
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        ])
        .unwrap();
        let target = Target::Set(TargetSet::singleton(vec![0.0, 0.0]).unwrap());
        let oracle = ResponseOracle::new(|_q| Ok(MixedAction::pure(0, 2)));
        Problem::new(game, target, oracle).unwrap()
    }

    fn spec<'a>(problem: &'a Problem, algorithm: Algorithm, n_steps: u64) -> RunSpec<'a> {
        RunSpec {
            scenario_id: "test".into(),
            problem,
            algorithm,
            opponent: OpponentStrategy::AdversarialOmniscient,
            n_steps,
            delta: 0.1,
            inject: None,
        }
    }

    #[test]
    fn fixed_point_mass_opponent_is_constant() {
        let problem = anchor_problem();
        let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 5);
        s.opponent = OpponentStrategy::FixedMixed(MixedAction::pure(1, 2));
        let out = run(&s, 3).unwrap();
        assert!(out.records.iter().all(|r| r.z_n == 1));
    }

    #[test]
    fn periodic_opponent_cycles_from_step_one() {
        let problem = anchor_problem();
        let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 5);
        s.opponent = OpponentStrategy::PeriodicPure(vec![0, 1]);
        let out = run(&s, 0).unwrap();
        let zs: Vec<usize> = out.records.iter().map(|r| r.z_n).collect();
        // Step 3 revisits the first element of the cycle.
        assert_eq!(zs, vec![0, 1, 0, 1, 0]);
    }

    #[test]
    fn adversary_with_zero_steering_takes_lowest_index() {
        let problem = anchor_problem();
        let game = problem.game();
        let view = PlanView {
            steering: &[0.0, 0.0],
            p_n: &MixedAction::uniform(2),
            game,
        };
        let ctx = OpponentContext {
            n: 1,
            p_bar: &[0.5, 0.5],
            view,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        rng.set_stream(1);
        let z = opponent_act(&OpponentStrategy::AdversarialOmniscient, &ctx, &mut rng).unwrap();
        assert_eq!(z, 0);
    }

    #[test]
    fn empirical_opponent_minimizes_against_the_average() {
        let u = vec![vec![3.0, 0.0], vec![1.0, 2.0]];
        let problem = anchor_problem();
        let view = PlanView {
            steering: &[0.0, 0.0],
            p_n: &MixedAction::uniform(2),
            game: problem.game(),
        };
        // At p̄ = (1, 0) the utilities per z are (3, 0): z=1 is worse.
        let ctx = OpponentContext {
            n: 2,
            p_bar: &[1.0, 0.0],
            view,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = opponent_act(
            &OpponentStrategy::BestResponseToEmpirical { u },
            &ctx,
            &mut rng,
        )
        .unwrap();
        assert_eq!(z, 1);
    }

    #[test]
    fn zero_steps_gives_empty_trajectory_and_zero_ratio() {
        let problem = anchor_problem();
        let s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 0);
        let out = run(&s, 9).unwrap();
        assert!(out.records.is_empty());
        assert_close(out.report.max_bound_ratio, 0.0, 0.0);
        assert!(out.report.audits_all_pass);
    }

    #[test]
    fn identical_seeds_reproduce_the_trajectory() {
        let problem = build_external_game(&matching_pennies()).unwrap();
        let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 50);
        s.opponent = OpponentStrategy::FixedMixed(MixedAction::new(vec![0.3, 0.7]).unwrap());
        let a = run(&s, 11).unwrap();
        let b = run(&s, 11).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.a_n, rb.a_n);
            assert_eq!(ra.z_n, rb.z_n);
            assert_eq!(ra.lambda_norm.to_bits(), rb.lambda_norm.to_bits());
            assert_eq!(ra.dist_to_s.to_bits(), rb.dist_to_s.to_bits());
        }
    }

    #[test]
    fn different_streams_keep_agent_and_opponent_independent() {
        // An opponent that consumes randomness must not perturb agent
        // sampling: the a_n sequence only depends on stream 0.
        let problem = build_external_game(&matching_pennies()).unwrap();
        let mut s1 = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 30);
        s1.opponent = OpponentStrategy::FixedMixed(MixedAction::new(vec![0.5, 0.5]).unwrap());
        let mut s2 = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 30);
        s2.opponent = OpponentStrategy::PeriodicPure(vec![0, 1]);
        let run1 = run(&s1, 5).unwrap();
        let run2 = run(&s2, 5).unwrap();
        // The plans differ (steering reacts to z), so compare only the
        // first step, planned identically from λ = 0.
        assert_eq!(run1.records[0].a_n, run2.records[0].a_n);
    }

    #[test]
    fn smoothed_run_passes_gates_and_bound() {
        let problem = build_external_game(&matching_pennies()).unwrap();
        let s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 300);
        let out = run(&s, 7).unwrap();
        assert!(out.report.audits_all_pass);
        assert!(out.report.descent_all_pass);
        assert!(out.report.bound_all_pass, "max {}", out.report.max_bound_ratio);
        assert!(out.report.max_bound_ratio <= 1.0 + BOUND_GATE_TOL);
    }

    #[test]
    fn realized_run_audits_the_realized_recursion() {
        let problem = build_external_game(&matching_pennies()).unwrap();
        let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Realized), 300);
        s.opponent = OpponentStrategy::FixedMixed(MixedAction::new(vec![0.5, 0.5]).unwrap());
        let out = run(&s, 21).unwrap();
        assert!(out.report.audits_all_pass);
        assert!(out.report.bound_all_pass);
    }

    #[test]
    fn idling_run_idles_once_inside() {
        let game = crate::games::VectorGame::from_scalar(&[vec![0.5, 0.5], vec![0.0, 1.0]])
            .unwrap();
        // Every payoff lies in [0, 1], so the average is inside immediately.
        let target = Target::Set(TargetSet::box_bounds(vec![0.0], vec![1.0]).unwrap());
        let oracle = ResponseOracle::new(|_q| Ok(MixedAction::pure(0, 2)));
        let problem = Problem::new(game, target, oracle).unwrap();
        let s = spec(&problem, Algorithm::ResponseBased(Variant::Idling), 10);
        let out = run(&s, 1).unwrap();
        assert!(out.records.iter().skip(1).all(|r| r.idle));
        assert!(out.report.audits_all_pass);
        assert_close(out.records.last().unwrap().lambda_norm, 0.0, 1e-15);
    }

    #[test]
    fn injection_trips_the_runtime_certification() {
        let problem = anchor_problem();
        let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 20);
        s.inject = Some(Inject {
            from_step: 4,
            offset: vec![0.5, 0.0],
        });
        let failure = run(&s, 2).unwrap_err();
        assert_eq!(failure.step, 4);
        assert_eq!(failure.records.len(), 3);
        assert!(matches!(
            failure.cause,
            Error::ResponseCertification { .. }
        ));
    }

    #[test]
    fn validation_rejects_out_of_range_periodic_actions() {
        let problem = anchor_problem();
        let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 5);
        s.opponent = OpponentStrategy::PeriodicPure(vec![0, 2]);
        assert!(validate(&s).is_err());
    }

    #[test]
    fn validation_rejects_unbounded_targets_for_the_gradient_baseline() {
        let game = crate::games::VectorGame::from_scalar(&[vec![1.0], vec![0.0]]).unwrap();
        let target = Target::Set(TargetSet::nonpositive_orthant(1).unwrap());
        let oracle = ResponseOracle::new(|_q| Ok(MixedAction::pure(1, 2)));
        let problem = Problem::new(game, target, oracle).unwrap();
        let s = spec(&problem, Algorithm::OgdSupport, 5);
        assert!(matches!(validate(&s), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn validation_probes_the_oracle() {
        let game = crate::games::VectorGame::from_scalar(&[vec![3.0, 0.0], vec![1.0, 2.0]])
            .unwrap();
        let target = Target::Set(TargetSet::singleton(vec![-5.0]).unwrap());
        let oracle = ResponseOracle::new(|_q| Ok(MixedAction::pure(0, 2)));
        let problem = Problem::new(game, target, oracle).unwrap();
        let s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 5);
        assert!(matches!(
            validate(&s),
            Err(Error::ResponseCertification { .. })
        ));
    }

    #[test]
    fn single_seed_sweep_echoes_the_run() {
        let problem = build_external_game(&matching_pennies()).unwrap();
        let mut s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 40);
        s.opponent = OpponentStrategy::FixedMixed(MixedAction::new(vec![0.4, 0.6]).unwrap());
        let out = run(&s, 17).unwrap();
        let swept = sweep(&s, &[17], &[10, 40]).unwrap();
        assert_eq!(swept.rows.len(), 2);
        assert_eq!(swept.reports.len(), 1);
        for row in &swept.rows {
            let rec = &out.records[(row.n_checkpoint - 1) as usize];
            assert_close(row.quantile_50, rec.lambda_norm, 0.0);
            assert_close(row.quantile_95, rec.lambda_norm, 0.0);
            assert_close(row.max, rec.lambda_norm, 0.0);
        }
    }

    #[test]
    fn sweep_rejects_bad_checkpoints() {
        let problem = build_external_game(&matching_pennies()).unwrap();
        let s = spec(&problem, Algorithm::ResponseBased(Variant::Smoothed), 40);
        assert!(sweep(&s, &[1], &[50]).is_err());
        assert!(sweep(&s, &[], &[10]).is_err());
        assert!(sweep(&s, &[1], &[]).is_err());
    }

    #[test]
    fn baselines_produce_records_with_trivial_audits() {
        let problem = anchor_problem();
        let s = spec(&problem, Algorithm::PrimalBlackwell, 50);
        let out = run(&s, 4).unwrap();
        assert_eq!(out.records.len(), 50);
        assert!(out.records.iter().all(|r| r.recursion_audit_pass));
        assert!(out.report.bound_all_pass);
        // The anchor response keeps the average near the origin.
        assert!(out.report.final_dist < 0.5);
    }

    #[test]
    fn nearest_rank_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_close(nearest_rank(&v, 0.50), 2.0, 0.0);
        assert_close(nearest_rank(&v, 0.95), 4.0, 0.0);
        assert_close(nearest_rank(&[5.0], 0.95), 5.0, 0.0);
    }
}
