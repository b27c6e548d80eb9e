//! Response-based approachability: steering state, step planning, and the
//! per-step certification that backs every reported bound.
//!
//! The learner tracks the average planned target point `r̄*_n` and the
//! average payoff `r̄_n`, and steers along their difference
//! `λ_n = r̄*_n − r̄_n`. Each step solves the zero-sum game projected onto
//! `λ_{n−1}`: the agent plays its maximin strategy, and the target point
//! `r*_n = r(p*_n, q*_n)` is produced by the response oracle evaluated at
//! the minimizing opponent strategy `q*_n`. Because `r*_n` lies in the
//! target set and satisfies `λ_{n−1}·(r(p_n, z) − r*_n) ≥ 0` for every `z`,
//! the squared steering norm obeys
//!
//! ```text
//! n²‖λ_n‖² ≤ (n−1)²‖λ_{n−1}‖² + 2(n−1) λ_{n−1}·(r*_n − r_n) + ρ²
//! ```
//!
//! which telescopes to `d(r̄_n, S) ≤ ‖λ_n‖ ≤ ρ/√n`. [`audit_recursion`]
//! re-checks that inequality on every committed step.
//!
//! Four steering variants share the same planner:
//! * [`Variant::Smoothed`] steers on expected payoffs `r(p_n, z_n)`.
//! * [`Variant::Idling`] resets the steering direction whenever the running
//!   average is already inside the target, and plays uniformly there.
//! * [`Variant::Unbounded`] removes the components of `λ` lying in the
//!   negated recession cone of the target, which is what makes unbounded
//!   targets approachable at the same rate.
//! * [`Variant::Realized`] steers on realized payoffs `r(a_n, z_n)`; its
//!   guarantee is probabilistic rather than pathwise.
//!
//! Two baselines close the module: a primal projection-direction algorithm
//! and a support-function gradient scheme, both for compact target sets.

use crate::games::{
    dot, expected_reward, norm, project_game, smoothed_payoff, solve_zero_sum, MixedAction,
    VectorGame,
};
use crate::sets::{clamp_recession, Recession, TargetSet, MEMBERSHIP_TOL};
use crate::{Error, Result};

/// Steering directions at or below this norm are treated as zero and
/// produce a uniform plan.
pub const DEGENERATE_LAMBDA_TOL: f64 = 1e-12;
/// Hard runtime ceiling on the response-point membership residual.
pub const RESPONSE_CERT_TOL: f64 = 1e-6;
/// Slack added to the right side of the steering recursion audit.
pub const AUDIT_SLACK: f64 = 1e-9;
/// Tolerance for the per-step descent inequality check.
pub const DESCENT_TOL: f64 = 1e-8;

/// A target for the average payoff vector.
pub enum Target {
    /// A fixed closed convex set in payoff space.
    Set(TargetSet),
    /// A response-dependent target expressed on stacked payoffs
    /// `(v, 1(z))`: the point is acceptable when the residual against the
    /// opponent's empirical mix vanishes.
    Graph(GraphTarget),
}

/// Target for stacked payoff vectors `(v, 1(z)) ∈ R^{v_dim + n_opp}`.
///
/// `residual(v, q)` must return 0 exactly when `v` is acceptable against
/// the opponent frequency vector `q`, and grow continuously with the
/// violation. The trailing `n_opp` coordinates of a stacked point are the
/// opponent's empirical frequencies; they are renormalized before the
/// residual is evaluated when they sit within 1e-6 of the simplex.
pub struct GraphTarget {
    v_dim: usize,
    n_opp: usize,
    residual: ResidualFn,
    recession: Vec<Recession>,
}

/// Residual callback `(v, q) → violation`; zero exactly on acceptable pairs.
pub type ResidualFn = Box<dyn Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync>;

impl GraphTarget {
    /// `v_recession` describes the payoff block only; the frequency block
    /// is always bounded.
    pub fn new(
        v_dim: usize,
        n_opp: usize,
        v_recession: Vec<Recession>,
        residual: impl Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if v_dim == 0 || n_opp == 0 {
            return Err(Error::InvalidSet {
                reason: "graph target needs positive payoff and frequency dimensions".into(),
            });
        }
        if v_recession.len() != v_dim {
            return Err(Error::DimensionMismatch {
                context: "graph target recession",
                expected: v_dim,
                got: v_recession.len(),
            });
        }
        let mut recession = v_recession;
        recession.extend(std::iter::repeat_n(Recession::None, n_opp));
        Ok(Self {
            v_dim,
            n_opp,
            residual: Box::new(residual),
            recession,
        })
    }

    #[must_use]
    pub fn v_dim(&self) -> usize {
        self.v_dim
    }

    #[must_use]
    pub fn n_opp(&self) -> usize {
        self.n_opp
    }

    /// Residual of a stacked point `(v, w)`; the frequency block `w` is
    /// renormalized when it is within 1e-6 of the simplex.
    pub fn violation(&self, stacked: &[f64]) -> Result<f64> {
        if stacked.len() != self.v_dim + self.n_opp {
            return Err(Error::DimensionMismatch {
                context: "graph target point",
                expected: self.v_dim + self.n_opp,
                got: stacked.len(),
            });
        }
        let (v, w) = stacked.split_at(self.v_dim);
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() <= 1e-6 && w.iter().all(|&x| x >= -1e-9) {
            let q: Vec<f64> = w.iter().map(|&x| x.max(0.0) / sum).collect();
            (self.residual)(v, &q)
        } else {
            // Far from the simplex there is no opponent mix to speak of;
            // report the simplex deviation so the point never certifies.
            Ok((sum - 1.0).abs().max(
                w.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max),
            ))
        }
    }
}

impl Target {
    #[must_use]
    pub fn dim(&self) -> usize {
        match self {
            Target::Set(s) => s.dim(),
            Target::Graph(g) => g.v_dim + g.n_opp,
        }
    }

    /// Membership violation of a point: Euclidean distance for set targets,
    /// the residual function for graph targets.
    pub fn violation(&self, r: &[f64]) -> Result<f64> {
        match self {
            Target::Set(s) => s.distance(r),
            Target::Graph(g) => g.violation(r),
        }
    }

    pub fn contains(&self, r: &[f64], tol: f64) -> Result<bool> {
        Ok(self.violation(r)? <= tol)
    }

    #[must_use]
    pub fn recession(&self) -> Vec<Recession> {
        match self {
            Target::Set(s) => s.quadrant_recession(),
            Target::Graph(g) => g.recession.clone(),
        }
    }

    /// The underlying geometric set, when there is one.
    #[must_use]
    pub fn as_set(&self) -> Option<&TargetSet> {
        match self {
            Target::Set(s) => Some(s),
            Target::Graph(_) => None,
        }
    }
}

/// Produces a strategy whose expected payoff against any given opponent
/// mix lies in the target.
pub struct ResponseOracle {
    respond: RespondFn,
}

/// Response callback mapping an opponent mix to a satisfying agent mix.
pub type RespondFn = Box<dyn Fn(&MixedAction) -> Result<MixedAction> + Send + Sync>;

impl ResponseOracle {
    pub fn new(
        respond: impl Fn(&MixedAction) -> Result<MixedAction> + Send + Sync + 'static,
    ) -> Self {
        Self {
            respond: Box::new(respond),
        }
    }

    pub fn respond(&self, q: &MixedAction) -> Result<MixedAction> {
        (self.respond)(q)
    }
}

/// A vector-payoff game, a target for the average payoff, and the response
/// oracle that certifies the target is attainable pointwise.
pub struct Problem {
    game: VectorGame,
    target: Target,
    oracle: ResponseOracle,
}

impl Problem {
    pub fn new(game: VectorGame, target: Target, oracle: ResponseOracle) -> Result<Self> {
        if target.dim() != game.dim() {
            return Err(Error::DimensionMismatch {
                context: "problem target dimension",
                expected: game.dim(),
                got: target.dim(),
            });
        }
        if let Target::Graph(g) = &target {
            if g.n_opp != game.n_opp() {
                return Err(Error::DimensionMismatch {
                    context: "graph target opponent actions",
                    expected: game.n_opp(),
                    got: g.n_opp,
                });
            }
        }
        Ok(Self {
            game,
            target,
            oracle,
        })
    }

    #[must_use]
    pub fn game(&self) -> &VectorGame {
        &self.game
    }

    #[must_use]
    pub fn target(&self) -> &Target {
        &self.target
    }

    /// The `ρ` constant of the bound: the Euclidean span of the payoff set.
    #[must_use]
    pub fn rho(&self) -> f64 {
        self.game.span()
    }

    /// Evaluates the oracle at `q` and measures the membership residual of
    /// the produced target point `r(p*, q)`.
    pub fn respond_certified(&self, q: &MixedAction) -> Result<(MixedAction, Vec<f64>, f64)> {
        let p_star = self.oracle.respond(q)?;
        if p_star.len() != self.game.n_agent() {
            return Err(Error::DimensionMismatch {
                context: "response strategy",
                expected: self.game.n_agent(),
                got: p_star.len(),
            });
        }
        let r_star = expected_reward(&self.game, &p_star, q)?;
        let residual = self.target.violation(&r_star)?;
        Ok((p_star, r_star, residual))
    }
}

/// Steering rule applied to the running averages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `λ_n = r̄*_n − r̄_n` on expected payoffs.
    Smoothed,
    /// Same recursion, reset to zero whenever `r̄_n` is inside the target.
    Idling,
    /// `λ_n` clamped against the target's recession directions.
    Unbounded,
    /// `λ_n = r̄*_n − R̄_n` on realized payoffs.
    Realized,
}

/// Running state after `n` committed steps.
#[derive(Clone, Debug)]
pub struct LearnerState {
    pub(crate) variant: Variant,
    pub(crate) n: u64,
    /// Average of `r(p_k, z_k)`.
    pub(crate) r_bar: Vec<f64>,
    /// Average of `r(a_k, z_k)`.
    pub(crate) realized_bar: Vec<f64>,
    /// Average of the planned target points `r*_k`.
    pub(crate) r_star_bar: Vec<f64>,
    /// Active steering direction after the variant rule.
    pub(crate) lambda: Vec<f64>,
}

impl LearnerState {
    pub fn new(variant: Variant, dim: usize) -> Self {
        Self {
            variant,
            n: 0,
            r_bar: vec![0.0; dim],
            realized_bar: vec![0.0; dim],
            r_star_bar: vec![0.0; dim],
            lambda: vec![0.0; dim],
        }
    }

    #[must_use]
    pub fn variant(&self) -> Variant {
        self.variant
    }

    #[must_use]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[must_use]
    pub fn r_bar(&self) -> &[f64] {
        &self.r_bar
    }

    #[must_use]
    pub fn realized_bar(&self) -> &[f64] {
        &self.realized_bar
    }

    #[must_use]
    pub fn r_star_bar(&self) -> &[f64] {
        &self.r_star_bar
    }

    /// The steering direction the next step will be planned against.
    #[must_use]
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Unclamped difference `r̄*_n − r̄_n`, a diagnostic for the clamped and
    /// reset variants.
    #[must_use]
    pub fn lambda_plain(&self) -> Vec<f64> {
        self.r_star_bar
            .iter()
            .zip(&self.r_bar)
            .map(|(s, r)| s - r)
            .collect()
    }

    #[must_use]
    pub fn lambda_norm(&self) -> f64 {
        norm(&self.lambda)
    }
}

/// Everything decided before the opponent moves.
#[derive(Clone, Debug)]
pub struct PlannedStep {
    /// The agent's mixed action for this step.
    pub p_n: MixedAction,
    /// Minimizing opponent strategy of the projected game.
    pub q_star: MixedAction,
    /// Oracle response to `q_star`; a placeholder on idle steps.
    pub p_star: MixedAction,
    /// Planned target point fed into the steering recursion.
    pub r_star: Vec<f64>,
    /// Value of the zero-sum game solved in the steering direction; zero on
    /// degenerate and idle steps.
    pub game_value: f64,
    /// True when the idling variant skipped steering this step.
    pub idle: bool,
}

/// Plans one step from the current steering direction.
///
/// With `‖λ‖` above [`DEGENERATE_LAMBDA_TOL`], the projected game
/// `λ·r(a, z)` is solved for the maximin `p_n` and minimax `q*_n`, and the
/// oracle's response to `q*_n` gives the target point. A degenerate
/// direction plans uniform play against the uniform opponent mix. The
/// idling variant with an average already in the target also plays
/// uniformly and takes the average itself as the target point.
pub fn plan_step(state: &LearnerState, problem: &Problem) -> Result<PlannedStep> {
    let game = problem.game();
    if state.variant == Variant::Idling
        && state.n > 0
        && problem.target.contains(&state.r_bar, MEMBERSHIP_TOL)?
    {
        return Ok(PlannedStep {
            p_n: MixedAction::uniform(game.n_agent()),
            q_star: MixedAction::uniform(game.n_opp()),
            p_star: MixedAction::uniform(game.n_agent()),
            r_star: state.r_bar.clone(),
            game_value: 0.0,
            idle: true,
        });
    }

    if norm(&state.lambda) <= DEGENERATE_LAMBDA_TOL {
        let q_star = MixedAction::uniform(game.n_opp());
        let (p_star, r_star, residual) = problem.respond_certified(&q_star)?;
        if residual > RESPONSE_CERT_TOL {
            return Err(Error::ResponseCertification {
                residual,
                tol: RESPONSE_CERT_TOL,
            });
        }
        return Ok(PlannedStep {
            p_n: MixedAction::uniform(game.n_agent()),
            q_star,
            p_star,
            r_star,
            game_value: 0.0,
            idle: false,
        });
    }

    let matrix = project_game(game, &state.lambda)?;
    let saddle = solve_zero_sum(&matrix)?;
    let (p_star, r_star, residual) = problem.respond_certified(&saddle.q)?;
    if residual > RESPONSE_CERT_TOL {
        return Err(Error::ResponseCertification {
            residual,
            tol: RESPONSE_CERT_TOL,
        });
    }
    Ok(PlannedStep {
        p_n: saddle.p,
        q_star: saddle.q,
        p_star,
        r_star,
        game_value: saddle.value,
        idle: false,
    })
}

/// Folds an observed step into the averages and applies the variant's
/// steering rule.
pub fn commit_step(
    state: &LearnerState,
    problem: &Problem,
    planned: &PlannedStep,
    a_n: usize,
    z_n: usize,
) -> Result<LearnerState> {
    let game = problem.game();
    if a_n >= game.n_agent() {
        return Err(Error::DimensionMismatch {
            context: "commit_step agent action",
            expected: game.n_agent(),
            got: a_n,
        });
    }
    let r_n = smoothed_payoff(game, &planned.p_n, z_n)?;
    let realized_n = game.payoff(a_n, z_n).to_vec();

    let n_new = state.n + 1;
    let w_old = state.n as f64 / n_new as f64;
    let w_new = 1.0 / n_new as f64;
    let fold = |avg: &[f64], x: &[f64]| -> Vec<f64> {
        avg.iter().zip(x).map(|(a, v)| w_old * a + w_new * v).collect()
    };
    let r_bar = fold(&state.r_bar, &r_n);
    let realized_bar = fold(&state.realized_bar, &realized_n);
    let r_star_bar = fold(&state.r_star_bar, &planned.r_star);

    let lambda = match state.variant {
        Variant::Smoothed => sub(&r_star_bar, &r_bar),
        Variant::Realized => sub(&r_star_bar, &realized_bar),
        Variant::Unbounded => {
            clamp_recession(&sub(&r_star_bar, &r_bar), &problem.target.recession())
        }
        Variant::Idling => {
            if problem.target.contains(&r_bar, MEMBERSHIP_TOL)? {
                vec![0.0; r_bar.len()]
            } else {
                idling_lambda(&state.lambda, n_new, &planned.r_star, &r_n)
            }
        }
    };

    Ok(LearnerState {
        variant: state.variant,
        n: n_new,
        r_bar,
        realized_bar,
        r_star_bar,
        lambda,
    })
}

/// One step of the reset steering recursion
/// `λ_n = ((n−1)/n) λ_{n−1} + (1/n)(r*_n − r_n)`.
#[must_use]
pub fn idling_lambda(lambda_prev: &[f64], n: u64, r_star: &[f64], r_n: &[f64]) -> Vec<f64> {
    let keep = (n - 1) as f64 / n as f64;
    let add = 1.0 / n as f64;
    lambda_prev
        .iter()
        .zip(r_star.iter().zip(r_n))
        .map(|(l, (s, r))| keep * l + add * (s - r))
        .collect()
}

/// Verifies the squared-norm recursion for one committed step:
/// `n²‖λ_n‖² ≤ (n−1)²‖λ_{n−1}‖² + 2(n−1) λ_{n−1}·(r*_n − r_n) + ρ²`,
/// within [`AUDIT_SLACK`]. `r_n` is the payoff the variant steers on.
#[must_use]
pub fn audit_recursion(
    lambda_prev: &[f64],
    lambda_new: &[f64],
    n: u64,
    r_star: &[f64],
    r_n: &[f64],
    rho: f64,
) -> bool {
    let nf = n as f64;
    let prev = nf - 1.0;
    let lhs = nf * nf * dot(lambda_new, lambda_new);
    let cross: f64 = lambda_prev
        .iter()
        .zip(r_star.iter().zip(r_n))
        .map(|(l, (s, r))| l * (s - r))
        .sum();
    let rhs = prev * prev * dot(lambda_prev, lambda_prev) + 2.0 * prev * cross + rho * rho;
    lhs <= rhs + AUDIT_SLACK
}

/// Worst-case descent margin of a planned step:
/// `min_z λ·(r(p_n, z) − r*)`. Active steering steps must keep this above
/// `−`[`DESCENT_TOL`].
pub fn descent_margin(
    game: &VectorGame,
    lambda: &[f64],
    p_n: &MixedAction,
    r_star: &[f64],
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for z in 0..game.n_opp() {
        let r = smoothed_payoff(game, p_n, z)?;
        let margin: f64 = lambda
            .iter()
            .zip(r.iter().zip(r_star))
            .map(|(l, (a, b))| l * (a - b))
            .sum();
        worst = worst.min(margin);
    }
    Ok(worst)
}

/// One step of the primal projection-direction baseline for compact target
/// sets: steer along `θ = Proj_S(r̄) − r̄` by playing the maximin strategy
/// of the `θ`-projected game; play uniformly once the average is inside.
/// Returns the strategy, the direction, and the solved game value.
pub fn primal_plan(
    r_bar: &[f64],
    set: &TargetSet,
    game: &VectorGame,
) -> Result<(MixedAction, Vec<f64>, f64)> {
    if set.contains(r_bar, MEMBERSHIP_TOL)? {
        return Ok((
            MixedAction::uniform(game.n_agent()),
            vec![0.0; game.dim()],
            0.0,
        ));
    }
    let projected = set.project(r_bar)?;
    let theta = sub(&projected, r_bar);
    let matrix = project_game(game, &theta)?;
    let saddle = solve_zero_sum(&matrix)?;
    Ok((saddle.p, theta, saddle.value))
}

/// One step of the support-function gradient baseline.
///
/// The distance `d(r̄, S)` equals `max_{‖θ‖≤1} (θ·r̄ − h_S(θ))`; the scheme
/// ascends that objective in `θ` with step size `1/(ρ_g √n)` where
/// `ρ_g = ρ + diam(S)`, then plays the strategy minimizing the payoff
/// component along the updated direction. The first step uses
/// `θ_prev = 0` and a zero payoff vector. Requires a compact target set.
/// Returns `(θ_n, p_n, game_value)`.
pub fn ogd_support_plan(
    theta_prev: &[f64],
    r_prev: &[f64],
    set: &TargetSet,
    game: &VectorGame,
    n: u64,
) -> Result<(Vec<f64>, MixedAction, f64)> {
    let diameter = set.diameter_bound()?.ok_or(Error::Unsupported {
        reason: "the support-gradient baseline needs a compact target set".into(),
    })?;
    let rho_g = game.span() + diameter;
    if rho_g <= 0.0 {
        // A constant game aimed at a single point has nothing to steer.
        return Ok((
            vec![0.0; game.dim()],
            MixedAction::uniform(game.n_agent()),
            0.0,
        ));
    }
    let eta = 1.0 / (rho_g * (n as f64).sqrt());
    let s_prev = set.support_argmax(theta_prev)?;
    let mut theta: Vec<f64> = theta_prev
        .iter()
        .zip(r_prev.iter().zip(&s_prev))
        .map(|(t, (r, s))| t + eta * (r - s))
        .collect();
    let theta_norm = norm(&theta);
    if theta_norm > 1.0 {
        for t in &mut theta {
            *t /= theta_norm;
        }
    }
    if norm(&theta) <= DEGENERATE_LAMBDA_TOL {
        return Ok((theta, MixedAction::uniform(game.n_agent()), 0.0));
    }
    // θ points away from the set, so the agent minimizes along it.
    let negated: Vec<f64> = theta.iter().map(|t| -t).collect();
    let matrix = project_game(game, &negated)?;
    let saddle = solve_zero_sum(&matrix)?;
    Ok((theta, saddle.p, saddle.value))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::Support;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_close(*x, *y, tol);
        }
    }

    /// Scalar game with a permissive ball target and a fixed pure response.
    fn scalar_problem(matrix: &[Vec<f64>]) -> Problem {
        let game = VectorGame::from_scalar(matrix).unwrap();
        let n = game.n_agent();
        let target = Target::Set(TargetSet::ball(vec![0.0], 100.0).unwrap());
        let oracle = ResponseOracle::new(move |_q| Ok(MixedAction::pure(0, n)));
        Problem::new(game, target, oracle).unwrap()
    }

    #[test]
    fn planning_solves_the_projected_game() {
        let problem = scalar_problem(&[vec![3.0, 0.0], vec![1.0, 2.0]]);
        let mut state = LearnerState::new(Variant::Smoothed, 1);
        state.lambda = vec![1.0];
        let plan = plan_step(&state, &problem).unwrap();
        assert_vec_close(plan.p_n.probs(), &[0.25, 0.75], 1e-9);
        assert_vec_close(plan.q_star.probs(), &[0.5, 0.5], 1e-9);
        assert_close(plan.game_value, 1.5, 1e-9);
        // Response δ_{a1} against q* = (.5, .5) lands on 1.5.
        assert_vec_close(&plan.r_star, &[1.5], 1e-9);
        assert!(!plan.idle);
    }

    #[test]
    fn zero_direction_plans_uniformly() {
        let problem = scalar_problem(&[vec![3.0, 0.0], vec![1.0, 2.0]]);
        let state = LearnerState::new(Variant::Smoothed, 1);
        let plan = plan_step(&state, &problem).unwrap();
        assert_vec_close(plan.p_n.probs(), &[0.5, 0.5], 1e-15);
        assert_vec_close(plan.q_star.probs(), &[0.5, 0.5], 1e-15);
        assert_close(plan.game_value, 0.0, 1e-15);
    }

    #[test]
    fn failed_certification_is_an_error() {
        let game = VectorGame::from_scalar(&[vec![3.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let target = Target::Set(TargetSet::singleton(vec![-5.0]).unwrap());
        // No strategy reaches −5 in a game with payoffs in [0, 3].
        let oracle = ResponseOracle::new(|_q| Ok(MixedAction::pure(0, 2)));
        let problem = Problem::new(game, target, oracle).unwrap();
        let state = LearnerState::new(Variant::Smoothed, 1);
        match plan_step(&state, &problem) {
            Err(Error::ResponseCertification { residual, .. }) => assert!(residual > 1.0),
            other => panic!("expected certification failure, got {other:?}"),
        }
    }

    #[test]
    fn commit_folds_averages_and_steering() {
        // r(a, z) = (a, z) as floats; distinct smoothed and realized rows.
        let game =
            VectorGame::from_fn(2, 2, 2, |a, z| vec![a as f64, z as f64]).unwrap();
        let target = Target::Set(TargetSet::ball(vec![0.5, 0.5], 100.0).unwrap());
        let oracle = ResponseOracle::new(|_q| Ok(MixedAction::uniform(2)));
        let problem = Problem::new(game, target, oracle).unwrap();

        let state = LearnerState::new(Variant::Smoothed, 2);
        let planned = PlannedStep {
            p_n: MixedAction::pure(0, 2),
            q_star: MixedAction::uniform(2),
            p_star: MixedAction::uniform(2),
            r_star: vec![0.5, 0.5],
            game_value: 0.0,
            idle: false,
        };
        let next = commit_step(&state, &problem, &planned, 0, 1).unwrap();
        assert_eq!(next.n(), 1);
        assert_vec_close(next.r_bar(), &[0.0, 1.0], 1e-15);
        assert_vec_close(next.realized_bar(), &[0.0, 1.0], 1e-15);
        assert_vec_close(next.r_star_bar(), &[0.5, 0.5], 1e-15);
        assert_vec_close(next.lambda(), &[0.5, -0.5], 1e-15);
        assert!(audit_recursion(
            state.lambda(),
            next.lambda(),
            1,
            &planned.r_star,
            &[0.0, 1.0],
            problem.rho()
        ));
    }

    #[test]
    fn audit_rejects_an_inflated_direction() {
        // ‖λ₁‖ = 10 cannot follow from a game of span √2.
        assert!(!audit_recursion(
            &[0.0, 0.0],
            &[10.0, 0.0],
            1,
            &[0.5, 0.5],
            &[0.0, 1.0],
            2.0_f64.sqrt()
        ));
    }

    #[test]
    fn realized_variant_steers_on_realized_payoffs() {
        let game =
            VectorGame::from_fn(2, 2, 2, |a, z| vec![a as f64, z as f64]).unwrap();
        let target = Target::Set(TargetSet::ball(vec![0.5, 0.5], 100.0).unwrap());
        let oracle = ResponseOracle::new(|_q| Ok(MixedAction::uniform(2)));
        let problem = Problem::new(game, target, oracle).unwrap();

        let state = LearnerState::new(Variant::Realized, 2);
        let planned = PlannedStep {
            p_n: MixedAction::uniform(2),
            q_star: MixedAction::uniform(2),
            p_star: MixedAction::uniform(2),
            r_star: vec![0.5, 0.5],
            game_value: 0.0,
            idle: false,
        };
        // Smoothed row for uniform p at z=0 is (0.5, 0); realized a=1 gives (1, 0).
        let next = commit_step(&state, &problem, &planned, 1, 0).unwrap();
        assert_vec_close(next.lambda(), &[-0.5, 0.5], 1e-15);
        assert_vec_close(&next.lambda_plain(), &[0.0, 0.5], 1e-15);
    }

    #[test]
    fn unbounded_variant_clamps_against_recession() {
        let game =
            VectorGame::from_fn(2, 2, 2, |a, z| vec![a as f64, z as f64]).unwrap();
        let target = Target::Set(TargetSet::nonpositive_orthant(2).unwrap());
        let oracle = ResponseOracle::new(|_q| Ok(MixedAction::uniform(2)));
        let problem = Problem::new(game, target, oracle).unwrap();

        let state = LearnerState::new(Variant::Unbounded, 2);
        let planned = PlannedStep {
            p_n: MixedAction::pure(0, 2),
            q_star: MixedAction::uniform(2),
            p_star: MixedAction::uniform(2),
            r_star: vec![0.5, 0.5],
            game_value: 0.0,
            idle: false,
        };
        let next = commit_step(&state, &problem, &planned, 0, 1).unwrap();
        // Plain direction (0.5, −0.5); the positive part points into the
        // orthant's recession cone and is dropped.
        assert_vec_close(next.lambda(), &[0.0, -0.5], 1e-15);
        assert_vec_close(&next.lambda_plain(), &[0.5, -0.5], 1e-15);
    }

    #[test]
    fn idling_resets_inside_and_idles_next_plan() {
        // Every payoff is inside the huge ball, so idling resets instantly.
        let problem = scalar_problem(&[vec![3.0, 0.0], vec![1.0, 2.0]]);
        let game_dim = 1;
        let state = LearnerState::new(Variant::Idling, game_dim);
        let planned = plan_step(&state, &problem).unwrap();
        let next = commit_step(&state, &problem, &planned, 0, 0).unwrap();
        assert_vec_close(next.lambda(), &[0.0], 1e-15);

        let plan2 = plan_step(&next, &problem).unwrap();
        assert!(plan2.idle);
        assert_vec_close(&plan2.r_star, next.r_bar(), 1e-15);
        assert_close(plan2.game_value, 0.0, 1e-15);
    }

    #[test]
    fn idling_recursion_runs_while_outside() {
        let game = VectorGame::from_scalar(&[vec![3.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let target = Target::Set(TargetSet::singleton(vec![1.5]).unwrap());
        let oracle = ResponseOracle::new(|q| {
            // Mix actions to hit exactly 1.5 against any q: rows are
            // r(a1, q) = 3q₁ and r(a2, q) = q₁ + 2q₂.
            let q1 = q.probs()[0];
            let q2 = q.probs()[1];
            let r1 = 3.0 * q1;
            let r2 = q1 + 2.0 * q2;
            let w = if (r1 - r2).abs() < 1e-12 {
                0.5
            } else {
                (1.5 - r2) / (r1 - r2)
            };
            MixedAction::new(vec![w.clamp(0.0, 1.0), 1.0 - w.clamp(0.0, 1.0)])
        });
        let problem = Problem::new(game, target, oracle).unwrap();
        let state = LearnerState::new(Variant::Idling, 1);
        let planned = plan_step(&state, &problem).unwrap();
        // The uniform plan against z2 nets r(p₁, z2) = 1, outside {1.5},
        // so the recursion keeps steering on the smoothed payoff.
        let next = commit_step(&state, &problem, &planned, 0, 1).unwrap();
        assert!(next.lambda()[0] > 0.0);
        let expected = idling_lambda(state.lambda(), 1, &planned.r_star, &[1.0]);
        assert_vec_close(next.lambda(), &expected, 1e-15);
    }

    #[test]
    fn descent_margin_is_nonnegative_for_planned_steps() {
        let problem = scalar_problem(&[vec![3.0, 0.0], vec![1.0, 2.0]]);
        let mut state = LearnerState::new(Variant::Smoothed, 1);
        state.lambda = vec![1.0];
        let plan = plan_step(&state, &problem).unwrap();
        let margin =
            descent_margin(problem.game(), state.lambda(), &plan.p_n, &plan.r_star).unwrap();
        assert!(margin >= -DESCENT_TOL, "margin {margin}");
    }

    #[test]
    fn primal_plan_steers_toward_the_target() {
        let game = VectorGame::from_scalar(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let set = TargetSet::singleton(vec![0.0]).unwrap();
        let (p, theta, value) = primal_plan(&[2.0], &set, &game).unwrap();
        // θ = 0 − 2 = −2 and the θ-projected game favors the zero row.
        assert_vec_close(&theta, &[-2.0], 1e-15);
        assert_vec_close(p.probs(), &[0.0, 1.0], 1e-9);
        assert_close(value, 0.0, 1e-9);

        let (p_in, theta_in, _) = primal_plan(&[0.0], &set, &game).unwrap();
        assert_vec_close(&theta_in, &[0.0], 1e-15);
        assert_vec_close(p_in.probs(), &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn support_gradient_first_step_moves_toward_the_average() {
        let game = VectorGame::from_scalar(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let set = TargetSet::singleton(vec![1.0]).unwrap();
        // First call convention: θ_prev = 0, r_prev = 0.
        let (theta, p, _value) = ogd_support_plan(&[0.0], &[0.0], &set, &game, 1).unwrap();
        let rho_g = game.span();
        // Supergradient 0 − 1 scaled by η = 1/ρ_g.
        assert_vec_close(&theta, &[-1.0 / rho_g], 1e-12);
        // Minimizing along negative θ means maximizing payoff: the top row.
        assert_vec_close(p.probs(), &[1.0, 0.0], 1e-9);
    }

    #[test]
    fn support_gradient_requires_compact_sets() {
        let game = VectorGame::from_scalar(&[vec![1.0], vec![0.0]]).unwrap();
        let set = TargetSet::nonpositive_orthant(1).unwrap();
        assert!(matches!(
            ogd_support_plan(&[0.0], &[0.0], &set, &game, 1),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn graph_target_renormalizes_the_frequency_block() {
        let g = GraphTarget::new(1, 2, vec![Recession::Up], |v, q| {
            Ok((q[0] - v[0]).max(0.0))
        })
        .unwrap();
        // Frequency block (0.5 + ε, 0.5 − ε) renormalizes to itself.
        assert_close(g.violation(&[0.7, 0.5, 0.5]).unwrap(), 0.0, 1e-12);
        assert_close(g.violation(&[0.2, 0.5, 0.5]).unwrap(), 0.3, 1e-12);
        // Far from the simplex the deviation itself is the violation.
        assert_close(g.violation(&[0.7, 2.0, 1.0]).unwrap(), 2.0, 1e-12);
        assert_eq!(
            g.recession,
            vec![Recession::Up, Recession::None, Recession::None]
        );
    }

    #[test]
    fn target_violation_matches_set_distance() {
        let t = Target::Set(TargetSet::nonpositive_orthant(2).unwrap());
        assert_close(t.violation(&[1.0, -2.0]).unwrap(), 1.0, 1e-15);
        assert!(t.contains(&[0.0, -1.0], 0.0).unwrap());
        assert_eq!(t.recession().len(), 2);
    }

    #[test]
    fn support_finite_helper_unwraps() {
        assert_close(Support::Finite(2.0).finite().unwrap(), 2.0, 0.0);
        assert!(Support::Infinite.finite().is_err());
    }
}
