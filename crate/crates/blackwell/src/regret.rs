//! Reductions from regret-minimization goals to approachability problems.
//!
//! Each construction here produces a [`Problem`]: a vector-payoff game, a
//! target for its average, and a response oracle certifying that the
//! target is attainable against any fixed opponent mix. External and
//! internal regret embed directly into a nonpositive orthant. Everything
//! response-dependent (best-value tracking, global cost functionals,
//! reward/cost ratios, cost-constrained rewards) goes through
//! [`build_generalized`], which stacks the payoff with the opponent's
//! action indicator `(v(a, z), 1(z))` so the average carries the empirical
//! opponent mix alongside the average payoff.

use crate::approach::{GraphTarget, Problem, ResidualFn, RespondFn, ResponseOracle, Target};
use crate::games::{MixedAction, VectorGame};
use crate::sets::{Recession, TargetSet};
use crate::{lp, Error, Result};

/// The agent's side of one played step, pure or mixed.
#[derive(Clone, Debug)]
pub enum AgentPlay {
    Action(usize),
    Strategy(MixedAction),
}

impl AgentPlay {
    fn utility(&self, u: &[Vec<f64>], z: usize) -> f64 {
        match self {
            AgentPlay::Action(a) => u[*a][z],
            AgentPlay::Strategy(p) => p
                .probs()
                .iter()
                .enumerate()
                .map(|(a, &pa)| pa * u[a][z])
                .sum(),
        }
    }

    fn weight(&self, a: usize) -> f64 {
        match self {
            AgentPlay::Action(played) => {
                if *played == a {
                    1.0
                } else {
                    0.0
                }
            }
            AgentPlay::Strategy(p) => p.probs()[a],
        }
    }
}

/// A response-dependent goal: reach `V*(q)` in the `v` game for the
/// opponent's empirical mix `q`. `residual(v, q)` measures the membership
/// violation of `v` against `V*(q)` and must vanish on `v(respond(q), q)`.
/// `v_recession` lists the coordinate directions along which every `V*(q)`
/// is unbounded.
pub struct SatisficingProblem {
    pub v: VectorGame,
    pub respond: RespondFn,
    pub residual: ResidualFn,
    pub v_recession: Vec<Recession>,
}

/// Stacks a satisficing problem into an approachability problem on
/// `(v(a, z), 1(z)) ∈ R^{K + |Z|}`. Projected onto a steering direction
/// `(λ_v, λ_q)`, the game's objective is `λ_v·v(p, q) + λ_q·q`, and every
/// target point is `(v(p*(q*), q*), q*)`.
pub fn build_generalized(sp: SatisficingProblem) -> Result<Problem> {
    let v = sp.v;
    let k = v.dim();
    let na = v.n_agent();
    let nz = v.n_opp();
    let game = VectorGame::from_fn(na, nz, k + nz, |a, z| {
        let mut r = v.payoff(a, z).to_vec();
        r.extend((0..nz).map(|j| if j == z { 1.0 } else { 0.0 }));
        r
    })?;
    let residual = sp.residual;
    let target = Target::Graph(GraphTarget::new(k, nz, sp.v_recession, move |vpt, q| {
        (residual)(vpt, q)
    })?);
    let respond = sp.respond;
    let oracle = ResponseOracle::new(move |q: &MixedAction| (respond)(q));
    Problem::new(game, target, oracle)
}

fn validate_scalar(u: &[Vec<f64>], context: &str) -> Result<(usize, usize)> {
    if u.is_empty() || u[0].is_empty() {
        return Err(Error::InvalidGame {
            reason: format!("{context}: empty utility matrix"),
        });
    }
    let nz = u[0].len();
    for row in u {
        if row.len() != nz {
            return Err(Error::InvalidGame {
                reason: format!("{context}: ragged utility matrix"),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGame {
                reason: format!("{context}: non-finite utility"),
            });
        }
    }
    Ok((u.len(), nz))
}

fn validate_history(history: &[(AgentPlay, usize)], na: usize, nz: usize) -> Result<()> {
    for (play, z) in history {
        if *z >= nz {
            return Err(Error::DimensionMismatch {
                context: "opponent action in history",
                expected: nz,
                got: *z,
            });
        }
        match play {
            AgentPlay::Action(a) if *a >= na => {
                return Err(Error::DimensionMismatch {
                    context: "agent action in history",
                    expected: na,
                    got: *a,
                });
            }
            AgentPlay::Strategy(p) if p.len() != na => {
                return Err(Error::DimensionMismatch {
                    context: "agent strategy in history",
                    expected: na,
                    got: p.len(),
                });
            }
            _ => {}
        }
    }
    Ok(())
}

/// `u(a, q) = Σ_z q(z) u(a, z)`.
fn scalar_row_value(u: &[Vec<f64>], a: usize, q: &[f64]) -> f64 {
    u[a].iter().zip(q).map(|(v, w)| v * w).sum()
}

/// Lowest-index maximizer of `u(·, q)`.
pub fn best_response_index(u: &[Vec<f64>], q: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = scalar_row_value(u, 0, q);
    for a in 1..u.len() {
        let v = scalar_row_value(u, a, q);
        if v > best_v {
            best = a;
            best_v = v;
        }
    }
    best
}

/// `u*(q) = max_a u(a, q)`.
pub fn best_response_value(u: &[Vec<f64>], q: &[f64]) -> f64 {
    scalar_row_value(u, best_response_index(u, q), q)
}

/// Average external regret `L_n(a′) = (1/n) Σ_k (u(a′, z_k) − u_k)`, with
/// `u_k` the realized `u(a_k, z_k)` or the expected `u(p_k, z_k)` per the
/// recorded play.
pub fn external_regret(history: &[(AgentPlay, usize)], u: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (na, nz) = validate_scalar(u, "external_regret")?;
    validate_history(history, na, nz)?;
    if history.is_empty() {
        return Err(Error::InvalidGame {
            reason: "external_regret: empty history".into(),
        });
    }
    let n = history.len() as f64;
    let mut l = vec![0.0; na];
    for (play, z) in history {
        let earned = play.utility(u, *z);
        for (a, acc) in l.iter_mut().enumerate() {
            *acc += u[a][*z] - earned;
        }
    }
    for acc in &mut l {
        *acc /= n;
    }
    Ok(l)
}

/// Average internal regret `I_n(a, a′) = (1/n) Σ_k w_k(a)(u(a′, z_k) −
/// u(a, z_k))`, where `w_k(a)` is the weight the agent put on `a` at step
/// `k` (an indicator for realized play).
pub fn internal_regret(
    history: &[(AgentPlay, usize)],
    u: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let (na, nz) = validate_scalar(u, "internal_regret")?;
    validate_history(history, na, nz)?;
    if history.is_empty() {
        return Err(Error::InvalidGame {
            reason: "internal_regret: empty history".into(),
        });
    }
    let n = history.len() as f64;
    let mut i_mat = vec![vec![0.0; na]; na];
    for (play, z) in history {
        for a1 in 0..na {
            let w = play.weight(a1);
            if w == 0.0 {
                continue;
            }
            for a2 in 0..na {
                i_mat[a1][a2] += w * (u[a2][*z] - u[a1][*z]);
            }
        }
    }
    for row in &mut i_mat {
        for v in row {
            *v /= n;
        }
    }
    Ok(i_mat)
}

/// Normalized positive part of a regret vector; uniform when no entry is
/// positive.
pub fn regret_matching_policy(l: &[f64]) -> Result<MixedAction> {
    if l.is_empty() {
        return Err(Error::InvalidProbabilities {
            reason: "regret_matching_policy: empty regret vector".into(),
        });
    }
    let total: f64 = l.iter().map(|&v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Ok(MixedAction::uniform(l.len()));
    }
    MixedAction::new(l.iter().map(|&v| v.max(0.0) / total).collect())
}

/// External-regret embedding: vector payoff `r_{a′}(a, z) = u(a′, z) −
/// u(a, z)` aimed at the nonpositive orthant, with the pure best response
/// to `q` as the oracle.
pub fn build_external_game(u: &[Vec<f64>]) -> Result<Problem> {
    let (na, nz) = validate_scalar(u, "build_external_game")?;
    let game = VectorGame::from_fn(na, nz, na, |a, z| {
        (0..na).map(|ap| u[ap][z] - u[a][z]).collect()
    })?;
    let target = Target::Set(TargetSet::nonpositive_orthant(na)?);
    let owned = u.to_vec();
    let oracle = ResponseOracle::new(move |q: &MixedAction| {
        Ok(MixedAction::pure(best_response_index(&owned, q.probs()), na))
    });
    Problem::new(game, target, oracle)
}

/// Internal-regret embedding on coordinates `(a₁, a₂) ↦ a₁·|A| + a₂`:
/// `r_{a₁,a₂}(a, z) = 1{a = a₁}(u(a₂, z) − u(a₁, z))`, aimed at the
/// nonpositive orthant.
pub fn build_internal_game(u: &[Vec<f64>]) -> Result<Problem> {
    let (na, nz) = validate_scalar(u, "build_internal_game")?;
    let game = VectorGame::from_fn(na, nz, na * na, |a, z| {
        let mut r = vec![0.0; na * na];
        for a2 in 0..na {
            r[a * na + a2] = u[a2][z] - u[a][z];
        }
        r
    })?;
    let target = Target::Set(TargetSet::nonpositive_orthant(na * na)?);
    let owned = u.to_vec();
    let oracle = ResponseOracle::new(move |q: &MixedAction| {
        Ok(MixedAction::pure(best_response_index(&owned, q.probs()), na))
    });
    Problem::new(game, target, oracle)
}

/// Best-value tracking as a stacked problem: payoff `(u(a, z), 1(z))` aimed
/// at `{(v, q) : v ≥ u*(q)}`, with the pure best response as the oracle.
pub fn build_blackwell_embedding(u: &[Vec<f64>]) -> Result<Problem> {
    let (na, _) = validate_scalar(u, "build_blackwell_embedding")?;
    let owned = u.to_vec();
    let residual_u = u.to_vec();
    build_generalized(SatisficingProblem {
        v: VectorGame::from_scalar(u)?,
        respond: Box::new(move |q: &MixedAction| {
            Ok(MixedAction::pure(best_response_index(&owned, q.probs()), na))
        }),
        residual: Box::new(move |v, q| {
            Ok((best_response_value(&residual_u, q) - v[0]).max(0.0))
        }),
        v_recession: vec![Recession::Up],
    })
}

/// Convex cost functional applied to the average vector payoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostFunctional {
    /// `G(v) = |v|` on a scalar payoff.
    AbsoluteValue,
    /// `G(v) = ‖v‖_d` on per-action loads, `d > 1`.
    DNorm { d: f64 },
    /// `G(v) = ‖v‖_∞` on per-action loads.
    InfNorm,
}

impl CostFunctional {
    fn is_load_balancing(&self) -> bool {
        !matches!(self, CostFunctional::AbsoluteValue)
    }
}

/// Evaluates `G(v)`. For [`CostFunctional::AbsoluteValue`] the point must
/// be scalar; the load norms apply to any dimension.
pub fn global_cost_value(g: &CostFunctional, v: &[f64]) -> f64 {
    match g {
        CostFunctional::AbsoluteValue => v[0].abs(),
        CostFunctional::DNorm { d } => v
            .iter()
            .map(|x| x.abs().powf(*d))
            .sum::<f64>()
            .powf(1.0 / d),
        CostFunctional::InfNorm => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

/// Minimizer `p*(q)` of `G(v(p, q))` over mixed actions.
///
/// `AbsoluteValue` takes the pure action with the smallest magnitude when
/// all `v(a, q)` share a sign, and otherwise mixes the smallest positive
/// value with the most negative one to land exactly on zero. The load
/// norms weight actions by `ℓ(a, q)^{−d/(d−1)}` (with `d → ∞` giving
/// `1/ℓ`); actions with zero expected load receive the uniform share of
/// all mass.
pub fn global_cost_response(
    g: &CostFunctional,
    matrix: &[Vec<f64>],
    q: &[f64],
) -> Result<MixedAction> {
    let (na, nz) = validate_scalar(matrix, "global_cost_response")?;
    if q.len() != nz {
        return Err(Error::DimensionMismatch {
            context: "global_cost_response opponent mix",
            expected: nz,
            got: q.len(),
        });
    }
    let row_values: Vec<f64> = (0..na).map(|a| scalar_row_value(matrix, a, q)).collect();

    match g {
        CostFunctional::AbsoluteValue => {
            if let Some(zero) = row_values.iter().position(|&v| v == 0.0) {
                return Ok(MixedAction::pure(zero, na));
            }
            let has_pos = row_values.iter().any(|&v| v > 0.0);
            let has_neg = row_values.iter().any(|&v| v < 0.0);
            if !(has_pos && has_neg) {
                let mut best = 0;
                for a in 1..na {
                    if row_values[a].abs() < row_values[best].abs() {
                        best = a;
                    }
                }
                return Ok(MixedAction::pure(best, na));
            }
            // Smallest positive against most negative, mixed to hit zero.
            let mut a_pos = usize::MAX;
            let mut a_neg = usize::MAX;
            for (a, &v) in row_values.iter().enumerate() {
                if v > 0.0 && (a_pos == usize::MAX || v < row_values[a_pos]) {
                    a_pos = a;
                }
                if v < 0.0 && (a_neg == usize::MAX || v < row_values[a_neg]) {
                    a_neg = a;
                }
            }
            let v_pos = row_values[a_pos];
            let v_neg = row_values[a_neg];
            let w_pos = -v_neg / (v_pos - v_neg);
            let mut probs = vec![0.0; na];
            probs[a_pos] = w_pos;
            probs[a_neg] = 1.0 - w_pos;
            MixedAction::new(probs)
        }
        CostFunctional::DNorm { .. } | CostFunctional::InfNorm => {
            if row_values.iter().any(|&v| v < -1e-9) {
                return Err(Error::InvalidGame {
                    reason: "load balancing needs nonnegative loads".into(),
                });
            }
            let zeros: Vec<usize> = row_values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v <= 0.0)
                .map(|(a, _)| a)
                .collect();
            if !zeros.is_empty() {
                let mut probs = vec![0.0; na];
                let share = 1.0 / zeros.len() as f64;
                for a in zeros {
                    probs[a] = share;
                }
                return MixedAction::new(probs);
            }
            let weights: Vec<f64> = match g {
                CostFunctional::DNorm { d } => row_values
                    .iter()
                    .map(|&v| v.powf(-d / (d - 1.0)))
                    .collect(),
                _ => row_values.iter().map(|&v| 1.0 / v).collect(),
            };
            let total: f64 = weights.iter().sum();
            MixedAction::new(weights.into_iter().map(|w| w / total).collect())
        }
    }
}

/// `G*(q) = min_p G(v(p, q))`, evaluated through the optimal response.
pub fn global_cost_star(g: &CostFunctional, matrix: &[Vec<f64>], q: &[f64]) -> Result<f64> {
    let p = global_cost_response(g, matrix, q)?;
    Ok(global_cost_value(g, &cost_point(g, matrix, q, &p)))
}

/// The point `v(p, q)` of the structured payoff attached to `g`: the
/// scalar expected value for `AbsoluteValue`, the per-action load vector
/// `(p_a ℓ(a, q))_a` for the load norms.
fn cost_point(g: &CostFunctional, matrix: &[Vec<f64>], q: &[f64], p: &MixedAction) -> Vec<f64> {
    let row_values: Vec<f64> = (0..matrix.len())
        .map(|a| scalar_row_value(matrix, a, q))
        .collect();
    if g.is_load_balancing() {
        p.probs()
            .iter()
            .zip(&row_values)
            .map(|(pa, v)| pa * v)
            .collect()
    } else {
        vec![p.probs().iter().zip(&row_values).map(|(pa, v)| pa * v).sum()]
    }
}

/// Minimization target `{v : G(v) ≤ G*(q)}` for the average of the
/// structured payoff: scalar `u(a, z)` for `AbsoluteValue`, the per-action
/// load vector `ℓ(a, z)·1(a)` for the load norms.
pub fn build_global_cost(g: CostFunctional, matrix: &[Vec<f64>]) -> Result<Problem> {
    let (na, nz) = validate_scalar(matrix, "build_global_cost")?;
    if let CostFunctional::DNorm { d } = g {
        if d <= 1.0 || !d.is_finite() {
            return Err(Error::InvalidGame {
                reason: format!("d-norm exponent {d} must be finite and exceed 1"),
            });
        }
    }
    if g.is_load_balancing() {
        for row in matrix {
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidGame {
                    reason: "load balancing needs nonnegative loads".into(),
                });
            }
        }
    }
    let v = if g.is_load_balancing() {
        VectorGame::from_fn(na, nz, na, |a, z| {
            let mut r = vec![0.0; na];
            r[a] = matrix[a][z];
            r
        })?
    } else {
        VectorGame::from_scalar(matrix)?
    };
    let k = v.dim();
    let respond_matrix = matrix.to_vec();
    let residual_matrix = matrix.to_vec();
    build_generalized(SatisficingProblem {
        v,
        respond: Box::new(move |q: &MixedAction| {
            global_cost_response(&g, &respond_matrix, q.probs())
        }),
        residual: Box::new(move |vpt, q| {
            let star = global_cost_star(&g, &residual_matrix, q)?;
            Ok((global_cost_value(&g, vpt) - star).max(0.0))
        }),
        v_recession: vec![Recession::None; k],
    })
}

/// Lowest-index maximizer of the ratio `u(a, q) / c(a, q)`.
pub fn ratio_response(u: &[Vec<f64>], c: &[Vec<f64>], q: &[f64]) -> Result<usize> {
    let ratios = ratio_values(u, c, q)?;
    let mut best = 0;
    for a in 1..ratios.len() {
        if ratios[a] > ratios[best] {
            best = a;
        }
    }
    Ok(best)
}

/// `ρ*(q) = max_p u(p, q)/c(p, q)`; the maximum is attained at a pure
/// action because the ratio of linear functions is quasi-convex on the
/// simplex.
pub fn rho_star(u: &[Vec<f64>], c: &[Vec<f64>], q: &[f64]) -> Result<f64> {
    let ratios = ratio_values(u, c, q)?;
    Ok(ratios.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// The per-step optimal ratio against the pure opponent action `z`.
pub fn rho1_at_pure(u: &[Vec<f64>], c: &[Vec<f64>], z: usize) -> Result<f64> {
    let (_, nz) = validate_scalar(u, "rho1_at_pure")?;
    if z >= nz {
        return Err(Error::DimensionMismatch {
            context: "rho1_at_pure opponent action",
            expected: nz,
            got: z,
        });
    }
    let mut q = vec![0.0; nz];
    q[z] = 1.0;
    rho_star(u, c, &q)
}

fn ratio_values(u: &[Vec<f64>], c: &[Vec<f64>], q: &[f64]) -> Result<Vec<f64>> {
    let (na, nz) = validate_scalar(u, "ratio utilities")?;
    let (nac, nzc) = validate_scalar(c, "ratio costs")?;
    if nac != na || nzc != nz {
        return Err(Error::InvalidGame {
            reason: "ratio utility and cost matrices differ in shape".into(),
        });
    }
    if c.iter().flatten().any(|&v| v <= 0.0) {
        return Err(Error::InvalidGame {
            reason: "ratio costs must be strictly positive".into(),
        });
    }
    if q.len() != nz {
        return Err(Error::DimensionMismatch {
            context: "ratio opponent mix",
            expected: nz,
            got: q.len(),
        });
    }
    Ok((0..na)
        .map(|a| scalar_row_value(u, a, q) / scalar_row_value(c, a, q))
        .collect())
}

/// Ratio-optimality target `{(u, c) : u ≥ ρ*(q)·c}` on the stacked payoff
/// `(u(a, z), c(a, z), 1(z))`.
pub fn build_ratio(u: &[Vec<f64>], c: &[Vec<f64>]) -> Result<Problem> {
    let (na, nz) = validate_scalar(u, "ratio objective")?;
    // Cost positivity and shape agreement ride along with a uniform probe.
    let probe = vec![1.0 / nz as f64; nz];
    ratio_values(u, c, &probe)?;
    let v = VectorGame::from_fn(na, nz, 2, |a, z| vec![u[a][z], c[a][z]])?;
    let u_all_nonneg = u.iter().flatten().all(|&x| x >= 0.0);
    let respond_u = u.to_vec();
    let respond_c = c.to_vec();
    let residual_u = u.to_vec();
    let residual_c = c.to_vec();
    build_generalized(SatisficingProblem {
        v,
        respond: Box::new(move |q: &MixedAction| {
            Ok(MixedAction::pure(
                ratio_response(&respond_u, &respond_c, q.probs())?,
                na,
            ))
        }),
        residual: Box::new(move |vpt, q| {
            let rho = rho_star(&residual_u, &residual_c, q)?;
            Ok((rho * vpt[1] - vpt[0]).max(0.0))
        }),
        v_recession: vec![
            Recession::Up,
            // Lowering the cost coordinate preserves u ≥ ρ*(q)·c only when
            // every ρ*(q) is nonnegative.
            if u_all_nonneg {
                Recession::Down
            } else {
                Recession::None
            },
        ],
    })
}

/// Scalar utilities paired with vector costs `c(a, z) ∈ R^s` over the same
/// action sets.
#[derive(Clone, Debug)]
pub struct CostedGame {
    u: Vec<Vec<f64>>,
    c: Vec<Vec<Vec<f64>>>,
    s: usize,
}

impl CostedGame {
    pub fn new(u: Vec<Vec<f64>>, c: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let (na, nz) = validate_scalar(&u, "costed game utilities")?;
        if c.len() != na || c.iter().any(|row| row.len() != nz) {
            return Err(Error::InvalidGame {
                reason: "cost tensor shape differs from the utility matrix".into(),
            });
        }
        let s = c[0][0].len();
        if s == 0 {
            return Err(Error::InvalidGame {
                reason: "costs must have at least one coordinate".into(),
            });
        }
        for row in &c {
            for entry in row {
                if entry.len() != s {
                    return Err(Error::InvalidGame {
                        reason: "cost entries of unequal dimension".into(),
                    });
                }
                if entry.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidGame {
                        reason: "non-finite cost entry".into(),
                    });
                }
            }
        }
        Ok(Self { u, c, s })
    }

    /// Single-coordinate costs from a plain matrix.
    pub fn scalar(u: Vec<Vec<f64>>, c: Vec<Vec<f64>>) -> Result<Self> {
        let tensor = c
            .into_iter()
            .map(|row| row.into_iter().map(|v| vec![v]).collect())
            .collect();
        Self::new(u, tensor)
    }

    #[must_use]
    pub fn cost_dim(&self) -> usize {
        self.s
    }

    fn cost_row(&self, a: usize, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.s];
        for (z, &w) in q.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(&self.c[a][z]) {
                *o += w * v;
            }
        }
        out
    }
}

/// Rows expressing `c ∈ Γ` as linear constraints in `p`, given the
/// per-action expected costs. Only polyhedral target kinds are accepted.
fn gamma_rows(
    gamma: &TargetSet,
    cost_rows: &[Vec<f64>],
) -> Result<Vec<lp::LpRow>> {
    let na = cost_rows.len();
    let combine = |weights: &[f64]| -> Vec<f64> {
        (0..na)
            .map(|a| {
                cost_rows[a]
                    .iter()
                    .zip(weights)
                    .map(|(c, w)| c * w)
                    .sum()
            })
            .collect()
    };
    let s = cost_rows[0].len();
    let mut rows = Vec::new();
    match gamma {
        TargetSet::NonpositiveOrthant { dim } => {
            check_gamma_dim(*dim, s)?;
            for i in 0..s {
                let mut w = vec![0.0; s];
                w[i] = 1.0;
                rows.push(lp::LpRow {
                    coeffs: combine(&w),
                    relation: lp::Relation::Le,
                    rhs: 0.0,
                });
            }
        }
        TargetSet::Box { lower, upper } => {
            check_gamma_dim(lower.len(), s)?;
            for i in 0..s {
                let mut w = vec![0.0; s];
                w[i] = 1.0;
                let coeffs = combine(&w);
                if upper[i].is_finite() {
                    rows.push(lp::LpRow {
                        coeffs: coeffs.clone(),
                        relation: lp::Relation::Le,
                        rhs: upper[i],
                    });
                }
                if lower[i].is_finite() {
                    rows.push(lp::LpRow {
                        coeffs,
                        relation: lp::Relation::Ge,
                        rhs: lower[i],
                    });
                }
            }
        }
        TargetSet::Singleton { point } => {
            check_gamma_dim(point.len(), s)?;
            for i in 0..s {
                let mut w = vec![0.0; s];
                w[i] = 1.0;
                rows.push(lp::LpRow {
                    coeffs: combine(&w),
                    relation: lp::Relation::Eq,
                    rhs: point[i],
                });
            }
        }
        TargetSet::HPolyhedron(h) => {
            let (a_rows, b) = h.rows();
            check_gamma_dim(a_rows[0].len(), s)?;
            for (row, &rhs) in a_rows.iter().zip(b) {
                rows.push(lp::LpRow {
                    coeffs: combine(row),
                    relation: lp::Relation::Le,
                    rhs,
                });
            }
        }
        TargetSet::Ball { .. } => {
            return Err(Error::Unsupported {
                reason: "constrained responses need a polyhedral cost target".into(),
            });
        }
    }
    Ok(rows)
}

fn check_gamma_dim(dim: usize, s: usize) -> Result<()> {
    if dim != s {
        return Err(Error::DimensionMismatch {
            context: "cost target dimension",
            expected: s,
            got: dim,
        });
    }
    Ok(())
}

/// Best constrained response: solves `max_p u(p, q)` subject to
/// `c(p, q) ∈ Γ` over the simplex, returning the maximizer and the value
/// `u*_Γ(q)`. An infeasible `q` violates the standing feasibility
/// assumption and is reported as such.
pub fn constrained_response(
    cg: &CostedGame,
    gamma: &TargetSet,
    q: &[f64],
) -> Result<(MixedAction, f64)> {
    let na = cg.u.len();
    let nz = cg.u[0].len();
    if q.len() != nz {
        return Err(Error::DimensionMismatch {
            context: "constrained_response opponent mix",
            expected: nz,
            got: q.len(),
        });
    }
    let cost_rows: Vec<Vec<f64>> = (0..na).map(|a| cg.cost_row(a, q)).collect();
    let mut rows = gamma_rows(gamma, &cost_rows)?;
    rows.push(lp::LpRow {
        coeffs: vec![1.0; na],
        relation: lp::Relation::Eq,
        rhs: 1.0,
    });
    let problem = lp::LpProblem {
        maximize: (0..na).map(|a| scalar_row_value(&cg.u, a, q)).collect(),
        rows,
        free: vec![false; na],
    };
    match lp::solve_lp(&problem)? {
        lp::LpOutcome::Optimal { x, value } => {
            Ok((MixedAction::new(lp::normalize_probs(x)?)?, value))
        }
        lp::LpOutcome::Infeasible => Err(Error::InfeasibleAt { q: q.to_vec() }),
        lp::LpOutcome::Unbounded => Err(Error::Unbounded {
            context: "constrained response over the simplex".into(),
        }),
    }
}

/// Constrained-optimality target `{(u, c) : u ≥ u*_Γ(q), c ∈ Γ}` on the
/// stacked payoff `(u(a, z), c(a, z), 1(z))`.
pub fn build_constrained(cg: CostedGame, gamma: TargetSet) -> Result<Problem> {
    let s = cg.cost_dim();
    check_gamma_dim(gamma.dim(), s)?;
    let na = cg.u.len();
    let nz = cg.u[0].len();
    let v = VectorGame::from_fn(na, nz, 1 + s, |a, z| {
        let mut r = vec![cg.u[a][z]];
        r.extend_from_slice(&cg.c[a][z]);
        r
    })?;
    let mut v_recession = vec![Recession::Up];
    v_recession.extend(gamma.quadrant_recession());
    let respond_cg = cg.clone();
    let respond_gamma = gamma.clone();
    let residual_gamma = gamma.clone();
    build_generalized(SatisficingProblem {
        v,
        respond: Box::new(move |q: &MixedAction| {
            Ok(constrained_response(&respond_cg, &respond_gamma, q.probs())?.0)
        }),
        residual: Box::new(move |vpt, q| {
            let (_, u_star) = constrained_response(&cg, &residual_gamma, q)?;
            let reward_gap = (u_star - vpt[0]).max(0.0);
            let cost_gap = residual_gamma.distance(&vpt[1..])?;
            Ok(reward_gap.max(cost_gap))
        }),
        v_recession,
    })
}
