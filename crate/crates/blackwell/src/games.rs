//! Finite vector-payoff matrix games.
//!
//! A [`VectorGame`] stores the payoff tensor `r(a, z) ∈ R^ℓ` over the agent's
//! action set A and the opponent's action set Z, along with its cached
//! Euclidean span `ρ = max ‖r(a,z) − r(a′,z′)‖`, the constant appearing in
//! every `ρ/√n` bound. [`solve_zero_sum`] wraps the LP solver and verifies
//! the saddle-point certificate before returning, so a [`SaddlePoint`] value
//! is always accompanied by a checked optimality guarantee.

use rand::Rng;

use crate::{lp, Error, Result};

/// Tolerance for the saddle-point optimality certificate.
pub const SADDLE_CERT_TOL: f64 = 1e-8;
/// Tolerance for probability-vector normalization.
pub const PROB_TOL: f64 = 1e-12;

/// A probability vector over a finite action set.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedAction {
    probs: Vec<f64>,
}

impl MixedAction {
    /// Validates nonnegativity and normalization within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbabilities {
                reason: "empty probability vector".into(),
            });
        }
        let mut sum = 0.0;
        for &v in &probs {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidProbabilities {
                    reason: format!("entry {v} is negative or non-finite"),
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidProbabilities {
                reason: format!("entries sum to {sum}, not 1"),
            });
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `n` actions.
    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on action `index`.
    pub fn pure(index: usize, n: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Self { probs }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[must_use]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A finite two-player game with vector payoffs `r(a, z) ∈ R^ℓ`.
#[derive(Clone, Debug)]
pub struct VectorGame {
    n_agent: usize,
    n_opp: usize,
    dim: usize,
    /// Row-major tensor: entry (a, z) occupies `[(a * n_opp + z) * dim ..][..dim]`.
    payoff: Vec<f64>,
    span: f64,
}

impl VectorGame {
    /// Builds a game from a fully populated `[a][z] -> vector` tensor.
    pub fn new(payoff: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n_agent = payoff.len();
        if n_agent == 0 {
            return Err(Error::InvalidGame {
                reason: "no agent actions".into(),
            });
        }
        let n_opp = payoff[0].len();
        if n_opp == 0 {
            return Err(Error::InvalidGame {
                reason: "no opponent actions".into(),
            });
        }
        let dim = payoff[0][0].len();
        if dim == 0 {
            return Err(Error::InvalidGame {
                reason: "zero-dimensional payoff".into(),
            });
        }
        let mut flat = Vec::with_capacity(n_agent * n_opp * dim);
        for row in &payoff {
            if row.len() != n_opp {
                return Err(Error::InvalidGame {
                    reason: "ragged payoff tensor".into(),
                });
            }
            for entry in row {
                if entry.len() != dim {
                    return Err(Error::InvalidGame {
                        reason: "payoff entries of unequal dimension".into(),
                    });
                }
                for &v in entry {
                    if !v.is_finite() {
                        return Err(Error::InvalidGame {
                            reason: "non-finite payoff entry".into(),
                        });
                    }
                    flat.push(v);
                }
            }
        }
        let span = span_of(&flat, n_agent * n_opp, dim);
        Ok(Self {
            n_agent,
            n_opp,
            dim,
            payoff: flat,
            span,
        })
    }

    /// Builds a 1-dimensional game from a scalar matrix.
    pub fn from_scalar(matrix: &[Vec<f64>]) -> Result<Self> {
        let tensor = matrix
            .iter()
            .map(|row| row.iter().map(|&v| vec![v]).collect())
            .collect();
        Self::new(tensor)
    }

    /// Builds a game by evaluating `f(a, z)` for every action pair.
    pub fn from_fn(
        n_agent: usize,
        n_opp: usize,
        dim: usize,
        mut f: impl FnMut(usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let tensor = (0..n_agent)
            .map(|a| (0..n_opp).map(|z| f(a, z)).collect())
            .collect();
        let game = Self::new(tensor)?;
        if game.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "payoff dimension produced by the builder",
                expected: dim,
                got: game.dim(),
            });
        }
        Ok(game)
    }

    #[must_use]
    pub fn n_agent(&self) -> usize {
        self.n_agent
    }

    #[must_use]
    pub fn n_opp(&self) -> usize {
        self.n_opp
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The payoff vector `r(a, z)`.
    #[must_use]
    pub fn payoff(&self, a: usize, z: usize) -> &[f64] {
        let base = (a * self.n_opp + z) * self.dim;
        &self.payoff[base..base + self.dim]
    }

    /// Euclidean span `ρ`: the diameter of the payoff entry set, cached at
    /// construction.
    #[must_use]
    pub fn span(&self) -> f64 {
        self.span
    }
}

fn span_of(flat: &[f64], entries: usize, dim: usize) -> f64 {
    let mut max_sq = 0.0_f64;
    for i in 0..entries {
        for j in (i + 1)..entries {
            let mut d = 0.0;
            for t in 0..dim {
                let diff = flat[i * dim + t] - flat[j * dim + t];
                d += diff * diff;
            }
            max_sq = max_sq.max(d);
        }
    }
    max_sq.sqrt()
}

/// An exact equilibrium of a zero-sum scalar matrix game, produced only
/// after both certificate inequalities have been verified.
#[derive(Clone, Debug)]
pub struct SaddlePoint {
    pub p: MixedAction,
    pub q: MixedAction,
    pub value: f64,
}

/// Expected payoff vector of mixed `p` against the pure opponent action `z`.
pub fn smoothed_payoff(game: &VectorGame, p: &MixedAction, z: usize) -> Result<Vec<f64>> {
    if p.len() != game.n_agent {
        return Err(Error::DimensionMismatch {
            context: "smoothed_payoff agent action",
            expected: game.n_agent,
            got: p.len(),
        });
    }
    if z >= game.n_opp {
        return Err(Error::DimensionMismatch {
            context: "smoothed_payoff opponent action",
            expected: game.n_opp,
            got: z,
        });
    }
    let mut out = vec![0.0; game.dim];
    for (a, &pa) in p.probs().iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (o, &e) in out.iter_mut().zip(game.payoff(a, z)) {
            *o += pa * e;
        }
    }
    Ok(out)
}

/// Expected payoff `Σ_{a,z} p(a) q(z) r(a,z)`, bilinear in `(p, q)`.
pub fn expected_reward(game: &VectorGame, p: &MixedAction, q: &MixedAction) -> Result<Vec<f64>> {
    if p.len() != game.n_agent {
        return Err(Error::DimensionMismatch {
            context: "expected_reward agent action",
            expected: game.n_agent,
            got: p.len(),
        });
    }
    if q.len() != game.n_opp {
        return Err(Error::DimensionMismatch {
            context: "expected_reward opponent action",
            expected: game.n_opp,
            got: q.len(),
        });
    }
    let mut out = vec![0.0; game.dim];
    for (a, &pa) in p.probs().iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (z, &qz) in q.probs().iter().enumerate() {
            if qz == 0.0 {
                continue;
            }
            let w = pa * qz;
            let entry = game.payoff(a, z);
            for (o, &e) in out.iter_mut().zip(entry) {
                *o += w * e;
            }
        }
    }
    Ok(out)
}

/// Scalar matrix `M[a][z] = λ · r(a, z)`. The direction is used exactly as
/// given; callers must not rely on any normalization.
pub fn project_game(game: &VectorGame, lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
    if lambda.len() != game.dim {
        return Err(Error::DimensionMismatch {
            context: "project_game direction",
            expected: game.dim,
            got: lambda.len(),
        });
    }
    let mut out = vec![vec![0.0; game.n_opp]; game.n_agent];
    #[allow(clippy::needless_range_loop)]
    for a in 0..game.n_agent {
        for z in 0..game.n_opp {
            out[a][z] = dot(lambda, game.payoff(a, z));
        }
    }
    Ok(out)
}

/// Solves the zero-sum game on `matrix` with the row player maximizing,
/// then verifies the certificate `min_z p·M[:,z] ≥ value − tol` and
/// `max_a M[a,:]·q ≤ value + tol` before returning. The reported value is
/// the midpoint of the two certified sides.
pub fn solve_zero_sum(matrix: &[Vec<f64>]) -> Result<SaddlePoint> {
    let sol = lp::matrix_game(matrix)?;
    let p = MixedAction::new(sol.row_strategy)?;
    let q = MixedAction::new(sol.col_strategy)?;

    let mut row_guarantee = f64::INFINITY;
    for z in 0..matrix[0].len() {
        let v: f64 = matrix
            .iter()
            .zip(p.probs())
            .map(|(row, &pa)| pa * row[z])
            .sum();
        row_guarantee = row_guarantee.min(v);
    }
    let mut col_cap = f64::NEG_INFINITY;
    for row in matrix {
        let v: f64 = row.iter().zip(q.probs()).map(|(&m, &qz)| m * qz).sum();
        col_cap = col_cap.max(v);
    }
    let gap = col_cap - row_guarantee;
    if gap > SADDLE_CERT_TOL {
        return Err(Error::Certificate {
            gap,
            tol: SADDLE_CERT_TOL,
        });
    }
    Ok(SaddlePoint {
        p,
        q,
        value: 0.5 * (row_guarantee + col_cap),
    })
}

/// Samples an action index from `p`, consuming exactly one uniform variate
/// from `rng` regardless of the outcome.
pub fn sample_action(p: &MixedAction, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_support = 0;
    for (i, &pi) in p.probs().iter().enumerate() {
        if pi > 0.0 {
            last_support = i;
            acc += pi;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding can leave acc marginally below 1; the draw then lands on the
    // last supported action.
    last_support
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
