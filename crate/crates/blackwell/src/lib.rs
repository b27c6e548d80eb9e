//! Response-based Blackwell approachability for repeated two-player
//! vector-payoff matrix games.
//!
//! The central object is a repeated game in which the agent picks a mixed
//! action `p` over a finite set A, the opponent picks `z` from a finite set Z,
//! and the stage outcome is a vector payoff `r(a, z) ∈ R^ℓ`. The agent wants
//! the running average payoff to converge to a closed convex target set `S`
//! no matter how the opponent plays. The algorithms here steer with the
//! direction `λ_n = r̄*_n − r̄_n`, the gap between the average of certified
//! target points and the average payoff, and guarantee `d(r̄_n, S) ≤ ‖λ_n‖ ≤
//! ρ/√n` where ρ is the Euclidean span of the payoff tensor.
//!
//! Module map:
//!
//! * [`lp`]: dense simplex solvers (matrix games and small general LPs).
//! * [`games`]: payoff tensors, mixed actions, expected rewards, and the
//!   exact zero-sum saddle-point solver with its certificate.
//! * [`sets`]: closed convex target sets with membership, distance,
//!   projection, support function, and recession-direction queries.
//! * [`approach`]: the response-based algorithm, its idling, recession-
//!   clamped, and realized-payoff variants, and two baselines (projection
//!   steering and support-function gradient steering).
//! * [`regret`]: reductions from regret-minimization problems (external,
//!   internal, best-reward embedding, global cost, reward-to-cost ratio,
//!   constrained reward) to vector games plus response oracles.
//! * [`harness`]: deterministic simulation runner, opponents, per-step
//!   auditing, and multi-seed sweeps.

pub mod approach;
pub mod games;
pub mod harness;
pub mod lp;
pub mod regret;
pub mod sets;

/// Library-wide error type.
///
/// Variants are grouped by failure class: input-shape errors, numerical
/// solver failures, and certification failures. The CLI maps these classes
/// onto its exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector or matrix had the wrong length for the operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A probability vector had a negative entry or did not sum to 1
    /// within 1e-12.
    #[error("invalid probability vector: {reason}")]
    InvalidProbabilities { reason: String },

    /// A payoff tensor or utility matrix was empty, ragged, or non-finite.
    #[error("invalid game data: {reason}")]
    InvalidGame { reason: String },

    /// A target-set description was unusable (empty polyhedron, inverted
    /// box bounds, bad radius).
    #[error("invalid target set: {reason}")]
    InvalidSet { reason: String },

    /// The simplex solver exceeded its pivot budget.
    #[error("linear program exceeded {limit} pivots")]
    IterationLimit { limit: usize },

    /// An LP that must be feasible by construction was not.
    #[error("linear program infeasible: {context}")]
    Infeasible { context: String },

    /// An LP that must be bounded by construction was not.
    #[error("linear program unbounded: {context}")]
    Unbounded { context: String },

    /// A computed saddle point failed its own optimality certificate.
    #[error("saddle-point certificate violated: gap {gap:.3e} exceeds {tol:.1e}")]
    Certificate { gap: f64, tol: f64 },

    /// The support function is +∞ in the queried direction.
    #[error("support function unbounded in the queried direction")]
    UnboundedSupport,

    /// A response oracle produced a point too far from its certified set.
    #[error("response certification failed: residual {residual:.3e} exceeds {tol:.1e}")]
    ResponseCertification { residual: f64, tol: f64 },

    /// A constrained-response query had no feasible mixed action at `q`.
    #[error("constraint set unreachable at q = {q:?}")]
    InfeasibleAt { q: Vec<f64> },

    /// A configuration combination the algorithms do not support.
    #[error("unsupported configuration: {reason}")]
    Unsupported { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
