//! Closed convex target sets.
//!
//! A [`TargetSet`] supports membership, Euclidean distance, projection,
//! support function, and recession-direction queries. Five shapes cover
//! every target used by the algorithms: a single point, the nonpositive
//! orthant, an axis-aligned box with optional infinite sides, a polyhedron
//! `{x : Ax ≤ b}`, and a Euclidean ball.
//!
//! Recession directions are restricted to signed coordinate axes (quadrant
//! cones). That is exactly the structure the steering-clamp rule
//! [`steer_unbounded`] needs: a coordinate of the steering direction whose
//! signed component points into the cone of directions along which the set
//! is unbounded carries no information and is set to zero.

use crate::games::{dot, norm};
use crate::{lp, Error, Result};

/// Default membership tolerance wherever an operation does not take one.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Per-coordinate recession behavior of a target set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recession {
    /// Bounded in both directions along this coordinate.
    None,
    /// Unbounded toward +∞.
    Up,
    /// Unbounded toward −∞.
    Down,
    /// Unbounded in both directions.
    Both,
}

/// Value of a support function, which may be +∞ for unbounded sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    Finite(f64),
    Infinite,
}

impl Support {
    /// Unwraps a finite value, erroring on +∞.
    pub fn finite(self) -> Result<f64> {
        match self {
            Support::Finite(v) => Ok(v),
            Support::Infinite => Err(Error::UnboundedSupport),
        }
    }
}

/// A nonempty closed convex subset of `R^dim`.
#[derive(Clone, Debug)]
pub enum TargetSet {
    Singleton {
        point: Vec<f64>,
    },
    NonpositiveOrthant {
        dim: usize,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    HPolyhedron(HPolyhedron),
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

/// `{x : Ax ≤ b}`, checked nonempty at construction. Keeps a feasible seed
/// point for the projection iteration.
#[derive(Clone, Debug)]
pub struct HPolyhedron {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    dim: usize,
    seed: Vec<f64>,
}

impl HPolyhedron {
    pub fn rows(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.a, &self.b)
    }
}

impl TargetSet {
    pub fn singleton(point: Vec<f64>) -> Result<Self> {
        if point.is_empty() || point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSet {
                reason: "singleton point must be finite and nonempty".into(),
            });
        }
        Ok(Self::Singleton { point })
    }

    pub fn nonpositive_orthant(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet {
                reason: "orthant dimension must be at least 1".into(),
            });
        }
        Ok(Self::NonpositiveOrthant { dim })
    }

    /// Box intersection of `[lower_j, upper_j]`; sides may be ±∞ but every
    /// coordinate interval must be nonempty.
    pub fn box_bounds(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidSet {
                reason: "box bounds must be nonempty and of equal length".into(),
            });
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if lo.is_nan() || hi.is_nan() || lo > hi || *lo == f64::INFINITY
                || *hi == f64::NEG_INFINITY
            {
                return Err(Error::InvalidSet {
                    reason: format!("empty box interval [{lo}, {hi}]"),
                });
            }
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSet {
                reason: "ball center must be finite and nonempty".into(),
            });
        }
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidSet {
                reason: format!("ball radius {radius} must be finite and nonnegative"),
            });
        }
        Ok(Self::Ball { center, radius })
    }

    /// `{x : a·x ≤ b}` rows; nonemptiness is certified by a feasibility LP.
    pub fn hpolyhedron(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidSet {
                reason: "polyhedron needs matching nonempty A and b".into(),
            });
        }
        let dim = a[0].len();
        if dim == 0 {
            return Err(Error::InvalidSet {
                reason: "polyhedron rows must have at least one column".into(),
            });
        }
        for (row, rhs) in a.iter().zip(&b) {
            if row.len() != dim {
                return Err(Error::InvalidSet {
                    reason: "ragged polyhedron rows".into(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) || !rhs.is_finite() {
                return Err(Error::InvalidSet {
                    reason: "non-finite polyhedron data".into(),
                });
            }
        }
        let rows: Vec<lp::LpRow> = a
            .iter()
            .zip(&b)
            .map(|(coeffs, &rhs)| lp::LpRow {
                coeffs: coeffs.clone(),
                relation: lp::Relation::Le,
                rhs,
            })
            .collect();
        let seed = lp::feasible_point(&rows, dim, &vec![true; dim])?.ok_or(Error::InvalidSet {
            reason: "polyhedron is empty".into(),
        })?;
        Ok(Self::HPolyhedron(HPolyhedron { a, b, dim, seed }))
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        match self {
            Self::Singleton { point } => point.len(),
            Self::NonpositiveOrthant { dim } => *dim,
            Self::Box { lower, .. } => lower.len(),
            Self::HPolyhedron(h) => h.dim,
            Self::Ball { center, .. } => center.len(),
        }
    }

    fn check_dim(&self, x: &[f64], context: &'static str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// True iff `distance(x) ≤ tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }

    /// Euclidean point-to-set distance `d(x, S) = ‖x − project(x)‖`.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x, "distance")?;
        match self {
            Self::Singleton { point } => Ok(diff_norm(x, point)),
            Self::NonpositiveOrthant { .. } => {
                Ok(x.iter().map(|&v| v.max(0.0).powi(2)).sum::<f64>().sqrt())
            }
            Self::Box { lower, upper } => {
                let mut d = 0.0;
                for ((&v, &lo), &hi) in x.iter().zip(lower).zip(upper) {
                    let gap = if v < lo {
                        lo - v
                    } else if v > hi {
                        v - hi
                    } else {
                        0.0
                    };
                    d += gap * gap;
                }
                Ok(d.sqrt())
            }
            Self::Ball { center, radius } => Ok((diff_norm(x, center) - radius).max(0.0)),
            Self::HPolyhedron(_) => {
                let y = self.project(x)?;
                Ok(diff_norm(x, &y))
            }
        }
    }

    /// Closest point of the set to `x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x, "project")?;
        match self {
            Self::Singleton { point } => Ok(point.clone()),
            Self::NonpositiveOrthant { .. } => Ok(x.iter().map(|&v| v.min(0.0)).collect()),
            Self::Box { lower, upper } => Ok(x
                .iter()
                .zip(lower)
                .zip(upper)
                .map(|((&v, &lo), &hi)| v.max(lo).min(hi))
                .collect()),
            Self::Ball { center, radius } => {
                let d = diff_norm(x, center);
                if d <= *radius {
                    Ok(x.to_vec())
                } else {
                    let scale = radius / d;
                    Ok(center
                        .iter()
                        .zip(x)
                        .map(|(&c, &v)| c + scale * (v - c))
                        .collect())
                }
            }
            Self::HPolyhedron(h) => project_polyhedron(h, x),
        }
    }

    /// Support function `h_S(θ) = sup_{r∈S} θ·r`, possibly +∞.
    pub fn support(&self, theta: &[f64]) -> Result<Support> {
        self.check_dim(theta, "support")?;
        match self {
            Self::Singleton { point } => Ok(Support::Finite(dot(theta, point))),
            Self::NonpositiveOrthant { .. } => {
                if theta.iter().all(|&t| t >= 0.0) {
                    Ok(Support::Finite(0.0))
                } else {
                    Ok(Support::Infinite)
                }
            }
            Self::Box { lower, upper } => {
                let mut total = 0.0;
                for ((&t, &lo), &hi) in theta.iter().zip(lower).zip(upper) {
                    // A zero coefficient contributes nothing even along an
                    // unbounded side.
                    if t > 0.0 {
                        if hi == f64::INFINITY {
                            return Ok(Support::Infinite);
                        }
                        total += t * hi;
                    } else if t < 0.0 {
                        if lo == f64::NEG_INFINITY {
                            return Ok(Support::Infinite);
                        }
                        total += t * lo;
                    }
                }
                Ok(Support::Finite(total))
            }
            Self::Ball { center, radius } => {
                Ok(Support::Finite(dot(theta, center) + radius * norm(theta)))
            }
            Self::HPolyhedron(h) => {
                let problem = lp::LpProblem {
                    maximize: theta.to_vec(),
                    rows: h
                        .a
                        .iter()
                        .zip(&h.b)
                        .map(|(coeffs, &rhs)| lp::LpRow {
                            coeffs: coeffs.clone(),
                            relation: lp::Relation::Le,
                            rhs,
                        })
                        .collect(),
                    free: vec![true; h.dim],
                };
                match lp::solve_lp(&problem)? {
                    lp::LpOutcome::Optimal { value, .. } => Ok(Support::Finite(value)),
                    lp::LpOutcome::Unbounded => Ok(Support::Infinite),
                    lp::LpOutcome::Infeasible => Err(Error::InvalidSet {
                        reason: "polyhedron became infeasible after construction".into(),
                    }),
                }
            }
        }
    }

    /// A maximizing point of `θ·r` over the set. Errors when the support is
    /// +∞ in that direction. Ties are broken deterministically: boxes use
    /// the midpoint (or the finite side) on zero-coefficient coordinates,
    /// balls return the center for `θ = 0`, and polyhedra inherit the
    /// simplex pivot order.
    pub fn support_argmax(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(theta, "support_argmax")?;
        match self {
            Self::Singleton { point } => Ok(point.clone()),
            Self::NonpositiveOrthant { .. } => {
                if theta.iter().all(|&t| t >= 0.0) {
                    Ok(vec![0.0; self.dim()])
                } else {
                    Err(Error::UnboundedSupport)
                }
            }
            Self::Box { lower, upper } => {
                let mut out = Vec::with_capacity(theta.len());
                for ((&t, &lo), &hi) in theta.iter().zip(lower).zip(upper) {
                    let v = if t > 0.0 {
                        if hi == f64::INFINITY {
                            return Err(Error::UnboundedSupport);
                        }
                        hi
                    } else if t < 0.0 {
                        if lo == f64::NEG_INFINITY {
                            return Err(Error::UnboundedSupport);
                        }
                        lo
                    } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                        0.0
                    } else if lo == f64::NEG_INFINITY {
                        hi
                    } else if hi == f64::INFINITY {
                        lo
                    } else {
                        0.5 * (lo + hi)
                    };
                    out.push(v);
                }
                Ok(out)
            }
            Self::Ball { center, radius } => {
                let n = norm(theta);
                if n == 0.0 {
                    return Ok(center.clone());
                }
                Ok(center
                    .iter()
                    .zip(theta)
                    .map(|(&c, &t)| c + radius * t / n)
                    .collect())
            }
            Self::HPolyhedron(h) => {
                let problem = lp::LpProblem {
                    maximize: theta.to_vec(),
                    rows: h
                        .a
                        .iter()
                        .zip(&h.b)
                        .map(|(coeffs, &rhs)| lp::LpRow {
                            coeffs: coeffs.clone(),
                            relation: lp::Relation::Le,
                            rhs,
                        })
                        .collect(),
                    free: vec![true; h.dim],
                };
                match lp::solve_lp(&problem)? {
                    lp::LpOutcome::Optimal { x, .. } => Ok(x),
                    lp::LpOutcome::Unbounded => Err(Error::UnboundedSupport),
                    lp::LpOutcome::Infeasible => Err(Error::InvalidSet {
                        reason: "polyhedron became infeasible after construction".into(),
                    }),
                }
            }
        }
    }

    /// Signed coordinate directions along which the set is unbounded.
    #[must_use]
    pub fn quadrant_recession(&self) -> Vec<Recession> {
        match self {
            Self::Singleton { point } => vec![Recession::None; point.len()],
            Self::Ball { center, .. } => vec![Recession::None; center.len()],
            Self::NonpositiveOrthant { dim } => vec![Recession::Down; *dim],
            Self::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| match (lo == f64::NEG_INFINITY, hi == f64::INFINITY) {
                    (true, true) => Recession::Both,
                    (true, false) => Recession::Down,
                    (false, true) => Recession::Up,
                    (false, false) => Recession::None,
                })
                .collect(),
            Self::HPolyhedron(h) => (0..h.dim)
                .map(|j| {
                    // ±e_j is a recession direction iff every row satisfies
                    // ±a[i][j] ≤ 0.
                    let up = h.a.iter().all(|row| row[j] <= 1e-12);
                    let down = h.a.iter().all(|row| row[j] >= -1e-12);
                    match (up, down) {
                        (true, true) => Recession::Both,
                        (true, false) => Recession::Up,
                        (false, true) => Recession::Down,
                        (false, false) => Recession::None,
                    }
                })
                .collect(),
        }
    }

    /// An upper bound on the set's Euclidean diameter, or `None` when the
    /// set is unbounded. Exact for singletons, balls, and boxes.
    pub fn diameter_bound(&self) -> Result<Option<f64>> {
        match self {
            Self::Singleton { .. } => Ok(Some(0.0)),
            Self::Ball { radius, .. } => Ok(Some(2.0 * radius)),
            Self::NonpositiveOrthant { .. } => Ok(None),
            Self::Box { lower, upper } => {
                let mut d = 0.0;
                for (&lo, &hi) in lower.iter().zip(upper) {
                    if lo == f64::NEG_INFINITY || hi == f64::INFINITY {
                        return Ok(None);
                    }
                    d += (hi - lo) * (hi - lo);
                }
                Ok(Some(d.sqrt()))
            }
            Self::HPolyhedron(h) => {
                let mut d = 0.0;
                for j in 0..h.dim {
                    let mut e = vec![0.0; h.dim];
                    e[j] = 1.0;
                    let hi = match self.support(&e)? {
                        Support::Finite(v) => v,
                        Support::Infinite => return Ok(None),
                    };
                    e[j] = -1.0;
                    let lo = match self.support(&e)? {
                        Support::Finite(v) => -v,
                        Support::Infinite => return Ok(None),
                    };
                    d += (hi - lo) * (hi - lo);
                }
                Ok(Some(d.sqrt()))
            }
        }
    }
}

/// Removes the part of `λ` lying inside the negated recession cone, which
/// for quadrant cones zeroes exactly the coordinates whose signed component
/// along an unbounded direction is negative: `λ̃ = λ − Proj_{−D_S}(λ)`.
///
/// A coordinate along which the set recedes upward keeps only its positive
/// part, one receding downward keeps only its negative part, and a
/// two-sided coordinate is zeroed entirely.
pub fn steer_unbounded(lambda: &[f64], set: &TargetSet) -> Result<Vec<f64>> {
    if lambda.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            context: "steer_unbounded",
            expected: set.dim(),
            got: lambda.len(),
        });
    }
    Ok(clamp_recession(lambda, &set.quadrant_recession()))
}

/// Coordinate-list form of [`steer_unbounded`], shared with graph targets
/// whose recession structure is known per coordinate.
#[must_use]
pub fn clamp_recession(lambda: &[f64], recession: &[Recession]) -> Vec<f64> {
    lambda
        .iter()
        .zip(recession)
        .map(|(&v, r)| match r {
            Recession::None => v,
            Recession::Up => v.max(0.0),
            Recession::Down => v.min(0.0),
            Recession::Both => 0.0,
        })
        .collect()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Exact Euclidean projection onto `{x : Ax ≤ b}` by primal active-set
/// iteration: repeatedly project onto the affine hull of the working set,
/// step to the first blocking constraint, and drop working constraints with
/// negative multipliers until the KKT conditions hold.
fn project_polyhedron(h: &HPolyhedron, x: &[f64]) -> Result<Vec<f64>> {
    let m = h.a.len();
    let feasible = |y: &[f64]| {
        h.a.iter()
            .zip(&h.b)
            .all(|(row, &rhs)| dot(row, y) <= rhs + 1e-10)
    };
    if feasible(x) {
        return Ok(x.to_vec());
    }

    let mut y = h.seed.clone();
    let mut working: Vec<usize> = (0..m)
        .filter(|&i| (dot(&h.a[i], &y) - h.b[i]).abs() <= 1e-10)
        .collect();

    let cap = 100 + 20 * m;
    for _ in 0..cap {
        // Equality-constrained projection of x onto {a_i·y = b_i, i ∈ W}.
        let (candidate, mu) = loop {
            match affine_projection(h, &working, x) {
                Some(result) => break result,
                None => {
                    // Dependent working set; the most recent addition is
                    // redundant.
                    working.pop();
                }
            }
        };

        // Step from y toward the candidate up to the first blocking row.
        let step: Vec<f64> = candidate.iter().zip(&y).map(|(c, v)| c - v).collect();
        let mut t_max = 1.0_f64;
        let mut blocking = None;
        for i in 0..m {
            if working.contains(&i) {
                continue;
            }
            let advance = dot(&h.a[i], &step);
            if advance > 1e-12 {
                let slack = h.b[i] - dot(&h.a[i], &y);
                let t = slack / advance;
                if t < t_max - 1e-12 {
                    t_max = t;
                    blocking = Some(i);
                }
            }
        }

        if let Some(i) = blocking {
            for (v, s) in y.iter_mut().zip(&step) {
                *v += t_max * s;
            }
            working.push(i);
            continue;
        }

        y = candidate;
        // KKT: multipliers of inequality rows must be nonnegative.
        if let Some((idx_in_working, _)) = mu
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < -1e-10)
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        {
            working.remove(idx_in_working);
            continue;
        }
        return Ok(y);
    }
    Err(Error::IterationLimit { limit: cap })
}

/// Projects `x` onto the affine subspace `{y : a_i·y = b_i, i ∈ working}`.
/// Returns the projection and the multipliers, or `None` when the working
/// rows are linearly dependent.
fn affine_projection(
    h: &HPolyhedron,
    working: &[usize],
    x: &[f64],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let w = working.len();
    if w == 0 {
        return Some((x.to_vec(), Vec::new()));
    }
    // Normal equations: (A_W A_Wᵀ) μ = A_W x − b_W, y = x − A_Wᵀ μ.
    let mut gram = vec![vec![0.0; w + 1]; w];
    for (r, &i) in working.iter().enumerate() {
        for (c, &j) in working.iter().enumerate() {
            gram[r][c] = dot(&h.a[i], &h.a[j]);
        }
        gram[r][w] = dot(&h.a[i], x) - h.b[i];
    }
    let mu = solve_dense(&mut gram)?;
    let mut y = x.to_vec();
    for (r, &i) in working.iter().enumerate() {
        for (v, &a) in y.iter_mut().zip(&h.a[i]) {
            *v -= mu[r] * a;
        }
    }
    Some((y, mu))
}

/// Gaussian elimination with partial pivoting on an augmented system.
/// Returns `None` for (numerically) singular systems.
fn solve_dense(aug: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = aug.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())?;
        if aug[pivot_row][col].abs() < 1e-12 {
            return None;
        }
        aug.swap(col, pivot_row);
        for r in 0..n {
            if r != col {
                let f = aug[r][col] / aug[col][col];
                if f != 0.0 {
                    #[allow(clippy::needless_range_loop)]
                    for c in col..=n {
                        let sub = f * aug[col][c];
                        aug[r][c] -= sub;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| aug[i][n] / aug[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_close(*x, *y, tol);
        }
    }

    #[test]
    fn orthant_membership_and_distance() {
        let s = TargetSet::nonpositive_orthant(2).unwrap();
        assert!(s.contains(&[-1.0, -1.0], 0.0).unwrap());
        assert_close(s.distance(&[1.0, -2.0]).unwrap(), 1.0, 1e-15);
        assert_vec_close(&s.project(&[1.0, -2.0]).unwrap(), &[0.0, -2.0], 1e-15);
    }

    #[test]
    fn ball_membership_distance_projection() {
        let s = TargetSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(!s.contains(&[0.0, 2.0], 0.0).unwrap());
        assert_close(s.distance(&[3.0, 4.0]).unwrap(), 4.0, 1e-15);
        assert_vec_close(&s.project(&[3.0, 4.0]).unwrap(), &[0.6, 0.8], 1e-15);
    }

    #[test]
    fn singleton_distance_is_norm() {
        let s = TargetSet::singleton(vec![1.0, -1.0]).unwrap();
        assert_close(s.distance(&[4.0, 3.0]).unwrap(), 5.0, 1e-15);
        assert_vec_close(&s.project(&[9.0, 9.0]).unwrap(), &[1.0, -1.0], 1e-15);
    }

    #[test]
    fn polyhedron_boundary_membership() {
        let s = TargetSet::hpolyhedron(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        assert!(s.contains(&[0.5, 0.5], 0.0).unwrap());
        assert!(!s.contains(&[0.8, 0.8], 1e-3).unwrap());
    }

    #[test]
    fn halfspace_projection_matches_formula() {
        // Projection onto {x₁ + x₂ ≤ 0} from (1,1) is x − ((a·x − b)/‖a‖²) a.
        let s = TargetSet::hpolyhedron(vec![vec![1.0, 1.0]], vec![0.0]).unwrap();
        assert_vec_close(&s.project(&[1.0, 1.0]).unwrap(), &[0.0, 0.0], 1e-12);
    }

    #[test]
    fn box_projection_clamps_coordinates() {
        let s = TargetSet::box_bounds(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_vec_close(&s.project(&[2.0, -3.0]).unwrap(), &[1.0, 0.0], 1e-15);
        assert_close(s.distance(&[2.0, 0.5]).unwrap(), 1.0, 1e-15);
    }

    #[test]
    fn corner_projection_on_a_square() {
        let s = TargetSet::hpolyhedron(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        // The nearest point to (2, 3) in the unit square is the corner (1, 1).
        assert_vec_close(&s.project(&[2.0, 3.0]).unwrap(), &[1.0, 1.0], 1e-9);
        assert_vec_close(&s.project(&[0.5, 0.5]).unwrap(), &[0.5, 0.5], 1e-12);
        assert_vec_close(&s.project(&[0.5, -2.0]).unwrap(), &[0.5, 0.0], 1e-9);
    }

    #[test]
    fn support_of_basic_shapes() {
        let c = TargetSet::singleton(vec![2.0, -1.0]).unwrap();
        assert_eq!(c.support(&[1.0, 1.0]).unwrap(), Support::Finite(1.0));

        let b = TargetSet::ball(vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(b.support(&[3.0, 4.0]).unwrap(), Support::Finite(10.0));

        let o = TargetSet::nonpositive_orthant(2).unwrap();
        assert_eq!(o.support(&[1.0, 1.0]).unwrap(), Support::Finite(0.0));
        assert_eq!(o.support(&[-1.0, 1.0]).unwrap(), Support::Infinite);
    }

    #[test]
    fn support_argmax_of_basic_shapes() {
        let c = TargetSet::singleton(vec![2.0, -1.0]).unwrap();
        assert_vec_close(&c.support_argmax(&[5.0, 5.0]).unwrap(), &[2.0, -1.0], 1e-15);

        let b = TargetSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_vec_close(&b.support_argmax(&[3.0, 4.0]).unwrap(), &[0.6, 0.8], 1e-15);

        let s = TargetSet::box_bounds(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_vec_close(&s.support_argmax(&[1.0, -1.0]).unwrap(), &[1.0, 0.0], 1e-15);
    }

    #[test]
    fn polyhedron_support_is_an_lp() {
        let s = TargetSet::hpolyhedron(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(s.support(&[1.0, 1.0]).unwrap(), Support::Finite(2.0));
        let half = TargetSet::hpolyhedron(vec![vec![1.0, 1.0]], vec![0.0]).unwrap();
        assert_eq!(half.support(&[-1.0, -1.0]).unwrap(), Support::Infinite);
    }

    #[test]
    fn recession_of_each_kind() {
        let o = TargetSet::nonpositive_orthant(2).unwrap();
        assert_eq!(o.quadrant_recession(), vec![Recession::Down, Recession::Down]);

        let b = TargetSet::box_bounds(
            vec![f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY],
            vec![1.0, f64::INFINITY, f64::INFINITY],
        )
        .unwrap();
        assert_eq!(
            b.quadrant_recession(),
            vec![Recession::Down, Recession::Up, Recession::Both]
        );

        let ball = TargetSet::ball(vec![0.0], 1.0).unwrap();
        assert_eq!(ball.quadrant_recession(), vec![Recession::None]);

        // {x₂ ≤ 1} is unbounded both ways in x₁ and downward in x₂.
        let h = TargetSet::hpolyhedron(vec![vec![0.0, 1.0]], vec![1.0]).unwrap();
        assert_eq!(h.quadrant_recession(), vec![Recession::Both, Recession::Down]);
    }

    #[test]
    fn steering_clamp_on_compact_sets_is_identity() {
        let s = TargetSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_vec_close(
            &steer_unbounded(&[1.0, -2.0], &s).unwrap(),
            &[1.0, -2.0],
            1e-15,
        );
    }

    #[test]
    fn steering_clamp_zeroes_negative_part_along_upward_recession() {
        // Unbounded upward in coordinate 1: a negative first coordinate of λ
        // would steer into the recession cone and is dropped.
        let s = TargetSet::box_bounds(vec![0.0, 0.0], vec![f64::INFINITY, 1.0]).unwrap();
        assert_vec_close(
            &steer_unbounded(&[-0.3, 0.5], &s).unwrap(),
            &[0.0, 0.5],
            1e-15,
        );
    }

    #[test]
    fn steering_clamp_on_nonpositive_orthant_keeps_negative_parts() {
        // The orthant recedes downward, so −D_S is the nonnegative quadrant
        // and the positive part of λ is removed: the surviving coordinates
        // are the ones still pushing the average toward the set.
        let s = TargetSet::nonpositive_orthant(2).unwrap();
        assert_vec_close(
            &steer_unbounded(&[0.2, -0.4], &s).unwrap(),
            &[0.0, -0.4],
            1e-15,
        );
    }

    #[test]
    fn steering_clamp_never_grows_the_direction() {
        let s = TargetSet::box_bounds(vec![f64::NEG_INFINITY], vec![0.0]).unwrap();
        let clamped = steer_unbounded(&[0.7], &s).unwrap();
        assert!(norm(&clamped) <= norm(&[0.7]));
        assert_vec_close(&clamped, &[0.0], 1e-15);
    }

    #[test]
    fn diameter_bounds() {
        assert_eq!(
            TargetSet::singleton(vec![1.0]).unwrap().diameter_bound().unwrap(),
            Some(0.0)
        );
        assert_eq!(
            TargetSet::ball(vec![0.0], 0.25).unwrap().diameter_bound().unwrap(),
            Some(0.5)
        );
        assert_eq!(
            TargetSet::nonpositive_orthant(3).unwrap().diameter_bound().unwrap(),
            None
        );
        let square = TargetSet::hpolyhedron(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert_close(square.diameter_bound().unwrap().unwrap(), 2f64.sqrt(), 1e-12);
    }

    #[test]
    fn empty_polyhedron_is_rejected() {
        let err = TargetSet::hpolyhedron(vec![vec![1.0], vec![-1.0]], vec![-1.0, -1.0]);
        assert!(err.is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let sets = [
            TargetSet::nonpositive_orthant(3).unwrap(),
            TargetSet::ball(vec![1.0, 2.0, 3.0], 0.5).unwrap(),
            TargetSet::box_bounds(vec![0.0, -1.0, 2.0], vec![1.0, 1.0, 2.0]).unwrap(),
        ];
        let x = [5.0, -3.0, 2.5];
        for s in &sets {
            let once = s.project(&x).unwrap();
            let twice = s.project(&once).unwrap();
            assert_vec_close(&once, &twice, 1e-12);
        }
    }
}
