//! Dense simplex solvers sized for desk-scale games.
//!
//! Two entry points:
//!
//! * [`matrix_game`] solves the zero-sum matrix game `max_p min_q p·M·q`
//!   exactly, returning both players' optimal mixed strategies. It reduces
//!   the game to a single primal LP whose slack basis is immediately
//!   feasible, so no phase-1 work is ever needed on this path.
//! * [`solve_lp`] is a general two-phase tableau simplex for the handful of
//!   small LPs elsewhere in the crate (polyhedron support functions,
//!   feasibility seeds, constrained best responses).
//!
//! Both use Bland's anti-cycling pivot rule, so every solve terminates and
//! is deterministic for identical inputs.

use crate::{Error, Result};

/// Pivot budget shared by each solve. Exceeding it is reported as an
/// internal solver failure, never silently truncated.
pub const PIVOT_LIMIT: usize = 20_000;

/// Entering-candidate threshold on reduced costs.
const REDUCED_COST_TOL: f64 = 1e-9;
/// Minimum usable pivot magnitude.
const PIVOT_TOL: f64 = 1e-11;
/// Phase-1 residual above which the program is declared infeasible.
const FEAS_TOL: f64 = 1e-8;

/// Constraint sense for [`LpRow`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One linear constraint `coeffs · x {≤,≥,=} rhs`.
#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program `max maximize · x` subject to [`LpRow`]s, with each
/// variable either nonnegative (default) or free.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub maximize: Vec<f64>,
    pub rows: Vec<LpRow>,
    /// Per-variable freeness; `free[i] = false` means `x[i] ≥ 0`. Must have
    /// the same length as `maximize`.
    pub free: Vec<bool>,
}

/// Result of [`solve_lp`].
#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// Optimal strategies and value of a zero-sum matrix game.
#[derive(Clone, Debug)]
pub struct MatrixGameSolution {
    /// Game value for the row player (maximizer).
    pub value: f64,
    /// Row player's optimal mixed strategy.
    pub row_strategy: Vec<f64>,
    /// Column player's optimal mixed strategy.
    pub col_strategy: Vec<f64>,
}

/// Solves `max_p min_q p·M·q` for a finite matrix `M` where the row player
/// maximizes and the column player minimizes.
///
/// The game is shifted so every entry is at least 1 (value shifts by the
/// same constant, strategies are unchanged), then reduced to
/// `max Σy  s.t.  M'y ≤ 1, y ≥ 0`, whose optimum recovers the column
/// strategy from `y` and the row strategy from the duals under the slack
/// columns.
pub fn matrix_game(payoff: &[Vec<f64>]) -> Result<MatrixGameSolution> {
    let m = payoff.len();
    if m == 0 {
        return Err(Error::InvalidGame {
            reason: "matrix game has no rows".into(),
        });
    }
    let k = payoff[0].len();
    if k == 0 {
        return Err(Error::InvalidGame {
            reason: "matrix game has no columns".into(),
        });
    }
    let mut min_entry = f64::INFINITY;
    for row in payoff {
        if row.len() != k {
            return Err(Error::InvalidGame {
                reason: "ragged matrix game".into(),
            });
        }
        for &v in row {
            if !v.is_finite() {
                return Err(Error::InvalidGame {
                    reason: "non-finite matrix entry".into(),
                });
            }
            min_entry = min_entry.min(v);
        }
    }
    let shift = 1.0 - min_entry;

    // Tableau columns: k structural y variables, then m slacks, then rhs.
    let cols = k + m;
    let mut tab = vec![vec![0.0_f64; cols + 1]; m];
    for (i, row) in payoff.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            tab[i][j] = v + shift;
        }
        tab[i][k + i] = 1.0;
        tab[i][cols] = 1.0;
    }
    // Objective row holds z_j − c_j; entering candidates are negative
    // entries. c = 1 on structural columns.
    let mut obj = vec![0.0_f64; cols + 1];
    #[allow(clippy::needless_range_loop)]
    for j in 0..k {
        obj[j] = -1.0;
    }
    let mut basis: Vec<usize> = (k..cols).collect();

    let mut pivots = 0usize;
    loop {
        // Bland: lowest-index improving column.
        let mut entering = None;
        for (j, &rc) in obj.iter().take(cols).enumerate() {
            if rc < -REDUCED_COST_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else { break };

        // Min-ratio leaving row; ties broken by lowest basic-variable index.
        let mut leaving: Option<(usize, f64)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[e] > PIVOT_TOL {
                let ratio = row[cols] / row[e];
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOL
                            || (ratio < lr + PIVOT_TOL && basis[i] < basis[li])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((l, _)) = leaving else {
            return Err(Error::Unbounded {
                context: "matrix game reduction (cannot happen for positive matrices)".into(),
            });
        };

        pivot(&mut tab, &mut obj, l, e);
        basis[l] = e;
        pivots += 1;
        if pivots > PIVOT_LIMIT {
            return Err(Error::IterationLimit { limit: PIVOT_LIMIT });
        }
    }

    // Σy = 1/v' where v' is the shifted game value.
    let total = obj[cols];
    if total <= 0.0 || total.is_nan() {
        return Err(Error::Certificate {
            gap: total,
            tol: 0.0,
        });
    }
    let shifted_value = 1.0 / total;

    let mut y = vec![0.0_f64; k];
    for (i, &b) in basis.iter().enumerate() {
        if b < k {
            y[b] = tab[i][cols];
        }
    }
    let col_strategy = normalize_probs(y.iter().map(|v| v * shifted_value).collect())?;
    // Duals of the ≤ rows sit in the objective row under the slack columns.
    let row_strategy =
        normalize_probs((0..m).map(|i| obj[k + i] * shifted_value).collect())?;

    Ok(MatrixGameSolution {
        value: shifted_value - shift,
        row_strategy,
        col_strategy,
    })
}

/// Solves a general small LP by the two-phase tableau simplex with Bland's
/// rule. Free variables are split into positive and negative parts.
pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome> {
    let n = problem.maximize.len();
    if problem.free.len() != n {
        return Err(Error::DimensionMismatch {
            context: "LpProblem.free",
            expected: n,
            got: problem.free.len(),
        });
    }
    for row in &problem.rows {
        if row.coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                context: "LpRow.coeffs",
                expected: n,
                got: row.coeffs.len(),
            });
        }
    }

    // Column layout: for each variable, one column (nonneg) or a (+,−) pair
    // (free); then one slack/surplus column per inequality row; then one
    // artificial column per Ge/Eq row.
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0usize;
    for &f in &problem.free {
        if f {
            var_cols.push((ncols, Some(ncols + 1)));
            ncols += 2;
        } else {
            var_cols.push((ncols, None));
            ncols += 1;
        }
    }
    let m = problem.rows.len();
    let slack_base = ncols;
    let n_slack = problem
        .rows
        .iter()
        .filter(|r| r.relation != Relation::Eq)
        .count();
    let art_base = slack_base + n_slack;

    // Count artificials after rhs-sign normalization: a Le row with negative
    // rhs becomes Ge and needs one, as does every Ge/Eq row.
    let mut n_art = 0usize;
    let mut normalized: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
    for row in &problem.rows {
        let mut coeffs = row.coeffs.clone();
        let mut rel = row.relation;
        let mut rhs = row.rhs;
        if rhs < 0.0 {
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        if rel != Relation::Le {
            n_art += 1;
        }
        normalized.push((coeffs, rel, rhs));
    }
    let total_cols = art_base + n_art;

    let mut tab = vec![vec![0.0_f64; total_cols + 1]; m];
    let mut basis = vec![usize::MAX; m];
    let mut slack_idx = 0usize;
    let mut art_idx = 0usize;
    for (i, (coeffs, rel, rhs)) in normalized.iter().enumerate() {
        for (v, &(cpos, cneg)) in var_cols.iter().enumerate() {
            tab[i][cpos] = coeffs[v];
            if let Some(cn) = cneg {
                tab[i][cn] = -coeffs[v];
            }
        }
        match rel {
            Relation::Le => {
                tab[i][slack_base + slack_idx] = 1.0;
                basis[i] = slack_base + slack_idx;
                slack_idx += 1;
            }
            Relation::Ge => {
                tab[i][slack_base + slack_idx] = -1.0;
                slack_idx += 1;
                tab[i][art_base + art_idx] = 1.0;
                basis[i] = art_base + art_idx;
                art_idx += 1;
            }
            Relation::Eq => {
                tab[i][art_base + art_idx] = 1.0;
                basis[i] = art_base + art_idx;
                art_idx += 1;
            }
        }
        tab[i][total_cols] = *rhs;
    }

    let mut pivots = 0usize;

    // Phase 1: maximize −Σ artificials.
    if n_art > 0 {
        let mut phase1_cost = vec![0.0_f64; total_cols];
        #[allow(clippy::needless_range_loop)]
        for j in art_base..total_cols {
            phase1_cost[j] = -1.0;
        }
        let mut obj = reduced_costs(&tab, &basis, &phase1_cost, total_cols);
        run_simplex(
            &mut tab,
            &mut obj,
            &mut basis,
            total_cols,
            total_cols,
            &mut pivots,
        )?;
        if obj[total_cols] < -FEAS_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        // Pivot surviving artificials out of the basis where the row has any
        // usable structural or slack coefficient; all-zero rows are
        // redundant and stay parked on their zero-valued artificial.
        for i in 0..m {
            if basis[i] >= art_base {
                if let Some(e) = (0..art_base).find(|&j| tab[i][j].abs() > PIVOT_TOL) {
                    pivot(&mut tab, &mut obj, i, e);
                    basis[i] = e;
                }
            }
        }
    }

    // Phase 2: original objective over structural columns, artificials
    // locked out of the eligible range.
    let mut phase2_cost = vec![0.0_f64; total_cols];
    for (v, &(cpos, cneg)) in var_cols.iter().enumerate() {
        phase2_cost[cpos] = problem.maximize[v];
        if let Some(cn) = cneg {
            phase2_cost[cn] = -problem.maximize[v];
        }
    }
    let mut obj = reduced_costs(&tab, &basis, &phase2_cost, total_cols);
    let bounded = run_simplex(&mut tab, &mut obj, &mut basis, art_base, total_cols, &mut pivots)?;
    if !bounded {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0_f64; n];
    for (i, &b) in basis.iter().enumerate() {
        let val = tab[i][total_cols];
        for (v, &(cpos, cneg)) in var_cols.iter().enumerate() {
            if b == cpos {
                x[v] += val;
            } else if Some(b) == cneg {
                x[v] -= val;
            }
        }
    }
    Ok(LpOutcome::Optimal {
        x,
        value: obj[total_cols],
    })
}

/// Finds any point satisfying the rows, or `None` when the system is
/// infeasible. Used to seed polyhedron projections.
pub fn feasible_point(rows: &[LpRow], n_vars: usize, free: &[bool]) -> Result<Option<Vec<f64>>> {
    let problem = LpProblem {
        maximize: vec![0.0; n_vars],
        rows: rows.to_vec(),
        free: free.to_vec(),
    };
    match solve_lp(&problem)? {
        LpOutcome::Optimal { x, .. } => Ok(Some(x)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Unbounded {
            context: "feasibility phase with zero objective".into(),
        }),
    }
}

/// Recomputes the reduced-cost row `z_j − c_j` for the current basis.
fn reduced_costs(
    tab: &[Vec<f64>],
    basis: &[usize],
    cost: &[f64],
    total_cols: usize,
) -> Vec<f64> {
    let mut obj = vec![0.0_f64; total_cols + 1];
    for j in 0..total_cols {
        obj[j] = -cost[j];
    }
    for (i, &b) in basis.iter().enumerate() {
        let cb = cost[b];
        if cb != 0.0 {
            for j in 0..=total_cols {
                obj[j] += cb * tab[i][j];
            }
        }
    }
    obj
}

/// Runs Bland-rule primal simplex iterations until optimal or unbounded.
/// Columns at index `eligible_cols` and beyond may not enter the basis.
/// Returns `false` when an unbounded ray is detected.
fn run_simplex(
    tab: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    eligible_cols: usize,
    total_cols: usize,
    pivots: &mut usize,
) -> Result<bool> {
    loop {
        let mut entering = None;
        #[allow(clippy::needless_range_loop)]
        for j in 0..eligible_cols {
            if obj[j] < -REDUCED_COST_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else { return Ok(true) };

        let mut leaving: Option<(usize, f64)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[e] > PIVOT_TOL {
                let ratio = row[total_cols] / row[e];
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOL
                            || (ratio < lr + PIVOT_TOL && basis[i] < basis[li])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((l, _)) = leaving else {
            return Ok(false);
        };

        pivot(tab, obj, l, e);
        basis[l] = e;
        *pivots += 1;
        if *pivots > PIVOT_LIMIT {
            return Err(Error::IterationLimit { limit: PIVOT_LIMIT });
        }
    }
}

/// Gauss-Jordan pivot on `tab[l][e]`, updating the objective row alongside.
fn pivot(tab: &mut [Vec<f64>], obj: &mut [f64], l: usize, e: usize) {
    let piv = tab[l][e];
    for v in tab[l].iter_mut() {
        *v /= piv;
    }
    let pivot_row = tab[l].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i != l {
            let factor = row[e];
            if factor != 0.0 {
                for (v, &pv) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= factor * pv;
                }
            }
        }
    }
    let factor = obj[e];
    if factor != 0.0 {
        for (v, &pv) in obj.iter_mut().zip(pivot_row.iter()) {
            *v -= factor * pv;
        }
    }
}

/// Clamps tiny negative entries to zero and rescales to sum exactly 1.
pub(crate) fn normalize_probs(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    for v in probs.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-7 {
                return Err(Error::InvalidProbabilities {
                    reason: format!("solver produced negative probability {v:.3e}"),
                });
            }
            *v = 0.0;
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidProbabilities {
            reason: format!("solver strategy sums to {sum}"),
        });
    }
    for v in probs.iter_mut() {
        *v /= sum;
    }
    Ok(probs)
}
