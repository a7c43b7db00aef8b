//! LP relaxations: a bounded-variable primal simplex, KKT verification, and
//! the minimum-ℓ2-norm point of the optimal face.

mod dense;
mod kkt;
mod min_norm;
mod simplex;

use thiserror::Error;

use crate::instance::{Bound, MilpInstance};

pub use kkt::check_kkt;
pub use min_norm::{min_norm_from_point, min_norm_solution, MinNormSolution};

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;
/// Optimality tolerance on reduced costs and objective values.
pub const OPT_TOL: f64 = 1e-9;
/// Bound on the KKT residual of a reported optimum.
pub const KKT_TOL: f64 = 1e-8;
/// Slack allowed when comparing norms of optimal points.
pub const NORM_TOL: f64 = 1e-7;
/// Pivots allowed per unit of `m + n` before the solve is abandoned.
pub const PIVOT_CAP_FACTOR: usize = 50;

/// Replaces the bounds of one variable, as in a branching child.
/// `lower > upper` is allowed and makes the LP infeasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOverride {
    pub var: usize,
    pub lower: Bound,
    pub upper: Bound,
}

/// Lagrange multipliers of an LP optimum.
///
/// Sign convention: `c = A' rows + bounds`, with `rows[i] >= 0` on `>=` rows,
/// `<= 0` on `<=` rows, and `bounds[j] > 0` only at a lower bound, `< 0` only
/// at an upper bound (the reduced costs).
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub rows: Vec<f64>,
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub multipliers: Multipliers,
    /// Largest violation of a row or bound at `x`.
    pub primal_residual: f64,
    /// `check_kkt` at `(x, multipliers)`.
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Lower bound `b'y + l'z+ - u'z-` implied by the multipliers.
    pub dual_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn objective(&self) -> Option<f64> {
        self.optimal().map(|s| s.objective)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex exceeded the pivot cap of {cap} iterations")]
    PivotCap { cap: usize },
    #[error("basis matrix became numerically singular")]
    SingularBasis,
    #[error("bound override names variable {var}, but the LP has {n} variables")]
    BadOverride { var: usize, n: usize },
    #[error("optimal face is empty at objective value {f_star}")]
    InconsistentFace { f_star: f64 },
    #[error("minimum-norm active-set method exceeded {cap} iterations")]
    ActiveSetCap { cap: usize },
}

/// Solves the LP relaxation of `inst`, optionally with one variable's bounds
/// replaced. Integrality is ignored.
pub fn solve_lp(inst: &MilpInstance, bound_override: Option<&BoundOverride>) -> Result<LpOutcome, LpError> {
    let n = inst.n();
    let mut lower: Vec<f64> = inst.lower().iter().map(|b| b.value()).collect();
    let mut upper: Vec<f64> = inst.upper().iter().map(|b| b.value()).collect();
    if let Some(o) = bound_override {
        if o.var >= n {
            return Err(LpError::BadOverride { var: o.var, n });
        }
        lower[o.var] = o.lower.value();
        upper[o.var] = o.upper.value();
        if lower[o.var] > upper[o.var] || lower[o.var] == f64::INFINITY || upper[o.var] == f64::NEG_INFINITY {
            return Ok(LpOutcome::Infeasible);
        }
    }
    simplex::solve(inst, &lower, &upper)
}

/// Variable bounds as extended reals.
pub(crate) fn bounds_of(inst: &MilpInstance) -> (Vec<f64>, Vec<f64>) {
    (
        inst.lower().iter().map(|b| b.value()).collect(),
        inst.upper().iter().map(|b| b.value()).collect(),
    )
}
