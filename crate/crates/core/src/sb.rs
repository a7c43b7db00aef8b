//! Strong-branching scores.
//!
//! For an integer variable `j` with value `x*_j` in the minimum-norm LP
//! optimum, the down child replaces its upper bound by `floor(x*_j)` and the
//! up child replaces its lower bound by `ceil(x*_j)`. The objective increases
//! of the two children are combined by a [`ScoreRule`]; an infeasible child
//! counts as `+inf`, stored as the sentinel `-1`. Continuous variables score 0.

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::instance::{Bound, MilpInstance};
use crate::lp::{min_norm_from_point, solve_lp, BoundOverride, LpError, LpOutcome, NORM_TOL};

/// Value stored in place of an infinite score.
pub const INFINITE_SCORE: f64 = -1.0;

/// Combines the down and up objective increases into one score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreRule {
    /// `Δ_down · Δ_up`.
    Product,
    /// `(1 - μ) · min(Δ_down, Δ_up) + μ · max(Δ_down, Δ_up)`.
    Linear { mu: f64 },
}

impl Default for ScoreRule {
    fn default() -> Self {
        ScoreRule::Product
    }
}

impl ScoreRule {
    /// Score of a pair of increases; any infinite side gives the sentinel.
    pub fn combine(self, down: f64, up: f64) -> f64 {
        if down == f64::INFINITY || up == f64::INFINITY {
            return INFINITE_SCORE;
        }
        match self {
            ScoreRule::Product => down * up,
            ScoreRule::Linear { mu } => (1.0 - mu) * down.min(up) + mu * down.max(up),
        }
    }
}

impl fmt::Display for ScoreRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreRule::Product => write!(f, "product"),
            ScoreRule::Linear { mu } => write!(f, "linear:{mu}"),
        }
    }
}

impl FromStr for ScoreRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "product" {
            return Ok(ScoreRule::Product);
        }
        if let Some(mu) = s.strip_prefix("linear:") {
            let mu: f64 = mu.parse().map_err(|_| format!("bad weight in `{s}`"))?;
            if !(0.0..=1.0).contains(&mu) {
                return Err(format!("linear weight {mu} outside [0, 1]"));
            }
            return Ok(ScoreRule::Linear { mu });
        }
        Err(format!("unknown score rule `{s}` (expected `product` or `linear:<mu>`)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbOptions {
    pub rule: ScoreRule,
    /// Min-norm values within this distance of an integer are rounded to it
    /// before taking floor and ceiling.
    pub snap_tol: f64,
}

impl Default for SbOptions {
    fn default() -> Self {
        SbOptions {
            rule: ScoreRule::Product,
            snap_tol: 1e-9,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SbError {
    #[error("LP relaxation is infeasible; strong-branching scores are undefined")]
    RelaxationInfeasible,
    #[error("LP relaxation is unbounded; strong-branching scores are undefined")]
    RelaxationUnbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("branching on variable {var} lowered the LP optimum by {drop}")]
    NonMonotone { var: usize, drop: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbScores {
    pub scores: Vec<f64>,
    pub f_star: f64,
    /// Minimum-norm optimum of the relaxation.
    pub x_star: Vec<f64>,
    /// `(Δ_down, Δ_up)` for integer variables, `None` for continuous ones.
    pub deltas: Vec<Option<(f64, f64)>>,
}

fn json_real(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        serde_json::Value::from("+inf")
    } else {
        serde_json::Value::from(v)
    }
}

impl Serialize for SbScores {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let deltas: Vec<serde_json::Value> = self
            .deltas
            .iter()
            .map(|d| match d {
                Some((down, up)) => serde_json::Value::Array(vec![json_real(*down), json_real(*up)]),
                None => serde_json::Value::Null,
            })
            .collect();
        let mut s = serializer.serialize_struct("SbScores", 4)?;
        s.serialize_field("f_star", &self.f_star)?;
        s.serialize_field("x_star", &self.x_star)?;
        s.serialize_field("scores", &self.scores)?;
        s.serialize_field("deltas", &deltas)?;
        s.end()
    }
}

/// Floor and ceiling of each value after snapping near-integers.
pub fn branch_points(x: &[f64], snap_tol: f64) -> Vec<(f64, f64)> {
    x.iter()
        .map(|&v| {
            let r = v.round();
            let v = if (v - r).abs() <= snap_tol { r } else { v };
            (v.floor(), v.ceil())
        })
        .collect()
}

pub fn sb_scores(inst: &MilpInstance, rule: ScoreRule) -> Result<SbScores, SbError> {
    sb_scores_with(inst, &SbOptions { rule, ..SbOptions::default() })
}

pub fn sb_scores_with(inst: &MilpInstance, opts: &SbOptions) -> Result<SbScores, SbError> {
    let root = match solve_lp(inst, None)? {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible => return Err(SbError::RelaxationInfeasible),
        LpOutcome::Unbounded => return Err(SbError::RelaxationUnbounded),
    };
    let f_star = root.objective;
    let x_star = min_norm_from_point(inst, f_star, &root.x)?.x;
    let points = branch_points(&x_star, opts.snap_tol);
    let slack = NORM_TOL * f_star.abs().max(1.0);

    let mut scores = vec![0.0; inst.n()];
    let mut deltas = vec![None; inst.n()];
    for j in 0..inst.n() {
        if !inst.integer()[j] {
            continue;
        }
        let (floor, ceil) = points[j];
        let down = BoundOverride {
            var: j,
            lower: inst.lower()[j],
            upper: Bound::Finite(floor),
        };
        let up = BoundOverride {
            var: j,
            lower: Bound::Finite(ceil),
            upper: inst.upper()[j],
        };
        let mut pair = [0.0; 2];
        for (slot, o) in pair.iter_mut().zip([down, up]) {
            *slot = match solve_lp(inst, Some(&o))? {
                LpOutcome::Infeasible => f64::INFINITY,
                // a child has a smaller feasible set than a bounded parent
                LpOutcome::Unbounded => return Err(SbError::NonMonotone { var: j, drop: f64::INFINITY }),
                LpOutcome::Optimal(sol) => {
                    let d = sol.objective - f_star;
                    if d < -slack {
                        return Err(SbError::NonMonotone { var: j, drop: -d });
                    }
                    d.max(0.0)
                }
            };
        }
        scores[j] = opts.rule.combine(pair[0], pair[1]);
        deltas[j] = Some((pair[0], pair[1]));
    }
    Ok(SbScores {
        scores,
        f_star,
        x_star,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::counterexample_pair;
    use crate::instance::{Entry, InstanceParts, Sense};

    #[test]
    fn counterexample_scores() {
        let (g7, g8) = counterexample_pair();
        let s7 = sb_scores(&g7, ScoreRule::Product).unwrap();
        assert!(s7.scores.iter().all(|v| v.abs() <= 1e-9), "{:?}", s7.scores);
        let s8 = sb_scores(&g8, ScoreRule::Product).unwrap();
        let want = [0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.0, 0.0];
        for (got, want) in s8.scores.iter().zip(want) {
            assert!((got - want).abs() <= 1e-9, "{:?}", s8.scores);
        }
    }

    #[test]
    fn no_integer_variables_scores_zero() {
        let (g7, _) = counterexample_pair();
        let mut parts = g7.into_parts();
        parts.integer = vec![false; 8];
        let s = sb_scores(&MilpInstance::new(parts).unwrap(), ScoreRule::Product).unwrap();
        assert_eq!(s.scores, vec![0.0; 8]);
        assert!(s.deltas.iter().all(|d| d.is_none()));
    }

    fn one_row(c: Vec<f64>, row: Vec<f64>, b: f64, sense: Sense, lo: f64, up: f64, integer: Vec<bool>) -> MilpInstance {
        let n = c.len();
        MilpInstance::new(InstanceParts {
            m: 1,
            n,
            c,
            b: vec![b],
            senses: vec![sense],
            lower: vec![Bound::Finite(lo); n],
            upper: vec![Bound::Finite(up); n],
            integer,
            entries: row
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(col, &value)| Entry { row: 0, col, value })
                .collect(),
        })
        .unwrap()
    }

    #[test]
    fn infeasible_child_gives_sentinel() {
        // min x1 s.t. x1 - x2 = 1/2, x1 integer: x* = (1/2, 0); the down child
        // forces x1 <= 0 and x2 = x1 - 1/2 < 0.
        let inst = one_row(vec![1.0, 0.0], vec![1.0, -1.0], 0.5, Sense::Eq, 0.0, 10.0, vec![true, false]);
        let s = sb_scores(&inst, ScoreRule::Product).unwrap();
        assert_eq!(s.scores, vec![INFINITE_SCORE, 0.0]);
        let (down, up) = s.deltas[0].unwrap();
        assert_eq!(down, f64::INFINITY);
        assert!((up - 0.5).abs() < 1e-12);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["deltas"][0][0], "+inf");
        assert!(json["deltas"][1].is_null());
    }

    #[test]
    fn integral_vertex_scores_zero() {
        // min x1 + 2 x2 s.t. x1 + x2 >= 1: optimum (1, 0) is integral
        let inst = one_row(vec![1.0, 2.0], vec![1.0, 1.0], 1.0, Sense::Ge, 0.0, 1.0, vec![true, true]);
        let s = sb_scores(&inst, ScoreRule::Product).unwrap();
        assert_eq!(s.scores, vec![0.0, 0.0]);
        // fixed variable
        let mut parts = inst.into_parts();
        parts.lower[1] = Bound::Finite(3.0);
        parts.upper[1] = Bound::Finite(3.0);
        let s = sb_scores(&MilpInstance::new(parts).unwrap(), ScoreRule::Product).unwrap();
        assert_eq!(s.scores[1], 0.0);
    }

    #[test]
    fn relaxation_errors() {
        let inst = one_row(vec![1.0, 1.0], vec![1.0, 1.0], 3.0, Sense::Ge, 0.0, 1.0, vec![true, true]);
        assert_eq!(sb_scores(&inst, ScoreRule::Product), Err(SbError::RelaxationInfeasible));
        let mut parts = one_row(vec![-1.0], vec![1.0], 0.0, Sense::Ge, 0.0, 1.0, vec![true]).into_parts();
        parts.upper[0] = Bound::PosInf;
        let inst = MilpInstance::new(parts).unwrap();
        assert_eq!(sb_scores(&inst, ScoreRule::Product), Err(SbError::RelaxationUnbounded));
    }

    #[test]
    fn rules() {
        assert_eq!(ScoreRule::Product.combine(0.5, 0.25), 0.125);
        assert_eq!(ScoreRule::Linear { mu: 0.5 }.combine(0.5, 0.25), 0.375);
        assert_eq!(ScoreRule::Linear { mu: 1.0 }.combine(0.5, 0.25), 0.5);
        assert_eq!(ScoreRule::Product.combine(0.0, f64::INFINITY), INFINITE_SCORE);
        assert_eq!("linear:0.25".parse::<ScoreRule>(), Ok(ScoreRule::Linear { mu: 0.25 }));
        assert_eq!("product".parse::<ScoreRule>(), Ok(ScoreRule::Product));
        assert!("linear:2".parse::<ScoreRule>().is_err());
        assert!("sum".parse::<ScoreRule>().is_err());
    }

    #[test]
    fn snapping() {
        let p = branch_points(&[0.4999999999999, 2.0000000001, -0.5, 3.0], 1e-9);
        assert_eq!(p, vec![(0.0, 1.0), (2.0, 2.0), (-1.0, -0.0), (3.0, 3.0)]);
    }
}
