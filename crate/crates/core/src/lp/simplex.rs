//! Bounded-variable primal simplex on `A x + s = b`, with a phase-1
//! artificial objective.
//!
//! Columns are laid out as `[structural (n) | slack (m) | artificial (m)]`.
//! Slack bounds encode the senses: `<=` gives `s in [0, inf)`, `>=` gives
//! `s in (-inf, 0]`, `=` gives `s = 0`. The basis is refactored from scratch
//! every pivot; at the sizes this crate targets that is cheap and keeps the
//! iterates accurate.
//!
//! Entering variables are priced by largest reduced cost until a run of
//! degenerate pivots is seen, then by lowest index (Bland) until the
//! objective moves again. Ratio-test ties go to the lowest column index.

use super::dense::Lu;
use super::kkt::{dual_bound, kkt_residual, primal_residual};
use super::{LpError, LpOutcome, LpSolution, Multipliers, FEAS_TOL, OPT_TOL, PIVOT_CAP_FACTOR};
use crate::instance::{MilpInstance, Sense};

const PIVOT_TOL: f64 = 1e-9;
const LU_PIVOT_TOL: f64 = 1e-13;
const DEGENERATE_STEP: f64 = 1e-12;
const DEGENERATE_RUN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Free,
}

struct Tableau<'a> {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: &'a [f64],
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    iterations: usize,
    cap: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(inst: &'a MilpInstance, lower: &[f64], upper: &[f64]) -> Tableau<'a> {
        let (m, n) = (inst.m(), inst.n());
        let mut cols = vec![Vec::new(); n + 2 * m];
        for e in inst.entries() {
            cols[e.col].push((e.row, e.value));
        }
        let mut lo = lower.to_vec();
        let mut up = upper.to_vec();
        for (i, sense) in inst.senses().iter().enumerate() {
            cols[n + i].push((i, 1.0));
            let (l, u) = match sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            up.push(u);
        }

        let mut x = vec![0.0; n + 2 * m];
        let mut state = Vec::with_capacity(n + 2 * m);
        for j in 0..n + m {
            let s = if lo[j].is_finite() {
                x[j] = lo[j];
                State::AtLower
            } else if up[j].is_finite() {
                x[j] = up[j];
                State::AtUpper
            } else {
                State::Free
            };
            state.push(s);
        }

        // artificials absorb the initial residual b - A x - s
        let mut resid = inst.rhs().to_vec();
        for (j, col) in cols[..n + m].iter().enumerate() {
            if x[j] != 0.0 {
                for &(i, a) in col {
                    resid[i] -= a * x[j];
                }
            }
        }
        for i in 0..m {
            let sign = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
            cols[n + m + i].push((i, sign));
            lo.push(0.0);
            up.push(f64::INFINITY);
            x[n + m + i] = resid[i].abs();
            state.push(State::Basic);
        }

        Tableau {
            m,
            cols,
            b: inst.rhs(),
            lo,
            up,
            x,
            state,
            basis: (n + m..n + 2 * m).collect(),
            iterations: 0,
            cap: PIVOT_CAP_FACTOR * (m + n).max(1),
        }
    }

    fn factor(&self) -> Result<Lu, LpError> {
        let m = self.m;
        let mut dense = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[j] {
                dense[i * m + k] = a;
            }
        }
        Lu::factor(m, dense, LU_PIVOT_TOL).ok_or(LpError::SingularBasis)
    }

    /// Recomputes basic values from the nonbasic ones.
    fn refresh_basic(&mut self, lu: &Lu) {
        let mut rhs = self.b.to_vec();
        for (j, col) in self.cols.iter().enumerate() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                for &(i, a) in col {
                    rhs[i] -= a * self.x[j];
                }
            }
        }
        let xb = lu.solve(&rhs);
        for (k, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[k];
        }
    }

    fn duals(&self, lu: &Lu, cost: &[f64]) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        lu.solve_transpose(&cb)
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], y: &[f64]) -> f64 {
        cost[j] - self.cols[j].iter().map(|&(i, a)| a * y[i]).sum::<f64>()
    }

    fn run(&mut self, cost: &[f64]) -> Result<Phase, LpError> {
        let dtol = OPT_TOL * cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let mut degenerate_run = 0usize;
        loop {
            let lu = self.factor()?;
            self.refresh_basic(&lu);
            let y = self.duals(&lu, cost);

            let bland = degenerate_run >= DEGENERATE_RUN;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                if self.state[j] == State::Basic || self.lo[j] == self.up[j] {
                    continue;
                }
                let d = self.reduced_cost(j, cost, &y);
                let improving = match self.state[j] {
                    State::AtLower => d < -dtol,
                    State::AtUpper => d > dtol,
                    _ => d.abs() > dtol,
                };
                if !improving {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.map_or(true, |(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }
            let Some((q, dq)) = entering else {
                return Ok(Phase::Optimal);
            };

            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(LpError::PivotCap { cap: self.cap });
            }

            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let mut col_q = vec![0.0; self.m];
            for &(i, a) in &self.cols[q] {
                col_q[i] = a;
            }
            let alpha = lu.solve(&col_q);

            // step t >= 0 moves x_q by dir * t and x_B by -dir * alpha * t
            let mut t_min = f64::INFINITY;
            let mut leaving: Option<(usize, f64)> = None;
            for (k, &j) in self.basis.iter().enumerate() {
                let rate = -dir * alpha[k];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let bound = if rate < 0.0 { self.lo[j] } else { self.up[j] };
                if !bound.is_finite() {
                    continue;
                }
                let t = ((bound - self.x[j]) / rate).max(0.0);
                let take = match leaving {
                    None => true,
                    Some((kb, _)) => {
                        t < t_min - DEGENERATE_STEP
                            || (t <= t_min + DEGENERATE_STEP && j < self.basis[kb])
                    }
                };
                if take {
                    t_min = t_min.min(t);
                    leaving = Some((k, bound));
                }
            }
            let range = self.up[q] - self.lo[q];
            let step = t_min.min(range);
            if !step.is_finite() {
                return Ok(Phase::Unbounded);
            }
            if range <= t_min {
                leaving = None;
            }
            degenerate_run = if step <= DEGENERATE_STEP { degenerate_run + 1 } else { 0 };

            match leaving {
                None => {
                    // bound flip
                    let (x, s) = if dir > 0.0 {
                        (self.up[q], State::AtUpper)
                    } else {
                        (self.lo[q], State::AtLower)
                    };
                    self.x[q] = x;
                    self.state[q] = s;
                }
                Some((k, bound)) => {
                    let out = self.basis[k];
                    self.x[q] += dir * step;
                    self.state[q] = State::Basic;
                    self.basis[k] = q;
                    self.x[out] = bound;
                    self.state[out] = if bound == self.lo[out] {
                        State::AtLower
                    } else {
                        State::AtUpper
                    };
                }
            }
        }
    }
}

pub(super) fn solve(inst: &MilpInstance, lower: &[f64], upper: &[f64]) -> Result<LpOutcome, LpError> {
    let (m, n) = (inst.m(), inst.n());
    let mut tab = Tableau::new(inst, lower, upper);

    let mut phase1_cost = vec![0.0; n + 2 * m];
    phase1_cost[n + m..].iter_mut().for_each(|c| *c = 1.0);
    let initial_infeas: f64 = tab.x[n + m..].iter().sum();
    if initial_infeas > 0.0 {
        match tab.run(&phase1_cost)? {
            Phase::Optimal => {}
            Phase::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
        }
        let infeas: f64 = tab.x[n + m..].iter().sum();
        if infeas > FEAS_TOL * initial_infeas.max(1.0) {
            return Ok(LpOutcome::Infeasible);
        }
    }
    // artificials are pinned to zero from here on
    for j in n + m..n + 2 * m {
        tab.up[j] = 0.0;
        if tab.state[j] != State::Basic {
            tab.x[j] = 0.0;
            tab.state[j] = State::AtLower;
        }
    }

    let mut cost = inst.objective().to_vec();
    cost.resize(n + 2 * m, 0.0);
    if let Phase::Unbounded = tab.run(&cost)? {
        return Ok(LpOutcome::Unbounded);
    }

    let lu = tab.factor()?;
    tab.refresh_basic(&lu);
    let y = tab.duals(&lu, &cost);
    let mut x: Vec<f64> = tab.x[..n].to_vec();
    // nonbasic structurals sit exactly on their bounds
    for j in 0..n {
        match tab.state[j] {
            State::AtLower => x[j] = lower[j],
            State::AtUpper => x[j] = upper[j],
            _ => {}
        }
    }
    let bounds: Vec<f64> = (0..n).map(|j| tab.reduced_cost(j, &cost, &y)).collect();
    let multipliers = Multipliers { rows: y, bounds };
    let kkt = kkt_residual(inst, lower, upper, &x, &multipliers);
    Ok(LpOutcome::Optimal(LpSolution {
        objective: inst.objective_value(&x),
        primal_residual: primal_residual(inst, lower, upper, &x),
        kkt_residual: kkt,
        iterations: tab.iterations,
        dual_bound: dual_bound(inst, lower, upper, &multipliers),
        x,
        multipliers,
    }))
}
