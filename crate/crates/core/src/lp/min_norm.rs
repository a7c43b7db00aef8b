//! Minimum-ℓ2-norm point of the LP optimal face.
//!
//! Solves `min ½‖x‖²` over `{Ax ∘ b, l <= x <= u, c'x = f*}` with a primal
//! active-set method. The working set is kept linearly independent through
//! an incrementally built QR factorization of its constraint normals, so the
//! equality-constrained step is a projection onto their null space.

use super::{solve_lp, LpError, LpOutcome, FEAS_TOL};
use crate::instance::{Entry, InstanceParts, MilpInstance, Sense};

const ACTIVE_TOL: f64 = 1e-9;
const DEPENDENCE_TOL: f64 = 1e-10;
const MULTIPLIER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormSolution {
    pub x: Vec<f64>,
    /// KKT residual of the norm-minimization QP at `x`.
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Linear constraint `g'x >= h`, or `g'x = h` when `equality`.
#[derive(Debug, Clone)]
struct Constraint {
    normal: Vec<(usize, f64)>,
    rhs: f64,
    equality: bool,
}

impl Constraint {
    fn dot(&self, x: &[f64]) -> f64 {
        self.normal.iter().map(|&(j, g)| g * x[j]).sum()
    }

    fn slack(&self, x: &[f64]) -> f64 {
        self.dot(x) - self.rhs
    }

    fn dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &(j, g) in &self.normal {
            v[j] += g;
        }
        v
    }
}

fn face_constraints(inst: &MilpInstance, f_star: f64) -> Vec<Constraint> {
    let n = inst.n();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.m()];
    for e in inst.entries() {
        rows[e.row].push((e.col, e.value));
    }
    let mut out = Vec::new();
    out.push(Constraint {
        normal: inst
            .objective()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect(),
        rhs: f_star,
        equality: true,
    });
    for (i, row) in rows.into_iter().enumerate() {
        let b = inst.rhs()[i];
        out.push(match inst.senses()[i] {
            Sense::Ge => Constraint { normal: row, rhs: b, equality: false },
            Sense::Eq => Constraint { normal: row, rhs: b, equality: true },
            Sense::Le => Constraint {
                normal: row.into_iter().map(|(j, a)| (j, -a)).collect(),
                rhs: -b,
                equality: false,
            },
        });
    }
    for j in 0..n {
        let (l, u) = (inst.lower()[j], inst.upper()[j]);
        match (l.finite(), u.finite()) {
            (Some(l), Some(u)) if l == u => out.push(Constraint {
                normal: vec![(j, 1.0)],
                rhs: l,
                equality: true,
            }),
            (l, u) => {
                if let Some(l) = l {
                    out.push(Constraint { normal: vec![(j, 1.0)], rhs: l, equality: false });
                }
                if let Some(u) = u {
                    out.push(Constraint { normal: vec![(j, -1.0)], rhs: -u, equality: false });
                }
            }
        }
    }
    out
}

/// Orthonormal basis `Q` of the working-set normals with `G' = Q R`.
struct WorkingSet {
    n: usize,
    members: Vec<usize>,
    q: Vec<Vec<f64>>,
    /// Column `k` of R, length `k + 1`.
    r: Vec<Vec<f64>>,
}

impl WorkingSet {
    fn new(n: usize) -> WorkingSet {
        WorkingSet {
            n,
            members: Vec::new(),
            q: Vec::new(),
            r: Vec::new(),
        }
    }

    /// Adds the constraint unless its normal is (numerically) in the span.
    fn try_add(&mut self, index: usize, normal: &[f64]) -> bool {
        let norm = normal.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 {
            return false;
        }
        let mut v = normal.to_vec();
        let mut coeffs = vec![0.0; self.q.len()];
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (k, qk) in self.q.iter().enumerate() {
                let d: f64 = qk.iter().zip(&v).map(|(a, b)| a * b).sum();
                coeffs[k] += d;
                v.iter_mut().zip(qk).for_each(|(vi, qi)| *vi -= d * qi);
            }
        }
        let rho = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rho <= DEPENDENCE_TOL * norm {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= rho);
        coeffs.push(rho);
        self.q.push(v);
        self.r.push(coeffs);
        self.members.push(index);
        true
    }

    fn rebuild(&mut self, keep: Vec<usize>, constraints: &[Constraint]) {
        *self = WorkingSet::new(self.n);
        for index in keep {
            let added = self.try_add(index, &constraints[index].dense(self.n));
            debug_assert!(added, "subset of an independent set stays independent");
        }
    }

    /// Component of `x` orthogonal to the span of the normals.
    fn project_out(&self, x: &[f64]) -> Vec<f64> {
        let mut v = x.to_vec();
        for _ in 0..2 {
            for qk in &self.q {
                let d: f64 = qk.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(qk).for_each(|(vi, qi)| *vi -= d * qi);
            }
        }
        v
    }

    /// Least-squares multipliers for `G' λ = x`.
    fn multipliers(&self, x: &[f64]) -> Vec<f64> {
        let k = self.q.len();
        let qtx: Vec<f64> = self
            .q
            .iter()
            .map(|qk| qk.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        let mut lambda = vec![0.0; k];
        for row in (0..k).rev() {
            let mut s = qtx[row];
            for col in row + 1..k {
                s -= self.r[col][row] * lambda[col];
            }
            lambda[row] = s / self.r[row][row];
        }
        lambda
    }
}

/// Minimum-norm optimal point of the LP relaxation, given its optimal value.
/// A feasible point of the optimal face is found first with the simplex.
pub fn min_norm_solution(inst: &MilpInstance, f_star: f64) -> Result<MinNormSolution, LpError> {
    let mut parts = inst.clone().into_parts();
    let m = parts.m;
    for (j, &c) in inst.objective().iter().enumerate() {
        if c != 0.0 {
            parts.entries.push(Entry { row: m, col: j, value: c });
        }
    }
    parts.m += 1;
    parts.b.push(f_star);
    parts.senses.push(Sense::Eq);
    parts.c = vec![0.0; parts.n];
    let face = MilpInstance::new(InstanceParts { ..parts }).expect("face system is a valid instance");
    match solve_lp(&face, None)? {
        LpOutcome::Optimal(sol) => min_norm_from_point(inst, f_star, &sol.x),
        _ => Err(LpError::InconsistentFace { f_star }),
    }
}

/// Minimum-norm optimal point, starting the active-set method at a point
/// `start` of the optimal face (such as a simplex optimum).
pub fn min_norm_from_point(inst: &MilpInstance, f_star: f64, start: &[f64]) -> Result<MinNormSolution, LpError> {
    let n = inst.n();
    let constraints = face_constraints(inst, f_star);
    let scale = |c: &Constraint| 1.0 + c.rhs.abs();

    let mut x = start.to_vec();
    for c in &constraints {
        let s = c.slack(&x);
        let violated = if c.equality { s.abs() } else { -s };
        if violated > 1e3 * FEAS_TOL * scale(c) {
            return Err(LpError::InconsistentFace { f_star });
        }
    }

    let mut ws = WorkingSet::new(n);
    let mut in_ws = vec![false; constraints.len()];
    // equalities first, so a dependent equality is implied by earlier
    // equalities only and stays satisfied when inequalities are dropped
    for pass_equalities in [true, false] {
        for (k, c) in constraints.iter().enumerate() {
            if c.equality != pass_equalities {
                continue;
            }
            if !c.equality && c.slack(&x).abs() > ACTIVE_TOL * scale(c) {
                continue;
            }
            if ws.try_add(k, &c.dense(n)) {
                in_ws[k] = true;
            }
        }
    }

    let cap = 50 * (constraints.len() + n).max(1);
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > cap {
            return Err(LpError::ActiveSetCap { cap });
        }
        // step p = -(x projected onto the null space of the working normals)
        let p: Vec<f64> = ws.project_out(&x).into_iter().map(|v| -v).collect();
        let pnorm = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let xnorm = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));

        if pnorm <= 1e-13 * xnorm {
            let lambda = ws.multipliers(&x);
            let drop = ws
                .members
                .iter()
                .zip(&lambda)
                .filter(|(&k, &l)| !constraints[k].equality && l < -MULTIPLIER_TOL * xnorm)
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)))
                .map(|(&k, _)| k);
            match drop {
                None => {
                    let kkt = qp_kkt(&constraints, &ws.members, &lambda, &x);
                    return Ok(MinNormSolution { x, kkt_residual: kkt, iterations });
                }
                Some(k) => {
                    in_ws[k] = false;
                    let keep = ws.members.iter().copied().filter(|&c| c != k).collect();
                    ws.rebuild(keep, &constraints);
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for (k, c) in constraints.iter().enumerate() {
            if in_ws[k] || c.equality {
                continue;
            }
            let gp = c.dot(&p);
            if gp >= -1e-14 * pnorm {
                continue;
            }
            let ratio = (c.slack(&x) / -gp).max(0.0);
            if ratio < alpha {
                alpha = ratio;
                blocking = Some(k);
            }
        }
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        if let Some(k) = blocking {
            if ws.try_add(k, &constraints[k].dense(n)) {
                in_ws[k] = true;
            }
        }
    }
}

fn qp_kkt(constraints: &[Constraint], members: &[usize], lambda: &[f64], x: &[f64]) -> f64 {
    let mut stat = x.to_vec();
    let mut worst = 0.0f64;
    for (&k, &l) in members.iter().zip(lambda) {
        for &(j, g) in &constraints[k].normal {
            stat[j] -= l * g;
        }
        if !constraints[k].equality {
            worst = worst.max((-l).max(0.0));
            worst = worst.max(l.abs().min(constraints[k].slack(x).abs()));
        }
    }
    worst = stat.iter().fold(worst, |w, s| w.max(s.abs()));
    for c in constraints {
        let s = c.slack(x);
        worst = worst.max(if c.equality { s.abs() } else { (-s).max(0.0) });
    }
    worst
}
