use super::Multipliers;
use crate::instance::{MilpInstance, Sense};

/// KKT residual of `(x, multipliers)` for the LP relaxation of `inst`:
/// the largest of the stationarity, primal feasibility, dual sign and
/// complementarity violations. Complementarity is measured as
/// `min(|multiplier|, |slack|)` per row and bound.
pub fn check_kkt(inst: &MilpInstance, x: &[f64], multipliers: &Multipliers) -> f64 {
    let (lower, upper) = super::bounds_of(inst);
    kkt_residual(inst, &lower, &upper, x, multipliers)
}

pub(super) fn kkt_residual(
    inst: &MilpInstance,
    lower: &[f64],
    upper: &[f64],
    x: &[f64],
    mult: &Multipliers,
) -> f64 {
    let mut worst = primal_residual(inst, lower, upper, x);

    // stationarity: c - A'y - z
    let mut grad: Vec<f64> = inst
        .objective()
        .iter()
        .zip(&mult.bounds)
        .map(|(c, z)| c - z)
        .collect();
    for e in inst.entries() {
        grad[e.col] -= e.value * mult.rows[e.row];
    }
    worst = grad.iter().fold(worst, |w, g| w.max(g.abs()));

    let ax = inst.row_activity(x);
    for (i, sense) in inst.senses().iter().enumerate() {
        let y = mult.rows[i];
        let slack = (ax[i] - inst.rhs()[i]).abs();
        let sign_violation = match sense {
            Sense::Le => y.max(0.0),
            Sense::Ge => (-y).max(0.0),
            Sense::Eq => 0.0,
        };
        worst = worst.max(sign_violation);
        if *sense != Sense::Eq {
            worst = worst.max(y.abs().min(slack));
        }
    }

    for j in 0..x.len() {
        let z = mult.bounds[j];
        if z > 0.0 {
            let gap = if lower[j].is_finite() { (x[j] - lower[j]).abs() } else { f64::INFINITY };
            worst = worst.max(z.min(gap));
        } else if z < 0.0 {
            let gap = if upper[j].is_finite() { (upper[j] - x[j]).abs() } else { f64::INFINITY };
            worst = worst.max((-z).min(gap));
        }
    }
    worst
}

pub(super) fn primal_residual(inst: &MilpInstance, lower: &[f64], upper: &[f64], x: &[f64]) -> f64 {
    let ax = inst.row_activity(x);
    let mut worst = 0.0f64;
    for (i, sense) in inst.senses().iter().enumerate() {
        let r = ax[i] - inst.rhs()[i];
        let v = match sense {
            Sense::Le => r.max(0.0),
            Sense::Ge => (-r).max(0.0),
            Sense::Eq => r.abs(),
        };
        worst = worst.max(v);
    }
    for j in 0..x.len() {
        worst = worst.max(lower[j] - x[j]).max(x[j] - upper[j]);
    }
    worst
}

/// The Lagrangian dual value `b'y + sum_j (z_j+ l_j - z_j- u_j)`; infinite
/// bounds paired with a nonzero multiplier give `-inf`.
pub(super) fn dual_bound(inst: &MilpInstance, lower: &[f64], upper: &[f64], mult: &Multipliers) -> f64 {
    let mut v: f64 = inst.rhs().iter().zip(&mult.rows).map(|(b, y)| b * y).sum();
    for (j, &z) in mult.bounds.iter().enumerate() {
        if z > 0.0 {
            v += z * lower[j];
        } else if z < 0.0 {
            v += z * upper[j];
        }
    }
    v
}
