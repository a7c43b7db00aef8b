//! Node and pair input features.
//!
//! Constraint `i`: `(b_i, one-hot(∘_i))`, the one-hot ordered `<=, =, >=`.
//! Variable `j`: `(c_j, [l_j finite], l_j or 0, [u_j finite], u_j or 0, [j integer])`.

use ndarray::Array2;

use crate::instance::{Bound, MilpGraph};

pub const CONSTRAINT_DIM: usize = 4;
pub const VARIABLE_DIM: usize = 6;
/// `(v_i, w_j, A_ij)`.
pub const PAIR_VW_DIM: usize = CONSTRAINT_DIM + VARIABLE_DIM + 1;
/// `(w_j1, w_j2, δ_j1j2)`.
pub const PAIR_WW_DIM: usize = 2 * VARIABLE_DIM + 1;

fn bound_parts(b: Bound) -> [f64; 2] {
    match b.finite() {
        Some(v) => [1.0, v],
        None => [0.0, 0.0],
    }
}

fn constraint_row(g: &MilpGraph, i: usize) -> [f64; CONSTRAINT_DIM] {
    let v = &g.constraints[i];
    let mut row = [v.rhs, 0.0, 0.0, 0.0];
    row[1 + v.sense.code() as usize] = 1.0;
    row
}

fn variable_row(g: &MilpGraph, j: usize) -> [f64; VARIABLE_DIM] {
    let w = &g.variables[j];
    let [lf, lv] = bound_parts(w.lower);
    let [uf, uv] = bound_parts(w.upper);
    [w.cost, lf, lv, uf, uv, w.integer as u8 as f64]
}

pub fn constraint_features(g: &MilpGraph) -> Array2<f64> {
    let mut x = Array2::zeros((g.m(), CONSTRAINT_DIM));
    for i in 0..g.m() {
        for (k, v) in constraint_row(g, i).into_iter().enumerate() {
            x[[i, k]] = v;
        }
    }
    x
}

pub fn variable_features(g: &MilpGraph) -> Array2<f64> {
    let mut x = Array2::zeros((g.n(), VARIABLE_DIM));
    for j in 0..g.n() {
        for (k, v) in variable_row(g, j).into_iter().enumerate() {
            x[[j, k]] = v;
        }
    }
    x
}

/// Row `i * n + j` holds `(v_i, w_j, A_ij)`.
pub fn vw_pair_features(g: &MilpGraph) -> Array2<f64> {
    let (m, n) = (g.m(), g.n());
    let a = g.dense_weights();
    let mut x = Array2::zeros((m * n, PAIR_VW_DIM));
    for i in 0..m {
        let v = constraint_row(g, i);
        for j in 0..n {
            let mut row = x.row_mut(i * n + j);
            let w = variable_row(g, j);
            for (k, val) in v.iter().chain(&w).chain(std::iter::once(&a[i * n + j])).enumerate() {
                row[k] = *val;
            }
        }
    }
    x
}

/// Row `j1 * n + j2` holds `(w_j1, w_j2, δ_j1j2)`.
pub fn ww_pair_features(g: &MilpGraph) -> Array2<f64> {
    let n = g.n();
    let rows: Vec<[f64; VARIABLE_DIM]> = (0..n).map(|j| variable_row(g, j)).collect();
    let mut x = Array2::zeros((n * n, PAIR_WW_DIM));
    for j1 in 0..n {
        for j2 in 0..n {
            let mut row = x.row_mut(j1 * n + j2);
            let delta = if j1 == j2 { 1.0 } else { 0.0 };
            for (k, val) in rows[j1].iter().chain(&rows[j2]).chain(std::iter::once(&delta)).enumerate() {
                row[k] = *val;
            }
        }
    }
    x
}
