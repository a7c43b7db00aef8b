//! Second-order folklore GNN: embeddings on pairs `(i, j)` and `(j1, j2)`.
//!
//! `s_ij <- p(s_ij, Σ_j1 f(t_{j1 j}, s_{i j1}))`,
//! `t_{j1 j2} <- q(t_{j1 j2}, Σ_i g(s_{i j2}, s_{i j1}))`,
//! `y_j = r(Σ_i s_ij, Σ_j1 t_{j1 j})`.
//!
//! `s` is stored with row `i * n + j`, `t` with row `j1 * n + j2`. The
//! message inputs are materialized: `f` sees row `(i * n + j) * n + j1`,
//! `g` sees row `(j1 * n + j2) * m + i`.

use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::features::{vw_pair_features, ww_pair_features};
use super::mlp::MlpCache;
use super::params::{Arch, GnnParams};
use super::{check_arch, NnError};
use crate::instance::MilpGraph;

struct LayerCache {
    f: MlpCache,
    g: MlpCache,
    p: MlpCache,
    q: MlpCache,
}

pub(crate) struct Cache {
    embed_v: MlpCache,
    embed_w: MlpCache,
    layers: Vec<LayerCache>,
    readout: MlpCache,
}

fn f_inputs(s: &Array2<f64>, t: &Array2<f64>, m: usize, n: usize) -> Array2<f64> {
    let d = s.ncols();
    let mut x = Array2::zeros((m * n * n, 2 * d));
    for i in 0..m {
        for j in 0..n {
            for j1 in 0..n {
                let mut row = x.row_mut((i * n + j) * n + j1);
                row.slice_mut(s![0..d]).assign(&t.row(j1 * n + j));
                row.slice_mut(s![d..]).assign(&s.row(i * n + j1));
            }
        }
    }
    x
}

fn g_inputs(s: &Array2<f64>, m: usize, n: usize) -> Array2<f64> {
    let d = s.ncols();
    let mut x = Array2::zeros((n * n * m, 2 * d));
    for j1 in 0..n {
        for j2 in 0..n {
            for i in 0..m {
                let mut row = x.row_mut((j1 * n + j2) * m + i);
                row.slice_mut(s![0..d]).assign(&s.row(i * n + j2));
                row.slice_mut(s![d..]).assign(&s.row(i * n + j1));
            }
        }
    }
    x
}

/// Sums consecutive groups of `group` rows.
fn group_sum(x: &Array2<f64>, groups: usize, group: usize) -> Array2<f64> {
    let d = x.ncols();
    x.view()
        .into_shape_with_order((groups, group, d))
        .expect("row count is groups * group")
        .sum_axis(Axis(1))
}

/// Repeats each row `group` times.
fn group_repeat(x: &Array2<f64>, group: usize) -> Array2<f64> {
    let (rows, d) = x.dim();
    x.view()
        .insert_axis(Axis(1))
        .broadcast((rows, group, d))
        .expect("broadcast along the new axis")
        .to_owned()
        .into_shape_with_order((rows * group, d))
        .expect("contiguous")
}

fn readout_input(s: &Array2<f64>, t: &Array2<f64>, m: usize, n: usize) -> Array2<f64> {
    let d = s.ncols();
    let s_sum = s.view().into_shape_with_order((m, n, d)).expect("m * n rows").sum_axis(Axis(0));
    let t_sum = t.view().into_shape_with_order((n, n, d)).expect("n * n rows").sum_axis(Axis(0));
    concatenate![Axis(1), s_sum, t_sum]
}

pub fn fgnn2_forward(params: &GnnParams, g: &MilpGraph) -> Result<Vec<f64>, NnError> {
    check_arch(params, Arch::Fgnn2)?;
    let (m, n) = (g.m(), g.n());
    let mut s = params.embed_v.forward(&vw_pair_features(g));
    let mut t = params.embed_w.forward(&ww_pair_features(g));
    for layer in &params.layers {
        let msg_s = group_sum(&layer.f.forward(&f_inputs(&s, &t, m, n)), m * n, n);
        let msg_t = group_sum(&layer.g.forward(&g_inputs(&s, m, n)), n * n, m);
        let s_next = layer.p.forward(&concatenate![Axis(1), s, msg_s]);
        t = layer.q.forward(&concatenate![Axis(1), t, msg_t]);
        s = s_next;
    }
    Ok(params.readout.forward(&readout_input(&s, &t, m, n)).column(0).to_vec())
}

pub(crate) fn forward_cached(params: &GnnParams, g: &MilpGraph) -> (Array1<f64>, Cache) {
    let (m, n) = (g.m(), g.n());
    let embed_v = params.embed_v.forward_cached(vw_pair_features(g));
    let embed_w = params.embed_w.forward_cached(ww_pair_features(g));
    let mut s = embed_v.output().clone();
    let mut t = embed_w.output().clone();
    let mut layers = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let f = layer.f.forward_cached(f_inputs(&s, &t, m, n));
        let g_cache = layer.g.forward_cached(g_inputs(&s, m, n));
        let msg_s = group_sum(f.output(), m * n, n);
        let msg_t = group_sum(g_cache.output(), n * n, m);
        let p = layer.p.forward_cached(concatenate![Axis(1), s, msg_s]);
        let q = layer.q.forward_cached(concatenate![Axis(1), t, msg_t]);
        s = p.output().clone();
        t = q.output().clone();
        layers.push(LayerCache { f, g: g_cache, p, q });
    }
    let readout = params.readout.forward_cached(readout_input(&s, &t, m, n));
    let y = readout.output().column(0).to_owned();
    (
        y,
        Cache {
            embed_v,
            embed_w,
            layers,
            readout,
        },
    )
}

pub(crate) fn backward(params: &GnnParams, g: &MilpGraph, cache: &Cache, dy: &Array1<f64>, grad: &mut GnnParams) {
    let d = params.dim;
    let (m, n) = (g.m(), g.n());
    let din = params
        .readout
        .backward(&cache.readout, dy.clone().insert_axis(Axis(1)), &mut grad.readout);
    // readout row j reads s_ij for every i and t_{j1 j} for every j1
    let mut ds = Array2::zeros((m * n, d));
    for i in 0..m {
        ds.slice_mut(s![i * n..(i + 1) * n, ..]).assign(&din.slice(s![.., 0..d]));
    }
    let mut dt = Array2::zeros((n * n, d));
    for j1 in 0..n {
        dt.slice_mut(s![j1 * n..(j1 + 1) * n, ..]).assign(&din.slice(s![.., d..]));
    }

    for (l, layer) in params.layers.iter().enumerate().rev() {
        let c = &cache.layers[l];
        let gl = &mut grad.layers[l];
        let dp_in = layer.p.backward(&c.p, ds, &mut gl.p);
        let dq_in = layer.q.backward(&c.q, dt, &mut gl.q);
        let mut ds_prev = dp_in.slice(s![.., 0..d]).to_owned();
        let mut dt_prev = dq_in.slice(s![.., 0..d]).to_owned();

        let df = group_repeat(&dp_in.slice(s![.., d..]).to_owned(), n);
        let dfx = layer.f.backward(&c.f, df, &mut gl.f);
        for i in 0..m {
            for j in 0..n {
                for j1 in 0..n {
                    let row = dfx.row((i * n + j) * n + j1);
                    let mut t_row = dt_prev.row_mut(j1 * n + j);
                    t_row += &row.slice(s![0..d]);
                    let mut s_row = ds_prev.row_mut(i * n + j1);
                    s_row += &row.slice(s![d..]);
                }
            }
        }

        let dg = group_repeat(&dq_in.slice(s![.., d..]).to_owned(), m);
        let dgx = layer.g.backward(&c.g, dg, &mut gl.g);
        for j1 in 0..n {
            for j2 in 0..n {
                for i in 0..m {
                    let row = dgx.row((j1 * n + j2) * m + i);
                    let mut a = ds_prev.row_mut(i * n + j2);
                    a += &row.slice(s![0..d]);
                    let mut b = ds_prev.row_mut(i * n + j1);
                    b += &row.slice(s![d..]);
                }
            }
        }
        ds = ds_prev;
        dt = dt_prev;
    }
    params.embed_v.backward(&cache.embed_v, ds, &mut grad.embed_v);
    params.embed_w.backward(&cache.embed_w, dt, &mut grad.embed_w);
}
