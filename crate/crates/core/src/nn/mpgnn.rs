//! Message-passing GNN on the MILP-graph.
//!
//! `s_i <- p(s_i, Σ_j A_ij f(t_j))`, `t_j <- q(t_j, Σ_i A_ij g(s_i))`,
//! `y_j = r(Σ_i s_i, Σ_j t_j, t_j)`. Scaling messages by `A_ij` makes a zero
//! weight contribute nothing.

use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::features::{constraint_features, variable_features};
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

/// `out_i = Σ_j A_ij x_j` over the rows of `adj`.
fn spmm(adj: &[Vec<(usize, f64)>], x: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((adj.len(), x.ncols()));
    for (i, row) in adj.iter().enumerate() {
        let mut o = out.row_mut(i);
        for &(j, a) in row {
            o.scaled_add(a, &x.row(j));
        }
    }
    out
}

fn sum_rows_broadcast(x: &Array2<f64>, rows: usize) -> Array2<f64> {
    let total = x.sum_axis(Axis(0));
    let mut out = Array2::zeros((rows, x.ncols()));
    out.rows_mut().into_iter().for_each(|mut r| r.assign(&total));
    out
}

pub fn mpgnn_forward(params: &GnnParams, g: &MilpGraph) -> Result<Vec<f64>, NnError> {
    check_arch(params, Arch::MpGnn)?;
    let mut s = params.embed_v.forward(&constraint_features(g));
    let mut t = params.embed_w.forward(&variable_features(g));
    for layer in &params.layers {
        let msg_v = spmm(&g.row_adj, &layer.f.forward(&t));
        let msg_w = spmm(&g.col_adj, &layer.g.forward(&s));
        let s_next = layer.p.forward(&concatenate![Axis(1), s, msg_v]);
        t = layer.q.forward(&concatenate![Axis(1), t, msg_w]);
        s = s_next;
    }
    let input = concatenate![Axis(1), sum_rows_broadcast(&s, g.n()), sum_rows_broadcast(&t, g.n()), t];
    Ok(params.readout.forward(&input).column(0).to_vec())
}

pub(crate) fn forward_cached(params: &GnnParams, g: &MilpGraph) -> (Array1<f64>, Cache) {
    let embed_v = params.embed_v.forward_cached(constraint_features(g));
    let embed_w = params.embed_w.forward_cached(variable_features(g));
    let mut s = embed_v.output().clone();
    let mut t = embed_w.output().clone();
    let mut layers = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let f = layer.f.forward_cached(t.clone());
        let g_cache = layer.g.forward_cached(s.clone());
        let msg_v = spmm(&g.row_adj, f.output());
        let msg_w = spmm(&g.col_adj, g_cache.output());
        let p = layer.p.forward_cached(concatenate![Axis(1), s, msg_v]);
        let q = layer.q.forward_cached(concatenate![Axis(1), t, msg_w]);
        s = p.output().clone();
        t = q.output().clone();
        layers.push(LayerCache { f, g: g_cache, p, q });
    }
    let input = concatenate![Axis(1), sum_rows_broadcast(&s, g.n()), sum_rows_broadcast(&t, g.n()), t];
    let readout = params.readout.forward_cached(input);
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

/// Accumulates `∂(dy · y) / ∂params` into `grad`.
pub(crate) fn backward(params: &GnnParams, g: &MilpGraph, cache: &Cache, dy: &Array1<f64>, grad: &mut GnnParams) {
    let d = params.dim;
    let m = g.m();
    let dy2 = dy.clone().insert_axis(Axis(1));
    let din = params.readout.backward(&cache.readout, dy2, &mut grad.readout);
    let ds_total = din.slice(s![.., 0..d]).sum_axis(Axis(0));
    let dt_total = din.slice(s![.., d..2 * d]).sum_axis(Axis(0));
    let mut ds: Array2<f64> = Array2::zeros((m, d));
    ds.rows_mut().into_iter().for_each(|mut r| r.assign(&ds_total));
    let mut dt = din.slice(s![.., 2 * d..]).to_owned();
    dt.rows_mut().into_iter().for_each(|mut r| r += &dt_total);

    for (l, layer) in params.layers.iter().enumerate().rev() {
        let c = &cache.layers[l];
        let gl = &mut grad.layers[l];
        let dp_in = layer.p.backward(&c.p, ds, &mut gl.p);
        let dq_in = layer.q.backward(&c.q, dt, &mut gl.q);
        let mut ds_prev = dp_in.slice(s![.., 0..d]).to_owned();
        let mut dt_prev = dq_in.slice(s![.., 0..d]).to_owned();
        // msg_v = A F  =>  dF = A' dmsg_v ; msg_w = A' G  =>  dG = A dmsg_w
        let df = spmm(&g.col_adj, &dp_in.slice(s![.., d..]).to_owned());
        let dg = spmm(&g.row_adj, &dq_in.slice(s![.., d..]).to_owned());
        dt_prev += &layer.f.backward(&c.f, df, &mut gl.f);
        ds_prev += &layer.g.backward(&c.g, dg, &mut gl.g);
        ds = ds_prev;
        dt = dt_prev;
    }
    params.embed_v.backward(&cache.embed_v, ds, &mut grad.embed_v);
    params.embed_w.backward(&cache.embed_w, dt, &mut grad.embed_w);
}
