//! Independent dense oracles for small LPs, built on nalgebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use sbrepr::gen::{counterexample_pair, gen_random};
use sbrepr::instance::{build_graph, Bound, Entry, InstanceParts, MilpInstance, Sense};
use sbrepr::nn::{loss, loss_and_grad, GnnParams, Sample};
use sbrepr::rng::CounterRng;
use sbrepr::sb::{sb_scores, ScoreRule};

/// `g'x >= h`.
#[derive(Debug, Clone)]
pub struct Halfspace {
    pub g: Vec<f64>,
    pub h: f64,
}

/// Feasible region of the relaxation as halfspaces; equality rows become two.
/// All bounds must be finite.
pub fn halfspaces(inst: &MilpInstance, bounds: &[(f64, f64)]) -> Vec<Halfspace> {
    let (m, n) = (inst.m(), inst.n());
    let a = inst.dense_matrix();
    let mut out = Vec::new();
    for i in 0..m {
        let row: Vec<f64> = a[i * n..(i + 1) * n].to_vec();
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        let b = inst.rhs()[i];
        match inst.senses()[i] {
            Sense::Ge => out.push(Halfspace { g: row, h: b }),
            Sense::Le => out.push(Halfspace { g: neg, h: -b }),
            Sense::Eq => {
                out.push(Halfspace { g: row, h: b });
                out.push(Halfspace { g: neg, h: -b });
            }
        }
    }
    for (j, &(l, u)) in bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        out.push(Halfspace { g: e.clone(), h: l });
        e[j] = -1.0;
        out.push(Halfspace { g: e, h: -u });
    }
    out
}

pub fn finite_bounds(inst: &MilpInstance) -> Vec<(f64, f64)> {
    inst.lower()
        .iter()
        .zip(inst.upper())
        .map(|(l, u)| (l.finite().expect("finite lower"), u.finite().expect("finite upper")))
        .collect()
}

fn feasible(hs: &[Halfspace], x: &[f64], tol: f64) -> bool {
    hs.iter().all(|c| c.g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() >= c.h - tol)
}

fn subsets(len: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(start: usize, len: usize, k: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            visit(cur);
            return;
        }
        for i in start..len {
            cur.push(i);
            rec(i + 1, len, k, cur, visit);
            cur.pop();
        }
    }
    rec(0, len, k, &mut Vec::new(), &mut visit);
}

/// Minimum of `c'x` over a bounded polytope by enumerating vertices.
/// `None` if the polytope is empty.
pub fn vertex_lp(c: &[f64], hs: &[Halfspace]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    subsets(hs.len(), n, |s| {
        let g = DMatrix::from_fn(n, n, |r, k| hs[s[r]].g[k]);
        let h = DVector::from_fn(n, |r, _| hs[s[r]].h);
        let Some(x) = g.lu().solve(&h) else { return };
        let x: Vec<f64> = x.iter().copied().collect();
        if !x.iter().all(|v| v.is_finite()) || !feasible(hs, &x, 1e-9) {
            return;
        }
        let f: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, x));
        }
    });
    best
}

/// Minimum-norm point of `{x in polytope : c'x = f}` by enumerating candidate
/// active sets and projecting the origin onto each affine hull.
pub fn brute_min_norm(c: &[f64], f: f64, hs: &[Halfspace]) -> Option<Vec<f64>> {
    let n = c.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..=n.min(hs.len()) {
        subsets(hs.len(), k, |s| {
            let rows = k + 1;
            let g = DMatrix::from_fn(rows, n, |r, col| if r == 0 { c[col] } else { hs[s[r - 1]].g[col] });
            let h = DVector::from_fn(rows, |r, _| if r == 0 { f } else { hs[s[r - 1]].h });
            let Ok(pinv) = g.clone().pseudo_inverse(1e-11) else { return };
            let x = &pinv * &h;
            if (&g * &x - &h).amax() > 1e-9 {
                return;
            }
            let x: Vec<f64> = x.iter().copied().collect();
            let face_tol = 1e-9 * f.abs().max(1.0);
            let on_face = (c.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - f).abs() <= face_tol;
            if !on_face || !feasible(hs, &x, 1e-9) {
                return;
            }
            let norm: f64 = x.iter().map(|v| v * v).sum();
            if best.as_ref().is_none_or(|(bn, _)| norm < *bn) {
                best = Some((norm, x));
            }
        });
    }
    best.map(|(_, x)| x)
}

/// Small instance with integer data and small finite integer bounds.
pub fn small_instance(seed: u64, max_m: usize, max_n: usize) -> MilpInstance {
    let mut rng = CounterRng::new(seed);
    let m = 1 + rng.below(max_m);
    let n = 1 + rng.below(max_n);
    let mut entries = Vec::new();
    for row in 0..m {
        for col in 0..n {
            if rng.below(3) > 0 {
                let v = rng.below(7) as f64 - 3.0;
                if v != 0.0 {
                    entries.push(Entry { row, col, value: v });
                }
            }
        }
    }
    let c = (0..n).map(|_| rng.below(7) as f64 - 3.0).collect();
    let b = (0..m).map(|_| rng.below(9) as f64 - 4.0).collect();
    let senses = (0..m).map(|_| Sense::from_code(rng.below(3) as u8).unwrap()).collect();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for _ in 0..n {
        let l = rng.below(4) as f64 - 2.0;
        lower.push(Bound::Finite(l));
        upper.push(Bound::Finite(l + rng.below(4) as f64));
    }
    let integer = (0..n).map(|_| rng.below(4) > 0).collect();
    MilpInstance::new(InstanceParts {
        m,
        n,
        c,
        b,
        senses,
        lower,
        upper,
        integer,
        entries,
    })
    .unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest relative error between the analytic gradient and central
/// differences, over coordinates whose step does not straddle a ReLU kink.
/// A kink shows up as disagreeing one-sided slopes. Returns (error, checked).
pub fn gradient_error(params: &GnnParams, data: &[Sample], h: f64) -> (f64, usize) {
    let (l0, grad) = loss_and_grad(params, data).unwrap();
    let analytic = grad.to_flat();
    let base = params.to_flat();
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 0..base.len() {
        let mut x = base.clone();
        x[k] = base[k] + h;
        probe.set_flat(&x);
        let lp = loss(&probe, data).unwrap();
        x[k] = base[k] - h;
        probe.set_flat(&x);
        let lm = loss(&probe, data).unwrap();
        let (fwd, bwd) = ((lp - l0) / h, (l0 - lm) / h);
        if (fwd - bwd).abs() > 1e-3 * fwd.abs().max(bwd.abs()).max(1e-6) {
            continue;
        }
        let fd = (lp - lm) / (2.0 * h);
        let g = analytic[k];
        // below 1e-6 the difference quotient is dominated by rounding
        // (about eps * loss / H), so small components are compared absolutely
        let err = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
        worst = worst.max(err);
        checked += 1;
    }
    (worst, checked)
}


pub fn counterexample_data() -> Vec<Sample> {
    let (g7, g8) = counterexample_pair();
    vec![
        Sample {
            graph: build_graph(&g7),
            target: vec![0.0; 8],
        },
        Sample {
            graph: build_graph(&g8),
            target: vec![0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.0, 0.0],
        },
    ]
}

/// Random instances with their SB targets (sentinels included).
pub fn random_data(shape: (usize, usize, usize), count: usize) -> Vec<Sample> {
    let mut out = Vec::new();
    let mut seed = 100;
    while out.len() < count {
        let inst = gen_random(seed, shape.0, shape.1, shape.2);
        seed += 1;
        if let Ok(s) = sb_scores(&inst, ScoreRule::Product) {
            out.push(Sample {
                graph: build_graph(&inst),
                target: s.scores,
            });
        }
    }
    out
}
