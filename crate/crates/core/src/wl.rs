//! WL color refinement on MILP-graphs, stable partitions, and the
//! MP-tractability test.
//!
//! Colors are assigned by canonical interning: each round, every node's
//! signature (own color plus the sorted multiset of neighbor colors and edge
//! weights) is collected, the distinct signatures are sorted, and a node's
//! new color is the rank of its signature. Equal colors therefore mean equal
//! signatures, and colors do not depend on node order.

use std::collections::HashMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::instance::{build_graph, Bound, MilpGraph, MilpInstance};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WlOptions {
    /// When set, edge weights are compared after rounding to multiples of
    /// this step; otherwise by exact bit pattern.
    pub weight_quantum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub round: usize,
    pub constraints: Vec<u32>,
    pub variables: Vec<u32>,
}

impl Coloring {
    pub fn class_count(&self) -> usize {
        distinct(&self.constraints) + distinct(&self.variables)
    }
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StablePartition {
    /// Constraint classes, each sorted, ordered by smallest member.
    pub constraint_classes: Vec<Vec<usize>>,
    pub variable_classes: Vec<Vec<usize>>,
    /// First round whose partition equals the one after it.
    pub rounds: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("graphs differ in size: ({m1}, {n1}) vs ({m2}, {n2})")]
pub struct SizeMismatch {
    pub m1: usize,
    pub n1: usize,
    pub m2: usize,
    pub n2: usize,
}

pub(crate) fn check_sizes(g1: &MilpGraph, g2: &MilpGraph) -> Result<(), SizeMismatch> {
    if g1.m() != g2.m() || g1.n() != g2.n() {
        return Err(SizeMismatch {
            m1: g1.m(),
            n1: g1.n(),
            m2: g2.m(),
            n2: g2.n(),
        });
    }
    Ok(())
}

// --- signatures ------------------------------------------------------------

const TAG_CONSTRAINT: u64 = 1;
const TAG_VARIABLE: u64 = 2;

pub(crate) fn real_key(v: f64) -> u64 {
    // -0.0 and 0.0 are the same number
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

fn bound_key(b: Bound) -> [u64; 2] {
    [b.code() as u64, b.finite().map_or(0, real_key)]
}

pub(crate) fn weight_key(w: f64, opts: &WlOptions) -> u64 {
    match opts.weight_quantum {
        Some(q) => ((w / q).round() as i64) as u64,
        None => real_key(w),
    }
}

pub(crate) fn constraint_key(g: &MilpGraph, i: usize) -> Vec<u64> {
    let v = &g.constraints[i];
    vec![TAG_CONSTRAINT, real_key(v.rhs), v.sense.code() as u64]
}

pub(crate) fn variable_key(g: &MilpGraph, j: usize) -> Vec<u64> {
    let w = &g.variables[j];
    let mut k = vec![TAG_VARIABLE, real_key(w.cost)];
    k.extend(bound_key(w.lower));
    k.extend(bound_key(w.upper));
    k.push(w.integer as u64);
    k
}

/// Replaces each key by the rank of its value among all distinct keys.
pub(crate) fn intern(keys: &[&[Vec<u64>]]) -> Vec<Vec<u32>> {
    let mut all: Vec<&Vec<u64>> = keys.iter().flat_map(|ks| ks.iter()).collect();
    all.sort_unstable();
    all.dedup();
    let rank: HashMap<&Vec<u64>, u32> = all.iter().enumerate().map(|(r, k)| (*k, r as u32)).collect();
    keys.iter().map(|ks| ks.iter().map(|k| rank[k]).collect()).collect()
}

fn neighborhood_key(own: u32, adj: &[(usize, f64)], colors: &[u32], opts: &WlOptions) -> Vec<u64> {
    let mut pairs: Vec<(u64, u64)> = adj
        .iter()
        .map(|&(k, w)| (colors[k] as u64, weight_key(w, opts)))
        .collect();
    pairs.sort_unstable();
    let mut key = Vec::with_capacity(1 + 2 * pairs.len());
    key.push(own as u64);
    for (c, w) in pairs {
        key.push(c);
        key.push(w);
    }
    key
}

// --- refinement ------------------------------------------------------------

fn initial(graphs: &[&MilpGraph]) -> Vec<Coloring> {
    let vkeys: Vec<Vec<Vec<u64>>> = graphs
        .iter()
        .map(|g| (0..g.m()).map(|i| constraint_key(g, i)).collect())
        .collect();
    let wkeys: Vec<Vec<Vec<u64>>> = graphs
        .iter()
        .map(|g| (0..g.n()).map(|j| variable_key(g, j)).collect())
        .collect();
    assemble(0, &vkeys, &wkeys)
}

fn assemble(round: usize, vkeys: &[Vec<Vec<u64>>], wkeys: &[Vec<Vec<u64>>]) -> Vec<Coloring> {
    let vrefs: Vec<&[Vec<u64>]> = vkeys.iter().map(|v| v.as_slice()).collect();
    let wrefs: Vec<&[Vec<u64>]> = wkeys.iter().map(|v| v.as_slice()).collect();
    intern(&vrefs)
        .into_iter()
        .zip(intern(&wrefs))
        .map(|(constraints, variables)| Coloring {
            round,
            constraints,
            variables,
        })
        .collect()
}

/// One round of Algorithm-1 refinement applied jointly to several graphs.
fn step(graphs: &[&MilpGraph], prev: &[Coloring], opts: &WlOptions) -> Vec<Coloring> {
    let vkeys: Vec<Vec<Vec<u64>>> = graphs
        .iter()
        .zip(prev)
        .map(|(g, c)| {
            (0..g.m())
                .map(|i| neighborhood_key(c.constraints[i], &g.row_adj[i], &c.variables, opts))
                .collect()
        })
        .collect();
    let wkeys: Vec<Vec<Vec<u64>>> = graphs
        .iter()
        .zip(prev)
        .map(|(g, c)| {
            (0..g.n())
                .map(|j| neighborhood_key(c.variables[j], &g.col_adj[j], &c.constraints, opts))
                .collect()
        })
        .collect();
    assemble(prev[0].round + 1, &vkeys, &wkeys)
}

fn joint_class_count(colorings: &[Coloring]) -> usize {
    let v: Vec<u32> = colorings.iter().flat_map(|c| c.constraints.iter().copied()).collect();
    let w: Vec<u32> = colorings.iter().flat_map(|c| c.variables.iter().copied()).collect();
    distinct(&v) + distinct(&w)
}

/// Refines jointly until the number of classes stops growing. Returns the
/// stable colorings; their `round` is the first stable round.
pub(crate) fn refine_to_stability(graphs: &[&MilpGraph], opts: &WlOptions) -> Vec<Coloring> {
    let mut cur = initial(graphs);
    let mut count = joint_class_count(&cur);
    loop {
        let next = step(graphs, &cur, opts);
        let next_count = joint_class_count(&next);
        if next_count == count {
            return cur;
        }
        cur = next;
        count = next_count;
    }
}

/// Colors after `rounds` rounds of refinement.
pub fn wl_refine(g: &MilpGraph, rounds: usize) -> Coloring {
    wl_refine_with(g, rounds, &WlOptions::default())
}

pub fn wl_refine_with(g: &MilpGraph, rounds: usize, opts: &WlOptions) -> Coloring {
    let mut cur = initial(&[g]);
    for _ in 0..rounds {
        cur = step(&[g], &cur, opts);
    }
    cur.pop().expect("one graph in, one coloring out")
}

pub(crate) fn classes(colors: &[u32]) -> Vec<Vec<usize>> {
    let mut by_color: HashMap<u32, Vec<usize>> = HashMap::new();
    for (k, &c) in colors.iter().enumerate() {
        by_color.entry(c).or_default().push(k);
    }
    let mut out: Vec<Vec<usize>> = by_color.into_values().collect();
    out.sort_unstable_by_key(|c| c[0]);
    out
}

pub fn stable_partition(g: &MilpGraph) -> StablePartition {
    stable_partition_with(g, &WlOptions::default())
}

pub fn stable_partition_with(g: &MilpGraph, opts: &WlOptions) -> StablePartition {
    let c = refine_to_stability(&[g], opts).pop().expect("one coloring");
    StablePartition {
        constraint_classes: classes(&c.constraints),
        variable_classes: classes(&c.variables),
        rounds: c.round,
    }
}

/// True iff jointly refined to stability, the two graphs have equal
/// constraint-color multisets and equal variable colors index by index.
pub fn wl_indistinguishable(g1: &MilpGraph, g2: &MilpGraph) -> Result<bool, SizeMismatch> {
    wl_indistinguishable_with(g1, g2, &WlOptions::default())
}

pub fn wl_indistinguishable_with(g1: &MilpGraph, g2: &MilpGraph, opts: &WlOptions) -> Result<bool, SizeMismatch> {
    check_sizes(g1, g2)?;
    let c = refine_to_stability(&[g1, g2], opts);
    let mut v1 = c[0].constraints.clone();
    let mut v2 = c[1].constraints.clone();
    v1.sort_unstable();
    v2.sort_unstable();
    Ok(v1 == v2 && c[0].variables == c[1].variables)
}

// --- MP-tractability ---------------------------------------------------------

/// Two entries of one block of the stable partition with different values.
/// Indices are 0-based; a structural zero has value 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub constraint_class: usize,
    pub variable_class: usize,
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub values: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tractability {
    pub tractable: bool,
    pub partition: StablePartition,
    pub witness: Option<Witness>,
}

pub fn is_mp_tractable(inst: &MilpInstance) -> Tractability {
    tractability(&build_graph(inst), &WlOptions::default())
}

/// Checks that every block of the stable partition is a constant matrix,
/// structural zeros included. Runs in time linear in the number of nonzeros
/// once the partition is known.
pub fn tractability(g: &MilpGraph, opts: &WlOptions) -> Tractability {
    let partition = stable_partition_with(g, opts);
    let witness = find_witness(g, &partition);
    Tractability {
        tractable: witness.is_none(),
        partition,
        witness,
    }
}

fn find_witness(g: &MilpGraph, part: &StablePartition) -> Option<Witness> {
    let mut col_class = vec![0; g.n()];
    for (q, class) in part.variable_classes.iter().enumerate() {
        for &j in class {
            col_class[j] = q;
        }
    }
    let value_at = |i: usize, j: usize| -> f64 {
        g.row_adj[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map_or(0.0, |pos| g.row_adj[i][pos].1)
    };

    for (p, rows) in part.constraint_classes.iter().enumerate() {
        // per row: class q -> (count, first column, its value)
        let mut per_row: Vec<HashMap<usize, (usize, usize, f64)>> = Vec::with_capacity(rows.len());
        let mut touched: Vec<usize> = Vec::new();
        for &i in rows {
            let mut seen: HashMap<usize, (usize, usize, f64)> = HashMap::new();
            for &(j, a) in &g.row_adj[i] {
                let q = col_class[j];
                match seen.get_mut(&q) {
                    None => {
                        seen.insert(q, (1, j, a));
                        touched.push(q);
                    }
                    Some(entry) => {
                        if entry.2 != a {
                            return Some(Witness {
                                constraint_class: p,
                                variable_class: q,
                                rows: (i, i),
                                cols: (entry.1, j),
                                values: (entry.2, a),
                            });
                        }
                        entry.0 += 1;
                    }
                }
            }
            per_row.push(seen);
        }
        touched.sort_unstable();
        touched.dedup();
        for q in touched {
            let cols = &part.variable_classes[q];
            let mut reference: Option<(usize, usize, f64)> = None;
            for (&i, seen) in rows.iter().zip(&per_row) {
                let Some(&(count, j, a)) = seen.get(&q) else {
                    // a nonzero elsewhere in this block meets this row's zero
                    let (i0, j0, a0) = reference.unwrap_or_else(|| {
                        let (k, s) = rows
                            .iter()
                            .zip(&per_row)
                            .find(|(_, s)| s.contains_key(&q))
                            .expect("block was touched");
                        let &(_, j0, a0) = &s[&q];
                        (*k, j0, a0)
                    });
                    return Some(Witness {
                        constraint_class: p,
                        variable_class: q,
                        rows: (i0, i),
                        cols: (j0, j0),
                        values: (a0, 0.0),
                    });
                };
                if count < cols.len() {
                    let j_zero = *cols.iter().find(|&&k| value_at(i, k) == 0.0).expect("row misses a column");
                    return Some(Witness {
                        constraint_class: p,
                        variable_class: q,
                        rows: (i, i),
                        cols: (j, j_zero),
                        values: (a, 0.0),
                    });
                }
                match reference {
                    None => reference = Some((i, j, a)),
                    Some((i0, j0, a0)) if a0 != a => {
                        return Some(Witness {
                            constraint_class: p,
                            variable_class: q,
                            rows: (i0, i),
                            cols: (j0, j),
                            values: (a0, a),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
    }
    None
}

/// JSON report of a tractability check. Class members and witness indices
/// are 1-based; class numbers in the witness are 1-based as well.
pub fn partition_report(t: &Tractability) -> Value {
    let one_based = |classes: &[Vec<usize>]| -> Vec<Vec<usize>> {
        classes.iter().map(|c| c.iter().map(|k| k + 1).collect()).collect()
    };
    let witness = t.witness.map_or(Value::Null, |w| {
        json!({
            "p": w.constraint_class + 1,
            "q": w.variable_class + 1,
            "i": w.rows.0 + 1,
            "i_prime": w.rows.1 + 1,
            "j": w.cols.0 + 1,
            "j_prime": w.cols.1 + 1,
            "values": [w.values.0, w.values.1],
        })
    });
    json!({
        "I": one_based(&t.partition.constraint_classes),
        "J": one_based(&t.partition.variable_classes),
        "rounds": t.partition.rounds,
        "tractable": t.tractable,
        "witness": witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{counterexample_pair, two_by_three_example};

    #[test]
    fn two_by_three_rounds() {
        let g = build_graph(&two_by_three_example());
        let c0 = wl_refine(&g, 0);
        assert_eq!(c0.constraints[0], c0.constraints[1]);
        assert!(c0.variables.iter().all(|&c| c == c0.variables[0]));
        let c1 = wl_refine(&g, 1);
        assert_ne!(c1.constraints[0], c1.constraints[1]);
        assert_eq!(c1.variables[0], c1.variables[1]);
        assert_ne!(c1.variables[0], c1.variables[2]);
        assert_eq!(wl_refine(&g, 0), c0);
    }

    #[test]
    fn two_by_three_partition_is_tractable() {
        let t = is_mp_tractable(&two_by_three_example());
        assert_eq!(t.partition.constraint_classes, vec![vec![0], vec![1]]);
        assert_eq!(t.partition.variable_classes, vec![vec![0, 1], vec![2]]);
        assert!(t.tractable);
        let r = partition_report(&t);
        assert_eq!(r["J"], json!([[1, 2], [3]]));
    }

    #[test]
    fn counterexamples_are_monochrome_and_intractable() {
        let (g7, g8) = counterexample_pair();
        for inst in [&g7, &g8] {
            let t = is_mp_tractable(inst);
            assert_eq!(t.partition.constraint_classes, vec![(0..8).collect::<Vec<_>>()]);
            assert_eq!(t.partition.variable_classes, vec![(0..8).collect::<Vec<_>>()]);
            assert!(!t.tractable);
            let w = t.witness.unwrap();
            assert_ne!(w.values.0, w.values.1);
            assert_eq!(w.values.0, inst.dense_matrix()[w.rows.0 * 8 + w.cols.0]);
            assert_eq!(w.values.1, inst.dense_matrix()[w.rows.1 * 8 + w.cols.1]);
        }
        let (a, b) = (build_graph(&g7), build_graph(&g8));
        assert_eq!(wl_indistinguishable(&a, &b), Ok(true));
    }

    #[test]
    fn changed_feature_is_seen_at_round_zero() {
        let base = two_by_three_example();
        let mut parts = base.clone().into_parts();
        parts.c[0] = 2.0;
        let other = MilpInstance::new(parts).unwrap();
        let (a, b) = (build_graph(&base), build_graph(&other));
        assert_eq!(wl_indistinguishable(&a, &a), Ok(true));
        assert_eq!(wl_indistinguishable(&a, &b), Ok(false));
        let c = initial(&[&a, &b]);
        assert_ne!(c[0].variables, c[1].variables);
    }

    #[test]
    fn size_mismatch() {
        let (g7, _) = counterexample_pair();
        let a = build_graph(&g7);
        let b = build_graph(&two_by_three_example());
        assert!(wl_indistinguishable(&a, &b).is_err());
    }

    #[test]
    fn quantized_weights_merge_nearby_values() {
        let mut parts = two_by_three_example().into_parts();
        parts.entries[2].value = 1.0 + 1e-12; // A[0][2]
        parts.entries[4].value = 1.0 - 1e-12; // A[1][1]
        let g = build_graph(&MilpInstance::new(parts).unwrap());
        let exact = stable_partition(&g);
        let coarse = stable_partition_with(&g, &WlOptions { weight_quantum: Some(1e-6) });
        assert_eq!(exact.variable_classes.len(), 3);
        assert_eq!(coarse.variable_classes, vec![vec![0, 1], vec![2]]);
    }
}
