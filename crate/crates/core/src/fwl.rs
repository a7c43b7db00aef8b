//! 2-FWL refinement on MILP-graphs: colors on constraint-variable pairs
//! `(i, j)` and variable-variable pairs `(j1, j2)`, refined through the
//! triangles they close. Interning follows the `wl` module.

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::instance::MilpGraph;
use crate::wl::{check_sizes, constraint_key, intern, variable_key, weight_key, SizeMismatch, WlOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairColoring {
    pub round: usize,
    pub m: usize,
    pub n: usize,
    /// Row-major `m x n`: color of `(i, j)` at `i * n + j`.
    pub vw: Vec<u32>,
    /// Row-major `n x n`: color of `(j1, j2)` at `j1 * n + j2`.
    pub ww: Vec<u32>,
}

impl PairColoring {
    pub fn vw(&self, i: usize, j: usize) -> u32 {
        self.vw[i * self.n + j]
    }

    pub fn ww(&self, j1: usize, j2: usize) -> u32 {
        self.ww[j1 * self.n + j2]
    }

    /// Sorted VW colors of column `j`, over all constraints.
    pub fn vw_column(&self, j: usize) -> Vec<u32> {
        let mut c: Vec<u32> = (0..self.m).map(|i| self.vw(i, j)).collect();
        c.sort_unstable();
        c
    }

    /// Sorted WW colors `(j1, j)` over all `j1`.
    pub fn ww_column(&self, j: usize) -> Vec<u32> {
        let mut c: Vec<u32> = (0..self.n).map(|j1| self.ww(j1, j)).collect();
        c.sort_unstable();
        c
    }

    pub fn class_counts(&self) -> (usize, usize) {
        (distinct(&self.vw), distinct(&self.ww))
    }
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn pack(a: u32, b: u32) -> u64 {
    ((a as u64) << 32) | b as u64
}

fn initial(graphs: &[&MilpGraph], opts: &WlOptions) -> Vec<PairColoring> {
    let mut vw_keys = Vec::with_capacity(graphs.len());
    let mut ww_keys = Vec::with_capacity(graphs.len());
    for g in graphs {
        let (m, n) = (g.m(), g.n());
        let a = g.dense_weights();
        let vkeys: Vec<Vec<u64>> = (0..m).map(|i| constraint_key(g, i)).collect();
        let wkeys: Vec<Vec<u64>> = (0..n).map(|j| variable_key(g, j)).collect();
        let mut vw = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                let mut k = vkeys[i].clone();
                k.extend(&wkeys[j]);
                k.push(weight_key(a[i * n + j], opts));
                vw.push(k);
            }
        }
        let mut ww = Vec::with_capacity(n * n);
        for j1 in 0..n {
            for j2 in 0..n {
                let mut k = wkeys[j1].clone();
                k.extend(&wkeys[j2]);
                k.push((j1 == j2) as u64);
                ww.push(k);
            }
        }
        vw_keys.push(vw);
        ww_keys.push(ww);
    }
    assemble(0, graphs, &vw_keys, &ww_keys)
}

fn assemble(round: usize, graphs: &[&MilpGraph], vw_keys: &[Vec<Vec<u64>>], ww_keys: &[Vec<Vec<u64>>]) -> Vec<PairColoring> {
    let vrefs: Vec<&[Vec<u64>]> = vw_keys.iter().map(|v| v.as_slice()).collect();
    let wrefs: Vec<&[Vec<u64>]> = ww_keys.iter().map(|v| v.as_slice()).collect();
    intern(&vrefs)
        .into_iter()
        .zip(intern(&wrefs))
        .zip(graphs)
        .map(|((vw, ww), g)| PairColoring {
            round,
            m: g.m(),
            n: g.n(),
            vw,
            ww,
        })
        .collect()
}

fn step(graphs: &[&MilpGraph], prev: &[PairColoring]) -> Vec<PairColoring> {
    let mut vw_keys = Vec::with_capacity(prev.len());
    let mut ww_keys = Vec::with_capacity(prev.len());
    for c in prev {
        let (m, n) = (c.m, c.n);
        let mut vw = Vec::with_capacity(m * n);
        let mut pairs = Vec::with_capacity(n.max(m));
        for i in 0..m {
            for j in 0..n {
                pairs.clear();
                pairs.extend((0..n).map(|j1| pack(c.ww(j1, j), c.vw(i, j1))));
                pairs.sort_unstable();
                let mut k = Vec::with_capacity(n + 1);
                k.push(c.vw(i, j) as u64);
                k.extend_from_slice(&pairs);
                vw.push(k);
            }
        }
        let mut ww = Vec::with_capacity(n * n);
        for j1 in 0..n {
            for j2 in 0..n {
                pairs.clear();
                pairs.extend((0..m).map(|i| pack(c.vw(i, j2), c.vw(i, j1))));
                pairs.sort_unstable();
                let mut k = Vec::with_capacity(m + 1);
                k.push(c.ww(j1, j2) as u64);
                k.extend_from_slice(&pairs);
                ww.push(k);
            }
        }
        vw_keys.push(vw);
        ww_keys.push(ww);
    }
    assemble(prev[0].round + 1, graphs, &vw_keys, &ww_keys)
}

fn joint_counts(colorings: &[PairColoring]) -> (usize, usize) {
    let vw: Vec<u32> = colorings.iter().flat_map(|c| c.vw.iter().copied()).collect();
    let ww: Vec<u32> = colorings.iter().flat_map(|c| c.ww.iter().copied()).collect();
    (distinct(&vw), distinct(&ww))
}

/// Joint refinement until the total number of pair classes stops growing.
/// Also returns the joint `(VW, WW)` class counts of every round computed,
/// the last one being the confirming round.
fn refine_to_stability(graphs: &[&MilpGraph], opts: &WlOptions) -> (Vec<PairColoring>, Vec<(usize, usize)>) {
    let mut cur = initial(graphs, opts);
    let mut history = vec![joint_counts(&cur)];
    loop {
        let next = step(graphs, &cur);
        let counts = joint_counts(&next);
        let before = history.last().expect("nonempty");
        let stable = counts.0 + counts.1 == before.0 + before.1;
        history.push(counts);
        if stable {
            return (cur, history);
        }
        cur = next;
    }
}

/// Pair colors after `rounds` refinement rounds.
pub fn fwl2_refine(g: &MilpGraph, rounds: usize) -> PairColoring {
    let mut cur = initial(&[g], &WlOptions::default());
    for _ in 0..rounds {
        cur = step(&[g], &cur);
    }
    cur.pop().expect("one coloring")
}

/// Stable pair coloring of one graph.
pub fn fwl2_stable(g: &MilpGraph) -> PairColoring {
    refine_to_stability(&[g], &WlOptions::default()).0.pop().expect("one coloring")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fwl2Comparison {
    /// Whole-multiset equality of the stable VW and WW colors.
    pub similar: bool,
    /// Per-variable-column equality of the stable VW and WW colors.
    pub similar_w: bool,
    /// First stable round.
    pub rounds: usize,
    /// Joint `(VW, WW)` class counts per round, round 0 first.
    pub class_counts: Vec<(usize, usize)>,
}

pub fn fwl2_compare(g1: &MilpGraph, g2: &MilpGraph) -> Result<Fwl2Comparison, SizeMismatch> {
    check_sizes(g1, g2)?;
    let (c, class_counts) = refine_to_stability(&[g1, g2], &WlOptions::default());
    let sorted = |xs: &[u32]| {
        let mut v = xs.to_vec();
        v.sort_unstable();
        v
    };
    let similar = sorted(&c[0].vw) == sorted(&c[1].vw) && sorted(&c[0].ww) == sorted(&c[1].ww);
    let similar_w =
        (0..g1.n()).all(|j| c[0].vw_column(j) == c[1].vw_column(j) && c[0].ww_column(j) == c[1].ww_column(j));
    Ok(Fwl2Comparison {
        similar,
        similar_w,
        rounds: c[0].round,
        class_counts,
    })
}

pub fn fwl2_indistinguishable(g1: &MilpGraph, g2: &MilpGraph) -> Result<bool, SizeMismatch> {
    fwl2_compare(g1, g2).map(|c| c.similar)
}

pub fn fwl2_indistinguishable_w(g1: &MilpGraph, g2: &MilpGraph) -> Result<bool, SizeMismatch> {
    fwl2_compare(g1, g2).map(|c| c.similar_w)
}

/// Groups variables whose stable WW-column multisets coincide. Variables in
/// one group have equal strong-branching scores.
pub fn variable_column_classes(g: &MilpGraph) -> Vec<Vec<usize>> {
    let c = fwl2_stable(g);
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for j in 0..g.n() {
        groups.entry(c.ww_column(j)).or_default().push(j);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_unstable_by_key(|v| v[0]);
    out
}

pub fn comparison_report(c: &Fwl2Comparison) -> Value {
    json!({
        "similar": c.similar,
        "similar_w": c.similar_w,
        "rounds": c.rounds,
        "class_counts": c.class_counts.iter().map(|(vw, ww)| json!({"vw": vw, "ww": ww})).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::counterexample_pair;
    use crate::instance::{build_graph, Bound, Entry, InstanceParts, MilpInstance, Sense};

    #[test]
    fn round_zero_ww_is_diagonal_or_not() {
        let (g7, _) = counterexample_pair();
        let c = fwl2_refine(&build_graph(&g7), 0);
        assert_eq!(c.class_counts().1, 2);
        assert_eq!(fwl2_refine(&build_graph(&g7), 0), c);
    }

    #[test]
    fn counterexample_pair_is_separated() {
        let (g7, g8) = counterexample_pair();
        let (a, b) = (build_graph(&g7), build_graph(&g8));
        let cmp = fwl2_compare(&a, &b).unwrap();
        assert!(!cmp.similar);
        assert!(!cmp.similar_w);
        let same = fwl2_compare(&a, &a).unwrap();
        assert!(same.similar && same.similar_w);
    }

    #[test]
    fn triangles_and_two_cycle_get_different_columns() {
        let (_, g8) = counterexample_pair();
        let classes = variable_column_classes(&build_graph(&g8));
        assert_eq!(classes, vec![(0..6).collect::<Vec<_>>(), vec![6, 7]]);
        let (g7, _) = counterexample_pair();
        assert_eq!(variable_column_classes(&build_graph(&g7)).len(), 1);
    }

    #[test]
    fn variable_relabeling_keeps_whole_multisets_only() {
        // x1 - x2 >= 0 with different costs: swapping the variables changes
        // every column but not the multisets
        let inst = MilpInstance::new(InstanceParts {
            m: 1,
            n: 2,
            c: vec![1.0, 2.0],
            b: vec![0.0],
            senses: vec![Sense::Ge],
            lower: vec![Bound::Finite(0.0); 2],
            upper: vec![Bound::Finite(1.0); 2],
            integer: vec![true; 2],
            entries: vec![Entry { row: 0, col: 0, value: 1.0 }, Entry { row: 0, col: 1, value: -1.0 }],
        })
        .unwrap();
        let swapped = inst.permute(&[0], &[1, 0]).unwrap();
        let cmp = fwl2_compare(&build_graph(&inst), &build_graph(&swapped)).unwrap();
        assert!(cmp.similar);
        assert!(!cmp.similar_w);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let (g7, _) = counterexample_pair();
        let small = crate::gen::two_by_three_example();
        assert!(fwl2_compare(&build_graph(&g7), &build_graph(&small)).is_err());
    }
}
