//! Instance generators: the small random family used for training, cycle
//! covers (including the counterexample pair), and set covering.

use crate::instance::{Bound, Entry, InstanceParts, MilpInstance, Sense};
use crate::rng::CounterRng;
use crate::sb::{sb_scores, SbError, SbScores, ScoreRule};

/// Random MILP with `nnz` standard-normal entries at uniformly drawn
/// positions. `b`, `c` are standard normal, bound pairs are `N(0, 10²)`
/// sorted into order, senses and integrality are uniform.
///
/// Draw order is fixed: `b`, `c`, positions, values, bound pairs, senses,
/// integrality flags. A zero value draw is redrawn.
pub fn gen_random(seed: u64, m: usize, n: usize, nnz: usize) -> MilpInstance {
    assert!(nnz <= m * n, "nnz = {nnz} exceeds m * n = {}", m * n);
    let mut rng = CounterRng::new(seed);
    let b: Vec<f64> = (0..m).map(|_| rng.standard_normal()).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let mut positions = rng.sample_distinct(m * n, nnz);
    positions.sort_unstable();
    let entries = positions
        .into_iter()
        .map(|p| {
            let mut value = rng.standard_normal();
            while value == 0.0 {
                value = rng.standard_normal();
            }
            Entry { row: p / n, col: p % n, value }
        })
        .collect();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        let l = rng.normal(0.0, 10.0);
        let u = rng.normal(0.0, 10.0);
        lower.push(Bound::Finite(l.min(u)));
        upper.push(Bound::Finite(l.max(u)));
    }
    let senses = (0..m)
        .map(|_| Sense::from_code(rng.below(3) as u8).expect("code below 3"))
        .collect();
    let integer = (0..n).map(|_| rng.coin()).collect();
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
    .expect("generated instance is valid")
}

/// Default family size: 6 constraints, 20 variables, 60 nonzeros.
pub fn gen_random_default(seed: u64) -> MilpInstance {
    gen_random(seed, 6, 20, 60)
}

/// Covering instance on a disjoint union of cycles over binary variables:
/// rows `x_j + x_next(j) >= 1`, unit costs. A cycle of length 2 contributes
/// the row pair `(a, b)`, `(b, a)`, so every variable sits in two rows.
pub fn cycle_cover(lengths: &[usize]) -> MilpInstance {
    let n: usize = lengths.iter().sum();
    let mut entries = Vec::with_capacity(2 * n);
    let mut start = 0;
    for &len in lengths {
        assert!(len >= 2, "cycle length must be at least 2");
        for k in 0..len {
            let row = start + k;
            let a = start + k;
            let b = start + (k + 1) % len;
            entries.push(Entry { row, col: a, value: 1.0 });
            entries.push(Entry { row, col: b, value: 1.0 });
        }
        start += len;
    }
    MilpInstance::new(InstanceParts {
        m: n,
        n,
        c: vec![1.0; n],
        b: vec![1.0; n],
        senses: vec![Sense::Ge; n],
        lower: vec![Bound::Finite(0.0); n],
        upper: vec![Bound::Finite(1.0); n],
        integer: vec![true; n],
        entries,
    })
    .expect("cycle cover is valid")
}

/// The 8-cycle cover and the cover on two triangles plus a 2-cycle.
/// Both are 8-variable binary covering problems with identical local
/// structure: every row and every column has two unit entries.
pub fn counterexample_pair() -> (MilpInstance, MilpInstance) {
    (cycle_cover(&[8]), cycle_cover(&[3, 3, 2]))
}

/// Two constraints, three variables, `A = [[1,1,1],[1,1,0]]`, with identical
/// node features (unit costs and right-hand sides, `>=`, binary).
pub fn two_by_three_example() -> MilpInstance {
    let ones = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1)];
    MilpInstance::new(InstanceParts {
        m: 2,
        n: 3,
        c: vec![1.0; 3],
        b: vec![1.0; 2],
        senses: vec![Sense::Ge; 2],
        lower: vec![Bound::Finite(0.0); 3],
        upper: vec![Bound::Finite(1.0); 3],
        integer: vec![true; 3],
        entries: ones.iter().map(|&(row, col)| Entry { row, col, value: 1.0 }).collect(),
    })
    .expect("valid instance")
}

/// Random set-covering instance: each entry of the 0/1 matrix is one with
/// probability `density`; an empty row is redrawn until it is not.
pub fn gen_set_cover(seed: u64, rows: usize, cols: usize, density: f64) -> MilpInstance {
    assert!(density > 0.0 && density <= 1.0, "density must lie in (0, 1]");
    assert!(cols > 0 || rows == 0, "rows need at least one column to cover them");
    let mut rng = CounterRng::new(seed);
    let mut entries = Vec::new();
    for row in 0..rows {
        loop {
            let hits: Vec<usize> = (0..cols).filter(|_| rng.next_f64() < density).collect();
            if !hits.is_empty() {
                entries.extend(hits.into_iter().map(|col| Entry { row, col, value: 1.0 }));
                break;
            }
        }
    }
    MilpInstance::new(InstanceParts {
        m: rows,
        n: cols,
        c: vec![1.0; cols],
        b: vec![1.0; rows],
        senses: vec![Sense::Ge; rows],
        lower: vec![Bound::Finite(0.0); cols],
        upper: vec![Bound::Finite(1.0); cols],
        integer: vec![true; cols],
        entries,
    })
    .expect("valid set cover")
}

/// One accepted training instance.
#[derive(Debug, Clone)]
pub struct LabeledInstance {
    pub seed: u64,
    pub instance: MilpInstance,
    pub scores: SbScores,
}

/// Random instances whose SB scores are defined, with the number rejected
/// along the way.
#[derive(Debug, Clone)]
pub struct SbDataset {
    pub items: Vec<LabeledInstance>,
    pub rejected_infeasible: usize,
    pub rejected_unbounded: usize,
    /// Rejected because a solve hit a numerical failure.
    pub rejected_numerical: usize,
}

impl SbDataset {
    pub fn rejected(&self) -> usize {
        self.rejected_infeasible + self.rejected_unbounded + self.rejected_numerical
    }
}

/// Draws `gen_random(seed + k, m, n, nnz)` for `k = 0, 1, ...` and keeps the
/// first `count` instances whose LP relaxation is feasible and bounded.
/// Fails if `max_attempts` draws are not enough.
pub fn sb_dataset(
    seed: u64,
    count: usize,
    (m, n, nnz): (usize, usize, usize),
    rule: ScoreRule,
    max_attempts: usize,
) -> Result<SbDataset, SbDataset> {
    let mut out = SbDataset {
        items: Vec::with_capacity(count),
        rejected_infeasible: 0,
        rejected_unbounded: 0,
        rejected_numerical: 0,
    };
    let mut k = 0u64;
    while out.items.len() < count {
        if k as usize >= max_attempts {
            return Err(out);
        }
        let s = seed.wrapping_add(k);
        k += 1;
        let instance = gen_random(s, m, n, nnz);
        match sb_scores(&instance, rule) {
            Ok(scores) => out.items.push(LabeledInstance { seed: s, instance, scores }),
            Err(SbError::RelaxationInfeasible) => out.rejected_infeasible += 1,
            Err(SbError::RelaxationUnbounded) => out.rejected_unbounded += 1,
            Err(_) => out.rejected_numerical += 1,
        }
    }
    Ok(out)
}
