//! MILP data model, its bipartite graph view, and the JSON instance format.
//!
//! An instance is `min c'x  s.t.  Ax ∘ b,  l <= x <= u,  x_j integer for j in I`.
//! The matrix is kept as sorted `(row, col, value)` triplets whose values are
//! all nonzero, so the edge set of the graph view is exactly the support of A.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Constraint sense. Serialized as the integer codes 0 (≤), 1 (=), 2 (≥).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn code(self) -> u8 {
        match self {
            Sense::Le => 0,
            Sense::Eq => 1,
            Sense::Ge => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Sense> {
        match code {
            0 => Some(Sense::Le),
            1 => Some(Sense::Eq),
            2 => Some(Sense::Ge),
            _ => None,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// A variable bound. Infinite bounds are tagged, never encoded as sentinel floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Bound {
    /// The bound as an extended real.
    pub fn value(self) -> f64 {
        match self {
            Bound::NegInf => f64::NEG_INFINITY,
            Bound::Finite(v) => v,
            Bound::PosInf => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Integer code used in hashed signatures: 0 = -inf, 1 = finite, 2 = +inf.
    pub fn code(self) -> u8 {
        match self {
            Bound::NegInf => 0,
            Bound::Finite(_) => 1,
            Bound::PosInf => 2,
        }
    }

    /// Converts an extended real back into a bound.
    pub fn from_value(v: f64) -> Bound {
        if v == f64::NEG_INFINITY {
            Bound::NegInf
        } else if v == f64::INFINITY {
            Bound::PosInf
        } else {
            Bound::Finite(v)
        }
    }
}

/// One nonzero entry of the constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("malformed instance JSON: {0}")]
    Json(String),
    #[error("field `{field}` has length {found}, expected {expected}")]
    Length {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("triplet #{index} ({row}, {col}) is out of range for a {m}x{n} matrix")]
    IndexOutOfRange {
        index: usize,
        row: usize,
        col: usize,
        m: usize,
        n: usize,
    },
    #[error("duplicate triplet for entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("explicit zero stored at entry ({row}, {col})")]
    ExplicitZero { row: usize, col: usize },
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { var: usize, lower: f64, upper: f64 },
    #[error("variable {var}: {reason}")]
    BadBound { var: usize, reason: &'static str },
    #[error("invalid sense code {code} for constraint {row}")]
    BadSense { row: usize, code: i64 },
    #[error("non-finite value in `{field}` at position {index}")]
    NonFinite { field: &'static str, index: usize },
}

/// A validated MILP. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpInstance {
    m: usize,
    n: usize,
    c: Vec<f64>,
    b: Vec<f64>,
    senses: Vec<Sense>,
    lower: Vec<Bound>,
    upper: Vec<Bound>,
    integer: Vec<bool>,
    entries: Vec<Entry>,
}

/// Unvalidated parts of an instance, used to build one.
#[derive(Debug, Clone, Default)]
pub struct InstanceParts {
    pub m: usize,
    pub n: usize,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub senses: Vec<Sense>,
    pub lower: Vec<Bound>,
    pub upper: Vec<Bound>,
    pub integer: Vec<bool>,
    pub entries: Vec<Entry>,
}

fn check_len(field: &'static str, expected: usize, found: usize) -> Result<(), InstanceError> {
    if expected != found {
        return Err(InstanceError::Length {
            field,
            expected,
            found,
        });
    }
    Ok(())
}

fn check_finite(field: &'static str, xs: &[f64]) -> Result<(), InstanceError> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(InstanceError::NonFinite { field, index }),
        None => Ok(()),
    }
}

impl MilpInstance {
    /// Validates the parts and sorts the triplets by `(row, col)`.
    pub fn new(parts: InstanceParts) -> Result<MilpInstance, InstanceError> {
        let InstanceParts {
            m,
            n,
            c,
            b,
            senses,
            lower,
            upper,
            integer,
            mut entries,
        } = parts;
        check_len("c", n, c.len())?;
        check_len("b", m, b.len())?;
        check_len("senses", m, senses.len())?;
        check_len("lower", n, lower.len())?;
        check_len("upper", n, upper.len())?;
        check_len("integer", n, integer.len())?;
        check_finite("c", &c)?;
        check_finite("b", &b)?;

        for j in 0..n {
            let (lo, up) = (lower[j], upper[j]);
            if lo == Bound::PosInf {
                return Err(InstanceError::BadBound {
                    var: j,
                    reason: "lower bound cannot be +inf",
                });
            }
            if up == Bound::NegInf {
                return Err(InstanceError::BadBound {
                    var: j,
                    reason: "upper bound cannot be -inf",
                });
            }
            if [lo, up]
                .iter()
                .any(|b| matches!(b, Bound::Finite(v) if !v.is_finite()))
            {
                return Err(InstanceError::BadBound {
                    var: j,
                    reason: "finite bound holds a non-finite value",
                });
            }
            if lo.value() > up.value() {
                return Err(InstanceError::InvertedBounds {
                    var: j,
                    lower: lo.value(),
                    upper: up.value(),
                });
            }
        }

        for (index, e) in entries.iter().enumerate() {
            if e.row >= m || e.col >= n {
                return Err(InstanceError::IndexOutOfRange {
                    index,
                    row: e.row,
                    col: e.col,
                    m,
                    n,
                });
            }
            if !e.value.is_finite() {
                return Err(InstanceError::NonFinite { field: "A", index });
            }
            if e.value == 0.0 {
                return Err(InstanceError::ExplicitZero {
                    row: e.row,
                    col: e.col,
                });
            }
        }
        entries.sort_by_key(|e| (e.row, e.col));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col))
        {
            return Err(InstanceError::DuplicateEntry {
                row: w[0].row,
                col: w[0].col,
            });
        }

        Ok(MilpInstance {
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
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn objective(&self) -> &[f64] {
        &self.c
    }
    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
    pub fn senses(&self) -> &[Sense] {
        &self.senses
    }
    pub fn lower(&self) -> &[Bound] {
        &self.lower
    }
    pub fn upper(&self) -> &[Bound] {
        &self.upper
    }
    pub fn integer(&self) -> &[bool] {
        &self.integer
    }
    /// Nonzero triplets sorted by `(row, col)`.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn into_parts(self) -> InstanceParts {
        InstanceParts {
            m: self.m,
            n: self.n,
            c: self.c,
            b: self.b,
            senses: self.senses,
            lower: self.lower,
            upper: self.upper,
            integer: self.integer,
            entries: self.entries,
        }
    }

    /// Dense row-major copy of A.
    pub fn dense_matrix(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.m * self.n];
        for e in &self.entries {
            a[e.row * self.n + e.col] = e.value;
        }
        a
    }

    /// Row activities `Ax`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut ax = vec![0.0; self.m];
        for e in &self.entries {
            ax[e.row] += e.value * x[e.col];
        }
        ax
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Relabels rows and columns: row `i` moves to `row_perm[i]`, column `j`
    /// to `col_perm[j]`.
    pub fn permute(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<MilpInstance, PermutationError> {
        check_permutation(row_perm, self.m)?;
        check_permutation(col_perm, self.n)?;
        let mut parts = self.clone().into_parts();
        parts.c = apply_permutation(&self.c, col_perm);
        parts.lower = apply_permutation(&self.lower, col_perm);
        parts.upper = apply_permutation(&self.upper, col_perm);
        parts.integer = apply_permutation(&self.integer, col_perm);
        parts.b = apply_permutation(&self.b, row_perm);
        parts.senses = apply_permutation(&self.senses, row_perm);
        for e in &mut parts.entries {
            e.row = row_perm[e.row];
            e.col = col_perm[e.col];
        }
        Ok(MilpInstance::new(parts).expect("permutation preserves validity"))
    }

    /// Parses the JSON instance format.
    pub fn from_json(text: &[u8]) -> Result<MilpInstance, InstanceError> {
        let raw: RawInstance =
            serde_json::from_slice(text).map_err(|e| InstanceError::Json(e.to_string()))?;
        raw.into_instance()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RawInstance::from(self)).expect("instance serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&RawInstance::from(self)).expect("instance serializes")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermutationError {
    #[error("permutation has length {found}, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("not a permutation: index {0} repeated or out of range")]
    NotBijective(usize),
}

pub fn check_permutation(perm: &[usize], len: usize) -> Result<(), PermutationError> {
    if perm.len() != len {
        return Err(PermutationError::Length {
            expected: len,
            found: perm.len(),
        });
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || seen[p] {
            return Err(PermutationError::NotBijective(p));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Moves `xs[k]` to position `perm[k]`.
pub fn apply_permutation<T: Clone>(xs: &[T], perm: &[usize]) -> Vec<T> {
    let mut out = xs.to_vec();
    for (k, x) in xs.iter().enumerate() {
        out[perm[k]] = x.clone();
    }
    out
}

// --- JSON format -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawInstance {
    m: usize,
    n: usize,
    c: Vec<f64>,
    b: Vec<f64>,
    senses: Vec<i64>,
    lower: Vec<RawBound>,
    upper: Vec<RawBound>,
    integer: Vec<bool>,
    #[serde(rename = "A")]
    a: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Copy)]
enum RawBound {
    Num(f64),
    NegInf,
    PosInf,
}

impl Serialize for RawBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RawBound::Num(v) => s.serialize_f64(*v),
            RawBound::NegInf => s.serialize_str("-inf"),
            RawBound::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for RawBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Num(f64),
            Str(String),
        }
        match Either::deserialize(d)? {
            Either::Num(v) => Ok(RawBound::Num(v)),
            Either::Str(s) if s == "-inf" => Ok(RawBound::NegInf),
            Either::Str(s) if s == "+inf" => Ok(RawBound::PosInf),
            Either::Str(s) => Err(serde::de::Error::custom(format!(
                "bound must be a number, \"-inf\" or \"+inf\", got {s:?}"
            ))),
        }
    }
}

impl From<Bound> for RawBound {
    fn from(b: Bound) -> Self {
        match b {
            Bound::NegInf => RawBound::NegInf,
            Bound::Finite(v) => RawBound::Num(v),
            Bound::PosInf => RawBound::PosInf,
        }
    }
}

impl From<RawBound> for Bound {
    fn from(b: RawBound) -> Self {
        match b {
            RawBound::NegInf => Bound::NegInf,
            RawBound::Num(v) => Bound::Finite(v),
            RawBound::PosInf => Bound::PosInf,
        }
    }
}

impl From<&MilpInstance> for RawInstance {
    fn from(inst: &MilpInstance) -> Self {
        RawInstance {
            m: inst.m,
            n: inst.n,
            c: inst.c.clone(),
            b: inst.b.clone(),
            senses: inst.senses.iter().map(|s| s.code() as i64).collect(),
            lower: inst.lower.iter().map(|&b| b.into()).collect(),
            upper: inst.upper.iter().map(|&b| b.into()).collect(),
            integer: inst.integer.clone(),
            a: inst.entries.iter().map(|e| (e.row, e.col, e.value)).collect(),
        }
    }
}

impl RawInstance {
    fn into_instance(self) -> Result<MilpInstance, InstanceError> {
        let senses = self
            .senses
            .iter()
            .enumerate()
            .map(|(row, &code)| {
                u8::try_from(code)
                    .ok()
                    .and_then(Sense::from_code)
                    .ok_or(InstanceError::BadSense { row, code })
            })
            .collect::<Result<Vec<_>, _>>()?;
        MilpInstance::new(InstanceParts {
            m: self.m,
            n: self.n,
            c: self.c,
            b: self.b,
            senses,
            lower: self.lower.into_iter().map(Bound::from).collect(),
            upper: self.upper.into_iter().map(Bound::from).collect(),
            integer: self.integer,
            entries: self
                .a
                .into_iter()
                .map(|(row, col, value)| Entry { row, col, value })
                .collect(),
        })
    }
}

// --- graph view ------------------------------------------------------------

/// Constraint-node feature `(b_i, ∘_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintFeature {
    pub rhs: f64,
    pub sense: Sense,
}

/// Variable-node feature `(c_j, l_j, u_j, δ_I(j))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableFeature {
    pub cost: f64,
    pub lower: Bound,
    pub upper: Bound,
    pub integer: bool,
}

/// Weighted bipartite graph: constraints `V = 0..m`, variables `W = 0..n`,
/// and an edge `(i, j, A_ij)` for every nonzero of A.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpGraph {
    pub constraints: Vec<ConstraintFeature>,
    pub variables: Vec<VariableFeature>,
    /// Edges sorted by `(row, col)`.
    pub edges: Vec<Entry>,
    /// `row_adj[i]` = `(j, A_ij)` sorted by `j`.
    pub row_adj: Vec<Vec<(usize, f64)>>,
    /// `col_adj[j]` = `(i, A_ij)` sorted by `i`.
    pub col_adj: Vec<Vec<(usize, f64)>>,
}

impl MilpGraph {
    pub fn m(&self) -> usize {
        self.constraints.len()
    }
    pub fn n(&self) -> usize {
        self.variables.len()
    }

    /// Dense row-major weight matrix, zeros off the support.
    pub fn dense_weights(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; self.m() * n];
        for e in &self.edges {
            a[e.row * n + e.col] = e.value;
        }
        a
    }
}

pub fn build_graph(inst: &MilpInstance) -> MilpGraph {
    let constraints = (0..inst.m)
        .map(|i| ConstraintFeature {
            rhs: inst.b[i],
            sense: inst.senses[i],
        })
        .collect();
    let variables = (0..inst.n)
        .map(|j| VariableFeature {
            cost: inst.c[j],
            lower: inst.lower[j],
            upper: inst.upper[j],
            integer: inst.integer[j],
        })
        .collect();
    let mut row_adj = vec![Vec::new(); inst.m];
    let mut col_adj = vec![Vec::new(); inst.n];
    // entries are sorted by (row, col), so both lists come out index-ordered
    for e in &inst.entries {
        row_adj[e.row].push((e.col, e.value));
        col_adj[e.col].push((e.row, e.value));
    }
    MilpGraph {
        constraints,
        variables,
        edges: inst.entries.clone(),
        row_adj,
        col_adj,
    }
}
