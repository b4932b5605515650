//! Frames: small subsets of a strongly rectangular relation that generate it
//! under a Mal'tsev operation, together with a coherent witness function.

mod build;
mod closure;
mod ops;

pub use build::{
    add_constraint, add_constraint_split, build_frame, build_frame_with, Constraint, Instance,
    InstanceError, ResolvedConstraint,
};
pub use closure::closure_project;
pub use ops::{fix_first, fix_prefix, initial_frame, shrink_to_small};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::maltsev::MaltsevOp;
use crate::relations::{Elem, Relation, Tuple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("witness for ({a}, {i}) points at row {row}, which does not exist")]
    DanglingWitness { a: Elem, i: usize, row: usize },
    #[error("witness for ({a}, {i}) has value {found} at that position")]
    WrongWitness { a: Elem, i: usize, found: Elem },
    #[error("value {a} occurs at position {i} but has no witness")]
    MissingWitness { a: Elem, i: usize },
    #[error("row {row} has length {len}, expected {n}")]
    RowLength { row: usize, len: usize, n: usize },
    #[error(
        "relation is not strongly rectangular: no witness for ({a}, {i}) with the class prefix"
    )]
    NoCoherentWitness { a: Elem, i: usize },
}

/// A frame of arity `n` over `0..q`.
///
/// `witness[i][a]` is the index of a row with value `a` at position `i`,
/// defined exactly for `a` in the `i`-th projection. Witnesses of values in
/// the same prefix class at `i` share their first `i` coordinates.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    n: usize,
    q: u32,
    rows: Vec<Tuple>,
    witness: Vec<Vec<Option<usize>>>,
}

impl Frame {
    /// The frame of the empty relation.
    pub fn empty(n: usize, q: u32) -> Self {
        Self {
            n,
            q,
            rows: Vec::new(),
            witness: vec![vec![None; q as usize]; n],
        }
    }

    /// The frame of the arity-0 relation containing the empty tuple.
    pub fn unit(q: u32) -> Self {
        Self {
            n: 0,
            q,
            rows: vec![Vec::new()],
            witness: Vec::new(),
        }
    }

    /// Builds a frame from rows and witness triples `(a, i, row)`, checking
    /// the structural invariants.
    pub fn from_parts(
        n: usize,
        q: u32,
        rows: Vec<Tuple>,
        witnesses: impl IntoIterator<Item = (Elem, usize, usize)>,
    ) -> Result<Self, FrameError> {
        let mut witness = vec![vec![None; q as usize]; n];
        for (a, i, row) in witnesses {
            witness[i][a as usize] = Some(row);
        }
        let f = Self {
            n,
            q,
            rows,
            witness,
        };
        f.validate()?;
        Ok(f)
    }

    /// Builds rows and witnesses where witnesses are given as tuples, then
    /// deduplicates rows.
    pub(crate) fn from_witness_tuples(
        n: usize,
        q: u32,
        assigned: Vec<(Elem, usize, Tuple)>,
    ) -> Self {
        let mut index: BTreeMap<Tuple, usize> = BTreeMap::new();
        let mut rows = Vec::new();
        let mut witness = vec![vec![None; q as usize]; n];
        for (a, i, t) in assigned {
            let r = *index.entry(t.clone()).or_insert_with(|| {
                rows.push(t);
                rows.len() - 1
            });
            witness[i][a as usize] = Some(r);
        }
        Self {
            n,
            q,
            rows,
            witness,
        }
    }

    /// A frame for an explicitly given relation, using all of its tuples as
    /// rows. Fails if `r` admits no coherent witness function, which happens
    /// only when `r` is not strongly rectangular.
    pub fn from_relation(q: u32, r: &Relation) -> Result<Self, FrameError> {
        let n = r.arity();
        if r.is_empty() {
            return Ok(Self::empty(n, q));
        }
        if n == 0 {
            return Ok(Self::unit(q));
        }
        let rows: Vec<Tuple> = r.tuples().to_vec();
        let mut witness = vec![vec![None; q as usize]; n];
        for i in 0..n {
            let classes = prefix_classes(r, i);
            for class in classes.classes() {
                let prefix = r
                    .iter()
                    .find(|t| t[i] == class[0])
                    .map(|t| t[..i].to_vec())
                    .expect("class value occurs");
                for &a in class {
                    let row = rows
                        .iter()
                        .position(|t| t[i] == a && t[..i] == prefix[..])
                        .ok_or(FrameError::NoCoherentWitness { a, i })?;
                    witness[i][a as usize] = Some(row);
                }
            }
        }
        Ok(Self {
            n,
            q,
            rows,
            witness,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn rows(&self) -> &[Tuple] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `|F| ≤ n(q−1)+1`.
    pub fn is_small(&self) -> bool {
        self.rows.len() <= self.n * (self.q as usize - 1) + 1
    }

    pub fn witness_index(&self, a: Elem, i: usize) -> Option<usize> {
        self.witness.get(i)?.get(a as usize).copied().flatten()
    }

    pub fn witness(&self, a: Elem, i: usize) -> Option<&Tuple> {
        self.witness_index(a, i).map(|r| &self.rows[r])
    }

    /// Values with a witness at position `i`, ascending.
    pub fn projection(&self, i: usize) -> Vec<Elem> {
        (0..self.q)
            .filter(|&a| self.witness[i][a as usize].is_some())
            .collect()
    }

    /// Values at position `i` in the same prefix class as `a`, read off the
    /// witness prefixes.
    pub fn class_of(&self, a: Elem, i: usize) -> Vec<Elem> {
        let Some(w) = self.witness(a, i) else {
            return Vec::new();
        };
        let prefix = &w[..i];
        self.projection(i)
            .into_iter()
            .filter(|&b| self.witness(b, i).map(|v| &v[..i]) == Some(prefix))
            .collect()
    }

    /// Whether `a` and `b` share a witness prefix at position `i`.
    pub fn related(&self, a: Elem, b: Elem, i: usize) -> bool {
        match (self.witness(a, i), self.witness(b, i)) {
            (Some(x), Some(y)) => x[..i] == y[..i],
            _ => false,
        }
    }

    /// Structural checks that need no knowledge of the generated relation:
    /// row lengths, witness targets, and projections matching witnesses.
    pub fn validate(&self) -> Result<(), FrameError> {
        for (row, t) in self.rows.iter().enumerate() {
            if t.len() != self.n {
                return Err(FrameError::RowLength {
                    row,
                    len: t.len(),
                    n: self.n,
                });
            }
        }
        for i in 0..self.n {
            for a in 0..self.q {
                if let Some(row) = self.witness[i][a as usize] {
                    let t = self
                        .rows
                        .get(row)
                        .ok_or(FrameError::DanglingWitness { a, i, row })?;
                    if t[i] != a {
                        return Err(FrameError::WrongWitness { a, i, found: t[i] });
                    }
                }
            }
            for t in &self.rows {
                if self.witness[i][t[i] as usize].is_none() {
                    return Err(FrameError::MissingWitness { a: t[i], i });
                }
            }
        }
        Ok(())
    }

    /// Decides membership in the generated relation by extending a witness
    /// one position at a time.
    pub fn member(&self, op: &MaltsevOp, t: &[Elem]) -> bool {
        if t.len() != self.n || self.rows.is_empty() {
            return false;
        }
        if self.n == 0 {
            return true;
        }
        let Some(first) = self.witness(t[0], 0) else {
            return false;
        };
        let mut w = first.clone();
        for i in 1..self.n {
            let (Some(same), Some(target)) = (self.witness(w[i], i), self.witness(t[i], i)) else {
                return false;
            };
            if same[..i] != target[..i] {
                return false;
            }
            w = op.apply_unchecked(&w, same, target);
        }
        w == t
    }

    /// The generated relation, by fixpoint closure of the rows.
    pub fn generate(&self, op: &MaltsevOp) -> Relation {
        Relation::new(self.n, op.generate(self.rows.iter().cloned())).expect("rows have arity n")
    }

    /// Enumerates the generated relation in lexicographic order by fixing
    /// one coordinate at a time. Stops after `cap` tuples and returns `None`
    /// if more exist.
    pub fn enumerate(&self, op: &MaltsevOp, cap: usize) -> Option<Vec<Tuple>> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        if self.enumerate_into(op, cap, &mut prefix, &mut out) {
            Some(out)
        } else {
            None
        }
    }

    fn enumerate_into(
        &self,
        op: &MaltsevOp,
        cap: usize,
        prefix: &mut Tuple,
        out: &mut Vec<Tuple>,
    ) -> bool {
        if self.rows.is_empty() {
            return true;
        }
        if self.n == 0 {
            if out.len() >= cap {
                return false;
            }
            out.push(prefix.clone());
            return true;
        }
        for a in self.projection(0) {
            let sub = fix_first(self, op, a);
            prefix.push(a);
            let ok = sub.enumerate_into(op, cap, prefix, out);
            prefix.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    /// Text dump: a header, one row per line, then one line per witness.
    /// Positions in witness lines are 1-based.
    pub fn dump(&self) -> String {
        let mut s = format!("frame n={} rows={}\n", self.n, self.rows.len());
        for t in &self.rows {
            let line: Vec<String> = t.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        for i in 0..self.n {
            for a in 0..self.q {
                if let Some(row) = self.witness[i][a as usize] {
                    let _ = writeln!(s, "witness a={a} i={} row={row}", i + 1);
                }
            }
        }
        s
    }

    /// Drops rows not used by any witness and renumbers.
    pub(crate) fn compact(&self) -> Self {
        if self.n == 0 {
            return self.clone();
        }
        let used: BTreeSet<usize> = self.witness.iter().flatten().flatten().copied().collect();
        let remap: BTreeMap<usize, usize> = used.iter().enumerate().map(|(k, &r)| (r, k)).collect();
        Self {
            n: self.n,
            q: self.q,
            rows: used.iter().map(|&r| self.rows[r].clone()).collect(),
            witness: self
                .witness
                .iter()
                .map(|col| col.iter().map(|w| w.map(|r| remap[&r])).collect())
                .collect(),
        }
    }
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.dump())
    }
}

/// The prefix-equivalence at position `i` of an explicit relation: values
/// sharing some common prefix of length `i`, transitively closed.
pub(crate) fn prefix_classes(r: &Relation, i: usize) -> crate::relations::Partition {
    let ground = r.column(i);
    let mut by_prefix: BTreeMap<&[Elem], Vec<Elem>> = BTreeMap::new();
    for t in r.iter() {
        by_prefix.entry(&t[..i]).or_default().push(t[i]);
    }
    let pairs = by_prefix
        .values()
        .flat_map(|vals| vals.iter().map(move |&v| (vals[0], v)));
    crate::relations::Partition::from_pairs(&ground, pairs)
}
