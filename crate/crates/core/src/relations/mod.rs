//! Finite relations over an integer-encoded domain, relational structures,
//! partitions, and count matrices with their block structure.
//!
//! Domain elements are `u32` values in `0..q`. Positions inside tuples are
//! 0-based throughout the library.

mod matrix;
mod partition;
mod power;
mod structure;

pub use matrix::{
    block_decompose, is_rank_one_block, is_rectangular, matrix_blocks, reconstruct_rank_one,
    satisfies_rank_one_identity, support_is_rectangular, BlockDecomposition, CountMatrix,
    MatrixError,
};
pub use partition::Partition;
pub use power::PowerView;
pub use structure::{ElementMap, RelationalStructure, StructureError, EQ_NAME};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A domain element.
pub type Elem = u32;

/// A tuple of domain elements.
pub type Tuple = Vec<Elem>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("tuple {tuple:?} has length {len}, expected arity {arity}")]
    ArityMismatch {
        tuple: Tuple,
        len: usize,
        arity: usize,
    },
    #[error("element {elem} is outside the domain of size {q}")]
    ElementOutOfRange { elem: Elem, q: u32 },
    #[error("projection index {index} out of range for arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },
    #[error("projection index {0} repeated")]
    RepeatedIndex(usize),
}

/// A finite relation: a lexicographically sorted, duplicate-free set of
/// tuples of a fixed arity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    arity: usize,
    tuples: Vec<Tuple>,
}

impl Relation {
    /// Builds a relation, sorting and deduplicating the tuples.
    pub fn new(
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Self, RelationError> {
        let mut collected = Vec::new();
        for tuple in tuples {
            if tuple.len() != arity {
                return Err(RelationError::ArityMismatch {
                    len: tuple.len(),
                    tuple,
                    arity,
                });
            }
            collected.push(tuple);
        }
        collected.sort_unstable();
        collected.dedup();
        Ok(Self {
            arity,
            tuples: collected,
        })
    }

    /// Builds a relation and checks every element against the domain size.
    pub fn over_domain(
        q: u32,
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Self, RelationError> {
        let rel = Self::new(arity, tuples)?;
        for t in &rel.tuples {
            if let Some(&elem) = t.iter().find(|&&e| e >= q) {
                return Err(RelationError::ElementOutOfRange { elem, q });
            }
        }
        Ok(rel)
    }

    pub fn empty(arity: usize) -> Self {
        Self {
            arity,
            tuples: Vec::new(),
        }
    }

    /// The binary equality relation on `0..q`.
    pub fn equality(q: u32) -> Self {
        Self {
            arity: 2,
            tuples: (0..q).map(|a| vec![a, a]).collect(),
        }
    }

    /// The constant relation `{(a)}`.
    pub fn constant(a: Elem) -> Self {
        Self {
            arity: 1,
            tuples: vec![vec![a]],
        }
    }

    /// The full relation `D^arity`.
    pub fn full(q: u32, arity: usize) -> Self {
        let mut tuples = Vec::new();
        let mut current = vec![0; arity];
        loop {
            tuples.push(current.clone());
            if !odometer_step(&mut current, q) {
                break;
            }
        }
        Self { arity, tuples }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// `‖H‖ = |H| · arity`.
    pub fn size(&self) -> usize {
        self.tuples.len() * self.arity
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Tuple> {
        self.tuples.iter()
    }

    pub fn contains(&self, tuple: &[Elem]) -> bool {
        self.tuples
            .binary_search_by(|t| t.as_slice().cmp(tuple))
            .is_ok()
    }

    /// Projects onto the given positions, in the given order.
    pub fn project(&self, indices: &[usize]) -> Result<Relation, RelationError> {
        let mut seen = BTreeSet::new();
        for &i in indices {
            if i >= self.arity {
                return Err(RelationError::IndexOutOfRange {
                    index: i,
                    arity: self.arity,
                });
            }
            if !seen.insert(i) {
                return Err(RelationError::RepeatedIndex(i));
            }
        }
        Ok(Relation::new(
            indices.len(),
            self.tuples
                .iter()
                .map(|t| indices.iter().map(|&i| t[i]).collect::<Tuple>()),
        )
        .expect("projected tuples have the projected arity"))
    }

    /// The set of values occurring at position `i`.
    pub fn column(&self, i: usize) -> Vec<Elem> {
        let set: BTreeSet<Elem> = self.tuples.iter().map(|t| t[i]).collect();
        set.into_iter().collect()
    }

    /// Every element that occurs in some tuple.
    pub fn elements(&self) -> BTreeSet<Elem> {
        self.tuples.iter().flatten().copied().collect()
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation/{}{:?}", self.arity, self.tuples)
    }
}

impl<'a> IntoIterator for &'a Relation {
    type Item = &'a Tuple;
    type IntoIter = std::slice::Iter<'a, Tuple>;

    fn into_iter(self) -> Self::IntoIter {
        self.tuples.iter()
    }
}

/// Advances `digits` as a little-endian-last odometer in base `q`
/// (the last position changes fastest). Returns false on wrap-around.
pub(crate) fn odometer_step(digits: &mut [Elem], q: u32) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < q {
            return true;
        }
        *d = 0;
    }
    false
}

/// Every tuple of `D^n` in lexicographic order.
pub fn all_tuples(q: u32, n: usize) -> impl Iterator<Item = Tuple> {
    let mut next = Some(vec![0; n]);
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        if odometer_step(&mut succ, q) {
            next = Some(succ);
        }
        Some(current)
    })
}
