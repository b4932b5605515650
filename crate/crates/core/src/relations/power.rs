use num_bigint::BigUint;

use super::{Elem, Relation, RelationalStructure};

/// The power structure `S^k` without materializing it.
///
/// Elements of `D^k` are encoded as base-`q` integers with the first
/// coordinate most significant, so numeric order is lexicographic order.
/// A tuple `(u_1, …, u_r)` of power elements is in `H^k` iff for every
/// coordinate `c` the slice `(u_1[c], …, u_r[c])` is in `H`.
#[derive(Debug, Clone, Copy)]
pub struct PowerView<'a> {
    base: &'a RelationalStructure,
    k: usize,
}

impl<'a> PowerView<'a> {
    pub fn new(base: &'a RelationalStructure, k: usize) -> Self {
        assert!(k >= 1, "power must be positive");
        Self { base, k }
    }

    pub fn base(&self) -> &'a RelationalStructure {
        self.base
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `q^k`.
    pub fn domain_size(&self) -> u64 {
        (self.base.q() as u64).pow(self.k as u32)
    }

    pub fn encode(&self, coords: &[Elem]) -> u64 {
        assert_eq!(coords.len(), self.k);
        coords
            .iter()
            .fold(0u64, |acc, &c| acc * self.base.q() as u64 + c as u64)
    }

    pub fn decode(&self, mut x: u64) -> Vec<Elem> {
        let q = self.base.q() as u64;
        let mut out = vec![0; self.k];
        for slot in out.iter_mut().rev() {
            *slot = (x % q) as Elem;
            x /= q;
        }
        out
    }

    /// Coordinate `c` of the encoded element `x`.
    pub fn coord(&self, x: u64, c: usize) -> Elem {
        let q = self.base.q() as u64;
        let shift = (self.k - 1 - c) as u32;
        ((x / q.pow(shift)) % q) as Elem
    }

    /// Componentwise membership of encoded elements in `H^k`.
    pub fn contains(&self, relation: &Relation, tuple: &[u64]) -> bool {
        if tuple.len() != relation.arity() {
            return false;
        }
        let mut slice = vec![0; tuple.len()];
        (0..self.k).all(|c| {
            for (s, &x) in slice.iter_mut().zip(tuple) {
                *s = self.coord(x, c);
            }
            relation.contains(&slice)
        })
    }

    /// `|H^k| = |H|^k`.
    pub fn count(&self, relation: &Relation) -> BigUint {
        BigUint::from(relation.len()).pow(self.k as u32)
    }

    /// Lazily enumerates `H^k` as k-fold products of tuples of `H`.
    pub fn tuples<'r>(&self, relation: &'r Relation) -> PowerTuples<'r> {
        PowerTuples::new(
            self.base.q() as u64,
            relation.tuples().iter().collect(),
            self.k,
        )
    }

    /// Lazily enumerates the tuples of `H^k` whose entry at `position` is `x`.
    pub fn tuples_through<'r>(
        &self,
        relation: &'r Relation,
        position: usize,
        x: u64,
    ) -> PowerTuples<'r> {
        let per_coord: Vec<Vec<&'r Vec<Elem>>> = (0..self.k)
            .map(|c| {
                let v = self.coord(x, c);
                relation.iter().filter(|t| t[position] == v).collect()
            })
            .collect();
        PowerTuples::per_coordinate(self.base.q() as u64, relation.arity(), per_coord)
    }
}

/// Iterator over products of base tuples, one factor per coordinate.
pub struct PowerTuples<'r> {
    q: u64,
    arity: usize,
    choices: Vec<Vec<&'r Vec<Elem>>>,
    cursor: Option<Vec<usize>>,
}

impl<'r> PowerTuples<'r> {
    fn new(q: u64, base: Vec<&'r Vec<Elem>>, k: usize) -> Self {
        let arity = base.first().map_or(0, |t| t.len());
        Self::per_coordinate(q, arity, vec![base; k])
    }

    fn per_coordinate(q: u64, arity: usize, choices: Vec<Vec<&'r Vec<Elem>>>) -> Self {
        let cursor = if choices.iter().any(Vec::is_empty) {
            None
        } else {
            Some(vec![0; choices.len()])
        };
        Self {
            q,
            arity,
            choices,
            cursor,
        }
    }
}

impl Iterator for PowerTuples<'_> {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let cursor = self.cursor.as_mut()?;
        let mut out = vec![0u64; self.arity];
        for (c, &pick) in cursor.iter().enumerate() {
            let t = self.choices[c][pick];
            for (slot, &v) in out.iter_mut().zip(t.iter()) {
                *slot = *slot * self.q + v as u64;
            }
        }
        let mut advanced = false;
        for c in (0..cursor.len()).rev() {
            cursor[c] += 1;
            if cursor[c] < self.choices[c].len() {
                advanced = true;
                break;
            }
            cursor[c] = 0;
        }
        if !advanced {
            self.cursor = None;
        }
        Some(out)
    }
}
