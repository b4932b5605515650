//! Ternary Mal'tsev operations and the search for a Mal'tsev polymorphism.
//!
//! An operation `φ` on `0..q` is Mal'tsev when `φ(a,b,b) = φ(b,b,a) = a`.
//! Only the entries `(a,b,c)` with `b ∉ {a,c}` are free; everything else is
//! fixed by the identities.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::relations::{is_rectangular, Elem, Relation, RelationalStructure, Tuple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaltsevError {
    #[error("tuples have different lengths {0}, {1}, {2}")]
    LengthMismatch(usize, usize, usize),
    #[error("table has {got} entries, expected {expected}")]
    TableSize { got: usize, expected: usize },
    #[error("entry ({0},{1},{2}) violates the Mal'tsev identities")]
    IdentityViolated(Elem, Elem, Elem),
    #[error("entry ({0},{1},{2}) is outside the domain")]
    OutOfDomain(Elem, Elem, Elem),
}

/// A total ternary operation on `0..q` satisfying the Mal'tsev identities.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MaltsevOp {
    q: u32,
    table: Vec<Elem>,
}

impl MaltsevOp {
    /// Builds an operation from a table indexed by `(a*q + b)*q + c`.
    pub fn from_table(q: u32, table: Vec<Elem>) -> Result<Self, MaltsevError> {
        let expected = (q as usize).pow(3);
        if table.len() != expected {
            return Err(MaltsevError::TableSize {
                got: table.len(),
                expected,
            });
        }
        let op = Self { q, table };
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    let v = op.eval(a, b, c);
                    if v >= q {
                        return Err(MaltsevError::OutOfDomain(a, b, c));
                    }
                    if let Some(forced) = forced_value(a, b, c) {
                        if v != forced {
                            return Err(MaltsevError::IdentityViolated(a, b, c));
                        }
                    }
                }
            }
        }
        Ok(op)
    }

    pub fn from_fn(q: u32, f: impl Fn(Elem, Elem, Elem) -> Elem) -> Result<Self, MaltsevError> {
        let mut table = Vec::with_capacity((q as usize).pow(3));
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    table.push(f(a, b, c));
                }
            }
        }
        Self::from_table(q, table)
    }

    /// `x − y + z mod q`; on `{0,1}` this is the minority operation.
    pub fn affine(q: u32) -> Self {
        Self::from_fn(q, |a, b, c| (a + q - b + c) % q).expect("affine map is Mal'tsev")
    }

    pub fn minority() -> Self {
        Self::affine(2)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    #[inline]
    pub fn eval(&self, a: Elem, b: Elem, c: Elem) -> Elem {
        let q = self.q as usize;
        self.table[(a as usize * q + b as usize) * q + c as usize]
    }

    /// Coordinatewise application.
    pub fn apply(&self, t1: &[Elem], t2: &[Elem], t3: &[Elem]) -> Result<Tuple, MaltsevError> {
        if t1.len() != t2.len() || t2.len() != t3.len() {
            return Err(MaltsevError::LengthMismatch(t1.len(), t2.len(), t3.len()));
        }
        Ok(self.apply_unchecked(t1, t2, t3))
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, t1: &[Elem], t2: &[Elem], t3: &[Elem]) -> Tuple {
        t1.iter()
            .zip(t2)
            .zip(t3)
            .map(|((&a, &b), &c)| self.eval(a, b, c))
            .collect()
    }

    /// True iff `φ` maps every triple of tuples of `h` back into `h`.
    pub fn preserves(&self, h: &Relation) -> bool {
        let tuples = h.tuples();
        tuples.iter().all(|t1| {
            tuples.iter().all(|t2| {
                tuples
                    .iter()
                    .all(|t3| h.contains(&self.apply_unchecked(t1, t2, t3)))
            })
        })
    }

    /// The table as `a b c -> v` lines in lexicographic order.
    pub fn table_lines(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.table.len());
        for a in 0..self.q {
            for b in 0..self.q {
                for c in 0..self.q {
                    out.push(format!("{a} {b} {c} -> {}", self.eval(a, b, c)));
                }
            }
        }
        out
    }

    /// Smallest superset of `tuples` closed under `φ`.
    pub fn generate(&self, tuples: impl IntoIterator<Item = Tuple>) -> BTreeSet<Tuple> {
        let mut rows: Vec<Tuple> = Vec::new();
        let mut seen = HashSet::new();
        for t in tuples {
            if seen.insert(t.clone()) {
                rows.push(t);
            }
        }
        // Every triple involving at least one row added since the previous
        // round is examined; triples of older rows were already closed.
        let mut old = 0;
        while old < rows.len() {
            let len = rows.len();
            for x in 0..len {
                for y in 0..len {
                    for z in 0..len {
                        if x < old && y < old && z < old {
                            continue;
                        }
                        let u = self.apply_unchecked(&rows[x], &rows[y], &rows[z]);
                        if seen.insert(u.clone()) {
                            rows.push(u);
                        }
                    }
                }
            }
            old = len;
        }
        rows.into_iter().collect()
    }

    /// The fixpoint closure of `tuples`, stopped early once it equals
    /// `bound`. When `bound` is closed under `φ` the result is exactly the
    /// closure. Returns the first generated tuple outside `bound` as an
    /// error.
    pub fn generate_within(
        &self,
        tuples: impl IntoIterator<Item = Tuple>,
        bound: &Relation,
    ) -> Result<BTreeSet<Tuple>, Tuple> {
        let mut rows: Vec<Tuple> = Vec::new();
        let mut seen = HashSet::new();
        for t in tuples {
            if !bound.contains(&t) {
                return Err(t);
            }
            if seen.insert(t.clone()) {
                rows.push(t);
            }
        }
        let mut old = 0;
        while old < rows.len() && rows.len() < bound.len() {
            let len = rows.len();
            for x in 0..len {
                for y in 0..len {
                    for z in 0..len {
                        if x < old && y < old && z < old {
                            continue;
                        }
                        let u = self.apply_unchecked(&rows[x], &rows[y], &rows[z]);
                        if seen.contains(&u) {
                            continue;
                        }
                        if !bound.contains(&u) {
                            return Err(u);
                        }
                        seen.insert(u.clone());
                        rows.push(u);
                        if rows.len() == bound.len() {
                            return Ok(rows.into_iter().collect());
                        }
                    }
                }
            }
            old = len;
        }
        Ok(rows.into_iter().collect())
    }
}

impl fmt::Debug for MaltsevOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MaltsevOp(q={}, {:?})", self.q, self.table)
    }
}

fn forced_value(a: Elem, b: Elem, c: Elem) -> Option<Elem> {
    if b == c {
        Some(a)
    } else if a == b {
        Some(c)
    } else {
        None
    }
}

/// A relation of the language that is not rectangular under some binary
/// split, with the offending quadruple: `(left_a, right_c)`, `(left_a,
/// right_d)` and `(left_b, right_c)` occur but `(left_b, right_d)` does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectangularityViolation {
    pub relation: String,
    pub left: Vec<usize>,
    pub left_a: Tuple,
    pub left_b: Tuple,
    pub right_c: Tuple,
    pub right_d: Tuple,
}

impl fmt::Display for RectangularityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "relation {} split left={:?}: a={:?} b={:?} c={:?} d={:?}",
            self.relation, self.left, self.left_a, self.left_b, self.right_c, self.right_d
        )
    }
}

/// Outcome of [`find_maltsev`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaltsevSearch {
    Found(MaltsevOp),
    /// No Mal'tsev polymorphism exists. A certificate is attached when some
    /// relation of the language is already non-rectangular under a split.
    None(Option<RectangularityViolation>),
}

impl MaltsevSearch {
    pub fn op(&self) -> Option<&MaltsevOp> {
        match self {
            MaltsevSearch::Found(op) => Some(op),
            MaltsevSearch::None(_) => None,
        }
    }

    pub fn into_op(self) -> Option<MaltsevOp> {
        match self {
            MaltsevSearch::Found(op) => Some(op),
            MaltsevSearch::None(_) => None,
        }
    }
}

/// Searches for a Mal'tsev polymorphism of the declared relations of `s`.
/// Equality and constants are preserved by every Mal'tsev operation.
///
/// Returns the lexicographically least table, ordering free entries by
/// `(a,b,c)`.
pub fn find_maltsev(s: &RelationalStructure) -> MaltsevSearch {
    let relations: Vec<&Relation> = s.declared().map(|(_, r)| r).collect();
    match find_maltsev_for(s.q(), &relations) {
        Some(op) => MaltsevSearch::Found(op),
        None => MaltsevSearch::None(rectangularity_violation(s)),
    }
}

/// Searches for a Mal'tsev operation on `0..q` preserving every relation.
pub fn find_maltsev_for(q: u32, relations: &[&Relation]) -> Option<MaltsevOp> {
    Search::new(q, relations)?.run()
}

const UNSET: Elem = Elem::MAX;

struct Constraint {
    relation: usize,
    /// Table index per coordinate of the image.
    cells: Vec<usize>,
    /// Distinct free table indices among `cells`.
    free: Vec<usize>,
}

struct Search<'a> {
    q: u32,
    relations: &'a [&'a Relation],
    table: Vec<Elem>,
    constraints: Vec<Constraint>,
    watching: Vec<Vec<usize>>,
    alive: Vec<Vec<bool>>,
    trail: Vec<(usize, Elem)>,
    scratch: Tuple,
}

impl<'a> Search<'a> {
    /// Sets up the table and the constraints. Returns `None` if a relation is
    /// violated by entries the identities already fix.
    fn new(q: u32, relations: &'a [&'a Relation]) -> Option<Self> {
        let qs = q as usize;
        let cells = qs * qs * qs;
        let mut table = vec![UNSET; cells];
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    if let Some(v) = forced_value(a, b, c) {
                        table[(a as usize * qs + b as usize) * qs + c as usize] = v;
                    }
                }
            }
        }
        let mut constraints = Vec::new();
        let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
        let mut scratch = Vec::new();
        for (ri, h) in relations.iter().enumerate() {
            let tuples = h.tuples();
            for t1 in tuples {
                for t2 in tuples {
                    for t3 in tuples {
                        let idx: Vec<usize> = (0..h.arity())
                            .map(|p| (t1[p] as usize * qs + t2[p] as usize) * qs + t3[p] as usize)
                            .collect();
                        let mut free: Vec<usize> =
                            idx.iter().copied().filter(|&i| table[i] == UNSET).collect();
                        if free.is_empty() {
                            scratch.clear();
                            scratch.extend(idx.iter().map(|&i| table[i]));
                            if !h.contains(&scratch) {
                                return None;
                            }
                            continue;
                        }
                        if !seen.insert((ri, idx.clone())) {
                            continue;
                        }
                        free.sort_unstable();
                        free.dedup();
                        constraints.push(Constraint {
                            relation: ri,
                            cells: idx,
                            free,
                        });
                    }
                }
            }
        }
        let mut watching = vec![Vec::new(); cells];
        for (ci, c) in constraints.iter().enumerate() {
            for &e in &c.free {
                watching[e].push(ci);
            }
        }
        Some(Self {
            q,
            relations,
            table,
            constraints,
            watching,
            alive: vec![vec![true; qs]; cells],
            trail: Vec::new(),
            scratch: Vec::new(),
        })
    }

    fn run(mut self) -> Option<MaltsevOp> {
        let free: Vec<usize> = (0..self.table.len())
            .filter(|&i| self.table[i] == UNSET)
            .collect();
        for component in self.components(&free) {
            if !self.solve(&component, 0) {
                return None;
            }
        }
        for v in self.table.iter_mut() {
            if *v == UNSET {
                *v = 0;
            }
        }
        Some(MaltsevOp {
            q: self.q,
            table: self.table,
        })
    }

    /// Groups constrained free entries into independent components, each in
    /// lexicographic order. Unconstrained entries are left out.
    fn components(&self, free: &[usize]) -> Vec<Vec<usize>> {
        let mut uf = petgraph::unionfind::UnionFind::<usize>::new(self.table.len());
        for c in &self.constraints {
            for w in c.free.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &e in free {
            if !self.watching[e].is_empty() {
                groups.entry(uf.find(e)).or_default().push(e);
            }
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }

    fn solve(&mut self, entries: &[usize], pos: usize) -> bool {
        let Some(&e) = entries.get(pos) else {
            return true;
        };
        for v in 0..self.q {
            if !self.alive[e][v as usize] {
                continue;
            }
            let mark = self.trail.len();
            self.table[e] = v;
            if self.propagate(e) && self.solve(entries, pos + 1) {
                return true;
            }
            self.undo(mark);
            self.table[e] = UNSET;
        }
        false
    }

    fn propagate(&mut self, e: usize) -> bool {
        for k in 0..self.watching[e].len() {
            let ci = self.watching[e][k];
            let c = &self.constraints[ci];
            let mut open = c.free.iter().filter(|&&f| self.table[f] == UNSET);
            match (open.next().copied(), open.next()) {
                (None, _) => {
                    if !self.image_ok(ci) {
                        return false;
                    }
                }
                (Some(u), None) => {
                    let mut any = false;
                    for v in 0..self.q {
                        if !self.alive[u][v as usize] {
                            continue;
                        }
                        self.table[u] = v;
                        if self.image_ok(ci) {
                            any = true;
                        } else {
                            self.alive[u][v as usize] = false;
                            self.trail.push((u, v));
                        }
                    }
                    self.table[u] = UNSET;
                    if !any {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    fn image_ok(&mut self, ci: usize) -> bool {
        let c = &self.constraints[ci];
        self.scratch.clear();
        self.scratch.extend(c.cells.iter().map(|&i| self.table[i]));
        self.relations[c.relation].contains(&self.scratch)
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (u, v) = self.trail.pop().unwrap();
            self.alive[u][v as usize] = true;
        }
    }
}

/// The first binary split of a declared relation that is not rectangular,
/// scanning relations in declaration order and left-coordinate subsets in
/// increasing bitmask order.
pub fn rectangularity_violation(s: &RelationalStructure) -> Option<RectangularityViolation> {
    for (name, h) in s.declared() {
        let r = h.arity();
        if !(2..=24).contains(&r) {
            continue;
        }
        for mask in 1u32..(1 << r) - 1 {
            let left: Vec<usize> = (0..r).filter(|p| mask & (1 << p) != 0).collect();
            let right: Vec<usize> = (0..r).filter(|p| mask & (1 << p) == 0).collect();
            let order: Vec<usize> = left.iter().chain(&right).copied().collect();
            let view = h.project(&order).expect("valid permutation");
            if is_rectangular(&view, left.len()) {
                continue;
            }
            if let Some(v) = find_quadruple(&view, left.len()) {
                return Some(RectangularityViolation {
                    relation: name.to_owned(),
                    left,
                    left_a: v.0,
                    left_b: v.1,
                    right_c: v.2,
                    right_d: v.3,
                });
            }
        }
    }
    None
}

fn find_quadruple(view: &Relation, k: usize) -> Option<(Tuple, Tuple, Tuple, Tuple)> {
    let pairs: Vec<(&[Elem], &[Elem])> = view.iter().map(|t| t.split_at(k)).collect();
    let has = |l: &[Elem], r: &[Elem]| {
        let mut t = l.to_vec();
        t.extend_from_slice(r);
        view.contains(&t)
    };
    for &(a, c) in &pairs {
        for &(a2, d) in &pairs {
            if a2 != a || d == c {
                continue;
            }
            for &(b, c2) in &pairs {
                if c2 != c || b == a {
                    continue;
                }
                if !has(b, d) {
                    return Some((a.to_vec(), b.to_vec(), c.to_vec(), d.to_vec()));
                }
            }
        }
    }
    None
}
