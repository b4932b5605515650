//! Exact counting of solution sets through prefix counts `N_{i,j}`.
//!
//! Positions are 0-based: `N_{i,j}(a)` is the number of distinct tuples
//! `(t_0, …, t_i, a)` in the projection of `R` onto positions `0..=i` and
//! `j`. The recursion computes level `i` from level `i−1` by rebuilding the
//! matrix `M(x, y) = #{u : (u, x, y) ∈ pr_{0..=i, j} R}` from its block
//! structure, its congruence classes and its margins.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::frames::{
    add_constraint, build_frame_with, closure_project, fix_prefix, Frame, Instance, InstanceError,
    ResolvedConstraint,
};
use crate::maltsev::MaltsevOp;
use crate::relations::{
    reconstruct_rank_one, BlockDecomposition, CountMatrix, Elem, MatrixError, Partition, Relation,
    RelationalStructure,
};

/// Adds one constraint to a frame.
pub type AdderFn = fn(&Frame, &MaltsevOp, &ResolvedConstraint) -> Frame;

/// Solutions enumerated through a frame before [`balance_matrix`] falls back
/// to counting each entry separately.
pub const BALANCE_ENUMERATION_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(
        "reconstruction failed at positions ({i}, {j}); the language is not balanced: {source}"
    )]
    Reconstruction {
        i: usize,
        j: usize,
        #[source]
        source: MatrixError,
    },
    #[error("positions {i} and {j} are not distinct positions below {n}")]
    BadPositions { i: usize, j: usize, n: usize },
}

/// `N_{i,j}` as a map from `pr_j R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixCounts {
    pub i: usize,
    pub j: usize,
    pub values: BTreeMap<Elem, BigUint>,
}

impl PrefixCounts {
    pub fn total(&self) -> BigUint {
        self.values.values().sum()
    }
}

/// The column congruence `tij` on `pr_j R` (tuples agreeing on `0..=i`)
/// and the row congruence `tji` on `pr_i R` (tuples agreeing on `0..i`
/// and at `j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruencePair {
    pub i: usize,
    pub j: usize,
    pub tij: Partition,
    pub tji: Partition,
}

/// One `(i, j)` step of the recursion.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub i: usize,
    pub j: usize,
    pub congruences: CongruencePair,
    pub blocks: BlockDecomposition,
    /// Margins used for the quotient matrix: `N_{i−1,i}` and `N_{i−1,j}`.
    pub row_margins: PrefixCounts,
    pub col_margins: PrefixCounts,
    pub quotient: CountMatrix,
    pub matrix: CountMatrix,
    pub result: PrefixCounts,
}

/// A count together with the intermediate steps, for the instance with
/// unconstrained variables removed.
#[derive(Debug, Clone)]
pub struct CountTrace {
    pub count: BigUint,
    pub free_variables: usize,
    pub reduced: Instance,
    pub steps: Vec<StepTrace>,
}

/// `|R_Φ|` using the default constraint adder.
pub fn count(
    s: &RelationalStructure,
    op: &MaltsevOp,
    instance: &Instance,
) -> Result<BigUint, CountError> {
    count_with(s, op, instance, add_constraint)
}

pub fn count_with(
    s: &RelationalStructure,
    op: &MaltsevOp,
    instance: &Instance,
    adder: AdderFn,
) -> Result<BigUint, CountError> {
    Ok(count_traced_with(s, op, instance, adder, false)?.count)
}

pub fn count_traced(
    s: &RelationalStructure,
    op: &MaltsevOp,
    instance: &Instance,
) -> Result<CountTrace, CountError> {
    count_traced_with(s, op, instance, add_constraint, true)
}

fn count_traced_with(
    s: &RelationalStructure,
    op: &MaltsevOp,
    instance: &Instance,
    adder: AdderFn,
    keep_steps: bool,
) -> Result<CountTrace, CountError> {
    if instance.n == 0 {
        return Err(InstanceError::NoVariables.into());
    }
    instance.resolve(s)?;
    let (reduced, free) = instance.without_free_variables();
    let factor = BigUint::from(s.q()).pow(free as u32);
    let mut steps = Vec::new();
    let inner = if reduced.n == 0 {
        BigUint::one()
    } else {
        let frame = build_frame_with(s, op, &reduced, adder)?;
        count_frame(&frame, op, adder, keep_steps.then_some(&mut steps))?
    };
    Ok(CountTrace {
        count: inner * factor,
        free_variables: free,
        reduced,
        steps,
    })
}

/// `|R|` for the relation generated by `f`.
pub fn count_frame(
    f: &Frame,
    op: &MaltsevOp,
    adder: AdderFn,
    mut trace: Option<&mut Vec<StepTrace>>,
) -> Result<BigUint, CountError> {
    let n = f.n();
    if f.is_empty() {
        return Ok(BigUint::zero());
    }
    if n == 0 {
        return Ok(BigUint::one());
    }
    if n == 1 {
        return Ok(BigUint::from(f.projection(0).len()));
    }
    let mut cache = PinnedFrames::new(f, op, adder);
    // level[j] holds N_{i−1, j} for the level being built.
    let mut level: Vec<BTreeMap<Elem, BigUint>> = vec![BTreeMap::new(); n];
    for (j, counts) in level.iter_mut().enumerate().skip(1) {
        for (_, a) in pair_projection(f, op, 0, j) {
            *counts.entry(a).or_insert_with(BigUint::zero) += 1u32;
        }
    }
    for i in 1..n - 1 {
        let mut next: Vec<BTreeMap<Elem, BigUint>> = vec![BTreeMap::new(); n];
        for j in i + 1..n {
            let step = step(f, op, &mut cache, i, j, &level[i], &level[j])?;
            next[j] = step.result.values.clone();
            if let Some(t) = trace.as_deref_mut() {
                t.push(step);
            }
        }
        level = next;
    }
    Ok(level[n - 1].values().sum())
}

fn step(
    f: &Frame,
    op: &MaltsevOp,
    cache: &mut PinnedFrames<'_>,
    i: usize,
    j: usize,
    row_prev: &BTreeMap<Elem, BigUint>,
    col_prev: &BTreeMap<Elem, BigUint>,
) -> Result<StepTrace, CountError> {
    let pairs = pair_projection(f, op, i, j);
    let edges: Vec<(Elem, Elem)> = pairs.iter().copied().collect();
    let blocks = BlockDecomposition::from_edges(&edges);
    let congruences = congruences_cached(f, op, cache, i, j, &pairs);
    let row_reps: BTreeSet<Elem> = congruences.tji.representatives().into_iter().collect();
    let col_reps: BTreeSet<Elem> = congruences.tij.representatives().into_iter().collect();
    let quotient_blocks = BlockDecomposition::new(
        blocks
            .blocks()
            .iter()
            .map(|(rs, cs)| {
                (
                    rs.iter()
                        .filter(|x| row_reps.contains(x))
                        .copied()
                        .collect(),
                    cs.iter()
                        .filter(|y| col_reps.contains(y))
                        .copied()
                        .collect(),
                )
            })
            .collect(),
    )
    .map_err(|source| CountError::Reconstruction { i, j, source })?;
    let row_totals: BTreeMap<Elem, BigUint> = row_reps
        .iter()
        .filter_map(|x| row_prev.get(x).map(|v| (*x, v.clone())))
        .collect();
    let col_totals: BTreeMap<Elem, BigUint> = col_reps
        .iter()
        .filter_map(|y| col_prev.get(y).map(|v| (*y, v.clone())))
        .collect();
    let quotient = reconstruct_rank_one(&quotient_blocks, &row_totals, &col_totals)
        .map_err(|source| CountError::Reconstruction { i, j, source })?;
    let xs = congruences.tji.ground();
    let ys = congruences.tij.ground();
    let mut matrix = CountMatrix::zeros(xs.iter().copied(), ys.iter().copied());
    for &x in &xs {
        let rx = congruences.tji.representative(&x).unwrap();
        for &y in &ys {
            let ry = congruences.tij.representative(&y).unwrap();
            if quotient.row_position(&rx).is_some() && quotient.col_position(&ry).is_some() {
                matrix.set(&x, &y, quotient.get(&rx, &ry));
            }
        }
    }
    let result = PrefixCounts {
        i,
        j,
        values: matrix.col_sums(),
    };
    Ok(StepTrace {
        i,
        j,
        blocks,
        row_margins: PrefixCounts {
            i: i - 1,
            j: i,
            values: row_prev.clone(),
        },
        col_margins: PrefixCounts {
            i: i - 1,
            j,
            values: col_prev.clone(),
        },
        congruences,
        quotient,
        matrix,
        result,
    })
}

fn pair_projection(f: &Frame, op: &MaltsevOp, i: usize, j: usize) -> BTreeSet<(Elem, Elem)> {
    closure_project(f.rows(), op, &[i, j])
        .into_iter()
        .map(|t| (t[i], t[j]))
        .collect()
}

/// Frames of `R ∧ (x_j = a)`, built on demand.
struct PinnedFrames<'a> {
    base: &'a Frame,
    op: &'a MaltsevOp,
    adder: AdderFn,
    frames: BTreeMap<(usize, Elem), Frame>,
}

impl<'a> PinnedFrames<'a> {
    fn new(base: &'a Frame, op: &'a MaltsevOp, adder: AdderFn) -> Self {
        Self {
            base,
            op,
            adder,
            frames: BTreeMap::new(),
        }
    }

    fn get(&mut self, j: usize, a: Elem) -> &Frame {
        let (base, op, adder) = (self.base, self.op, self.adder);
        self.frames.entry((j, a)).or_insert_with(|| {
            let pin = ResolvedConstraint {
                relation: Relation::constant(a),
                scope: vec![j],
            };
            adder(base, op, &pin)
        })
    }
}

/// The congruences `~_{i,j}` and `~_{j,i}` of the relation generated by `f`,
/// computed from frames. Requires `0 < i < j < n`.
pub fn congruences(f: &Frame, op: &MaltsevOp, i: usize, j: usize) -> CongruencePair {
    congruences_with(f, op, i, j, add_constraint)
}

pub fn congruences_with(
    f: &Frame,
    op: &MaltsevOp,
    i: usize,
    j: usize,
    adder: AdderFn,
) -> CongruencePair {
    assert!(0 < i && i < j && j < f.n(), "need 0 < i < j < n");
    let mut cache = PinnedFrames::new(f, op, adder);
    let pairs = pair_projection(f, op, i, j);
    congruences_cached(f, op, &mut cache, i, j, &pairs)
}

fn congruences_cached(
    f: &Frame,
    op: &MaltsevOp,
    cache: &mut PinnedFrames<'_>,
    i: usize,
    j: usize,
    pairs: &BTreeSet<(Elem, Elem)>,
) -> CongruencePair {
    // ~_{i,j}: fix a prefix 0..=i of a tuple reaching b; the values at j
    // that remain reachable form the class of b.
    let mut reach: BTreeMap<Elem, Vec<Elem>> = BTreeMap::new();
    for t in closure_project(f.rows(), op, &[i, j]) {
        reach.entry(t[j]).or_insert_with(|| t[..=i].to_vec());
    }
    let mut remaining: BTreeSet<Elem> = reach.keys().copied().collect();
    let mut col_classes: Vec<Vec<Elem>> = Vec::new();
    while let Some(&b) = remaining.iter().next() {
        let star = fix_prefix(f, op, &reach[&b]);
        let mut class: Vec<Elem> = star
            .projection(j - i - 1)
            .into_iter()
            .filter(|v| remaining.contains(v))
            .collect();
        if !class.contains(&b) {
            class.push(b);
        }
        for v in &class {
            remaining.remove(v);
        }
        col_classes.push(class);
    }

    // ~_{j,i}: per block of pr_{i,j} R, the prefix classes at i of
    // R ∧ (x_j = a) for one column value a of the block.
    let edges: Vec<(Elem, Elem)> = pairs.iter().copied().collect();
    let blocks = BlockDecomposition::from_edges(&edges);
    let mut row_classes: Vec<Vec<Elem>> = Vec::new();
    for (xs, ys) in blocks.blocks() {
        let pinned = cache.get(j, ys[0]);
        let mut by_prefix: BTreeMap<Option<Vec<Elem>>, Vec<Elem>> = BTreeMap::new();
        for &x in xs {
            let key = pinned.witness(x, i).map(|w| w[..i].to_vec());
            match key {
                Some(k) => by_prefix.entry(Some(k)).or_default().push(x),
                None => row_classes.push(vec![x]),
            }
        }
        row_classes.extend(by_prefix.into_values());
    }
    CongruencePair {
        i,
        j,
        tij: Partition::from_classes(col_classes),
        tji: Partition::from_classes(row_classes),
    }
}

/// `M(x, y) = #{t ∈ R_Φ : t_i = x, t_j = y}` over `x ∈ pr_i R`,
/// `y ∈ pr_j R` (0-based positions).
pub fn balance_matrix(
    s: &RelationalStructure,
    op: &MaltsevOp,
    instance: &Instance,
    i: usize,
    j: usize,
) -> Result<CountMatrix, CountError> {
    let n = instance.n;
    if i == j || i >= n || j >= n {
        return Err(CountError::BadPositions { i, j, n });
    }
    let frame = build_frame_with(s, op, instance, add_constraint)?;
    if frame.is_empty() {
        return Ok(CountMatrix::zeros(Vec::new(), Vec::new()));
    }
    let mut m = CountMatrix::zeros(frame.projection(i), frame.projection(j));
    if let Some(tuples) = frame.enumerate(op, BALANCE_ENUMERATION_CAP) {
        let one = BigUint::one();
        for t in tuples {
            m.add(&t[i], &t[j], &one);
        }
        return Ok(m);
    }
    for (x, y) in pair_projection(&frame, op, i, j) {
        let pinned = instance
            .clone()
            .with(&format!("CONST_{x}"), &[i])
            .with(&format!("CONST_{y}"), &[j]);
        m.set(&x, &y, count(s, op, &pinned)?);
    }
    Ok(m)
}
