//! Brute-force reference implementations. Nothing here uses frames, Mal'tsev
//! operations or matrix reconstruction.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use petgraph::unionfind::UnionFind;
use thiserror::Error;

use crate::counting::CongruencePair;
use crate::frames::{Frame, Instance, InstanceError};
use crate::maltsev::MaltsevOp;
use crate::relations::{
    all_tuples, is_rank_one_block, CountMatrix, Elem, Partition, Relation, RelationalStructure,
    Tuple,
};

/// Default limit on `n · log2 q` for exhaustive enumeration.
pub const DEFAULT_MAX_BITS: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{q}^{n} assignments exceed the enumeration cap of 2^{max_bits}")]
    CapExceeded { n: usize, q: u32, max_bits: f64 },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Whether `q^n` assignments fit under `2^max_bits`.
pub fn within_cap(n: usize, q: u32, max_bits: f64) -> bool {
    n as f64 * (q as f64).log2() <= max_bits + 1e-9
}

/// Every assignment satisfying every constraint, checked exhaustively.
pub fn enumerate_solutions(
    s: &RelationalStructure,
    instance: &Instance,
    max_bits: f64,
) -> Result<Relation, OracleError> {
    let q = s.q();
    if !within_cap(instance.n, q, max_bits) {
        return Err(OracleError::CapExceeded {
            n: instance.n,
            q,
            max_bits,
        });
    }
    let mut constraints = Vec::with_capacity(instance.constraints.len());
    for (index, c) in instance.constraints.iter().enumerate() {
        let rel = s
            .relation(&c.relation)
            .ok_or_else(|| InstanceError::UnknownRelation(c.relation.clone()))?
            .into_owned();
        if rel.arity() != c.scope.len() {
            return Err(InstanceError::ArityMismatch {
                index,
                name: c.relation.clone(),
                got: c.scope.len(),
                arity: rel.arity(),
            }
            .into());
        }
        if let Some(&var) = c.scope.iter().find(|&&v| v >= instance.n) {
            return Err(InstanceError::VariableOutOfRange {
                index,
                var,
                n: instance.n,
            }
            .into());
        }
        constraints.push((rel, c.scope.clone()));
    }
    let mut image = Vec::new();
    let solutions = all_tuples(q, instance.n).filter(|t| {
        constraints.iter().all(|(rel, scope)| {
            image.clear();
            image.extend(scope.iter().map(|&v| t[v]));
            rel.contains(&image)
        })
    });
    Ok(
        Relation::new(instance.n, solutions.collect::<Vec<_>>())
            .expect("assignments have length n"),
    )
}

pub fn oracle_count(
    s: &RelationalStructure,
    instance: &Instance,
    max_bits: f64,
) -> Result<BigUint, OracleError> {
    Ok(BigUint::from(
        enumerate_solutions(s, instance, max_bits)?.len(),
    ))
}

/// The balance matrix of `r` grouped as (first `k` coordinates, next `l`
/// coordinates, rest): entry `(x, y)` counts the tails completing `x·y`.
/// Returns the matrix and whether it is a rank-one block matrix.
pub fn oracle_balance(r: &Relation, k: usize, l: usize) -> (CountMatrix<Tuple>, bool) {
    assert!(k + l <= r.arity(), "split exceeds arity");
    let rows: BTreeSet<Tuple> = r.iter().map(|t| t[..k].to_vec()).collect();
    let cols: BTreeSet<Tuple> = r.iter().map(|t| t[k..k + l].to_vec()).collect();
    let mut m = CountMatrix::zeros(rows, cols);
    let one = BigUint::from(1u32);
    for t in r.iter() {
        m.add(&t[..k].to_vec(), &t[k..k + l].to_vec(), &one);
    }
    let ok = is_rank_one_block(&m);
    (m, ok)
}

/// Values at position `i` related when some two tuples share their first
/// `i` coordinates, closed transitively.
pub fn oracle_congruence(r: &Relation, i: usize) -> Partition {
    related_by_key(r, i, |t| t[..i].to_vec())
}

/// `~_{i,j}` on position `j` (tuples agreeing on positions `0..=i`) and
/// `~_{j,i}` on position `i` (tuples agreeing on `0..i` and on `j`).
/// Positions are 0-based with `0 < i < j`.
pub fn oracle_congruence_pair(r: &Relation, i: usize, j: usize) -> CongruencePair {
    assert!(0 < i && i < j && j < r.arity(), "need 0 < i < j < arity");
    let tij = related_by_key(r, j, |t| t[..=i].to_vec());
    let tji = related_by_key(r, i, |t| {
        let mut k = t[..i].to_vec();
        k.push(t[j]);
        k
    });
    CongruencePair { i, j, tij, tji }
}

fn related_by_key(r: &Relation, pos: usize, key: impl Fn(&Tuple) -> Tuple) -> Partition {
    let ground: Vec<Elem> = r.column(pos);
    let index: BTreeMap<Elem, usize> = ground.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut uf = UnionFind::<usize>::new(ground.len());
    let mut first: BTreeMap<Tuple, Elem> = BTreeMap::new();
    for t in r.iter() {
        let v = *first.entry(key(t)).or_insert(t[pos]);
        uf.union(index[&v], index[&t[pos]]);
    }
    let mut classes: BTreeMap<usize, Vec<Elem>> = BTreeMap::new();
    for (k, &v) in ground.iter().enumerate() {
        classes.entry(uf.find(k)).or_default().push(v);
    }
    Partition::from_classes(classes.into_values())
}

/// Every way `f` fails to be a small frame of `r` under `op`, as readable
/// messages. `op` must preserve `r`. Membership is checked over all of `D^n` when `q^n` is at most
/// `member_cap`.
pub fn frame_violations(f: &Frame, op: &MaltsevOp, r: &Relation, member_cap: u64) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = f.validate() {
        out.push(format!("invalid frame: {e}"));
        return out;
    }
    if !f.is_small() {
        out.push(format!(
            "{} rows exceed n(q-1)+1 for n={} q={}",
            f.len(),
            f.n(),
            f.q()
        ));
    }
    for t in f.rows() {
        if !r.contains(t) {
            out.push(format!("row {t:?} is not a solution"));
        }
    }
    for i in 0..f.n() {
        let expected = r.column(i);
        if f.projection(i) != expected {
            out.push(format!(
                "projection {i}: frame {:?}, solutions {:?}",
                f.projection(i),
                expected
            ));
            continue;
        }
        let classes = oracle_congruence(r, i);
        for &a in &expected {
            for &b in &expected {
                if a < b && f.related(a, b, i) != classes.same_class(&a, &b) {
                    out.push(format!(
                        "position {i}: witness prefixes disagree on {a} ~ {b}"
                    ));
                }
            }
        }
    }
    let q = f.q() as u64;
    if (f.n() as u32) < 64
        && q.checked_pow(f.n() as u32)
            .is_some_and(|total| total <= member_cap)
    {
        for t in all_tuples(f.q(), f.n()) {
            if f.member(op, &t) != r.contains(&t) {
                out.push(format!(
                    "membership of {t:?}: frame {}, solutions {}",
                    f.member(op, &t),
                    r.contains(&t)
                ));
            }
        }
    }
    // The solution set is closed under a polymorphism, so the fixpoint may
    // stop once it has reproduced it.
    match op.generate_within(f.rows().iter().cloned(), r) {
        Err(t) => out.push(format!("closure produces {t:?}, which is not a solution")),
        Ok(generated) if generated.len() != r.len() => out.push(format!(
            "closure has {} tuples, solutions {}",
            generated.len(),
            r.len()
        )),
        Ok(_) => {}
    }
    out
}
