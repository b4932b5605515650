use std::collections::HashSet;

use crate::maltsev::MaltsevOp;
use crate::relations::{Elem, Tuple};

/// Extends `rows` by Mal'tsev images until the projection onto `indices` is
/// closed, and returns all rows (the originals first).
///
/// New rows are kept only when their projection onto `indices` is not yet
/// present. Every unordered index triple is visited once, applying each
/// distinct permutation whose middle index differs from both ends.
pub fn closure_project(rows: &[Tuple], op: &MaltsevOp, indices: &[usize]) -> Vec<Tuple> {
    let mut t: Vec<Tuple> = rows.to_vec();
    let key = |row: &Tuple| -> Vec<Elem> { indices.iter().map(|&i| row[i]).collect() };
    let mut seen: HashSet<Vec<Elem>> = t.iter().map(key).collect();
    let mut j1 = 1;
    while j1 < t.len() {
        for j2 in 0..=j1 {
            for j3 in 0..=j2 {
                for (k1, k2, k3) in middle_distinct_permutations(j1, j2, j3) {
                    let u = op.apply_unchecked(&t[k1], &t[k2], &t[k3]);
                    if seen.insert(key(&u)) {
                        t.push(u);
                    }
                }
            }
        }
        j1 += 1;
    }
    t
}

/// Distinct permutations `(k1,k2,k3)` of the multiset `{a,b,c}` with
/// `k2 ∉ {k1,k3}`, in a fixed order.
fn middle_distinct_permutations(a: usize, b: usize, c: usize) -> Vec<(usize, usize, usize)> {
    let all = [
        (a, b, c),
        (a, c, b),
        (b, a, c),
        (b, c, a),
        (c, a, b),
        (c, b, a),
    ];
    let mut out: Vec<(usize, usize, usize)> = Vec::with_capacity(6);
    for p in all {
        if p.1 != p.0 && p.1 != p.2 && !out.contains(&p) {
            out.push(p);
        }
    }
    out
}
