use std::collections::BTreeMap;

use super::{closure_project, Frame};
use crate::maltsev::MaltsevOp;
use crate::relations::{Elem, Tuple};

/// The frame of `D^n` with base element 0: the all-zero row plus, for each
/// position `i` and value `a ≠ 0`, the row that is `a` at `i` and 0 elsewhere.
pub fn initial_frame(n: usize, q: u32) -> Frame {
    assert!(n >= 1, "arity must be positive");
    let mut assigned = Vec::with_capacity(n * q as usize);
    let zero = vec![0; n];
    for i in 0..n {
        assigned.push((0, i, zero.clone()));
    }
    for i in 0..n {
        for a in 1..q {
            let mut t = zero.clone();
            t[i] = a;
            assigned.push((a, i, t));
        }
    }
    Frame::from_witness_tuples(n, q, assigned)
}

/// Rebuilds `f` into a frame with at most `n(q−1)+1` rows whose witness
/// function is surjective.
pub fn shrink_to_small(f: &Frame, op: &MaltsevOp) -> Frame {
    if f.n == 0 || f.rows.is_empty() {
        return f.clone();
    }
    let f = f.compact();
    let base = f.rows[0].clone();
    let mut assigned: Vec<(Elem, usize, Tuple)> = Vec::new();
    for i in 0..f.n {
        let fi = base[i];
        let g = f.witness(fi, i).expect("row value has a witness");
        assigned.push((fi, i, base.clone()));
        for a in f.projection(i) {
            if a == fi {
                continue;
            }
            let h = f.witness(a, i).unwrap();
            if h[..i] == g[..i] {
                assigned.push((a, i, op.apply_unchecked(&base, g, h)));
            }
        }
    }
    for (i, &fi) in base.iter().enumerate() {
        for a in f.projection(i) {
            if !f.related(a, fi, i) {
                assigned.push((a, i, f.witness(a, i).unwrap().clone()));
            }
        }
    }
    Frame::from_witness_tuples(f.n, f.q, assigned)
}

/// A frame for `{ (x_2..x_n) : (a, x_2..x_n) ∈ R }`, of arity `n−1`.
pub fn fix_first(f: &Frame, op: &MaltsevOp, a: Elem) -> Frame {
    assert!(f.n >= 1, "cannot fix a coordinate of an arity-0 frame");
    let m = f.n - 1;
    if f.witness_index(a, 0).is_none() {
        return Frame::empty(m, f.q);
    }
    if m == 0 {
        return Frame::unit(f.q);
    }
    let mut assigned: Vec<(Elem, usize, Tuple)> = Vec::new();
    for i in 1..f.n {
        let t = closure_project(&f.rows, op, &[0, i]);
        // Smallest generated tuple per reachable value at position i.
        let mut reach: BTreeMap<Elem, &Tuple> = BTreeMap::new();
        for row in &t {
            if row[0] == a {
                reach.entry(row[i]).or_insert(row);
            }
        }
        // Values sharing a witness prefix in R stay together after fixing.
        let mut groups: BTreeMap<&[Elem], Vec<Elem>> = BTreeMap::new();
        for &b in reach.keys() {
            let w = f.witness(b, i).expect("projection value has a witness");
            groups.entry(&w[..i]).or_default().push(b);
        }
        for members in groups.values() {
            let b0 = members[0];
            let w = reach[&b0];
            let base = f.witness(b0, i).unwrap();
            for &c in members {
                let row = if c == b0 {
                    w.clone()
                } else {
                    op.apply_unchecked(w, base, f.witness(c, i).unwrap())
                };
                assigned.push((c, i - 1, row[1..].to_vec()));
            }
        }
    }
    shrink_to_small(&Frame::from_witness_tuples(m, f.q, assigned), op)
}

/// Fixes the first `values.len()` coordinates in turn.
pub fn fix_prefix(f: &Frame, op: &MaltsevOp, values: &[Elem]) -> Frame {
    let mut out = f.clone();
    for &a in values {
        if out.is_empty() {
            return Frame::empty(out.n.saturating_sub(1), out.q);
        }
        out = fix_first(&out, op, a);
    }
    out
}
