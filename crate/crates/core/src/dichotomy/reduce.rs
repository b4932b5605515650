use std::collections::BTreeSet;

use crate::relations::Relation;

/// Largest arity for which product factors are searched over all splits.
const MAX_SPLIT_ARITY: usize = 12;

/// Relations whose powers have the same automorphisms as those of `r`.
///
/// A bijection preserves `H^k` iff it preserves the powers of each product
/// factor of `H`, a repeated coordinate adds nothing, and full or empty
/// factors are preserved by every bijection.
pub fn reduce_relation(q: u32, r: &Relation) -> Vec<Relation> {
    if r.is_empty() || r.arity() == 0 {
        return Vec::new();
    }
    let r = drop_repeated_coordinates(r);
    product_blocks(&r)
        .into_iter()
        .map(|block| r.project(&block).expect("block positions are distinct"))
        .filter(|f| (f.len() as u128) < (q as u128).saturating_pow(f.arity() as u32))
        .collect()
}

fn drop_repeated_coordinates(r: &Relation) -> Relation {
    let columns: Vec<Vec<u32>> = (0..r.arity())
        .map(|p| r.iter().map(|t| t[p]).collect())
        .collect();
    let keep: Vec<usize> = (0..r.arity())
        .filter(|&p| (0..p).all(|e| columns[e] != columns[p]))
        .collect();
    if keep.len() == r.arity() {
        r.clone()
    } else {
        r.project(&keep).expect("kept positions are distinct")
    }
}

/// The finest partition of the coordinates of `r` into blocks with `r`
/// equal to the product of its projections onto them.
fn product_blocks(r: &Relation) -> Vec<Vec<usize>> {
    let n = r.arity();
    if !(2..=MAX_SPLIT_ARITY).contains(&n) {
        return vec![(0..n).collect()];
    }
    // Coordinates share a block unless some product split separates them.
    let mut signature: Vec<Vec<bool>> = vec![Vec::new(); n];
    for mask in 1u64..(1 << (n - 1)) {
        let left: Vec<usize> = (0..n).filter(|&p| mask >> p & 1 == 1).collect();
        let right: Vec<usize> = (0..n).filter(|&p| mask >> p & 1 == 0).collect();
        let a = r.project(&left).expect("distinct").len();
        let b = r.project(&right).expect("distinct").len();
        if a * b == r.len() {
            for (p, sig) in signature.iter_mut().enumerate() {
                sig.push(mask >> p & 1 == 1);
            }
        }
    }
    let mut seen: BTreeSet<&Vec<bool>> = BTreeSet::new();
    let mut blocks = Vec::new();
    for p in 0..n {
        if seen.insert(&signature[p]) {
            blocks.push((p..n).filter(|&x| signature[x] == signature[p]).collect());
        }
    }
    blocks
}
