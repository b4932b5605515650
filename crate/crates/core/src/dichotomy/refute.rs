use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixtures::{instance_vocabulary, random_instance};
use crate::frames::{build_frame, Instance};
use crate::maltsev::MaltsevOp;
use crate::oracle::oracle_balance;
use crate::relations::{CountMatrix, Relation, RelationalStructure, Tuple};

/// How many generated formulas [`refute_balance`] tries after the
/// relations of the language themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefuteOptions {
    pub formulas: usize,
    pub max_vars: usize,
    pub max_constraints: usize,
    pub seed: u64,
    /// Formulas whose solution set exceeds this many tuples are skipped.
    pub max_solutions: usize,
}

impl Default for RefuteOptions {
    fn default() -> Self {
        Self {
            formulas: 40,
            max_vars: 4,
            max_constraints: 3,
            seed: 0,
            max_solutions: 1 << 14,
        }
    }
}

/// A pp-formula whose balance matrix over `(x, y)` is not a rank-one block
/// matrix. `x` and `y` are 0-based variables of `formula`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceRefutation {
    pub formula: Instance,
    pub x: usize,
    pub y: usize,
    pub matrix: CountMatrix<Tuple>,
}

/// Balance matrix of `r` with coordinates `x` and `y` as the row and column
/// groups and every other coordinate as the tail.
pub fn pair_balance(r: &Relation, x: usize, y: usize) -> (CountMatrix<Tuple>, bool) {
    let mut order = vec![x, y];
    order.extend((0..r.arity()).filter(|&p| p != x && p != y));
    let reordered = r.project(&order).expect("positions are in range");
    oracle_balance(&reordered, 1, 1)
}

fn first_unbalanced_pair(r: &Relation) -> Option<(usize, usize, CountMatrix<Tuple>)> {
    for x in 0..r.arity() {
        for y in 0..r.arity() {
            if x == y {
                continue;
            }
            let (m, ok) = pair_balance(r, x, y);
            if !ok {
                return Some((x, y, m));
            }
        }
    }
    None
}

/// Looks for a pp-formula over `s` with a non-rank-one balance matrix: first
/// each declared relation, then seeded random formulas. Solution sets are
/// generated from frames under `op`, which must preserve the language.
///
/// Sound but incomplete: `None` does not mean the language is balanced.
pub fn refute_balance(
    s: &RelationalStructure,
    op: &MaltsevOp,
    opts: RefuteOptions,
) -> Option<BalanceRefutation> {
    for (name, r) in s.declared() {
        if let Some((x, y, matrix)) = first_unbalanced_pair(r) {
            let scope: Vec<usize> = (0..r.arity()).collect();
            return Some(BalanceRefutation {
                formula: Instance::new(r.arity()).with(name, &scope),
                x,
                y,
                matrix,
            });
        }
    }
    let names = instance_vocabulary(s, true);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.formulas {
        let n = rng.gen_range(2..=opts.max_vars.max(2));
        let m = rng.gen_range(1..=opts.max_constraints.max(1));
        let formula = random_instance(&mut rng, s, &names, n, m);
        let Ok(frame) = build_frame(s, op, &formula) else {
            continue;
        };
        let Some(tuples) = frame.enumerate(op, opts.max_solutions) else {
            continue;
        };
        let r = Relation::new(n, tuples).expect("frame tuples have length n");
        if let Some((x, y, matrix)) = first_unbalanced_pair(&r) {
            return Some(BalanceRefutation {
                formula,
                x,
                y,
                matrix,
            });
        }
    }
    None
}
