//! Named structures and seeded random generators used by tests, the
//! acceptance suite and the self-test command.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::frames::Instance;
use crate::maltsev::MaltsevOp;
use crate::relations::{Elem, Relation, RelationalStructure, Tuple};

fn rel(arity: usize, tuples: &[&[Elem]]) -> Relation {
    Relation::new(arity, tuples.iter().map(|t| t.to_vec()))
        .expect("fixture tuples have the stated arity")
}

/// `{t ∈ {0,1}³ : t1 ⊕ t2 ⊕ t3 = 0}`.
pub fn xor3() -> Relation {
    rel(3, &[&[0, 0, 0], &[0, 1, 1], &[1, 0, 1], &[1, 1, 0]])
}

/// `{(0,1), (1,0), (1,1)}`.
pub fn or() -> Relation {
    rel(2, &[&[0, 1], &[1, 0], &[1, 1]])
}

/// Disequality on `q` elements.
pub fn neq(q: u32) -> Relation {
    Relation::new(
        2,
        (0..q).flat_map(|a| (0..q).filter(move |&b| b != a).map(move |b| vec![a, b])),
    )
    .unwrap()
}

/// `{(a, …, a)}` of the given arity.
pub fn diagonal(q: u32, arity: usize) -> Relation {
    Relation::new(arity, (0..q).map(|a| vec![a; arity])).unwrap()
}

fn single(q: u32, name: &str, r: Relation) -> RelationalStructure {
    RelationalStructure::new(q)
        .and_then(|s| s.with_relation(name, r))
        .expect("fixture structure is valid")
}

pub fn xor3_structure() -> RelationalStructure {
    single(2, "XOR3", xor3())
}

pub fn or_structure() -> RelationalStructure {
    single(2, "OR", or())
}

pub fn neq3_structure() -> RelationalStructure {
    single(3, "NEQ", neq(3))
}

/// The domain `{0,1}` with no declared relations; instances use the
/// built-in `EQ`, `CONST_0` and `CONST_1`.
pub fn eq_const_structure() -> RelationalStructure {
    RelationalStructure::new(2).expect("q = 2 is valid")
}

/// The ternary diagonal on `{0,1,2}` under the name `DIAG`.
pub fn diagonal_structure() -> RelationalStructure {
    single(3, "DIAG", diagonal(3, 3))
}

/// Element encoding of the seven-element structure below.
pub mod unbalanced7 {
    use crate::relations::Elem;

    pub const A00: Elem = 2;
    pub const A01: Elem = 3;
    pub const A10: Elem = 4;
    pub const A11: Elem = 5;
    pub const B: Elem = 6;

    pub fn a(i: Elem, j: Elem) -> Elem {
        A00 + 2 * i + j
    }
}

/// The ternary relation `{(i, j, a_ij) : i,j ∈ {0,1}} ∪ {(0, 0, b)}` on
/// seven elements. It has a Mal'tsev polymorphism but its balance matrix on
/// the first two coordinates is `[[2,1],[1,1]]`.
pub fn unbalanced7_relation() -> Relation {
    let mut tuples: Vec<Tuple> = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            tuples.push(vec![i, j, unbalanced7::a(i, j)]);
        }
    }
    tuples.push(vec![0, 0, unbalanced7::B]);
    Relation::new(3, tuples).unwrap()
}

pub fn unbalanced7_structure() -> RelationalStructure {
    single(7, "R", unbalanced7_relation())
}

/// A uniformly random Mal'tsev operation on `0..q`.
pub fn random_maltsev<R: Rng>(rng: &mut R, q: u32) -> MaltsevOp {
    let mut table = Vec::with_capacity((q as usize).pow(3));
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                table.push(if b == c {
                    a
                } else if a == b {
                    c
                } else {
                    rng.gen_range(0..q)
                });
            }
        }
    }
    MaltsevOp::from_table(q, table).expect("identities hold by construction")
}

fn random_tuples<R: Rng>(rng: &mut R, q: u32, arity: usize, count: usize) -> Vec<Tuple> {
    (0..count)
        .map(|_| (0..arity).map(|_| rng.gen_range(0..q)).collect())
        .collect()
}

/// The closure of `generators` random tuples under `x − y + z mod q`: a
/// union-free coset of a subgroup of `Z_q^arity`.
pub fn random_coset<R: Rng>(rng: &mut R, q: u32, arity: usize, generators: usize) -> Relation {
    let op = MaltsevOp::affine(q);
    let g = random_tuples(rng, q, arity, generators.max(1));
    Relation::new(arity, op.generate(g)).unwrap()
}

/// The closure of random tuples under `op`.
pub fn random_closure<R: Rng>(
    rng: &mut R,
    op: &MaltsevOp,
    arity: usize,
    generators: usize,
) -> Relation {
    let g = random_tuples(rng, op.q(), arity, generators.max(1));
    Relation::new(arity, op.generate(g)).unwrap()
}

/// A random instance on `n` variables with `m` constraints drawn from
/// `names`. Scopes repeat a variable with small probability.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    s: &RelationalStructure,
    names: &[String],
    n: usize,
    m: usize,
) -> Instance {
    let mut inst = Instance::new(n);
    for _ in 0..m {
        let name = names.choose(rng).expect("at least one relation name");
        let arity = s.relation(name).expect("name resolves").arity();
        let scope: Vec<usize> = if rng.gen_bool(0.1) || arity > n {
            (0..arity).map(|_| rng.gen_range(0..n)).collect()
        } else {
            let mut vars: Vec<usize> = (0..n).collect();
            vars.shuffle(rng);
            vars.truncate(arity);
            vars
        };
        inst = inst.with(name, &scope);
    }
    inst
}

/// Relation names usable in random instances over `s`: declared relations,
/// `EQ`, and every `CONST_a`.
pub fn instance_vocabulary(s: &RelationalStructure, with_constants: bool) -> Vec<String> {
    let mut names: Vec<String> = s.declared().map(|(n, _)| n.to_owned()).collect();
    names.push("EQ".to_owned());
    if with_constants {
        names.extend((0..s.q()).map(|a| format!("CONST_{a}")));
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixture_shapes() {
        assert_eq!(neq(3).len(), 6);
        assert_eq!(unbalanced7_relation().len(), 5);
        assert!(unbalanced7_relation().contains(&[1, 0, unbalanced7::A10]));
        assert_eq!(unbalanced7::A11, 5);
    }

    #[test]
    fn random_relations_are_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let op = random_maltsev(&mut rng, 3);
            let r = random_closure(&mut rng, &op, 3, 3);
            assert!(op.preserves(&r));
            let c = random_coset(&mut rng, 3, 4, 2);
            assert!(MaltsevOp::affine(3).preserves(&c));
        }
    }

    #[test]
    fn seeded_instances_are_reproducible() {
        let s = xor3_structure();
        let names = instance_vocabulary(&s, true);
        let a = random_instance(&mut ChaCha8Rng::seed_from_u64(3), &s, &names, 6, 5);
        let b = random_instance(&mut ChaCha8Rng::seed_from_u64(3), &s, &names, 6, 5);
        assert_eq!(a, b);
        assert!(a.resolve(&s).is_ok());
    }
}
