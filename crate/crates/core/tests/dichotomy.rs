use ccsp_core::dichotomy::{
    check_quadruple, decide_strong_balance, language_relations, pair_balance, patterns, sweep,
    AutomorphismSearch, DecideOptions, PowerLanguage, SearchBudget, VerdictKind, Witness,
    PATTERN_POWER,
};
use ccsp_core::fixtures::{random_coset, xor3_structure};
use ccsp_core::maltsev::find_maltsev;
use ccsp_core::relations::{Relation, RelationalStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn structure(q: u32, r: Relation) -> RelationalStructure {
    RelationalStructure::new(q)
        .unwrap()
        .with_relation("R", r)
        .unwrap()
}

#[test]
fn xor3_automorphisms_are_genuine() {
    let s = xor3_structure();
    let rels = language_relations(&s);
    let lang = PowerLanguage::new(2, PATTERN_POWER, rels.iter().collect());
    for quad in [[0, 0, 0, 1], [0, 1, 0, 1], [1, 0, 1, 0], [1, 1, 1, 0]] {
        let p = patterns(2, quad[0], quad[1], quad[2], quad[3]);
        let found = check_quadruple(&lang, 2, quad, SearchBudget::unlimited());
        let perm = found.permutation().expect("xor3 is balanced");
        assert_eq!(perm[p.abar as usize], p.abar);
        assert_eq!(perm[p.cbar as usize], p.dbar);
        assert!(lang.is_automorphism(perm), "{quad:?}");
    }
}

#[test]
fn sweep_agrees_with_the_refuter_on_three_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut unbalanced = 0;
    let mut tried = 0;
    while unbalanced < 3 {
        tried += 1;
        assert!(tried < 200_000, "no unbalanced relation found");
        let m = rng.gen_range(3..8);
        let tuples: Vec<Vec<u32>> = (0..m)
            .map(|_| (0..3).map(|_| rng.gen_range(0..3)).collect())
            .collect();
        let r = Relation::new(3, tuples).unwrap();
        let s = structure(3, r.clone());
        if find_maltsev(&s).op().is_none() {
            continue;
        }
        if !(0..3).any(|x| (0..3).any(|y| x != y && !pair_balance(&r, x, y).1)) {
            continue;
        }
        unbalanced += 1;
        let (kind, witness) = sweep(&s, &DecideOptions::default());
        assert_eq!(kind, VerdictKind::NotBalanced, "{:?}", r.tuples());
        assert!(matches!(witness, Some(Witness::Quadruple(_))));
    }
}

#[test]
fn cosets_are_balanced_by_the_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        let s = structure(3, random_coset(&mut rng, 3, 3, 2));
        assert_eq!(
            sweep(&s, &DecideOptions::default()).0,
            VerdictKind::Balanced
        );
    }
}

#[test]
fn known_unbalanced_relation() {
    let r = Relation::new(
        3,
        vec![
            vec![0, 0, 1],
            vec![0, 0, 2],
            vec![0, 2, 0],
            vec![2, 0, 0],
            vec![2, 2, 1],
            vec![2, 2, 2],
        ],
    )
    .unwrap();
    let (m, ok) = pair_balance(&r, 0, 1);
    assert!(!ok);
    assert_eq!(m.to_string(), "[[2,1],[1,2]]");
    let s = structure(3, r);
    let v = decide_strong_balance(&s, &DecideOptions::default());
    assert_eq!(v.kind, VerdictKind::NotBalanced);
    assert!(matches!(v.witness, Some(Witness::Balance(_))));
    assert_eq!(
        sweep(&s, &DecideOptions::default()),
        (
            VerdictKind::NotBalanced,
            Some(Witness::Quadruple([0, 1, 0, 1]))
        )
    );
}

#[test]
fn decisions_are_deterministic() {
    let s = xor3_structure();
    let opts = DecideOptions {
        parallel: true,
        ..DecideOptions::default()
    };
    assert_eq!(
        decide_strong_balance(&s, &opts),
        decide_strong_balance(&s, &opts)
    );
}

#[test]
fn tiny_budget_times_out() {
    let opts = DecideOptions {
        max_nodes: Some(1),
        ..DecideOptions::default()
    };
    let v = decide_strong_balance(&xor3_structure(), &opts);
    assert_eq!(v.kind, VerdictKind::Timeout);
    assert!(matches!(v.witness, Some(Witness::Unresolved(_))));
    let lang_rels = language_relations(&xor3_structure());
    let lang = PowerLanguage::new(2, PATTERN_POWER, lang_rels.iter().collect());
    assert_eq!(
        check_quadruple(&lang, 2, [0, 1, 0, 1], SearchBudget::nodes(1)),
        AutomorphismSearch::Exhausted
    );
}
