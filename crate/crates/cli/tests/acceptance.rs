//! Acceptance suite. Prints one PASS or FAIL line per criterion and exits
//! nonzero if any criterion fails. Thresholds are pinned below.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ccsp_cli::commands::{analyze, count as cmd_count, CountOptions};
use ccsp_cli::parse::{
    parse_instance, parse_structure, InstanceText, StructureFile, StructureText,
};
use ccsp_cli::selftest::{run as run_selftest, SelftestOptions};
use ccsp_cli::AnalysisArgs;
use ccsp_core::counting::{congruences, count_traced, count_with};
use ccsp_core::dichotomy::{
    decide_strong_balance, refute_balance, sweep, DecideOptions, RefuteOptions, VerdictKind,
};
use ccsp_core::fixtures::{
    diagonal_structure, eq_const_structure, instance_vocabulary, neq3_structure, or_structure,
    random_closure, random_coset, random_instance, random_maltsev, unbalanced7_structure,
    xor3_structure,
};
use ccsp_core::frames::{add_constraint, add_constraint_split, build_frame_with, Frame, Instance};
use ccsp_core::maltsev::{find_maltsev, MaltsevOp};
use ccsp_core::oracle::{
    enumerate_solutions, frame_violations, oracle_congruence_pair, oracle_count,
};
use ccsp_core::relations::{
    all_tuples, is_rank_one_block, matrix_blocks, reconstruct_rank_one,
    satisfies_rank_one_identity, support_is_rectangular, CountMatrix, Elem, Relation,
    RelationalStructure, Tuple,
};
use ccsp_core::strategy::{DirectAdder, FrameCounter};
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const COUNT_INSTANCES_PER_FIXTURE: usize = 200;
const COUNT_MAX_VARS: usize = 8;
const COUNT_MAX_CONSTRAINTS: usize = 10;
const COUNT_TIME_LIMIT: Duration = Duration::from_secs(120);
const UNBALANCED7_TIME_LIMIT: Duration = Duration::from_secs(5);
const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(300);
const MIN_FRAMES: usize = 500;
const MEMBER_CAP: u64 = 1 << 16;
const MIN_MATRICES: usize = 1000;
const MIN_RECONSTRUCTIONS: usize = 500;
const ORACLE_BITS: f64 = 24.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// A random language with a known Mal'tsev polymorphism, and that
/// polymorphism.
fn random_case(rng: &mut ChaCha8Rng, k: usize) -> (RelationalStructure, MaltsevOp) {
    let s = match k % 5 {
        0 => xor3_structure(),
        1 => diagonal_structure(),
        2 => eq_const_structure(),
        3 => {
            let q = rng.gen_range(2..=3);
            let arity = rng.gen_range(2..=3);
            RelationalStructure::new(q)
                .unwrap()
                .with_relation("R", random_coset(rng, q, arity, 2))
                .unwrap()
        }
        _ => {
            let q = rng.gen_range(2..=3);
            let op = random_maltsev(rng, q);
            let a = rng.gen_range(2..=3);
            let r = random_closure(rng, &op, a, 2);
            let t = random_closure(rng, &op, 2, 2);
            let s = RelationalStructure::new(q)
                .unwrap()
                .with_relation("A", r)
                .unwrap()
                .with_relation("B", t)
                .unwrap();
            return (s, op);
        }
    };
    let op = find_maltsev(&s)
        .into_op()
        .expect("fixture has a Mal'tsev polymorphism");
    (s, op)
}

/// Random (structure, op, instance, solutions) with at most 6 variables.
fn random_cases(
    seed: u64,
    count: usize,
) -> Vec<(RelationalStructure, MaltsevOp, Instance, Relation)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let (s, op) = random_case(&mut rng, k);
            let n = rng.gen_range(1..=6);
            let m = rng.gen_range(0..=6);
            let inst = random_instance(&mut rng, &s, &instance_vocabulary(&s, true), n, m);
            let r = enumerate_solutions(&s, &inst, ORACLE_BITS).unwrap();
            (s, op, inst, r)
        })
        .collect()
}

fn oracle_count_equivalence() -> Outcome {
    let start = Instant::now();
    let fixtures: [(&str, RelationalStructure, bool); 3] = [
        ("XOR3", xor3_structure(), false),
        ("EQ+CONST", eq_const_structure(), true),
        ("DIAG+EQ", diagonal_structure(), false),
    ];
    let mut total = 0;
    for (k, (name, s, constants)) in fixtures.into_iter().enumerate() {
        let file: StructureFile =
            parse_structure(&StructureText(&s).to_string()).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let names = instance_vocabulary(&s, constants);
        let instances: Vec<Instance> = (0..COUNT_INSTANCES_PER_FIXTURE)
            .map(|_| {
                let n = rng.gen_range(1..=COUNT_MAX_VARS);
                let m = rng.gen_range(0..=COUNT_MAX_CONSTRAINTS);
                let inst = random_instance(&mut rng, &s, &names, n, m);
                parse_instance(&InstanceText(&inst).to_string(), &file.full)
                    .expect("instance round-trips")
            })
            .collect();
        let out = cmd_count(&file, &instances, &CountOptions::default());
        check(out.code == 0, || {
            format!("{name}: count exited {}: {}", out.code, out.stderr)
        })?;
        let counts: Vec<&str> = out.stdout.lines().collect();
        check(counts.len() == instances.len(), || {
            format!("{name}: {} counts", counts.len())
        })?;
        for (inst, got) in instances.iter().zip(counts) {
            let expected =
                oracle_count(&file.full, inst, ORACLE_BITS).map_err(|e| e.to_string())?;
            check(got == expected.to_string(), || {
                format!("{name}: {inst}: count {got}, oracle {expected}")
            })?;
            total += 1;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < COUNT_TIME_LIMIT, || format!("took {elapsed:.1?}"))?;
    Ok(format!("{total} instances agree exactly in {elapsed:.1?}"))
}

fn unbalanced7_fixture() -> Outcome {
    let start = Instant::now();
    let s = unbalanced7_structure();
    let op = find_maltsev(&s)
        .into_op()
        .ok_or("no Mal'tsev polymorphism found")?;
    let r = refute_balance(&s, &op, RefuteOptions::default()).ok_or("balance not refuted")?;
    let rows: Vec<Tuple> = r.matrix.rows().to_vec();
    check(
        rows == vec![vec![0], vec![1]] && r.matrix.cols().to_vec() == rows,
        || {
            format!(
                "matrix indexed by {:?} x {:?}",
                r.matrix.rows(),
                r.matrix.cols()
            )
        },
    )?;
    check(r.matrix.to_string() == "[[2,1],[1,1]]", || {
        format!("matrix {}", r.matrix)
    })?;
    let file = parse_structure(&StructureText(&s).to_string()).map_err(|e| e.to_string())?;
    let out = analyze(&file, &AnalysisArgs::default(), false);
    check(
        out.code == 1 && out.stdout.starts_with("result=SHARP_P_COMPLETE\n"),
        || out.stdout.clone(),
    )?;
    let elapsed = start.elapsed();
    check(elapsed < UNBALANCED7_TIME_LIMIT, || {
        format!("took {elapsed:.1?}")
    })?;
    Ok(format!(
        "matrix {} over x,y in {{0,1}}, SHARP_P_COMPLETE in {elapsed:.1?}",
        r.matrix
    ))
}

fn dichotomy_endpoints() -> Outcome {
    let opts = DecideOptions::default();
    for (name, s) in [("OR", or_structure()), ("NEQ3", neq3_structure())] {
        let kind = decide_strong_balance(&s, &opts).kind;
        check(kind == VerdictKind::NotStronglyRectangular, || {
            format!("{name}: {kind}")
        })?;
    }
    let start = Instant::now();
    let (kind, witness) = sweep(
        &xor3_structure(),
        &DecideOptions {
            max_nodes: None,
            ..opts
        },
    );
    let elapsed = start.elapsed();
    check(kind == VerdictKind::Balanced, || {
        format!("XOR3 sweep: {kind} {witness:?}")
    })?;
    check(elapsed < SWEEP_TIME_LIMIT, || {
        format!("XOR3 sweep took {elapsed:.1?}")
    })?;
    Ok(format!(
        "OR and NEQ3 not strongly rectangular; XOR3 sweep BALANCED in {elapsed:.1?}"
    ))
}

fn frame_invariants() -> Outcome {
    let cases = random_cases(4, MIN_FRAMES / 2 + 10);
    let mut frames = 0;
    for (s, op, inst, r) in &cases {
        for adder in [add_constraint, add_constraint_split] {
            let f = build_frame_with(s, op, inst, adder).map_err(|e| e.to_string())?;
            check(f.len() <= f.n() * (f.q() as usize - 1) + 1, || {
                format!("{inst}: {} rows", f.len())
            })?;
            let v = frame_violations(&f, op, r, MEMBER_CAP);
            check(v.is_empty(), || format!("{inst}: {v:?}"))?;
            frames += 1;
        }
    }
    check(frames >= MIN_FRAMES, || format!("only {frames} frames"))?;
    Ok(format!(
        "{frames} frames small, projections and witness prefixes match enumeration"
    ))
}

fn membership_and_generation() -> Outcome {
    let cases = random_cases(5, 300);
    let mut tuples = 0u64;
    for (s, op, inst, r) in &cases {
        let f: Frame = build_frame_with(s, op, inst, add_constraint).map_err(|e| e.to_string())?;
        for t in all_tuples(s.q(), inst.n) {
            check(f.member(op, &t) == r.contains(&t), || {
                format!("{inst}: membership of {t:?}")
            })?;
            tuples += 1;
        }
        let generated = op.generate_within(f.rows().iter().cloned(), r);
        check(generated.as_ref().map(BTreeSet::len) == Ok(r.len()), || {
            format!("{inst}: closure differs")
        })?;
    }
    Ok(format!(
        "{} cases, {tuples} membership queries, every closure equals the solution set",
        cases.len()
    ))
}

/// Rectangular support and vanishing 2x2 minors, straight from the
/// definition.
fn rank_one_by_definition(g: &[Vec<u32>]) -> bool {
    let (k, l) = (g.len(), g[0].len());
    for i in 0..k {
        for j in 0..k {
            for a in 0..l {
                for b in 0..l {
                    let (ia, ib, ja, jb) = (g[i][a], g[i][b], g[j][a], g[j][b]);
                    if ia > 0 && ib > 0 && ja > 0 && (jb == 0 || ia * jb != ib * ja) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn as_matrix(g: &[Vec<u32>]) -> CountMatrix<usize> {
    CountMatrix::from_grid((0..g.len()).collect(), (0..g[0].len()).collect(), g)
}

fn rank_one_blocks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut positive = 0;
    for _ in 0..MIN_MATRICES {
        let (k, l) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        // Sparse grids so that rank-one blocks are common.
        let zero_rate = rng.gen_range(0.0..1.0);
        let g: Vec<Vec<u32>> = (0..k)
            .map(|_| {
                (0..l)
                    .map(|_| {
                        if rng.gen_bool(zero_rate) {
                            0
                        } else {
                            rng.gen_range(0..=4)
                        }
                    })
                    .collect()
            })
            .collect();
        let m = as_matrix(&g);
        let expected = rank_one_by_definition(&g);
        check(is_rank_one_block(&m) == expected, || {
            format!("{g:?}: definition says {expected}")
        })?;
        if support_is_rectangular(&m) {
            check(satisfies_rank_one_identity(&m) == expected, || {
                format!("{g:?}: identity disagrees")
            })?;
        }
        positive += usize::from(expected);
    }
    for _ in 0..MIN_RECONSTRUCTIONS {
        let nblocks = rng.gen_range(1..=3);
        let blocks: Vec<(Vec<u32>, Vec<u32>)> = (0..nblocks)
            .map(|_| {
                let u = (0..rng.gen_range(1..=3))
                    .map(|_| rng.gen_range(1..=4))
                    .collect();
                let v = (0..rng.gen_range(1..=3))
                    .map(|_| rng.gen_range(1..=4))
                    .collect();
                (u, v)
            })
            .collect();
        let k: usize = blocks.iter().map(|b| b.0.len()).sum();
        let l: usize = blocks.iter().map(|b| b.1.len()).sum();
        let mut rows: Vec<usize> = (0..k).collect();
        let mut cols: Vec<usize> = (0..l).collect();
        rows.shuffle(&mut rng);
        cols.shuffle(&mut rng);
        let mut g = vec![vec![0u32; l]; k];
        let (mut r0, mut c0) = (0, 0);
        for (u, v) in &blocks {
            for (a, x) in u.iter().enumerate() {
                for (b, y) in v.iter().enumerate() {
                    g[rows[r0 + a]][cols[c0 + b]] = x * y;
                }
            }
            r0 += u.len();
            c0 += v.len();
        }
        let m = as_matrix(&g);
        let rebuilt = reconstruct_rank_one(&matrix_blocks(&m), &m.row_sums(), &m.col_sums())
            .map_err(|e| e.to_string())?;
        check(rebuilt == m, || format!("{g:?} rebuilt as {rebuilt}"))?;
    }
    Ok(format!(
        "{MIN_MATRICES} matrices ({positive} rank-one) agree with the definition; {MIN_RECONSTRUCTIONS} reconstructions exact"
    ))
}

/// `#{p ∈ pr_{0..i-1} R : (p, key) ∈ pr_{0..i-1, extra} R}`, by value of
/// the extra coordinates.
fn prefix_counts(r: &Relation, i: usize, extra: &[usize]) -> BTreeMap<Vec<Elem>, BigUint> {
    let mut seen: BTreeSet<(Vec<Elem>, Vec<Elem>)> = BTreeSet::new();
    for t in r.iter() {
        seen.insert((t[..i].to_vec(), extra.iter().map(|&p| t[p]).collect()));
    }
    let mut out: BTreeMap<Vec<Elem>, BigUint> = BTreeMap::new();
    for (_, key) in seen {
        *out.entry(key).or_default() += 1u32;
    }
    out
}

fn congruence_correctness() -> Outcome {
    let cases = random_cases(7, 300);
    let mut pairs = 0;
    let mut steps = 0;
    for (s, op, inst, r) in &cases {
        if r.is_empty() {
            continue;
        }
        let f = build_frame_with(s, op, inst, add_constraint).map_err(|e| e.to_string())?;
        for j in 2..inst.n {
            for i in 1..j {
                check(
                    congruences(&f, op, i, j) == oracle_congruence_pair(r, i, j),
                    || format!("{inst}: congruences at ({i}, {j})"),
                )?;
                pairs += 1;
            }
        }
        let trace = count_traced(s, op, inst).map_err(|e| format!("{inst}: {e}"))?;
        let reduced =
            enumerate_solutions(s, &trace.reduced, ORACLE_BITS).map_err(|e| e.to_string())?;
        for st in &trace.steps {
            let (i, j) = (st.i, st.j);
            check(is_rank_one_block(&st.matrix), || {
                format!("{inst}: step ({i}, {j}) matrix {}", st.matrix)
            })?;
            let cells = prefix_counts(&reduced, i, &[i, j]);
            for x in st.matrix.rows() {
                for y in st.matrix.cols() {
                    let want = cells.get(&vec![*x, *y]).cloned().unwrap_or_default();
                    check(st.matrix.get(x, y) == want, || {
                        format!("{inst}: step ({i}, {j}) entry ({x}, {y})")
                    })?;
                }
            }
            let by_one = |m: BTreeMap<Vec<Elem>, BigUint>| -> BTreeMap<Elem, BigUint> {
                m.into_iter().map(|(k, v)| (k[0], v)).collect()
            };
            check(
                st.row_margins.values == by_one(prefix_counts(&reduced, i, &[i])),
                || format!("{inst}: step ({i}, {j}) row margins"),
            )?;
            check(
                st.col_margins.values == by_one(prefix_counts(&reduced, i, &[j])),
                || format!("{inst}: step ({i}, {j}) column margins"),
            )?;
            check(
                st.result.values == by_one(prefix_counts(&reduced, i + 1, &[j])),
                || format!("{inst}: step ({i}, {j}) result"),
            )?;
            steps += 1;
        }
        check(trace.count == BigUint::from(r.len()), || {
            format!("{inst}: traced count")
        })?;
    }
    Ok(format!("{pairs} congruence pairs match; {steps} intermediate matrices rank-one with brute-force margins"))
}

fn adder_paths_agree() -> Outcome {
    let cases = random_cases(8, 300);
    for (s, op, inst, r) in &cases {
        let a = build_frame_with(s, op, inst, add_constraint).map_err(|e| e.to_string())?;
        let b = build_frame_with(s, op, inst, add_constraint_split).map_err(|e| e.to_string())?;
        // Each closure stays inside the solution set and stops once it has
        // reproduced it, so equal sizes mean both generate exactly `r`.
        let ga = op
            .generate_within(a.rows().iter().cloned(), r)
            .map_err(|t| format!("{inst}: {t:?} escapes"))?;
        let gb = op
            .generate_within(b.rows().iter().cloned(), r)
            .map_err(|t| format!("{inst}: {t:?} escapes"))?;
        check(ga == gb, || format!("{inst}: generated relations differ"))?;
        check(ga.len() == r.len(), || {
            format!("{inst}: generated {} of {}", ga.len(), r.len())
        })?;
        let ca = count_with(s, op, inst, add_constraint).map_err(|e| e.to_string())?;
        let cb = count_with(s, op, inst, add_constraint_split).map_err(|e| e.to_string())?;
        check(ca == cb, || format!("{inst}: counts {ca} and {cb}"))?;
    }
    Ok(format!(
        "{} instances generate identical relations and counts",
        cases.len()
    ))
}

fn selftest_determinism() -> Outcome {
    let opts = SelftestOptions {
        seed: 2024,
        trials: 60,
        ..SelftestOptions::default()
    };
    let a = run_selftest(&opts, &FrameCounter, &DirectAdder);
    let b = run_selftest(&opts, &FrameCounter, &DirectAdder);
    check(a.code == 0, || a.stdout.clone())?;
    check(a.stdout == b.stdout && a.stderr == b.stderr, || {
        "reports differ".to_owned()
    })?;
    Ok(format!(
        "two runs give identical {}-byte reports",
        a.stdout.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle count equivalence", oracle_count_equivalence),
        ("seven-element counterexample", unbalanced7_fixture),
        ("dichotomy endpoints", dichotomy_endpoints),
        ("frame invariants", frame_invariants),
        ("membership and generation", membership_and_generation),
        ("rank-one block theory", rank_one_blocks),
        ("congruence correctness", congruence_correctness),
        ("constraint-addition paths", adder_paths_agree),
        ("selftest determinism", selftest_determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_owned()));
        let took = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail} [{took:.1?}]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{took:.1?}]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
