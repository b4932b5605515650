//! Random differential testing against the brute-force oracle.
//!
//! Each trial draws a fixture language with a Mal'tsev polymorphism and a
//! random instance, then checks the count, the frame and the congruences.
//! A failing instance is shrunk before it is reported. The report depends
//! only on the options, never on timing.

use ccsp_core::counting::congruences_with;
use ccsp_core::fixtures::{
    diagonal_structure, eq_const_structure, instance_vocabulary, random_closure, random_coset,
    random_instance, random_maltsev, xor3_structure,
};
use ccsp_core::frames::{build_frame_with, Instance};
use ccsp_core::maltsev::find_maltsev;
use ccsp_core::oracle::{
    enumerate_solutions, frame_violations, oracle_congruence_pair, within_cap,
};
use ccsp_core::relations::RelationalStructure;
use ccsp_core::strategy::{ConstraintAdder, Counter};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::Outcome;
use crate::exit;
use crate::parse::{InstanceText, StructureText};

pub const FIXTURES: [&str; 5] = ["xor3", "eq-const", "diagonal", "coset", "closure"];

/// Largest `q^n` for which frame membership is checked on every tuple.
const MEMBER_CAP: u64 = 1 << 16;

#[derive(Debug, Clone)]
pub struct SelftestOptions {
    pub seed: u64,
    pub trials: usize,
    /// `mixed` or one of [`FIXTURES`].
    pub fixture: String,
    pub max_vars: usize,
    pub max_constraints: usize,
    pub max_bits: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 100,
            fixture: "mixed".to_owned(),
            max_vars: 6,
            max_constraints: 6,
            max_bits: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Check {
    Passed(BigUint),
    Skipped(String),
    Mismatch(String),
}

pub fn fixture(name: &str, rng: &mut ChaCha8Rng) -> RelationalStructure {
    match name {
        "xor3" => xor3_structure(),
        "eq-const" => eq_const_structure(),
        "diagonal" => diagonal_structure(),
        "coset" => {
            let q = rng.gen_range(2..=3);
            let arity = rng.gen_range(2..=3);
            RelationalStructure::new(q)
                .unwrap()
                .with_relation("R", random_coset(rng, q, arity, 2))
                .unwrap()
        }
        "closure" => {
            let q = rng.gen_range(2..=3);
            let op = random_maltsev(rng, q);
            let arity = rng.gen_range(2..=3);
            let r = random_closure(rng, &op, arity, 2);
            let s = random_closure(rng, &op, 2, 2);
            RelationalStructure::new(q)
                .unwrap()
                .with_relation("R", r)
                .unwrap()
                .with_relation("S", s)
                .unwrap()
        }
        other => panic!("unknown fixture {other}"),
    }
}

/// Compares `counter`, the frame built with `adder`, and the frame
/// congruences with enumeration.
pub fn check_case(
    s: &RelationalStructure,
    inst: &Instance,
    counter: &dyn Counter,
    adder: &dyn ConstraintAdder,
    max_bits: f64,
) -> Check {
    if !within_cap(inst.n, s.q(), max_bits) {
        return Check::Skipped(format!(
            "{}^{} assignments exceed 2^{max_bits}",
            s.q(),
            inst.n
        ));
    }
    let Some(op) = find_maltsev(s).into_op() else {
        return Check::Skipped("no Mal'tsev polymorphism".to_owned());
    };
    let r = match enumerate_solutions(s, inst, max_bits) {
        Ok(r) => r,
        Err(e) => return Check::Skipped(e.to_string()),
    };
    let expected = BigUint::from(r.len());
    match counter.count(s, Some(&op), inst, adder) {
        Ok(got) if got == expected => {}
        Ok(got) => {
            return Check::Mismatch(format!("count {}={got}, oracle={expected}", counter.name()))
        }
        Err(e) => return Check::Mismatch(format!("count {} failed: {e}", counter.name())),
    }
    let f = match build_frame_with(s, &op, inst, adder.adder()) {
        Ok(f) => f,
        Err(e) => return Check::Mismatch(format!("frame failed: {e}")),
    };
    if let Some(v) = frame_violations(&f, &op, &r, MEMBER_CAP).into_iter().next() {
        return Check::Mismatch(format!("frame: {v}"));
    }
    if !r.is_empty() {
        for j in 2..inst.n {
            for i in 1..j {
                let got = congruences_with(&f, &op, i, j, adder.adder());
                if got != oracle_congruence_pair(&r, i, j) {
                    return Check::Mismatch(format!(
                        "congruences at ({}, {}) differ from the oracle",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
    }
    Check::Passed(expected)
}

/// Drops constraints and then unused variables while the case still fails.
pub fn shrink(inst: &Instance, fails: impl Fn(&Instance) -> bool) -> Instance {
    let mut best = inst.clone();
    'outer: loop {
        for k in 0..best.constraints.len() {
            let mut candidate = best.clone();
            candidate.constraints.remove(k);
            if fails(&candidate) {
                best = candidate;
                continue 'outer;
            }
        }
        break;
    }
    let (mut reduced, _) = best.without_free_variables();
    if reduced.n == 0 {
        reduced.n = 1;
    }
    if reduced != best && fails(&reduced) {
        best = reduced;
    }
    best
}

pub fn run(opts: &SelftestOptions, counter: &dyn Counter, adder: &dyn ConstraintAdder) -> Outcome {
    if opts.fixture != "mixed" && !FIXTURES.contains(&opts.fixture.as_str()) {
        return Outcome::error(
            exit::PARSE_ERROR,
            format!(
                "unknown fixture `{}`; available: mixed, {}",
                opts.fixture,
                FIXTURES.join(", ")
            ),
        );
    }
    if opts.max_vars == 0 {
        return Outcome::error(exit::PARSE_ERROR, "--max-vars must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = format!(
        "selftest seed={} trials={} fixture={} method={} adder={}\n",
        opts.seed,
        opts.trials,
        opts.fixture,
        counter.name(),
        adder.name()
    );
    let (mut passed, mut skipped, mut failed) = (0, 0, 0);
    for trial in 1..=opts.trials {
        let name = if opts.fixture == "mixed" {
            FIXTURES[rng.gen_range(0..FIXTURES.len())]
        } else {
            opts.fixture.as_str()
        };
        let s = fixture(name, &mut rng);
        let n = rng.gen_range(1..=opts.max_vars);
        let m = rng.gen_range(0..=opts.max_constraints);
        let inst = random_instance(&mut rng, &s, &instance_vocabulary(&s, true), n, m);
        let head = format!("trial {trial} fixture={name} q={} n={n} m={m}", s.q());
        match check_case(&s, &inst, counter, adder, opts.max_bits) {
            Check::Passed(c) => {
                passed += 1;
                out += &format!("{head} count={c} ok\n");
            }
            Check::Skipped(why) => {
                skipped += 1;
                out += &format!("{head} skipped: {why}\n");
            }
            Check::Mismatch(why) => {
                failed += 1;
                out += &format!("{head} MISMATCH: {why}\n");
                let fails = |c: &Instance| {
                    matches!(
                        check_case(&s, c, counter, adder, opts.max_bits),
                        Check::Mismatch(_)
                    )
                };
                let small = shrink(&inst, fails);
                if let Check::Mismatch(why) = check_case(&s, &small, counter, adder, opts.max_bits)
                {
                    out += &format!("minimal failing case for trial {trial}: {why}\n");
                }
                out += &format!(
                    "--- structure\n{}--- instance\n{}---\n",
                    StructureText(&s),
                    InstanceText(&small)
                );
            }
        }
    }
    out += &format!("summary passed={passed} skipped={skipped} failed={failed}\n");
    let code = if failed > 0 {
        exit::NEGATIVE
    } else {
        exit::SUCCESS
    };
    Outcome::with_code(code, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccsp_core::strategy::{DirectAdder, FrameCounter, SplitAdder};

    #[test]
    fn xor3_trials_pass() {
        let opts = SelftestOptions {
            fixture: "xor3".to_owned(),
            ..SelftestOptions::default()
        };
        let o = run(&opts, &FrameCounter, &DirectAdder);
        assert_eq!(o.code, 0, "{}", o.stdout);
        assert!(o
            .stdout
            .ends_with("summary passed=100 skipped=0 failed=0\n"));
    }

    #[test]
    fn zero_trials_pass() {
        let opts = SelftestOptions {
            trials: 0,
            ..SelftestOptions::default()
        };
        let o = run(&opts, &FrameCounter, &SplitAdder);
        assert_eq!(o.code, 0);
        assert!(o.stdout.ends_with("summary passed=0 skipped=0 failed=0\n"));
    }

    #[test]
    fn oversized_cases_are_skipped() {
        let opts = SelftestOptions {
            trials: 5,
            fixture: "diagonal".to_owned(),
            max_bits: 0.5,
            ..SelftestOptions::default()
        };
        let o = run(&opts, &FrameCounter, &DirectAdder);
        assert_eq!(o.code, 0);
        assert!(o.stdout.contains("skipped=5"), "{}", o.stdout);
    }

    #[test]
    fn shrinking_keeps_a_failing_core() {
        let inst = Instance::new(6)
            .with("XOR3", &[0, 1, 2])
            .with("CONST_1", &[4])
            .with("EQ", &[3, 5]);
        let small = shrink(&inst, |c| {
            c.constraints.iter().any(|k| k.relation == "CONST_1")
        });
        assert_eq!(small, Instance::new(1).with("CONST_1", &[0]));
    }

    #[test]
    fn unknown_fixture_is_rejected() {
        let opts = SelftestOptions {
            fixture: "nope".to_owned(),
            ..SelftestOptions::default()
        };
        assert_eq!(
            run(&opts, &FrameCounter, &DirectAdder).code,
            exit::PARSE_ERROR
        );
    }
}
