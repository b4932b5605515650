use std::path::{Path, PathBuf};
use std::process::Command;

use ccsp_cli::parse::StructureText;
use ccsp_cli::selftest::{run as run_selftest, SelftestOptions};
use ccsp_core::fixtures::{neq3_structure, unbalanced7_structure};
use ccsp_core::frames::Instance;
use ccsp_core::maltsev::MaltsevOp;
use ccsp_core::relations::RelationalStructure;
use ccsp_core::strategy::{ConstraintAdder, Counter, DirectAdder, FrameCounter, StrategyError};
use num_bigint::BigUint;
use tempfile::TempDir;

const XOR3: &str = "domain 2\nrelation XOR3 3 4\n0 0 0\n0 1 1\n1 0 1\n1 1 0\n";
const OR: &str = "domain 2\nrelation OR 2 3\n0 1\n1 0\n1 1\n";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

struct Files(TempDir);

impl Files {
    fn new() -> Self {
        Files(tempfile::tempdir().unwrap())
    }

    fn put(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

fn ccsp(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_ccsp"))
        .args(args)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_reports_both_sides() {
    let f = Files::new();
    let xor = f.put("xor.txt", XOR3);
    let r = ccsp(&["analyze", path(&xor)]);
    assert_eq!(r.code, 0);
    assert!(
        r.stdout
            .starts_with("result=FP\nverdict=BALANCED\nmaltsev=\n0 0 0 -> 0\n"),
        "{}",
        r.stdout
    );

    let or = f.put("or.txt", OR);
    let r = ccsp(&["analyze", path(&or)]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.starts_with(
        "result=SHARP_P_COMPLETE\nverdict=NOT_STRONGLY_RECTANGULAR\nwitness=rectangularity"
    ));

    let seven = f.put(
        "r.txt",
        &StructureText(&unbalanced7_structure()).to_string(),
    );
    let r = ccsp(&["analyze", path(&seven)]);
    assert_eq!(r.code, 1);
    assert!(r
        .stdout
        .contains("verdict=NOT_BALANCED\nwitness=balance formula=R(x1,x2,x3) x=x1 y=x2"));
    assert!(r.stdout.contains("matrix=[[2,1],[1,1]]"));
}

#[test]
fn analyze_reports_original_labels() {
    let f = Files::new();
    // Elements 0 and 2 are unused; the rest behave like NEQ on two values.
    let s = f.put("s.txt", "domain 4\nrelation R 2 2\n1 3\n3 1\n");
    let r = ccsp(&["analyze", path(&s)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(
        r.stdout
            .starts_with("result=FP\nremoved=0,2\nverdict=BALANCED\nmaltsev=\n1 1 1 -> 1\n"),
        "{}",
        r.stdout
    );
}

#[test]
fn timeouts_exit_with_two() {
    let f = Files::new();
    let xor = f.put("xor.txt", XOR3);
    let r = ccsp(&["analyze", "--max-nodes", "1", path(&xor)]);
    assert_eq!(r.code, 2, "{}", r.stdout);
    assert!(
        r.stdout.starts_with(
            "result=TIMEOUT\nverdict=TIMEOUT\nwitness=unresolved a=0 b=0 c=0 d=1\nmaltsev=\n"
        ),
        "{}",
        r.stdout
    );
}

#[test]
fn decide() {
    let f = Files::new();
    let xor = f.put("xor.txt", XOR3);
    let chain = f.put(
        "chain.txt",
        "vars 5\nconstraint XOR3 1 2 3\nconstraint XOR3 3 4 5\nconstraint CONST_1 5\n",
    );
    let r = ccsp(&["decide", path(&xor), path(&chain)]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "SAT\n"));

    let clash = f.put(
        "clash.txt",
        "vars 1\nconstraint CONST_0 1\nconstraint CONST_1 1\n",
    );
    let r = ccsp(&["decide", path(&xor), path(&clash)]);
    assert_eq!((r.code, r.stdout.as_str()), (1, "UNSAT\n"));

    let or = f.put("or.txt", OR);
    let inst = f.put("i.txt", "vars 2\nconstraint OR 1 2\n");
    let r = ccsp(&["decide", path(&or), path(&inst)]);
    assert_eq!(r.code, 65);
    assert!(r.stdout.is_empty());
    assert!(r.stderr.contains("not strongly rectangular"));
}

#[test]
fn count() {
    let f = Files::new();
    let xor = f.put("xor.txt", XOR3);
    let one = f.put("one.txt", "vars 3\nconstraint XOR3 1 2 3\n");
    let clash = f.put(
        "clash.txt",
        "vars 2\nconstraint CONST_0 1\nconstraint CONST_1 1\n",
    );
    let r = ccsp(&["count", path(&xor), path(&one), path(&clash)]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "4\n0\n"));

    let three = f.put("three.txt", "domain 3\n");
    let eq = f.put("eq.txt", "vars 3\nconstraint EQ 1 2\nconstraint EQ 2 3\n");
    let r = ccsp(&["count", path(&three), path(&eq)]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "3\n"));

    let free = f.put("free.txt", "vars 100\n");
    let r = ccsp(&["count", "--adder", "split", path(&xor), path(&free)]);
    assert_eq!(r.stdout, "1267650600228229401496703205376\n");
}

#[test]
fn counts_range_over_the_declared_domain() {
    let f = Files::new();
    let s = f.put("s.txt", "domain 4\nrelation R 2 2\n1 3\n3 1\n");
    let i = f.put("i.txt", "vars 3\nconstraint R 1 2\nconstraint CONST_2 3\n");
    assert_eq!(ccsp(&["count", path(&s), path(&i)]).stdout, "2\n");
    let j = f.put("j.txt", "vars 3\nconstraint R 1 2\n");
    assert_eq!(ccsp(&["count", path(&s), path(&j)]).stdout, "8\n");
    assert_eq!(ccsp(&["oracle", path(&s), path(&j)]).stdout, "8\n");
}

#[test]
fn count_refuses_hard_languages_unless_forced() {
    let f = Files::new();
    let seven = f.put(
        "r.txt",
        &StructureText(&unbalanced7_structure()).to_string(),
    );
    let inst = f.put("i.txt", "vars 3\nconstraint R 1 2 3\n");
    let r = ccsp(&["count", path(&seven), path(&inst)]);
    assert_eq!(r.code, 65);
    assert!(r.stdout.is_empty());
    assert!(r.stderr.contains("--force"));
    let r = ccsp(&[
        "count",
        "--force",
        "--method",
        "brute-force",
        path(&seven),
        path(&inst),
    ]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "5\n"));

    let neq = f.put("neq.txt", &StructureText(&neq3_structure()).to_string());
    let inst = f.put("n.txt", "vars 2\nconstraint NEQ 1 2\n");
    let r = ccsp(&["count", "--force", path(&neq), path(&inst)]);
    assert_eq!(r.code, 65, "{}", r.stdout);
    assert!(r.stderr.contains("Mal'tsev"));
}

#[test]
fn parse_errors_exit_with_64_and_name_the_line() {
    let f = Files::new();
    let bad = f.put("bad.txt", "domain 2\nrelation XOR3 3 1\n0 0 7\n");
    let inst = f.put("i.txt", "vars 1\n");
    let r = ccsp(&["count", path(&bad), path(&inst)]);
    assert_eq!(r.code, 64);
    assert!(r.stdout.is_empty());
    assert!(
        r.stderr
            .contains("bad.txt:3: element 7 is outside the domain"),
        "{}",
        r.stderr
    );

    let xor = f.put("xor.txt", XOR3);
    let good = f.put("good.txt", "vars 3\nconstraint XOR3 1 2 3\n");
    let wrong = f.put("wrong.txt", "vars 3\n# fine\nconstraint XOR3 1 2 4\n");
    let r = ccsp(&["count", path(&xor), path(&good), path(&wrong)]);
    assert_eq!(r.code, 64);
    assert!(r.stdout.is_empty(), "no partial output");
    assert!(r.stderr.contains("wrong.txt:3: variable 4 is outside 1..3"));

    assert_eq!(ccsp(&["count", path(&xor), "/nonexistent/file"]).code, 64);
    assert_eq!(ccsp(&["frobnicate"]).code, 64);
    assert_eq!(
        ccsp(&["count", "--method", "sampling", path(&xor), path(&good)]).code,
        64
    );
    assert_eq!(ccsp(&["--help"]).code, 0);
}

#[test]
fn oracle_and_frame() {
    let f = Files::new();
    let xor = f.put("xor.txt", XOR3);
    let one = f.put(
        "one.txt",
        "vars 3\nconstraint XOR3 1 2 3\nconstraint CONST_1 3\n",
    );
    let r = ccsp(&["oracle", "--list", path(&xor), path(&one)]);
    assert_eq!(r.stdout, "2\n0 1 1\n1 0 1\n");
    let r = ccsp(&["oracle", "--max-bits", "2", path(&xor), path(&one)]);
    assert_eq!(r.code, 65);
    let r = ccsp(&["frame", path(&xor), path(&one)]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("frame n=3 rows=2\n"), "{}", r.stdout);
    assert!(r.stdout.contains("witness a=1 i=1 row="));
}

#[test]
fn selftest_is_deterministic() {
    let a = ccsp(&["selftest", "--seed", "5", "--trials", "40"]);
    let b = ccsp(&["selftest", "--seed", "5", "--trials", "40"]);
    assert_eq!(a.code, 0, "{}", a.stdout);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.ends_with("failed=0\n"));
    let z = ccsp(&["selftest", "--trials", "0"]);
    assert_eq!(z.code, 0);
}

/// Off by one on every instance.
struct WrongCounter;

impl Counter for WrongCounter {
    fn name(&self) -> &'static str {
        "wrong"
    }

    fn count(
        &self,
        s: &RelationalStructure,
        op: Option<&MaltsevOp>,
        instance: &Instance,
        adder: &dyn ConstraintAdder,
    ) -> Result<BigUint, StrategyError> {
        Ok(FrameCounter.count(s, op, instance, adder)? + 1u32)
    }
}

#[test]
fn selftest_reports_an_injected_fault() {
    let opts = SelftestOptions {
        trials: 3,
        fixture: "xor3".to_owned(),
        ..SelftestOptions::default()
    };
    let o = run_selftest(&opts, &WrongCounter, &DirectAdder);
    assert_eq!(o.code, 1);
    assert!(o.stdout.contains("trial 1 fixture=xor3"));
    assert!(o.stdout.contains("MISMATCH: count wrong="));
    // No constraint is needed to expose the fault.
    assert!(
        o.stdout.contains("--- instance\nvars 1\n---\n"),
        "{}",
        o.stdout
    );
    assert!(o.stdout.ends_with("failed=3\n"));
}
