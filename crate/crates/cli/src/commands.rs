use std::time::Duration;

use ccsp_core::counting::CountError;
use ccsp_core::dichotomy::{
    decide_strong_balance, DecideOptions, DichotomyVerdict, RefuteOptions, VerdictKind,
};
use ccsp_core::frames::{build_frame_with, Instance};
use ccsp_core::maltsev::{find_maltsev, MaltsevSearch};
use ccsp_core::oracle::{enumerate_solutions, OracleError};
use ccsp_core::strategy::{adders, counters, StrategyError};

use crate::exit;
use crate::parse::StructureFile;
use crate::selftest::{self, SelftestOptions};
use crate::AnalysisArgs;

/// What a command prints and its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub fn ok(stdout: impl Into<String>) -> Self {
        Self::with_code(exit::SUCCESS, stdout)
    }

    pub fn with_code(code: i32, stdout: impl Into<String>) -> Self {
        Self {
            code,
            stdout: stdout.into(),
            stderr: String::new(),
        }
    }

    pub fn error(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            stdout: String::new(),
            stderr: format!("error: {}\n", message.into()),
        }
    }
}

pub fn decide_options(a: &AnalysisArgs, parallel: bool) -> DecideOptions {
    DecideOptions {
        max_nodes: Some(a.max_nodes),
        time_limit: a.time_limit.map(Duration::from_secs_f64),
        refute: RefuteOptions {
            formulas: a.formulas,
            seed: a.seed,
            ..RefuteOptions::default()
        },
        parallel,
    }
}

/// The counting verdict for a dichotomy verdict.
pub fn complexity(kind: VerdictKind) -> (&'static str, i32) {
    match kind {
        VerdictKind::Balanced => ("FP", exit::SUCCESS),
        VerdictKind::NotBalanced | VerdictKind::NotStronglyRectangular => {
            ("SHARP_P_COMPLETE", exit::NEGATIVE)
        }
        VerdictKind::Timeout => ("TIMEOUT", exit::TIMEOUT),
    }
}

fn classify(s: &StructureFile, a: &AnalysisArgs, parallel: bool) -> DichotomyVerdict {
    decide_strong_balance(&s.normalized, &decide_options(a, parallel))
}

/// `result=…`, the removed elements if any, then the dichotomy verdict.
pub fn analyze(s: &StructureFile, a: &AnalysisArgs, parallel: bool) -> Outcome {
    let verdict = classify(s, a, parallel);
    let (label, code) = complexity(verdict.kind);
    let mut out = format!("result={label}\n");
    let removed = s.element_map().removed();
    if !removed.is_empty() && s.normalized.q() < s.full.q() {
        let labels: Vec<String> = removed.iter().map(ToString::to_string).collect();
        out += &format!("removed={}\n", labels.join(","));
    }
    out += &verdict.render(s.element_map());
    Outcome::with_code(code, out)
}

pub fn decide(s: &StructureFile, inst: &Instance) -> Outcome {
    let op = match find_maltsev(&s.full) {
        MaltsevSearch::Found(op) => op,
        MaltsevSearch::None(v) => return refuse_rectangularity(v.map(|v| v.relation)),
    };
    match build_frame_with(&s.full, &op, inst, ccsp_core::frames::add_constraint) {
        Ok(f) if f.is_empty() => Outcome::with_code(exit::NEGATIVE, "UNSAT\n"),
        Ok(_) => Outcome::ok("SAT\n"),
        Err(e) => Outcome::error(exit::PARSE_ERROR, e.to_string()),
    }
}

fn refuse_rectangularity(relation: Option<String>) -> Outcome {
    let mut msg =
        "the structure is not strongly rectangular, so it has no Mal'tsev polymorphism".to_owned();
    if let Some(r) = relation {
        msg += &format!("; relation {r} is not rectangular (`ccsp analyze` prints a witness)");
    }
    Outcome::error(exit::REFUSED, msg)
}

#[derive(Debug, Clone)]
pub struct CountOptions {
    pub force: bool,
    pub method: String,
    pub adder: String,
    pub analysis: AnalysisArgs,
    pub parallel: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            force: false,
            method: "frame".to_owned(),
            adder: "direct".to_owned(),
            analysis: AnalysisArgs::default(),
            parallel: false,
        }
    }
}

fn strategy_exit(e: &StrategyError) -> i32 {
    match e {
        StrategyError::Unknown { .. } | StrategyError::Count(CountError::Instance(_)) => {
            exit::PARSE_ERROR
        }
        StrategyError::Oracle(OracleError::Instance(_)) => exit::PARSE_ERROR,
        _ => exit::REFUSED,
    }
}

/// One exact count per instance, in order.
pub fn count(s: &StructureFile, instances: &[Instance], opts: &CountOptions) -> Outcome {
    let counters = counters();
    let adders = adders();
    let (counter, adder) = match (counters.get(&opts.method), adders.get(&opts.adder)) {
        (Ok(c), Ok(a)) => (c, a),
        (Err(e), _) | (_, Err(e)) => return Outcome::error(strategy_exit(&e), e.to_string()),
    };
    if !opts.force {
        let verdict = classify(s, &opts.analysis, opts.parallel);
        if verdict.kind != VerdictKind::Balanced {
            let (label, _) = complexity(verdict.kind);
            return Outcome::error(
                exit::REFUSED,
                format!("refusing to count: the analysis verdict is {label} ({}); pass --force to count anyway", verdict.kind),
            );
        }
    }
    let op = find_maltsev(&s.full).into_op();
    let mut out = String::new();
    for inst in instances {
        match counter.count(&s.full, op.as_ref(), inst, adder) {
            Ok(n) => out += &format!("{n}\n"),
            Err(e) => return Outcome::error(strategy_exit(&e), e.to_string()),
        }
    }
    Outcome::ok(out)
}

/// The count by enumeration, optionally followed by every solution.
pub fn oracle(s: &StructureFile, inst: &Instance, max_bits: f64, list: bool) -> Outcome {
    match enumerate_solutions(&s.full, inst, max_bits) {
        Ok(r) => {
            let mut out = format!("{}\n", r.len());
            if list {
                for t in r.iter() {
                    let vals: Vec<String> = t.iter().map(ToString::to_string).collect();
                    out += &vals.join(" ");
                    out.push('\n');
                }
            }
            Outcome::ok(out)
        }
        Err(e @ OracleError::CapExceeded { .. }) => Outcome::error(exit::REFUSED, e.to_string()),
        Err(e) => Outcome::error(exit::PARSE_ERROR, e.to_string()),
    }
}

pub fn frame(s: &StructureFile, inst: &Instance, adder: &str) -> Outcome {
    let adders = adders();
    let adder = match adders.get(adder) {
        Ok(a) => a,
        Err(e) => return Outcome::error(exit::PARSE_ERROR, e.to_string()),
    };
    let op = match find_maltsev(&s.full) {
        MaltsevSearch::Found(op) => op,
        MaltsevSearch::None(v) => return refuse_rectangularity(v.map(|v| v.relation)),
    };
    match build_frame_with(&s.full, &op, inst, adder.adder()) {
        Ok(f) => Outcome::ok(f.dump()),
        Err(e) => Outcome::error(exit::PARSE_ERROR, e.to_string()),
    }
}

pub fn selftest(opts: &SelftestOptions, method: &str, adder: &str) -> Outcome {
    let counters = counters();
    let adders = adders();
    match (counters.get(method), adders.get(adder)) {
        (Ok(c), Ok(a)) => selftest::run(opts, c, a),
        (Err(e), _) | (_, Err(e)) => Outcome::error(exit::PARSE_ERROR, e.to_string()),
    }
}
