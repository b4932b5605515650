//! Deciding which side of the counting dichotomy a language falls on.
//!
//! A language without a Mal'tsev polymorphism is #P-complete. Otherwise it
//! is in FP exactly when it is strongly balanced, and strong balance is
//! tested on the sixth power of the structure: for every `a, b, c, d` there
//! must be an automorphism fixing `ā = (a,a,a,b,b,b)` and sending
//! `c̄ = (c,c,d,d,d,c)` to `d̄ = (d,d,c,c,c,d)`.
//!
//! What is decided is almost-strong balance, where the balance matrices are
//! taken over single coordinates. It coincides with strong balance unless
//! FP = #P.
//!
//! The language always includes the constant relations `CONST_a`: counting
//! pins variables, so automorphisms must fix every constant tuple. Equality
//! is preserved by any bijection and is skipped.

mod automorphism;
mod reduce;
mod refute;

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use automorphism::{AutomorphismSearch, PowerLanguage, SearchBudget};
pub use reduce::reduce_relation;
pub use refute::{pair_balance, refute_balance, BalanceRefutation, RefuteOptions};

use crate::maltsev::{find_maltsev, MaltsevOp, MaltsevSearch, RectangularityViolation};
use crate::relations::{Elem, ElementMap, Relation, RelationalStructure};

/// Power used by the balance criterion.
pub const PATTERN_POWER: usize = 6;

/// The encoded elements `ā`, `c̄`, `d̄` of `D^6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternTriple {
    pub abar: u64,
    pub cbar: u64,
    pub dbar: u64,
}

pub fn pattern_tuples(a: Elem, b: Elem, c: Elem, d: Elem) -> [[Elem; 6]; 3] {
    [[a, a, a, b, b, b], [c, c, d, d, d, c], [d, d, c, c, c, d]]
}

/// `ā`, `c̄`, `d̄` for `(a, b, c, d)`, encoded base `q` with the first
/// coordinate most significant.
pub fn patterns(q: u32, a: Elem, b: Elem, c: Elem, d: Elem) -> PatternTriple {
    let enc = |t: &[Elem; 6]| t.iter().fold(0u64, |acc, &v| acc * q as u64 + v as u64);
    let [abar, cbar, dbar] = pattern_tuples(a, b, c, d);
    PatternTriple {
        abar: enc(&abar),
        cbar: enc(&cbar),
        dbar: enc(&dbar),
    }
}

/// Declared relations plus every `CONST_a`, each replaced by relations
/// with the same power automorphisms but fewer tuples, deduplicated.
pub fn language_relations(s: &RelationalStructure) -> Vec<Relation> {
    let mut out: Vec<Relation> = Vec::new();
    let all = s
        .declared()
        .map(|(_, r)| r.clone())
        .chain((0..s.q()).map(Relation::constant));
    for r in all {
        for part in reduce_relation(s.q(), &r) {
            if !out.contains(&part) {
                out.push(part);
            }
        }
    }
    out
}

/// Searches for an automorphism of `S^k` (constants included) meeting the
/// required point maps.
pub fn find_automorphism(
    s: &RelationalStructure,
    k: usize,
    fixes: &[(u64, u64)],
    budget: SearchBudget,
) -> AutomorphismSearch {
    let rels = language_relations(s);
    PowerLanguage::new(s.q(), k, rels.iter().collect()).find(fixes, budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VerdictKind {
    NotStronglyRectangular,
    NotBalanced,
    Balanced,
    Timeout,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::NotStronglyRectangular => "NOT_STRONGLY_RECTANGULAR",
            VerdictKind::NotBalanced => "NOT_BALANCED",
            VerdictKind::Balanced => "BALANCED",
            VerdictKind::Timeout => "TIMEOUT",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Rectangularity(RectangularityViolation),
    /// `(a, b, c, d)` for which no automorphism exists.
    Quadruple([Elem; 4]),
    /// First quadruple whose search ran out of budget.
    Unresolved([Elem; 4]),
    Balance(BalanceRefutation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DichotomyVerdict {
    pub kind: VerdictKind,
    pub witness: Option<Witness>,
    pub maltsev: Option<MaltsevOp>,
}

impl DichotomyVerdict {
    /// Text form with elements translated back through `map`:
    /// `verdict=…`, an optional `witness=…` line, then `maltsev=` followed
    /// by one `a b c -> v` line per table entry.
    pub fn render(&self, map: &ElementMap) -> String {
        self.render_with(Some(map))
    }

    fn render_with(&self, map: Option<&ElementMap>) -> String {
        let o = |e: Elem| map.map_or(e, |m| m.original(e));
        let tuple = |t: &[Elem]| {
            let v: Vec<String> = t.iter().map(|&e| o(e).to_string()).collect();
            format!("({})", v.join(","))
        };
        let mut out = format!("verdict={}\n", self.kind);
        match &self.witness {
            None => {}
            Some(Witness::Rectangularity(v)) => {
                let left: Vec<String> = v.left.iter().map(|p| (p + 1).to_string()).collect();
                out += &format!(
                    "witness=rectangularity relation={} left={{{}}} a={} b={} c={} d={}\n",
                    v.relation,
                    left.join(","),
                    tuple(&v.left_a),
                    tuple(&v.left_b),
                    tuple(&v.right_c),
                    tuple(&v.right_d)
                );
            }
            Some(Witness::Quadruple([a, b, c, d])) | Some(Witness::Unresolved([a, b, c, d])) => {
                let label = if matches!(self.witness, Some(Witness::Quadruple(_))) {
                    "no-automorphism"
                } else {
                    "unresolved"
                };
                out += &format!(
                    "witness={label} a={} b={} c={} d={}\n",
                    o(*a),
                    o(*b),
                    o(*c),
                    o(*d)
                );
            }
            Some(Witness::Balance(r)) => {
                let rows: Vec<String> = r.matrix.rows().iter().map(|t| tuple(t)).collect();
                let cols: Vec<String> = r.matrix.cols().iter().map(|t| tuple(t)).collect();
                out += &format!(
                    "witness=balance formula={} x=x{} y=x{} rows={} cols={} matrix={}\n",
                    r.formula,
                    r.x + 1,
                    r.y + 1,
                    rows.join(""),
                    cols.join(""),
                    r.matrix
                );
            }
        }
        if let Some(op) = &self.maltsev {
            out += "maltsev=\n";
            let q = op.q();
            for a in 0..q {
                for b in 0..q {
                    for c in 0..q {
                        out += &format!("{} {} {} -> {}\n", o(a), o(b), o(c), o(op.eval(a, b, c)));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for DichotomyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(None))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecideOptions {
    /// Node limit for each automorphism search.
    pub max_nodes: Option<u64>,
    /// Wall-clock limit for the whole sweep.
    pub time_limit: Option<Duration>,
    pub refute: RefuteOptions,
    pub parallel: bool,
}

impl Default for DecideOptions {
    fn default() -> Self {
        Self {
            max_nodes: Some(2_000_000),
            time_limit: None,
            refute: RefuteOptions::default(),
            parallel: false,
        }
    }
}

fn quadruples(q: u32) -> Vec<[Elem; 4]> {
    let mut out = Vec::new();
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    // c = d makes c̄ = d̄ and the identity works.
                    if c != d {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Runs the automorphism criterion for one quadruple.
pub fn check_quadruple(
    lang: &PowerLanguage<'_>,
    q: u32,
    quad: [Elem; 4],
    budget: SearchBudget,
) -> AutomorphismSearch {
    let [a, b, c, d] = quad;
    let p = patterns(q, a, b, c, d);
    lang.find(&[(p.abar, p.abar), (p.cbar, p.dbar)], budget)
}

/// Strong rectangularity, then a cheap balance refuter, then the complete
/// automorphism sweep over all quadruples in lexicographic order.
///
/// With a node budget and no time limit the result is deterministic, also
/// when `parallel` is set: a quadruple without an automorphism takes
/// precedence over an exhausted search, and the least such quadruple wins.
pub fn decide_strong_balance(s: &RelationalStructure, opts: &DecideOptions) -> DichotomyVerdict {
    let op = match find_maltsev(s) {
        MaltsevSearch::Found(op) => op,
        MaltsevSearch::None(violation) => {
            return DichotomyVerdict {
                kind: VerdictKind::NotStronglyRectangular,
                witness: violation.map(Witness::Rectangularity),
                maltsev: None,
            }
        }
    };
    if let Some(r) = refute_balance(s, &op, opts.refute) {
        return DichotomyVerdict {
            kind: VerdictKind::NotBalanced,
            witness: Some(Witness::Balance(r)),
            maltsev: Some(op),
        };
    }
    let (kind, witness) = sweep(s, opts);
    DichotomyVerdict {
        kind,
        witness,
        maltsev: Some(op),
    }
}

/// The automorphism sweep alone, without the rectangularity check or the
/// refuter.
pub fn sweep(s: &RelationalStructure, opts: &DecideOptions) -> (VerdictKind, Option<Witness>) {
    let rels = language_relations(s);
    let lang = PowerLanguage::new(s.q(), PATTERN_POWER, rels.iter().collect());
    let budget = SearchBudget {
        max_nodes: opts.max_nodes,
        deadline: opts.time_limit.map(|t| Instant::now() + t),
    };
    let quads = quadruples(s.q());
    let results: Vec<([Elem; 4], AutomorphismSearch)> = if opts.parallel {
        quads
            .par_iter()
            .map(|&quad| (quad, check_quadruple(&lang, s.q(), quad, budget)))
            .collect()
    } else {
        let mut out = Vec::new();
        for &quad in &quads {
            let r = check_quadruple(&lang, s.q(), quad, budget);
            let stop = r == AutomorphismSearch::None;
            out.push((quad, r));
            if stop {
                break;
            }
        }
        out
    };
    if let Some((quad, _)) = results.iter().find(|(_, r)| *r == AutomorphismSearch::None) {
        return (VerdictKind::NotBalanced, Some(Witness::Quadruple(*quad)));
    }
    if let Some((quad, _)) = results
        .iter()
        .find(|(_, r)| *r == AutomorphismSearch::Exhausted)
    {
        return (VerdictKind::Timeout, Some(Witness::Unresolved(*quad)));
    }
    (VerdictKind::Balanced, None)
}
