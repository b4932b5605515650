use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::{closure_project, fix_prefix, initial_frame, shrink_to_small, Frame};
use crate::maltsev::MaltsevOp;
use crate::relations::{Elem, Relation, RelationalStructure, Tuple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("constraint {index} uses {name} with {got} variables, but its arity is {arity}")]
    ArityMismatch {
        index: usize,
        name: String,
        got: usize,
        arity: usize,
    },
    #[error("constraint {index} mentions variable {var}, but there are only {n}")]
    VariableOutOfRange { index: usize, var: usize, n: usize },
    #[error("an instance needs at least one variable")]
    NoVariables,
}

/// A constraint `NAME(x_{v1}, …, x_{vr})` with 0-based variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub relation: String,
    pub scope: Vec<usize>,
}

impl Constraint {
    pub fn new(relation: impl Into<String>, scope: Vec<usize>) -> Self {
        Self {
            relation: relation.into(),
            scope,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self.scope.iter().map(|v| format!("x{}", v + 1)).collect();
        write!(f, "{}({})", self.relation, vars.join(","))
    }
}

/// A conjunction of constraints over variables `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Instance {
    pub n: usize,
    pub constraints: Vec<Constraint>,
}

/// Renders as `R(x1,x2) & S(x2,x3)` with 1-based variables; `true` when
/// there are no constraints.
impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.constraints.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.constraints.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" & "))
    }
}

/// A constraint with its relation looked up and repeated variables
/// collapsed, so the scope lists distinct variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedConstraint {
    pub relation: Relation,
    pub scope: Vec<usize>,
}

impl ResolvedConstraint {
    /// Restricts `relation` to tuples agreeing wherever `scope` repeats a
    /// variable, keeping the first occurrence of each variable.
    pub fn collapse(relation: &Relation, scope: &[usize]) -> Self {
        let mut firsts: Vec<usize> = Vec::new();
        let mut distinct: Vec<usize> = Vec::new();
        for (p, &v) in scope.iter().enumerate() {
            if !distinct.contains(&v) {
                distinct.push(v);
                firsts.push(p);
            }
        }
        if distinct.len() == scope.len() {
            return Self {
                relation: relation.clone(),
                scope: scope.to_vec(),
            };
        }
        let first_of = |p: usize| firsts[distinct.iter().position(|&v| v == scope[p]).unwrap()];
        let consistent = relation
            .iter()
            .filter(|t| (0..scope.len()).all(|p| t[p] == t[first_of(p)]));
        let projected = Relation::new(
            distinct.len(),
            consistent.map(|t| firsts.iter().map(|&p| t[p]).collect::<Tuple>()),
        )
        .expect("projection keeps arity");
        Self {
            relation: projected,
            scope: distinct,
        }
    }

    pub fn satisfied_by(&self, t: &[Elem]) -> bool {
        let image: Tuple = self.scope.iter().map(|&v| t[v]).collect();
        self.relation.contains(&image)
    }
}

impl Instance {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            constraints: Vec::new(),
        }
    }

    pub fn with(mut self, relation: &str, scope: &[usize]) -> Self {
        self.constraints
            .push(Constraint::new(relation, scope.to_vec()));
        self
    }

    /// Relation names used, in first-use order.
    pub fn relation_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.constraints {
            if !out.contains(&c.relation.as_str()) {
                out.push(&c.relation);
            }
        }
        out
    }

    /// Variables occurring in at least one constraint.
    pub fn used_variables(&self) -> BTreeSet<usize> {
        self.constraints
            .iter()
            .flat_map(|c| c.scope.iter().copied())
            .collect()
    }

    /// Looks up relations, checks arities and variable ranges, and collapses
    /// repeated variables.
    pub fn resolve(
        &self,
        s: &RelationalStructure,
    ) -> Result<Vec<ResolvedConstraint>, InstanceError> {
        if self.n == 0 {
            return Err(InstanceError::NoVariables);
        }
        let mut out = Vec::with_capacity(self.constraints.len());
        for (index, c) in self.constraints.iter().enumerate() {
            let rel = s
                .relation(&c.relation)
                .ok_or_else(|| InstanceError::UnknownRelation(c.relation.clone()))?;
            if rel.arity() != c.scope.len() {
                return Err(InstanceError::ArityMismatch {
                    index,
                    name: c.relation.clone(),
                    got: c.scope.len(),
                    arity: rel.arity(),
                });
            }
            if let Some(&var) = c.scope.iter().find(|&&v| v >= self.n) {
                return Err(InstanceError::VariableOutOfRange {
                    index,
                    var,
                    n: self.n,
                });
            }
            out.push(ResolvedConstraint::collapse(&rel, &c.scope));
        }
        Ok(out)
    }

    /// Restricts the instance to its used variables, renumbered in order.
    /// Returns the reduced instance and the number of dropped variables.
    pub fn without_free_variables(&self) -> (Instance, usize) {
        let used: Vec<usize> = self.used_variables().into_iter().collect();
        let rename = |v: usize| used.binary_search(&v).unwrap();
        let reduced = Instance {
            n: used.len(),
            constraints: self
                .constraints
                .iter()
                .map(|c| {
                    Constraint::new(
                        c.relation.clone(),
                        c.scope.iter().map(|&v| rename(v)).collect(),
                    )
                })
                .collect(),
        };
        (reduced, self.n - used.len())
    }
}

/// Adds `H(scope)` to the relation framed by `f`, returning a small frame
/// for the conjunction.
pub fn add_constraint(f: &Frame, op: &MaltsevOp, c: &ResolvedConstraint) -> Frame {
    let n = f.n();
    if f.is_empty() {
        return Frame::empty(n, f.q());
    }
    let scope = &c.scope;
    let mut assigned: Vec<(Elem, usize, Tuple)> = Vec::new();
    for i in 0..n {
        let mut j: Vec<usize> = scope.clone();
        if !j.contains(&i) {
            j.push(i);
        }
        let mut u: Vec<Tuple> = closure_project(f.rows(), op, &j)
            .into_iter()
            .filter(|t| c.satisfied_by(t))
            .collect();
        if u.is_empty() {
            return Frame::empty(n, f.q());
        }
        u.sort();
        let mut remaining: BTreeSet<Elem> = u.iter().map(|t| t[i]).collect();
        while let Some(t) = u.iter().find(|t| remaining.contains(&t[i])) {
            for (a, w) in class_witnesses(f, op, c, t, i) {
                if remaining.remove(&a) {
                    assigned.push((a, i, w));
                }
            }
            // Only reachable when the operation does not preserve the language.
            if remaining.remove(&t[i]) {
                assigned.push((t[i], i, t.clone()));
            }
        }
    }
    shrink_to_small(&Frame::from_witness_tuples(n, f.q(), assigned), op)
}

/// For a solution `t` of the conjunction, witnesses at position `i` with
/// prefix `t[..i]` for every value in the class of `t[i]`.
fn class_witnesses(
    f: &Frame,
    op: &MaltsevOp,
    c: &ResolvedConstraint,
    t: &Tuple,
    i: usize,
) -> Vec<(Elem, Tuple)> {
    let prefix = &t[..i];
    let star = fix_prefix(f, op, prefix);
    // The constraint restricted to the fixed prefix, over the later variables.
    let later: Vec<(usize, usize)> = c
        .scope
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= i)
        .map(|(p, &v)| (p, v - i))
        .collect();
    let allowed: BTreeSet<Tuple> = c
        .relation
        .iter()
        .filter(|h| {
            c.scope
                .iter()
                .enumerate()
                .all(|(p, &v)| v >= i || h[p] == t[v])
        })
        .map(|h| later.iter().map(|&(p, _)| h[p]).collect())
        .collect();
    let mut k: Vec<usize> = later.iter().map(|&(_, v)| v).collect();
    if !k.contains(&0) {
        k.push(0);
    }
    let mut out: Vec<(Elem, Tuple)> = Vec::new();
    let mut rows = closure_project(star.rows(), op, &k);
    rows.sort();
    for row in rows {
        let image: Tuple = later.iter().map(|&(_, v)| row[v]).collect();
        if allowed.contains(&image) && !out.iter().any(|(a, _)| *a == row[0]) {
            let mut w = prefix.to_vec();
            w.extend_from_slice(&row);
            out.push((row[0], w));
        }
    }
    out
}

/// Adds `H(scope)` through its prefix projections `pr_[k] H`, `k = 1..r`.
pub fn add_constraint_split(f: &Frame, op: &MaltsevOp, c: &ResolvedConstraint) -> Frame {
    let r = c.scope.len();
    if r <= 1 {
        return add_constraint(f, op, c);
    }
    let mut out = f.clone();
    for k in 1..=r {
        let idx: Vec<usize> = (0..k).collect();
        let step = ResolvedConstraint {
            relation: c.relation.project(&idx).expect("prefix indices are valid"),
            scope: c.scope[..k].to_vec(),
        };
        out = add_constraint(&out, op, &step);
        if out.is_empty() {
            break;
        }
    }
    out
}

/// Builds a frame for the solution set of `instance` with [`add_constraint`].
pub fn build_frame(
    s: &RelationalStructure,
    op: &MaltsevOp,
    instance: &Instance,
) -> Result<Frame, InstanceError> {
    build_frame_with(s, op, instance, add_constraint)
}

/// Builds a frame adding constraints in order with the given adder.
pub fn build_frame_with(
    s: &RelationalStructure,
    op: &MaltsevOp,
    instance: &Instance,
    adder: impl Fn(&Frame, &MaltsevOp, &ResolvedConstraint) -> Frame,
) -> Result<Frame, InstanceError> {
    let constraints = instance.resolve(s)?;
    let mut f = initial_frame(instance.n, s.q());
    for c in &constraints {
        f = adder(&f, op, c);
        if f.is_empty() {
            break;
        }
    }
    Ok(f)
}
