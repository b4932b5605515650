//! Interchangeable counting methods and constraint adders, registered by
//! name so the command line can pick one at runtime.

use num_bigint::BigUint;
use thiserror::Error;

use crate::counting::{count_with, AdderFn, CountError};
use crate::frames::{add_constraint, add_constraint_split, Frame, Instance, ResolvedConstraint};
use crate::maltsev::MaltsevOp;
use crate::oracle::{oracle_count, OracleError, DEFAULT_MAX_BITS};
use crate::relations::RelationalStructure;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("the {0} method needs a Mal'tsev polymorphism")]
    NeedsMaltsev(&'static str),
    #[error("unknown {kind} `{name}`; available: {available}")]
    Unknown {
        kind: &'static str,
        name: String,
        available: String,
    },
}

pub trait ConstraintAdder: Send + Sync {
    fn name(&self) -> &'static str;
    fn adder(&self) -> AdderFn;

    fn add(&self, f: &Frame, op: &MaltsevOp, c: &ResolvedConstraint) -> Frame {
        (self.adder())(f, op, c)
    }
}

pub trait Counter: Send + Sync {
    fn name(&self) -> &'static str;
    fn count(
        &self,
        s: &RelationalStructure,
        op: Option<&MaltsevOp>,
        instance: &Instance,
        adder: &dyn ConstraintAdder,
    ) -> Result<BigUint, StrategyError>;
}

/// Whole-relation closure per constraint.
pub struct DirectAdder;

/// Adds the prefix projections of each constraint in turn, keeping
/// intermediate closures small for large relations.
pub struct SplitAdder;

impl ConstraintAdder for DirectAdder {
    fn name(&self) -> &'static str {
        "direct"
    }
    fn adder(&self) -> AdderFn {
        add_constraint
    }
}

impl ConstraintAdder for SplitAdder {
    fn name(&self) -> &'static str {
        "split"
    }
    fn adder(&self) -> AdderFn {
        add_constraint_split
    }
}

/// Frame construction followed by rank-one reconstruction.
pub struct FrameCounter;

/// Exhaustive enumeration, capped at `2^max_bits` assignments.
pub struct BruteForceCounter {
    pub max_bits: f64,
}

impl Default for BruteForceCounter {
    fn default() -> Self {
        Self {
            max_bits: DEFAULT_MAX_BITS,
        }
    }
}

impl Counter for FrameCounter {
    fn name(&self) -> &'static str {
        "frame"
    }
    fn count(
        &self,
        s: &RelationalStructure,
        op: Option<&MaltsevOp>,
        instance: &Instance,
        adder: &dyn ConstraintAdder,
    ) -> Result<BigUint, StrategyError> {
        let op = op.ok_or(StrategyError::NeedsMaltsev(self.name()))?;
        Ok(count_with(s, op, instance, adder.adder())?)
    }
}

impl Counter for BruteForceCounter {
    fn name(&self) -> &'static str {
        "brute-force"
    }
    fn count(
        &self,
        s: &RelationalStructure,
        _op: Option<&MaltsevOp>,
        instance: &Instance,
        _adder: &dyn ConstraintAdder,
    ) -> Result<BigUint, StrategyError> {
        Ok(oracle_count(s, instance, self.max_bits)?)
    }
}

/// Named implementations of one trait, in registration order.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(&'static str, Box<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Adds or replaces the entry called `name`.
    pub fn register(&mut self, name: &'static str, item: Box<T>) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = item,
            None => self.entries.push((name, item)),
        }
    }

    pub fn get(&self, name: &str) -> Result<&T, StrategyError> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, item)| item.as_ref())
            .ok_or_else(|| StrategyError::Unknown {
                kind: self.kind,
                name: name.to_owned(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }
}

pub fn counters() -> Registry<dyn Counter> {
    let mut r: Registry<dyn Counter> = Registry::new("counting method");
    for c in [
        Box::new(FrameCounter) as Box<dyn Counter>,
        Box::new(BruteForceCounter::default()),
    ] {
        r.register(c.name(), c);
    }
    r
}

pub fn adders() -> Registry<dyn ConstraintAdder> {
    let mut r: Registry<dyn ConstraintAdder> = Registry::new("constraint adder");
    for a in [
        Box::new(DirectAdder) as Box<dyn ConstraintAdder>,
        Box::new(SplitAdder),
    ] {
        r.register(a.name(), a);
    }
    r
}
