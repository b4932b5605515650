use std::borrow::Cow;
use std::collections::BTreeSet;

use indexmap::IndexMap;
use thiserror::Error;

use super::{Elem, Relation, RelationError};

/// Reserved name of the built-in binary equality relation.
pub const EQ_NAME: &str = "EQ";

const CONST_PREFIX: &str = "CONST_";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("domain size must be at least 2, got {0}")]
    DomainTooSmall(u32),
    #[error("relation name {0:?} is reserved")]
    ReservedName(String),
    #[error("relation {0:?} defined twice")]
    DuplicateName(String),
    #[error("relation {0:?} is empty")]
    EmptyRelation(String),
    #[error("relation {name:?}: {source}")]
    BadRelation {
        name: String,
        #[source]
        source: RelationError,
    },
    #[error("only {0} domain element(s) remain after removing unused elements")]
    DegenerateAfterNormalization(u32),
}

/// Correspondence between the working encoding `0..q` and the element labels
/// of the original input, recorded when unused elements are removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementMap {
    original_q: u32,
    originals: Vec<Elem>,
}

impl ElementMap {
    pub fn identity(q: u32) -> Self {
        Self {
            original_q: q,
            originals: (0..q).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.originals.len() as u32 == self.original_q
    }

    pub fn original_q(&self) -> u32 {
        self.original_q
    }

    /// Original label of working element `e`.
    pub fn original(&self, e: Elem) -> Elem {
        self.originals[e as usize]
    }

    /// Working element for an original label, if it was kept.
    pub fn working(&self, original: Elem) -> Option<Elem> {
        self.originals
            .binary_search(&original)
            .ok()
            .map(|i| i as Elem)
    }

    /// Original labels that were removed.
    pub fn removed(&self) -> Vec<Elem> {
        (0..self.original_q)
            .filter(|e| self.originals.binary_search(e).is_err())
            .collect()
    }
}

/// A domain `0..q` with named relations. Equality (`EQ`) and the constants
/// `CONST_<a>` are built in and resolved on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationalStructure {
    q: u32,
    relations: IndexMap<String, Relation>,
    element_map: ElementMap,
}

impl RelationalStructure {
    pub fn new(q: u32) -> Result<Self, StructureError> {
        if q < 2 {
            return Err(StructureError::DomainTooSmall(q));
        }
        Ok(Self {
            q,
            relations: IndexMap::new(),
            element_map: ElementMap::identity(q),
        })
    }

    /// Adds a named relation, validating it against the domain.
    pub fn add_relation(&mut self, name: &str, relation: Relation) -> Result<(), StructureError> {
        if is_reserved(name) {
            return Err(StructureError::ReservedName(name.to_owned()));
        }
        if self.relations.contains_key(name) {
            return Err(StructureError::DuplicateName(name.to_owned()));
        }
        if relation.is_empty() {
            return Err(StructureError::EmptyRelation(name.to_owned()));
        }
        let checked =
            Relation::over_domain(self.q, relation.arity(), relation.tuples().iter().cloned())
                .map_err(|source| StructureError::BadRelation {
                    name: name.to_owned(),
                    source,
                })?;
        self.relations.insert(name.to_owned(), checked);
        Ok(())
    }

    pub fn with_relation(mut self, name: &str, relation: Relation) -> Result<Self, StructureError> {
        self.add_relation(name, relation)?;
        Ok(self)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn element_map(&self) -> &ElementMap {
        &self.element_map
    }

    /// Declared relations in declaration order (built-ins excluded).
    pub fn declared(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn declared_count(&self) -> usize {
        self.relations.len()
    }

    /// Resolves a relation name, including `EQ` and `CONST_<a>`.
    pub fn relation(&self, name: &str) -> Option<Cow<'_, Relation>> {
        if name == EQ_NAME {
            return Some(Cow::Owned(Relation::equality(self.q)));
        }
        if let Some(a) = constant_value(name) {
            return (a < self.q).then(|| Cow::Owned(Relation::constant(a)));
        }
        self.relations.get(name).map(Cow::Borrowed)
    }

    /// `‖Γ‖` over the declared relations plus equality.
    pub fn size(&self) -> usize {
        2 * self.q as usize + self.relations.values().map(Relation::size).sum::<usize>()
    }

    /// Removes domain elements that occur in no declared relation and
    /// re-encodes the relations. A structure without declared relations is
    /// left unchanged, as is one where every element is used.
    pub fn normalized(self) -> Result<Self, StructureError> {
        if self.relations.is_empty() {
            return Ok(self);
        }
        let used: BTreeSet<Elem> = self.relations.values().flat_map(|r| r.elements()).collect();
        if used.len() as u32 == self.q {
            return Ok(self);
        }
        let new_q = used.len() as u32;
        if new_q < 2 {
            return Err(StructureError::DegenerateAfterNormalization(new_q));
        }
        let originals: Vec<Elem> = used.iter().map(|&e| self.element_map.original(e)).collect();
        let position = |e: Elem| used.iter().position(|&u| u == e).unwrap() as Elem;
        let mut out = Self::new(new_q)?;
        for (name, rel) in &self.relations {
            let renamed = Relation::new(
                rel.arity(),
                rel.iter().map(|t| t.iter().map(|&e| position(e)).collect()),
            )
            .expect("arity preserved");
            out.add_relation(name, renamed)?;
        }
        out.element_map = ElementMap {
            original_q: self.element_map.original_q,
            originals,
        };
        Ok(out)
    }
}

/// `Some(a)` if `name` is `CONST_<a>`.
pub fn constant_value(name: &str) -> Option<Elem> {
    name.strip_prefix(CONST_PREFIX)?.parse().ok()
}

pub(crate) fn is_reserved(name: &str) -> bool {
    name == EQ_NAME || name.starts_with(CONST_PREFIX)
}
