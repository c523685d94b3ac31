//! Call graph edges shared by all analyses.
//!
//! A call site is identified by its enclosing scope and statement index, so
//! edge sets produced by different analyses over the same program are
//! directly comparable.

use std::collections::BTreeSet;

use crate::names::{ClassId, MethodId, Names};
use crate::vars::{ScopeId, VarTable};

/// Position of a statement: enclosing scope plus index within that body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteKey {
    pub scope: ScopeId,
    pub index: u32,
}

impl SiteKey {
    pub fn render(&self, vars: &VarTable, names: &Names) -> String {
        format!("{}[{}]", vars.render_scope(self.scope, names), self.index)
    }
}

/// A resolved call target: the defining class and method name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target {
    pub class: ClassId,
    pub method: MethodId,
}

impl Target {
    pub fn render(&self, names: &Names) -> String {
        format!("{}.{}", names.class_name(self.class), names.method_name(self.method))
    }
}

/// A call that could not be dispatched: some class reaching the receiver has
/// no definition of the method. Reported, never fatal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ResolutionFailure {
    pub site: SiteKey,
    pub class: ClassId,
    pub method: MethodId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    pub edges: BTreeSet<(SiteKey, Target)>,
    /// Fingerprint of the analyzed program, used to reject cross-program
    /// comparisons.
    pub fingerprint: u64,
}

impl CallGraph {
    pub fn new(fingerprint: u64) -> CallGraph {
        CallGraph { edges: BTreeSet::new(), fingerprint }
    }

    pub fn insert(&mut self, site: SiteKey, target: Target) {
        self.edges.insert((site, target));
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, site: SiteKey, target: Target) -> bool {
        self.edges.contains(&(site, target))
    }

    pub fn targets_at(&self, site: SiteKey) -> BTreeSet<Target> {
        self.edges.iter().filter(|(s, _)| *s == site).map(|(_, t)| *t).collect()
    }

    pub fn is_subset_of(&self, other: &CallGraph) -> bool {
        self.edges.is_subset(&other.edges)
    }
}
