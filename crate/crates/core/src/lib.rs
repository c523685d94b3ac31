//! A call-graph construction workbench for a small class-based language.
//!
//! The pipeline: parse a `.tfl` program, resolve it into a [`ProgramCtx`)
//! (class table, canonical variables, statement index), then run any of five
//! whole-program analyses over it:
//!
//! * [`tfa`] — relational type flow analysis with an on-the-fly call graph;
//! * [`pta`] — subset-based points-to analysis over allocation sites;
//! * [`classic`] — CHA, RTA and VTA reference analyses;
//! * [`minimize`] — alias-pair and bisimulation storage reduction;
//! * [`diff`] — differential checks between the analyses plus statistics.
//!
//! [`generator`] produces seeded random programs for differential testing,
//! and [`dump`] renders results as sorted text, DOT or JSON.

pub mod ast;
pub mod callgraph;
pub mod classic;
pub mod diff;
pub mod dump;
pub mod generator;
pub mod index;
pub mod lexer;
pub mod minimize;
pub mod names;
pub mod parser;
pub mod pta;
pub mod table;
pub mod tfa;
pub mod vars;

pub use callgraph::{CallGraph, ResolutionFailure, SiteKey, Target};
pub use index::{AllocId, BuildError, ProgramCtx};
pub use names::{ClassId, FieldId, MethodId, Names};
pub use parser::{parse_program, ParseError};
pub use table::{build_class_table, ClassTable, TableError};
pub use vars::{canonical_vars, ScopeId, VarId, VarTable, ENTRY_SCOPE};
