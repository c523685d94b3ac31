//! Resolved program context: one-stop bundle of AST, name tables, class
//! table, variable table and a statement index that every analysis consumes.

use thiserror::Error;

use crate::ast::{Program, Stmt};
use crate::callgraph::SiteKey;
use crate::names::{ClassId, FieldId, MethodId, Names};
use crate::parser::{parse_program, ParseError};
use crate::table::{build_class_table, ClassTable, TableError};
use crate::vars::{canonical_vars, ScopeId, VarId, VarTable, ENTRY_SCOPE};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AllocId(pub u32);

/// One abstract object per syntactic `new` statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllocSite {
    pub key: SiteKey,
    pub var: VarId,
    pub class: ClassId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallSite {
    pub key: SiteKey,
    pub receiver: VarId,
    pub method: MethodId,
    pub arg: VarId,
    /// Real target variable, or the throwaway for a discarded result.
    pub target: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadSite {
    pub key: SiteKey,
    pub target: VarId,
    pub base: VarId,
    pub field: FieldId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreSite {
    pub key: SiteKey,
    pub base: VarId,
    pub field: FieldId,
    pub source: VarId,
}

/// Flat statement lists with all names resolved to ids.
#[derive(Debug, Clone, Default)]
pub struct ProgramIndex {
    pub alloc_sites: Vec<AllocSite>,
    pub call_sites: Vec<CallSite>,
    pub loads: Vec<LoadSite>,
    pub stores: Vec<StoreSite>,
    /// (source, target) pairs from copy statements.
    pub copies: Vec<(VarId, VarId)>,
    /// (return variable, return slot) per method, seeded into every flow
    /// analysis so return values pass through the slot.
    pub return_seeds: Vec<(VarId, VarId)>,
    /// Statement count per scope, for reporting.
    pub stmt_counts: Vec<usize>,
}

impl ProgramIndex {
    pub fn alloc(&self, id: AllocId) -> &AllocSite {
        &self.alloc_sites[id.0 as usize]
    }

    pub fn render_alloc(&self, id: AllocId, vars: &VarTable, names: &Names) -> String {
        self.alloc(id).key.render(vars, names)
    }
}

#[derive(Debug, Clone)]
pub struct ProgramCtx {
    pub program: Program,
    pub names: Names,
    pub table: ClassTable,
    pub vars: VarTable,
    pub index: ProgramIndex,
    pub fingerprint: u64,
}

impl ProgramCtx {
    /// Parses and resolves source text in one step.
    pub fn from_source(text: &str) -> Result<ProgramCtx, BuildError> {
        let program = parse_program(text)?;
        ProgramCtx::build(program)
    }

    /// Resolves an already-parsed (and therefore validated) program.
    pub fn build(program: Program) -> Result<ProgramCtx, BuildError> {
        let names = Names::from_program(&program);
        let table = build_class_table(&program, &names)?;
        let vars = canonical_vars(&program, &names);
        let fingerprint = fnv1a(program.to_source().as_bytes());
        let mut index = ProgramIndex::default();

        index_body(&mut index, &program.entry_body, ENTRY_SCOPE, &names, &vars);
        for (ci, class) in program.classes.iter().enumerate() {
            let cid = ClassId(ci as u32);
            for method in &class.methods {
                let mid = names.method_id(&method.name).expect("method interned");
                let scope = vars.method_scope(cid, mid).expect("method scope exists");
                index_body(&mut index, &method.body, scope, &names, &vars);
                let info = vars.scope(scope);
                let ret = vars.lookup(scope, &method.return_var).expect("validated return variable");
                index.return_seeds.push((ret, info.return_slot.expect("method has slot")));
            }
        }
        Ok(ProgramCtx { program, names, table, vars, index, fingerprint })
    }

    pub fn var_count(&self) -> usize {
        self.vars.var_count()
    }
}

fn index_body(
    index: &mut ProgramIndex,
    body: &[Stmt],
    scope: ScopeId,
    names: &Names,
    vars: &VarTable,
) {
    let lookup = |name: &str| -> VarId {
        vars.lookup(scope, name).expect("validated variable reference")
    };
    for (i, stmt) in body.iter().enumerate() {
        let key = SiteKey { scope, index: i as u32 };
        match stmt {
            Stmt::New { target, class } => {
                index.alloc_sites.push(AllocSite {
                    key,
                    var: lookup(target),
                    class: names.class_id(class).expect("validated class"),
                });
            }
            Stmt::Copy { target, source } => {
                index.copies.push((lookup(source), lookup(target)));
            }
            Stmt::Load { target, base, field } => {
                index.loads.push(LoadSite {
                    key,
                    target: lookup(target),
                    base: lookup(base),
                    field: names.field_id(field).expect("validated field"),
                });
            }
            Stmt::Store { base, field, source } => {
                index.stores.push(StoreSite {
                    key,
                    base: lookup(base),
                    field: names.field_id(field).expect("validated field"),
                    source: lookup(source),
                });
            }
            Stmt::Call { target, receiver, method, arg } => {
                let target_var = match target {
                    Some(name) => lookup(name),
                    None => lookup(&format!("$t{i}")),
                };
                index.call_sites.push(CallSite {
                    key,
                    receiver: lookup(receiver),
                    method: names.method_id(method).expect("validated method"),
                    arg: lookup(arg),
                    target: target_var,
                });
            }
            Stmt::Null { .. } => {}
        }
    }
    let scope_idx = scope.0 as usize;
    if index.stmt_counts.len() <= scope_idx {
        index.stmt_counts.resize(scope_idx + 1, 0);
    }
    index.stmt_counts[scope_idx] = body.len();
}

/// 64-bit FNV-1a; used as a stable program fingerprint across runs.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
