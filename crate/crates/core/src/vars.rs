//! Canonical, context-insensitive variable identities.
//!
//! Every syntactic variable maps to exactly one [`VarId`], keyed by its
//! enclosing scope and name. A method scope contributes its `this` reference,
//! its parameter, its locals and one synthetic return slot; the `main` block
//! is treated as a static entry method with its own scope. Calls whose result
//! is discarded get a fresh throwaway target (`$t<idx>`) so that parameter,
//! receiver and return flow stay uniform.

use std::collections::HashMap;

use crate::ast::{Program, Stmt};
use crate::names::{ClassId, MethodId, Names};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScopeId(pub u32);

pub const ENTRY_SCOPE: ScopeId = ScopeId(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Local,
    Param,
    This,
    ReturnSlot,
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub scope: ScopeId,
    pub name: String,
    pub kind: VarKind,
    /// Declared class: present for locals, parameters and `this` (the
    /// defining class), absent for return slots and throwaway targets.
    pub declared: Option<ClassId>,
}

#[derive(Debug, Clone)]
pub enum ScopeKind {
    Entry,
    Method { class: ClassId, method: MethodId },
}

#[derive(Debug, Clone)]
pub struct ScopeInfo {
    pub kind: ScopeKind,
    pub this: Option<VarId>,
    pub param: Option<VarId>,
    pub return_slot: Option<VarId>,
}

#[derive(Debug, Clone)]
pub struct VarTable {
    vars: Vec<VarInfo>,
    scopes: Vec<ScopeInfo>,
    by_name: HashMap<(ScopeId, String), VarId>,
    method_scope: HashMap<(ClassId, MethodId), ScopeId>,
}

impl VarTable {
    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn info(&self, v: VarId) -> &VarInfo {
        &self.vars[v.0 as usize]
    }

    pub fn get(&self, v: VarId) -> Option<&VarInfo> {
        self.vars.get(v.0 as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &VarInfo)> {
        self.vars.iter().enumerate().map(|(i, info)| (VarId(i as u32), info))
    }

    pub fn lookup(&self, scope: ScopeId, name: &str) -> Option<VarId> {
        self.by_name.get(&(scope, name.to_string())).copied()
    }

    pub fn scope(&self, s: ScopeId) -> &ScopeInfo {
        &self.scopes[s.0 as usize]
    }

    pub fn scope_count(&self) -> usize {
        self.scopes.len()
    }

    pub fn method_scope(&self, class: ClassId, method: MethodId) -> Option<ScopeId> {
        self.method_scope.get(&(class, method)).copied()
    }

    pub fn render_scope(&self, s: ScopeId, names: &Names) -> String {
        match &self.scopes[s.0 as usize].kind {
            ScopeKind::Entry => "main".to_string(),
            ScopeKind::Method { class, method } => {
                format!("{}.{}", names.class_name(*class), names.method_name(*method))
            }
        }
    }

    /// Renders the unique `scope.name` form, e.g. `main.x` or `A.m.this`.
    pub fn render(&self, v: VarId, names: &Names) -> String {
        let info = &self.vars[v.0 as usize];
        let name = match info.kind {
            VarKind::ReturnSlot => "return",
            _ => info.name.as_str(),
        };
        format!("{}.{}", self.render_scope(info.scope, names), name)
    }
}

/// Builds the variable table for a validated program.
pub fn canonical_vars(program: &Program, names: &Names) -> VarTable {
    let mut table = VarTable {
        vars: Vec::new(),
        scopes: Vec::new(),
        by_name: HashMap::new(),
        method_scope: HashMap::new(),
    };

    let entry = ScopeId(0);
    table.scopes.push(ScopeInfo {
        kind: ScopeKind::Entry,
        this: None,
        param: None,
        return_slot: None,
    });
    for decl in &program.entry_locals {
        let declared = names.class_id(&decl.class);
        push_var(&mut table, entry, &decl.name, VarKind::Local, declared);
    }
    add_throwaways(&mut table, entry, &program.entry_body);

    for (ci, class) in program.classes.iter().enumerate() {
        let cid = ClassId(ci as u32);
        for method in &class.methods {
            let mid = names.method_id(&method.name).expect("declared method interned");
            let scope = ScopeId(table.scopes.len() as u32);
            table.scopes.push(ScopeInfo {
                kind: ScopeKind::Method { class: cid, method: mid },
                this: None,
                param: None,
                return_slot: None,
            });
            table.method_scope.insert((cid, mid), scope);

            let this = push_var(&mut table, scope, "this", VarKind::This, Some(cid));
            let param_class = names.class_id(&method.param_class);
            let param = push_var(&mut table, scope, &method.param, VarKind::Param, param_class);
            for decl in &method.locals {
                let declared = names.class_id(&decl.class);
                push_var(&mut table, scope, &decl.name, VarKind::Local, declared);
            }
            let slot = push_var(&mut table, scope, "$return", VarKind::ReturnSlot, None);
            let info = &mut table.scopes[scope.0 as usize];
            info.this = Some(this);
            info.param = Some(param);
            info.return_slot = Some(slot);
            add_throwaways(&mut table, scope, &method.body);
        }
    }
    table
}

fn push_var(
    table: &mut VarTable,
    scope: ScopeId,
    name: &str,
    kind: VarKind,
    declared: Option<ClassId>,
) -> VarId {
    let id = VarId(table.vars.len() as u32);
    table.vars.push(VarInfo { scope, name: name.to_string(), kind, declared });
    table.by_name.insert((scope, name.to_string()), id);
    id
}

fn add_throwaways(table: &mut VarTable, scope: ScopeId, body: &[Stmt]) {
    for (i, stmt) in body.iter().enumerate() {
        if let Stmt::Call { target: None, .. } = stmt {
            push_var(table, scope, &format!("$t{i}"), VarKind::Local, None);
        }
    }
}
