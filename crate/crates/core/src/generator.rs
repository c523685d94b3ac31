//! Seeded random program generation for differential testing.
//!
//! Generation is declaration-first: hierarchy, then fields and method
//! signatures, then bodies that reference only existing names, so no
//! rejection sampling is needed. Emitted programs keep two disciplines that
//! mirror ordinary compiled code:
//!
//! * every assignment is subtype-compatible with the target's declared
//!   class, and overriding methods keep the signature of the overridden
//!   definition — receivers only ever hold classes below their declaration;
//! * every local and parameter is initialized with a `new` before the random
//!   statements, and the entry block drives one call to every method of
//!   every class, so no field access or dispatch happens through a variable
//!   that provably holds nothing.
//!
//! Both together keep the analyses on the terrain the equivalence and
//! precision-ladder checks quantify over; dropping either produces programs
//! where a flow-based analysis reads through null-only variables that a
//! points-to model correctly ignores.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{ClassDef, FieldDecl, LocalDecl, MethodDef, Program, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StmtWeights {
    pub new_obj: u32,
    pub copy: u32,
    pub load: u32,
    pub store: u32,
    pub call: u32,
    pub null: u32,
}

impl Default for StmtWeights {
    fn default() -> StmtWeights {
        StmtWeights { new_obj: 3, copy: 5, load: 4, store: 4, call: 5, null: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Inclusive class count range.
    pub classes: (u32, u32),
    pub max_depth: u32,
    pub fields_per_class: (u32, u32),
    pub methods_per_class: (u32, u32),
    pub locals_per_scope: (u32, u32),
    pub entry_stmts: (u32, u32),
    pub body_stmts: (u32, u32),
    pub weights: StmtWeights,
    pub override_prob: f64,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            seed: 0,
            classes: (2, 6),
            max_depth: 4,
            fields_per_class: (1, 3),
            methods_per_class: (1, 3),
            locals_per_scope: (2, 5),
            entry_stmts: (8, 30),
            body_stmts: (2, 8),
            weights: StmtWeights::default(),
            override_prob: 0.35,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GenConfigError {
    #[error("range `{0}` is empty (min > max)")]
    EmptyRange(&'static str),
    #[error("statement weights must not all be zero")]
    ZeroWeights,
    #[error("override probability must lie in [0, 1]")]
    BadProbability,
    #[error("max_depth must be at least 1")]
    BadDepth,
    #[error("line {0}: expected `key=value`")]
    BadLine(usize),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: bad value for `{key}`")]
    BadValue { key: String, line: usize },
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenConfigError> {
        let ranges = [
            ("classes", self.classes),
            ("fields_per_class", self.fields_per_class),
            ("methods_per_class", self.methods_per_class),
            ("locals_per_scope", self.locals_per_scope),
            ("entry_stmts", self.entry_stmts),
            ("body_stmts", self.body_stmts),
        ];
        for (name, (lo, hi)) in ranges {
            if lo > hi {
                return Err(GenConfigError::EmptyRange(name));
            }
        }
        let w = &self.weights;
        if w.new_obj + w.copy + w.load + w.store + w.call + w.null == 0 {
            return Err(GenConfigError::ZeroWeights);
        }
        if !(0.0..=1.0).contains(&self.override_prob) {
            return Err(GenConfigError::BadProbability);
        }
        if self.max_depth == 0 {
            return Err(GenConfigError::BadDepth);
        }
        Ok(())
    }
}

/// Parses the flat `key=value` config format; `#` starts a comment line.
pub fn parse_gen_config(text: &str) -> Result<GenConfig, GenConfigError> {
    let mut config = GenConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(GenConfigError::BadLine(line_no))?;
        let key = key.trim();
        let value = value.trim();
        let bad = || GenConfigError::BadValue { key: key.to_string(), line: line_no };
        let int = |slot: &mut u32| -> Result<(), GenConfigError> {
            *slot = value.parse().map_err(|_| bad())?;
            Ok(())
        };
        match key {
            "seed" => config.seed = value.parse().map_err(|_| bad())?,
            "classes_min" => int(&mut config.classes.0)?,
            "classes_max" => int(&mut config.classes.1)?,
            "max_depth" => int(&mut config.max_depth)?,
            "fields_min" => int(&mut config.fields_per_class.0)?,
            "fields_max" => int(&mut config.fields_per_class.1)?,
            "methods_min" => int(&mut config.methods_per_class.0)?,
            "methods_max" => int(&mut config.methods_per_class.1)?,
            "locals_min" => int(&mut config.locals_per_scope.0)?,
            "locals_max" => int(&mut config.locals_per_scope.1)?,
            "entry_stmts_min" => int(&mut config.entry_stmts.0)?,
            "entry_stmts_max" => int(&mut config.entry_stmts.1)?,
            "body_stmts_min" => int(&mut config.body_stmts.0)?,
            "body_stmts_max" => int(&mut config.body_stmts.1)?,
            "w_new" => int(&mut config.weights.new_obj)?,
            "w_copy" => int(&mut config.weights.copy)?,
            "w_load" => int(&mut config.weights.load)?,
            "w_store" => int(&mut config.weights.store)?,
            "w_call" => int(&mut config.weights.call)?,
            "w_null" => int(&mut config.weights.null)?,
            "override_prob" => config.override_prob = value.parse().map_err(|_| bad())?,
            _ => return Err(GenConfigError::UnknownKey { key: key.to_string(), line: line_no }),
        }
    }
    config.validate()?;
    Ok(config)
}

const FIELD_POOL: [&str; 5] = ["f0", "f1", "f2", "f3", "f4"];
const METHOD_POOL: [&str; 5] = ["m0", "m1", "m2", "m3", "m4"];

/// Generates a well-formed program, deterministically in the seed.
pub fn gen_program(config: &GenConfig) -> Program {
    config.validate().expect("validated config");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Generator { config, rng: &mut rng }.generate()
}

/// One method signature shared by every definition of that name.
#[derive(Debug, Clone, Copy)]
struct Signature {
    param_class: usize,
    ret_class: usize,
}

/// A variable visible in the scope being generated.
#[derive(Debug, Clone)]
struct ScopeVar {
    name: String,
    class: usize,
    assignable: bool,
}

struct Hierarchy {
    parent: Vec<Option<usize>>,
    /// Fields visible per class (inherited included): (name, ftype).
    fields: Vec<Vec<(String, usize)>>,
    /// Methods visible per class (inherited included), sorted by name.
    methods: Vec<Vec<String>>,
    /// Subclasses per class, itself included.
    descendants: Vec<Vec<usize>>,
}

impl Hierarchy {
    fn is_subclass(&self, sub: usize, sup: usize) -> bool {
        let mut cur = Some(sub);
        while let Some(c) = cur {
            if c == sup {
                return true;
            }
            cur = self.parent[c];
        }
        false
    }
}

struct Generator<'a> {
    config: &'a GenConfig,
    rng: &'a mut ChaCha8Rng,
}

impl<'a> Generator<'a> {
    fn range(&mut self, (lo, hi): (u32, u32)) -> u32 {
        self.rng.gen_range(lo..=hi)
    }

    fn pick<'s, T>(&mut self, items: &'s [T]) -> &'s T {
        &items[self.rng.gen_range(0..items.len())]
    }

    fn generate(&mut self) -> Program {
        let class_count = self.range(self.config.classes) as usize;
        if class_count == 0 {
            return Program { classes: Vec::new(), entry_locals: Vec::new(), entry_body: Vec::new() };
        }
        let class_names: Vec<String> = (0..class_count).map(|i| format!("C{i}")).collect();

        let mut parent: Vec<Option<usize>> = vec![None; class_count];
        let mut depth: Vec<u32> = vec![1; class_count];
        for i in 1..class_count {
            if self.rng.gen_bool(0.75) {
                let candidates: Vec<usize> =
                    (0..i).filter(|&p| depth[p] < self.config.max_depth).collect();
                if !candidates.is_empty() {
                    let p = *self.pick(&candidates);
                    parent[i] = Some(p);
                    depth[i] = depth[p] + 1;
                }
            }
        }

        let mut descendants: Vec<Vec<usize>> = vec![Vec::new(); class_count];
        for c in 0..class_count {
            let mut cur = Some(c);
            while let Some(anc) = cur {
                descendants[anc].push(c);
                cur = parent[anc];
            }
        }
        for d in &mut descendants {
            d.sort();
        }

        // Fields: avoid redeclaring a name visible on an ancestor.
        let mut own_fields: Vec<Vec<(String, usize)>> = vec![Vec::new(); class_count];
        let mut all_fields: Vec<Vec<(String, usize)>> = vec![Vec::new(); class_count];
        for i in 0..class_count {
            let mut visible = match parent[i] {
                Some(p) => all_fields[p].clone(),
                None => Vec::new(),
            };
            let want = self.range(self.config.fields_per_class) as usize;
            let mut pool: Vec<&str> = FIELD_POOL
                .iter()
                .copied()
                .filter(|n| !visible.iter().any(|(vn, _)| vn == n))
                .collect();
            for _ in 0..want.min(pool.len()) {
                let idx = self.rng.gen_range(0..pool.len());
                let name = pool.remove(idx);
                let ftype = self.rng.gen_range(0..class_count);
                own_fields[i].push((name.to_string(), ftype));
                visible.push((name.to_string(), ftype));
            }
            all_fields[i] = visible;
        }

        // Method signatures are global per name; overrides reuse them.
        let mut signatures: BTreeMap<String, Signature> = BTreeMap::new();
        let mut own_methods: Vec<Vec<String>> = vec![Vec::new(); class_count];
        let mut all_methods: Vec<Vec<String>> = vec![Vec::new(); class_count];
        for i in 0..class_count {
            let inherited: Vec<String> = match parent[i] {
                Some(p) => all_methods[p].clone(),
                None => Vec::new(),
            };
            for name in &inherited {
                if self.rng.gen_bool(self.config.override_prob) {
                    own_methods[i].push(name.clone());
                }
            }
            let want = self.range(self.config.methods_per_class) as usize;
            let mut pool: Vec<&str> = METHOD_POOL
                .iter()
                .copied()
                .filter(|n| !inherited.iter().any(|m| m == n))
                .collect();
            for _ in 0..want.min(pool.len()) {
                let idx = self.rng.gen_range(0..pool.len());
                let name = pool.remove(idx);
                let param_class = self.rng.gen_range(0..class_count);
                let ret_class = self.rng.gen_range(0..class_count);
                signatures
                    .entry(name.to_string())
                    .or_insert(Signature { param_class, ret_class });
                own_methods[i].push(name.to_string());
            }
            let mut visible = inherited;
            for m in &own_methods[i] {
                if !visible.contains(m) {
                    visible.push(m.clone());
                }
            }
            visible.sort();
            all_methods[i] = visible;
        }

        let hierarchy = Hierarchy {
            parent: parent.clone(),
            fields: all_fields,
            methods: all_methods,
            descendants,
        };

        let mut classes = Vec::with_capacity(class_count);
        for i in 0..class_count {
            let mut methods = Vec::new();
            let mut names = own_methods[i].clone();
            names.sort();
            names.dedup();
            for name in names {
                let sig = signatures[&name];
                methods.push(self.method_body(i, &name, sig, &hierarchy, &signatures, &class_names));
            }
            classes.push(ClassDef {
                name: class_names[i].clone(),
                parent: parent[i].map(|p| class_names[p].clone()),
                fields: own_fields[i]
                    .iter()
                    .map(|(name, ftype)| FieldDecl {
                        class: class_names[*ftype].clone(),
                        name: name.clone(),
                    })
                    .collect(),
                methods,
            });
        }

        let (entry_locals, entry_body) =
            self.entry_body(class_count, &hierarchy, &signatures, &class_names);
        Program { classes, entry_locals, entry_body }
    }

    fn method_body(
        &mut self,
        class: usize,
        name: &str,
        sig: Signature,
        hierarchy: &Hierarchy,
        signatures: &BTreeMap<String, Signature>,
        class_names: &[String],
    ) -> MethodDef {
        let mut vars: Vec<ScopeVar> = vec![
            ScopeVar { name: "this".into(), class, assignable: false },
            ScopeVar { name: "p".into(), class: sig.param_class, assignable: true },
        ];
        let local_count = self.range(self.config.locals_per_scope) as usize;
        let mut locals = Vec::new();
        for j in 0..local_count.max(1) {
            // The first local is declared at the return class so a
            // compatible return variable always exists.
            let declared = if j == 0 { sig.ret_class } else { self.rng.gen_range(0..class_names.len()) };
            let lname = format!("v{j}");
            locals.push(LocalDecl { class: class_names[declared].clone(), name: lname.clone() });
            vars.push(ScopeVar { name: lname, class: declared, assignable: true });
        }

        let mut body = self.init_stmts(&vars, hierarchy, class_names);
        let count = self.range(self.config.body_stmts);
        for _ in 0..count {
            body.push(self.random_stmt(&vars, hierarchy, signatures, class_names));
        }

        let ret_candidates: Vec<&ScopeVar> = vars
            .iter()
            .filter(|v| hierarchy.is_subclass(v.class, sig.ret_class))
            .collect();
        let return_var = self.pick(&ret_candidates).name.clone();

        MethodDef {
            name: name.to_string(),
            param_class: class_names[sig.param_class].clone(),
            param: "p".into(),
            locals,
            body,
            return_var,
        }
    }

    fn entry_body(
        &mut self,
        class_count: usize,
        hierarchy: &Hierarchy,
        signatures: &BTreeMap<String, Signature>,
        class_names: &[String],
    ) -> (Vec<LocalDecl>, Vec<Stmt>) {
        let mut vars: Vec<ScopeVar> = Vec::new();
        let mut locals = Vec::new();
        // One driver variable per class, then the user locals.
        for (i, cname) in class_names.iter().enumerate() {
            let name = format!("e{i}");
            locals.push(LocalDecl { class: cname.clone(), name: name.clone() });
            vars.push(ScopeVar { name, class: i, assignable: true });
        }
        let user_locals = self.range(self.config.locals_per_scope) as usize;
        for j in 0..user_locals {
            let declared = self.rng.gen_range(0..class_count);
            let name = format!("u{j}");
            locals.push(LocalDecl { class: class_names[declared].clone(), name: name.clone() });
            vars.push(ScopeVar { name, class: declared, assignable: true });
        }

        let mut body = Vec::new();
        // Drivers are instantiated exactly, so the harness calls below
        // exercise every method of every class at least once.
        for (i, var) in vars.iter().enumerate().take(class_count) {
            body.push(Stmt::New { target: var.name.clone(), class: class_names[i].clone() });
        }
        for var in vars.iter().skip(class_count) {
            body.push(self.init_for(var, hierarchy, class_names));
        }
        for class in 0..class_count {
            for method in hierarchy.methods[class].clone() {
                let sig = signatures[&method];
                // The driver of the parameter class is always compatible.
                let arg = format!("e{}", sig.param_class);
                body.push(Stmt::Call {
                    target: None,
                    receiver: format!("e{class}"),
                    method,
                    arg,
                });
            }
        }
        let count = self.range(self.config.entry_stmts);
        for _ in 0..count {
            body.push(self.random_stmt(&vars, hierarchy, signatures, class_names));
        }
        (locals, body)
    }

    fn init_for(&mut self, var: &ScopeVar, hierarchy: &Hierarchy, class_names: &[String]) -> Stmt {
        let class = *self.pick(&hierarchy.descendants[var.class]);
        Stmt::New { target: var.name.clone(), class: class_names[class].clone() }
    }

    /// `v = new <subclass>;` for every assignable variable.
    fn init_stmts(
        &mut self,
        vars: &[ScopeVar],
        hierarchy: &Hierarchy,
        class_names: &[String],
    ) -> Vec<Stmt> {
        vars.iter()
            .filter(|v| v.assignable)
            .map(|v| self.init_for(v, hierarchy, class_names))
            .collect::<Vec<_>>()
    }

    fn random_stmt(
        &mut self,
        vars: &[ScopeVar],
        hierarchy: &Hierarchy,
        signatures: &BTreeMap<String, Signature>,
        class_names: &[String],
    ) -> Stmt {
        let w = &self.config.weights;
        let table = [w.new_obj, w.copy, w.load, w.store, w.call, w.null];
        let total: u32 = table.iter().sum();
        let mut roll = self.rng.gen_range(0..total);
        let mut kind = 0;
        for (i, &weight) in table.iter().enumerate() {
            if roll < weight {
                kind = i;
                break;
            }
            roll -= weight;
        }

        let assignable: Vec<&ScopeVar> = vars.iter().filter(|v| v.assignable).collect();
        let fallback = |gen: &mut Self| {
            let target = *gen.pick(&assignable);
            let class = *gen.pick(&hierarchy.descendants[target.class]);
            Stmt::New { target: target.name.clone(), class: class_names[class].clone() }
        };

        match kind {
            0 => fallback(self),
            1 => {
                let target = *self.pick(&assignable);
                let sources: Vec<&ScopeVar> = vars
                    .iter()
                    .filter(|v| v.name != target.name && hierarchy.is_subclass(v.class, target.class))
                    .collect();
                if sources.is_empty() {
                    return fallback(self);
                }
                Stmt::Copy {
                    target: target.name.clone(),
                    source: self.pick(&sources).name.clone(),
                }
            }
            2 => {
                // load: x = y.f with ftype(f) below x's declared class
                let bases: Vec<&ScopeVar> =
                    vars.iter().filter(|v| !hierarchy.fields[v.class].is_empty()).collect();
                if bases.is_empty() {
                    return fallback(self);
                }
                let base = *self.pick(&bases);
                let (field, ftype) = self.pick(&hierarchy.fields[base.class]).clone();
                let targets: Vec<&ScopeVar> = assignable
                    .iter()
                    .copied()
                    .filter(|v| hierarchy.is_subclass(ftype, v.class))
                    .collect();
                if targets.is_empty() {
                    return fallback(self);
                }
                Stmt::Load {
                    target: self.pick(&targets).name.clone(),
                    base: base.name.clone(),
                    field,
                }
            }
            3 => {
                let bases: Vec<&ScopeVar> =
                    vars.iter().filter(|v| !hierarchy.fields[v.class].is_empty()).collect();
                if bases.is_empty() {
                    return fallback(self);
                }
                let base = *self.pick(&bases);
                let (field, ftype) = self.pick(&hierarchy.fields[base.class]).clone();
                let sources: Vec<&ScopeVar> =
                    vars.iter().filter(|v| hierarchy.is_subclass(v.class, ftype)).collect();
                if sources.is_empty() {
                    return fallback(self);
                }
                Stmt::Store {
                    base: base.name.clone(),
                    field,
                    source: self.pick(&sources).name.clone(),
                }
            }
            4 => {
                let receivers: Vec<&ScopeVar> =
                    vars.iter().filter(|v| !hierarchy.methods[v.class].is_empty()).collect();
                if receivers.is_empty() {
                    return fallback(self);
                }
                let receiver = *self.pick(&receivers);
                let method = self.pick(&hierarchy.methods[receiver.class]).clone();
                let sig = signatures[&method];
                let args: Vec<&ScopeVar> = vars
                    .iter()
                    .filter(|v| hierarchy.is_subclass(v.class, sig.param_class))
                    .collect();
                if args.is_empty() {
                    return fallback(self);
                }
                let arg = self.pick(&args).name.clone();
                let targets: Vec<&ScopeVar> = assignable
                    .iter()
                    .copied()
                    .filter(|v| hierarchy.is_subclass(sig.ret_class, v.class))
                    .collect();
                let target = if targets.is_empty() || self.rng.gen_bool(0.3) {
                    None
                } else {
                    Some(self.pick(&targets).name.clone())
                };
                Stmt::Call { target, receiver: receiver.name.clone(), method, arg }
            }
            _ => {
                let target = *self.pick(&assignable);
                Stmt::Null { target: target.name.clone() }
            }
        }
    }
}
