//! Type flow analysis: a relational whole-program fixpoint with no heap
//! abstraction.
//!
//! Three relations are computed over canonical variables:
//!
//! * `typeflow`  — `(c, x)`: an object of class `c` may reach variable `x`;
//! * `order`     — `(y, x)`: everything flowing to `y` also flows to `x`
//!   (a preorder: reflexive and transitive);
//! * `fieldaccess` — `(x, f, y)`: loading field `f` from `x` may yield the
//!   values of `y`.
//!
//! Base facts come straight from statements: `x = new c` contributes
//! `c ⇢ x`, `x = y` contributes `y ⊑ x`, and `x.f = y` contributes
//! `x →f y`. The closure rules are:
//!
//! 1. for every load `x = y.f` and every `(y, f, z)` in `fieldaccess`:
//!    `z ⊑ x`;
//! 2. typeflow is closed under the order: `c ⇢ x` and `x ⊑ y` give `c ⇢ y`;
//! 3. the order is reflexive and transitive;
//! 4. for every *base* store `x.f = z` and every `z'` with `z' ⊑ y` and
//!    `z' ⊑ x`: `(y, f, z)` joins `fieldaccess` — `x` and `y` may alias
//!    because a common source flows into both;
//! 5. a call `x = y.m(z)` is resolved per allocation flowing to the
//!    receiver: for every `new` site of class `c` below `y` with `c`'s
//!    nearest definition `d.m`, the call binds `z ⊑ d.m.param`, routes the
//!    site into `d.m.this`, adds `d.m.return ⊑ x`, and contributes the call
//!    edge. Receiver classes without a definition of `m` are reported as
//!    resolution failures and contribute nothing.
//!
//! Rule 4 deliberately joins against base stores only: chaining it through
//! derived tuples manufactures aliasing that no points-to model exhibits.
//!
//! Internally every allocation site owns a proxy node sitting below the
//! `new` target. A proxy has no incoming order edges, so its upward closure
//! traces exactly where that site's objects can flow; rule 5 triggers on
//! `proxy ⊑ receiver` and binds `proxy ⊑ this`. Binding the whole receiver
//! (or even the `new` target variable, which may accumulate other classes
//! later) into `this` would smear receivers across override boundaries and
//! lose the per-object precision a points-to analysis has. Proxies also act
//! as the common-lower-bound witnesses of rule 4, which is what lets field
//! reads through `this` see exactly the stores on the receiving object.
//! Proxies are erased from the published relations.
//!
//! Evaluation is a semi-naive worklist over newly derived tuples with
//! per-rule indexes; a naive full re-evaluation oracle lives in the test
//! suite and must agree exactly.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::callgraph::{CallGraph, ResolutionFailure, Target};
use crate::index::ProgramCtx;
use crate::names::{ClassId, FieldId};
use crate::vars::VarId;

/// The three relations, used both for base facts and for fixpoints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationStore {
    pub typeflow: BTreeSet<(ClassId, VarId)>,
    pub order: BTreeSet<(VarId, VarId)>,
    pub fieldaccess: BTreeSet<(VarId, FieldId, VarId)>,
}

impl RelationStore {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.typeflow.len(), self.order.len(), self.fieldaccess.len())
    }
}

/// Engine switches for fault injection in differential tests. The default
/// runs every rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfaOptions {
    /// Drop rule 1 (loads produce no flow). Breaks the points-to
    /// equivalence on purpose, for validating the diff harness.
    pub disable_load_rule: bool,
}

#[derive(Debug, Clone)]
pub struct TfaResult {
    /// Relations at fixpoint. `order` includes the reflexive pairs.
    pub store: RelationStore,
    /// The raw edges whose reflexive-transitive closure is `store.order`:
    /// copies, return seeds, and the conclusions of rules 1 and 5.
    pub order_edges: BTreeSet<(VarId, VarId)>,
    pub callgraph: CallGraph,
    pub diagnostics: Vec<ResolutionFailure>,
    /// Number of worklist events processed until stabilization.
    pub iterations: u64,
    pub fingerprint: u64,
    pub(crate) reaching: Vec<BTreeSet<ClassId>>,
}

impl TfaResult {
    /// The set of classes that may flow to `v`; `None` for an unknown id.
    pub fn reaching_types(&self, v: VarId) -> Option<&BTreeSet<ClassId>> {
        self.reaching.get(v.0 as usize)
    }

    pub fn var_count(&self) -> usize {
        self.reaching.len()
    }
}

/// Extracts exactly the base facts: one typeflow tuple per `new`, one order
/// pair per copy, one fieldaccess triple per store. Nothing else.
pub fn seed_base_relations(ctx: &ProgramCtx) -> RelationStore {
    let mut store = RelationStore::default();
    for alloc in &ctx.index.alloc_sites {
        store.typeflow.insert((alloc.class, alloc.var));
    }
    for &(source, target) in &ctx.index.copies {
        store.order.insert((source, target));
    }
    for s in &ctx.index.stores {
        store.fieldaccess.insert((s.base, s.field, s.source));
    }
    store
}

pub fn tfa_fixpoint(ctx: &ProgramCtx) -> TfaResult {
    tfa_fixpoint_with(ctx, TfaOptions::default())
}

pub fn tfa_fixpoint_with(ctx: &ProgramCtx, opts: TfaOptions) -> TfaResult {
    Engine::new(ctx, opts).run()
}

enum Event {
    /// A new closure pair `p ⊑ q`.
    Pair(u32, u32),
    /// A new fieldaccess tuple.
    Fld(u32, FieldId, u32),
}

struct Engine<'a> {
    ctx: &'a ProgramCtx,
    opts: TfaOptions,
    /// Real variable count; node ids at and above this are site proxies
    /// (`n_vars + site index`).
    n_vars: u32,
    /// Closure uppers/lowers over all nodes, both including the node itself.
    up: Vec<HashSet<u32>>,
    down: Vec<HashSet<u32>>,
    edges: HashSet<(u32, u32)>,
    fld: HashSet<(u32, FieldId, u32)>,
    queue: VecDeque<Event>,
    stores_by_base: HashMap<u32, Vec<(FieldId, VarId)>>,
    loads_by_base: HashMap<(u32, FieldId), Vec<VarId>>,
    calls_by_recv: HashMap<u32, Vec<usize>>,
    callgraph: CallGraph,
    diagnostics: BTreeSet<ResolutionFailure>,
    iterations: u64,
}

impl<'a> Engine<'a> {
    fn new(ctx: &'a ProgramCtx, opts: TfaOptions) -> Engine<'a> {
        let n_vars = ctx.var_count() as u32;
        let node_count = n_vars as usize + ctx.index.alloc_sites.len();
        let mut stores_by_base: HashMap<u32, Vec<(FieldId, VarId)>> = HashMap::new();
        for s in &ctx.index.stores {
            stores_by_base.entry(s.base.0).or_default().push((s.field, s.source));
        }
        let mut loads_by_base: HashMap<(u32, FieldId), Vec<VarId>> = HashMap::new();
        for l in &ctx.index.loads {
            loads_by_base.entry((l.base.0, l.field)).or_default().push(l.target);
        }
        let mut calls_by_recv: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, c) in ctx.index.call_sites.iter().enumerate() {
            calls_by_recv.entry(c.receiver.0).or_default().push(i);
        }
        Engine {
            ctx,
            opts,
            n_vars,
            up: (0..node_count).map(|v| HashSet::from([v as u32])).collect(),
            down: (0..node_count).map(|v| HashSet::from([v as u32])).collect(),
            edges: HashSet::new(),
            fld: HashSet::new(),
            queue: VecDeque::new(),
            stores_by_base,
            loads_by_base,
            calls_by_recv,
            callgraph: CallGraph::new(ctx.fingerprint),
            diagnostics: BTreeSet::new(),
            iterations: 0,
        }
    }

    fn add_pair(&mut self, p: u32, q: u32) {
        if self.up[p as usize].insert(q) {
            self.down[q as usize].insert(p);
            self.queue.push_back(Event::Pair(p, q));
        }
    }

    fn add_edge(&mut self, a: u32, b: u32) {
        if a == b || !self.edges.insert((a, b)) {
            return;
        }
        let lowers: Vec<u32> = self.down[a as usize].iter().copied().collect();
        let uppers: Vec<u32> = self.up[b as usize].iter().copied().collect();
        for &p in &lowers {
            for &q in &uppers {
                self.add_pair(p, q);
            }
        }
    }

    fn add_fld(&mut self, base: u32, field: FieldId, source: u32) {
        if self.fld.insert((base, field, source)) {
            self.queue.push_back(Event::Fld(base, field, source));
        }
    }

    fn run(mut self) -> TfaResult {
        let node_count = self.up.len() as u32;
        for v in 0..node_count {
            self.queue.push_back(Event::Pair(v, v));
        }
        for (i, alloc) in self.ctx.index.alloc_sites.clone().iter().enumerate() {
            self.add_edge(self.n_vars + i as u32, alloc.var.0);
        }
        for (source, target) in self.ctx.index.copies.clone() {
            self.add_edge(source.0, target.0);
        }
        for (ret, slot) in self.ctx.index.return_seeds.clone() {
            self.add_edge(ret.0, slot.0);
        }

        while let Some(event) = self.queue.pop_front() {
            self.iterations += 1;
            match event {
                Event::Pair(p, q) => self.on_pair(p, q),
                Event::Fld(base, field, source) => self.on_fld(base, field, source),
            }
        }
        self.seal()
    }

    fn on_pair(&mut self, p: u32, q: u32) {
        let uppers: Vec<u32> = self.up[p as usize].iter().copied().collect();

        // Rule 4 with q as the store base: p is below both q and every u
        // above it.
        if let Some(stores) = self.stores_by_base.get(&q).cloned() {
            for &(field, source) in &stores {
                for &u in &uppers {
                    self.add_fld(u, field, source.0);
                }
            }
        }
        // Rule 4 with q as the other alias: look for store bases already
        // above p.
        for &x0 in &uppers {
            if x0 == q {
                continue;
            }
            if let Some(stores) = self.stores_by_base.get(&x0).cloned() {
                for (field, source) in stores {
                    self.add_fld(q, field, source.0);
                }
            }
        }

        // Rule 5: a site proxy reaching a call receiver resolves the call.
        if p >= self.n_vars {
            if let Some(sites) = self.calls_by_recv.get(&q).cloned() {
                let alloc = self.ctx.index.alloc_sites[(p - self.n_vars) as usize];
                for &site_idx in &sites {
                    let call = self.ctx.index.call_sites[site_idx];
                    match self.ctx.table.dispatch(alloc.class, call.method) {
                        Some(defining) => {
                            let scope = self
                                .ctx
                                .vars
                                .method_scope(defining, call.method)
                                .expect("defining class has method scope");
                            let info = self.ctx.vars.scope(scope);
                            let param = info.param.expect("method scope has param");
                            let this = info.this.expect("method scope has this");
                            let slot = info.return_slot.expect("method scope has slot");
                            self.add_edge(call.arg.0, param.0);
                            self.add_edge(p, this.0);
                            self.add_edge(slot.0, call.target.0);
                            self.callgraph.insert(
                                call.key,
                                Target { class: defining, method: call.method },
                            );
                        }
                        None => {
                            self.diagnostics.insert(ResolutionFailure {
                                site: call.key,
                                class: alloc.class,
                                method: call.method,
                            });
                        }
                    }
                }
            }
        }
    }

    fn on_fld(&mut self, base: u32, field: FieldId, source: u32) {
        if self.opts.disable_load_rule {
            return;
        }
        if let Some(targets) = self.loads_by_base.get(&(base, field)).cloned() {
            for target in targets {
                self.add_edge(source, target.0);
            }
        }
    }

    /// Publishes the relations with proxy nodes erased. Proxies have no
    /// incoming edges, so no real-to-real ordering ever routes through one;
    /// dropping them loses nothing.
    fn seal(self) -> TfaResult {
        let n = self.n_vars;
        let mut reaching: Vec<BTreeSet<ClassId>> = vec![BTreeSet::new(); n as usize];
        for (i, alloc) in self.ctx.index.alloc_sites.iter().enumerate() {
            for &u in &self.up[(n + i as u32) as usize] {
                if u < n {
                    reaching[u as usize].insert(alloc.class);
                }
            }
        }
        let mut store = RelationStore::default();
        for (v, classes) in reaching.iter().enumerate() {
            for &c in classes {
                store.typeflow.insert((c, VarId(v as u32)));
            }
        }
        for (p, uppers) in self.up.iter().enumerate().take(n as usize) {
            for &q in uppers {
                if q < n {
                    store.order.insert((VarId(p as u32), VarId(q)));
                }
            }
        }
        for &(base, field, source) in &self.fld {
            if base < n && source < n {
                store.fieldaccess.insert((VarId(base), field, VarId(source)));
            }
        }
        TfaResult {
            store,
            order_edges: self
                .edges
                .iter()
                .filter(|&&(a, b)| a < n && b < n)
                .map(|&(a, b)| (VarId(a), VarId(b)))
                .collect(),
            callgraph: self.callgraph,
            diagnostics: self.diagnostics.into_iter().collect(),
            iterations: self.iterations,
            fingerprint: self.ctx.fingerprint,
            reaching,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ProgramCtx;
    use crate::vars::ENTRY_SCOPE;

    fn ctx(src: &str) -> ProgramCtx {
        ProgramCtx::from_source(src).unwrap()
    }

    fn entry_var(ctx: &ProgramCtx, name: &str) -> VarId {
        ctx.vars.lookup(ENTRY_SCOPE, name).unwrap()
    }

    #[test]
    fn null_only_program_seeds_nothing() {
        let ctx = ctx("class A {} main { A x; x = null; }");
        let store = seed_base_relations(&ctx);
        assert_eq!(store.counts(), (0, 0, 0));
    }

    #[test]
    fn mutual_copies_seed_both_order_pairs() {
        let ctx = ctx("class A {} main { A x; A y; x = y; y = x; }");
        let store = seed_base_relations(&ctx);
        let x = entry_var(&ctx, "x");
        let y = entry_var(&ctx, "y");
        assert_eq!(store.order, BTreeSet::from([(y, x), (x, y)]));
        assert!(store.typeflow.is_empty());
    }

    #[test]
    fn copy_chain_propagates_typeflow() {
        let ctx = ctx("class A {} main { A x; A y; A z; x = new A(); y = x; z = y; }");
        let r = tfa_fixpoint(&ctx);
        let a = ctx.names.class_id("A").unwrap();
        let z = entry_var(&ctx, "z");
        assert_eq!(r.reaching_types(z).unwrap(), &BTreeSet::from([a]));
    }

    #[test]
    fn unassigned_variable_reaches_nothing() {
        let ctx = ctx("class A {} main { A x; A y; x = new A(); }");
        let r = tfa_fixpoint(&ctx);
        let y = entry_var(&ctx, "y");
        assert!(r.reaching_types(y).unwrap().is_empty());
    }

    #[test]
    fn program_without_calls_has_empty_callgraph() {
        let ctx = ctx("class A {} main { A x; x = new A(); }");
        let r = tfa_fixpoint(&ctx);
        assert!(r.callgraph.is_empty());
    }

    #[test]
    fn two_receiver_classes_give_two_edges() {
        let src = "class A { m(A p) { return this; } }\
                   class B extends A { m(A p) { return this; } }\
                   class C extends A { m(A p) { return this; } }\
                   main { A y; A r; A u; y = new B(); u = new C(); y = u; r = y.m(y); }";
        let ctx = ctx(src);
        let r = tfa_fixpoint(&ctx);
        let b = ctx.names.class_id("B").unwrap();
        let c = ctx.names.class_id("C").unwrap();
        let m = ctx.names.method_id("m").unwrap();
        let site = ctx.index.call_sites[0].key;
        assert_eq!(r.callgraph.len(), 2);
        assert!(r.callgraph.contains(site, Target { class: b, method: m }));
        assert!(r.callgraph.contains(site, Target { class: c, method: m }));
    }

    #[test]
    fn dispatch_failure_is_reported_not_fatal() {
        // `m` exists on A only; the receiver holds a B.
        let src = "class A { m(A p) { return this; } } class B {}\
                   main { B x; B r; x = new B(); r = x.m(x); }";
        let ctx = ctx(src);
        let r = tfa_fixpoint(&ctx);
        assert!(r.callgraph.is_empty());
        assert_eq!(r.diagnostics.len(), 1);
        let b = ctx.names.class_id("B").unwrap();
        assert_eq!(r.diagnostics[0].class, b);
    }

    #[test]
    fn order_is_reflexive() {
        let ctx = ctx("class A {} main { A x; A y; }");
        let r = tfa_fixpoint(&ctx);
        let x = entry_var(&ctx, "x");
        let y = entry_var(&ctx, "y");
        assert!(r.store.order.contains(&(x, x)));
        assert!(r.store.order.contains(&(y, y)));
    }
}
