//! Subset-based, context-insensitive points-to analysis with an on-the-fly
//! call graph. This is the oracle side of the equivalence check against type
//! flow analysis.
//!
//! Abstract objects are allocation sites. The environment maps each variable
//! to the sites it may refer to; the heap maps (site, field) cells to site
//! sets. Constraints per statement:
//!
//! * `x = new c`        — the site joins `env(x)`;
//! * `x = y`            — `env(y) ⊆ env(x)`;
//! * `x = y.f`          — for each `o ∈ env(y)`: `heap(o, f) ⊆ env(x)`;
//! * `x.f = y`          — for each `o ∈ env(x)`: `env(y) ⊆ heap(o, f)`;
//! * `x = y.m(z)`       — for each `o ∈ env(y)`, dispatching `m` on the
//!   class of `o` to definition `d.m`: `env(z) ⊆ env(d.m.param)`,
//!   `o ∈ env(d.m.this)`, `env(d.m.return) ⊆ env(x)`, plus a call edge.
//!
//! Under context insensitivity, `this` accumulates one receiver object per
//! resolved dispatch; an exact per-call singleton would not be a least
//! model. Return values pass through the method's return slot so that the
//! variable set matches the type flow analysis exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::callgraph::{CallGraph, ResolutionFailure, Target};
use crate::index::{AllocId, ProgramCtx};
use crate::names::{ClassId, FieldId};
use crate::vars::VarId;

/// Heap granularity. `PerSite` is the standard allocation-site abstraction;
/// `PerClass` merges all sites of one class into a single abstract object,
/// which may only coarsen results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeapAbstraction {
    #[default]
    PerSite,
    PerClass,
}

#[derive(Debug, Clone)]
pub struct PtaResult {
    /// Points-to environment: per variable, the sites it may refer to.
    pub env: Vec<BTreeSet<AllocId>>,
    /// Field contents per abstract object.
    pub heap: BTreeMap<(AllocId, FieldId), BTreeSet<AllocId>>,
    pub callgraph: CallGraph,
    pub diagnostics: Vec<ResolutionFailure>,
    pub iterations: u64,
    pub fingerprint: u64,
    alloc_classes: Vec<ClassId>,
}

impl PtaResult {
    pub fn points_to(&self, v: VarId) -> Option<&BTreeSet<AllocId>> {
        self.env.get(v.0 as usize)
    }

    /// Classes of the objects a variable may refer to; `None` for an unknown
    /// id.
    pub fn class_projection(&self, v: VarId) -> Option<BTreeSet<ClassId>> {
        let sites = self.env.get(v.0 as usize)?;
        Some(sites.iter().map(|o| self.alloc_classes[o.0 as usize]).collect())
    }

    pub fn class_of(&self, o: AllocId) -> ClassId {
        self.alloc_classes[o.0 as usize]
    }

    pub fn var_count(&self) -> usize {
        self.env.len()
    }
}

pub fn pta_fixpoint(ctx: &ProgramCtx) -> PtaResult {
    pta_fixpoint_with(ctx, HeapAbstraction::PerSite)
}

pub fn pta_fixpoint_with(ctx: &ProgramCtx, abstraction: HeapAbstraction) -> PtaResult {
    Solver::new(ctx, abstraction).run()
}

struct Solver<'a> {
    ctx: &'a ProgramCtx,
    /// Canonical representative per allocation site; identity for the
    /// per-site abstraction, first-site-of-class when merging by class.
    canon: Vec<u32>,
    pts: Vec<BTreeSet<u32>>,
    heap: HashMap<(u32, FieldId), BTreeSet<u32>>,
    copy_succ: Vec<Vec<u32>>,
    copy_edges: HashSet<(u32, u32)>,
    load_sinks: HashMap<(u32, FieldId), Vec<u32>>,
    sink_seen: HashSet<(u32, FieldId, u32)>,
    store_feeds: Vec<Vec<(u32, FieldId)>>,
    feed_seen: HashSet<(u32, u32, FieldId)>,
    loads_by_base: HashMap<u32, Vec<(FieldId, VarId)>>,
    stores_by_base: HashMap<u32, Vec<(FieldId, VarId)>>,
    calls_by_recv: HashMap<u32, Vec<usize>>,
    queue: VecDeque<(u32, u32)>,
    callgraph: CallGraph,
    diagnostics: BTreeSet<ResolutionFailure>,
    iterations: u64,
}

impl<'a> Solver<'a> {
    fn new(ctx: &'a ProgramCtx, abstraction: HeapAbstraction) -> Solver<'a> {
        let n = ctx.var_count();
        let sites = &ctx.index.alloc_sites;
        let canon: Vec<u32> = match abstraction {
            HeapAbstraction::PerSite => (0..sites.len() as u32).collect(),
            HeapAbstraction::PerClass => {
                let mut first: HashMap<ClassId, u32> = HashMap::new();
                sites
                    .iter()
                    .enumerate()
                    .map(|(i, s)| *first.entry(s.class).or_insert(i as u32))
                    .collect()
            }
        };
        let mut loads_by_base: HashMap<u32, Vec<(FieldId, VarId)>> = HashMap::new();
        for l in &ctx.index.loads {
            loads_by_base.entry(l.base.0).or_default().push((l.field, l.target));
        }
        let mut stores_by_base: HashMap<u32, Vec<(FieldId, VarId)>> = HashMap::new();
        for s in &ctx.index.stores {
            stores_by_base.entry(s.base.0).or_default().push((s.field, s.source));
        }
        let mut calls_by_recv: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, c) in ctx.index.call_sites.iter().enumerate() {
            calls_by_recv.entry(c.receiver.0).or_default().push(i);
        }
        Solver {
            ctx,
            canon,
            pts: vec![BTreeSet::new(); n],
            heap: HashMap::new(),
            copy_succ: vec![Vec::new(); n],
            copy_edges: HashSet::new(),
            load_sinks: HashMap::new(),
            sink_seen: HashSet::new(),
            store_feeds: vec![Vec::new(); n],
            feed_seen: HashSet::new(),
            loads_by_base,
            stores_by_base,
            calls_by_recv,
            queue: VecDeque::new(),
            callgraph: CallGraph::new(ctx.fingerprint),
            diagnostics: BTreeSet::new(),
            iterations: 0,
        }
    }

    fn insert(&mut self, v: VarId, o: u32) {
        if self.pts[v.0 as usize].insert(o) {
            self.queue.push_back((v.0, o));
        }
    }

    fn add_copy_edge(&mut self, from: VarId, to: VarId) {
        if from == to || !self.copy_edges.insert((from.0, to.0)) {
            return;
        }
        self.copy_succ[from.0 as usize].push(to.0);
        let objs: Vec<u32> = self.pts[from.0 as usize].iter().copied().collect();
        for o in objs {
            self.insert(to, o);
        }
    }

    fn heap_insert(&mut self, cell: (u32, FieldId), o: u32) {
        if self.heap.entry(cell).or_default().insert(o) {
            let sinks: Vec<u32> = self.load_sinks.get(&cell).cloned().unwrap_or_default();
            for t in sinks {
                self.insert(VarId(t), o);
            }
        }
    }

    fn run(mut self) -> PtaResult {
        for &(source, target) in &self.ctx.index.copies.clone() {
            self.add_copy_edge(source, target);
        }
        for &(ret, slot) in &self.ctx.index.return_seeds.clone() {
            self.add_copy_edge(ret, slot);
        }
        for (i, alloc) in self.ctx.index.alloc_sites.clone().iter().enumerate() {
            let o = self.canon[i];
            self.insert(alloc.var, o);
        }

        while let Some((v, o)) = self.queue.pop_front() {
            self.iterations += 1;
            self.process(VarId(v), o);
        }
        self.seal()
    }

    fn process(&mut self, v: VarId, o: u32) {
        let succs: Vec<u32> = self.copy_succ[v.0 as usize].clone();
        for t in succs {
            self.insert(VarId(t), o);
        }

        if let Some(loads) = self.loads_by_base.get(&v.0).cloned() {
            for (field, target) in loads {
                let cell = (o, field);
                if self.sink_seen.insert((o, field, target.0)) {
                    self.load_sinks.entry(cell).or_default().push(target.0);
                    let objs: Vec<u32> =
                        self.heap.get(&cell).map(|s| s.iter().copied().collect()).unwrap_or_default();
                    for obj in objs {
                        self.insert(target, obj);
                    }
                }
            }
        }

        if let Some(stores) = self.stores_by_base.get(&v.0).cloned() {
            for (field, source) in stores {
                let cell = (o, field);
                if self.feed_seen.insert((source.0, o, field)) {
                    self.store_feeds[source.0 as usize].push(cell);
                    let objs: Vec<u32> = self.pts[source.0 as usize].iter().copied().collect();
                    for obj in objs {
                        self.heap_insert(cell, obj);
                    }
                }
            }
        }

        // `v` feeds previously linked heap cells.
        let cells: Vec<(u32, FieldId)> = self.store_feeds[v.0 as usize].clone();
        for cell in cells {
            self.heap_insert(cell, o);
        }

        if let Some(sites) = self.calls_by_recv.get(&v.0).cloned() {
            for site_idx in sites {
                let call = self.ctx.index.call_sites[site_idx];
                let class = self.ctx.index.alloc_sites[o as usize].class;
                match self.ctx.table.dispatch(class, call.method) {
                    Some(defining) => {
                        let scope = self
                            .ctx
                            .vars
                            .method_scope(defining, call.method)
                            .expect("defining class has method scope");
                        let info = self.ctx.vars.scope(scope);
                        let param = info.param.expect("param");
                        let this = info.this.expect("this");
                        let slot = info.return_slot.expect("slot");
                        self.add_copy_edge(call.arg, param);
                        self.insert(this, o);
                        self.add_copy_edge(slot, call.target);
                        self.callgraph
                            .insert(call.key, Target { class: defining, method: call.method });
                    }
                    None => {
                        self.diagnostics.insert(ResolutionFailure {
                            site: call.key,
                            class,
                            method: call.method,
                        });
                    }
                }
            }
        }
    }

    fn seal(self) -> PtaResult {
        let env: Vec<BTreeSet<AllocId>> = self
            .pts
            .into_iter()
            .map(|s| s.into_iter().map(AllocId).collect())
            .collect();
        let heap: BTreeMap<(AllocId, FieldId), BTreeSet<AllocId>> = self
            .heap
            .into_iter()
            .filter(|(_, set)| !set.is_empty())
            .map(|((o, f), set)| {
                ((AllocId(o), f), set.into_iter().map(AllocId).collect())
            })
            .collect();
        PtaResult {
            env,
            heap,
            callgraph: self.callgraph,
            diagnostics: self.diagnostics.into_iter().collect(),
            iterations: self.iterations,
            fingerprint: self.ctx.fingerprint,
            alloc_classes: self.ctx.index.alloc_sites.iter().map(|a| a.class).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vars::ENTRY_SCOPE;

    fn ctx(src: &str) -> ProgramCtx {
        ProgramCtx::from_source(src).unwrap()
    }

    fn entry_var(ctx: &ProgramCtx, name: &str) -> VarId {
        ctx.vars.lookup(ENTRY_SCOPE, name).unwrap()
    }

    #[test]
    fn no_new_means_empty_everywhere() {
        let ctx = ctx("class A {} main { A x; A y; x = y; }");
        let r = pta_fixpoint(&ctx);
        assert!(r.env.iter().all(|s| s.is_empty()));
        assert!(r.heap.is_empty());
    }

    #[test]
    fn store_then_load_flows_through_heap() {
        let src = "class A { A f; } main { A x; A y; A z; x = new A(); y = new A(); x.f = y; z = x.f; }";
        let ctx = ctx(src);
        let r = pta_fixpoint(&ctx);
        let z = entry_var(&ctx, "z");
        let y_site = AllocId(1);
        assert_eq!(r.points_to(z).unwrap(), &BTreeSet::from([y_site]));
    }

    #[test]
    fn same_class_two_sites_dedup_to_one_call_edge() {
        let src = "class A { m(A p) { return this; } }\
                   main { A x; A y; A r; x = new A(); y = new A(); x = y; r = x.m(x); }";
        let ctx = ctx(src);
        let r = pta_fixpoint(&ctx);
        assert_eq!(r.callgraph.len(), 1);
        let x = entry_var(&ctx, "x");
        assert_eq!(r.points_to(x).unwrap().len(), 2);
    }

    #[test]
    fn class_projection_of_unassigned_is_empty() {
        let ctx = ctx("class A {} main { A x; A y; x = new A(); }");
        let r = pta_fixpoint(&ctx);
        let y = entry_var(&ctx, "y");
        assert!(r.class_projection(y).unwrap().is_empty());
    }

    #[test]
    fn class_merging_conflates_same_class_sites() {
        let src = "class A { A f; } main { A x; A y; A z; A w; \
                   x = new A(); y = new A(); x.f = y; z = y.f; }";
        let ctx = ctx(src);
        let per_site = pta_fixpoint(&ctx);
        let merged = pta_fixpoint_with(&ctx, HeapAbstraction::PerClass);
        let z = entry_var(&ctx, "z");
        // Per-site: y's object has nothing stored under f. Merged: x and y
        // collapse, so the store becomes visible through y.
        assert!(per_site.points_to(z).unwrap().is_empty());
        assert!(!merged.points_to(z).unwrap().is_empty());
    }
}
