//! Reference call graph constructions: class hierarchy analysis, rapid type
//! analysis, and variable type analysis.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::callgraph::{CallGraph, ResolutionFailure, Target};
use crate::index::ProgramCtx;
use crate::names::{ClassId, FieldId, MethodId};
use crate::table::ClassTable;
use crate::vars::VarId;

/// Resolves `receiver.m()` from the receiver's declared class alone: the
/// nearest inherited definition plus every redefinition in a subclass.
/// Returns an empty set when no class in the hierarchy defines the method.
pub fn cha_resolve(
    table: &ClassTable,
    receiver_declared: ClassId,
    method: MethodId,
) -> BTreeSet<Target> {
    let mut targets = BTreeSet::new();
    if let Some(defining) = table.dispatch(receiver_declared, method) {
        targets.insert(Target { class: defining, method });
    }
    for &sub in table.subclasses(receiver_declared) {
        if sub != receiver_declared && table.declares_method(sub, method) {
            targets.insert(Target { class: sub, method });
        }
    }
    targets
}

#[derive(Debug, Clone)]
pub struct ChaOutcome {
    pub callgraph: CallGraph,
    pub diagnostics: Vec<ResolutionFailure>,
}

pub fn cha_callgraph(ctx: &ProgramCtx) -> ChaOutcome {
    let mut callgraph = CallGraph::new(ctx.fingerprint);
    let mut diagnostics = BTreeSet::new();
    for call in &ctx.index.call_sites {
        let declared = ctx
            .vars
            .info(call.receiver)
            .declared
            .expect("call receivers always carry a declared class");
        let targets = cha_resolve(&ctx.table, declared, call.method);
        if targets.is_empty() {
            diagnostics.insert(ResolutionFailure {
                site: call.key,
                class: declared,
                method: call.method,
            });
        }
        for target in targets {
            callgraph.insert(call.key, target);
        }
    }
    ChaOutcome { callgraph, diagnostics: diagnostics.into_iter().collect() }
}

/// Classes that appear in a `new` statement.
pub fn instantiated_classes(ctx: &ProgramCtx) -> BTreeSet<ClassId> {
    ctx.index.alloc_sites.iter().map(|a| a.class).collect()
}

/// CHA filtered by instantiation: a target survives iff some instantiated
/// class dispatches the method to that definition, so inherited methods are
/// kept when only a subclass is instantiated.
pub fn rta_callgraph(ctx: &ProgramCtx) -> CallGraph {
    let cha = cha_callgraph(ctx).callgraph;
    let inst = instantiated_classes(ctx);
    let mut live: BTreeMap<MethodId, BTreeSet<ClassId>> = BTreeMap::new();
    for &c in &inst {
        for (&m, &defining) in ctx.table.methods(c) {
            live.entry(m).or_default().insert(defining);
        }
    }
    let mut filtered = CallGraph::new(cha.fingerprint);
    for &(site, target) in &cha.edges {
        if live.get(&target.method).is_some_and(|defs| defs.contains(&target.class)) {
            filtered.insert(site, target);
        }
    }
    filtered
}

/// A value-flow node: a variable, or one merged node per declaring class and
/// field. Merging all `x.f` with the same declaring class into a single node
/// is what makes the analysis cheap and is exactly where it loses precision
/// against the relational analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VtaNode {
    Var(VarId),
    Field(ClassId, FieldId),
}

#[derive(Debug, Clone, Default)]
pub struct VtaGraph {
    pub nodes: BTreeSet<VtaNode>,
    pub edges: BTreeSet<(VtaNode, VtaNode)>,
    reach: BTreeMap<VtaNode, BTreeSet<ClassId>>,
}

impl VtaGraph {
    pub fn reach(&self, node: VtaNode) -> BTreeSet<ClassId> {
        self.reach.get(&node).cloned().unwrap_or_default()
    }

    pub fn reach_var(&self, v: VarId) -> BTreeSet<ClassId> {
        self.reach(VtaNode::Var(v))
    }
}

/// Propagates class names along the value-flow graph to a fixpoint. Call
/// edges come from a prebuilt call graph (CHA by default); store and load
/// edges are generated on the fly as classes reach base variables.
pub fn vta_propagate(ctx: &ProgramCtx, callgraph: &CallGraph) -> VtaGraph {
    let mut graph = VtaGraph::default();
    for (v, _) in ctx.vars.iter() {
        graph.nodes.insert(VtaNode::Var(v));
    }

    let mut succ: BTreeMap<VtaNode, Vec<VtaNode>> = BTreeMap::new();
    let mut queue: VecDeque<(VtaNode, ClassId)> = VecDeque::new();

    let add_edge = |graph: &mut VtaGraph,
                        succ: &mut BTreeMap<VtaNode, Vec<VtaNode>>,
                        queue: &mut VecDeque<(VtaNode, ClassId)>,
                        from: VtaNode,
                        to: VtaNode| {
        if from == to || !graph.edges.insert((from, to)) {
            return;
        }
        graph.nodes.insert(from);
        graph.nodes.insert(to);
        succ.entry(from).or_default().push(to);
        if let Some(classes) = graph.reach.get(&from) {
            for c in classes.clone() {
                queue.push_back((to, c));
            }
        }
    };

    for &(source, target) in &ctx.index.copies {
        add_edge(&mut graph, &mut succ, &mut queue, VtaNode::Var(source), VtaNode::Var(target));
    }
    for &(ret, slot) in &ctx.index.return_seeds {
        add_edge(&mut graph, &mut succ, &mut queue, VtaNode::Var(ret), VtaNode::Var(slot));
    }
    for &(site, target) in &callgraph.edges {
        let call = ctx
            .index
            .call_sites
            .iter()
            .find(|c| c.key == site)
            .expect("call graph sites come from this program");
        let scope = ctx.vars.method_scope(target.class, target.method).expect("target scope");
        let info = ctx.vars.scope(scope);
        let param = VtaNode::Var(info.param.expect("param"));
        let this = VtaNode::Var(info.this.expect("this"));
        let slot = VtaNode::Var(info.return_slot.expect("slot"));
        add_edge(&mut graph, &mut succ, &mut queue, VtaNode::Var(call.arg), param);
        add_edge(&mut graph, &mut succ, &mut queue, VtaNode::Var(call.receiver), this);
        add_edge(&mut graph, &mut succ, &mut queue, slot, VtaNode::Var(call.target));
    }

    for alloc in &ctx.index.alloc_sites {
        queue.push_back((VtaNode::Var(alloc.var), alloc.class));
    }

    while let Some((node, class)) = queue.pop_front() {
        if !graph.reach.entry(node).or_default().insert(class) {
            continue;
        }
        if let Some(succs) = succ.get(&node) {
            for &next in &succs.clone() {
                queue.push_back((next, class));
            }
        }
        // A class arriving at a base variable materializes the store/load
        // edges through the merged field node it declares.
        if let VtaNode::Var(v) = node {
            for store in &ctx.index.stores {
                if store.base == v {
                    if let Some(field_info) = ctx.table.fields(class).get(&store.field) {
                        let fnode = VtaNode::Field(field_info.declared_in, store.field);
                        add_edge(&mut graph, &mut succ, &mut queue, VtaNode::Var(store.source), fnode);
                    }
                }
            }
            for load in &ctx.index.loads {
                if load.base == v {
                    if let Some(field_info) = ctx.table.fields(class).get(&load.field) {
                        let fnode = VtaNode::Field(field_info.declared_in, load.field);
                        add_edge(&mut graph, &mut succ, &mut queue, fnode, VtaNode::Var(load.target));
                    }
                }
            }
        }
    }
    graph
}

/// Re-resolves every call site from the receiver's propagated class set,
/// intersected with the declared-type targets. The intersection is the
/// usual guard for a propagation over a conservative call graph: the
/// receiver-to-this edges smear classes across override boundaries, and
/// without it those smeared classes would resolve to targets outside the
/// hierarchy-based graph.
pub fn vta_callgraph(ctx: &ProgramCtx, graph: &VtaGraph) -> CallGraph {
    let mut callgraph = CallGraph::new(ctx.fingerprint);
    for call in &ctx.index.call_sites {
        let declared = ctx
            .vars
            .info(call.receiver)
            .declared
            .expect("call receivers always carry a declared class");
        let bound = cha_resolve(&ctx.table, declared, call.method);
        for class in graph.reach_var(call.receiver) {
            if let Some(defining) = ctx.table.dispatch(class, call.method) {
                let target = Target { class: defining, method: call.method };
                if bound.contains(&target) {
                    callgraph.insert(call.key, target);
                }
            }
        }
    }
    callgraph
}
