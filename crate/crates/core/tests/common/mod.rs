//! Shared test support: naive full re-evaluation oracles for both fixpoint
//! engines, fixture loading, and corpus configs.
//!
//! The oracles deliberately share no code or indexes with the engines: each
//! rule is re-applied to every tuple combination on every round until
//! nothing changes. Slow, but obviously faithful to the rule definitions.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use typeflow::callgraph::{ResolutionFailure, SiteKey, Target};
use typeflow::generator::{gen_program, GenConfig};
use typeflow::index::ProgramCtx;
use typeflow::names::{ClassId, FieldId};
use typeflow::vars::VarId;

pub fn fixture_path(name: &str) -> PathBuf {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // Shared between the core and cli test suites.
    if !path.ends_with("core") {
        path = path.parent().unwrap().join("core");
    }
    path.join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).expect("fixture readable")
}

pub fn fig1() -> ProgramCtx {
    ProgramCtx::from_source(&fixture("fig1.tfl")).expect("fig1 parses")
}

pub fn generated_ctx(config: &GenConfig) -> ProgramCtx {
    let program = gen_program(config);
    ProgramCtx::build(program).expect("generated programs are well-formed")
}

/// Corpus scale used by the acceptance checks: up to 10 classes, hierarchy
/// depth up to 4, around 100-250 statements per program.
pub fn corpus_config(seed: u64) -> GenConfig {
    GenConfig {
        seed,
        classes: (2, 10),
        max_depth: 4,
        fields_per_class: (1, 3),
        methods_per_class: (0, 2),
        locals_per_scope: (1, 4),
        entry_stmts: (5, 25),
        body_stmts: (2, 6),
        override_prob: 0.35,
        ..GenConfig::default()
    }
}

/// Smaller programs for the quadratic naive oracles.
pub fn oracle_config(seed: u64) -> GenConfig {
    GenConfig {
        seed,
        classes: (1, 5),
        max_depth: 3,
        fields_per_class: (1, 2),
        methods_per_class: (0, 2),
        locals_per_scope: (1, 3),
        entry_stmts: (3, 12),
        body_stmts: (1, 4),
        override_prob: 0.4,
        ..GenConfig::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NaiveTfa {
    /// Reflexive-transitive order closure.
    pub order: BTreeSet<(VarId, VarId)>,
    pub fieldaccess: BTreeSet<(VarId, FieldId, VarId)>,
    pub typeflow: BTreeSet<(ClassId, VarId)>,
    pub callgraph: BTreeSet<(SiteKey, Target)>,
    pub diagnostics: BTreeSet<ResolutionFailure>,
}

/// Naive evaluation of the type-flow rules: every round re-applies every
/// rule to every tuple combination. Allocation sites are modeled by proxy
/// nodes `n + site` sitting below their `new` target, mirroring the engine's
/// object-precise call rule; proxies are projected away at the end.
pub fn naive_tfa(ctx: &ProgramCtx) -> NaiveTfa {
    let n = ctx.var_count() as u32;
    let site_count = ctx.index.alloc_sites.len() as u32;
    let nodes: Vec<u32> = (0..n + site_count).collect();

    let mut order: BTreeSet<(u32, u32)> = nodes.iter().map(|&v| (v, v)).collect();
    for (i, alloc) in ctx.index.alloc_sites.iter().enumerate() {
        order.insert((n + i as u32, alloc.var.0));
    }
    for &(source, target) in &ctx.index.copies {
        order.insert((source.0, target.0));
    }
    for &(ret, slot) in &ctx.index.return_seeds {
        order.insert((ret.0, slot.0));
    }
    let mut fld: BTreeSet<(u32, FieldId, u32)> = BTreeSet::new();
    let mut callgraph: BTreeSet<(SiteKey, Target)> = BTreeSet::new();
    let mut diagnostics: BTreeSet<ResolutionFailure> = BTreeSet::new();

    loop {
        let mut changed = false;

        // Transitivity of the order.
        let pairs: Vec<(u32, u32)> = order.iter().copied().collect();
        for &(a, b) in &pairs {
            for &(c, d) in &pairs {
                if b == c && order.insert((a, d)) {
                    changed = true;
                }
            }
        }

        // Field rule: a base store plus a common lower bound of the store
        // base and any node.
        for store in &ctx.index.stores {
            for &z in &nodes {
                if !order.contains(&(z, store.base.0)) {
                    continue;
                }
                for &y in &nodes {
                    if order.contains(&(z, y)) && fld.insert((y, store.field, store.source.0)) {
                        changed = true;
                    }
                }
            }
        }

        // Load rule.
        for load in &ctx.index.loads {
            let tuples: Vec<(u32, FieldId, u32)> = fld.iter().copied().collect();
            for (base, field, source) in tuples {
                if base == load.base.0
                    && field == load.field
                    && order.insert((source, load.target.0))
                {
                    changed = true;
                }
            }
        }

        // Call rule: per allocation site whose proxy is below the receiver.
        for call in &ctx.index.call_sites {
            for (i, alloc) in ctx.index.alloc_sites.iter().enumerate() {
                let proxy = n + i as u32;
                if !order.contains(&(proxy, call.receiver.0)) {
                    continue;
                }
                match ctx.table.dispatch(alloc.class, call.method) {
                    Some(defining) => {
                        let scope = ctx.vars.method_scope(defining, call.method).unwrap();
                        let info = ctx.vars.scope(scope);
                        changed |= order.insert((call.arg.0, info.param.unwrap().0));
                        changed |= order.insert((proxy, info.this.unwrap().0));
                        changed |= order.insert((info.return_slot.unwrap().0, call.target.0));
                        changed |= callgraph
                            .insert((call.key, Target { class: defining, method: call.method }));
                    }
                    None => {
                        changed |= diagnostics.insert(ResolutionFailure {
                            site: call.key,
                            class: alloc.class,
                            method: call.method,
                        });
                    }
                }
            }
        }

        if !changed {
            break;
        }
    }

    let mut typeflow: BTreeSet<(ClassId, VarId)> = BTreeSet::new();
    for (i, alloc) in ctx.index.alloc_sites.iter().enumerate() {
        for v in 0..n {
            if order.contains(&(n + i as u32, v)) {
                typeflow.insert((alloc.class, VarId(v)));
            }
        }
    }

    NaiveTfa {
        order: order
            .into_iter()
            .filter(|&(a, b)| a < n && b < n)
            .map(|(a, b)| (VarId(a), VarId(b)))
            .collect(),
        fieldaccess: fld
            .into_iter()
            .filter(|&(a, _, b)| a < n && b < n)
            .map(|(a, f, b)| (VarId(a), f, VarId(b)))
            .collect(),
        typeflow,
        callgraph,
        diagnostics,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NaivePta {
    pub env: BTreeMap<VarId, BTreeSet<u32>>,
    pub heap: BTreeMap<(u32, FieldId), BTreeSet<u32>>,
    pub callgraph: BTreeSet<(SiteKey, Target)>,
    pub diagnostics: BTreeSet<ResolutionFailure>,
}

/// Naive evaluation of the points-to constraints.
pub fn naive_pta(ctx: &ProgramCtx) -> NaivePta {
    let n = ctx.var_count() as u32;
    let mut env: BTreeMap<u32, BTreeSet<u32>> = (0..n).map(|v| (v, BTreeSet::new())).collect();
    let mut heap: BTreeMap<(u32, FieldId), BTreeSet<u32>> = BTreeMap::new();
    let mut callgraph: BTreeSet<(SiteKey, Target)> = BTreeSet::new();
    let mut diagnostics: BTreeSet<ResolutionFailure> = BTreeSet::new();

    loop {
        let mut changed = false;

        for (i, alloc) in ctx.index.alloc_sites.iter().enumerate() {
            changed |= env.get_mut(&alloc.var.0).unwrap().insert(i as u32);
        }
        let flow = |env: &mut BTreeMap<u32, BTreeSet<u32>>, from: u32, to: u32| -> bool {
            let objs = env[&from].clone();
            let target = env.get_mut(&to).unwrap();
            let before = target.len();
            target.extend(objs);
            target.len() > before
        };
        for &(source, target) in &ctx.index.copies {
            changed |= flow(&mut env, source.0, target.0);
        }
        for &(ret, slot) in &ctx.index.return_seeds {
            changed |= flow(&mut env, ret.0, slot.0);
        }
        for load in &ctx.index.loads {
            for o in env[&load.base.0].clone() {
                if let Some(cell) = heap.get(&(o, load.field)) {
                    let cell = cell.clone();
                    let target = env.get_mut(&load.target.0).unwrap();
                    let before = target.len();
                    target.extend(cell);
                    changed |= target.len() > before;
                }
            }
        }
        for store in &ctx.index.stores {
            for o in env[&store.base.0].clone() {
                let source = env[&store.source.0].clone();
                let cell = heap.entry((o, store.field)).or_default();
                let before = cell.len();
                cell.extend(source);
                changed |= cell.len() > before;
            }
        }
        for call in &ctx.index.call_sites {
            for o in env[&call.receiver.0].clone() {
                let class = ctx.index.alloc_sites[o as usize].class;
                match ctx.table.dispatch(class, call.method) {
                    Some(defining) => {
                        let scope = ctx.vars.method_scope(defining, call.method).unwrap();
                        let info = ctx.vars.scope(scope);
                        changed |= flow(&mut env, call.arg.0, info.param.unwrap().0);
                        changed |= env.get_mut(&info.this.unwrap().0).unwrap().insert(o);
                        changed |= flow(&mut env, info.return_slot.unwrap().0, call.target.0);
                        changed |= callgraph
                            .insert((call.key, Target { class: defining, method: call.method }));
                    }
                    None => {
                        changed |= diagnostics.insert(ResolutionFailure {
                            site: call.key,
                            class,
                            method: call.method,
                        });
                    }
                }
            }
        }

        if !changed {
            break;
        }
    }

    NaivePta {
        env: env.into_iter().map(|(v, s)| (VarId(v), s)).collect(),
        heap: heap.into_iter().filter(|(_, s)| !s.is_empty()).collect(),
        callgraph,
        diagnostics,
    }
}

/// Asserts exact agreement between the worklist engines and the oracles on
/// all relations, the call graph, and the diagnostics.
pub fn assert_engines_match_oracles(ctx: &ProgramCtx, label: &str) {
    let tfa = typeflow::tfa::tfa_fixpoint(ctx);
    let oracle = naive_tfa(ctx);
    assert_eq!(tfa.store.order, oracle.order, "{label}: order closure");
    assert_eq!(tfa.store.fieldaccess, oracle.fieldaccess, "{label}: fieldaccess");
    assert_eq!(tfa.store.typeflow, oracle.typeflow, "{label}: typeflow");
    assert_eq!(
        tfa.callgraph.edges.iter().copied().collect::<BTreeSet<_>>(),
        oracle.callgraph,
        "{label}: tfa call graph"
    );
    assert_eq!(
        tfa.diagnostics.iter().copied().collect::<BTreeSet<_>>(),
        oracle.diagnostics,
        "{label}: tfa diagnostics"
    );

    let pta = typeflow::pta::pta_fixpoint(ctx);
    let oracle = naive_pta(ctx);
    for (v, sites) in &oracle.env {
        let engine: BTreeSet<u32> =
            pta.points_to(*v).unwrap().iter().map(|s| s.0).collect();
        assert_eq!(&engine, sites, "{label}: points-to of {v:?}");
    }
    let engine_heap: BTreeMap<(u32, FieldId), BTreeSet<u32>> = pta
        .heap
        .iter()
        .map(|((o, f), s)| ((o.0, *f), s.iter().map(|a| a.0).collect()))
        .collect();
    assert_eq!(engine_heap, oracle.heap, "{label}: heap");
    assert_eq!(
        pta.callgraph.edges.iter().copied().collect::<BTreeSet<_>>(),
        oracle.callgraph,
        "{label}: pta call graph"
    );
    assert_eq!(
        pta.diagnostics.iter().copied().collect::<BTreeSet<_>>(),
        oracle.diagnostics,
        "{label}: pta diagnostics"
    );
}
