//! Text, DOT and JSON renderings of analysis results. Every emitter sorts
//! its lines, so output is byte-stable across runs.
//!
//! Line formats:
//!
//! * `TF <class> <varid>` / `ORD <varid> <varid>` / `FLD <varid> <field>
//!   <varid>` for the three type-flow relations (reflexive order pairs are
//!   omitted);
//! * `PTS <varid> <site>:<class>` / `HEAP <site>.<field> <site>` for
//!   points-to results;
//! * `CG <site> <class>.<method>` for call graphs;
//! * `BLOCK <representative> <member>*` for partitions.

use serde_json::{json, Value};

use crate::callgraph::CallGraph;
use crate::classic::{VtaGraph, VtaNode};
use crate::diff::EquivalenceReport;
use crate::index::{AllocId, ProgramCtx};
use crate::minimize::Partition;
use crate::pta::PtaResult;
use crate::tfa::TfaResult;

fn sorted(mut lines: Vec<String>) -> String {
    lines.sort();
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

fn render_site(ctx: &ProgramCtx, id: AllocId) -> String {
    ctx.index.alloc(id).key.render(&ctx.vars, &ctx.names)
}

pub fn dump_tfa(ctx: &ProgramCtx, result: &TfaResult) -> String {
    let mut lines = Vec::new();
    for &(class, var) in &result.store.typeflow {
        lines.push(format!(
            "TF\t{}\t{}",
            ctx.names.class_name(class),
            ctx.vars.render(var, &ctx.names)
        ));
    }
    for &(a, b) in &result.store.order {
        if a != b {
            lines.push(format!(
                "ORD\t{}\t{}",
                ctx.vars.render(a, &ctx.names),
                ctx.vars.render(b, &ctx.names)
            ));
        }
    }
    for &(base, field, source) in &result.store.fieldaccess {
        lines.push(format!(
            "FLD\t{}\t{}\t{}",
            ctx.vars.render(base, &ctx.names),
            ctx.names.field_name(field),
            ctx.vars.render(source, &ctx.names)
        ));
    }
    sorted(lines)
}

pub fn dump_pta(ctx: &ProgramCtx, result: &PtaResult) -> String {
    let mut lines = Vec::new();
    for (v, sites) in result.env.iter().enumerate() {
        let var = crate::vars::VarId(v as u32);
        for &site in sites {
            lines.push(format!(
                "PTS\t{}\t{}:{}",
                ctx.vars.render(var, &ctx.names),
                render_site(ctx, site),
                ctx.names.class_name(result.class_of(site))
            ));
        }
    }
    for ((site, field), contents) in &result.heap {
        for &target in contents {
            lines.push(format!(
                "HEAP\t{}.{}\t{}",
                render_site(ctx, *site),
                ctx.names.field_name(*field),
                render_site(ctx, target)
            ));
        }
    }
    sorted(lines)
}

pub fn dump_callgraph(ctx: &ProgramCtx, graph: &CallGraph) -> String {
    let lines = graph
        .edges
        .iter()
        .map(|(site, target)| {
            format!(
                "CG\t{}\t{}",
                site.render(&ctx.vars, &ctx.names),
                target.render(&ctx.names)
            )
        })
        .collect();
    sorted(lines)
}

pub fn dump_vta(ctx: &ProgramCtx, graph: &VtaGraph) -> String {
    let mut lines = Vec::new();
    for node in &graph.nodes {
        let rendered = render_vta_node(ctx, *node);
        for class in graph.reach(*node) {
            lines.push(format!("REACH\t{}\t{}", rendered, ctx.names.class_name(class)));
        }
    }
    sorted(lines)
}

fn render_vta_node(ctx: &ProgramCtx, node: VtaNode) -> String {
    match node {
        VtaNode::Var(v) => ctx.vars.render(v, &ctx.names),
        VtaNode::Field(class, field) => {
            format!("{}.{}", ctx.names.class_name(class), ctx.names.field_name(field))
        }
    }
}

pub fn dump_partition(ctx: &ProgramCtx, partition: &Partition) -> String {
    let lines = partition
        .blocks()
        .iter()
        .map(|block| {
            let members: Vec<String> =
                block.iter().map(|&v| ctx.vars.render(v, &ctx.names)).collect();
            format!("BLOCK\t{}", members.join("\t"))
        })
        .collect();
    sorted(lines)
}

/// Call graph in DOT: nodes are methods (and `main`), edges are call edges
/// labeled with their site.
pub fn callgraph_dot(ctx: &ProgramCtx, graph: &CallGraph) -> String {
    let mut nodes: Vec<String> = Vec::new();
    let mut edges: Vec<String> = Vec::new();
    for (site, target) in &graph.edges {
        let from = ctx.vars.render_scope(site.scope, &ctx.names);
        let to = target.render(&ctx.names);
        nodes.push(format!("    \"{from}\";"));
        nodes.push(format!("    \"{to}\";"));
        edges.push(format!(
            "    \"{from}\" -> \"{to}\" [label=\"{}\"];",
            site.render(&ctx.vars, &ctx.names)
        ));
    }
    nodes.sort();
    nodes.dedup();
    edges.sort();
    let mut out = String::from("digraph callgraph {\n");
    out.push_str(&nodes.join("\n"));
    if !nodes.is_empty() {
        out.push('\n');
    }
    out.push_str(&edges.join("\n"));
    if !edges.is_empty() {
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

pub fn callgraph_json(ctx: &ProgramCtx, graph: &CallGraph) -> Value {
    let edges: Vec<Value> = graph
        .edges
        .iter()
        .map(|(site, target)| {
            json!({
                "site": site.render(&ctx.vars, &ctx.names),
                "target": target.render(&ctx.names),
            })
        })
        .collect();
    json!({ "edges": edges })
}

pub fn tfa_json(ctx: &ProgramCtx, result: &TfaResult) -> Value {
    json!({
        "callgraph": callgraph_json(ctx, &result.callgraph),
        "typeflow": result.store.typeflow.iter().map(|&(c, v)| {
            json!([ctx.names.class_name(c), ctx.vars.render(v, &ctx.names)])
        }).collect::<Vec<_>>(),
        "order": result.store.order.iter().filter(|(a, b)| a != b).map(|&(a, b)| {
            json!([ctx.vars.render(a, &ctx.names), ctx.vars.render(b, &ctx.names)])
        }).collect::<Vec<_>>(),
        "fieldaccess": result.store.fieldaccess.iter().map(|&(x, f, y)| {
            json!([
                ctx.vars.render(x, &ctx.names),
                ctx.names.field_name(f),
                ctx.vars.render(y, &ctx.names),
            ])
        }).collect::<Vec<_>>(),
        "iterations": result.iterations,
    })
}

pub fn pta_json(ctx: &ProgramCtx, result: &PtaResult) -> Value {
    let env: Vec<Value> = result
        .env
        .iter()
        .enumerate()
        .filter(|(_, sites)| !sites.is_empty())
        .map(|(v, sites)| {
            json!({
                "var": ctx.vars.render(crate::vars::VarId(v as u32), &ctx.names),
                "sites": sites.iter().map(|&s| render_site(ctx, s)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let heap: Vec<Value> = result
        .heap
        .iter()
        .map(|((site, field), contents)| {
            json!({
                "cell": format!("{}.{}", render_site(ctx, *site), ctx.names.field_name(*field)),
                "sites": contents.iter().map(|&s| render_site(ctx, s)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "callgraph": callgraph_json(ctx, &result.callgraph),
        "env": env,
        "heap": heap,
    })
}

pub fn equivalence_json(ctx: &ProgramCtx, report: &EquivalenceReport) -> Value {
    json!({
        "ok": report.ok,
        "mismatches": report.mismatches.iter().map(|m| {
            json!({
                "var": ctx.vars.render(m.var, &ctx.names),
                "tfa_only": m.tfa_only.iter().map(|&c| ctx.names.class_name(c)).collect::<Vec<_>>(),
                "pta_only": m.pta_only.iter().map(|&c| ctx.names.class_name(c)).collect::<Vec<_>>(),
            })
        }).collect::<Vec<_>>(),
    })
}
