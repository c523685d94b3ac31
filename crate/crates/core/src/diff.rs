//! Differential checking across analyses: the type-flow/points-to
//! equivalence, call graph comparison, and per-program statistics.

use std::collections::BTreeSet;
use std::time::Instant;

use thiserror::Error;

use crate::ast::Program;
use crate::callgraph::CallGraph;
use crate::classic::{cha_callgraph, rta_callgraph, vta_callgraph, vta_propagate, ChaOutcome, VtaGraph};
use crate::index::ProgramCtx;
use crate::minimize::{bisim_minimize, Partition};
use crate::names::ClassId;
use crate::pta::{pta_fixpoint, PtaResult};
use crate::tfa::{seed_base_relations, tfa_fixpoint, tfa_fixpoint_with, TfaOptions, TfaResult};
use crate::vars::VarId;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("results come from different programs (fingerprints {left:#x} vs {right:#x})")]
    ProgramMismatch { left: u64, right: u64 },
}

/// One disagreeing variable: classes seen by exactly one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub var: VarId,
    pub tfa_only: BTreeSet<ClassId>,
    pub pta_only: BTreeSet<ClassId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub ok: bool,
    pub mismatches: Vec<Mismatch>,
    /// (typeflow, order, fieldaccess) sizes at the type-flow fixpoint.
    pub tfa_relation_sizes: (usize, usize, usize),
    /// (environment entries, heap entries) on the points-to side.
    pub pta_sizes: (usize, usize),
    pub tfa_call_edges: usize,
    pub pta_call_edges: usize,
}

/// Compares, per variable, the reaching-type set of the type-flow analysis
/// with the class projection of the points-to result.
pub fn check_theorem1(tfa: &TfaResult, pta: &PtaResult) -> Result<EquivalenceReport, DiffError> {
    if tfa.fingerprint != pta.fingerprint {
        return Err(DiffError::ProgramMismatch { left: tfa.fingerprint, right: pta.fingerprint });
    }
    let mut mismatches = Vec::new();
    for v in 0..tfa.var_count() as u32 {
        let v = VarId(v);
        let reach = tfa.reaching_types(v).expect("var in range");
        let proj = pta.class_projection(v).expect("var in range");
        if reach != &proj {
            mismatches.push(Mismatch {
                var: v,
                tfa_only: reach.difference(&proj).copied().collect(),
                pta_only: proj.difference(reach).copied().collect(),
            });
        }
    }
    Ok(EquivalenceReport {
        ok: mismatches.is_empty(),
        mismatches,
        tfa_relation_sizes: tfa.store.counts(),
        pta_sizes: (
            pta.env.iter().map(|s| s.len()).sum(),
            pta.heap.values().map(|s| s.len()).sum(),
        ),
        tfa_call_edges: tfa.callgraph.len(),
        pta_call_edges: pta.callgraph.len(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraphDiff {
    pub only_left: CallGraph,
    pub only_right: CallGraph,
    pub shared: CallGraph,
}

pub fn compare_callgraphs(left: &CallGraph, right: &CallGraph) -> Result<CallGraphDiff, DiffError> {
    if left.fingerprint != right.fingerprint {
        return Err(DiffError::ProgramMismatch {
            left: left.fingerprint,
            right: right.fingerprint,
        });
    }
    let mut diff = CallGraphDiff {
        only_left: CallGraph::new(left.fingerprint),
        only_right: CallGraph::new(left.fingerprint),
        shared: CallGraph::new(left.fingerprint),
    };
    for &edge in &left.edges {
        if right.edges.contains(&edge) {
            diff.shared.edges.insert(edge);
        } else {
            diff.only_left.edges.insert(edge);
        }
    }
    for &edge in &right.edges {
        if !left.edges.contains(&edge) {
            diff.only_right.edges.insert(edge);
        }
    }
    Ok(diff)
}

/// Everything the reporting layer needs from one program.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub tfa: TfaResult,
    pub pta: PtaResult,
    pub cha: ChaOutcome,
    pub rta: CallGraph,
    pub vta: VtaGraph,
    pub vta_cg: CallGraph,
    pub bisim: Partition,
    pub t_cha_ms: u64,
    pub t_tfa_ms: u64,
    pub t_pta_ms: u64,
}

/// Runs all five analyses plus bisimulation minimization. Timings are
/// collected only when `timed` is set; otherwise they stay zero so that
/// emitted reports are byte-stable across runs.
pub fn run_suite(ctx: &ProgramCtx, timed: bool) -> SuiteResult {
    let clock = |start: Instant| start.elapsed().as_millis() as u64;

    let start = Instant::now();
    let cha = cha_callgraph(ctx);
    let t_cha_ms = if timed { clock(start) } else { 0 };

    let start = Instant::now();
    let tfa = tfa_fixpoint(ctx);
    let t_tfa_ms = if timed { clock(start) } else { 0 };

    let start = Instant::now();
    let pta = pta_fixpoint(ctx);
    let t_pta_ms = if timed { clock(start) } else { 0 };

    let rta = rta_callgraph(ctx);
    let vta = vta_propagate(ctx, &cha.callgraph);
    let vta_cg = vta_callgraph(ctx, &vta);
    let bisim = bisim_minimize(&tfa);
    SuiteResult { tfa, pta, cha, rta, vta, vta_cg, bisim, t_cha_ms, t_tfa_ms, t_pta_ms }
}

/// One row of the per-program statistics table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsRow {
    pub name: String,
    /// Base relation sizes straight from the statements.
    pub r_tf: usize,
    pub r_ord: usize,
    pub r_fld: usize,
    /// Fixpoint relation sizes.
    pub fix_tf: usize,
    pub fix_ord: usize,
    pub fix_fld: usize,
    pub cs_cha: usize,
    pub cs_rta: usize,
    pub cs_vta: usize,
    pub cs_tfa: usize,
    pub cs_pta: usize,
    /// Variable count before and after bisimulation merging.
    pub nodes: usize,
    pub nodes_min: usize,
    pub t_cha_ms: u64,
    pub t_tfa_ms: u64,
    pub t_pta_ms: u64,
}

impl StatsRow {
    pub fn csv_header() -> &'static str {
        "name,r_tf,r_ord,r_fld,cs_cha,cs_rta,cs_vta,cs_tfa,cs_pta,t_cha_ms,t_tfa_ms,t_pta_ms,nodes,nodes_min,reduce"
    }

    pub fn reduction_ratio(&self) -> f64 {
        if self.nodes == 0 {
            return 0.0;
        }
        1.0 - self.nodes_min as f64 / self.nodes as f64
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.4}",
            self.name,
            self.r_tf,
            self.r_ord,
            self.r_fld,
            self.cs_cha,
            self.cs_rta,
            self.cs_vta,
            self.cs_tfa,
            self.cs_pta,
            self.t_cha_ms,
            self.t_tfa_ms,
            self.t_pta_ms,
            self.nodes,
            self.nodes_min,
            self.reduction_ratio(),
        )
    }
}

pub fn collect_stats(ctx: &ProgramCtx, name: &str, suite: &SuiteResult) -> StatsRow {
    let base = seed_base_relations(ctx);
    let (r_tf, r_ord, r_fld) = base.counts();
    let (fix_tf, fix_ord, fix_fld) = suite.tfa.store.counts();
    StatsRow {
        name: name.to_string(),
        r_tf,
        r_ord,
        r_fld,
        fix_tf,
        fix_ord,
        fix_fld,
        cs_cha: suite.cha.callgraph.len(),
        cs_rta: suite.rta.len(),
        cs_vta: suite.vta_cg.len(),
        cs_tfa: suite.tfa.callgraph.len(),
        cs_pta: suite.pta.callgraph.len(),
        nodes: suite.bisim.var_count(),
        nodes_min: suite.bisim.block_count(),
        t_cha_ms: suite.t_cha_ms,
        t_tfa_ms: suite.t_tfa_ms,
        t_pta_ms: suite.t_pta_ms,
    }
}

/// Greedy delta debugging: repeatedly drops single statements while the
/// type-flow/points-to mismatch persists. Declarations are kept, so every
/// intermediate program stays valid.
pub fn minimize_witness(program: &Program, opts: TfaOptions) -> Program {
    let mismatches = |p: &Program| -> bool {
        match ProgramCtx::build(p.clone()) {
            Ok(ctx) => {
                let tfa = tfa_fixpoint_with(&ctx, opts);
                let pta = pta_fixpoint(&ctx);
                check_theorem1(&tfa, &pta).map(|r| !r.ok).unwrap_or(false)
            }
            Err(_) => false,
        }
    };

    let mut current = program.clone();
    if !mismatches(&current) {
        return current;
    }
    loop {
        let mut improved = false;
        let locations = statement_locations(&current);
        for loc in locations {
            let candidate = remove_statement(&current, loc);
            if mismatches(&candidate) {
                current = candidate;
                improved = true;
                break;
            }
        }
        if !improved {
            return current;
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum StmtLoc {
    Entry(usize),
    Method { class: usize, method: usize, stmt: usize },
}

fn statement_locations(program: &Program) -> Vec<StmtLoc> {
    let mut locs: Vec<StmtLoc> = (0..program.entry_body.len()).map(StmtLoc::Entry).collect();
    for (ci, class) in program.classes.iter().enumerate() {
        for (mi, method) in class.methods.iter().enumerate() {
            for si in 0..method.body.len() {
                locs.push(StmtLoc::Method { class: ci, method: mi, stmt: si });
            }
        }
    }
    locs
}

fn remove_statement(program: &Program, loc: StmtLoc) -> Program {
    let mut next = program.clone();
    match loc {
        StmtLoc::Entry(i) => {
            next.entry_body.remove(i);
        }
        StmtLoc::Method { class, method, stmt } => {
            next.classes[class].methods[method].body.remove(stmt);
        }
    }
    next
}

/// Renders a program as numbered statements, for mismatch reports.
pub fn render_witness(program: &Program) -> String {
    let mut out = String::new();
    for (i, stmt) in program.entry_body.iter().enumerate() {
        out.push_str(&format!("  main[{i}]: {stmt}\n"));
    }
    for class in &program.classes {
        for method in &class.methods {
            for (i, stmt) in method.body.iter().enumerate() {
                out.push_str(&format!("  {}.{}[{i}]: {stmt}\n", class.name, method.name));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(src: &str) -> ProgramCtx {
        ProgramCtx::from_source(src).unwrap()
    }

    #[test]
    fn empty_program_is_vacuously_equivalent() {
        let ctx = ctx("main { }");
        let report = check_theorem1(&tfa_fixpoint(&ctx), &pta_fixpoint(&ctx)).unwrap();
        assert!(report.ok);
        assert!(report.mismatches.is_empty());
    }

    #[test]
    fn results_from_different_programs_are_rejected() {
        let a = ctx("main { }");
        let b = ctx("class A {} main { A x; x = new A(); }");
        let err = check_theorem1(&tfa_fixpoint(&a), &pta_fixpoint(&b)).unwrap_err();
        assert!(matches!(err, DiffError::ProgramMismatch { .. }));
    }

    #[test]
    fn callgraph_self_diff_is_empty() {
        let ctx = ctx(
            "class A { m(A p) { return this; } } main { A x; A r; x = new A(); r = x.m(x); }",
        );
        let cha = cha_callgraph(&ctx).callgraph;
        let diff = compare_callgraphs(&cha, &cha).unwrap();
        assert!(diff.only_left.is_empty());
        assert!(diff.only_right.is_empty());
        assert_eq!(diff.shared.len(), cha.len());
    }

    #[test]
    fn base_sizes_never_exceed_fixpoint_sizes() {
        let ctx = ctx(
            "class A { A f; } main { A x; A y; x = new A(); y = x; x.f = y; }",
        );
        let suite = run_suite(&ctx, false);
        let row = collect_stats(&ctx, "t", &suite);
        assert!(row.r_tf <= row.fix_tf);
        assert!(row.r_ord <= row.fix_ord);
        assert!(row.r_fld <= row.fix_fld);
    }

    #[test]
    fn empty_program_stats_are_zero() {
        let ctx = ctx("main { }");
        let suite = run_suite(&ctx, false);
        let row = collect_stats(&ctx, "empty", &suite);
        assert_eq!((row.r_tf, row.r_ord, row.r_fld), (0, 0, 0));
        assert_eq!(
            (row.cs_cha, row.cs_rta, row.cs_vta, row.cs_tfa, row.cs_pta),
            (0, 0, 0, 0, 0)
        );
    }

    #[test]
    fn injected_defect_produces_minimal_witness() {
        let src = "class A { A f; m(A p) { A r; r = this.f; return r; } }\
                   class B extends A {} class C extends A {}\
                   main { A x; B b; A y; C c; A z; \
                   x = new A(); b = new B(); y = new A(); c = new C(); \
                   x.f = b; y.f = c; z = x.m(x); }";
        let program = crate::parser::parse_program(src).unwrap();
        let opts = TfaOptions { disable_load_rule: true };
        let witness = minimize_witness(&program, opts);
        let total: usize = witness.entry_body.len()
            + witness.classes.iter().flat_map(|c| &c.methods).map(|m| m.body.len()).sum::<usize>();
        assert!(total < 8, "witness should shrink, got {total} statements");
        // The shrunken program still exhibits the mismatch.
        let wctx = ProgramCtx::build(witness).unwrap();
        let report =
            check_theorem1(&tfa_fixpoint_with(&wctx, opts), &pta_fixpoint(&wctx)).unwrap();
        assert!(!report.ok);
    }
}
