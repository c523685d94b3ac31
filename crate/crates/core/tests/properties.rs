//! Closure and structural invariants checked over generated corpora.

mod common;

use std::collections::BTreeSet;

use typeflow::ast::Stmt;
use typeflow::generator::gen_program;
use typeflow::index::ProgramCtx;
use typeflow::minimize::{bisim_minimize, quotient};
use typeflow::parser::parse_program;
use typeflow::pta::{pta_fixpoint, pta_fixpoint_with, HeapAbstraction};
use typeflow::tfa::{tfa_fixpoint, TfaResult};
use typeflow::VarId;

use common::{corpus_config, generated_ctx, oracle_config};

/// Applies every closure rule once and asserts nothing new appears: the
/// published fixpoint is already a model of all rules.
fn assert_fixpoint_closed(ctx: &ProgramCtx, r: &TfaResult) {
    let order = &r.store.order;
    let fld = &r.store.fieldaccess;

    // Reflexivity and transitivity.
    for v in 0..ctx.var_count() as u32 {
        assert!(order.contains(&(VarId(v), VarId(v))), "reflexive pair missing");
    }
    for &(a, b) in order {
        for &(c, d) in order {
            if b == c {
                assert!(order.contains(&(a, d)), "transitivity violated: {a:?} {d:?}");
            }
        }
    }

    // Typeflow closed under the order.
    for &(class, x) in &r.store.typeflow {
        for &(p, q) in order {
            if p == x {
                assert!(
                    r.store.typeflow.contains(&(class, q)),
                    "typeflow not closed under order"
                );
            }
        }
    }

    // Base stores joined with common lower bounds stay inside fieldaccess.
    for store in &ctx.index.stores {
        for &(z, x0) in order {
            if x0 != store.base {
                continue;
            }
            for &(z2, y) in order {
                if z2 == z {
                    assert!(
                        fld.contains(&(y, store.field, store.source)),
                        "field rule not closed at {y:?}"
                    );
                }
            }
        }
    }

    // Loads: every derived field tuple at a load base induces the ordering.
    for load in &ctx.index.loads {
        for &(base, field, source) in fld {
            if base == load.base && field == load.field {
                assert!(
                    order.contains(&(source, load.target)),
                    "load rule not closed at {:?}",
                    load.target
                );
            }
        }
    }

    // Base facts are contained in the fixpoint.
    for &(source, target) in &ctx.index.copies {
        assert!(order.contains(&(source, target)));
    }
    for store in &ctx.index.stores {
        assert!(fld.contains(&(store.base, store.field, store.source)));
    }
}

#[test]
fn fixpoint_is_closed_and_idempotent() {
    for seed in 100..140 {
        let ctx = generated_ctx(&oracle_config(seed));
        let r = tfa_fixpoint(&ctx);
        assert_fixpoint_closed(&ctx, &r);
        // Determinism: a second run reproduces the result exactly.
        let again = tfa_fixpoint(&ctx);
        assert_eq!(r.store, again.store, "seed {seed}");
        assert_eq!(r.callgraph, again.callgraph, "seed {seed}");
        assert_eq!(r.iterations, again.iterations, "seed {seed}");
    }
}

#[test]
fn adding_a_statement_never_shrinks_relations() {
    for seed in 200..240 {
        let config = oracle_config(seed);
        let base_program = gen_program(&config);
        if base_program.entry_locals.len() < 2 {
            continue;
        }
        let ctx = ProgramCtx::build(base_program.clone()).unwrap();
        let before = tfa_fixpoint(&ctx);

        // Append one more copy between the first two entry locals.
        let mut extended = base_program;
        extended.entry_body.push(Stmt::Copy {
            target: extended.entry_locals[0].name.clone(),
            source: extended.entry_locals[1].name.clone(),
        });
        let ctx2 = ProgramCtx::build(extended).unwrap();
        let after = tfa_fixpoint(&ctx2);

        assert!(before.store.typeflow.is_subset(&after.store.typeflow), "seed {seed}");
        assert!(before.store.order.is_subset(&after.store.order), "seed {seed}");
        assert!(
            before.store.fieldaccess.is_subset(&after.store.fieldaccess),
            "seed {seed}"
        );
        assert!(before.callgraph.is_subset_of(&after.callgraph), "seed {seed}");
    }
}

#[test]
fn relation_sizes_stay_within_the_finite_bounds() {
    for seed in 300..330 {
        let ctx = generated_ctx(&corpus_config(seed));
        let r = tfa_fixpoint(&ctx);
        let v = ctx.var_count();
        let c = ctx.table.class_count();
        let f = ctx.names.fields.len();
        assert!(r.store.order.len() <= v * v, "seed {seed}");
        assert!(r.store.typeflow.len() <= c * v, "seed {seed}");
        assert!(r.store.fieldaccess.len() <= v * v * f.max(1), "seed {seed}");
    }
}

#[test]
fn quotient_preserves_reach_and_admits_no_further_merging() {
    for seed in 400..440 {
        let ctx = generated_ctx(&oracle_config(seed));
        let r = tfa_fixpoint(&ctx);
        let partition = bisim_minimize(&r);
        let q = quotient(&r, &partition).unwrap();

        for v in 0..ctx.var_count() as u32 {
            let v = VarId(v);
            assert_eq!(
                r.reaching_types(v),
                q.reaching_types(v),
                "seed {seed}: reach changed for {}",
                ctx.vars.render(v, &ctx.names)
            );
        }

        // Minimizing the quotient keeps distinct representatives apart.
        let again = bisim_minimize(&q);
        let reps: Vec<VarId> = partition.blocks().iter().map(|b| b[0]).collect();
        for (i, &a) in reps.iter().enumerate() {
            for &b in &reps[i + 1..] {
                assert!(
                    !again.same_block(a, b),
                    "seed {seed}: representatives {a:?} and {b:?} merged again"
                );
            }
        }
    }
}

#[test]
fn this_holds_only_dispatching_sites() {
    for seed in 500..540 {
        let ctx = generated_ctx(&corpus_config(seed));
        let pta = pta_fixpoint(&ctx);
        for scope_id in 0..ctx.vars.scope_count() as u32 {
            let scope = ctx.vars.scope(typeflow::ScopeId(scope_id));
            let (Some(this), typeflow::vars::ScopeKind::Method { class, method }) =
                (scope.this, &scope.kind)
            else {
                continue;
            };
            for &site in pta.points_to(this).unwrap() {
                let site_class = pta.class_of(site);
                assert_eq!(
                    ctx.table.dispatch(site_class, *method),
                    Some(*class),
                    "seed {seed}: object in `this` does not dispatch here"
                );
            }
        }
    }
}

#[test]
fn merging_sites_by_class_never_shrinks_projections() {
    for seed in 600..640 {
        let ctx = generated_ctx(&corpus_config(seed));
        let per_site = pta_fixpoint(&ctx);
        let merged = pta_fixpoint_with(&ctx, HeapAbstraction::PerClass);
        for v in 0..ctx.var_count() as u32 {
            let v = VarId(v);
            let fine = per_site.class_projection(v).unwrap();
            let coarse = merged.class_projection(v).unwrap();
            assert!(
                fine.is_subset(&coarse),
                "seed {seed}: class merging dropped classes at {}",
                ctx.vars.render(v, &ctx.names)
            );
        }
        assert!(per_site.callgraph.is_subset_of(&merged.callgraph), "seed {seed}");
    }
}

#[test]
fn parse_print_parse_is_identity() {
    for seed in 700..800 {
        let program = gen_program(&corpus_config(seed));
        let text = program.to_source();
        let once = parse_program(&text).unwrap();
        let twice = parse_program(&once.to_source()).unwrap();
        assert_eq!(once, twice, "seed {seed}");
        assert_eq!(once, program, "seed {seed}");
    }
}

#[test]
fn subclass_relation_matches_extends_reachability() {
    for seed in 800..830 {
        let ctx = generated_ctx(&corpus_config(seed));
        let n = ctx.table.class_count() as u32;
        for a in 0..n {
            for b in 0..n {
                let (a, b) = (typeflow::ClassId(a), typeflow::ClassId(b));
                // Walk the parent chain by hand.
                let mut cur = Some(a);
                let mut reachable = false;
                while let Some(c) = cur {
                    if c == b {
                        reachable = true;
                        break;
                    }
                    cur = ctx.table.parent[c.0 as usize];
                }
                assert_eq!(ctx.table.is_subclass(a, b), reachable);
                assert_eq!(ctx.table.subclasses(b).contains(&a), reachable);
            }
        }
    }
}

#[test]
fn reaching_types_equal_projection_of_points_to() {
    // The per-variable agreement that the equivalence check relies on, in
    // both set directions, stated directly against the two result types.
    for seed in 900..950 {
        let ctx = generated_ctx(&corpus_config(seed));
        let tfa = tfa_fixpoint(&ctx);
        let pta = pta_fixpoint(&ctx);
        for v in 0..ctx.var_count() as u32 {
            let v = VarId(v);
            let reach: &BTreeSet<_> = tfa.reaching_types(v).unwrap();
            let proj = pta.class_projection(v).unwrap();
            assert_eq!(reach, &proj, "seed {seed} at {}", ctx.vars.render(v, &ctx.names));
        }
    }
}
