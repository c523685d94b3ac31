//! Storage reduction over a completed type-flow result: alias-pair collapse
//! via strongly connected components of the order edges, and the coarser
//! bisimulation minimization of the variable graph, with quotient
//! construction.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::names::{ClassId, FieldId};
use crate::tfa::{RelationStore, TfaResult};
use crate::vars::VarId;

/// Disjoint blocks covering every variable. Blocks are sorted by their
/// representative (smallest member), members sorted within each block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<VarId>>,
    block_of: Vec<u32>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("partitions cover different variable sets ({left} vs {right} variables)")]
    VarSetMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum QuotientError {
    #[error("partition is not bisimulation-homogeneous: variables {0:?} and {1:?} differ")]
    NotHomogeneous(VarId, VarId),
}

impl Partition {
    fn from_blocks(mut blocks: Vec<Vec<VarId>>, var_count: usize) -> Partition {
        for block in &mut blocks {
            block.sort();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut block_of = vec![0u32; var_count];
        for (i, block) in blocks.iter().enumerate() {
            for &v in block {
                block_of[v.0 as usize] = i as u32;
            }
        }
        Partition { blocks, block_of }
    }

    pub fn blocks(&self) -> &[Vec<VarId>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn var_count(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, v: VarId) -> usize {
        self.block_of[v.0 as usize] as usize
    }

    pub fn representative(&self, v: VarId) -> VarId {
        self.blocks[self.block_of(v)][0]
    }

    pub fn same_block(&self, a: VarId, b: VarId) -> bool {
        self.block_of(a) == self.block_of(b)
    }

    /// `1 - blocks/variables`: the fraction of nodes saved by merging.
    pub fn reduction_ratio(&self) -> f64 {
        if self.block_of.is_empty() {
            return 0.0;
        }
        1.0 - self.block_count() as f64 / self.var_count() as f64
    }

    pub fn is_singleton(&self) -> bool {
        self.block_count() == self.var_count()
    }
}

/// Alias pairs: blocks are the strongly connected components of the order
/// edge graph, so two variables share a block exactly when each is below the
/// other in the closure.
pub fn alias_scc(result: &TfaResult) -> Partition {
    let n = result.var_count();
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(a, b) in &result.order_edges {
        succ[a.0 as usize].push(b.0);
    }
    let components = tarjan(n, &succ);
    Partition::from_blocks(
        components
            .into_iter()
            .map(|c| c.into_iter().map(VarId).collect())
            .collect(),
        n,
    )
}

/// Iterative Tarjan; returns the list of components.
fn tarjan(n: usize, succ: &[Vec<u32>]) -> Vec<Vec<u32>> {
    const UNVISITED: u32 = u32::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut components = Vec::new();

    // Explicit DFS frame: (vertex, next successor position).
    let mut frames: Vec<(u32, usize)> = Vec::new();
    for start in 0..n as u32 {
        if index[start as usize] != UNVISITED {
            continue;
        }
        frames.push((start, 0));
        index[start as usize] = next_index;
        lowlink[start as usize] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start as usize] = true;

        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            if *pos < succ[v as usize].len() {
                let w = succ[v as usize][*pos];
                *pos += 1;
                if index[w as usize] == UNVISITED {
                    index[w as usize] = next_index;
                    lowlink[w as usize] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    frames.push((w, 0));
                } else if on_stack[w as usize] {
                    lowlink[v as usize] = lowlink[v as usize].min(index[w as usize]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    lowlink[parent as usize] = lowlink[parent as usize].min(lowlink[v as usize]);
                }
                if lowlink[v as usize] == index[v as usize] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("component members on stack");
                        on_stack[w as usize] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(component);
                }
            }
        }
    }
    components
}

/// Coarsest partition in which block mates have identical reaching-type sets
/// and matching field transitions into equal blocks. Partition refinement in
/// the style of Kanellakis and Smolka: variables are states, the field
/// access relation is the labelled transition relation, and the initial
/// partition groups states by reaching-type set.
pub fn bisim_minimize(result: &TfaResult) -> Partition {
    let n = result.var_count();
    if n == 0 {
        return Partition::from_blocks(Vec::new(), 0);
    }

    let mut by_label: BTreeMap<&BTreeSet<ClassId>, Vec<VarId>> = BTreeMap::new();
    for v in 0..n as u32 {
        let v = VarId(v);
        by_label
            .entry(result.reaching_types(v).expect("var in range"))
            .or_default()
            .push(v);
    }
    let mut blocks: Vec<Vec<VarId>> = by_label.into_values().collect();

    // Successors per (variable, field) over the derived field access
    // relation.
    let mut succ: HashMap<(u32, FieldId), Vec<u32>> = HashMap::new();
    let mut fields: BTreeSet<FieldId> = BTreeSet::new();
    for &(base, field, source) in &result.store.fieldaccess {
        succ.entry((base.0, field)).or_default().push(source.0);
        fields.insert(field);
    }

    // Split every block against every (field, splitter block) pair until a
    // full pass is stable. Splitter order is deterministic: fields in id
    // order, splitters by current position.
    loop {
        let mut changed = false;
        for &field in &fields {
            let mut si = 0;
            while si < blocks.len() {
                let splitter: BTreeSet<u32> = blocks[si].iter().map(|v| v.0).collect();
                let mut bi = 0;
                while bi < blocks.len() {
                    if blocks[bi].len() > 1 {
                        let (hits, misses): (Vec<VarId>, Vec<VarId>) =
                            blocks[bi].iter().partition(|v| {
                                succ.get(&(v.0, field))
                                    .map(|targets| targets.iter().any(|t| splitter.contains(t)))
                                    .unwrap_or(false)
                            });
                        if !hits.is_empty() && !misses.is_empty() {
                            blocks[bi] = hits;
                            blocks.push(misses);
                            changed = true;
                        }
                    }
                    bi += 1;
                }
                si += 1;
            }
        }
        if !changed {
            break;
        }
    }
    Partition::from_blocks(blocks, n)
}

/// Re-keys every relation on block representatives. The partition must
/// refine the bisimulation computed from `result`; otherwise the offending
/// pair is reported and nothing is built.
pub fn quotient(result: &TfaResult, partition: &Partition) -> Result<TfaResult, QuotientError> {
    let bisim = bisim_minimize(result);
    for block in partition.blocks() {
        let first = block[0];
        for &v in &block[1..] {
            if !bisim.same_block(first, v) {
                return Err(QuotientError::NotHomogeneous(first, v));
            }
        }
    }

    let rep = |v: VarId| partition.representative(v);
    let mut store = RelationStore::default();
    for &(c, v) in &result.store.typeflow {
        store.typeflow.insert((c, rep(v)));
    }
    for &(a, b) in &result.store.order {
        store.order.insert((rep(a), rep(b)));
    }
    for &(a, f, b) in &result.store.fieldaccess {
        store.fieldaccess.insert((rep(a), f, rep(b)));
    }
    let order_edges: BTreeSet<(VarId, VarId)> =
        result.order_edges.iter().map(|&(a, b)| (rep(a), rep(b))).filter(|(a, b)| a != b).collect();

    let mut reaching: Vec<BTreeSet<ClassId>> = vec![BTreeSet::new(); result.var_count()];
    for v in 0..result.var_count() as u32 {
        let v = VarId(v);
        reaching[v.0 as usize] = result
            .reaching_types(rep(v))
            .expect("representative in range")
            .clone();
    }

    Ok(TfaResult {
        store,
        order_edges,
        callgraph: result.callgraph.clone(),
        diagnostics: result.diagnostics.clone(),
        iterations: result.iterations,
        fingerprint: result.fingerprint,
        reaching,
    })
}

/// True iff every block of `finer` sits inside one block of `coarser`; used
/// to check that alias pairs always refine bisimilarity.
pub fn check_refinement(finer: &Partition, coarser: &Partition) -> Result<bool, PartitionError> {
    if finer.var_count() != coarser.var_count() {
        return Err(PartitionError::VarSetMismatch {
            left: finer.var_count(),
            right: coarser.var_count(),
        });
    }
    for block in finer.blocks() {
        let first = coarser.block_of(block[0]);
        if block.iter().any(|&v| coarser.block_of(v) != first) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ProgramCtx;
    use crate::tfa::tfa_fixpoint;
    use crate::vars::ENTRY_SCOPE;

    fn result_for(src: &str) -> (ProgramCtx, TfaResult) {
        let ctx = ProgramCtx::from_source(src).unwrap();
        let r = tfa_fixpoint(&ctx);
        (ctx, r)
    }

    #[test]
    fn mutual_copies_form_one_alias_block() {
        let (ctx, r) = result_for("class A {} main { A x; A y; x = y; y = x; }");
        let p = alias_scc(&r);
        let x = ctx.vars.lookup(ENTRY_SCOPE, "x").unwrap();
        let y = ctx.vars.lookup(ENTRY_SCOPE, "y").unwrap();
        assert!(p.same_block(x, y));
        assert_eq!(p.block_count(), 1);
    }

    #[test]
    fn copy_chain_stays_singleton() {
        let (_, r) = result_for("class A {} main { A x; A y; A z; y = x; z = y; }");
        let p = alias_scc(&r);
        assert!(p.is_singleton());
        assert_eq!(p.block_count(), 3);
    }

    #[test]
    fn alias_blocks_match_mutual_order() {
        let (_, r) = result_for(
            "class A {} main { A x; A y; A z; x = y; y = z; z = x; }",
        );
        let p = alias_scc(&r);
        for &(a, b) in &r.store.order {
            let mutual = r.store.order.contains(&(b, a));
            assert_eq!(p.same_block(a, b), mutual, "{a:?} {b:?}");
        }
    }

    #[test]
    fn same_label_no_transitions_merge() {
        let (ctx, r) =
            result_for("class A {} main { A u; A v; u = new A(); v = new A(); }");
        let p = bisim_minimize(&r);
        let u = ctx.vars.lookup(ENTRY_SCOPE, "u").unwrap();
        let v = ctx.vars.lookup(ENTRY_SCOPE, "v").unwrap();
        assert!(p.same_block(u, v));
    }

    #[test]
    fn field_transition_splits_same_label_block() {
        // u and v both reach {A}, but only u has an f-transition (to w of
        // reach {B}).
        let src = "class A { A f; } class B {} main { A u; A v; B w; \
                   u = new A(); v = new A(); w = new B(); u.f = w; }";
        let (ctx, r) = result_for(src);
        let p = bisim_minimize(&r);
        let u = ctx.vars.lookup(ENTRY_SCOPE, "u").unwrap();
        let v = ctx.vars.lookup(ENTRY_SCOPE, "v").unwrap();
        assert!(!p.same_block(u, v));
    }

    #[test]
    fn quotient_by_singleton_partition_is_identity() {
        let (_, r) = result_for("class A {} main { A x; A y; x = new A(); y = x; }");
        let singleton = Partition::from_blocks(
            (0..r.var_count() as u32).map(|v| vec![VarId(v)]).collect(),
            r.var_count(),
        );
        let q = quotient(&r, &singleton).unwrap();
        assert_eq!(q.store, r.store);
    }

    #[test]
    fn quotient_merges_and_preserves_reach() {
        let (ctx, r) =
            result_for("class A {} main { A u; A v; u = new A(); v = new A(); }");
        let p = bisim_minimize(&r);
        assert!(p.block_count() < r.var_count());
        let q = quotient(&r, &p).unwrap();
        for (v, _) in ctx.vars.iter() {
            assert_eq!(q.reaching_types(v), r.reaching_types(v));
        }
    }

    /// Full partition with `merged` as one block and singletons elsewhere.
    fn merge_two(var_count: usize, merged: (VarId, VarId)) -> Partition {
        let mut blocks = vec![vec![merged.0, merged.1]];
        for v in 0..var_count as u32 {
            let v = VarId(v);
            if v != merged.0 && v != merged.1 {
                blocks.push(vec![v]);
            }
        }
        Partition::from_blocks(blocks, var_count)
    }

    #[test]
    fn quotient_rejects_non_homogeneous_partition() {
        let src = "class A {} class B {} main { A x; B y; x = new A(); y = new B(); }";
        let (ctx, r) = result_for(src);
        let x = ctx.vars.lookup(ENTRY_SCOPE, "x").unwrap();
        let y = ctx.vars.lookup(ENTRY_SCOPE, "y").unwrap();
        let coarse = merge_two(r.var_count(), (x, y));
        assert!(matches!(quotient(&r, &coarse), Err(QuotientError::NotHomogeneous(..))));
    }

    #[test]
    fn refinement_check_accepts_identical_partitions() {
        let (_, r) = result_for("class A {} main { A x; A y; }");
        let p = alias_scc(&r);
        assert!(check_refinement(&p, &p).unwrap());
    }

    #[test]
    fn refinement_check_rejects_coarsened_left_side() {
        let src = "class A {} class B {} main { A x; B y; x = new A(); y = new B(); }";
        let (ctx, r) = result_for(src);
        let x = ctx.vars.lookup(ENTRY_SCOPE, "x").unwrap();
        let y = ctx.vars.lookup(ENTRY_SCOPE, "y").unwrap();
        let coarse = merge_two(r.var_count(), (x, y));
        let bisim = bisim_minimize(&r);
        assert!(!check_refinement(&coarse, &bisim).unwrap());
    }
}
