//! Cost-based query plan generation.
//!
//! A plan is a rooted spanning tree over one conjunctive pattern. The root is
//! the node with the smallest estimated instance count; the tree is grown
//! greedily by the frontier edge with the least incremental fan-out estimate,
//! then listed in breadth-first order. Query edges left out of the tree close
//! cycles and are verified as filters once both endpoints are bound.

use std::collections::BTreeMap;
use std::fmt;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::query::{Predicate, QnodeId, QueryGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanEdge {
    pub parent: QnodeId,
    pub child: QnodeId,
    /// Index into the disjunct's `qedges`.
    pub qedge_idx: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    /// Index of the disjunct this plan evaluates.
    pub disjunct: usize,
    pub start_qnode: QnodeId,
    /// Spanning-tree edges in breadth-first order from the start node.
    pub plan_edges: Vec<PlanEdge>,
    /// Cycle-closing query edges (indices into `qedges`), checked when both
    /// endpoints are bound.
    pub non_tree_edges: Vec<usize>,
    pub est_cost: f64,
    /// Longest root-to-leaf edge count of the tree.
    pub max_path_length: usize,
}

impl fmt::Display for QueryPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "plan disjunct={} start={} cost={:.3} max_path={}",
            self.disjunct, self.start_qnode, self.est_cost, self.max_path_length
        )?;
        for (i, pe) in self.plan_edges.iter().enumerate() {
            writeln!(f, "  edge {i}: {} -> {} (qedge {})", pe.parent, pe.child, pe.qedge_idx)?;
        }
        for idx in &self.non_tree_edges {
            writeln!(f, "  check qedge {idx}")?;
        }
        Ok(())
    }
}

/// Estimated number of vertices matching a node predicate, from the catalog.
fn estimate_predicate(pred: &Predicate, cat: &Catalog) -> f64 {
    match pred {
        Predicate::Exact(l) => cat.instance_count(l) as f64,
        Predicate::Wildcard => cat.vertex_count() as f64,
        _ => cat
            .labels()
            .filter(|(l, _)| pred.matches(l))
            .map(|(_, c)| c as f64)
            .sum(),
    }
}

/// Ranks the pattern's nodes by estimated instance count, ascending. Wildcard
/// nodes always rank last; remaining ties go to the lowest node id.
pub fn estimate_start(qg: &QueryGraph, cat: &Catalog) -> Vec<(QnodeId, f64)> {
    let mut ranked: Vec<(QnodeId, f64)> = qg
        .qnodes
        .iter()
        .map(|(&id, pred)| (id, estimate_predicate(pred, cat)))
        .collect();
    ranked.sort_by(|a, b| {
        let wild = |id: QnodeId| matches!(qg.node(id), Predicate::Wildcard);
        (wild(a.0), a.1, a.0)
            .partial_cmp(&(wild(b.0), b.1, b.0))
            .expect("estimates are finite")
    });
    ranked
}

/// Generates the minimum-cost plan for one connected pattern. Deterministic
/// for fixed inputs.
pub fn generate_plan(disjunct: usize, qg: &QueryGraph, cat: &Catalog) -> Result<QueryPlan> {
    if qg.qnodes.is_empty() {
        return Err(Error::Invalid("pattern has no query nodes".into()));
    }
    let ranked = estimate_start(qg, cat);
    let (start, start_est) = ranked[0];

    let mut in_tree: BTreeMap<QnodeId, f64> = BTreeMap::new();
    in_tree.insert(start, start_est.max(1.0));
    let mut chosen: Vec<PlanEdge> = Vec::new();
    let mut used_edges = vec![false; qg.qedges.len()];
    let mut est_cost = 0.0;

    while in_tree.len() < qg.qnodes.len() {
        // Frontier: unused query edges with exactly one endpoint in the tree.
        let mut best: Option<(f64, QnodeId, QnodeId, usize)> = None;
        for (idx, qe) in qg.qedges.iter().enumerate() {
            if used_edges[idx] {
                continue;
            }
            let (parent, child) = match (in_tree.contains_key(&qe.qsrc), in_tree.contains_key(&qe.qdst)) {
                (true, false) => (qe.qsrc, qe.qdst),
                (false, true) => (qe.qdst, qe.qsrc),
                _ => continue,
            };
            let fanout = triple_fanout(qg, cat, parent, child, idx);
            let inc = in_tree[&parent] * fanout;
            let cand = (inc, parent, child, idx);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        }
        let (inc, parent, child, idx) = best
            .ok_or_else(|| Error::Invalid("query pattern must be connected".to_string()))?;
        used_edges[idx] = true;
        est_cost += inc;
        in_tree.insert(child, inc.max(1.0));
        chosen.push(PlanEdge {
            parent,
            child,
            qedge_idx: idx,
        });
    }

    let non_tree_edges: Vec<usize> = (0..qg.qedges.len()).filter(|&i| !used_edges[i]).collect();

    // Re-list the chosen tree edges in breadth-first order from the start.
    let mut children: BTreeMap<QnodeId, Vec<PlanEdge>> = BTreeMap::new();
    for pe in &chosen {
        children.entry(pe.parent).or_default().push(*pe);
    }
    let mut plan_edges = Vec::with_capacity(chosen.len());
    let mut depth: BTreeMap<QnodeId, usize> = BTreeMap::new();
    depth.insert(start, 0);
    let mut queue = std::collections::VecDeque::from([start]);
    let mut max_path_length = 0;
    while let Some(node) = queue.pop_front() {
        if let Some(kids) = children.get(&node) {
            for pe in kids {
                let d = depth[&node] + 1;
                depth.insert(pe.child, d);
                max_path_length = max_path_length.max(d);
                plan_edges.push(*pe);
                queue.push_back(pe.child);
            }
        }
    }

    Ok(QueryPlan {
        disjunct,
        start_qnode: start,
        plan_edges,
        non_tree_edges,
        est_cost,
        max_path_length,
    })
}

/// Average fan-out for expanding `parent -> child` over a query edge, from
/// catalog triples. Known only when all three labels are exact; otherwise the
/// triple is missing and costed as 1.
fn triple_fanout(
    qg: &QueryGraph,
    cat: &Catalog,
    parent: QnodeId,
    child: QnodeId,
    qedge_idx: usize,
) -> f64 {
    let (Predicate::Exact(pl), Predicate::Exact(el), Predicate::Exact(cl)) = (
        qg.node(parent),
        &qg.qedges[qedge_idx].pred,
        qg.node(child),
    ) else {
        return 1.0;
    };
    cat.avg_connection(pl, el, cl).unwrap_or(1.0)
}

/// Plans for every disjunct of a query.
pub fn plan_query(query: &crate::query::Query, cat: &Catalog) -> Result<Vec<QueryPlan>> {
    query
        .disjuncts
        .iter()
        .enumerate()
        .map(|(i, qg)| generate_plan(i, qg, cat))
        .collect()
}
