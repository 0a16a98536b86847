//! Partition-local expansion engine shared by all execution modes, plus the
//! whole-graph brute-force oracle.
//!
//! Expansion follows the plan tree breadth-first and is depth-complete within
//! a partition: every plan edge whose parent vertex is expandable here is
//! consumed before a continuation is emitted. Crossing a cut edge binds the
//! replicated boundary endpoint immediately (its label and home partition are
//! known); only expansion *from* that vertex requires its home partition and
//! produces a continuation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Direction, Edge, Graph, Pid, Vid};
use crate::partition::ExtendedPartition;
use crate::plan::QueryPlan;
use crate::query::{QnodeId, Query, QueryEdge, QueryGraph};

/// Canonical form of an answer: sorted (query node, vertex) pairs. Partition
/// ids are placement metadata and excluded, so oracle and engine answers
/// compare directly.
pub type CanonicalKey = Vec<(QnodeId, Vid)>;

/// A completed match: every plan edge and every cycle-closing edge satisfied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    /// Query node -> (vertex id, home partition id).
    pub bindings: BTreeMap<QnodeId, (Vid, Pid)>,
}

impl Answer {
    pub fn canonical_key(&self) -> CanonicalKey {
        self.bindings.iter().map(|(&q, &(v, _))| (q, v)).collect()
    }

    /// One FAA line: space-separated `qnode=vid@pid` pairs, sorted by qnode.
    pub fn canonical_line(&self) -> String {
        self.bindings
            .iter()
            .map(|(q, (v, p))| format!("{q}={v}@{p}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A pending expansion point carried inside a shelved partial answer: a bound
/// query node whose plan edges are still owed, with enough vertex information
/// to resume elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub qnode: QnodeId,
    pub vid: Vid,
    pub pid: Pid,
    pub label: String,
    /// Plan-edge indices owed at this vertex.
    pub pending: Vec<usize>,
}

/// Bindings accumulated so far plus the expansion work still owed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialAnswer {
    pub disjunct: usize,
    pub bindings: BTreeMap<QnodeId, (Vid, Pid)>,
    /// Indices into the plan's tree edges already matched.
    pub matched: BTreeSet<usize>,
    /// Indices into the plan's non-tree edges already verified.
    pub verified: BTreeSet<usize>,
    pub frontier: Vec<FrontierEntry>,
}

impl PartialAnswer {
    /// A fresh partial with only the plan root bound.
    pub fn root(disjunct: usize, start_qnode: QnodeId, vid: Vid, pid: Pid) -> PartialAnswer {
        PartialAnswer {
            disjunct,
            bindings: BTreeMap::from([(start_qnode, (vid, pid))]),
            matched: BTreeSet::new(),
            verified: BTreeSet::new(),
            frontier: Vec::new(),
        }
    }

    pub fn matched_tree_edges(&self) -> usize {
        self.matched.len()
    }

    fn bound_vid(&self, q: QnodeId) -> Option<(Vid, Pid)> {
        self.bindings.get(&q).copied()
    }

    pub fn binds_vertex(&self, vid: Vid) -> bool {
        self.bindings.values().any(|&(v, _)| v == vid)
    }
}

/// A shelved partial answer, to be resumed at `entry_vid` in partition
/// `target_pid` (the entry vertex's home, or this partition again when the
/// answer must re-enter through a different connected component).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    pub partial: PartialAnswer,
    pub target_pid: Pid,
    pub entry_vid: Vid,
    pub entry_qnode: QnodeId,
    pub entry_label: String,
}

/// Where expansion starts inside one partition.
#[derive(Debug, Clone)]
pub enum Seed {
    /// Initial start: bind every local vertex matching the plan's root
    /// predicate.
    StartScan,
    /// Resume a shelved partial at `entry`, which must be present in the
    /// partition. Expansion from the entry uses this partition's view of its
    /// adjacency; drivers only resume where the entry is local.
    Resume { partial: PartialAnswer, entry: Vid },
}

/// Branch accounting for one expansion call. Every work item ends in exactly
/// one of: branched (spawned children), completed, shelved as a continuation,
/// or failed a predicate/injectivity check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExpandStats {
    pub items: usize,
    pub roots: usize,
    pub branched: usize,
    pub completed: usize,
    pub continuations: usize,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct ExpandOutcome {
    pub answers: Vec<Answer>,
    pub continuations: Vec<Continuation>,
    pub stats: ExpandStats,
}

/// True when the graph edge `e` realizes query edge `qe` between bound
/// vertices `vu` (bound to `qe.qsrc`) and `vv` (bound to `qe.qdst`).
pub(crate) fn edge_realizes(qe: &QueryEdge, e: &Edge, vu: Vid, vv: Vid) -> bool {
    if !qe.pred.matches(&e.elabel) {
        return false;
    }
    match qe.dir {
        Direction::Directed => e.dir == Direction::Directed && e.svid == vu && e.dvid == vv,
        Direction::Undirected => {
            (e.svid == vu && e.dvid == vv) || (e.svid == vv && e.dvid == vu)
        }
    }
}

struct WorkItem {
    pa: PartialAnswer,
    /// Query nodes whose bound vertex may be expanded in this pass.
    allowed: BTreeSet<QnodeId>,
}

/// Expands all seeds within one partition's local and cut edges.
///
/// Complete answers carry full bindings. A partial that still owes expansion
/// at a vertex not expandable here is shelved into exactly one continuation
/// targeting the owed vertex's home partition; remaining owed branches stay
/// in its frontier and surface as later continuations.
pub fn expand_in_partition(
    part: &ExtendedPartition,
    qg: &QueryGraph,
    plan: &QueryPlan,
    seeds: &[Seed],
) -> Result<ExpandOutcome> {
    let mut answers = Vec::new();
    let mut continuations = Vec::new();
    let mut stats = ExpandStats::default();
    let mut queue: VecDeque<WorkItem> = VecDeque::new();

    for seed in seeds {
        match seed {
            Seed::StartScan => {
                let root_pred = qg.node(plan.start_qnode);
                for v in part.local_vertices.values() {
                    if root_pred.matches(&v.label) {
                        stats.roots += 1;
                        queue.push_back(WorkItem {
                            pa: PartialAnswer::root(plan.disjunct, plan.start_qnode, v.vid, v.pid),
                            allowed: BTreeSet::from([plan.start_qnode]),
                        });
                    }
                }
            }
            Seed::Resume { partial, entry } => {
                if part.vertex(*entry).is_none() {
                    return Err(Error::Bookkeeping(format!(
                        "continuation entry vertex {entry} absent from partition {}",
                        part.pid
                    )));
                }
                let entry_qnode = partial
                    .bindings
                    .iter()
                    .find(|(_, &(v, _))| v == *entry)
                    .map(|(&q, _)| q)
                    .ok_or_else(|| {
                        Error::Bookkeeping(format!("entry vertex {entry} not bound in partial"))
                    })?;
                let mut allowed = BTreeSet::from([entry_qnode]);
                if part.is_local(*entry) {
                    // Bound vertices local to this partition are expandable in
                    // place only within the entry's connected component; other
                    // components force a re-load through a later continuation.
                    for (&q, &(v, p)) in &partial.bindings {
                        if p == part.pid && part.components().same_component(v, *entry) {
                            allowed.insert(q);
                        }
                    }
                }
                stats.roots += 1;
                queue.push_back(WorkItem {
                    pa: partial.clone(),
                    allowed,
                });
            }
        }
    }

    while let Some(WorkItem { mut pa, allowed }) = queue.pop_front() {
        stats.items += 1;

        // Verify cycle-closing edges as soon as both endpoints are bound and
        // one of them is local (its adjacency here is complete).
        let mut dead = false;
        for (nt_pos, &qedge_idx) in plan.non_tree_edges.iter().enumerate() {
            if pa.verified.contains(&nt_pos) {
                continue;
            }
            let qe = &qg.qedges[qedge_idx];
            let (Some((vu, _)), Some((vv, _))) = (pa.bound_vid(qe.qsrc), pa.bound_vid(qe.qdst))
            else {
                continue;
            };
            let anchor = if part.is_local(vu) {
                vu
            } else if part.is_local(vv) {
                vv
            } else {
                continue; // defer: neither endpoint's adjacency is complete here
            };
            let found = part
                .adjacency(anchor)
                .iter()
                .any(|adj| edge_realizes(qe, part.edge(adj.edge_idx), vu, vv));
            if found {
                pa.verified.insert(nt_pos);
            } else {
                dead = true;
                break;
            }
        }
        if dead {
            stats.failed += 1;
            continue;
        }

        if pa.matched.len() == plan.plan_edges.len()
            && pa.verified.len() == plan.non_tree_edges.len()
        {
            answers.push(Answer {
                bindings: pa.bindings,
            });
            stats.completed += 1;
            continue;
        }

        // Expand the lowest pending plan edge whose parent is expandable here.
        let next = plan.plan_edges.iter().enumerate().find(|(idx, pe)| {
            !pa.matched.contains(idx) && allowed.contains(&pe.parent)
        });
        if let Some((idx, pe)) = next {
            let (parent_vid, _) = pa.bound_vid(pe.parent).expect("allowed implies bound");
            let qe = &qg.qedges[pe.qedge_idx];
            let child_pred = qg.node(pe.child);
            let mut branched = false;
            for adj in part.adjacency(parent_vid) {
                let e = part.edge(adj.edge_idx);
                let w = adj.neighbor;
                let (vu, vv) = if pe.parent == qe.qsrc {
                    (parent_vid, w)
                } else {
                    (w, parent_vid)
                };
                if !edge_realizes(qe, e, vu, vv) {
                    continue;
                }
                let wv = part.vertex(w).expect("edge endpoints resolve in partition");
                if !child_pred.matches(&wv.label) {
                    continue;
                }
                if pa.binds_vertex(w) {
                    continue; // injective matching
                }
                let mut child = pa.clone();
                child.bindings.insert(pe.child, (w, wv.pid));
                child.matched.insert(idx);
                let mut child_allowed = allowed.clone();
                if part.is_local(w) {
                    child_allowed.insert(pe.child);
                }
                queue.push_back(WorkItem {
                    pa: child,
                    allowed: child_allowed,
                });
                branched = true;
            }
            if branched {
                stats.branched += 1;
            } else {
                stats.failed += 1;
            }
            continue;
        }

        // Nothing expandable here: shelve one continuation for the owed work.
        match shelve(part, qg, plan, pa) {
            Some(cont) => {
                stats.continuations += 1;
                continuations.push(cont);
            }
            None => {
                return Err(Error::Bookkeeping(
                    "partial answer neither complete nor continuable".to_string(),
                ))
            }
        }
    }

    Ok(ExpandOutcome {
        answers,
        continuations,
        stats,
    })
}

/// Builds the continuation for a partial that owes work not expandable in
/// this partition. The target is the owed vertex of the lowest pending plan
/// edge; with the tree complete, an unverified cycle-closing edge picks it.
fn shelve(
    part: &ExtendedPartition,
    qg: &QueryGraph,
    plan: &QueryPlan,
    pa: PartialAnswer,
) -> Option<Continuation> {
    let pending: Vec<(usize, QnodeId)> = plan
        .plan_edges
        .iter()
        .enumerate()
        .filter(|(idx, pe)| !pa.matched.contains(idx) && pa.bindings.contains_key(&pe.parent))
        .map(|(idx, pe)| (idx, pe.parent))
        .collect();

    let (entry_qnode, _owed_edge) = if let Some(&(idx, q)) = pending.first() {
        (q, Some(idx))
    } else {
        // Tree complete: an unverified non-tree edge with both endpoints
        // bound but neither local here defers to an endpoint's home.
        let nt = plan
            .non_tree_edges
            .iter()
            .enumerate()
            .find(|(pos, _)| !pa.verified.contains(pos))?;
        let qe = &qg.qedges[*nt.1];
        (qe.qsrc.min(qe.qdst), None)
    };

    let (entry_vid, target_pid) = pa.bound_vid(entry_qnode)?;
    let entry_label = resolve_label(part, &pa, entry_qnode, entry_vid, qg);

    // Rebuild the frontier from scratch: one entry per owed parent.
    let mut by_parent: BTreeMap<QnodeId, Vec<usize>> = BTreeMap::new();
    for &(idx, q) in &pending {
        by_parent.entry(q).or_default().push(idx);
    }
    let old = pa.clone();
    let mut pa = pa;
    pa.frontier = by_parent
        .into_iter()
        .map(|(qnode, pending)| {
            let (vid, pid) = old.bound_vid(qnode).expect("owed parent is bound");
            FrontierEntry {
                qnode,
                vid,
                pid,
                label: resolve_label(part, &old, qnode, vid, qg),
                pending,
            }
        })
        .collect();

    Some(Continuation {
        partial: pa,
        target_pid,
        entry_vid,
        entry_qnode,
        entry_label,
    })
}

/// Best-effort label for a bound vertex: from this partition if present, else
/// from the frontier the partial arrived with, else the node's predicate
/// rendering (labels on continuations are informational).
fn resolve_label(
    part: &ExtendedPartition,
    pa: &PartialAnswer,
    qnode: QnodeId,
    vid: Vid,
    qg: &QueryGraph,
) -> String {
    if let Some(v) = part.vertex(vid) {
        return v.label.clone();
    }
    if let Some(f) = pa.frontier.iter().find(|f| f.qnode == qnode) {
        return f.label.clone();
    }
    qg.node(qnode).to_string()
}

/// Exhaustive whole-graph matcher used as ground truth: plain backtracking
/// over injective bindings, no plans, no partitions. Returns the canonical
/// deduplicated answer set, unioned over disjuncts.
pub fn oracle_match(g: &Graph, query: &Query) -> BTreeSet<CanonicalKey> {
    let mut out = BTreeSet::new();
    for qg in &query.disjuncts {
        let order = oracle_order(qg);
        let mut bindings: BTreeMap<QnodeId, Vid> = BTreeMap::new();
        oracle_backtrack(g, qg, &order, 0, &mut bindings, &mut out);
    }
    out
}

/// Binding order: lowest node id first, then always a node adjacent to an
/// already-ordered one (the pattern is connected).
fn oracle_order(qg: &QueryGraph) -> Vec<QnodeId> {
    let mut order = vec![*qg.qnodes.keys().next().expect("pattern has nodes")];
    let mut placed: BTreeSet<QnodeId> = order.iter().copied().collect();
    while order.len() < qg.qnodes.len() {
        let next = qg
            .qnodes
            .keys()
            .copied()
            .filter(|q| !placed.contains(q))
            .find(|&q| {
                qg.qedges.iter().any(|e| {
                    (e.qsrc == q && placed.contains(&e.qdst))
                        || (e.qdst == q && placed.contains(&e.qsrc))
                })
            })
            .expect("pattern is connected");
        placed.insert(next);
        order.push(next);
    }
    order
}

fn oracle_backtrack(
    g: &Graph,
    qg: &QueryGraph,
    order: &[QnodeId],
    depth: usize,
    bindings: &mut BTreeMap<QnodeId, Vid>,
    out: &mut BTreeSet<CanonicalKey>,
) {
    if depth == order.len() {
        let key: CanonicalKey = bindings.iter().map(|(&q, &v)| (q, v)).collect();
        out.insert(key);
        return;
    }
    let q = order[depth];
    let pred = qg.node(q);

    let candidates: Vec<Vid> = if depth == 0 {
        g.vertices().map(|v| v.vid).collect()
    } else {
        // Vertices adjacent to some already-bound neighbor of q in the
        // pattern; deduplicated, ascending.
        let anchor = qg
            .qedges
            .iter()
            .find_map(|e| {
                if e.qsrc == q {
                    bindings.get(&e.qdst).copied()
                } else if e.qdst == q {
                    bindings.get(&e.qsrc).copied()
                } else {
                    None
                }
            })
            .expect("order guarantees a bound neighbor");
        let mut c: Vec<Vid> = g.adjacency(anchor).iter().map(|a| a.neighbor).collect();
        c.sort_unstable();
        c.dedup();
        c
    };

    'cands: for w in candidates {
        if bindings.values().any(|&v| v == w) {
            continue; // injective
        }
        let label = &g.vertex(w).expect("candidate exists").label;
        if !pred.matches(label) {
            continue;
        }
        bindings.insert(q, w);
        // Every query edge with both endpoints bound must be realized by at
        // least one graph edge.
        for qe in &qg.qedges {
            let (Some(&vu), Some(&vv)) = (bindings.get(&qe.qsrc), bindings.get(&qe.qdst)) else {
                continue;
            };
            let ok = g
                .adjacency(vu)
                .iter()
                .any(|adj| edge_realizes(qe, g.edge(adj.edge_idx), vu, vv));
            if !ok {
                bindings.remove(&q);
                continue 'cands;
            }
        }
        oracle_backtrack(g, qg, order, depth + 1, bindings, out);
        bindings.remove(&q);
    }
}
