//! Iteration-parallel execution: TraditionalMP and MapReduceMP.
//!
//! TraditionalMP chooses up to `p` partitions per iteration and runs the
//! depth-complete expansion engine on each concurrently; a full barrier
//! separates iterations, and a single merge step owns the stores.
//!
//! MapReduceMP reshapes the computation: every mapper advances each eligible
//! binding by exactly one plan edge and emits records keyed by the partition
//! where the next expansion must happen (a reserved key routes completed
//! answers); shuffle groups by key and reducers turn groups into SNI/IMA/FAA
//! deltas that the driver merges between iterations.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bookkeeping::{FaaStore, ImaStore, IterationStats, RunDir, RunLog, SniEntry};
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::graph::{Pid, Vid};
use crate::matcher::{
    edge_realizes, expand_in_partition, Answer, ExpandOutcome, PartialAnswer,
};
use crate::opat::{choose_top, init_sni, seeds_for_load, RunOptions, RunOutcome};
use crate::partition::{ExtendedPartition, PartitionSource};
use crate::plan::{plan_query, QueryPlan};
use crate::query::{QnodeId, Query, QueryGraph};

/// Runs a query with up to `p` partitions processed in parallel per
/// iteration. With `p = 1` the load sequence and answers are identical to
/// the one-partition-at-a-time driver under the same heuristic and seed.
pub fn run_traditional_mp(
    source: &dyn PartitionSource,
    query: &Query,
    catalog: &Catalog,
    p: usize,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    if p < 1 {
        return Err(Error::Invalid("p must be at least 1".into()));
    }
    let plans = plan_query(query, catalog)?;
    let rundir = RunDir::new(opts.run_dir.as_deref())?;
    let mut sni = init_sni(source, query, &plans)?;
    let mut ima = ImaStore::new();
    let mut faa = FaaStore::new();
    // Options may cap the answer count below the query's own limit clause.
    let limit = match (opts.limit, query.limit) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let mut log = RunLog {
        l_ideal: sni.eligible_pids().len(),
        ..RunLog::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rundir.snapshot_sni("init", &sni)?;

    let mut iter = 0usize;
    'run: while !sni.is_empty() {
        iter += 1;
        let required = sni.eligible_pids().len();
        let sni_size = sni.len();
        let chosen = choose_top(&sni, opts.heuristic, p, &mut rng);
        let started = Instant::now();

        // Drain the chosen partitions' entries and build seeds up front; the
        // tasks then share only immutable inputs.
        let mut tasks = Vec::with_capacity(chosen.len());
        for &pid in &chosen {
            let entries = sni.take_for(pid);
            for e in &entries {
                if e.born_iter >= iter {
                    return Err(Error::Bookkeeping(
                        "SNI entry visible within its own iteration".to_string(),
                    ));
                }
            }
            tasks.push((pid, seeds_for_load(&entries, &ima, pid)?));
        }

        // One worker per chosen partition; the join is the barrier.
        type TaskResult = (Pid, Result<Vec<(usize, ExpandOutcome)>>, f64);
        let results: Vec<TaskResult> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = tasks
                    .into_iter()
                    .map(|(pid, seed_groups)| {
                        let plans = &plans;
                        scope.spawn(move || {
                            let t0 = Instant::now();
                            let run = || -> Result<Vec<(usize, ExpandOutcome)>> {
                                let part = source.load(pid)?;
                                let mut out = Vec::new();
                                for (d, seeds) in seed_groups {
                                    let outcome = expand_in_partition(
                                        &part,
                                        &query.disjuncts[d],
                                        &plans[d],
                                        &seeds,
                                    )?;
                                    out.push((d, outcome));
                                }
                                Ok(out)
                            };
                            (pid, run(), t0.elapsed().as_secs_f64() * 1e3)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("expansion worker panicked"))
                    .collect()
            });

        // Merge in ascending pid order; results arrive in spawn order.
        let mut expansions = Vec::new();
        for (pid, result, wall_ms) in results {
            log.load_sequence.push(pid);
            log.sni_before.push(sni_size);
            log.wall_ms_per_load.push(wall_ms);
            let mut items = 0;
            for (d, outcome) in result? {
                items += outcome.stats.items;
                for answer in outcome.answers {
                    if faa.insert(answer.clone()) {
                        rundir.append_faa(&answer)?;
                    }
                    if limit.is_some_and(|k| faa.len() >= k) {
                        log.stopped_at_limit = true;
                        log.iterations.push(IterationStats {
                            index: iter,
                            required,
                            chosen: chosen.clone(),
                            wall_ms: started.elapsed().as_secs_f64() * 1e3,
                            expansions,
                        });
                        rundir.snapshot_sni(&format!("iteration {iter} (limit)"), &sni)?;
                        break 'run;
                    }
                }
                for cont in outcome.continuations {
                    let ima_ref = ima.append(cont.target_pid, cont.partial.clone());
                    rundir.append_ima(cont.target_pid, &cont.partial)?;
                    sni.push(SniEntry {
                        pid: cont.target_pid,
                        disjunct: d,
                        qnode: cont.entry_qnode,
                        label: cont.entry_label,
                        vid: Some(cont.entry_vid),
                        ima_ref: Some(ima_ref),
                        count: 1,
                        born_iter: iter,
                    });
                }
            }
            expansions.push((pid, items));
        }
        log.iterations.push(IterationStats {
            index: iter,
            required,
            chosen,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            expansions,
        });
        rundir.snapshot_sni(&format!("iteration {iter}"), &sni)?;
    }

    rundir.finish(&log)?;
    Ok(RunOutcome { faa, runlog: log })
}

/// Routing key emitted by mappers: the partition where the next one-edge
/// expansion happens, or the reserved completion key. Completed answers sort
/// first so they reach the FAA before new bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReduceKey {
    Complete,
    Target(Pid),
}

/// Mapper output value: a full answer under `ReduceKey::Complete`, otherwise
/// a partial answer plus the vertex where its next expansion resumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MapValue {
    Answer(Answer),
    Partial {
        partial: PartialAnswer,
        entry_vid: Vid,
        entry_qnode: QnodeId,
        entry_label: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub key: ReduceKey,
    pub value: MapValue,
}

/// Advances every eligible binding of this partition's SNI slice by exactly
/// one plan edge (contrast with the depth-complete engine). Start entries
/// bind matching local vertices first; predicate-failing expansions emit
/// nothing.
pub fn map_task(
    part: &ExtendedPartition,
    entries: &[SniEntry],
    ima: &ImaStore,
    query: &Query,
    plans: &[QueryPlan],
) -> Result<Vec<MapRecord>> {
    let mut records = Vec::new();
    let mut by_disjunct: BTreeMap<usize, Vec<&SniEntry>> = BTreeMap::new();
    for e in entries {
        by_disjunct.entry(e.disjunct).or_default().push(e);
    }
    for (d, dentries) in by_disjunct {
        let qg = &query.disjuncts[d];
        let plan = &plans[d];
        if dentries.iter().any(|e| !e.is_continuation()) {
            let root_pred = qg.node(plan.start_qnode);
            for v in part.local_vertices.values() {
                if root_pred.matches(&v.label) {
                    let pa = PartialAnswer::root(d, plan.start_qnode, v.vid, v.pid);
                    advance_one(part, qg, plan, pa, &mut records)?;
                }
            }
        }
        for e in dentries.iter().filter(|e| e.is_continuation()) {
            let pa = ima.get(part.pid, e.ima_ref.expect("continuation ref"))?.clone();
            let entry = e.vid.expect("continuation vid");
            if part.vertex(entry).is_none() {
                return Err(Error::Bookkeeping(format!(
                    "continuation entry vertex {entry} absent from partition {}",
                    part.pid
                )));
            }
            advance_one(part, qg, plan, pa, &mut records)?;
        }
    }
    Ok(records)
}

/// One-edge advance of a single partial: verify what is verifiable here,
/// then match the lowest pending plan edge and emit each extension routed to
/// wherever its own next expansion lives.
fn advance_one(
    part: &ExtendedPartition,
    qg: &QueryGraph,
    plan: &QueryPlan,
    pa: PartialAnswer,
    records: &mut Vec<MapRecord>,
) -> Result<()> {
    let Some(pa) = verify_closable(part, qg, plan, pa) else {
        return Ok(()); // failed a cycle-closing check
    };

    if pa.matched.len() == plan.plan_edges.len() {
        route(part, qg, plan, pa, records);
        return Ok(());
    }

    let (idx, pe) = plan
        .plan_edges
        .iter()
        .enumerate()
        .find(|(idx, pe)| !pa.matched.contains(idx) && pa.bindings.contains_key(&pe.parent))
        .ok_or_else(|| Error::Bookkeeping("partial has no expandable plan edge".to_string()))?;
    let (parent_vid, _) = pa.bindings[&pe.parent];
    if part.vertex(parent_vid).is_none() {
        return Err(Error::Bookkeeping(format!(
            "partial routed to partition {} but vertex {parent_vid} is absent",
            part.pid
        )));
    }
    let qe = &qg.qedges[pe.qedge_idx];
    let child_pred = qg.node(pe.child);
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
        if !child_pred.matches(&wv.label) || pa.binds_vertex(w) {
            continue;
        }
        let mut child = pa.clone();
        child.bindings.insert(pe.child, (w, wv.pid));
        child.matched.insert(idx);
        let Some(child) = verify_closable(part, qg, plan, child) else {
            continue;
        };
        route(part, qg, plan, child, records);
    }
    Ok(())
}

/// Checks every cycle-closing edge with both endpoints bound and at least one
/// endpoint local here. Returns None when a check fails.
fn verify_closable(
    part: &ExtendedPartition,
    qg: &QueryGraph,
    plan: &QueryPlan,
    mut pa: PartialAnswer,
) -> Option<PartialAnswer> {
    for (nt_pos, &qedge_idx) in plan.non_tree_edges.iter().enumerate() {
        if pa.verified.contains(&nt_pos) {
            continue;
        }
        let qe = &qg.qedges[qedge_idx];
        let (Some(&(vu, _)), Some(&(vv, _))) =
            (pa.bindings.get(&qe.qsrc), pa.bindings.get(&qe.qdst))
        else {
            continue;
        };
        let anchor = if part.is_local(vu) {
            vu
        } else if part.is_local(vv) {
            vv
        } else {
            continue;
        };
        let found = part
            .adjacency(anchor)
            .iter()
            .any(|adj| edge_realizes(qe, part.edge(adj.edge_idx), vu, vv));
        if found {
            pa.verified.insert(nt_pos);
        } else {
            return None;
        }
    }
    Some(pa)
}

/// Emits a partial under the key of its next expansion, or as a completed
/// answer when nothing is owed.
fn route(
    part: &ExtendedPartition,
    qg: &QueryGraph,
    plan: &QueryPlan,
    pa: PartialAnswer,
    records: &mut Vec<MapRecord>,
) {
    if pa.matched.len() == plan.plan_edges.len() {
        if pa.verified.len() == plan.non_tree_edges.len() {
            records.push(MapRecord {
                key: ReduceKey::Complete,
                value: MapValue::Answer(Answer {
                    bindings: pa.bindings,
                }),
            });
        } else {
            // Tree complete but a cycle check is owed elsewhere: route to the
            // lower endpoint's home of the first unverified edge.
            let (_, &qedge_idx) = plan
                .non_tree_edges
                .iter()
                .enumerate()
                .find(|(pos, _)| !pa.verified.contains(pos))
                .expect("unverified edge exists");
            let qe = &qg.qedges[qedge_idx];
            let entry_qnode = qe.qsrc.min(qe.qdst);
            emit_partial(part, qg, pa, entry_qnode, records);
        }
        return;
    }
    let pe = plan
        .plan_edges
        .iter()
        .enumerate()
        .find(|(idx, pe)| !pa.matched.contains(idx) && pa.bindings.contains_key(&pe.parent))
        .map(|(_, pe)| pe)
        .expect("incomplete partial has a pending edge with a bound parent");
    emit_partial(part, qg, pa, pe.parent, records);
}

fn emit_partial(
    part: &ExtendedPartition,
    qg: &QueryGraph,
    pa: PartialAnswer,
    entry_qnode: QnodeId,
    records: &mut Vec<MapRecord>,
) {
    let (entry_vid, target) = pa.bindings[&entry_qnode];
    let entry_label = part
        .vertex(entry_vid)
        .map(|v| v.label.clone())
        .unwrap_or_else(|| qg.node(entry_qnode).to_string());
    records.push(MapRecord {
        key: ReduceKey::Target(target),
        value: MapValue::Partial {
            partial: pa,
            entry_vid,
            entry_qnode,
            entry_label,
        },
    });
}

/// Groups mapper output by key. Values are ordered by their serialized form
/// so downstream processing is reproducible regardless of mapper order.
pub fn shuffle_group(records: Vec<MapRecord>) -> BTreeMap<ReduceKey, Vec<MapValue>> {
    let mut groups: BTreeMap<ReduceKey, Vec<MapValue>> = BTreeMap::new();
    for r in records {
        groups.entry(r.key).or_default().push(r.value);
    }
    for values in groups.values_mut() {
        values.sort_by_cached_key(|v| serde_json::to_string(v).expect("map values serialize"));
    }
    groups
}

/// Output of one reducer: bookkeeping deltas the driver merges after the
/// barrier. SNI rows reference IMA records by position within `ima`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReduceDelta {
    pub target: Option<Pid>,
    pub sni: Vec<(usize, QnodeId, String, Vid)>,
    pub ima: Vec<PartialAnswer>,
    pub faa: Vec<Answer>,
}

/// Single traversal of one shuffle group: completed answers to the FAA delta,
/// continuing partials to the target partition's IMA and SNI deltas.
pub fn reduce_task(key: ReduceKey, values: Vec<MapValue>) -> ReduceDelta {
    let mut delta = ReduceDelta::default();
    match key {
        ReduceKey::Complete => {
            for v in values {
                match v {
                    MapValue::Answer(a) => delta.faa.push(a),
                    MapValue::Partial { .. } => unreachable!("partial under Complete key"),
                }
            }
        }
        ReduceKey::Target(pid) => {
            delta.target = Some(pid);
            for v in values {
                match v {
                    MapValue::Partial {
                        partial,
                        entry_vid,
                        entry_qnode,
                        entry_label,
                    } => {
                        delta
                            .sni
                            .push((partial.disjunct, entry_qnode, entry_label, entry_vid));
                        delta.ima.push(partial);
                    }
                    MapValue::Answer(_) => unreachable!("answer under partition key"),
                }
            }
        }
    }
    delta
}

/// Runs a query through the map/reduce dataflow with `m` mapper slots per
/// iteration: all eligible partitions map when `m` covers them, otherwise the
/// heuristic picks `m`. Iterations end when the SNI drains; with one plan
/// edge consumed per iteration, a run that produces answers takes at least
/// the plan's maximum path length.
pub fn run_mapreduce_mp(
    source: &dyn PartitionSource,
    query: &Query,
    catalog: &Catalog,
    m: usize,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    if m < 1 {
        return Err(Error::Invalid("m must be at least 1".into()));
    }
    let plans = plan_query(query, catalog)?;
    let rundir = RunDir::new(opts.run_dir.as_deref())?;
    let mut sni = init_sni(source, query, &plans)?;
    let mut ima = ImaStore::new();
    let mut faa = FaaStore::new();
    // Options may cap the answer count below the query's own limit clause.
    let limit = match (opts.limit, query.limit) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let mut log = RunLog {
        l_ideal: sni.eligible_pids().len(),
        ..RunLog::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rundir.snapshot_sni("init", &sni)?;

    let mut iter = 0usize;
    'run: while !sni.is_empty() {
        iter += 1;
        let eligible = sni.eligible_pids();
        let required = eligible.len();
        let sni_size = sni.len();
        let chosen = if m >= required {
            eligible
        } else {
            choose_top(&sni, opts.heuristic, m, &mut rng)
        };
        let started = Instant::now();

        let mut tasks = Vec::with_capacity(chosen.len());
        for &pid in &chosen {
            let entries = sni.take_for(pid);
            for e in &entries {
                if e.born_iter >= iter {
                    return Err(Error::Bookkeeping(
                        "SNI entry visible within its own iteration".to_string(),
                    ));
                }
            }
            tasks.push((pid, entries));
        }

        // Map phase: one task per chosen partition, joined as the barrier.
        let mapped: Vec<(Pid, Result<Vec<MapRecord>>, f64)> = std::thread::scope(|scope| {
            let handles: Vec<_> = tasks
                .iter()
                .map(|(pid, entries)| {
                    let (pid, plans, ima) = (*pid, &plans, &ima);
                    scope.spawn(move || {
                        let t0 = Instant::now();
                        let run = || -> Result<Vec<MapRecord>> {
                            let part = source.load(pid)?;
                            map_task(&part, entries, ima, query, plans)
                        };
                        (pid, run(), t0.elapsed().as_secs_f64() * 1e3)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("mapper panicked"))
                .collect()
        });

        let mut all_records = Vec::new();
        let mut expansions = Vec::new();
        for (pid, result, wall_ms) in mapped {
            log.load_sequence.push(pid);
            log.sni_before.push(sni_size);
            log.wall_ms_per_load.push(wall_ms);
            let records = result?;
            expansions.push((pid, records.len()));
            all_records.extend(records);
        }

        // Shuffle, reduce, and merge the deltas (the driver adds local SNIs
        // across reducers and appends answers; order cannot matter because
        // the FAA deduplicates on canonical keys).
        for (key, values) in shuffle_group(all_records) {
            let delta = reduce_task(key, values);
            for answer in delta.faa {
                if faa.insert(answer.clone()) {
                    rundir.append_faa(&answer)?;
                }
                if limit.is_some_and(|k| faa.len() >= k) {
                    log.stopped_at_limit = true;
                    log.iterations.push(IterationStats {
                        index: iter,
                        required,
                        chosen: chosen.clone(),
                        wall_ms: started.elapsed().as_secs_f64() * 1e3,
                        expansions,
                    });
                    rundir.snapshot_sni(&format!("iteration {iter} (limit)"), &sni)?;
                    break 'run;
                }
            }
            if let Some(pid) = delta.target {
                for ((disjunct, qnode, label, vid), partial) in
                    delta.sni.into_iter().zip(delta.ima)
                {
                    let ima_ref = ima.append(pid, partial.clone());
                    rundir.append_ima(pid, &partial)?;
                    sni.push(SniEntry {
                        pid,
                        disjunct,
                        qnode,
                        label,
                        vid: Some(vid),
                        ima_ref: Some(ima_ref),
                        count: 1,
                        born_iter: iter,
                    });
                }
            }
        }
        log.iterations.push(IterationStats {
            index: iter,
            required,
            chosen,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            expansions,
        });
        rundir.snapshot_sni(&format!("iteration {iter}"), &sni)?;
    }

    rundir.finish(&log)?;
    Ok(RunOutcome { faa, runlog: log })
}
