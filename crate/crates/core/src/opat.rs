//! One-Partition-At-a-Time driver: SNI/IMA/FAA bookkeeping around the
//! expansion engine, next-partition heuristics, and load-ratio measures.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bookkeeping::{FaaStore, ImaStore, RunDir, RunLog, SniEntry, SniTable};
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::graph::Pid;
use crate::matcher::{expand_in_partition, Seed};
use crate::partition::PartitionSource;
use crate::plan::{plan_query, QueryPlan};
use crate::query::Query;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    MaxSn,
    MinSn,
    RandomSn,
}

impl Heuristic {
    pub const ALL: [Heuristic; 3] = [Heuristic::MaxSn, Heuristic::MinSn, Heuristic::RandomSn];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::MaxSn => "max-sn",
            Heuristic::MinSn => "min-sn",
            Heuristic::RandomSn => "random-sn",
        }
    }
}

impl std::str::FromStr for Heuristic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-sn" => Ok(Heuristic::MaxSn),
            "min-sn" => Ok(Heuristic::MinSn),
            "random-sn" => Ok(Heuristic::RandomSn),
            other => Err(Error::Invalid(format!("unknown heuristic `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub heuristic: Heuristic,
    pub seed: u64,
    pub limit: Option<usize>,
    /// Mirror bookkeeping to files under this directory when set.
    pub run_dir: Option<PathBuf>,
}

impl RunOptions {
    pub fn new(heuristic: Heuristic, seed: u64) -> RunOptions {
        RunOptions {
            heuristic,
            seed,
            limit: None,
            run_dir: None,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub faa: FaaStore,
    pub runlog: RunLog,
}

/// Builds the initial SNI: one entry per (partition, disjunct) whose plan
/// root predicate matches at least one local vertex, with the match count.
/// Vertex ids are absent: these are start nodes, not continuations.
pub fn init_sni(
    source: &dyn PartitionSource,
    query: &Query,
    plans: &[QueryPlan],
) -> Result<SniTable> {
    let mut sni = SniTable::new();
    for pid in source.pids() {
        let part = source.load(pid)?;
        for (d, plan) in plans.iter().enumerate() {
            let pred = query.disjuncts[d].node(plan.start_qnode);
            let count = part
                .local_vertices
                .values()
                .filter(|v| pred.matches(&v.label))
                .count();
            if count > 0 {
                sni.push(SniEntry {
                    pid,
                    disjunct: d,
                    qnode: plan.start_qnode,
                    label: pred.to_string(),
                    vid: None,
                    ima_ref: None,
                    count,
                    born_iter: 0,
                });
            }
        }
    }
    Ok(sni)
}

/// Lower bound on partition loads: the number of distinct partitions holding
/// at least one local vertex matching some disjunct's plan root predicate.
/// Every such partition must be loaded at least once to drain its start
/// entries, so L_ideal <= AL for every drained run.
pub fn compute_l_ideal(
    source: &dyn PartitionSource,
    query: &Query,
    plans: &[QueryPlan],
) -> Result<usize> {
    let mut pids = BTreeSet::new();
    for pid in source.pids() {
        let part = source.load(pid)?;
        let hit = plans.iter().enumerate().any(|(d, plan)| {
            let pred = query.disjuncts[d].node(plan.start_qnode);
            part.local_vertices.values().any(|v| pred.matches(&v.label))
        });
        if hit {
            pids.insert(pid);
        }
    }
    Ok(pids.len())
}

/// Chooses up to `p` partitions from the eligible set. MAX-SN takes the
/// largest start-node counts, MIN-SN the smallest, RANDOM-SN a uniform
/// sample; ties at the cut are broken by a seeded uniform draw. The result is
/// in ascending pid order.
pub fn choose_top(sni: &SniTable, h: Heuristic, p: usize, rng: &mut ChaCha8Rng) -> Vec<Pid> {
    let eligible = sni.eligible_pids();
    if eligible.is_empty() || p == 0 {
        return Vec::new();
    }
    let mut chosen: Vec<Pid> = match h {
        Heuristic::RandomSn => sample(eligible, p, rng),
        Heuristic::MaxSn | Heuristic::MinSn => {
            let mut by_count: BTreeMap<usize, Vec<Pid>> = BTreeMap::new();
            for pid in eligible {
                by_count.entry(sni.count_for(pid)).or_default().push(pid);
            }
            let groups: Vec<Vec<Pid>> = if h == Heuristic::MaxSn {
                by_count.into_values().rev().collect()
            } else {
                by_count.into_values().collect()
            };
            let mut out = Vec::new();
            for group in groups {
                let room = p - out.len();
                if room == 0 {
                    break;
                }
                if group.len() <= room {
                    out.extend(group);
                } else {
                    out.extend(sample(group, room, rng));
                }
            }
            out
        }
    };
    chosen.sort_unstable();
    chosen
}

/// Uniform sample of `p` items via a partial Fisher-Yates shuffle, so a
/// single draw is consumed per selected item.
fn sample(mut items: Vec<Pid>, p: usize, rng: &mut ChaCha8Rng) -> Vec<Pid> {
    let n = p.min(items.len());
    for i in 0..n {
        let j = rng.gen_range(i..items.len());
        items.swap(i, j);
    }
    items.truncate(n);
    items
}

/// Next partition to load under `h`. The SNI must be non-empty.
pub fn choose_next(sni: &SniTable, h: Heuristic, rng: &mut ChaCha8Rng) -> Result<Pid> {
    choose_top(sni, h, 1, rng)
        .first()
        .copied()
        .ok_or_else(|| Error::Bookkeeping("choose_next on empty SNI".to_string()))
}

/// Seeds for one partition load: a start scan when the partition has a start
/// entry for the disjunct, plus one resume per continuation entry, in entry
/// order. Returns (disjunct, seeds) pairs in ascending disjunct order.
pub(crate) fn seeds_for_load(
    entries: &[SniEntry],
    ima: &ImaStore,
    pid: Pid,
) -> Result<Vec<(usize, Vec<Seed>)>> {
    let mut by_disjunct: BTreeMap<usize, Vec<&SniEntry>> = BTreeMap::new();
    for e in entries {
        by_disjunct.entry(e.disjunct).or_default().push(e);
    }
    let mut out = Vec::new();
    for (d, dentries) in by_disjunct {
        let mut seeds = Vec::new();
        if dentries.iter().any(|e| !e.is_continuation()) {
            seeds.push(Seed::StartScan);
        }
        for e in dentries.iter().filter(|e| e.is_continuation()) {
            let ima_ref = e.ima_ref.expect("continuation has a ref");
            seeds.push(Seed::Resume {
                partial: ima.get(pid, ima_ref)?.clone(),
                entry: e.vid.expect("continuation has a vid"),
            });
        }
        out.push((d, seeds));
    }
    Ok(out)
}

/// Runs a query one partition at a time until the SNI drains (or the answer
/// limit is reached). At most one partition is resident at any moment.
pub fn run_opat(
    source: &dyn PartitionSource,
    query: &Query,
    catalog: &Catalog,
    opts: &RunOptions,
) -> Result<RunOutcome> {
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
        let pid = choose_next(&sni, opts.heuristic, &mut rng)?;
        log.sni_before.push(sni.len());
        log.load_sequence.push(pid);
        let started = Instant::now();
        let part = source.load(pid)?;
        let entries = sni.take_for(pid);
        for e in &entries {
            if e.born_iter >= iter {
                return Err(Error::Bookkeeping(
                    "SNI entry visible within its own iteration".to_string(),
                ));
            }
        }
        for (d, seeds) in seeds_for_load(&entries, &ima, pid)? {
            let outcome = expand_in_partition(&part, &query.disjuncts[d], &plans[d], &seeds)?;
            for answer in outcome.answers {
                if faa.insert(answer.clone()) {
                    rundir.append_faa(&answer)?;
                }
                if limit.is_some_and(|k| faa.len() >= k) {
                    log.stopped_at_limit = true;
                    log.wall_ms_per_load.push(started.elapsed().as_secs_f64() * 1e3);
                    rundir.snapshot_sni(&format!("load {iter} pid={pid} (limit)"), &sni)?;
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
        log.wall_ms_per_load.push(started.elapsed().as_secs_f64() * 1e3);
        rundir.snapshot_sni(&format!("load {iter} pid={pid}"), &sni)?;
    }

    rundir.finish(&log)?;
    Ok(RunOutcome { faa, runlog: log })
}

/// One completed (query, scheme) run for the load-ratio measures.
#[derive(Debug, Clone)]
pub struct RatioCell {
    pub query: String,
    pub scheme: String,
    pub l_ideal: usize,
    pub al: usize,
}

/// The two load-ratio measures: the mean of L_ideal/AL for one query across
/// partitioning schemes, and for one scheme across a query batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Measures {
    pub per_query: BTreeMap<String, f64>,
    pub per_scheme: BTreeMap<String, f64>,
}

pub fn load_ratio_measures(cells: &[RatioCell]) -> Result<Measures> {
    let mut per_query: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut per_scheme: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for c in cells {
        if c.al == 0 {
            return Err(Error::Invalid(format!(
                "run ({}, {}) loaded no partitions",
                c.query, c.scheme
            )));
        }
        let ratio = c.l_ideal as f64 / c.al as f64;
        if ratio > 1.0 {
            return Err(Error::Bookkeeping(format!(
                "load ratio {ratio} > 1 for ({}, {}): L_ideal is a lower bound",
                c.query, c.scheme
            )));
        }
        per_query.entry(c.query.clone()).or_default().push(ratio);
        per_scheme.entry(c.scheme.clone()).or_default().push(ratio);
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Ok(Measures {
        per_query: per_query.iter().map(|(k, v)| (k.clone(), mean(v))).collect(),
        per_scheme: per_scheme.iter().map(|(k, v)| (k.clone(), mean(v))).collect(),
    })
}
