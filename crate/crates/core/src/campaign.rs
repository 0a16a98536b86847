//! Heuristic-comparison campaigns: a cross product of queries, partitioning
//! schemes and heuristics executed under one mode, with the per-run load
//! metrics and the two aggregate load-ratio measures.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::opat::{run_opat, Heuristic, RunOptions};
use crate::parallel::{run_mapreduce_mp, run_traditional_mp};
use crate::partition::{extend_with_cutset, InMemorySource, PartitionAssignment};
use crate::query::Query;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Opat,
    Traditional { p: usize },
    MapReduce { m: usize },
}

impl Mode {
    pub fn name(self) -> String {
        match self {
            Mode::Opat => "opat".to_string(),
            Mode::Traditional { p } => format!("trad(p={p})"),
            Mode::MapReduce { m } => format!("mr(m={m})"),
        }
    }
}

#[derive(Debug)]
pub struct CampaignConfig<'a> {
    pub graph: &'a Graph,
    pub queries: Vec<(String, Query)>,
    pub schemes: Vec<(String, PartitionAssignment)>,
    pub heuristics: Vec<Heuristic>,
    pub mode: Mode,
    pub seed: u64,
    /// Seeds averaged for RANDOM-SN rows; deterministic heuristics run once.
    pub random_reps: usize,
}

/// One (query, scheme, heuristic) cell. RANDOM-SN cells average `seeds` runs;
/// the answer count must agree across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRow {
    pub query: String,
    pub scheme: String,
    pub heuristic: Heuristic,
    pub seeds: usize,
    pub l_ideal: usize,
    pub al_mean: f64,
    pub ratio_mean: f64,
    pub iterations_mean: f64,
    pub answers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub mode: Mode,
    pub rows: Vec<CampaignRow>,
    /// Mean load ratio per (heuristic, query) across schemes.
    pub per_query: BTreeMap<(String, String), f64>,
    /// Mean load ratio per (heuristic, scheme) across queries.
    pub per_scheme: BTreeMap<(String, String), f64>,
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    if cfg.queries.is_empty() || cfg.schemes.is_empty() || cfg.heuristics.is_empty() {
        return Err(Error::Invalid("campaign matrix is empty".into()));
    }
    if cfg.random_reps == 0 {
        return Err(Error::Invalid("random_reps must be positive".into()));
    }
    let catalog = Catalog::build(cfg.graph);
    let mut rows = Vec::new();

    for (scheme_name, assignment) in &cfg.schemes {
        let source = InMemorySource::new(extend_with_cutset(cfg.graph, assignment)?);
        for (query_name, query) in &cfg.queries {
            for &heuristic in &cfg.heuristics {
                let seeds: Vec<u64> = match heuristic {
                    Heuristic::RandomSn => {
                        (0..cfg.random_reps as u64).map(|i| cfg.seed + i).collect()
                    }
                    _ => vec![cfg.seed],
                };
                let mut als = Vec::new();
                let mut ratios = Vec::new();
                let mut iterations = Vec::new();
                let mut l_ideal = 0;
                let mut answers: Option<usize> = None;
                for &seed in &seeds {
                    let opts = RunOptions::new(heuristic, seed);
                    let out = match cfg.mode {
                        Mode::Opat => run_opat(&source, query, &catalog, &opts)?,
                        Mode::Traditional { p } => {
                            run_traditional_mp(&source, query, &catalog, p, &opts)?
                        }
                        Mode::MapReduce { m } => {
                            run_mapreduce_mp(&source, query, &catalog, m, &opts)?
                        }
                    };
                    l_ideal = out.runlog.l_ideal;
                    als.push(out.runlog.al() as f64);
                    if let Some(r) = out.runlog.load_ratio() {
                        if r > 1.0 {
                            return Err(Error::Bookkeeping(format!(
                                "load ratio {r} > 1 for ({query_name}, {scheme_name})"
                            )));
                        }
                        ratios.push(r);
                    }
                    iterations.push(if out.runlog.iterations.is_empty() {
                        out.runlog.al() as f64
                    } else {
                        out.runlog.iterations.len() as f64
                    });
                    match answers {
                        None => answers = Some(out.faa.len()),
                        Some(n) => {
                            if n != out.faa.len() {
                                return Err(Error::Bookkeeping(format!(
                                    "answer count varies with seed for ({query_name}, {scheme_name})"
                                )));
                            }
                        }
                    }
                }
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                rows.push(CampaignRow {
                    query: query_name.clone(),
                    scheme: scheme_name.clone(),
                    heuristic,
                    seeds: seeds.len(),
                    l_ideal,
                    al_mean: mean(&als),
                    ratio_mean: if ratios.is_empty() { 0.0 } else { mean(&ratios) },
                    iterations_mean: mean(&iterations),
                    answers: answers.unwrap_or(0),
                });
            }
        }
    }

    // Aggregate measures: mean ratio per (heuristic, query) across schemes
    // and per (heuristic, scheme) across queries, recomputable from the rows.
    // Runs that never loaded a partition (start label absent everywhere)
    // have no load ratio and are left out.
    let mut per_query: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut per_scheme: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.al_mean > 0.0) {
        let h = r.heuristic.name().to_string();
        per_query
            .entry((h.clone(), r.query.clone()))
            .or_default()
            .push(r.ratio_mean);
        per_scheme
            .entry((h, r.scheme.clone()))
            .or_default()
            .push(r.ratio_mean);
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Ok(CampaignReport {
        mode: cfg.mode,
        rows,
        per_query: per_query.iter().map(|(k, v)| (k.clone(), mean(v))).collect(),
        per_scheme: per_scheme.iter().map(|(k, v)| (k.clone(), mean(v))).collect(),
    })
}

impl CampaignReport {
    /// Mean load ratio for one heuristic across every loading row (the batch
    /// measure used for scheme-versus-scheme comparisons).
    pub fn batch_ratio(&self, h: Heuristic) -> f64 {
        let ratios: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.heuristic == h && r.al_mean > 0.0)
            .map(|r| r.ratio_mean)
            .collect();
        ratios.iter().sum::<f64>() / ratios.len().max(1) as f64
    }

    pub fn to_tsv(&self) -> String {
        let mut out =
            String::from("query\tscheme\theuristic\tseeds\tl_ideal\tal_mean\tratio_mean\titerations_mean\tanswers\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
                r.query,
                r.scheme,
                r.heuristic.name(),
                r.seeds,
                r.l_ideal,
                r.al_mean,
                r.ratio_mean,
                r.iterations_mean,
                r.answers
            );
        }
        out
    }

    /// Human-readable aggregate block: heuristic rows against query columns,
    /// then against scheme columns.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let heuristics: Vec<String> = {
            let mut hs: Vec<String> = self.rows.iter().map(|r| r.heuristic.name().to_string()).collect();
            hs.sort();
            hs.dedup();
            hs
        };
        let mut section = |title: &str,
                           cols: Vec<String>,
                           get: &dyn Fn(&str, &str) -> Option<f64>| {
            let _ = writeln!(out, "== mean load ratio: heuristic x {title} ==");
            let _ = writeln!(out, "heuristic\t{}", cols.join("\t"));
            for h in &heuristics {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|c| get(h, c).map_or("-".to_string(), |v| format!("{v:.3}")))
                    .collect();
                let _ = writeln!(out, "{h}\t{}", cells.join("\t"));
            }
        };
        let queries: Vec<String> = {
            let mut qs: Vec<String> = self.rows.iter().map(|r| r.query.clone()).collect();
            qs.sort();
            qs.dedup();
            qs
        };
        let schemes: Vec<String> = {
            let mut ss: Vec<String> = self.rows.iter().map(|r| r.scheme.clone()).collect();
            ss.sort();
            ss.dedup();
            ss
        };
        section("query (across schemes)", queries, &|h, q| {
            self.per_query.get(&(h.to_string(), q.to_string())).copied()
        });
        section("scheme (across queries)", schemes, &|h, s| {
            self.per_scheme.get(&(h.to_string(), s.to_string())).copied()
        });
        out
    }
}
