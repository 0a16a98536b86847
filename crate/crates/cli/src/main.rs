//! `pgqp`: partition, inspect, plan and run subgraph queries over partitioned
//! graphs, and drive heuristic-comparison campaigns.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pgqp_core::campaign::{run_campaign, CampaignConfig, Mode};
use pgqp_core::opat::{run_opat, Heuristic, RunOptions};
use pgqp_core::parallel::{run_mapreduce_mp, run_traditional_mp};
use pgqp_core::partition::{
    choose_scheme, extend_with_cutset, import_assignment, partition_builtin, scheme_metrics,
    CcMode, DirSource, InMemorySource, PartitionAssignment, PartitionSource,
};
use pgqp_core::synth::{generate_synthetic, SynthConfig};
use pgqp_core::{Catalog, Graph, Query, RunOutcome};

#[derive(Parser)]
#[command(name = "pgqp", about = "Partitioned graph query processor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a graph and write extended partition files.
    Partition(PartitionArgs),
    /// Print catalog statistics for a graph.
    Catalog(CatalogArgs),
    /// Print the generated query plans.
    Plan(PlanArgs),
    /// Run a query over a partitioned graph.
    Run(RunArgs),
    /// Run a (queries x schemes x heuristics) comparison campaign.
    Campaign(CampaignArgs),
    /// Generate a synthetic graph with planted substructures.
    Gen(GenArgs),
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Number of partitions (used by the built-in partitioner and to
    /// validate imports).
    #[arg(long)]
    k: u32,
    /// Import a METIS-style assignment instead of partitioning built-in.
    #[arg(long)]
    import: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    scheme_name: Option<String>,
    /// Output directory for assignment.txt and partition_<pid>.graph files.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Show at most this many label rows (0 = all).
    #[arg(long, default_value_t = 20)]
    top: usize,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    query: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    query: PathBuf,
    /// Candidate assignment file(s); repeatable. Scheme name = file stem.
    #[arg(long = "assign")]
    assigns: Vec<PathBuf>,
    /// Partition count: required with --assign or the built-in partitioner.
    #[arg(long)]
    k: Option<u32>,
    /// Seed for the built-in partitioner (used when no --assign is given).
    #[arg(long, default_value_t = 0)]
    partition_seed: u64,
    /// How to pick among several candidate schemes.
    #[arg(long, default_value = "min-cc")]
    scheme_choice: String,
    /// Scheme name for --scheme-choice explicit.
    #[arg(long)]
    scheme: Option<String>,
    /// Execution mode: opat, trad or mr.
    #[arg(long, default_value = "opat")]
    mode: String,
    /// Worker slots for trad.
    #[arg(long)]
    p: Option<usize>,
    /// Mapper slots for mr.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "max-sn")]
    heuristic: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop after this many answers.
    #[arg(long)]
    limit: Option<usize>,
    /// Run directory (bookkeeping files + partition files). Defaults to
    /// $PGQP_RUN_ROOT/<query>-<mode>-<heuristic>-s<seed>, or ./runs/...
    #[arg(long)]
    run_dir: Option<PathBuf>,
    /// Keep all bookkeeping in memory; write no files.
    #[arg(long)]
    in_memory: bool,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Query file(s); repeatable.
    #[arg(long = "query")]
    queries: Vec<PathBuf>,
    /// Assignment file(s); repeatable. Scheme name = file stem.
    #[arg(long = "assign")]
    assigns: Vec<PathBuf>,
    /// Built-in schemes as <k>:<seed>; repeatable.
    #[arg(long = "builtin")]
    builtins: Vec<String>,
    /// Partition count for imported assignments.
    #[arg(long)]
    k: Option<u32>,
    /// Heuristics to compare; defaults to all three.
    #[arg(long = "heuristic")]
    heuristics: Vec<String>,
    #[arg(long, default_value = "opat")]
    mode: String,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeds averaged for random-sn rows.
    #[arg(long, default_value_t = 10)]
    random_reps: usize,
    /// Report TSV path; the summary block goes to stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    nv: u32,
    #[arg(long)]
    ne: usize,
    #[arg(long, default_value_t = 2000)]
    vlabels: u32,
    #[arg(long, default_value_t = 4000)]
    elabels: u32,
    /// Template graph file to embed.
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    embed_count: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

fn main() {
    if let Err(err) = dispatch() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn dispatch() -> Result<()> {
    match Cli::parse().command {
        Command::Partition(a) => cmd_partition(a),
        Command::Catalog(a) => cmd_catalog(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Run(a) => cmd_run(a),
        Command::Campaign(a) => cmd_campaign(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn load_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading graph {}", path.display()))?;
    Ok(Graph::parse(&text)?)
}

fn load_query(path: &Path) -> Result<Query> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading query {}", path.display()))?;
    Ok(Query::parse(&text)?)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_partition(a: PartitionArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let assignment = match &a.import {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let name = a.scheme_name.clone().unwrap_or_else(|| stem(path));
            import_assignment(&g, &text, a.k, name)?
        }
        None => {
            let mut assignment = partition_builtin(&g, a.k, a.seed)?;
            if let Some(name) = a.scheme_name {
                assignment.scheme_name = name;
            }
            assignment
        }
    };
    let parts = extend_with_cutset(&g, &assignment)?;
    std::fs::create_dir_all(&a.out)?;
    std::fs::write(a.out.join("assignment.txt"), assignment.to_text())?;
    DirSource::write(&a.out, &parts)?;
    let m = scheme_metrics(assignment.scheme_name.clone(), &parts);
    println!("scheme\t{}", m.scheme_name);
    println!("pid\tcc\tlocal_vertices\tedges");
    for (pid, cc, nv, ne) in &m.per_partition {
        println!("{pid}\t{cc}\t{nv}\t{ne}");
    }
    println!("total_cc\t{}", m.total_cc);
    Ok(())
}

fn cmd_catalog(a: CatalogArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let cat = Catalog::build(&g);
    println!("vertices\t{}", cat.vertex_count());
    println!("edges\t{}", g.edge_count());
    println!("labels\t{}", cat.labels().count());
    if let (Some(min), Some(max)) = (cat.min_value(), cat.max_value()) {
        println!("numeric_min\t{min}");
        println!("numeric_max\t{max}");
    }
    println!("label\tcount");
    let mut labels: Vec<(&str, u64)> = cat.labels().collect();
    labels.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let shown = if a.top == 0 { labels.len() } else { a.top };
    for (label, count) in labels.into_iter().take(shown) {
        println!("{label}\t{count}");
    }
    Ok(())
}

fn cmd_plan(a: PlanArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let q = load_query(&a.query)?;
    let cat = Catalog::build(&g);
    for plan in pgqp_core::plan_query(&q, &cat)? {
        print!("{plan}");
    }
    Ok(())
}

/// Builds the candidate schemes for `run`, picks one, and extends it.
fn pick_scheme(g: &Graph, a: &RunArgs) -> Result<(String, PartitionAssignment)> {
    let mut candidates: Vec<PartitionAssignment> = Vec::new();
    for path in &a.assigns {
        let k = a.k.context("--k is required with --assign")?;
        let text = std::fs::read_to_string(path)?;
        candidates.push(import_assignment(g, &text, k, stem(path))?);
    }
    if candidates.is_empty() {
        let k = a.k.context("give --assign or --k for the built-in partitioner")?;
        candidates.push(partition_builtin(g, k, a.partition_seed)?);
    }
    if candidates.len() == 1 {
        let only = candidates.pop().unwrap();
        return Ok((only.scheme_name.clone(), only));
    }
    if a.scheme_choice == "explicit" {
        let want = a
            .scheme
            .as_ref()
            .context("--scheme is required with --scheme-choice explicit")?;
        let found = candidates
            .into_iter()
            .find(|c| &c.scheme_name == want)
            .with_context(|| format!("no candidate scheme named {want}"))?;
        return Ok((found.scheme_name.clone(), found));
    }
    let mode: CcMode = a.scheme_choice.parse::<CcMode>()?;
    let mut metrics = Vec::new();
    let mut by_name = BTreeMap::new();
    for c in candidates {
        let parts = extend_with_cutset(g, &c)?;
        metrics.push(scheme_metrics(c.scheme_name.clone(), &parts));
        by_name.insert(c.scheme_name.clone(), c);
    }
    let chosen = choose_scheme(&metrics, mode, a.seed)?;
    eprintln!(
        "scheme choice: {} (total_cc={})",
        chosen.scheme_name, chosen.total_cc
    );
    let name = chosen.scheme_name.clone();
    Ok((name.clone(), by_name.remove(&name).unwrap()))
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let q = load_query(&a.query)?;
    let cat = Catalog::build(&g);
    let (scheme_name, assignment) = pick_scheme(&g, &a)?;
    let parts = extend_with_cutset(&g, &assignment)?;

    let run_dir = if a.in_memory {
        None
    } else {
        Some(a.run_dir.clone().unwrap_or_else(|| {
            let root = std::env::var("PGQP_RUN_ROOT").unwrap_or_else(|_| "runs".to_string());
            Path::new(&root).join(format!(
                "{}-{}-{}-s{}",
                stem(&a.query),
                a.mode,
                a.heuristic,
                a.seed
            ))
        }))
    };

    let opts = RunOptions {
        heuristic: a.heuristic.parse::<Heuristic>()?,
        seed: a.seed,
        limit: a.limit,
        run_dir: run_dir.clone(),
    };

    // File-backed runs read partitions from disk; the driver then holds one
    // partition at a time.
    let outcome: RunOutcome = if let Some(dir) = &run_dir {
        let pdir = dir.join("partitions");
        let source = DirSource::write(&pdir, &parts)?;
        drop(parts);
        execute(&source, &q, &cat, &a, &opts)?
    } else {
        let source = InMemorySource::new(parts);
        execute(&source, &q, &cat, &a, &opts)?
    };

    for answer in outcome.faa.answers() {
        println!("{}", answer.canonical_line());
    }
    let log = &outcome.runlog;
    println!("# scheme={scheme_name} answers={}", outcome.faa.len());
    println!(
        "# al={} l_ideal={} ratio={} iterations={}",
        log.al(),
        log.l_ideal,
        log.load_ratio().map_or("n/a".to_string(), |r| format!("{r:.4}")),
        if log.iterations.is_empty() { log.al() } else { log.iterations.len() },
    );
    println!(
        "# load_sequence={}",
        log.load_sequence
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    Ok(())
}

fn execute(
    source: &dyn PartitionSource,
    q: &Query,
    cat: &Catalog,
    a: &RunArgs,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    if a.mode != "trad" && a.p.is_some() {
        bail!("--p applies only to --mode trad");
    }
    if a.mode != "mr" && a.m.is_some() {
        bail!("--m applies only to --mode mr");
    }
    let out = match a.mode.as_str() {
        "opat" => run_opat(source, q, cat, opts)?,
        "trad" => run_traditional_mp(source, q, cat, a.p.unwrap_or(2), opts)?,
        "mr" => run_mapreduce_mp(source, q, cat, a.m.unwrap_or(2), opts)?,
        other => bail!("unknown mode `{other}` (use opat, trad or mr)"),
    };
    Ok(out)
}

fn cmd_campaign(a: CampaignArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    if a.queries.is_empty() {
        bail!("give at least one --query");
    }
    let queries: Vec<(String, Query)> = a
        .queries
        .iter()
        .map(|p| Ok((stem(p), load_query(p)?)))
        .collect::<Result<_>>()?;

    let mut schemes: Vec<(String, PartitionAssignment)> = Vec::new();
    for path in &a.assigns {
        let k = a.k.context("--k is required with --assign")?;
        let text = std::fs::read_to_string(path)?;
        schemes.push((stem(path), import_assignment(&g, &text, k, stem(path))?));
    }
    for spec in &a.builtins {
        let (k, seed) = spec
            .split_once(':')
            .with_context(|| format!("--builtin takes <k>:<seed>, got `{spec}`"))?;
        let k: u32 = k.parse()?;
        let seed: u64 = seed.parse()?;
        let name = format!("builtin-k{k}-s{seed}");
        let mut assignment = partition_builtin(&g, k, seed)?;
        assignment.scheme_name = name.clone();
        schemes.push((name, assignment));
    }
    if schemes.is_empty() {
        bail!("give at least one --assign or --builtin scheme");
    }

    let heuristics = if a.heuristics.is_empty() {
        Heuristic::ALL.to_vec()
    } else {
        a.heuristics
            .iter()
            .map(|h| Ok(h.parse::<Heuristic>()?))
            .collect::<Result<Vec<_>>>()?
    };
    let mode = match a.mode.as_str() {
        "opat" => Mode::Opat,
        "trad" => Mode::Traditional { p: a.p.unwrap_or(2) },
        "mr" => Mode::MapReduce { m: a.m.unwrap_or(2) },
        other => bail!("unknown mode `{other}`"),
    };

    let report = run_campaign(&CampaignConfig {
        graph: &g,
        queries,
        schemes,
        heuristics,
        mode,
        seed: a.seed,
        random_reps: a.random_reps,
    })?;
    if let Some(out) = &a.out {
        std::fs::write(out, report.to_tsv())?;
        eprintln!("wrote {} rows to {}", report.rows.len(), out.display());
    } else {
        print!("{}", report.to_tsv());
    }
    print!("{}", report.summary());
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let template = a.template.as_deref().map(load_graph).transpose()?;
    let g = generate_synthetic(&SynthConfig {
        nv: a.nv,
        ne: a.ne,
        vlabels: a.vlabels,
        elabels: a.elabels,
        template,
        embed_count: a.embed_count,
        seed: a.seed,
    })?;
    std::fs::write(&a.out, g.to_text())?;
    eprintln!(
        "wrote {} vertices, {} edges to {}",
        g.vertex_count(),
        g.edge_count(),
        a.out.display()
    );
    Ok(())
}
