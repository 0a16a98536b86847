//! Acceptance suite. One test per criterion; each prints a `[PASS]` line
//! (visible with `cargo test -- --nocapture`) after all its assertions hold.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pgqp_core::campaign::{run_campaign, CampaignConfig, Mode};
use pgqp_core::matcher::oracle_match;
use pgqp_core::opat::{run_opat, Heuristic, RunOptions, RunOutcome};
use pgqp_core::parallel::{run_mapreduce_mp, run_traditional_mp};
use pgqp_core::partition::{
    choose_scheme, extend_with_cutset, import_assignment, partition_builtin, scheme_metrics,
    CcMode, DirSource, InMemorySource, PartitionAssignment,
};
use pgqp_core::plan::plan_query;
use pgqp_core::query::{Predicate, QnodeId, Query, QueryEdge, QueryGraph};
use pgqp_core::synth::{generate_synthetic, SynthConfig};
use pgqp_core::{Catalog, Direction, Graph};

fn fixture(rel: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("missing fixture {rel}: {e}"))
}

fn movie_graph() -> Graph {
    Graph::parse(&fixture("fig1.graph")).unwrap()
}

fn committed_template() -> Graph {
    Graph::parse(&fixture("template.graph")).unwrap()
}

/// All execution-mode variants exercised by the equivalence criteria.
fn run_mode(
    mode: &str,
    source: &InMemorySource,
    q: &Query,
    cat: &Catalog,
    opts: &RunOptions,
    k: usize,
) -> RunOutcome {
    match mode {
        "opat" => run_opat(source, q, cat, opts).unwrap(),
        "trad1" => run_traditional_mp(source, q, cat, 1, opts).unwrap(),
        "trad2" => run_traditional_mp(source, q, cat, 2, opts).unwrap(),
        "trad4" => run_traditional_mp(source, q, cat, 4, opts).unwrap(),
        "mr1" => run_mapreduce_mp(source, q, cat, 1, opts).unwrap(),
        "mr2" => run_mapreduce_mp(source, q, cat, 2, opts).unwrap(),
        "mr-required" => run_mapreduce_mp(source, q, cat, k.max(1), opts).unwrap(),
        other => panic!("unknown mode {other}"),
    }
}

const MODES: [&str; 7] = ["opat", "trad1", "trad2", "trad4", "mr1", "mr2", "mr-required"];

// ---------------------------------------------------------------------------
// Randomized trial generation for criterion 1.
// ---------------------------------------------------------------------------

struct Trial {
    graph: Graph,
    query: Query,
    assignment: PartitionAssignment,
    k: u32,
}

fn random_graph(rng: &mut ChaCha8Rng, nv: u32) -> Graph {
    let word_labels = rng.gen_range(4..10);
    let numeric_labels = rng.gen_range(2..6);
    let alphabet: Vec<String> = (0..word_labels)
        .map(|i| format!("w{i}"))
        .chain((0..numeric_labels).map(|i| format!("{}", i * 7 % 30)))
        .collect();
    let elabels: Vec<String> = (0..rng.gen_range(2..6)).map(|i| format!("e{i}")).collect();

    let mut g = Graph::new();
    for vid in 1..=nv {
        g.add_vertex(vid, alphabet[rng.gen_range(0..alphabet.len())].clone(), 0)
            .unwrap();
    }
    for vid in 2..=nv {
        let other = rng.gen_range(1..vid);
        let dir = if rng.gen_bool(0.15) { Direction::Directed } else { Direction::Undirected };
        g.add_edge(dir, vid, other, elabels[rng.gen_range(0..elabels.len())].clone())
            .unwrap();
    }
    let extra = (nv as f64 * rng.gen_range(0.2..1.2)) as usize;
    for _ in 0..extra {
        let s = rng.gen_range(1..=nv);
        let d = rng.gen_range(1..=nv);
        let dir = if rng.gen_bool(0.15) { Direction::Directed } else { Direction::Undirected };
        g.add_edge(dir, s, d, elabels[rng.gen_range(0..elabels.len())].clone())
            .unwrap();
    }
    g
}

fn random_node_predicate(rng: &mut ChaCha8Rng, vlabels: &[String]) -> Predicate {
    let pick = |rng: &mut ChaCha8Rng| vlabels[rng.gen_range(0..vlabels.len())].clone();
    match rng.gen_range(0..100) {
        0..=54 => Predicate::Exact(pick(rng)),
        55..=64 => Predicate::Exact(format!("absent{}", rng.gen_range(0..5))),
        65..=74 => Predicate::Wildcard,
        75..=84 => {
            let n = rng.gen_range(2..4);
            Predicate::AnyOf((0..n).map(|_| pick(rng)).collect())
        }
        _ => {
            let ops = [
                pgqp_core::CmpOp::Lt,
                pgqp_core::CmpOp::Le,
                pgqp_core::CmpOp::Gt,
                pgqp_core::CmpOp::Ge,
                pgqp_core::CmpOp::Ne,
                pgqp_core::CmpOp::Eq,
            ];
            Predicate::Compare(
                ops[rng.gen_range(0..ops.len())],
                pgqp_core::Constant::Num(rng.gen_range(0..30) as f64),
            )
        }
    }
}

fn random_edge_predicate(rng: &mut ChaCha8Rng, elabels: &[String]) -> Predicate {
    match rng.gen_range(0..100) {
        0..=69 => Predicate::Exact(elabels[rng.gen_range(0..elabels.len())].clone()),
        70..=89 => Predicate::Wildcard,
        _ => Predicate::Exact("missing-edge".to_string()),
    }
}

fn random_disjunct(rng: &mut ChaCha8Rng, g: &Graph, max_edges: usize) -> QueryGraph {
    let vlabels: Vec<String> = {
        let set: BTreeSet<String> = g.vertices().map(|v| v.label.clone()).collect();
        set.into_iter().collect()
    };
    let elabels: Vec<String> = {
        let set: BTreeSet<String> = g.edges().iter().map(|e| e.elabel.clone()).collect();
        set.into_iter().collect()
    };
    let n_nodes = rng.gen_range(2..=(max_edges + 1).min(5)) as QnodeId;
    let mut qnodes = std::collections::BTreeMap::new();
    for id in 1..=n_nodes {
        qnodes.insert(id, random_node_predicate(rng, &vlabels));
    }
    let mut qedges = Vec::new();
    for id in 2..=n_nodes {
        let parent = rng.gen_range(1..id);
        let dir = if rng.gen_bool(0.1) { Direction::Directed } else { Direction::Undirected };
        qedges.push(QueryEdge {
            qsrc: parent,
            qdst: id,
            dir,
            pred: random_edge_predicate(rng, &elabels),
        });
    }
    // Occasionally close a cycle.
    if n_nodes >= 3 && rng.gen_bool(0.3) && qedges.len() < max_edges {
        let a = rng.gen_range(1..=n_nodes);
        let b = rng.gen_range(1..=n_nodes);
        if a != b {
            qedges.push(QueryEdge {
                qsrc: a,
                qdst: b,
                dir: Direction::Undirected,
                pred: random_edge_predicate(rng, &elabels),
            });
        }
    }
    QueryGraph { qnodes, qedges }
}

fn make_trial(i: u64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1000 + i);
    let nv: u32 = if i % 40 == 39 {
        rng.gen_range(1_200..2_400)
    } else {
        rng.gen_range(24..240)
    };
    let graph = random_graph(&mut rng, nv);

    // Regenerate the query until the oracle answer set is small enough to
    // keep the 200-trial campaign inside its runtime budget.
    let mut query = None;
    for attempt in 0..10 {
        let mut disjuncts = vec![random_disjunct(&mut rng, &graph, 6)];
        if rng.gen_bool(0.25) {
            let room = 6usize.saturating_sub(disjuncts[0].qedges.len()).max(1);
            disjuncts.push(random_disjunct(&mut rng, &graph, room));
        }
        let limit = if rng.gen_bool(0.15) { Some(rng.gen_range(1..5)) } else { None };
        let q = Query { disjuncts, limit };
        if oracle_match(&graph, &q).len() <= 2_000 || attempt == 9 {
            query = Some(q);
            break;
        }
    }
    let mut query = query.unwrap();
    if oracle_match(&graph, &query).len() > 2_000 {
        // Deterministic fallback: a single selective edge query.
        let label = graph.vertices().next().unwrap().label.clone();
        let elabel = graph.edges()[0].elabel.clone();
        query = Query {
            disjuncts: vec![QueryGraph {
                qnodes: std::collections::BTreeMap::from([
                    (1, Predicate::Exact(label)),
                    (2, Predicate::Wildcard),
                ]),
                qedges: vec![QueryEdge {
                    qsrc: 1,
                    qdst: 2,
                    dir: Direction::Undirected,
                    pred: Predicate::Exact(elabel),
                }],
            }],
            limit: None,
        };
    }

    let k = [1u32, 2, 4, 8][(i % 4) as usize];
    let assignment = match i % 4 {
        0 => partition_builtin(&graph, k, i).unwrap(),
        _ => {
            let lines: String = {
                let mut arng = ChaCha8Rng::seed_from_u64(0xA551000 + i);
                (0..nv).map(|_| format!("{}\n", arng.gen_range(0..k))).collect()
            };
            import_assignment(&graph, &lines, k, format!("random{}", i % 4)).unwrap()
        }
    };
    Trial {
        graph,
        query,
        assignment,
        k,
    }
}

/// Criterion 1: on randomized graphs, assignments and queries, every mode and
/// heuristic produces exactly the oracle's canonical answer set (limit k runs
/// stop with exactly min(k, total) answers, all of them oracle answers).
/// Criterion 5 is asserted on every drained run along the way.
#[test]
fn c1_oracle_equivalence_randomized() {
    let trials = 208u64;
    let mut runs = 0usize;
    let mut ratio_checked = 0usize;
    for i in 0..trials {
        let t = make_trial(i);
        let oracle = oracle_match(&t.graph, &t.query);
        let source = InMemorySource::new(extend_with_cutset(&t.graph, &t.assignment).unwrap());
        let cat = Catalog::build(&t.graph);
        for mode in MODES {
            for h in Heuristic::ALL {
                let opts = RunOptions::new(h, i);
                let out = run_mode(mode, &source, &t.query, &cat, &opts, t.k as usize);
                let got = out.faa.canonical_set();
                match t.query.limit {
                    Some(k) => {
                        assert!(
                            got.is_subset(&oracle),
                            "trial {i} {mode} {h:?}: limited answers not in oracle set"
                        );
                        assert_eq!(
                            out.faa.len(),
                            k.min(oracle.len()),
                            "trial {i} {mode} {h:?}: wrong limited count"
                        );
                    }
                    None => assert_eq!(got, oracle, "trial {i} {mode} {h:?}"),
                }
                if let Some(r) = out.runlog.load_ratio() {
                    if !out.faa.is_empty() {
                        assert!(
                            r > 0.0 && r <= 1.0,
                            "trial {i} {mode} {h:?}: load ratio {r} outside (0, 1]"
                        );
                        ratio_checked += 1;
                    }
                }
                runs += 1;
            }
        }
    }
    println!("[PASS] criterion 1: oracle equivalence on {trials} trials, {runs} runs");
    println!("[PASS] criterion 5: 0 < L_ideal/AL <= 1 on {ratio_checked} answering runs");
}

// ---------------------------------------------------------------------------
// Criterion 2: the three correctness cases as dedicated fixtures.
// ---------------------------------------------------------------------------

fn case_within_partition() -> (Graph, PartitionAssignment, Query) {
    let g = Graph::parse(
        "v 1 A\nv 2 B\nv 3 B\nv 4 C\nv 5 D\nu 1 2 ab\nu 1 3 ab\nu 4 5 cd\n",
    )
    .unwrap();
    let a = import_assignment(&g, "0\n0\n0\n1\n1\n", 2, "within").unwrap();
    let q = Query::parse("qv 1 A\nqv 2 B\nqe 1 2 u ab\n").unwrap();
    (g, a, q)
}

fn case_crossing() -> (Graph, PartitionAssignment, Query) {
    let g = Graph::parse(
        "v 1 A\nv 2 B\nv 3 C\nv 4 D\nu 1 2 ab\nu 2 3 bc\nu 3 4 cd\n",
    )
    .unwrap();
    let a = import_assignment(&g, "0\n1\n1\n2\n", 3, "crossing").unwrap();
    let q = Query::parse(
        "qv 1 A\nqv 2 B\nqv 3 C\nqv 4 D\nqe 1 2 u ab\nqe 2 3 u bc\nqe 3 4 u cd\n",
    )
    .unwrap();
    (g, a, q)
}

fn case_reload() -> (Graph, PartitionAssignment, Query) {
    // The answer leaves P1 into P2 and comes back: the final hop y-z is
    // local to P1, which therefore loads twice.
    let g = Graph::parse(
        "v 1 A\nv 2 B\nv 3 C\nv 4 D\nu 1 2 ab\nu 2 3 bc\nu 3 4 cd\n",
    )
    .unwrap();
    let a = import_assignment(&g, "0\n1\n0\n0\n", 2, "reload").unwrap();
    let q = Query::parse(
        "qv 1 A\nqv 2 B\nqv 3 C\nqv 4 D\nqe 1 2 u ab\nqe 2 3 u bc\nqe 3 4 u cd\n",
    )
    .unwrap();
    (g, a, q)
}

#[test]
fn c2_three_correctness_cases() {
    // (a) Answers within a partition: a single load suffices.
    let (g, a, q) = case_within_partition();
    let source = InMemorySource::new(extend_with_cutset(&g, &a).unwrap());
    let cat = Catalog::build(&g);
    let out = run_opat(&source, &q, &cat, &RunOptions::new(Heuristic::MaxSn, 0)).unwrap();
    assert_eq!(out.faa.canonical_set(), oracle_match(&g, &q));
    assert_eq!(out.runlog.load_sequence.len(), 1, "case (a) must load once");

    // (b) Answer crossing multiple partitions.
    let (g, a, q) = case_crossing();
    let source = InMemorySource::new(extend_with_cutset(&g, &a).unwrap());
    let cat = Catalog::build(&g);
    let out = run_opat(&source, &q, &cat, &RunOptions::new(Heuristic::MaxSn, 0)).unwrap();
    assert_eq!(out.faa.canonical_set(), oracle_match(&g, &q));
    let distinct: BTreeSet<_> = out.runlog.load_sequence.iter().collect();
    assert!(distinct.len() >= 2, "case (b) must touch two partitions");

    // (c) Answer using a partition more than once.
    let (g, a, q) = case_reload();
    let source = InMemorySource::new(extend_with_cutset(&g, &a).unwrap());
    let cat = Catalog::build(&g);
    let out = run_opat(&source, &q, &cat, &RunOptions::new(Heuristic::MaxSn, 0)).unwrap();
    assert_eq!(out.faa.canonical_set(), oracle_match(&g, &q));
    assert_eq!(out.runlog.load_sequence, vec![1, 2, 1], "case (c) re-loads P1");

    println!("[PASS] criterion 2: within / crossing / re-load cases exact vs oracle");
}

// ---------------------------------------------------------------------------
// Criterion 3: OPAT and TraditionalMP(p=1) are the same computation.
// ---------------------------------------------------------------------------

fn equivalence_fixtures() -> Vec<(Graph, PartitionAssignment, Query)> {
    let mut out = vec![case_within_partition(), case_crossing(), case_reload()];
    // The movie graph with the year-expansion query.
    let g = movie_graph();
    let a = import_assignment(&g, &fixture("fig1_assign.txt"), 2, "fig1").unwrap();
    let q = Query::parse(&fixture("queries/fig2_year.query")).unwrap();
    out.push((g, a, q));
    // A randomized 4-way case.
    let mut rng = ChaCha8Rng::seed_from_u64(0xE0E0);
    let g = random_graph(&mut rng, 120);
    let a = partition_builtin(&g, 4, 9).unwrap();
    let q = Query {
        disjuncts: vec![random_disjunct(&mut rng, &g, 4)],
        limit: None,
    };
    out.push((g, a, q));
    out
}

#[test]
fn c3_opat_equals_traditional_p1() {
    let mut compared = 0;
    for (g, a, q) in equivalence_fixtures() {
        let source = InMemorySource::new(extend_with_cutset(&g, &a).unwrap());
        let cat = Catalog::build(&g);
        for h in Heuristic::ALL {
            for seed in 0..10 {
                let opts = RunOptions::new(h, seed);
                let x = run_opat(&source, &q, &cat, &opts).unwrap();
                let y = run_traditional_mp(&source, &q, &cat, 1, &opts).unwrap();
                assert_eq!(x.runlog.load_sequence, y.runlog.load_sequence, "{h:?} seed {seed}");
                let xl: Vec<String> = x.faa.answers().iter().map(|a| a.canonical_line()).collect();
                let yl: Vec<String> = y.faa.answers().iter().map(|a| a.canonical_line()).collect();
                assert_eq!(xl, yl, "{h:?} seed {seed}");
                compared += 1;
            }
        }
    }
    println!("[PASS] criterion 3: OPAT == TraditionalMP(p=1) on {compared} runs");
}

// ---------------------------------------------------------------------------
// Criterion 4: heuristic ordering on the committed synthetic benchmark.
// Criterion 6 reuses the same graph with an engineered high-CC scheme.
// ---------------------------------------------------------------------------

fn benchmark_graph() -> Graph {
    generate_synthetic(&SynthConfig {
        nv: 10_000,
        ne: 30_000,
        vlabels: 2_000,
        elabels: 4_000,
        template: Some(committed_template()),
        embed_count: 20,
        seed: 0xBEEC,
    })
    .unwrap()
}

/// The benchmark's 4-way partitioning: heterogeneous on purpose, the way
/// real partitioners shape real graphs. Some planted copies sit entirely
/// inside label-rich partitions, others start in peripheral partitions and
/// span into richer ones, and a few flow the other way. Noise vertices are
/// scattered uniformly. Copy `c` occupies vids `5c+1..=5c+5` in template
/// order s0..s4; the table below places each of those five vertices.
fn benchmark_assignment(g: &Graph) -> PartitionAssignment {
    const PLACEMENTS: [[u32; 5]; 20] = [
        [1, 2, 2, 3, 3],
        [1, 2, 2, 2, 2],
        [3, 3, 3, 3, 3],
        [4, 1, 1, 2, 2],
        [2, 2, 2, 2, 2],
        [2, 1, 1, 1, 1],
        [2, 4, 4, 4, 4],
        [1, 1, 1, 1, 1],
        [3, 4, 4, 4, 4],
        [1, 1, 1, 1, 1],
        [3, 3, 3, 3, 3],
        [2, 3, 3, 3, 3],
        [4, 4, 4, 4, 4],
        [3, 1, 1, 1, 1],
        [4, 4, 4, 4, 4],
        [2, 3, 3, 3, 3],
        [4, 4, 4, 4, 4],
        [4, 4, 4, 4, 4],
        [1, 1, 1, 1, 1],
        [1, 1, 1, 1, 1],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEC ^ 0xBEEF);
    let mut lines = String::new();
    for v in g.vertices() {
        let vid = v.vid as usize;
        let pid0 = if vid <= PLACEMENTS.len() * 5 {
            PLACEMENTS[(vid - 1) / 5][(vid - 1) % 5] - 1
        } else {
            rng.gen_range(0..4)
        };
        lines.push_str(&format!("{pid0}\n"));
    }
    import_assignment(g, &lines, 4, "bench").unwrap()
}

fn benchmark_queries() -> Vec<(String, Query)> {
    let mut queries = vec![
        ("q4".to_string(), Query::parse(&fixture("queries/q4.query")).unwrap()),
        ("q5".to_string(), Query::parse(&fixture("queries/q5.query")).unwrap()),
        ("q6".to_string(), Query::parse(&fixture("queries/q6.query")).unwrap()),
    ];
    let extra: [(&str, &str); 7] = [
        ("b1", "qv 1 s1\nqv 2 s2\nqe 1 2 u t12\n"),
        ("b2", "qv 1 s1\nqv 2 s3\nqv 3 s4\nqe 1 2 u t13\nqe 2 3 u t34\n"),
        ("b3", "qv 1 s0\nqv 2 ?\nqv 3 s2\nqe 1 2 u t01\nqe 2 3 u t12\n"),
        ("b4", "qv 1 s1\nqv 2 anyof:s2|s3\nqe 1 2 u anyof:t12|t13\n"),
        ("b5", "qv 1 s0\nqv 2 s1\nqv 3 s3\nqe 1 2 u t01\nqe 2 3 u t13\n"),
        ("b6", "qv 1 s0\nqv 2 s1\nqv 3 s3\nqv 4 s4\nqe 1 2 u t01\nqe 2 3 u t13\nqe 3 4 u t34\n"),
        ("b7", "qv 1 s2\nqv 2 s1\nqv 3 s3\nqe 2 1 u t12\nqe 2 3 u t13\n"),
    ];
    for (name, text) in extra {
        queries.push((name.to_string(), Query::parse(text).unwrap()));
    }
    queries
}

#[test]
fn c4_heuristic_ordering_on_benchmark() {
    let g = benchmark_graph();
    let assignment = benchmark_assignment(&g);
    let report = run_campaign(&CampaignConfig {
        graph: &g,
        queries: benchmark_queries(),
        schemes: vec![("bench".to_string(), assignment)],
        heuristics: Heuristic::ALL.to_vec(),
        mode: Mode::Opat,
        seed: 1,
        random_reps: 50,
    })
    .unwrap();
    let max = report.batch_ratio(Heuristic::MaxSn);
    let min = report.batch_ratio(Heuristic::MinSn);
    let random = report.batch_ratio(Heuristic::RandomSn);
    println!("benchmark mean load ratios: max-sn={max:.4} min-sn={min:.4} random-sn={random:.4}");
    assert!(max >= min, "MAX-SN ({max:.4}) must be >= MIN-SN ({min:.4})");
    assert!(min >= random, "MIN-SN ({min:.4}) must be >= RANDOM-SN ({random:.4})");
    assert!(max > random, "MAX-SN ({max:.4}) must beat RANDOM-SN ({random:.4}) strictly");
    println!("[PASS] criterion 4: MAX-SN >= MIN-SN >= RANDOM-SN with MAX-SN > RANDOM-SN");
}

/// Two assignments of the benchmark graph that use the same partition
/// multiset per planted copy (so per-query L_ideal agrees) but differ in
/// internal contiguity. The low-CC scheme keeps each copy's share of a
/// partition connected and scatters noise along breadth-first growth; the
/// high-CC scheme interleaves copies across their two partitions (forcing
/// answers to re-enter a partition through a second component) and scatters
/// noise uniformly.
fn cc_schemes(g: &Graph) -> (PartitionAssignment, PartitionAssignment) {
    const PAIRS: [(u32, u32); 6] = [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3), (2, 4)];
    let placement = |copy: usize, interleaved: bool| -> [u32; 5] {
        if copy < 8 {
            let (p, q) = PAIRS[copy % PAIRS.len()];
            if interleaved {
                // s1 and s4 leave home, s3 re-enters with a pending child.
                [p, q, p, p, q]
            } else {
                // Contiguous halves: {s0,s1,s2} then {s3,s4}.
                [p, p, p, q, q]
            }
        } else {
            let p = (copy % 4) as u32 + 1;
            [p, p, p, p, p]
        }
    };
    let builtin = partition_builtin(g, 4, 0xA5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xCC);
    let mut low_lines = String::new();
    let mut high_lines = String::new();
    for v in g.vertices() {
        let vid = v.vid as usize;
        if vid <= 100 {
            let (copy, slot) = ((vid - 1) / 5, (vid - 1) % 5);
            low_lines.push_str(&format!("{}\n", placement(copy, false)[slot] - 1));
            high_lines.push_str(&format!("{}\n", placement(copy, true)[slot] - 1));
        } else {
            low_lines.push_str(&format!("{}\n", builtin.map[&v.vid] - 1));
            high_lines.push_str(&format!("{}\n", rng.gen_range(0..4)));
        }
    }
    (
        import_assignment(g, &low_lines, 4, "contiguous").unwrap(),
        import_assignment(g, &high_lines, 4, "interleaved").unwrap(),
    )
}

#[test]
fn c6_cc_heuristic_trend() {
    let g = benchmark_graph();
    let (low, high) = cc_schemes(&g);

    let low_parts = extend_with_cutset(&g, &low).unwrap();
    let high_parts = extend_with_cutset(&g, &high).unwrap();
    let low_m = scheme_metrics("contiguous", &low_parts);
    let high_m = scheme_metrics("interleaved", &high_parts);
    assert!(
        high_m.total_cc as f64 > 3.0 * low_m.total_cc as f64,
        "need >3x CC separation: {} vs {}",
        high_m.total_cc,
        low_m.total_cc
    );
    let schemes = vec![low_m.clone(), high_m.clone()];
    let min_cc = choose_scheme(&schemes, CcMode::MinCc, 0).unwrap().scheme_name.clone();
    let max_cc = choose_scheme(&schemes, CcMode::MaxCc, 0).unwrap().scheme_name.clone();
    assert_eq!(min_cc, "contiguous");
    assert_eq!(max_cc, "interleaved");

    let report = run_campaign(&CampaignConfig {
        graph: &g,
        queries: benchmark_queries(),
        schemes: vec![
            ("contiguous".to_string(), low),
            ("interleaved".to_string(), high),
        ],
        heuristics: vec![Heuristic::MaxSn, Heuristic::MinSn],
        mode: Mode::Opat,
        seed: 1,
        random_reps: 1,
    })
    .unwrap();
    for h in ["max-sn", "min-sn"] {
        let low_ratio = report.per_scheme[&(h.to_string(), min_cc.clone())];
        let high_ratio = report.per_scheme[&(h.to_string(), max_cc.clone())];
        println!("{h}: MIN-CC scheme ratio={low_ratio:.4}, MAX-CC scheme ratio={high_ratio:.4}");
        assert!(
            low_ratio >= high_ratio,
            "{h}: MIN-CC-chosen scheme must not lose to MAX-CC-chosen ({low_ratio:.4} vs {high_ratio:.4})"
        );
    }
    println!(
        "[PASS] criterion 6: MIN-CC scheme >= MAX-CC scheme (total_cc {} vs {})",
        low_m.total_cc, high_m.total_cc
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: MapReduceMP iteration lower bound.
// ---------------------------------------------------------------------------

#[test]
fn c7_mapreduce_iteration_bound() {
    // Crossing fixture: answers exist, so iterations >= max path length.
    for (g, a, q) in [case_crossing(), case_reload(), case_within_partition()] {
        let source = InMemorySource::new(extend_with_cutset(&g, &a).unwrap());
        let cat = Catalog::build(&g);
        let plans = plan_query(&q, &cat).unwrap();
        let max_path = plans.iter().map(|p| p.max_path_length).max().unwrap();
        let out =
            run_mapreduce_mp(&source, &q, &cat, 16, &RunOptions::new(Heuristic::MaxSn, 0))
                .unwrap();
        assert_eq!(out.faa.canonical_set(), oracle_match(&g, &q));
        if !out.faa.is_empty() {
            assert!(
                out.runlog.iterations.len() >= max_path,
                "iterations {} below max path {max_path}",
                out.runlog.iterations.len()
            );
        }
    }

    // All-local fixture: equality with the plan's max path length.
    let g = Graph::parse(
        "v 1 A\nv 2 B\nv 3 C\nv 4 D\nv 11 A\nv 12 B\nv 13 C\nv 14 D\nu 1 2 ab\nu 2 3 bc\nu 3 4 cd\nu 11 12 ab\nu 12 13 bc\nu 13 14 cd\n",
    )
    .unwrap();
    let a = import_assignment(&g, "0\n0\n0\n0\n1\n1\n1\n1\n", 2, "local").unwrap();
    let q = Query::parse(
        "qv 1 A\nqv 2 B\nqv 3 C\nqv 4 D\nqe 1 2 u ab\nqe 2 3 u bc\nqe 3 4 u cd\n",
    )
    .unwrap();
    let source = InMemorySource::new(extend_with_cutset(&g, &a).unwrap());
    let cat = Catalog::build(&g);
    let plans = plan_query(&q, &cat).unwrap();
    assert_eq!(plans[0].max_path_length, 3);
    let out =
        run_mapreduce_mp(&source, &q, &cat, 16, &RunOptions::new(Heuristic::MaxSn, 0)).unwrap();
    assert_eq!(out.faa.canonical_set(), oracle_match(&g, &q));
    assert_eq!(out.runlog.iterations.len(), 3);
    println!("[PASS] criterion 7: MapReduceMP iterations >= plan max path length (== when all-local)");
}

// ---------------------------------------------------------------------------
// Criterion 8: byte-identical bookkeeping files and the 54-row campaign.
// ---------------------------------------------------------------------------

fn check_golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var("UPDATE_GOLDEN").is_ok() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {name} (run with UPDATE_GOLDEN=1): {e}"));
    assert_eq!(expected, actual, "golden mismatch for {name}");
}

#[test]
fn c8_golden_files_and_campaign_shape() {
    // The two-partition movie example with the year-expansion query, file
    // mode, fixed heuristic and seed.
    let g = movie_graph();
    let a = import_assignment(&g, &fixture("fig1_assign.txt"), 2, "fig1").unwrap();
    let q = Query::parse(&fixture("queries/fig2_year.query")).unwrap();
    let cat = Catalog::build(&g);
    let dir = tempfile::tempdir().unwrap();
    let source = InMemorySource::new(extend_with_cutset(&g, &a).unwrap());
    let opts = RunOptions {
        run_dir: Some(dir.path().to_path_buf()),
        ..RunOptions::new(Heuristic::MaxSn, 0)
    };
    let out = run_opat(&source, &q, &cat, &opts).unwrap();
    assert_eq!(out.faa.canonical_set(), oracle_match(&g, &q));
    for name in ["sni.tsv", "ima_2.jsonl", "faa.txt", "runlog.tsv"] {
        let actual = std::fs::read_to_string(dir.path().join(name)).unwrap();
        check_golden(&format!("fig1_run/{name}"), &actual);
    }

    // 3 queries x 6 schemes x 3 heuristics = 54 campaign rows, byte-stable.
    let synth = generate_synthetic(&SynthConfig {
        nv: 1_000,
        ne: 2_500,
        vlabels: 50,
        elabels: 40,
        template: Some(committed_template()),
        embed_count: 20,
        seed: 11,
    })
    .unwrap();
    let queries = vec![
        ("q4".to_string(), Query::parse(&fixture("queries/q4.query")).unwrap()),
        ("q5".to_string(), Query::parse(&fixture("queries/q5.query")).unwrap()),
        ("q6".to_string(), Query::parse(&fixture("queries/q6.query")).unwrap()),
    ];
    let schemes: Vec<(String, PartitionAssignment)> = (0..6)
        .map(|i| {
            let mut a = partition_builtin(&synth, 4, 100 + i).unwrap();
            a.scheme_name = format!("scheme{i}");
            (format!("scheme{i}"), a)
        })
        .collect();
    let report = run_campaign(&CampaignConfig {
        graph: &synth,
        queries,
        schemes,
        heuristics: Heuristic::ALL.to_vec(),
        mode: Mode::Opat,
        seed: 5,
        random_reps: 5,
    })
    .unwrap();
    assert_eq!(report.rows.len(), 54, "3 x 6 x 3 campaign must yield 54 rows");
    check_golden("campaign_report.tsv", &report.to_tsv());
    println!("[PASS] criterion 8: golden bookkeeping files match; campaign emits 54 rows");
}

// ---------------------------------------------------------------------------
// Criterion 9: full-scale scalability smoke test.
// ---------------------------------------------------------------------------

fn graph_size_estimate(g: &Graph) -> usize {
    let vbytes: usize = g.vertices().map(|v| 16 + v.label.len()).sum();
    let ebytes: usize = g.edges().iter().map(|e| 24 + e.elabel.len()).sum();
    vbytes + ebytes
}

#[test]
fn c9_scalability_smoke() {
    let started = Instant::now();
    let template = committed_template();
    let g = generate_synthetic(&SynthConfig {
        nv: 400_000,
        ne: 1_200_000,
        vlabels: 2_000,
        elabels: 4_000,
        template: Some(template),
        embed_count: 200,
        seed: 0x5CA1E,
    })
    .unwrap();
    let gen_s = started.elapsed().as_secs_f64();

    let assignment = partition_builtin(&g, 4, 1).unwrap();
    let parts = extend_with_cutset(&g, &assignment).unwrap();
    let graph_bytes = graph_size_estimate(&g);
    let max_part_bytes = parts.iter().map(|p| p.size_estimate()).max().unwrap();

    // Disk-resident partitions: the driver re-reads one file per load and
    // holds exactly one partition at a time.
    let dir = tempfile::tempdir().unwrap();
    let source = DirSource::write(dir.path(), &parts).unwrap();
    drop(parts);

    // Three-edge query over the planted template's labels.
    let q = Query::parse(
        "qv 1 s0\nqv 2 s1\nqv 3 s3\nqv 4 s4\nqe 1 2 u t01\nqe 2 3 u t13\nqe 3 4 u t34\n",
    )
    .unwrap();
    let cat = Catalog::build(&g);
    let oracle = oracle_match(&g, &q);
    assert_eq!(oracle.len(), 200, "one answer per planted template");

    let run_started = Instant::now();
    let out = run_opat(&source, &q, &cat, &RunOptions::new(Heuristic::MaxSn, 0)).unwrap();
    let run_s = run_started.elapsed().as_secs_f64();
    assert_eq!(out.faa.canonical_set(), oracle);

    // Peak-memory accounting: the OPAT driver holds one partition plus the
    // bookkeeping stores. That bound must be far below the whole graph.
    let faa_bytes: usize = out.faa.answers().iter().map(|a| a.canonical_line().len() + 48).sum();
    let bookkeeping_bytes = faa_bytes + out.runlog.al() * 64;
    let peak = max_part_bytes + bookkeeping_bytes;
    println!(
        "graph={graph_bytes}B max_partition={max_part_bytes}B bookkeeping={bookkeeping_bytes}B peak={peak}B"
    );
    assert!(
        (peak as f64) < 0.5 * graph_bytes as f64,
        "peak accounting {peak} not well below graph size {graph_bytes}"
    );

    let total_s = started.elapsed().as_secs_f64();
    assert!(total_s < 900.0, "smoke test exceeded 15 minutes: {total_s:.1}s");
    println!(
        "[PASS] criterion 9: 400K/1.2M graph, k=4, 3-edge query: {} answers, AL={}, gen={gen_s:.1}s run={run_s:.1}s total={total_s:.1}s",
        out.faa.len(),
        out.runlog.al()
    );
}
