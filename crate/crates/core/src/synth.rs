//! Synthetic graph generator with planted substructures.
//!
//! Plants `embed_count` vertex-disjoint copies of a concrete template first,
//! then fills the remaining vertices and edges uniformly over generated label
//! alphabets (`v0..v{n}`, `e0..e{n}`). The random alphabets are disjoint from
//! typical template labels, so a template-shaped query counts exactly the
//! planted instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Direction, Graph, Vid};
use crate::query::{Predicate, Query, QueryEdge, QueryGraph};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub nv: u32,
    pub ne: usize,
    /// Size of the random vertex-label alphabet.
    pub vlabels: u32,
    /// Size of the random edge-label alphabet.
    pub elabels: u32,
    /// Concrete labeled graph to embed; `None` plants nothing.
    pub template: Option<Graph>,
    pub embed_count: u32,
    pub seed: u64,
}

impl SynthConfig {
    pub fn random_only(nv: u32, ne: usize, vlabels: u32, elabels: u32, seed: u64) -> SynthConfig {
        SynthConfig {
            nv,
            ne,
            vlabels,
            elabels,
            template: None,
            embed_count: 0,
            seed,
        }
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Graph> {
    let (tv, te) = match (&cfg.template, cfg.embed_count) {
        (Some(t), n) if n > 0 => (t.vertex_count(), t.edge_count()),
        _ => (0, 0),
    };
    let planted_v = tv * cfg.embed_count as usize;
    let planted_e = te * cfg.embed_count as usize;
    if planted_v > cfg.nv as usize {
        return Err(Error::Infeasible(format!(
            "{} template copies need {planted_v} vertices but nv={}",
            cfg.embed_count, cfg.nv
        )));
    }
    if planted_e > cfg.ne {
        return Err(Error::Infeasible(format!(
            "{} template copies need {planted_e} edges but ne={}",
            cfg.embed_count, cfg.ne
        )));
    }
    if cfg.nv > planted_v as u32 && cfg.vlabels == 0 {
        return Err(Error::Infeasible("vlabels must be positive".into()));
    }
    if cfg.ne > planted_e && cfg.elabels == 0 {
        return Err(Error::Infeasible("elabels must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut g = Graph::new();
    let mut next_vid: Vid = 1;

    if let Some(template) = &cfg.template {
        for _ in 0..cfg.embed_count {
            let mut remap = std::collections::BTreeMap::new();
            for v in template.vertices() {
                remap.insert(v.vid, next_vid);
                g.add_vertex(next_vid, v.label.clone(), 0)?;
                next_vid += 1;
            }
            for e in template.edges() {
                g.add_edge(e.dir, remap[&e.svid], remap[&e.dvid], e.elabel.clone())?;
            }
        }
    }

    while next_vid <= cfg.nv {
        g.add_vertex(next_vid, format!("v{}", rng.gen_range(0..cfg.vlabels)), 0)?;
        next_vid += 1;
    }
    for _ in 0..cfg.ne - planted_e {
        let s = rng.gen_range(1..=cfg.nv);
        let d = rng.gen_range(1..=cfg.nv);
        g.add_edge(
            Direction::Undirected,
            s,
            d,
            format!("e{}", rng.gen_range(0..cfg.elabels)),
        )?;
    }
    Ok(g)
}

/// Turns a concrete labeled graph into the query matching exactly its shape:
/// each vertex becomes an exact-label node, each edge an exact-label edge.
pub fn template_as_query(template: &Graph) -> Query {
    let qnodes = template
        .vertices()
        .map(|v| (v.vid, Predicate::Exact(v.label.clone())))
        .collect();
    let qedges = template
        .edges()
        .iter()
        .map(|e| QueryEdge {
            qsrc: e.svid,
            qdst: e.dvid,
            dir: e.dir,
            pred: Predicate::Exact(e.elabel.clone()),
        })
        .collect();
    Query {
        disjuncts: vec![QueryGraph { qnodes, qedges }],
        limit: None,
    }
}
