//! Partition assignments, cut-set extension and partitioning-scheme metrics.
//!
//! Assignments are either imported (METIS convention: line `i` holds the
//! 0-based partition of the `i`-th vertex in ascending vid order) or produced
//! by a built-in seeded breadth-first grower used for self-contained tests.
//! Each partition is then extended with its one-edge cut set: every cut edge
//! is replicated into both incident partitions together with the remote
//! endpoint, which is stored with its home partition id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::components::{label_components, Components, UnionFind};
use crate::error::{Error, Result};
use crate::graph::{self, Adj, Edge, Graph, Pid, Vertex, Vid};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionAssignment {
    pub k: Pid,
    pub map: BTreeMap<Vid, Pid>,
    pub scheme_name: String,
}

impl PartitionAssignment {
    /// Renders the assignment in METIS convention (0-based, one line per
    /// vertex in ascending vid order).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for pid in self.map.values() {
            let _ = writeln!(out, "{}", pid - 1);
        }
        out
    }
}

/// A partition plus its replicated one-edge cut-set information: the unit of
/// loading for all execution strategies.
#[derive(Debug, Clone)]
pub struct ExtendedPartition {
    pub pid: Pid,
    /// Vertices homed here; their `pid` field equals `self.pid`.
    pub local_vertices: BTreeMap<Vid, Vertex>,
    /// Replicated endpoints of cut edges; `pid` names the home partition.
    pub boundary_vertices: BTreeMap<Vid, Vertex>,
    /// Edges with both endpoints local.
    pub local_edges: Vec<Edge>,
    /// Edges with exactly one local endpoint, replicated into both sides.
    pub cut_edges: Vec<Edge>,
    adjacency: HashMap<Vid, Vec<Adj>>,
    components: Components,
}

impl ExtendedPartition {
    fn build(
        pid: Pid,
        local_vertices: BTreeMap<Vid, Vertex>,
        boundary_vertices: BTreeMap<Vid, Vertex>,
        local_edges: Vec<Edge>,
        cut_edges: Vec<Edge>,
    ) -> ExtendedPartition {
        // Adjacency over local + cut edges; indices < local_edges.len() are
        // local, the rest index into cut_edges.
        let mut adjacency: HashMap<Vid, Vec<Adj>> = HashMap::new();
        for (edge_idx, e) in local_edges.iter().chain(cut_edges.iter()).enumerate() {
            adjacency.entry(e.svid).or_default().push(Adj {
                edge_idx,
                neighbor: e.dvid,
                out: true,
            });
            adjacency.entry(e.dvid).or_default().push(Adj {
                edge_idx,
                neighbor: e.svid,
                out: false,
            });
        }
        // Components over local vertices and local edges only: boundary
        // vertices are reachable only through their home partition.
        let vids: Vec<Vid> = local_vertices.keys().copied().collect();
        let index: BTreeMap<Vid, usize> = vids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut uf = UnionFind::new(vids.len());
        for e in &local_edges {
            uf.union(index[&e.svid], index[&e.dvid]);
        }
        let components = label_components(&vids, &index, &mut uf);
        ExtendedPartition {
            pid,
            local_vertices,
            boundary_vertices,
            local_edges,
            cut_edges,
            adjacency,
            components,
        }
    }

    pub fn is_local(&self, vid: Vid) -> bool {
        self.local_vertices.contains_key(&vid)
    }

    /// The vertex record for a vid present in this partition file, local or
    /// boundary.
    pub fn vertex(&self, vid: Vid) -> Option<&Vertex> {
        self.local_vertices
            .get(&vid)
            .or_else(|| self.boundary_vertices.get(&vid))
    }

    /// Incident local and cut edges of `vid` as seen from this partition.
    /// Complete for local vertices; for boundary vertices it covers only the
    /// replicated cut edges.
    pub fn adjacency(&self, vid: Vid) -> &[Adj] {
        self.adjacency.get(&vid).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        if idx < self.local_edges.len() {
            &self.local_edges[idx]
        } else {
            &self.cut_edges[idx - self.local_edges.len()]
        }
    }

    /// Connected components over local vertices and local edges.
    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn local_vertex_count(&self) -> usize {
        self.local_vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.local_edges.len() + self.cut_edges.len()
    }

    /// Rough resident-size estimate in bytes, used for load accounting.
    pub fn size_estimate(&self) -> usize {
        let vbytes: usize = self
            .local_vertices
            .values()
            .chain(self.boundary_vertices.values())
            .map(|v| 16 + v.label.len())
            .sum();
        let ebytes: usize = self
            .local_edges
            .iter()
            .chain(self.cut_edges.iter())
            .map(|e| 24 + e.elabel.len())
            .sum();
        vbytes + ebytes
    }

    /// Serializes the partition file: local then boundary vertices (4-token
    /// `v` lines), local edges, then cut edges after a `# cutset` marker.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# partition {}", self.pid);
        for v in self.local_vertices.values() {
            let _ = writeln!(out, "v {} {} {}", v.vid, graph::quote_label(&v.label), v.pid);
        }
        for v in self.boundary_vertices.values() {
            let _ = writeln!(out, "v {} {} {}", v.vid, graph::quote_label(&v.label), v.pid);
        }
        for e in &self.local_edges {
            let _ = writeln!(out, "{}", graph::edge_line(e));
        }
        let _ = writeln!(out, "# cutset");
        for e in &self.cut_edges {
            let _ = writeln!(out, "{}", graph::edge_line(e));
        }
        out
    }

    /// Parses a partition file previously written by `to_text`. `own_pid`
    /// tells boundary vertices (any other pid) apart from local ones.
    pub fn parse(text: &str, own_pid: Pid) -> Result<ExtendedPartition> {
        let (g, cut_indices) = graph::parse_with_cutset(text)?;
        let cut_set: BTreeSet<usize> = cut_indices.into_iter().collect();
        let mut local_vertices = BTreeMap::new();
        let mut boundary_vertices = BTreeMap::new();
        for v in g.vertices() {
            if v.pid == own_pid {
                local_vertices.insert(v.vid, v.clone());
            } else {
                boundary_vertices.insert(v.vid, v.clone());
            }
        }
        let mut local_edges = Vec::new();
        let mut cut_edges = Vec::new();
        for (idx, e) in g.edges().iter().enumerate() {
            if cut_set.contains(&idx) {
                cut_edges.push(e.clone());
            } else {
                local_edges.push(e.clone());
            }
        }
        Ok(ExtendedPartition::build(
            own_pid,
            local_vertices,
            boundary_vertices,
            local_edges,
            cut_edges,
        ))
    }
}

/// Per-scheme connected-component metrics used by the CC heuristics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeMetrics {
    pub scheme_name: String,
    /// (pid, cc count, local vertex count, edge count incl. cut edges).
    pub per_partition: Vec<(Pid, usize, usize, usize)>,
    pub total_cc: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcMode {
    MinCc,
    MaxCc,
    RandomCc,
}

impl std::str::FromStr for CcMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min-cc" => Ok(CcMode::MinCc),
            "max-cc" => Ok(CcMode::MaxCc),
            "random-cc" => Ok(CcMode::RandomCc),
            other => Err(Error::Invalid(format!("unknown scheme choice `{other}`"))),
        }
    }
}

/// Imports a METIS-style assignment: line `i` holds the 0-based pid of the
/// `i`-th vertex in ascending vid order. Stored 1-based.
pub fn import_assignment(
    g: &Graph,
    lines: &str,
    k: Pid,
    scheme_name: impl Into<String>,
) -> Result<PartitionAssignment> {
    let values: Vec<&str> = lines
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if values.len() != g.vertex_count() {
        return Err(Error::Invalid(format!(
            "assignment has {} lines but graph has {} vertices",
            values.len(),
            g.vertex_count()
        )));
    }
    let mut map = BTreeMap::new();
    for (v, tok) in g.vertices().zip(values) {
        let raw: Pid = tok
            .parse()
            .map_err(|_| Error::Invalid(format!("invalid partition id `{tok}`")))?;
        if raw >= k {
            return Err(Error::Invalid(format!(
                "partition id {raw} out of range for k={k}"
            )));
        }
        map.insert(v.vid, raw + 1);
    }
    Ok(PartitionAssignment {
        k,
        map,
        scheme_name: scheme_name.into(),
    })
}

/// Built-in seeded partitioner: multi-source breadth-first growth from
/// farthest-point seeds, balancing vertex counts with a hard cap of
/// ceil(n/k) per partition. Self-contained substitute for an external
/// partitioner in tests; max partition size is at most ceil(n/k) + k.
pub fn partition_builtin(g: &Graph, k: Pid, seed: u64) -> Result<PartitionAssignment> {
    let n = g.vertex_count();
    if k < 1 || k as usize > n {
        return Err(Error::Invalid(format!(
            "k={k} out of range for a {n}-vertex graph"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vids: Vec<Vid> = g.vertices().map(|v| v.vid).collect();

    // First seed: pseudo-peripheral vertex found by a double BFS sweep from a
    // random start. Remaining seeds: farthest-point selection.
    let start = vids[rng.gen_range(0..vids.len())];
    let first = bfs_farthest(g, &[start]);
    let mut seeds = vec![first];
    for _ in 1..k {
        seeds.push(bfs_farthest(g, &seeds));
    }

    let cap = n.div_ceil(k as usize);
    let mut assignment: BTreeMap<Vid, Pid> = BTreeMap::new();
    let mut sizes: Vec<usize> = vec![0; k as usize];
    let mut frontiers: Vec<std::collections::VecDeque<Vid>> =
        vec![std::collections::VecDeque::new(); k as usize];
    for (i, &s) in seeds.iter().enumerate() {
        frontiers[i].push_back(s);
    }
    let mut assigned = 0usize;
    while assigned < n {
        // Grow the currently smallest partition that is below its cap.
        let grow = (0..k as usize)
            .filter(|&i| sizes[i] < cap)
            .min_by_key(|&i| (sizes[i], i))
            .expect("total capacity covers the graph");
        let claimed = loop {
            match frontiers[grow].pop_front() {
                Some(v) if !assignment.contains_key(&v) => break Some(v),
                Some(_) => continue,
                None => break None,
            }
        };
        let v = match claimed {
            Some(v) => v,
            None => {
                // Frontier exhausted (disconnected remainder): restart from
                // the smallest unassigned vid.
                *vids
                    .iter()
                    .find(|v| !assignment.contains_key(v))
                    .expect("unassigned vertex exists while assigned < n")
            }
        };
        assignment.insert(v, grow as Pid + 1);
        sizes[grow] += 1;
        assigned += 1;
        for adj in g.adjacency(v) {
            if !assignment.contains_key(&adj.neighbor) {
                frontiers[grow].push_back(adj.neighbor);
            }
        }
    }
    Ok(PartitionAssignment {
        k,
        map: assignment,
        scheme_name: "builtin-greedy".to_string(),
    })
}

/// Farthest vertex from a set of sources by multi-source BFS; unreachable
/// vertices count as infinitely far. Ties go to the smallest vid.
fn bfs_farthest(g: &Graph, sources: &[Vid]) -> Vid {
    let mut dist: BTreeMap<Vid, usize> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();
    for &s in sources {
        dist.insert(s, 0);
        queue.push_back(s);
    }
    let mut best = sources[0];
    let mut best_d = 0usize;
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d > best_d || (d == best_d && v < best) {
            best_d = d;
            best = v;
        }
        for adj in g.adjacency(v) {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(adj.neighbor) {
                e.insert(d + 1);
                queue.push_back(adj.neighbor);
            }
        }
    }
    if let Some(v) = g.vertices().map(|v| v.vid).find(|v| !dist.contains_key(v)) {
        return v; // disconnected vertex: farther than anything reached
    }
    best
}

/// Splits `g` into k extended partitions. Every cut edge is replicated into
/// both incident partitions along with the remote endpoint.
pub fn extend_with_cutset(g: &Graph, a: &PartitionAssignment) -> Result<Vec<ExtendedPartition>> {
    for v in g.vertices() {
        match a.map.get(&v.vid) {
            Some(&pid) if pid >= 1 && pid <= a.k => {}
            Some(&pid) => {
                return Err(Error::Invalid(format!(
                    "vertex {} assigned out-of-range partition {pid}",
                    v.vid
                )))
            }
            None => {
                return Err(Error::Invalid(format!("vertex {} unassigned", v.vid)));
            }
        }
    }
    let mut locals: Vec<BTreeMap<Vid, Vertex>> = vec![BTreeMap::new(); a.k as usize];
    let mut boundaries: Vec<BTreeMap<Vid, Vertex>> = vec![BTreeMap::new(); a.k as usize];
    let mut local_edges: Vec<Vec<Edge>> = vec![Vec::new(); a.k as usize];
    let mut cut_edges: Vec<Vec<Edge>> = vec![Vec::new(); a.k as usize];

    for v in g.vertices() {
        let pid = a.map[&v.vid];
        locals[pid as usize - 1].insert(
            v.vid,
            Vertex {
                vid: v.vid,
                label: v.label.clone(),
                pid,
            },
        );
    }
    for e in g.edges() {
        let sp = a.map[&e.svid];
        let dp = a.map[&e.dvid];
        if sp == dp {
            local_edges[sp as usize - 1].push(e.clone());
        } else {
            cut_edges[sp as usize - 1].push(e.clone());
            cut_edges[dp as usize - 1].push(e.clone());
            let sv = locals[sp as usize - 1][&e.svid].clone();
            let dv = locals[dp as usize - 1][&e.dvid].clone();
            boundaries[sp as usize - 1].entry(e.dvid).or_insert(dv);
            boundaries[dp as usize - 1].entry(e.svid).or_insert(sv);
        }
    }

    let mut parts = Vec::with_capacity(a.k as usize);
    for pid in 1..=a.k {
        let i = pid as usize - 1;
        parts.push(ExtendedPartition::build(
            pid,
            std::mem::take(&mut locals[i]),
            std::mem::take(&mut boundaries[i]),
            std::mem::take(&mut local_edges[i]),
            std::mem::take(&mut cut_edges[i]),
        ));
    }
    Ok(parts)
}

/// Reassembles the original graph from extended partitions: local vertices
/// and edges of every partition plus one copy of each replicated cut edge.
pub fn merge_partitions(parts: &[ExtendedPartition]) -> Result<Graph> {
    let mut g = Graph::new();
    for p in parts {
        for v in p.local_vertices.values() {
            g.add_vertex(v.vid, v.label.clone(), v.pid)?;
        }
    }
    for p in parts {
        for e in &p.local_edges {
            g.add_edge(e.dir, e.svid, e.dvid, e.elabel.clone())?;
        }
        for e in &p.cut_edges {
            // Replicated in both incident partitions: keep the copy seen from
            // the source endpoint's home partition.
            if p.is_local(e.svid) {
                g.add_edge(e.dir, e.svid, e.dvid, e.elabel.clone())?;
            }
        }
    }
    Ok(g)
}

/// Computes CC metrics for one partitioning scheme. Components are counted
/// over local vertices and local edges only.
pub fn scheme_metrics(scheme_name: impl Into<String>, parts: &[ExtendedPartition]) -> SchemeMetrics {
    let per_partition: Vec<(Pid, usize, usize, usize)> = parts
        .iter()
        .map(|p| (p.pid, p.components().count, p.local_vertex_count(), p.edge_count()))
        .collect();
    let total_cc = per_partition.iter().map(|&(_, cc, _, _)| cc).sum();
    SchemeMetrics {
        scheme_name: scheme_name.into(),
        per_partition,
        total_cc,
    }
}

/// Picks a partitioning scheme by total connected components. Ties are broken
/// by lexicographic scheme name for reproducibility.
pub fn choose_scheme(schemes: &[SchemeMetrics], mode: CcMode, seed: u64) -> Result<&SchemeMetrics> {
    if schemes.is_empty() {
        return Err(Error::Invalid("no schemes to choose from".into()));
    }
    let chosen = match mode {
        CcMode::MinCc => schemes
            .iter()
            .min_by_key(|s| (s.total_cc, s.scheme_name.clone()))
            .unwrap(),
        CcMode::MaxCc => schemes
            .iter()
            .max_by_key(|s| (s.total_cc, std::cmp::Reverse(s.scheme_name.clone())))
            .unwrap(),
        CcMode::RandomCc => {
            let mut order: Vec<usize> = (0..schemes.len()).collect();
            order.sort_by(|&a, &b| schemes[a].scheme_name.cmp(&schemes[b].scheme_name));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx = *order.choose(&mut rng).unwrap();
            &schemes[idx]
        }
    };
    Ok(chosen)
}

/// Supplies extended partitions to the execution engines one at a time, so a
/// driver never has to keep more than the partition it is processing.
/// Sources are shared read-only across worker threads.
pub trait PartitionSource: Send + Sync {
    fn pids(&self) -> Vec<Pid>;
    fn load(&self, pid: Pid) -> Result<ExtendedPartition>;
}

/// All partitions resident in memory. Loading clones nothing; partitions are
/// handed out by clone only through the trait for interface parity.
pub struct InMemorySource {
    parts: Vec<ExtendedPartition>,
}

impl InMemorySource {
    pub fn new(parts: Vec<ExtendedPartition>) -> Self {
        InMemorySource { parts }
    }

    pub fn parts(&self) -> &[ExtendedPartition] {
        &self.parts
    }
}

impl PartitionSource for InMemorySource {
    fn pids(&self) -> Vec<Pid> {
        self.parts.iter().map(|p| p.pid).collect()
    }

    fn load(&self, pid: Pid) -> Result<ExtendedPartition> {
        self.parts
            .iter()
            .find(|p| p.pid == pid)
            .cloned()
            .ok_or_else(|| Error::Bookkeeping(format!("no partition {pid}")))
    }
}

/// Disk-resident partitions: one `partition_<pid>.graph` file per partition
/// in a directory. Each load parses the file afresh.
pub struct DirSource {
    dir: PathBuf,
    pids: Vec<Pid>,
}

impl DirSource {
    pub fn write(dir: &Path, parts: &[ExtendedPartition]) -> Result<DirSource> {
        std::fs::create_dir_all(dir)?;
        let mut pids = Vec::new();
        for p in parts {
            std::fs::write(Self::path(dir, p.pid), p.to_text())?;
            pids.push(p.pid);
        }
        Ok(DirSource {
            dir: dir.to_path_buf(),
            pids,
        })
    }

    pub fn open(dir: &Path) -> Result<DirSource> {
        let mut pids = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(stem) = name.strip_prefix("partition_").and_then(|s| s.strip_suffix(".graph")) {
                let pid: Pid = stem
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad partition file name {name}")))?;
                pids.push(pid);
            }
        }
        if pids.is_empty() {
            return Err(Error::Invalid(format!(
                "no partition_<pid>.graph files in {}",
                dir.display()
            )));
        }
        pids.sort_unstable();
        Ok(DirSource {
            dir: dir.to_path_buf(),
            pids,
        })
    }

    fn path(dir: &Path, pid: Pid) -> PathBuf {
        dir.join(format!("partition_{pid}.graph"))
    }
}

impl PartitionSource for DirSource {
    fn pids(&self) -> Vec<Pid> {
        self.pids.clone()
    }

    fn load(&self, pid: Pid) -> Result<ExtendedPartition> {
        let text = std::fs::read_to_string(Self::path(&self.dir, pid))?;
        ExtendedPartition::parse(&text, pid)
    }
}
