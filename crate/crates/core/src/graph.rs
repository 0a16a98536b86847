//! Labeled-graph data model and Subdue-style text I/O.
//!
//! A graph file is line oriented. `#` starts a comment line. Vertex lines are
//! `v <vid> <label>` with an optional fourth partition-id token used by
//! extended partition files. Edge lines are `u <src> <dst> <label>` for
//! undirected and `d <src> <dst> <label>` for directed edges. Labels that
//! contain whitespace are double quoted.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Vertex identifier, unique within a graph or partition file.
pub type Vid = u32;

/// Partition identifier. `0` is reserved for "unpartitioned".
pub type Pid = u32;

pub const UNPARTITIONED: Pid = 0;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
pub enum Direction {
    Undirected,
    Directed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub vid: Vid,
    pub label: String,
    pub pid: Pid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub dir: Direction,
    pub svid: Vid,
    pub dvid: Vid,
    pub elabel: String,
}

/// One adjacency slot: the index of the incident edge in `Graph::edges`, the
/// neighbor reached through it, and whether this endpoint is the edge source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adj {
    pub edge_idx: usize,
    pub neighbor: Vid,
    pub out: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    vertices: std::collections::BTreeMap<Vid, Vertex>,
    edges: Vec<Edge>,
    adjacency: HashMap<Vid, Vec<Adj>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, vid: Vid) -> Option<&Vertex> {
        self.vertices.get(&vid)
    }

    pub fn contains_vertex(&self, vid: Vid) -> bool {
        self.vertices.contains_key(&vid)
    }

    /// Vertices in ascending vid order.
    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.values()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    /// Incident edges of `vid` in edge-insertion order. Undirected edges and
    /// directed edges both appear in the lists of both endpoints; `out`
    /// records the orientation.
    pub fn adjacency(&self, vid: Vid) -> &[Adj] {
        self.adjacency.get(&vid).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn add_vertex(&mut self, vid: Vid, label: impl Into<String>, pid: Pid) -> Result<()> {
        if vid == 0 {
            return Err(Error::Invalid("vertex ids must be positive".into()));
        }
        if self.vertices.contains_key(&vid) {
            return Err(Error::Invalid(format!("duplicate vertex id {vid}")));
        }
        self.vertices.insert(
            vid,
            Vertex {
                vid,
                label: label.into(),
                pid,
            },
        );
        Ok(())
    }

    pub fn add_edge(
        &mut self,
        dir: Direction,
        svid: Vid,
        dvid: Vid,
        elabel: impl Into<String>,
    ) -> Result<()> {
        for vid in [svid, dvid] {
            if !self.vertices.contains_key(&vid) {
                return Err(Error::UnknownVertex { line: 0, vid });
            }
        }
        let edge_idx = self.edges.len();
        self.edges.push(Edge {
            dir,
            svid,
            dvid,
            elabel: elabel.into(),
        });
        self.adjacency.entry(svid).or_default().push(Adj {
            edge_idx,
            neighbor: dvid,
            out: true,
        });
        self.adjacency.entry(dvid).or_default().push(Adj {
            edge_idx,
            neighbor: svid,
            out: false,
        });
        Ok(())
    }

    /// Parses a graph from its text form. Unknown pid fields default to 0.
    pub fn parse(text: &str) -> Result<Graph> {
        let (g, _) = parse_with_cutset(text)?;
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in self.vertices.values() {
            if v.pid == UNPARTITIONED {
                let _ = writeln!(out, "v {} {}", v.vid, quote_label(&v.label));
            } else {
                let _ = writeln!(out, "v {} {} {}", v.vid, quote_label(&v.label), v.pid);
            }
        }
        for e in &self.edges {
            let _ = writeln!(out, "{}", edge_line(e));
        }
        out
    }

    /// Structural equality: same vertex set (vid, label, pid) and the same
    /// edge multiset. Edge order is irrelevant.
    pub fn structurally_eq(&self, other: &Graph) -> bool {
        self.vertices == other.vertices && self.same_edge_multiset(other)
    }

    /// Structural equality disregarding partition ids, for comparing a
    /// reassembled partitioned graph against its unpartitioned original.
    pub fn structurally_eq_ignoring_pid(&self, other: &Graph) -> bool {
        if self.vertices.len() != other.vertices.len() {
            return false;
        }
        let same_vertices = self
            .vertices
            .values()
            .zip(other.vertices.values())
            .all(|(a, b)| a.vid == b.vid && a.label == b.label);
        same_vertices && self.same_edge_multiset(other)
    }

    fn same_edge_multiset(&self, other: &Graph) -> bool {
        let mut a: Vec<&Edge> = self.edges.iter().collect();
        let mut b: Vec<&Edge> = other.edges.iter().collect();
        let key = |e: &&Edge| (e.dir, e.svid, e.dvid, e.elabel.clone());
        a.sort_by_key(key);
        b.sort_by_key(key);
        a == b
    }
}

pub(crate) fn edge_line(e: &Edge) -> String {
    let tag = match e.dir {
        Direction::Undirected => "u",
        Direction::Directed => "d",
    };
    format!("{} {} {} {}", tag, e.svid, e.dvid, quote_label(&e.elabel))
}

/// Parses graph text, splitting edges that appear after a `# cutset` marker
/// line into a separate list. Used by both whole-graph and extended-partition
/// readers.
pub(crate) fn parse_with_cutset(text: &str) -> Result<(Graph, Vec<usize>)> {
    let mut g = Graph::new();
    let mut cut_indices = Vec::new();
    let mut in_cutset = false;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if comment.trim() == "cutset" {
                in_cutset = true;
            }
            continue;
        }
        let tokens = tokenize(line, lineno)?;
        match tokens[0].as_str() {
            "v" => {
                if tokens.len() != 3 && tokens.len() != 4 {
                    return Err(Error::parse(lineno, "expected `v <vid> <label> [pid]`"));
                }
                let vid = parse_num::<Vid>(&tokens[1], lineno, "vertex id")?;
                if vid == 0 {
                    return Err(Error::parse(lineno, "vertex ids must be positive"));
                }
                let pid = if tokens.len() == 4 {
                    parse_num::<Pid>(&tokens[3], lineno, "partition id")?
                } else {
                    UNPARTITIONED
                };
                if g.vertices.contains_key(&vid) {
                    return Err(Error::parse(lineno, format!("duplicate vertex id {vid}")));
                }
                g.vertices.insert(
                    vid,
                    Vertex {
                        vid,
                        label: tokens[2].clone(),
                        pid,
                    },
                );
            }
            tag @ ("u" | "d") => {
                if tokens.len() != 4 {
                    return Err(Error::parse(lineno, "expected `u|d <src> <dst> <label>`"));
                }
                let svid = parse_num::<Vid>(&tokens[1], lineno, "source vertex id")?;
                let dvid = parse_num::<Vid>(&tokens[2], lineno, "destination vertex id")?;
                for vid in [svid, dvid] {
                    if !g.vertices.contains_key(&vid) {
                        return Err(Error::UnknownVertex { line: lineno, vid });
                    }
                }
                let dir = if tag == "u" {
                    Direction::Undirected
                } else {
                    Direction::Directed
                };
                if in_cutset {
                    cut_indices.push(g.edges.len());
                }
                let elabel = tokens[3].clone();
                let edge_idx = g.edges.len();
                g.edges.push(Edge {
                    dir,
                    svid,
                    dvid,
                    elabel,
                });
                g.adjacency.entry(svid).or_default().push(Adj {
                    edge_idx,
                    neighbor: dvid,
                    out: true,
                });
                g.adjacency.entry(dvid).or_default().push(Adj {
                    edge_idx,
                    neighbor: svid,
                    out: false,
                });
            }
            other => {
                return Err(Error::parse(lineno, format!("unknown record `{other}`")));
            }
        }
    }
    Ok((g, cut_indices))
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse::<T>()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

/// Splits a line into whitespace-separated tokens. A token starting with `"`
/// runs to the matching close quote and may contain spaces; `\"` and `\\`
/// escape a quote and a backslash inside it.
pub(crate) fn tokenize(line: &str, lineno: usize) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '"' {
            chars.next();
            let mut tok = String::new();
            let mut closed = false;
            while let Some(c) = chars.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match chars.next() {
                        Some(esc @ ('"' | '\\')) => tok.push(esc),
                        _ => return Err(Error::parse(lineno, "bad escape in quoted label")),
                    },
                    c => tok.push(c),
                }
            }
            if !closed {
                return Err(Error::parse(lineno, "unterminated quoted label"));
            }
            tokens.push(tok);
        } else {
            let mut tok = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                tok.push(c);
                chars.next();
            }
            tokens.push(tok);
        }
    }
    if tokens.is_empty() {
        return Err(Error::parse(lineno, "empty record"));
    }
    Ok(tokens)
}

/// Renders a label, quoting it when it contains whitespace, quotes or is
/// empty, so that `tokenize` reads it back verbatim.
pub(crate) fn quote_label(label: &str) -> String {
    let needs_quotes = label.is_empty()
        || label.contains(char::is_whitespace)
        || label.contains('"')
        || label.contains('\\')
        || label.starts_with('#');
    if needs_quotes {
        let mut out = String::with_capacity(label.len() + 2);
        out.push('"');
        for c in label.chars() {
            if c == '"' || c == '\\' {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('"');
        out
    } else {
        label.to_string()
    }
}
