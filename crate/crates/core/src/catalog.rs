//! Graph catalog: label statistics gathered in a single pass and consumed by
//! the cost-based planner.

use std::collections::BTreeMap;

use crate::graph::Graph;

/// Statistics for one (source label, edge label, neighbor label) triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleStats {
    /// Number of (vertex labeled A, incident edge labeled E, neighbor labeled
    /// B) adjacency slots in the graph.
    pub connection_count: u64,
    /// `connection_count / instance_count(A)`: average number of B-neighbors
    /// over E-edges per A-vertex.
    pub avg_connection: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    vertex_count: u64,
    instance_counts: BTreeMap<String, u64>,
    triples: BTreeMap<(String, String, String), TripleStats>,
    /// Labels fully parseable as decimal numbers, with their numeric value.
    /// Mixed labels are treated as plain strings and do not appear here.
    numeric: BTreeMap<String, f64>,
}

impl Catalog {
    /// Builds the catalog in one pass over vertices and adjacency lists.
    pub fn build(g: &Graph) -> Catalog {
        let mut cat = Catalog {
            vertex_count: g.vertex_count() as u64,
            ..Catalog::default()
        };
        for v in g.vertices() {
            *cat.instance_counts.entry(v.label.clone()).or_insert(0) += 1;
            if let Ok(num) = v.label.trim().parse::<f64>() {
                cat.numeric.insert(v.label.clone(), num);
            }
        }
        let mut counts: BTreeMap<(String, String, String), u64> = BTreeMap::new();
        for v in g.vertices() {
            for adj in g.adjacency(v.vid) {
                let e = g.edge(adj.edge_idx);
                let neighbor = g.vertex(adj.neighbor).expect("adjacency points at vertex");
                *counts
                    .entry((v.label.clone(), e.elabel.clone(), neighbor.label.clone()))
                    .or_insert(0) += 1;
            }
        }
        for ((a, e, b), connection_count) in counts {
            let instances = cat.instance_counts[&a];
            cat.triples.insert(
                (a, e, b),
                TripleStats {
                    connection_count,
                    avg_connection: connection_count as f64 / instances as f64,
                },
            );
        }
        cat
    }

    pub fn vertex_count(&self) -> u64 {
        self.vertex_count
    }

    pub fn instance_count(&self, label: &str) -> u64 {
        self.instance_counts.get(label).copied().unwrap_or(0)
    }

    /// All distinct vertex labels with their instance counts.
    pub fn labels(&self) -> impl Iterator<Item = (&str, u64)> {
        self.instance_counts.iter().map(|(l, &c)| (l.as_str(), c))
    }

    pub fn triple(&self, a: &str, elabel: &str, b: &str) -> Option<TripleStats> {
        self.triples
            .get(&(a.to_string(), elabel.to_string(), b.to_string()))
            .copied()
    }

    pub fn avg_connection(&self, a: &str, elabel: &str, b: &str) -> Option<f64> {
        self.triple(a, elabel, b).map(|t| t.avg_connection)
    }

    /// Numeric value of a label, when the label parses as a number.
    pub fn numeric_value(&self, label: &str) -> Option<f64> {
        self.numeric.get(label).copied()
    }

    /// Minimum value over all numeric labels.
    pub fn min_value(&self) -> Option<f64> {
        self.numeric.values().copied().fold(None, |m, v| {
            Some(m.map_or(v, |m: f64| m.min(v)))
        })
    }

    /// Maximum value over all numeric labels.
    pub fn max_value(&self) -> Option<f64> {
        self.numeric.values().copied().fold(None, |m, v| {
            Some(m.map_or(v, |m: f64| m.max(v)))
        })
    }
}
