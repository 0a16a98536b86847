//! Connected-component labeling. Edge direction is ignored: the component
//! structure describes which vertices are mutually reachable when a partition
//! is resident, which is what the re-load heuristics care about.

use std::collections::BTreeMap;

use crate::graph::{Graph, Vid};

/// Union-find over dense indices, union by size with path compression.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, x: usize, y: usize) {
        let mut a = self.find(x);
        let mut b = self.find(y);
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.size[a] += self.size[b];
        self.parent[b] = a;
        self.components -= 1;
    }

    pub fn component_count(&self) -> usize {
        self.components
    }
}

/// Component labeling of a vertex set: `count` components, and for every
/// vertex the smallest vid of its component as a canonical component id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub count: usize,
    pub labels: BTreeMap<Vid, Vid>,
}

impl Components {
    pub fn same_component(&self, a: Vid, b: Vid) -> bool {
        match (self.labels.get(&a), self.labels.get(&b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }
}

/// Labels the connected components of `g`, treating every edge as undirected.
pub fn connected_components(g: &Graph) -> Components {
    let vids: Vec<Vid> = g.vertices().map(|v| v.vid).collect();
    let index: BTreeMap<Vid, usize> = vids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::new(vids.len());
    for e in g.edges() {
        uf.union(index[&e.svid], index[&e.dvid]);
    }
    label_components(&vids, &index, &mut uf)
}

/// Shared labeling step: canonical id = minimum vid in the component.
pub(crate) fn label_components(
    vids: &[Vid],
    index: &BTreeMap<Vid, usize>,
    uf: &mut UnionFind,
) -> Components {
    let mut root_min: BTreeMap<usize, Vid> = BTreeMap::new();
    for &vid in vids {
        let root = uf.find(index[&vid]);
        root_min.entry(root).or_insert(vid);
    }
    let labels = vids
        .iter()
        .map(|&vid| (vid, root_min[&uf.find(index[&vid])]))
        .collect();
    Components {
        count: uf.component_count(),
        labels,
    }
}
