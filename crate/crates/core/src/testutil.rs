//! Shared fixtures for unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Direction, Graph, Vid};

/// Reconstruction of the sample movie graph: the partition-P2 vertex/edge
/// tables (vertices 5-10) plus an actor side that stays in partition 1.
pub(crate) const SAMPLE_MOVIE_GRAPH: &str = r#"
    v 1 Person
    v 2 "John Doe"
    v 3 Person
    v 4 "Jane Roe"
    v 5 "Beyond All Boundaries"
    v 6 2011
    v 7 Drama
    v 8 Year
    v 9 Movie
    v 10 Genre
    u 2 5 "acted in"
    u 4 5 "acted in"
    u 2 1 is
    u 4 3 is
    u 5 6 "In year"
    u 5 7 "Genre is"
    u 5 9 is
    u 6 8 is
    u 7 10 is
"#;

/// Connected random graph: a spanning tree plus `extra_edges` uniform edges,
/// with vertex labels drawn from `l0..l5`.
pub(crate) fn random_graph(n: Vid, extra_edges: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new();
    for vid in 1..=n {
        g.add_vertex(vid, format!("l{}", rng.gen_range(0..6)), 0).unwrap();
    }
    for vid in 2..=n {
        let other = rng.gen_range(1..vid);
        g.add_edge(Direction::Undirected, vid, other, "t").unwrap();
    }
    for _ in 0..extra_edges {
        let s = rng.gen_range(1..=n);
        let d = rng.gen_range(1..=n);
        g.add_edge(Direction::Undirected, s, d, "e").unwrap();
    }
    g
}
