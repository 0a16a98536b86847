//! Partitioned graph query processor.
//!
//! Evaluates expressive subgraph queries over disk-resident graph partitions
//! using three interchangeable execution strategies: one partition at a time
//! (OPAT), iteration-parallel processing of up to `p` partitions
//! (TraditionalMP), and a map/reduce-shaped dataflow that advances partial
//! answers by one plan edge per iteration (MapReduceMP). A whole-graph
//! brute-force matcher serves as the correctness oracle.

pub mod bookkeeping;
pub mod campaign;
pub mod catalog;
pub mod components;
pub mod error;
pub mod graph;
pub mod matcher;
pub mod opat;
pub mod parallel;
pub mod partition;
pub mod plan;
pub mod query;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use bookkeeping::{FaaStore, ImaStore, IterationStats, RunLog, SniEntry, SniTable};
pub use campaign::{run_campaign, CampaignConfig, CampaignReport, CampaignRow, Mode};
pub use catalog::Catalog;
pub use components::{connected_components, Components, UnionFind};
pub use error::{Error, Result};
pub use graph::{Adj, Direction, Edge, Graph, Pid, Vertex, Vid, UNPARTITIONED};
pub use matcher::{
    expand_in_partition, oracle_match, Answer, CanonicalKey, Continuation, ExpandOutcome,
    ExpandStats, PartialAnswer, Seed,
};
pub use opat::{
    choose_next, choose_top, compute_l_ideal, init_sni, load_ratio_measures, run_opat, Heuristic,
    Measures, RatioCell, RunOptions, RunOutcome,
};
pub use parallel::{
    map_task, reduce_task, run_mapreduce_mp, run_traditional_mp, shuffle_group, MapRecord,
    MapValue, ReduceDelta, ReduceKey,
};
pub use partition::{
    choose_scheme, extend_with_cutset, import_assignment, merge_partitions, partition_builtin,
    scheme_metrics, CcMode, DirSource, ExtendedPartition, InMemorySource, PartitionAssignment,
    PartitionSource, SchemeMetrics,
};
pub use plan::{estimate_start, generate_plan, plan_query, PlanEdge, QueryPlan};
pub use query::{parse_query, CmpOp, Constant, Predicate, QnodeId, Query, QueryEdge, QueryGraph};
pub use synth::{generate_synthetic, template_as_query, SynthConfig};
