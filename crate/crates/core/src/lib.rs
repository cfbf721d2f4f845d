//! Community detection by modularity maximization: recursive spectral
//! q-sectioning with Kernighan-Lin fine-tuning, plus a global final-tuning
//! pass that lets any node move to any existing community (or a fresh
//! singleton) after each round of divisions. Includes a connected
//! Erdos-Renyi ensemble harness and an exhaustive-search oracle for
//! validation on small graphs.

pub mod detect;
pub mod ensemble;
pub mod fixtures;
pub mod graph;
pub mod oracle;
pub mod spectral;
pub mod tuning;

pub use detect::{detect, detect_best, DetectConfig, DetectResult};
pub use ensemble::{gen_er_connected, run_ensemble, EnsembleError, EnsembleStats, ErSample};
pub use graph::{
    modularity, move_delta, parse_edge_list, Graph, GraphError, MoveTarget, ParsedGraph, Partition,
};
pub use oracle::{exact_max, OracleError, OracleResult, DEFAULT_NODE_LIMIT};
pub use spectral::{
    apply_bc, assignment_thresholds, leading_eigenpair, simplex_vertices, EigOptions, EigenPair,
    SimplexSet, SpectralError, SplitState,
};
pub use tuning::{
    final_tune, final_tune_traced, fine_tune, fine_tune_traced, split_delta, TraceMove, TuneTrace,
    IMPROVEMENT_EPS,
};
