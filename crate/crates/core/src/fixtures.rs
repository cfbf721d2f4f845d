//! Bundled benchmark networks.

use crate::graph::{parse_edge_list, Graph};

/// Linear chain of nine nodes connected by eight links.
pub const PATH9_EDGES: &str = include_str!("../fixtures/path9.edges");

/// Zachary karate club social network: 34 nodes, 78 links.
pub const KARATE_EDGES: &str = include_str!("../fixtures/karate.edges");

pub fn path9() -> Graph {
    parse_edge_list(PATH9_EDGES).expect("bundled fixture parses").graph
}

pub fn karate() -> Graph {
    parse_edge_list(KARATE_EDGES).expect("bundled fixture parses").graph
}
