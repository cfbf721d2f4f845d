//! Undirected simple graph with dense internal indices, edge-list parsing,
//! and partition bookkeeping for modularity computations.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: self-loop on node `{label}` is not allowed")]
    SelfLoop { line: usize, label: String },
    #[error("line {line}: expected two whitespace-separated node tokens, found {found}")]
    Malformed { line: usize, found: usize },
    #[error("edge list contains no edges")]
    Empty,
}

/// Immutable undirected simple graph. Neighbor lists are sorted, node
/// identifiers are dense `0..node_count`, and original string labels are kept
/// for all file output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
    labels: Vec<String>,
    label_index: HashMap<String, u32>,
}

impl Graph {
    /// Builds a graph over `node_count` nodes labeled by their index.
    /// Duplicate edges are collapsed silently; self-loops are rejected.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let labels: Vec<String> = (0..node_count).map(|i| i.to_string()).collect();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            assert!(
                (u as usize) < node_count && (v as usize) < node_count,
                "edge ({u}, {v}) out of range for {node_count} nodes"
            );
            if u == v {
                return Err(GraphError::SelfLoop {
                    line: 0,
                    label: u.to_string(),
                });
            }
            set.insert((u.min(v), u.max(v)));
        }
        if set.is_empty() {
            return Err(GraphError::Empty);
        }
        Ok(Self::build(labels, &set))
    }

    fn build(labels: Vec<String>, edges: &BTreeSet<(u32, u32)>) -> Graph {
        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        Graph {
            adjacency,
            edge_count: edges.len(),
            labels,
            label_index,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of undirected links `m`.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn neighbors(&self, node: u32) -> &[u32] {
        &self.adjacency[node as usize]
    }

    pub fn label(&self, node: u32) -> &str {
        &self.labels[node as usize]
    }

    pub fn index_of(&self, label: &str) -> Option<u32> {
        self.label_index.get(label).copied()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adjacency[u as usize].binary_search(&v).is_ok()
    }

    /// True when every node is reachable from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    visited += 1;
                    stack.push(v);
                }
            }
        }
        visited == n
    }

    /// Canonical edge-list text: one `label label` line per edge, ordered by
    /// internal index. `parse_edge_list` round-trips this exactly.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        for u in 0..self.node_count() as u32 {
            for &v in self.neighbors(u) {
                if v > u {
                    let _ = writeln!(out, "{} {}", self.label(u), self.label(v));
                }
            }
        }
        out
    }
}

/// Result of [`parse_edge_list`]: the graph plus the number of duplicate
/// edge lines that were collapsed.
#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub graph: Graph,
    pub duplicate_edges: usize,
}

/// Parses UTF-8 edge-list text: one edge per line, two whitespace-separated
/// node tokens, `#`-prefixed and blank lines ignored. Node labels are
/// arbitrary strings mapped to dense indices in first-appearance order.
pub fn parse_edge_list(text: &str) -> Result<ParsedGraph, GraphError> {
    let mut labels: Vec<String> = Vec::new();
    let mut label_index: HashMap<String, u32> = HashMap::new();
    let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut duplicate_edges = 0usize;

    let intern = |token: &str, labels: &mut Vec<String>, idx: &mut HashMap<String, u32>| {
        if let Some(&i) = idx.get(token) {
            i
        } else {
            let i = labels.len() as u32;
            labels.push(token.to_string());
            idx.insert(token.to_string(), i);
            i
        }
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(GraphError::Malformed {
                line: lineno + 1,
                found: tokens.len(),
            });
        }
        if tokens[0] == tokens[1] {
            return Err(GraphError::SelfLoop {
                line: lineno + 1,
                label: tokens[0].to_string(),
            });
        }
        let u = intern(tokens[0], &mut labels, &mut label_index);
        let v = intern(tokens[1], &mut labels, &mut label_index);
        if !edges.insert((u.min(v), u.max(v))) {
            duplicate_edges += 1;
        }
    }
    if edges.is_empty() {
        return Err(GraphError::Empty);
    }
    Ok(ParsedGraph {
        graph: Graph::build(labels, &edges),
        duplicate_edges,
    })
}

/// Target of a single-node move: an existing community or a fresh singleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveTarget {
    Community(u32),
    NewSingleton,
}

/// Node-to-community assignment with maintained per-community sizes and
/// degree sums. Community indices are compact: every index below
/// `community_count` has at least one member.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<u32>,
    community_sizes: Vec<u32>,
    community_degree_sums: Vec<u64>,
}

impl Partition {
    /// Every node in a single community.
    pub fn all_in_one(g: &Graph) -> Partition {
        Partition {
            assignment: vec![0; g.node_count()],
            community_sizes: vec![g.node_count() as u32],
            community_degree_sums: vec![2 * g.edge_count() as u64],
        }
    }

    /// Every node in its own community.
    pub fn singletons(g: &Graph) -> Partition {
        let n = g.node_count();
        Partition {
            assignment: (0..n as u32).collect(),
            community_sizes: vec![1; n],
            community_degree_sums: (0..n as u32).map(|i| g.degree(i) as u64).collect(),
        }
    }

    /// Builds a partition from an arbitrary per-node labeling. Labels are
    /// re-mapped to compact indices in first-appearance order.
    pub fn from_assignment(g: &Graph, assignment: &[u32]) -> Partition {
        assert_eq!(assignment.len(), g.node_count(), "assignment length mismatch");
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut compact = Vec::with_capacity(assignment.len());
        for &a in assignment {
            let next = remap.len() as u32;
            let c = *remap.entry(a).or_insert(next);
            compact.push(c);
        }
        let count = remap.len();
        let mut sizes = vec![0u32; count];
        let mut degree_sums = vec![0u64; count];
        for (i, &c) in compact.iter().enumerate() {
            sizes[c as usize] += 1;
            degree_sums[c as usize] += g.degree(i as u32) as u64;
        }
        Partition {
            assignment: compact,
            community_sizes: sizes,
            community_degree_sums: degree_sums,
        }
    }

    pub fn community_of(&self, node: u32) -> u32 {
        self.assignment[node as usize]
    }

    pub fn community_count(&self) -> usize {
        self.community_sizes.len()
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn community_size(&self, c: u32) -> u32 {
        self.community_sizes[c as usize]
    }

    /// Sum of node degrees in community `c`.
    pub fn community_degree_sum(&self, c: u32) -> u64 {
        self.community_degree_sums[c as usize]
    }

    /// Member lists per community, ascending node index within each.
    pub fn communities(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c as usize].push(i as u32);
        }
        out
    }

    pub fn community_sizes(&self) -> &[u32] {
        &self.community_sizes
    }

    /// Moves `node` to `target`, updating sizes and degree sums
    /// incrementally. If the source community empties, community indices are
    /// re-compacted (higher indices shift down by one).
    pub fn apply_move(&mut self, g: &Graph, node: u32, target: MoveTarget) {
        let from = self.assignment[node as usize];
        let to = match target {
            MoveTarget::Community(c) => {
                assert!((c as usize) < self.community_count(), "no community {c}");
                if c == from {
                    return;
                }
                c
            }
            MoveTarget::NewSingleton => {
                self.community_sizes.push(0);
                self.community_degree_sums.push(0);
                (self.community_count() - 1) as u32
            }
        };
        let k = g.degree(node) as u64;
        self.assignment[node as usize] = to;
        self.community_sizes[from as usize] -= 1;
        self.community_degree_sums[from as usize] -= k;
        self.community_sizes[to as usize] += 1;
        self.community_degree_sums[to as usize] += k;
        if self.community_sizes[from as usize] == 0 {
            self.community_sizes.remove(from as usize);
            self.community_degree_sums.remove(from as usize);
            for c in &mut self.assignment {
                if *c > from {
                    *c -= 1;
                }
            }
        }
    }

    /// Checks all bookkeeping invariants against a from-scratch recomputation.
    pub fn check_consistency(&self, g: &Graph) -> bool {
        if self.assignment.len() != g.node_count() {
            return false;
        }
        let count = self.community_count();
        let mut sizes = vec![0u32; count];
        let mut sums = vec![0u64; count];
        for (i, &c) in self.assignment.iter().enumerate() {
            if c as usize >= count {
                return false;
            }
            sizes[c as usize] += 1;
            sums[c as usize] += g.degree(i as u32) as u64;
        }
        sizes.iter().all(|&s| s > 0)
            && sizes == self.community_sizes
            && sums == self.community_degree_sums
    }
}

/// Modularity of a partition: the fraction of intra-community links minus
/// its expectation under the degree-preserving null model, computed as
/// `intra/m - sum_c (K_c / 2m)^2`.
pub fn modularity(g: &Graph, p: &Partition) -> f64 {
    assert_eq!(p.assignment.len(), g.node_count());
    let mut intra_twice = 0u64;
    for u in 0..g.node_count() as u32 {
        let c = p.community_of(u);
        for &v in g.neighbors(u) {
            if p.community_of(v) == c {
                intra_twice += 1;
            }
        }
    }
    let m = g.edge_count() as f64;
    let two_m = 2.0 * m;
    let intra_fraction = intra_twice as f64 / two_m;
    let expectation: f64 = p
        .community_degree_sums
        .iter()
        .map(|&k| {
            let f = k as f64 / two_m;
            f * f
        })
        .sum();
    intra_fraction - expectation
}

/// Exact modularity change from moving `node` out of its community into
/// `target`: `(1/m) (d_Y - d_X - k (K_Y - K_X + k) / 2m)` with `d` the link
/// counts into the destination and origin and `K` their degree sums.
pub fn move_delta(g: &Graph, p: &Partition, node: u32, target: MoveTarget) -> f64 {
    let from = p.community_of(node);
    let (to_sum, to_links) = match target {
        MoveTarget::Community(c) => {
            assert!((c as usize) < p.community_count(), "no community {c}");
            if c == from {
                return 0.0;
            }
            let mut links = 0u64;
            for &v in g.neighbors(node) {
                if p.community_of(v) == c {
                    links += 1;
                }
            }
            (p.community_degree_sum(c) as f64, links as f64)
        }
        MoveTarget::NewSingleton => (0.0, 0.0),
    };
    let mut from_links = 0u64;
    for &v in g.neighbors(node) {
        if p.community_of(v) == from {
            from_links += 1;
        }
    }
    let m = g.edge_count() as f64;
    let k = g.degree(node) as f64;
    let from_sum = p.community_degree_sum(from) as f64;
    (to_links - from_links as f64 - k * (to_sum - from_sum + k) / (2.0 * m)) / m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path9() -> Graph {
        parse_edge_list(&(1..=8).map(|i| format!("{} {}\n", i, i + 1)).collect::<String>())
            .unwrap()
            .graph
    }

    /// Partition of path-9 from 1-indexed community blocks.
    fn path9_partition(g: &Graph, blocks: &[&[u32]]) -> Partition {
        let mut assign = vec![0u32; g.node_count()];
        for (c, block) in blocks.iter().enumerate() {
            for &label in *block {
                let idx = g.index_of(&label.to_string()).unwrap();
                assign[idx as usize] = c as u32;
            }
        }
        Partition::from_assignment(g, &assign)
    }

    #[test]
    fn parse_three_node_path() {
        let parsed = parse_edge_list("1 2\n2 3").unwrap();
        let g = parsed.graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let degrees: Vec<usize> = (0..3).map(|i| g.degree(i)).collect();
        assert_eq!(degrees, vec![1, 2, 1]);
        assert_eq!(parsed.duplicate_edges, 0);
    }

    #[test]
    fn parse_nine_node_chain() {
        let g = path9();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.edge_count(), 8);
    }

    #[test]
    fn parse_rejects_self_loop_with_line() {
        let err = parse_edge_list("1 2\n3 3\n").unwrap_err();
        match err {
            GraphError::SelfLoop { line, label } => {
                assert_eq!(line, 2);
                assert_eq!(label, "3");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_malformed_line() {
        let err = parse_edge_list("1 2\na b c\n").unwrap_err();
        match err {
            GraphError::Malformed { line, found } => {
                assert_eq!(line, 2);
                assert_eq!(found, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_empty_input() {
        assert!(matches!(
            parse_edge_list("# nothing here\n\n"),
            Err(GraphError::Empty)
        ));
    }

    #[test]
    fn parse_collapses_duplicates_with_count() {
        let parsed = parse_edge_list("a b\nb a\na b\nb c\n").unwrap();
        assert_eq!(parsed.graph.edge_count(), 2);
        assert_eq!(parsed.duplicate_edges, 2);
    }

    #[test]
    fn parse_skips_comments_and_blanks() {
        let parsed = parse_edge_list("# header\n\n  \nx y\n").unwrap();
        assert_eq!(parsed.graph.node_count(), 2);
    }

    #[test]
    fn round_trip_serialization() {
        let g = parse_edge_list("b a\nc a\nb c\nd c\n").unwrap().graph;
        let again = parse_edge_list(&g.to_edge_list_string()).unwrap().graph;
        assert_eq!(g, again);
    }

    #[test]
    fn modularity_of_fig_partitions() {
        let g = path9();
        let p = path9_partition(&g, &[&[1, 2, 3, 4], &[5, 6], &[7, 8, 9]]);
        assert_eq!(modularity(&g, &p), 51.0 / 128.0);
        let best = path9_partition(&g, &[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        assert_eq!(modularity(&g, &best), 53.0 / 128.0);
    }

    #[test]
    fn modularity_single_community_is_zero() {
        let g = path9();
        assert_eq!(modularity(&g, &Partition::all_in_one(&g)), 0.0);
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(modularity(&tri, &Partition::all_in_one(&tri)), 0.0);
    }

    #[test]
    fn modularity_all_singletons_path3() {
        let g = parse_edge_list("1 2\n2 3").unwrap().graph;
        let p = Partition::singletons(&g);
        assert_eq!(modularity(&g, &p), -6.0 / 16.0);
    }

    #[test]
    fn move_delta_matches_fig_move() {
        let g = path9();
        let p = path9_partition(&g, &[&[1, 2, 3, 4], &[5, 6], &[7, 8, 9]]);
        let node4 = g.index_of("4").unwrap();
        let target = p.community_of(g.index_of("5").unwrap());
        let delta = move_delta(&g, &p, node4, MoveTarget::Community(target));
        assert_eq!(delta, 1.0 / 64.0);

        // Moving back undoes the gain exactly.
        let mut moved = p.clone();
        moved.apply_move(&g, node4, MoveTarget::Community(target));
        assert_eq!(modularity(&g, &moved), 53.0 / 128.0);
        let back = moved.community_of(g.index_of("3").unwrap());
        assert_eq!(
            move_delta(&g, &moved, node4, MoveTarget::Community(back)),
            -1.0 / 64.0
        );
    }

    #[test]
    fn move_delta_to_own_community_is_zero() {
        let g = path9();
        let p = path9_partition(&g, &[&[1, 2, 3, 4], &[5, 6], &[7, 8, 9]]);
        for node in 0..9 {
            let own = p.community_of(node);
            assert_eq!(move_delta(&g, &p, node, MoveTarget::Community(own)), 0.0);
        }
    }

    #[test]
    fn apply_move_compacts_emptied_community() {
        let g = path9();
        let mut p = path9_partition(&g, &[&[1, 2, 3, 4], &[5, 6], &[7, 8, 9]]);
        let node5 = g.index_of("5").unwrap();
        let node6 = g.index_of("6").unwrap();
        let c789 = p.community_of(g.index_of("7").unwrap());
        p.apply_move(&g, node5, MoveTarget::Community(c789));
        assert_eq!(p.community_count(), 3);
        // Second move empties the {6} community.
        let c789 = p.community_of(g.index_of("7").unwrap());
        p.apply_move(&g, node6, MoveTarget::Community(c789));
        assert_eq!(p.community_count(), 2);
        assert!(p.check_consistency(&g));
    }

    #[test]
    fn apply_move_to_new_singleton_grows_count() {
        let g = path9();
        let mut p = Partition::all_in_one(&g);
        p.apply_move(&g, 0, MoveTarget::NewSingleton);
        assert_eq!(p.community_count(), 2);
        assert_eq!(p.community_size(1), 1);
        assert!(p.check_consistency(&g));
    }

    #[test]
    fn move_delta_agrees_with_recomputation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for case in 0..200 {
            let n = rng.random_range(3..20usize);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if rng.random::<f64>() < 0.3 {
                        edges.push((u, v));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..4u32)).collect();
            let p = Partition::from_assignment(&g, &labels);
            let node = rng.random_range(0..n) as u32;
            let target = if rng.random::<f64>() < 0.2 {
                MoveTarget::NewSingleton
            } else {
                MoveTarget::Community(rng.random_range(0..p.community_count()) as u32)
            };
            let predicted = move_delta(&g, &p, node, target);
            let before = modularity(&g, &p);
            let mut q = p.clone();
            q.apply_move(&g, node, target);
            let observed = modularity(&g, &q) - before;
            assert!(
                (predicted - observed).abs() <= 1e-12,
                "case {case}: predicted {predicted} observed {observed}"
            );
            assert!(q.check_consistency(&g));
        }
    }
}
