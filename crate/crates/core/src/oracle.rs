//! Exact maximum-modularity search by exhaustive enumeration of set
//! partitions (restricted growth strings), for ground truth on tiny graphs.
//!
//! Partitions are compared through the integer numerator
//! `4m * intra_edges - sum_c K_c^2` of `4 m^2 Q`, so the maximization is
//! exact; the float value is produced only once at the end.

use thiserror::Error;

use crate::graph::{Graph, Partition};

/// Default refusal threshold: Bell(12) is about 4.2 million partitions.
pub const DEFAULT_NODE_LIMIT: usize = 12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "graph has {nodes} nodes, above the limit of {limit}: exhaustive search would \
         enumerate about {cost:.3e} partitions"
    )]
    TooLarge { nodes: usize, limit: usize, cost: f64 },
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub partition: Partition,
    pub best_q: f64,
    /// Number of set partitions examined: the Bell number of the node count.
    pub partitions_examined: u64,
}

/// Bell number as a float, for cost reporting.
fn bell_estimate(n: usize) -> f64 {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let prev = *next.last().unwrap();
            next.push(prev + v);
        }
        row = next;
    }
    row[0]
}

struct Search<'g> {
    graph: &'g Graph,
    four_m: i64,
    assignment: Vec<u32>,
    degree_sums: Vec<i64>,
    intra: i64,
    /// Running numerator of 4 m^2 Q.
    numerator: i64,
    best_numerator: i64,
    best_assignment: Vec<u32>,
    examined: u64,
    /// Scratch: links from the node at each depth into each existing block,
    /// one row per depth so recursion does not clobber the counts.
    links: Vec<i64>,
}

impl<'g> Search<'g> {
    fn run(&mut self, node: usize, blocks: usize) {
        let n = self.graph.node_count();
        if node == n {
            self.examined += 1;
            if self.numerator > self.best_numerator {
                self.best_numerator = self.numerator;
                self.best_assignment = self.assignment.clone();
            }
            return;
        }
        let row = node * (n + 1);
        for b in 0..=blocks {
            self.links[row + b] = 0;
        }
        for &nb in self.graph.neighbors(node as u32) {
            if (nb as usize) < node {
                self.links[row + self.assignment[nb as usize] as usize] += 1;
            }
        }
        let k = self.graph.degree(node as u32) as i64;
        for b in 0..=blocks {
            let added_intra = self.links[row + b];
            let block_sum = if b == blocks { 0 } else { self.degree_sums[b] };
            // Delta of sum_c K_c^2 when K_b grows by k.
            let added_square = k * (2 * block_sum + k);
            self.assignment[node] = b as u32;
            if b == blocks {
                self.degree_sums.push(k);
            } else {
                self.degree_sums[b] += k;
            }
            self.intra += added_intra;
            self.numerator += self.four_m * added_intra - added_square;

            self.run(node + 1, blocks + usize::from(b == blocks));

            self.numerator -= self.four_m * added_intra - added_square;
            self.intra -= added_intra;
            if b == blocks {
                self.degree_sums.pop();
            } else {
                self.degree_sums[b] -= k;
            }
        }
    }
}

/// Enumerates every set partition of the node set and returns a modularity
/// maximizer (the first one in restricted-growth enumeration order on ties).
pub fn exact_max(g: &Graph, node_limit: usize) -> Result<OracleResult, OracleError> {
    let n = g.node_count();
    if n > node_limit {
        return Err(OracleError::TooLarge {
            nodes: n,
            limit: node_limit,
            cost: bell_estimate(n),
        });
    }
    let m = g.edge_count() as i64;
    let mut search = Search {
        graph: g,
        four_m: 4 * m,
        assignment: vec![0; n],
        degree_sums: Vec::with_capacity(n),
        intra: 0,
        numerator: 0,
        // The all-in-one partition scores exactly 0, so the best is >= 0.
        best_numerator: i64::MIN,
        best_assignment: vec![0; n],
        examined: 0,
        links: vec![0; n * (n + 1)],
    };
    search.run(0, 0);
    let partition = Partition::from_assignment(g, &search.best_assignment);
    let best_q = search.best_numerator as f64 / (4.0 * (m as f64) * (m as f64));
    Ok(OracleResult {
        partition,
        best_q,
        partitions_examined: search.examined,
    })
}
