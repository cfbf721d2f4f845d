//! Spectral machinery for community division: matrix-free application of the
//! per-community modularity operator, power-iteration leading eigenpairs,
//! regular-simplex label vectors, and the quantile rule that turns an
//! eigenvector into an initial q-way split.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("community has no members")]
    EmptyCommunity,
    #[error("power iteration failed to converge (best residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("section count must be at least 2, got {0}")]
    BadSectionCount(usize),
}

/// Leading eigenpair of a community modularity operator. The vector is unit
/// norm and indexed like the member list it was computed for.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub vector: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Convergence settings for [`leading_eigenpair`]. `max_iters = None` uses
/// `max(1000, 100 * community_size)` per iteration phase.
#[derive(Debug, Clone)]
pub struct EigOptions {
    pub tol: f64,
    pub residual_tol: f64,
    pub max_iters: Option<usize>,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: 1e-10,
            residual_tol: 1e-8,
            max_iters: None,
        }
    }
}

/// Matrix-free application of the community modularity operator
/// `B(C) = B - diag(row sums of B over C)` restricted to a member set.
/// Rows of `B(C)` sum to zero by construction.
pub(crate) struct BcOperator<'g> {
    graph: &'g Graph,
    members: Vec<u32>,
    position: HashMap<u32, u32>,
    /// Per member: number of neighbors inside the community.
    internal_degree: Vec<f64>,
    /// Per member: total degree in the full graph.
    degree: Vec<f64>,
    degree_sum: f64,
    two_m: f64,
}

impl<'g> BcOperator<'g> {
    pub(crate) fn new(graph: &'g Graph, members: &[u32]) -> BcOperator<'g> {
        let position: HashMap<u32, u32> = members
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        debug_assert_eq!(position.len(), members.len(), "duplicate members");
        let degree: Vec<f64> = members.iter().map(|&v| graph.degree(v) as f64).collect();
        let internal_degree: Vec<f64> = members
            .iter()
            .map(|&v| {
                graph
                    .neighbors(v)
                    .iter()
                    .filter(|n| position.contains_key(n))
                    .count() as f64
            })
            .collect();
        let degree_sum = degree.iter().sum();
        BcOperator {
            graph,
            members: members.to_vec(),
            position,
            internal_degree,
            degree,
            degree_sum,
            two_m: 2.0 * graph.edge_count() as f64,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.members.len()
    }

    /// y = B(C) x, in O(edges within C + |C|).
    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.len());
        assert_eq!(y.len(), self.len());
        let weighted: f64 = self
            .degree
            .iter()
            .zip(x)
            .map(|(k, xi)| k * xi)
            .sum();
        for (i, &v) in self.members.iter().enumerate() {
            let mut adj_sum = 0.0;
            for n in self.graph.neighbors(v) {
                if let Some(&j) = self.position.get(n) {
                    adj_sum += x[j as usize];
                }
            }
            let k = self.degree[i];
            let row_sum = self.internal_degree[i] - k * self.degree_sum / self.two_m;
            y[i] = adj_sum - k * weighted / self.two_m - x[i] * row_sum;
        }
    }

    /// Upper bound on the spectral radius via maximum absolute row sum.
    fn spectral_radius_bound(&self) -> f64 {
        let mut bound: f64 = 0.0;
        for (i, &v) in self.members.iter().enumerate() {
            let k = self.degree[i];
            let mut row = 0.0;
            let mut neighbor_degrees = 0.0;
            for n in self.graph.neighbors(v) {
                if let Some(&j) = self.position.get(n) {
                    let kj = self.degree[j as usize];
                    row += (1.0 - k * kj / self.two_m).abs();
                    neighbor_degrees += kj;
                }
            }
            // Non-neighbors inside C contribute k*k_j/2m each, all positive.
            row += k * (self.degree_sum - k - neighbor_degrees).max(0.0) / self.two_m;
            let diagonal =
                -k * k / self.two_m - (self.internal_degree[i] - k * self.degree_sum / self.two_m);
            row += diagonal.abs();
            bound = bound.max(row);
        }
        bound
    }
}

/// Applies the community modularity operator to a vector without ever
/// materializing the matrix.
pub fn apply_bc(g: &Graph, members: &[u32], x: &[f64]) -> Result<Vec<f64>, SpectralError> {
    if members.is_empty() {
        return Err(SpectralError::EmptyCommunity);
    }
    let op = BcOperator::new(g, members);
    let mut y = vec![0.0; members.len()];
    op.apply(x, &mut y);
    Ok(y)
}

struct PowerOutcome {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

fn power_iterate(
    op: &BcOperator<'_>,
    shift: f64,
    mut x: Vec<f64>,
    opts: &EigOptions,
    max_iters: usize,
) -> PowerOutcome {
    normalize(&mut x);
    let n = x.len();
    let mut y = vec![0.0; n];
    let mut prev_value = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    for it in 1..=max_iters {
        op.apply(&x, &mut y);
        if shift != 0.0 {
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += shift * xi;
            }
        }
        let value: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| {
                let r = b - value * a;
                r * r
            })
            .sum::<f64>()
            .sqrt();
        best_residual = best_residual.min(residual);
        let value_settled = (value - prev_value).abs() <= opts.tol * value.abs().max(1.0);
        if value_settled && residual <= opts.residual_tol {
            return PowerOutcome {
                value,
                vector: x,
                residual,
                iterations: it,
                converged: true,
            };
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            // x lies in the null space of the shifted operator.
            return PowerOutcome {
                value,
                vector: x,
                residual,
                iterations: it,
                converged: residual <= opts.residual_tol,
            };
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        prev_value = value;
    }
    PowerOutcome {
        value: prev_value,
        vector: x,
        residual: best_residual,
        iterations: max_iters,
        converged: false,
    }
}

fn random_unit_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    if normalize(&mut x) == 0.0 {
        x = vec![1.0; n];
        normalize(&mut x);
    }
    x
}

/// Leading (algebraically largest) eigenpair of the community modularity
/// operator by power iteration. The first phase finds the dominant-magnitude
/// eigenvalue; if that is negative, a second phase runs on the operator
/// shifted by its magnitude and the shift is subtracted. A phase that fails
/// to settle (degenerate +/- spectrum) falls back to a row-sum-bound shift,
/// and a start vector that stagnates is redrawn from the generator.
pub fn leading_eigenpair<R: Rng>(
    g: &Graph,
    members: &[u32],
    opts: &EigOptions,
    rng: &mut R,
) -> Result<EigenPair, SpectralError> {
    if members.is_empty() {
        return Err(SpectralError::EmptyCommunity);
    }
    let n = members.len();
    if n == 1 {
        return Ok(EigenPair {
            vector: vec![1.0],
            value: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }
    let op = BcOperator::new(g, members);
    let max_iters = opts.max_iters.unwrap_or_else(|| 1000.max(100 * n));
    let mut best_residual = f64::INFINITY;
    let mut total_iters = 0usize;
    for _attempt in 0..3 {
        let start = random_unit_vector(n, rng);
        let dominant = power_iterate(&op, 0.0, start, opts, max_iters);
        total_iters += dominant.iterations;
        best_residual = best_residual.min(dominant.residual);
        if dominant.converged && dominant.value >= 0.0 {
            return Ok(EigenPair {
                vector: dominant.vector,
                value: dominant.value,
                residual: dominant.residual,
                iterations: total_iters,
            });
        }
        // Shift so the algebraically largest eigenvalue dominates. When the
        // first phase settled, its magnitude is the tight shift; otherwise
        // the row-sum bound is always sufficient.
        let shift = if dominant.converged {
            -dominant.value
        } else {
            op.spectral_radius_bound()
        };
        let start = random_unit_vector(n, rng);
        let shifted = power_iterate(&op, shift, start, opts, max_iters);
        total_iters += shifted.iterations;
        best_residual = best_residual.min(shifted.residual);
        if shifted.converged {
            return Ok(EigenPair {
                vector: shifted.vector,
                value: shifted.value - shift,
                residual: shifted.residual,
                iterations: total_iters,
            });
        }
    }
    Err(SpectralError::NoConvergence {
        residual: best_residual,
    })
}

/// Vertices of a regular q-simplex centered at the origin: q unit vectors in
/// q-1 dimensions with pairwise dot product -1/(q-1), so that
/// `[(q-1) P_i . P_j + 1] / q` is the Kronecker delta.
#[derive(Debug, Clone)]
pub struct SimplexSet {
    q: usize,
    vertices: Vec<Vec<f64>>,
}

impl SimplexSet {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn vertex(&self, j: usize) -> &[f64] {
        &self.vertices[j]
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.q - 1
    }
}

fn build_simplex(q: usize) -> Vec<Vec<f64>> {
    if q == 2 {
        return vec![vec![1.0], vec![-1.0]];
    }
    let sub = build_simplex(q - 1);
    let head = -1.0 / (q as f64 - 1.0);
    let scale = (1.0 - head * head).sqrt();
    let mut vertices = Vec::with_capacity(q);
    let mut first = vec![0.0; q - 1];
    first[0] = 1.0;
    vertices.push(first);
    for v in sub {
        let mut vertex = Vec::with_capacity(q - 1);
        vertex.push(head);
        vertex.extend(v.iter().map(|c| c * scale));
        vertices.push(vertex);
    }
    vertices
}

/// Builds the simplex label vectors, ordered so that the quantile intervals
/// of [`assignment_thresholds`] map onto them in increasing order of positive
/// components (the all-negative vertex first, the `(1, 0, ...)` vertex last).
pub fn simplex_vertices(q: usize) -> Result<SimplexSet, SpectralError> {
    if q < 2 {
        return Err(SpectralError::BadSectionCount(q));
    }
    let mut vertices = build_simplex(q);
    vertices.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.partial_cmp(y).expect("simplex coordinates are finite"))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(SimplexSet { q, vertices })
}

/// A q-way labeling of one community's members by simplex-vertex index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitState {
    pub members: Vec<u32>,
    pub labels: Vec<u32>,
    pub q: usize,
}

impl SplitState {
    /// True when every member carries the same label (no split proposed).
    pub fn is_uniform(&self) -> bool {
        self.labels.windows(2).all(|w| w[0] == w[1])
    }

    /// Count of distinct labels present.
    pub fn group_count(&self) -> usize {
        let mut seen = vec![false; self.q];
        let mut count = 0;
        for &l in &self.labels {
            if !seen[l as usize] {
                seen[l as usize] = true;
                count += 1;
            }
        }
        count
    }
}

/// Initial q-section guess from an eigenvector: component `u` lands in
/// quantile interval `j` of the null eigenvector-component distribution (a
/// zero-mean Gaussian of variance `1/n_full`) when `(j-1)/q <= F(u) < j/q`.
/// Implemented by comparing `u` against inverse-CDF thresholds, which for
/// q=2 reduces exactly to the sign rule with zero components landing in the
/// upper half.
pub fn assignment_thresholds(
    members: Vec<u32>,
    eigenvector: &[f64],
    q: usize,
    n_full: usize,
) -> SplitState {
    assert_eq!(members.len(), eigenvector.len());
    assert!(q >= 2, "section count must be at least 2");
    assert!(n_full >= 1);
    let normal = Normal::standard();
    let scale = 1.0 / (n_full as f64).sqrt();
    let thresholds: Vec<f64> = (1..q)
        .map(|j| {
            let fraction = j as f64 / q as f64;
            if fraction == 0.5 {
                0.0
            } else {
                normal.inverse_cdf(fraction) * scale
            }
        })
        .collect();
    let labels = eigenvector
        .iter()
        .map(|&u| thresholds.iter().take_while(|&&t| t <= u).count() as u32)
        .collect();
    SplitState { members, labels, q }
}
