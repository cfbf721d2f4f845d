//! Kernighan-Lin style refinement: fine-tuning of a single q-way split and
//! the global final-tuning pass that moves nodes between all existing
//! communities or into fresh singletons.
//!
//! Both procedures share the same shape: move every in-scope node exactly
//! once (always taking the single best move, even when negative, with exact
//! ties broken at random), then roll back to the best intermediate state,
//! and repeat until a full pass stops improving.

use rand::Rng;

use crate::graph::{modularity, Graph, Partition};
use crate::spectral::{simplex_vertices, BcOperator, SimplexSet, SplitState};

/// Improvement below this counts as "no further improvement".
pub const IMPROVEMENT_EPS: f64 = 1e-12;

/// One recorded move: a node reassigned from one label to another. Labels
/// are simplex-vertex indices during fine-tuning and community slots during
/// final-tuning.
#[derive(Debug, Clone, Copy)]
pub struct TraceMove {
    pub node: u32,
    pub from: u32,
    pub to: u32,
}

/// Record of one pass: every in-scope node moved exactly once, with the
/// cumulative objective after each move. `best_index` is the number of
/// leading moves retained (0 keeps none); ties resolve to the first
/// occurrence of the maximum.
#[derive(Debug, Clone)]
pub struct TuneTrace {
    pub moves: Vec<TraceMove>,
    pub cumulative: Vec<f64>,
    pub best_index: usize,
}

impl TuneTrace {
    /// Objective gain of the retained prefix.
    pub fn best_value(&self) -> f64 {
        if self.best_index == 0 {
            0.0
        } else {
            self.cumulative[self.best_index - 1]
        }
    }
}

fn best_prefix(cumulative: &[f64]) -> (usize, f64) {
    let mut best_index = 0usize;
    let mut best_value = 0.0f64;
    for (k, &v) in cumulative.iter().enumerate() {
        if v > best_value {
            best_value = v;
            best_index = k + 1;
        }
    }
    (best_index, best_value)
}

fn pick_tie<R: Rng, T: Copy>(ties: &[T], rng: &mut R) -> T {
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// Modularity change from splitting one community according to `state`,
/// relative to keeping it whole: `(q-1)/(2mq) * S^T B(C) S` with the simplex
/// labels as S. Zero when all members share a label.
pub fn split_delta(g: &Graph, state: &SplitState) -> f64 {
    let simplex = simplex_vertices(state.q).expect("q validated by SplitState construction");
    let op = BcOperator::new(g, &state.members);
    let n = state.members.len();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut quadratic = 0.0;
    for d in 0..simplex.dim() {
        for (xi, &label) in x.iter_mut().zip(&state.labels) {
            *xi = simplex.vertex(label as usize)[d];
        }
        op.apply(&x, &mut y);
        quadratic += x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
    }
    let m = g.edge_count() as f64;
    let q = state.q as f64;
    (q - 1.0) / (2.0 * m * q) * quadratic
}

/// Incremental evaluator for label reassignments within one community.
/// Caches per-member neighbor label sums and the degree-weighted label sum,
/// so a candidate move costs O(q) and an applied move O(degree * q).
struct SplitTuner<'g> {
    graph: &'g Graph,
    members: Vec<u32>,
    position: Vec<Option<u32>>,
    degree: Vec<f64>,
    labels: Vec<u32>,
    simplex: SimplexSet,
    /// Per member: sum of neighbor label vectors within the community.
    neighbor_sums: Vec<Vec<f64>>,
    /// Degree-weighted sum of all label vectors.
    weighted_sum: Vec<f64>,
    two_m: f64,
    coeff: f64,
}

impl<'g> SplitTuner<'g> {
    fn new(graph: &'g Graph, state: &SplitState) -> SplitTuner<'g> {
        let simplex = simplex_vertices(state.q).expect("q validated upstream");
        let dim = simplex.dim();
        let mut position = vec![None; graph.node_count()];
        for (i, &v) in state.members.iter().enumerate() {
            position[v as usize] = Some(i as u32);
        }
        let degree: Vec<f64> = state.members.iter().map(|&v| graph.degree(v) as f64).collect();
        let mut neighbor_sums = vec![vec![0.0; dim]; state.members.len()];
        let mut weighted_sum = vec![0.0; dim];
        for (i, &v) in state.members.iter().enumerate() {
            let vertex = simplex.vertex(state.labels[i] as usize);
            for (acc, p) in weighted_sum.iter_mut().zip(vertex) {
                *acc += degree[i] * p;
            }
            for n in graph.neighbors(v) {
                if let Some(j) = position[*n as usize] {
                    for (acc, p) in neighbor_sums[j as usize].iter_mut().zip(vertex) {
                        *acc += p;
                    }
                }
            }
        }
        let m = graph.edge_count() as f64;
        let q = state.q as f64;
        SplitTuner {
            graph,
            members: state.members.clone(),
            position,
            degree,
            labels: state.labels.clone(),
            simplex,
            neighbor_sums,
            weighted_sum,
            two_m: 2.0 * m,
            coeff: (q - 1.0) / (m * q),
        }
    }

    /// Gain of relabeling member `i` to vertex `to`.
    fn gain(&self, i: usize, to: u32) -> f64 {
        let from = self.labels[i] as usize;
        let pa = self.simplex.vertex(from);
        let pb = self.simplex.vertex(to as usize);
        let k = self.degree[i];
        let mut dot = 0.0;
        for d in 0..self.simplex.dim() {
            let field = self.neighbor_sums[i][d] - k * self.weighted_sum[d] / self.two_m
                + k * k / self.two_m * pa[d];
            dot += (pb[d] - pa[d]) * field;
        }
        self.coeff * dot
    }

    fn relabel(&mut self, i: usize, to: u32) {
        let from = self.labels[i] as usize;
        let pa: Vec<f64> = self.simplex.vertex(from).to_vec();
        let pb: Vec<f64> = self.simplex.vertex(to as usize).to_vec();
        let node = self.members[i];
        let k = self.degree[i];
        for d in 0..self.simplex.dim() {
            self.weighted_sum[d] += k * (pb[d] - pa[d]);
        }
        for n in self.graph.neighbors(node) {
            if let Some(j) = self.position[*n as usize] {
                for d in 0..self.simplex.dim() {
                    self.neighbor_sums[j as usize][d] += pb[d] - pa[d];
                }
            }
        }
        self.labels[i] = to;
    }

    fn pass<R: Rng>(&mut self, rng: &mut R) -> TuneTrace {
        let n = self.members.len();
        let q = self.simplex.q() as u32;
        let mut moved = vec![false; n];
        let mut moves = Vec::with_capacity(n);
        let mut cumulative = Vec::with_capacity(n);
        let mut running = 0.0f64;
        for _ in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut ties: Vec<(usize, u32)> = Vec::new();
            for i in 0..n {
                if moved[i] {
                    continue;
                }
                for to in 0..q {
                    if to == self.labels[i] {
                        continue;
                    }
                    let gain = self.gain(i, to);
                    if gain > best {
                        best = gain;
                        ties.clear();
                        ties.push((i, to));
                    } else if gain == best {
                        ties.push((i, to));
                    }
                }
            }
            let (i, to) = pick_tie(&ties, rng);
            let from = self.labels[i];
            self.relabel(i, to);
            moved[i] = true;
            running += best;
            moves.push(TraceMove {
                node: self.members[i],
                from,
                to,
            });
            cumulative.push(running);
        }
        let (best_index, _) = best_prefix(&cumulative);
        for mv in moves[best_index..].iter().rev() {
            let i = self.position[mv.node as usize].expect("member node") as usize;
            self.relabel(i, mv.from);
        }
        TuneTrace {
            moves,
            cumulative,
            best_index,
        }
    }
}

/// Kernighan-Lin fine-tuning of one community split, returning the refined
/// state together with the per-pass traces. Guaranteed not to return a state
/// whose split gain is below the initial guess's.
pub fn fine_tune_traced<R: Rng>(
    g: &Graph,
    state: &SplitState,
    eps: f64,
    rng: &mut R,
) -> (SplitState, Vec<TuneTrace>) {
    let mut tuner = SplitTuner::new(g, state);
    let mut traces = Vec::new();
    loop {
        let trace = tuner.pass(rng);
        let improvement = trace.best_value();
        traces.push(trace);
        if improvement <= eps {
            break;
        }
    }
    let tuned = SplitState {
        members: state.members.clone(),
        labels: tuner.labels,
        q: state.q,
    };
    if split_delta(g, &tuned) < split_delta(g, state) {
        (state.clone(), traces)
    } else {
        (tuned, traces)
    }
}

/// Fine-tuning without trace collection.
pub fn fine_tune<R: Rng>(g: &Graph, state: &SplitState, eps: f64, rng: &mut R) -> SplitState {
    fine_tune_traced(g, state, eps, rng).0
}

/// Mutable community bookkeeping for final-tuning. Slots emptied mid-sweep
/// are kept (their indices stay valid for the trace) and compacted only
/// between sweeps.
struct GlobalTuner<'g> {
    graph: &'g Graph,
    assignment: Vec<u32>,
    sizes: Vec<u32>,
    degree_sums: Vec<u64>,
    /// Scratch: links from the candidate node into each slot.
    link_counts: Vec<u32>,
    m: f64,
    two_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Slot(u32),
    Fresh,
}

impl<'g> GlobalTuner<'g> {
    fn new(graph: &'g Graph, p: &Partition) -> GlobalTuner<'g> {
        let count = p.community_count();
        GlobalTuner {
            graph,
            assignment: p.assignment().to_vec(),
            sizes: (0..count as u32).map(|c| p.community_size(c)).collect(),
            degree_sums: (0..count as u32).map(|c| p.community_degree_sum(c)).collect(),
            link_counts: vec![0; count],
            m: graph.edge_count() as f64,
            two_m: 2.0 * graph.edge_count() as f64,
        }
    }

    fn delta(&self, node: u32, from: u32, to_links: f64, to_sum: f64) -> f64 {
        let k = self.graph.degree(node) as f64;
        let from_links = self.link_counts[from as usize] as f64;
        let from_sum = self.degree_sums[from as usize] as f64;
        (to_links - from_links - k * (to_sum - from_sum + k) / self.two_m) / self.m
    }

    fn move_node(&mut self, node: u32, to: Target) -> u32 {
        let from = self.assignment[node as usize];
        let slot = match to {
            Target::Slot(c) => c,
            Target::Fresh => {
                self.sizes.push(0);
                self.degree_sums.push(0);
                self.link_counts.push(0);
                (self.sizes.len() - 1) as u32
            }
        };
        let k = self.graph.degree(node) as u64;
        self.assignment[node as usize] = slot;
        self.sizes[from as usize] -= 1;
        self.degree_sums[from as usize] -= k;
        self.sizes[slot as usize] += 1;
        self.degree_sums[slot as usize] += k;
        slot
    }

    fn sweep<R: Rng>(&mut self, neighbor_only: bool, rng: &mut R) -> TuneTrace {
        let n = self.graph.node_count();
        let mut moved = vec![false; n];
        let mut moves = Vec::with_capacity(n);
        let mut cumulative = Vec::with_capacity(n);
        let mut running = 0.0f64;
        let mut touched: Vec<u32> = Vec::new();
        for _ in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut ties: Vec<(u32, Target)> = Vec::new();
            for node in 0..n as u32 {
                if moved[node as usize] {
                    continue;
                }
                let from = self.assignment[node as usize];
                touched.clear();
                for &nb in self.graph.neighbors(node) {
                    let c = self.assignment[nb as usize];
                    if self.link_counts[c as usize] == 0 {
                        touched.push(c);
                    }
                    self.link_counts[c as usize] += 1;
                }
                let consider = |target: Target, gain: f64, best: &mut f64, ties: &mut Vec<(u32, Target)>| {
                    if gain > *best {
                        *best = gain;
                        ties.clear();
                        ties.push((node, target));
                    } else if gain == *best {
                        ties.push((node, target));
                    }
                };
                if neighbor_only {
                    touched.sort_unstable();
                    for &c in &touched {
                        if c == from {
                            continue;
                        }
                        let gain = self.delta(
                            node,
                            from,
                            self.link_counts[c as usize] as f64,
                            self.degree_sums[c as usize] as f64,
                        );
                        consider(Target::Slot(c), gain, &mut best, &mut ties);
                    }
                } else {
                    for c in 0..self.sizes.len() as u32 {
                        if c == from || self.sizes[c as usize] == 0 {
                            continue;
                        }
                        let gain = self.delta(
                            node,
                            from,
                            self.link_counts[c as usize] as f64,
                            self.degree_sums[c as usize] as f64,
                        );
                        consider(Target::Slot(c), gain, &mut best, &mut ties);
                    }
                }
                // A fresh singleton is always a candidate.
                let gain = self.delta(node, from, 0.0, 0.0);
                consider(Target::Fresh, gain, &mut best, &mut ties);
                for &c in &touched {
                    self.link_counts[c as usize] = 0;
                }
            }
            let (node, target) = pick_tie(&ties, rng);
            let from = self.assignment[node as usize];
            let slot = self.move_node(node, target);
            moved[node as usize] = true;
            running += best;
            moves.push(TraceMove {
                node,
                from,
                to: slot,
            });
            cumulative.push(running);
        }
        let (best_index, _) = best_prefix(&cumulative);
        for mv in moves[best_index..].iter().rev() {
            self.move_node(mv.node, Target::Slot(mv.from));
        }
        TuneTrace {
            moves,
            cumulative,
            best_index,
        }
    }

    /// Drops empty slots, remapping community ids compactly.
    fn compact(&mut self) {
        let mut remap = vec![u32::MAX; self.sizes.len()];
        let mut next = 0u32;
        for (c, &size) in self.sizes.iter().enumerate() {
            if size > 0 {
                remap[c] = next;
                next += 1;
            }
        }
        for a in &mut self.assignment {
            *a = remap[*a as usize];
        }
        let mut sizes = vec![0u32; next as usize];
        let mut sums = vec![0u64; next as usize];
        for (old, &new) in remap.iter().enumerate() {
            if new != u32::MAX {
                sizes[new as usize] = self.sizes[old];
                sums[new as usize] = self.degree_sums[old];
            }
        }
        self.sizes = sizes;
        self.degree_sums = sums;
        self.link_counts = vec![0; self.sizes.len()];
    }
}

/// Final-tuning: repeated global sweeps in which every node moves exactly
/// once to the best of all existing communities (or only those of its
/// neighbors when `neighbor_only` is set) plus a fresh singleton. The best
/// intermediate configuration of each sweep is retained; the result is never
/// worse than the input.
pub fn final_tune_traced<R: Rng>(
    g: &Graph,
    p: &Partition,
    neighbor_only: bool,
    eps: f64,
    rng: &mut R,
) -> (Partition, Vec<TuneTrace>) {
    let mut tuner = GlobalTuner::new(g, p);
    let mut traces = Vec::new();
    loop {
        let trace = tuner.sweep(neighbor_only, rng);
        let improvement = trace.best_value();
        tuner.compact();
        traces.push(trace);
        if improvement <= eps {
            break;
        }
    }
    let tuned = Partition::from_assignment(g, &tuner.assignment);
    if modularity(g, &tuned) < modularity(g, p) {
        (p.clone(), traces)
    } else {
        (tuned, traces)
    }
}

/// Final-tuning without trace collection.
pub fn final_tune<R: Rng>(
    g: &Graph,
    p: &Partition,
    neighbor_only: bool,
    eps: f64,
    rng: &mut R,
) -> Partition {
    final_tune_traced(g, p, neighbor_only, eps, rng).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{modularity, move_delta, parse_edge_list, MoveTarget};
    use crate::spectral::assignment_thresholds;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path9() -> Graph {
        parse_edge_list(&(1..=8).map(|i| format!("{} {}\n", i, i + 1)).collect::<String>())
            .unwrap()
            .graph
    }

    fn barbell() -> Graph {
        Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap()
    }

    /// Split state over all of path-9 from a boundary: first `left` nodes one
    /// label, the rest the other.
    fn path9_bisection(g: &Graph, left: usize) -> SplitState {
        let members: Vec<u32> = (0..g.node_count() as u32).collect();
        let labels = members
            .iter()
            .map(|&v| if (v as usize) < left { 0 } else { 1 })
            .collect();
        SplitState {
            members,
            labels,
            q: 2,
        }
    }

    /// Exhaustive best bisection gain over all sign vectors, evaluated
    /// through partition modularity as an independent route.
    fn brute_force_best_bisection(g: &Graph) -> f64 {
        let n = g.node_count();
        let whole = Partition::all_in_one(g);
        let base = modularity(g, &whole);
        let mut best = f64::NEG_INFINITY;
        for mask in 0..(1u32 << n) {
            let assign: Vec<u32> = (0..n).map(|i| (mask >> i) & 1).collect();
            let p = Partition::from_assignment(g, &assign);
            best = best.max(modularity(g, &p) - base);
        }
        best
    }

    #[test]
    fn split_delta_zero_for_uniform_state() {
        let g = path9();
        let members: Vec<u32> = (0..9).collect();
        let state = SplitState {
            members,
            labels: vec![0; 9],
            q: 2,
        };
        assert_eq!(split_delta(&g, &state), 0.0);
    }

    #[test]
    fn split_delta_path9_bisection() {
        let g = path9();
        assert!((split_delta(&g, &path9_bisection(&g, 4)) - 47.0 / 128.0).abs() <= 1e-12);
    }

    #[test]
    fn split_delta_path9_subcommunity() {
        let g = path9();
        // Splitting {5..9} into {5,6} | {7,8,9} (0-indexed 4..9).
        let state = SplitState {
            members: vec![4, 5, 6, 7, 8],
            labels: vec![0, 0, 1, 1, 1],
            q: 2,
        };
        assert!((split_delta(&g, &state) - 1.0 / 32.0).abs() <= 1e-12);
    }

    #[test]
    fn split_delta_matches_modularity_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for case in 0..300 {
            let n = rng.random_range(4..16usize);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if rng.random::<f64>() < 0.35 {
                        edges.push((u, v));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let g = Graph::from_edges(n, edges).unwrap();
            // Random two-community base partition, then a q-way split of one.
            let base: Vec<u32> = (0..n).map(|_| rng.random_range(0..2u32)).collect();
            let p = Partition::from_assignment(&g, &base);
            let community = rng.random_range(0..p.community_count()) as u32;
            let members: Vec<u32> = (0..n as u32)
                .filter(|&v| p.community_of(v) == community)
                .collect();
            if members.is_empty() {
                continue;
            }
            let q = rng.random_range(2..5usize);
            let labels: Vec<u32> = members
                .iter()
                .map(|_| rng.random_range(0..q as u32))
                .collect();
            let state = SplitState {
                members: members.clone(),
                labels: labels.clone(),
                q,
            };
            let predicted = split_delta(&g, &state);

            let mut assign = p.assignment().to_vec();
            let offset = p.community_count() as u32;
            for (&node, &label) in members.iter().zip(&labels) {
                assign[node as usize] = offset + label;
            }
            let observed = modularity(&g, &Partition::from_assignment(&g, &assign)) - modularity(&g, &p);
            assert!(
                (predicted - observed).abs() <= 1e-12,
                "case {case}: predicted {predicted} observed {observed}"
            );
        }
    }

    #[test]
    fn fine_tune_keeps_local_optimum() {
        let g = barbell();
        // The two triangles are the optimal bisection; every single
        // relabeling lowers the gain.
        let state = SplitState {
            members: vec![0, 1, 2, 3, 4, 5],
            labels: vec![0, 0, 0, 1, 1, 1],
            q: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (tuned, traces) = fine_tune_traced(&g, &state, IMPROVEMENT_EPS, &mut rng);
        assert_eq!(tuned.labels, state.labels);
        assert_eq!(traces.len(), 1, "one pass with best index zero suffices");
        assert_eq!(traces[0].best_index, 0);
    }

    #[test]
    fn fine_tune_reaches_best_bisection_from_any_contiguous_guess() {
        let g = path9();
        let target = brute_force_best_bisection(&g);
        assert!((target - 47.0 / 128.0).abs() <= 1e-12);
        for left in 1..9 {
            let state = path9_bisection(&g, left);
            let mut rng = ChaCha8Rng::seed_from_u64(left as u64);
            let tuned = fine_tune(&g, &state, IMPROVEMENT_EPS, &mut rng);
            let gain = split_delta(&g, &tuned);
            assert!(
                (gain - target).abs() <= 1e-12,
                "guess {left}: reached {gain}, want {target}"
            );
        }
    }

    #[test]
    fn fine_tune_never_below_initial_guess() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.random_range(4..14usize);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if rng.random::<f64>() < 0.4 {
                        edges.push((u, v));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let members: Vec<u32> = (0..n as u32).collect();
            let q = rng.random_range(2..4usize);
            let labels: Vec<u32> = members.iter().map(|_| rng.random_range(0..q as u32)).collect();
            let state = SplitState { members, labels, q };
            let before = split_delta(&g, &state);
            let tuned = fine_tune(&g, &state, IMPROVEMENT_EPS, &mut rng);
            assert!(split_delta(&g, &tuned) >= before - 1e-12);
        }
    }

    #[test]
    fn fine_tune_deterministic_for_fixed_seed() {
        let g = path9();
        let state = path9_bisection(&g, 2);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            fine_tune(&g, &state, IMPROVEMENT_EPS, &mut rng).labels
        };
        assert_eq!(run(7), run(7));
    }

    #[test]
    fn trace_moves_each_member_once_per_pass() {
        let g = barbell();
        let members: Vec<u32> = (0..6).collect();
        let state = SplitState {
            members: members.clone(),
            labels: vec![0, 1, 0, 1, 0, 1],
            q: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (_, traces) = fine_tune_traced(&g, &state, IMPROVEMENT_EPS, &mut rng);
        for trace in traces {
            let mut seen: Vec<u32> = trace.moves.iter().map(|m| m.node).collect();
            seen.sort_unstable();
            assert_eq!(seen, members);
        }
    }

    #[test]
    fn final_tune_fig_move_to_optimum() {
        let g = path9();
        let mut assign = vec![0u32; 9];
        for v in 4..6 {
            assign[v] = 1;
        }
        for v in 6..9 {
            assign[v] = 2;
        }
        let p = Partition::from_assignment(&g, &assign);
        assert_eq!(modularity(&g, &p), 51.0 / 128.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tuned = final_tune(&g, &p, true, IMPROVEMENT_EPS, &mut rng);
        assert_eq!(modularity(&g, &tuned), 53.0 / 128.0);
        let sizes: Vec<u32> = tuned.community_sizes().to_vec();
        assert_eq!(sizes, vec![3, 3, 3]);
    }

    #[test]
    fn final_tune_keeps_global_optimum() {
        let g = path9();
        let mut assign = vec![0u32; 9];
        for v in 3..6 {
            assign[v] = 1;
        }
        for v in 6..9 {
            assign[v] = 2;
        }
        let p = Partition::from_assignment(&g, &assign);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tuned = final_tune(&g, &p, true, IMPROVEMENT_EPS, &mut rng);
        assert_eq!(modularity(&g, &tuned), 53.0 / 128.0);
        assert_eq!(tuned.assignment(), p.assignment());
    }

    #[test]
    fn final_tune_splits_bridged_triangles_from_whole() {
        let g = barbell();
        let p = Partition::all_in_one(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let tuned = final_tune(&g, &p, true, IMPROVEMENT_EPS, &mut rng);
        assert!((modularity(&g, &tuned) - 5.0 / 14.0).abs() <= 1e-12);
        assert_eq!(tuned.community_count(), 2);
        assert_eq!(tuned.community_of(0), tuned.community_of(1));
        assert_eq!(tuned.community_of(0), tuned.community_of(2));
        assert_eq!(tuned.community_of(3), tuned.community_of(4));
        assert_eq!(tuned.community_of(3), tuned.community_of(5));
    }

    #[test]
    fn final_tune_monotone_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..60 {
            let n = rng.random_range(4..18usize);
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
            let assign: Vec<u32> = (0..n).map(|_| rng.random_range(0..4u32)).collect();
            let p = Partition::from_assignment(&g, &assign);
            let before = modularity(&g, &p);
            for neighbor_only in [true, false] {
                let mut r = ChaCha8Rng::seed_from_u64(77);
                let tuned = final_tune(&g, &p, neighbor_only, IMPROVEMENT_EPS, &mut r);
                assert!(modularity(&g, &tuned) >= before - 1e-12);
                assert!(tuned.check_consistency(&g));
            }
        }
    }

    #[test]
    fn final_tune_neighbor_only_matches_all_targets_on_path9() {
        let g = path9();
        let p = Partition::all_in_one(&g);
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let a = final_tune(&g, &p, true, IMPROVEMENT_EPS, &mut r1);
        let b = final_tune(&g, &p, false, IMPROVEMENT_EPS, &mut r2);
        assert_eq!(modularity(&g, &a), modularity(&g, &b));
    }

    #[test]
    fn final_tune_sweep_gains_match_move_delta() {
        // The gain claimed for the first applied sweep move must equal the
        // exact single-move delta of the starting partition.
        let g = barbell();
        let assign = vec![0, 0, 1, 1, 2, 2];
        let p = Partition::from_assignment(&g, &assign);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (_, traces) = final_tune_traced(&g, &p, false, IMPROVEMENT_EPS, &mut rng);
        let first = &traces[0];
        let mv = first.moves[0];
        let expected = if mv.to as usize >= p.community_count() {
            move_delta(&g, &p, mv.node, MoveTarget::NewSingleton)
        } else {
            move_delta(&g, &p, mv.node, MoveTarget::Community(mv.to))
        };
        assert!((first.cumulative[0] - expected).abs() <= 1e-15);
    }
}
