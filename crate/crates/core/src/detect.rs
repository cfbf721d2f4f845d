//! Top-level detection driver: rounds of spectral q-section with
//! fine-tuning over every community existing at round start, followed by an
//! optional global final-tuning pass, iterated until modularity stops
//! improving. Multiple seeded restarts keep the best result.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::{modularity, Graph, Partition};
use crate::spectral::{assignment_thresholds, leading_eigenpair, EigOptions};
use crate::tuning::{final_tune, fine_tune, split_delta, IMPROVEMENT_EPS};

#[derive(Debug, Clone)]
pub struct DetectConfig {
    /// Number of parts each division attempt produces (2 = bisectioning).
    pub q: usize,
    /// Run the global final-tuning pass after every round of divisions.
    pub final_tuning: bool,
    /// Restrict final-tuning targets to communities of neighbors (plus a
    /// fresh singleton, which is always a candidate).
    pub neighbor_only: bool,
    pub seed: u64,
    /// Independent seeded runs for [`detect_best`].
    pub restarts: usize,
    pub eig: EigOptions,
    /// Modularity gains at or below this threshold count as no improvement.
    pub improvement_eps: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            q: 2,
            final_tuning: true,
            neighbor_only: true,
            seed: 42,
            restarts: 1,
            eig: EigOptions::default(),
            improvement_eps: IMPROVEMENT_EPS,
        }
    }
}

impl DetectConfig {
    fn validate(&self) {
        assert!(self.q >= 2, "q must be at least 2");
        assert!(self.restarts >= 1, "restarts must be at least 1");
        assert!(self.improvement_eps > 0.0);
        assert!(self.eig.tol > 0.0 && self.eig.residual_tol > 0.0);
    }
}

#[derive(Debug, Clone)]
pub struct DetectResult {
    pub partition: Partition,
    pub modularity: f64,
    pub rounds: usize,
    /// Modularity after each round; non-decreasing.
    pub q_trace: Vec<f64>,
    pub seed: u64,
    /// Communities marked indivisible because power iteration failed.
    pub spectral_failures: usize,
}

/// One full detection run from the all-in-one partition. Never returns a
/// partition worse than all-in-one, so the result modularity is >= 0.
/// Deterministic given the configuration.
pub fn detect(g: &Graph, cfg: &DetectConfig) -> DetectResult {
    cfg.validate();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut partition = Partition::all_in_one(g);
    let mut current_q = 0.0f64;
    let mut q_trace = Vec::new();
    let mut indivisible: HashSet<Vec<u32>> = HashSet::new();
    let mut spectral_failures = 0usize;

    loop {
        let round_start_q = current_q;
        let snapshot = partition.communities();
        let mut next_assign = partition.assignment().to_vec();
        let mut next_free = partition.community_count() as u32;
        let mut divided_any = false;

        for members in snapshot {
            if members.len() < 2 || indivisible.contains(&members) {
                continue;
            }
            let pair = match leading_eigenpair(g, &members, &cfg.eig, &mut rng) {
                Ok(pair) => pair,
                Err(_) => {
                    spectral_failures += 1;
                    indivisible.insert(members);
                    continue;
                }
            };
            let n_full = members.len();
            let guess = assignment_thresholds(members.clone(), &pair.vector, cfg.q, n_full);
            if guess.is_uniform() {
                indivisible.insert(members);
                continue;
            }
            let tuned = fine_tune(g, &guess, cfg.improvement_eps, &mut rng);
            if split_delta(g, &tuned) > cfg.improvement_eps {
                // First member's group keeps the community id; the other
                // groups get fresh ids. Empty groups vanish on their own.
                let lead_label = tuned.labels[0];
                let mut group_ids = vec![u32::MAX; cfg.q];
                for (&node, &label) in tuned.members.iter().zip(&tuned.labels) {
                    if label != lead_label && group_ids[label as usize] == u32::MAX {
                        group_ids[label as usize] = next_free;
                        next_free += 1;
                    }
                    if label != lead_label {
                        next_assign[node as usize] = group_ids[label as usize];
                    }
                }
                divided_any = true;
            } else {
                indivisible.insert(members);
            }
        }

        if divided_any {
            partition = Partition::from_assignment(g, &next_assign);
        }

        if cfg.final_tuning {
            let pre_q = modularity(g, &partition);
            let tuned = final_tune(g, &partition, cfg.neighbor_only, cfg.improvement_eps, &mut rng);
            if modularity(g, &tuned) > pre_q {
                partition = tuned;
            }
        }

        current_q = modularity(g, &partition);
        q_trace.push(current_q);
        if current_q - round_start_q <= cfg.improvement_eps {
            break;
        }
    }

    DetectResult {
        modularity: modularity(g, &partition),
        partition,
        rounds: q_trace.len(),
        q_trace,
        seed: cfg.seed,
        spectral_failures,
    }
}

/// Runs `cfg.restarts` detections with seeds `seed, seed+1, ...` and keeps
/// the highest-modularity result (first on ties). Restarts run in parallel;
/// the outcome is identical for any thread count.
pub fn detect_best(g: &Graph, cfg: &DetectConfig) -> DetectResult {
    cfg.validate();
    let results: Vec<DetectResult> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|i| {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = cfg.seed.wrapping_add(i);
            run_cfg.restarts = 1;
            detect(g, &run_cfg)
        })
        .collect();
    results
        .into_iter()
        .reduce(|best, candidate| {
            if candidate.modularity > best.modularity {
                candidate
            } else {
                best
            }
        })
        .expect("restarts >= 1")
}
