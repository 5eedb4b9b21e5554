//! Path scoring.
//!
//! A point is sorted to its leaf. Every node `j` on the way contributes its
//! predictive distribution `G_j`, weighted by the probability that a Mondrian
//! branch-out would have separated the point exactly at `j`:
//!
//! ```text
//! eta_j   = sum_d max(x_d - u_jd, 0) + max(l_jd - x_d, 0)
//! p_j     = 1 - exp(-delta_j * eta_j)
//! P_j     = prod_{g above j} (1 - p_g)
//! s_jk    = P_j * p_j * G_jk            (internal j)
//!         = P_j * (1 - p_j) * G_jk      (leaf j)
//! S_k     = sum_j s_jk
//! ```

use crate::arena::{NodeArena, NodeId};
use crate::config::ForestConfig;
use crate::error::{Error, Result};
use crate::forest::{distance_to_box, time_window, ForestState};

#[derive(Clone, Debug, PartialEq)]
pub struct LabelDistribution {
    pub scores: Vec<f64>,
}

impl LabelDistribution {
    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    /// Highest-scoring label; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = k;
            }
        }
        best
    }
}

/// Distribution of the root's virtual parent.
///
/// `base_count` pseudo-counts on every label normalise to the uniform
/// distribution, which is also used when `base_count` is zero.
pub fn root_prior(label_count: usize, _base_count: f64) -> Vec<f64> {
    vec![1.0 / label_count as f64; label_count]
}

/// One step of the smoothing recursion from the parent's distribution.
pub fn smooth(counters: &[u32], parent: &[f64], discount: f64) -> Vec<f64> {
    let total: f64 = counters.iter().map(|&c| c as f64).sum();
    if total == 0.0 {
        return parent.to_vec();
    }
    let tables: f64 = counters.iter().filter(|&&c| c > 0).count() as f64;
    counters
        .iter()
        .zip(parent)
        .map(|(&c, &g)| {
            let tab = if c > 0 { 1.0 } else { 0.0 };
            (c as f64 - discount * tab + discount * tables * g) / total
        })
        .collect()
}

/// Probability of a branch-out at a node with lifetime `delta` for a point
/// at distance `eta` from its box.
pub fn branch_probability(eta: f64, delta: f64) -> f64 {
    if eta.is_nan() || eta <= 0.0 {
        0.0
    } else if delta.is_infinite() {
        1.0
    } else {
        -(-delta * eta).exp_m1()
    }
}

/// Predictive distribution of `node`, built from the root down.
pub fn node_predictive_distribution(
    arena: &NodeArena,
    config: &ForestConfig,
    node: NodeId,
) -> LabelDistribution {
    let mut path = arena.ancestors(node);
    path.reverse();
    path.push(node);
    let mut g = root_prior(config.label_count, config.base_count);
    for id in path {
        g = smooth(&arena.get(id).counters, &g, config.discount_factor);
    }
    LabelDistribution { scores: g }
}

/// One node's inputs to the path score.
#[derive(Clone, Debug, PartialEq)]
pub struct PathStep {
    pub eta: f64,
    pub delta: f64,
    pub distribution: Vec<f64>,
}

/// Combines root-to-leaf steps into tree scores. The last step is the leaf.
pub fn score_path(steps: &[PathStep]) -> Vec<f64> {
    let labels = steps.first().map_or(0, |s| s.distribution.len());
    let mut scores = vec![0.0; labels];
    let mut not_separated = 1.0;
    for (i, step) in steps.iter().enumerate() {
        let p = branch_probability(step.eta, step.delta);
        let weight = if i + 1 == steps.len() {
            not_separated * (1.0 - p)
        } else {
            not_separated * p
        };
        for (s, &g) in scores.iter_mut().zip(&step.distribution) {
            *s += weight * g;
        }
        not_separated *= 1.0 - p;
    }
    scores
}

/// Root-to-leaf steps for `x` in the tree rooted at `root`.
pub fn path_steps(
    arena: &NodeArena,
    config: &ForestConfig,
    root: NodeId,
    x: &[f64],
) -> Vec<PathStep> {
    let mut steps = Vec::new();
    let mut g = root_prior(config.label_count, config.base_count);
    let mut node = Some(root);
    while let Some(id) = node {
        let rec = arena.get(id);
        let (parent_time, node_time) = time_window(arena, id, config.budget);
        g = smooth(&rec.counters, &g, config.discount_factor);
        steps.push(PathStep {
            eta: distance_to_box(rec, x),
            delta: node_time - parent_time,
            distribution: g.clone(),
        });
        node = rec.child_for(x);
    }
    steps
}

impl ForestState {
    /// Score vector of one tree for `x`.
    pub fn tree_score(&self, tree: usize, x: &[f64]) -> Result<LabelDistribution> {
        let root = self.roots[tree].ok_or(Error::EmptyTree(tree))?;
        if x.len() != self.config.feature_count {
            return Err(Error::DimensionMismatch {
                expected: self.config.feature_count,
                actual: x.len(),
            });
        }
        let steps = path_steps(&self.arena, &self.config, root, x);
        Ok(LabelDistribution {
            scores: score_path(&steps),
        })
    }

    /// Mean of the non-empty trees' scores and its argmax.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, LabelDistribution)> {
        let mut sum = vec![0.0; self.config.label_count];
        let mut trees = 0usize;
        for tree in 0..self.roots.len() {
            if self.roots[tree].is_none() {
                continue;
            }
            let s = self.tree_score(tree, x)?;
            for (a, b) in sum.iter_mut().zip(&s.scores) {
                *a += b;
            }
            trees += 1;
        }
        if trees == 0 {
            return Err(Error::EmptyForest);
        }
        sum.iter_mut().for_each(|v| *v /= trees as f64);
        let dist = LabelDistribution { scores: sum };
        if dist.total() > 0.0 {
            return Ok((dist.argmax(), dist));
        }
        // Every path gave all of its mass to a branch-out (a point outside
        // single-leaf trees): fall back to the mean root distribution.
        let mut fallback = vec![0.0; self.config.label_count];
        for root in self.roots.iter().flatten() {
            let g = self.node_predictive_distribution(*root);
            for (a, b) in fallback.iter_mut().zip(&g.scores) {
                *a += b;
            }
        }
        let label = LabelDistribution { scores: fallback }.argmax();
        Ok((label, dist))
    }

    pub fn node_predictive_distribution(&self, node: NodeId) -> LabelDistribution {
        node_predictive_distribution(&self.arena, &self.config, node)
    }
}
