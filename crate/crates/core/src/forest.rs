//! Forest state and the data-stream training recursion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::adaptation::{self, SplitHelperState, TrimState};
use crate::arena::{NodeArena, NodeId, NodeRecord};
use crate::config::{ForestConfig, SplitMethod, TrimMethod};
use crate::error::{Error, Result};
use crate::strategies;

/// A feature vector with its integer label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub features: Vec<f64>,
    pub label: usize,
}

impl LabeledPoint {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        LabeledPoint { features, label }
    }
}

/// Where a training point ended up in one tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TreeOutcome {
    /// Reached a leaf; `inside` is true when the point was already within the
    /// leaf box on arrival.
    Landed { leaf: NodeId, inside: bool },
    /// A branch-out created `leaf` to hold the point.
    Branched { leaf: NodeId },
    /// The out-of-memory strategy discarded the point.
    Dropped,
}

impl TreeOutcome {
    pub fn leaf(self) -> Option<NodeId> {
        match self {
            TreeOutcome::Landed { leaf, .. } | TreeOutcome::Branched { leaf } => Some(leaf),
            TreeOutcome::Dropped => None,
        }
    }
}

/// Running totals kept for instrumentation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForestStats {
    pub points: u64,
    pub node_visits: u64,
    pub branch_outs: u64,
    pub trim_rounds: u64,
    pub trimmed_leaves: u64,
    pub forced_splits: u64,
}

/// Sum of per-dimension distances from `x` to the node box; zero inside.
pub fn distance_to_box(node: &NodeRecord, x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(d, &v)| (v - node.upper_bound[d]).max(0.0) + (node.lower_bound[d] - v).max(0.0))
        .sum()
}

/// Lifetime window of `node`: its parent's split time and its own (capped at
/// the budget).
pub fn time_window(arena: &NodeArena, node: NodeId, budget: f64) -> (f64, f64) {
    let rec = arena.get(node);
    let parent_time = rec.parent.map_or(0.0, |p| arena.get(p).split_time);
    (parent_time, rec.split_time.min(budget))
}

/// Races an exponential clock of rate `eta` against the node's lifetime.
///
/// Returns the branch time when the clock fires first, which happens with
/// probability `1 - exp(-(node_time - parent_time) * eta)`. Never fires for
/// `eta == 0`.
pub fn sample_branch<R: Rng + ?Sized>(
    arena: &NodeArena,
    node: NodeId,
    eta: f64,
    budget: f64,
    rng: &mut R,
) -> Option<f64> {
    if eta.is_nan() || eta <= 0.0 {
        return None;
    }
    let (parent_time, node_time) = time_window(arena, node, budget);
    let e: f64 = rng.sample(Exp1);
    let t = parent_time + e / eta;
    (t < node_time).then_some(t)
}

/// Uniform draw from the half-open interval `(lo, hi]`.
pub(crate) fn uniform_open_low<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let v = hi - (hi - lo) * u;
    if v > lo {
        v
    } else {
        hi
    }
}

/// Picks an index with probability proportional to `weights` (all >= 0, sum > 0).
pub(crate) fn weighted_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

/// Complete state of a memory-bounded Mondrian forest.
#[derive(Clone, Debug)]
pub struct ForestState {
    pub(crate) config: ForestConfig,
    pub(crate) arena: NodeArena,
    pub(crate) roots: Vec<Option<NodeId>>,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) trim: TrimState,
    pub(crate) helper: SplitHelperState,
    pub(crate) stats: ForestStats,
}

impl ForestState {
    /// Validates `config` and allocates the full node arena up front.
    pub fn new(config: ForestConfig) -> Result<Self> {
        config.validate()?;
        let arena = NodeArena::new(
            config.node_capacity(),
            config.feature_count,
            config.label_count,
        );
        Ok(ForestState {
            roots: vec![None; config.tree_count],
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            trim: TrimState::default(),
            helper: SplitHelperState::new(config.split_method, config.feature_count),
            stats: ForestStats::default(),
            arena,
            config,
        })
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn arena(&self) -> &NodeArena {
        &self.arena
    }

    pub fn roots(&self) -> &[Option<NodeId>] {
        &self.roots
    }

    pub fn stats(&self) -> &ForestStats {
        &self.stats
    }

    pub fn trim_state(&self) -> &TrimState {
        &self.trim
    }

    pub fn split_helper_state(&self) -> &SplitHelperState {
        &self.helper
    }

    pub fn node_count(&self) -> usize {
        self.arena.used()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.iter().all(Option::is_none)
    }

    /// Whether a branch-out (two records) still fits.
    pub fn has_room(&self) -> bool {
        self.arena.free() >= 2
    }

    /// Tree structure, counters and boxes, for snapshot comparisons.
    pub fn same_model(&self, other: &ForestState) -> bool {
        self.roots == other.roots && self.arena.same_model(&other.arena)
    }

    pub fn check_point(&self, point: &LabeledPoint) -> Result<()> {
        if point.features.len() != self.config.feature_count {
            return Err(Error::DimensionMismatch {
                expected: self.config.feature_count,
                actual: point.features.len(),
            });
        }
        if point.label >= self.config.label_count {
            return Err(Error::LabelOutOfRange {
                label: point.label,
                label_count: self.config.label_count,
            });
        }
        Ok(())
    }

    /// Trains every tree on `point`, then runs the adaptation hooks.
    pub fn train_point(&mut self, point: &LabeledPoint) -> Result<()> {
        self.check_point(point)?;
        let x = point.features.as_slice();
        let label = point.label;
        self.stats.points += 1;

        for tree in 0..self.config.tree_count {
            let outcome = match self.roots[tree] {
                None => {
                    let root = self.new_leaf(None, x, label)?;
                    self.roots[tree] = Some(root);
                    TreeOutcome::Branched { leaf: root }
                }
                Some(root) => self.train_tree(tree, root, x, label)?,
            };
            let landed = self.after_tree_update(tree, outcome, x, label)?;
            if self.config.trim_method == TrimMethod::Fading {
                if let (Some(leaf), Some(root)) = (landed, self.roots[tree]) {
                    adaptation::record_leaf_arrival(
                        &mut self.arena,
                        root,
                        leaf,
                        self.config.leaf_fading,
                    );
                }
            }
        }

        if self.config.split_method == SplitMethod::SplitAvg {
            self.helper.observe(x, self.config.leaf_fading);
        }
        adaptation::maybe_trim(self);
        Ok(())
    }

    /// Runs the training recursion from `root` and reports where the point went.
    pub fn train_tree(
        &mut self,
        tree: usize,
        root: NodeId,
        x: &[f64],
        label: usize,
    ) -> Result<TreeOutcome> {
        let strategy = self.config.strategy;
        let budget = self.config.budget;
        let mut node = root;
        loop {
            self.stats.node_visits += 1;
            let m = self.has_room();
            let eta = distance_to_box(self.arena.get(node), x);
            let mut r = false;
            if let Some(time) = sample_branch(&self.arena, node, eta, budget, &mut self.rng) {
                r = true;
                if m {
                    let parent = self.extend_tree(tree, node, x, label, time)?;
                    let rec = self.arena.get(parent);
                    let sibling = if rec.left == Some(node) {
                        rec.right
                    } else {
                        rec.left
                    };
                    return Ok(TreeOutcome::Branched {
                        leaf: sibling.expect("branch-out parent has two children"),
                    });
                }
            }
            strategies::update_box(strategy, &mut self.arena, node, x, r, m);
            strategies::update_counters(strategy, &mut self.arena, node, label, r, m);
            if !strategies::continues_descent(strategy, r, m) {
                return Ok(TreeOutcome::Dropped);
            }
            match self.arena.get(node).child_for(x) {
                Some(child) => node = child,
                None => {
                    return Ok(TreeOutcome::Landed {
                        leaf: node,
                        inside: eta == 0.0,
                    })
                }
            }
        }
    }

    fn new_leaf(&mut self, parent: Option<NodeId>, x: &[f64], label: usize) -> Result<NodeId> {
        let id = self.arena.alloc()?;
        let budget = self.config.budget;
        let rec = self.arena.get_mut(id);
        rec.parent = parent;
        rec.set_degenerate_box(x);
        rec.counters[label] = 1;
        rec.split_time = budget;
        Ok(id)
    }

    /// Inserts a new parent above `node` whose split separates `node`'s box
    /// from `x`, plus a new leaf sibling holding only `x`. Returns the parent.
    pub fn extend_tree(
        &mut self,
        tree: usize,
        node: NodeId,
        x: &[f64],
        label: usize,
        split_time: f64,
    ) -> Result<NodeId> {
        let free = self.arena.free();
        if free < 2 {
            return Err(Error::OutOfCapacity { free, needed: 2 });
        }
        let old = self.arena.get(node);
        let violation: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(d, &v)| (v - old.upper_bound[d]).max(0.0) + (old.lower_bound[d] - v).max(0.0))
            .collect();
        if !violation.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidConfig(
                "branch-out requested for a point inside the node box".into(),
            ));
        }
        let feature = weighted_index(&violation, &mut self.rng);
        let (lo, hi) = if x[feature] > old.upper_bound[feature] {
            (old.upper_bound[feature], x[feature])
        } else {
            (x[feature], old.lower_bound[feature])
        };
        let value = uniform_open_low(lo, hi, &mut self.rng);
        let grandparent = old.parent;
        let mut counters = old.counters.clone();
        counters[label] += 1;
        let (lower, upper) = (old.lower_bound.clone(), old.upper_bound.clone());

        let parent = self.arena.alloc()?;
        let sibling = self.new_leaf(Some(parent), x, label)?;
        {
            let rec = self.arena.get_mut(parent);
            rec.parent = grandparent;
            rec.split_feature = Some(feature);
            rec.split_value = Some(value);
            rec.split_time = split_time;
            rec.counters = counters;
            rec.lower_bound = lower;
            rec.upper_bound = upper;
            rec.extend_box(x);
            rec.prev_lower_bound.copy_from_slice(&rec.lower_bound);
            rec.prev_upper_bound.copy_from_slice(&rec.upper_bound);
            // Points strictly below the split value go right.
            if x[feature] < value {
                rec.right = Some(sibling);
                rec.left = Some(node);
            } else {
                rec.right = Some(node);
                rec.left = Some(sibling);
            }
        }
        self.arena.get_mut(node).parent = Some(parent);
        self.replace_child(tree, grandparent, node, parent);
        self.stats.branch_outs += 1;
        Ok(parent)
    }

    /// Points `parent`'s link to `old` (or the tree root) at `new`.
    pub(crate) fn replace_child(
        &mut self,
        tree: usize,
        parent: Option<NodeId>,
        old: NodeId,
        new: NodeId,
    ) {
        match parent {
            None => self.roots[tree] = Some(new),
            Some(p) => {
                let rec = self.arena.get_mut(p);
                if rec.left == Some(old) {
                    rec.left = Some(new);
                } else if rec.right == Some(old) {
                    rec.right = Some(new);
                } else {
                    panic!("node {old} is not a child of {p}");
                }
            }
        }
    }

    /// Forced regrowth split on expanded leaves. Returns the leaf that finally
    /// holds the point, if any.
    fn after_tree_update(
        &mut self,
        tree: usize,
        outcome: TreeOutcome,
        x: &[f64],
        label: usize,
    ) -> Result<Option<NodeId>> {
        if let TreeOutcome::Landed { leaf, inside: true } = outcome {
            if self.config.split_method != SplitMethod::None
                && self.arena.get(leaf).expanded
                && self.has_room()
            {
                if let Some(helper) = self.split_helper(tree) {
                    // The leaf update is redone by the split itself.
                    let rec = self.arena.get_mut(leaf);
                    rec.counters[label] -= 1;
                    match adaptation::forced_split(self, tree, leaf, x, label, &helper)? {
                        Some(child) => return Ok(Some(child)),
                        None => self.arena.get_mut(leaf).counters[label] += 1,
                    }
                }
            }
        }
        Ok(outcome.leaf())
    }

    /// Current split helper for `tree`, if one can be computed.
    pub fn split_helper(&self, tree: usize) -> Option<Vec<f64>> {
        let root = self.roots[tree]?;
        adaptation::compute_split_helper(&self.arena, root, &self.helper)
    }
}
