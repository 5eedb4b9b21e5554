//! Leaf trimming and regrowth splitting.
//!
//! When the arena is full, every hundred training points each tree may give
//! up one leaf (and that leaf's parent), returning two records to the arena.
//! The freed records are then consumed either by ordinary branch-outs or by
//! forced splits of leaves whose boxes were stretched while memory was full.

use rand::Rng;
use rand_distr::Exp1;

use crate::arena::{NodeArena, NodeId};
use crate::config::{SplitMethod, TrimMethod, TrimThreshold};
use crate::error::{Error, Result};
use crate::forest::ForestState;

/// Training points between two trim rounds while memory is exhausted.
pub const TRIM_PERIOD: u32 = 100;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrimState {
    pub points_since_trim: u32,
}

/// Forest-wide state behind the split helper.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitHelperState {
    pub mode: SplitMethod,
    pub fading_mean: Vec<f64>,
    pub fading_mean_initialized: bool,
}

impl SplitHelperState {
    pub fn new(mode: SplitMethod, features: usize) -> Self {
        SplitHelperState {
            mode,
            fading_mean: vec![0.0; features],
            fading_mean_initialized: false,
        }
    }

    /// `mean <- f * mean + (1 - f) * x`, seeded with the first point.
    pub fn observe(&mut self, x: &[f64], fading: f64) {
        if !self.fading_mean_initialized {
            self.fading_mean.copy_from_slice(x);
            self.fading_mean_initialized = true;
            return;
        }
        for (m, &v) in self.fading_mean.iter_mut().zip(x) {
            *m = fading * *m + (1.0 - fading) * v;
        }
    }
}

/// Fades every leaf's arrival count and credits the leaf that got the point.
pub fn record_leaf_arrival(arena: &mut NodeArena, root: NodeId, hit: NodeId, fading: f64) {
    for leaf in arena.leaves(root) {
        let rec = arena.get_mut(leaf);
        rec.fading_count *= fading;
        if leaf == hit {
            rec.fading_count += 1.0;
        }
    }
}

fn guard_value(arena: &NodeArena, leaf: NodeId, method: TrimMethod) -> f64 {
    let rec = arena.get(leaf);
    match method {
        TrimMethod::Fading => rec.fading_count,
        _ => rec.total_count() as f64,
    }
}

/// Picks the leaf to trim in the tree rooted at `root`, or `None` when the
/// tree is a single leaf or the pick is guarded by the threshold.
pub fn select_trim_leaf<R: Rng + ?Sized>(
    arena: &NodeArena,
    root: NodeId,
    method: TrimMethod,
    threshold: TrimThreshold,
    rng: &mut R,
) -> Option<NodeId> {
    let mut leaves = arena.leaves(root);
    if leaves.len() < 2 || method == TrimMethod::None {
        return None;
    }
    leaves.sort_unstable();
    let guards: Vec<f64> = leaves
        .iter()
        .map(|&leaf| guard_value(arena, leaf, method))
        .collect();
    let pick = match method {
        TrimMethod::None => unreachable!(),
        TrimMethod::Random => rng.random_range(0..leaves.len()),
        TrimMethod::Count | TrimMethod::Fading => {
            let mut best = 0;
            for (i, &g) in guards.iter().enumerate() {
                if g < guards[best] {
                    best = i;
                }
            }
            best
        }
    };
    let limit = match threshold {
        TrimThreshold::Fixed(v) => v,
        TrimThreshold::Auto => guards.iter().sum::<f64>() / guards.len() as f64,
    };
    (guards[pick] <= limit).then_some(leaves[pick])
}

/// Removes `leaf` and its parent, splicing the sibling into the grandparent.
/// The leaf's counters are taken off every ancestor.
pub fn trim_leaf(forest: &mut ForestState, tree: usize, leaf: NodeId) -> Result<()> {
    let arena = &mut forest.arena;
    if !arena.is_live(leaf) || !arena.get(leaf).is_leaf() {
        return Err(Error::NotALeaf(leaf.0));
    }
    let parent = arena.get(leaf).parent.ok_or(Error::RootTrim(leaf.0))?;
    let prec = arena.get(parent);
    let sibling = if prec.left == Some(leaf) {
        prec.right
    } else {
        prec.left
    }
    .expect("internal node has two children");
    let grandparent = prec.parent;

    let removed = arena.get(leaf).counters.clone();
    let mut cur = grandparent;
    while let Some(id) = cur {
        let rec = arena.get_mut(id);
        for (c, &r) in rec.counters.iter_mut().zip(removed.iter()) {
            *c = c.saturating_sub(r);
        }
        cur = rec.parent;
    }

    arena.get_mut(sibling).parent = grandparent;
    forest.replace_child(tree, grandparent, parent, sibling);
    forest.arena.release(leaf);
    forest.arena.release(parent);
    forest.stats.trimmed_leaves += 1;
    Ok(())
}

/// Runs the periodic trim round once memory is exhausted.
pub fn maybe_trim(forest: &mut ForestState) {
    let method = forest.config.trim_method;
    if method == TrimMethod::None || forest.has_room() {
        return;
    }
    forest.trim.points_since_trim += 1;
    if forest.trim.points_since_trim < TRIM_PERIOD {
        return;
    }
    forest.trim.points_since_trim = 0;
    forest.stats.trim_rounds += 1;
    for tree in 0..forest.config.tree_count {
        let Some(root) = forest.roots[tree] else {
            continue;
        };
        let pick = select_trim_leaf(
            &forest.arena,
            root,
            method,
            forest.config.trim_threshold,
            &mut forest.rng,
        );
        if let Some(leaf) = pick {
            trim_leaf(forest, tree, leaf).expect("selected leaf is trimmable");
        }
    }
}

/// Fading mean of the stream (Split AVG) or the count-weighted barycenter of
/// the leaf box centers (Split Barycenter).
pub fn compute_split_helper(
    arena: &NodeArena,
    root: NodeId,
    state: &SplitHelperState,
) -> Option<Vec<f64>> {
    match state.mode {
        SplitMethod::None => None,
        SplitMethod::SplitAvg => state
            .fading_mean_initialized
            .then(|| state.fading_mean.clone()),
        SplitMethod::SplitBarycenter => {
            let leaves = arena.leaves(root);
            let features = arena.get(root).lower_bound.len();
            let mut acc = vec![0.0; features];
            let mut total = 0.0;
            for &leaf in &leaves {
                let rec = arena.get(leaf);
                let w = rec.total_count() as f64;
                total += w;
                for (d, a) in acc.iter_mut().enumerate() {
                    *a += w * 0.5 * (rec.lower_bound[d] + rec.upper_bound[d]);
                }
            }
            if total > 0.0 {
                acc.iter_mut().for_each(|a| *a /= total);
            } else {
                // No counts anywhere: plain mean of the centers.
                for &leaf in &leaves {
                    let rec = arena.get(leaf);
                    for (d, a) in acc.iter_mut().enumerate() {
                        *a += 0.5 * (rec.lower_bound[d] + rec.upper_bound[d]);
                    }
                }
                acc.iter_mut().for_each(|a| *a /= leaves.len() as f64);
            }
            Some(acc)
        }
    }
}

/// Splits `count` into (low, high) parts proportional to `frac_low` and
/// `1 - frac_low`, using largest-remainder rounding. Ties favour `low`.
pub fn proportional_split(count: u32, frac_low: f64) -> (u32, u32) {
    let exact_low = count as f64 * frac_low;
    let exact_high = count as f64 * (1.0 - frac_low);
    let low = (exact_low.floor() as u32).min(count);
    let high = (exact_high.floor() as u32).min(count - low);
    let rest = count - low - high;
    if rest == 0 {
        return (low, high);
    }
    if exact_low - exact_low.floor() >= exact_high - exact_high.floor() {
        (low + rest, high)
    } else {
        (low, high + rest)
    }
}

/// Dimensions along which the helper lies within the leaf box and differs
/// from `x`.
pub fn eligible_dimensions(
    arena: &NodeArena,
    leaf: NodeId,
    x: &[f64],
    helper: &[f64],
) -> Vec<usize> {
    let rec = arena.get(leaf);
    (0..x.len())
        .filter(|&d| {
            rec.lower_bound[d] <= helper[d] && helper[d] <= rec.upper_bound[d] && helper[d] != x[d]
        })
        .collect()
}

/// Splits `leaf` between `x` and `helper`, then routes `(x, label)` into the
/// child on its side. The leaf's counters (which must not include `x` yet)
/// are shared between the children in proportion to their extent along the
/// split dimension. Returns the child holding `x`, or `None` when no
/// dimension is eligible.
pub fn forced_split(
    forest: &mut ForestState,
    _tree: usize,
    leaf: NodeId,
    x: &[f64],
    label: usize,
    helper: &[f64],
) -> Result<Option<NodeId>> {
    let free = forest.arena.free();
    if free < 2 {
        return Err(Error::OutOfCapacity { free, needed: 2 });
    }
    if !forest.arena.get(leaf).is_leaf() {
        return Err(Error::NotALeaf(leaf.0));
    }
    let dims = eligible_dimensions(&forest.arena, leaf, x, helper);
    if dims.is_empty() {
        return Ok(None);
    }
    let d = dims[forest.rng.random_range(0..dims.len())];
    let (a, b) = if x[d] < helper[d] {
        (x[d], helper[d])
    } else {
        (helper[d], x[d])
    };
    let u: f64 = forest.rng.random();
    let mut value = a + (b - a) * u;
    if !(value > a && value < b) {
        value = a + 0.5 * (b - a);
        if !(value > a && value < b) {
            return Ok(None);
        }
    }

    let budget = forest.config.budget;
    let rec = forest.arena.get(leaf);
    let (lo, hi) = (rec.lower_bound[d], rec.upper_bound[d]);
    let frac_low = (value - lo) / (hi - lo);
    let parent_time = rec.parent.map_or(0.0, |p| forest.arena.get(p).split_time);
    let linear_dim: f64 = rec
        .upper_bound
        .iter()
        .zip(rec.lower_bound.iter())
        .map(|(u, l)| u - l)
        .sum();
    let fading = rec.fading_count;
    let counters = rec.counters.clone();
    let (lower, upper) = (rec.lower_bound.clone(), rec.upper_bound.clone());

    let e: f64 = forest.rng.sample(Exp1);
    let mut split_time = parent_time + e / linear_dim;
    if split_time.is_nan() || split_time >= budget {
        split_time = parent_time + 0.5 * (budget - parent_time);
    }

    // Values below the split go right, as everywhere else in the tree.
    let low_child = forest.arena.alloc()?;
    let high_child = forest.arena.alloc()?;
    for (child, is_low) in [(low_child, true), (high_child, false)] {
        let c = forest.arena.get_mut(child);
        c.parent = Some(leaf);
        c.split_time = budget;
        c.lower_bound.copy_from_slice(&lower);
        c.upper_bound.copy_from_slice(&upper);
        if is_low {
            c.upper_bound[d] = value;
        } else {
            c.lower_bound[d] = value;
        }
        c.prev_lower_bound.copy_from_slice(&c.lower_bound);
        c.prev_upper_bound.copy_from_slice(&c.upper_bound);
        c.fading_count = if is_low {
            fading * frac_low
        } else {
            fading * (1.0 - frac_low)
        };
    }
    for (k, &c) in counters.iter().enumerate() {
        let (low, high) = proportional_split(c, frac_low);
        forest.arena.get_mut(low_child).counters[k] = low;
        forest.arena.get_mut(high_child).counters[k] = high;
    }

    let rec = forest.arena.get_mut(leaf);
    rec.split_feature = Some(d);
    rec.split_value = Some(value);
    rec.split_time = split_time;
    rec.right = Some(low_child);
    rec.left = Some(high_child);
    rec.expanded = false;
    rec.fading_count = 0.0;
    rec.counters[label] += 1;

    let target = if x[d] < value { low_child } else { high_child };
    let c = forest.arena.get_mut(target);
    c.counters[label] += 1;
    c.extend_box(x);
    forest.stats.forced_splits += 1;
    Ok(Some(target))
}
