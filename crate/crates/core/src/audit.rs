//! Structural and numerical consistency checks over a live forest.
//!
//! These are the invariants the training and adaptation code must preserve.
//! They walk the whole model, so they are meant for tests and debugging
//! rather than the training loop.

use std::collections::HashSet;

use crate::arena::NodeId;
use crate::forest::ForestState;
use crate::prediction::{branch_probability, path_steps, score_path};

/// Arena bookkeeping and tree links: `used <= capacity`, every reachable
/// handle is live, the reachable node count equals `used`, parent/child links
/// agree, internal nodes have two children and a split, leaves have neither.
pub fn check_structure(forest: &ForestState) -> Result<(), String> {
    let arena = forest.arena();
    if arena.used() > arena.capacity() {
        return Err(format!(
            "used {} exceeds capacity {}",
            arena.used(),
            arena.capacity()
        ));
    }
    let mut seen = HashSet::new();
    for (tree, root) in forest.roots().iter().enumerate() {
        let Some(root) = *root else { continue };
        if arena.get(root).parent.is_some() {
            return Err(format!("root {root} of tree {tree} has a parent"));
        }
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if !arena.is_live(id) {
                return Err(format!("tree {tree} reaches freed node {id}"));
            }
            if !seen.insert(id) {
                return Err(format!("node {id} reachable twice"));
            }
            let rec = arena.get(id);
            match (rec.left, rec.right) {
                (None, None) => {
                    if rec.split_feature.is_some() || rec.split_value.is_some() {
                        return Err(format!("leaf {id} carries a split"));
                    }
                }
                (Some(l), Some(r)) => {
                    if rec.split_feature.is_none() || rec.split_value.is_none() {
                        return Err(format!("internal node {id} has no split"));
                    }
                    for child in [l, r] {
                        if arena.get(child).parent != Some(id) {
                            return Err(format!("child {child} does not point back to {id}"));
                        }
                        stack.push(child);
                    }
                }
                _ => return Err(format!("node {id} has exactly one child")),
            }
        }
    }
    if seen.len() != arena.used() {
        return Err(format!(
            "{} reachable nodes but {} records in use",
            seen.len(),
            arena.used()
        ));
    }
    Ok(())
}

/// Every node's predictive distribution sums to one within `tol`.
pub fn check_normalization(forest: &ForestState, tol: f64) -> Result<(), String> {
    for root in forest.roots().iter().flatten() {
        for id in forest.arena().subtree(*root) {
            let total = forest.node_predictive_distribution(id).total();
            if (total - 1.0).abs() > tol || !total.is_finite() {
                return Err(format!("distribution of node {id} sums to {total}"));
            }
        }
    }
    Ok(())
}

/// Score mass of each tree for `x` equals `1 - P_leaf * p_leaf` within `tol`,
/// where `P_leaf` is the probability that no ancestor separated `x`.
pub fn check_telescoping(forest: &ForestState, x: &[f64], tol: f64) -> Result<(), String> {
    for (tree, root) in forest.roots().iter().enumerate() {
        let Some(root) = *root else { continue };
        let steps = path_steps(forest.arena(), forest.config(), root, x);
        let (leaf, internal) = steps.split_last().expect("a path has at least one node");
        let not_separated: f64 = internal
            .iter()
            .map(|s| 1.0 - branch_probability(s.eta, s.delta))
            .product();
        let expected = 1.0 - not_separated * branch_probability(leaf.eta, leaf.delta);
        let total: f64 = score_path(&steps).iter().sum();
        if (total - expected).abs() > tol {
            return Err(format!(
                "tree {tree}: score mass {total}, expected {expected}"
            ));
        }
    }
    Ok(())
}

/// Every internal node's counters equal the sum of its children's.
///
/// Holds for models grown by ExtendNode (with or without trimming), where
/// every arrival is counted along its whole root-to-leaf path.
pub fn check_counter_sums(forest: &ForestState) -> Result<(), String> {
    let arena = forest.arena();
    for root in forest.roots().iter().flatten() {
        for id in arena.subtree(*root) {
            let rec = arena.get(id);
            if let (Some(l), Some(r)) = (rec.left, rec.right) {
                let (lc, rc) = (&arena.get(l).counters, &arena.get(r).counters);
                let sums: Vec<u32> = lc.iter().zip(rc.iter()).map(|(a, b)| a + b).collect();
                if sums.as_slice() != &rec.counters[..] {
                    return Err(format!(
                        "node {id}: counters {:?}, children sum {sums:?}",
                        rec.counters
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Per-tree total label mass (the root's counter sum).
pub fn tree_masses(forest: &ForestState) -> Vec<u64> {
    forest
        .roots()
        .iter()
        .map(|r| r.map_or(0, |id: NodeId| forest.arena().get(id).total_count()))
        .collect()
}
