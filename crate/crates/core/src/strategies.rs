//! Out-of-memory strategies.
//!
//! While the arena has room for a branch-out (`m == true`) every strategy
//! behaves like the unconstrained Mondrian tree: the visited node's box grows
//! to contain the point and its counter for the point's label is incremented.
//! The strategies only differ once memory is exhausted:
//!
//! | strategy       | counters                       | box                            |
//! |----------------|--------------------------------|--------------------------------|
//! | Stopped        | untouched                      | untouched                      |
//! | ExtendNode     | always incremented             | always extended                |
//! | PartialUpdate  | rolled back on a blocked split | rolled back on a blocked split |
//! | CountOnly      | always incremented             | untouched                      |
//! | Ghost          | ancestors kept, trigger skipped| ancestors kept, trigger skipped|
//!
//! A blocked split is a node where the branch decision `r` came out true but
//! `m` is false.

use crate::arena::{NodeArena, NodeId};
use crate::config::Strategy;

/// Applies the strategy's box update at `node`.
pub fn update_box(
    strategy: Strategy,
    arena: &mut NodeArena,
    node: NodeId,
    x: &[f64],
    r: bool,
    m: bool,
) {
    if m {
        arena.get_mut(node).extend_box(x);
        return;
    }
    match strategy {
        Strategy::Stopped | Strategy::CountOnly => {}
        Strategy::ExtendNode => mark_if_grown(arena, node, x),
        Strategy::Ghost => {
            if !r {
                mark_if_grown(arena, node, x);
            }
        }
        Strategy::PartialUpdate => {
            arena.get_mut(node).extend_box(x);
            if r {
                // Restore the whole path, root included.
                let mut cur = Some(node);
                while let Some(id) = cur {
                    let rec = arena.get_mut(id);
                    rec.restore_prev_box();
                    cur = rec.parent;
                }
            }
        }
    }
}

fn mark_if_grown(arena: &mut NodeArena, node: NodeId, x: &[f64]) {
    let rec = arena.get_mut(node);
    if rec.extend_box(x) {
        rec.expanded = true;
    }
}

/// Applies the strategy's counter update at `node`.
pub fn update_counters(
    strategy: Strategy,
    arena: &mut NodeArena,
    node: NodeId,
    label: usize,
    r: bool,
    m: bool,
) {
    if m {
        arena.get_mut(node).counters[label] += 1;
        return;
    }
    match strategy {
        Strategy::Stopped => {}
        Strategy::ExtendNode | Strategy::CountOnly => arena.get_mut(node).counters[label] += 1,
        Strategy::Ghost => {
            if !r {
                arena.get_mut(node).counters[label] += 1;
            }
        }
        Strategy::PartialUpdate => {
            arena.get_mut(node).counters[label] += 1;
            if r {
                let mut cur = Some(node);
                while let Some(id) = cur {
                    let rec = arena.get_mut(id);
                    rec.counters[label] = rec.counters[label].saturating_sub(1);
                    cur = rec.parent;
                }
            }
        }
    }
}

/// Whether the point keeps travelling down the tree after the updates.
pub fn continues_descent(strategy: Strategy, r: bool, m: bool) -> bool {
    if m {
        return true;
    }
    match strategy {
        Strategy::Stopped => false,
        Strategy::ExtendNode | Strategy::CountOnly => true,
        Strategy::PartialUpdate | Strategy::Ghost => !r,
    }
}
