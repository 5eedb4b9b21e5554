//! Fixed-capacity node storage.
//!
//! Every record is allocated when the arena is created, so the resident size of
//! a forest never changes while it trains. The number of records is derived
//! from a byte budget through [`node_size_bytes`], which describes the packed
//! layout a node would occupy on a small device:
//!
//! | field                                   | bytes        |
//! |-----------------------------------------|--------------|
//! | parent, left, right handles (`u32`)      | 12           |
//! | split feature (`u32`)                   | 4            |
//! | split value (`f64`)                     | 8            |
//! | split time (`f64`)                      | 8            |
//! | fading count (`f64`)                    | 8            |
//! | expanded flag + padding                 | 8            |
//! | label counters (`u32` x L)              | 4 L          |
//! | current and previous bounds (`f64` x 4F) | 32 F         |

use std::fmt;

use crate::error::{Error, Result};

/// Bytes taken by the fixed part of a node record.
pub const NODE_HEADER_BYTES: usize = 48;
const COUNTER_BYTES: usize = 4;
const BOUND_BYTES: usize = 8;

/// Size of one packed node record for `features` features and `labels` labels.
pub fn node_size_bytes(features: usize, labels: usize) -> usize {
    NODE_HEADER_BYTES + COUNTER_BYTES * labels + BOUND_BYTES * 4 * features
}

/// Number of node records that fit in `budget_bytes`.
pub fn capacity_for_budget(budget_bytes: usize, features: usize, labels: usize) -> usize {
    budget_bytes / node_size_bytes(features, labels)
}

/// Handle to a record in a [`NodeArena`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One Mondrian tree node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub parent: Option<NodeId>,
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub split_feature: Option<usize>,
    pub split_value: Option<f64>,
    pub counters: Box<[u32]>,
    pub lower_bound: Box<[f64]>,
    pub upper_bound: Box<[f64]>,
    pub prev_lower_bound: Box<[f64]>,
    pub prev_upper_bound: Box<[f64]>,
    pub split_time: f64,
    pub fading_count: f64,
    pub expanded: bool,
}

impl NodeRecord {
    fn blank(features: usize, labels: usize) -> Self {
        NodeRecord {
            parent: None,
            left: None,
            right: None,
            split_feature: None,
            split_value: None,
            counters: vec![0; labels].into_boxed_slice(),
            lower_bound: vec![0.0; features].into_boxed_slice(),
            upper_bound: vec![0.0; features].into_boxed_slice(),
            prev_lower_bound: vec![0.0; features].into_boxed_slice(),
            prev_upper_bound: vec![0.0; features].into_boxed_slice(),
            split_time: 0.0,
            fading_count: 0.0,
            expanded: false,
        }
    }

    fn reset(&mut self) {
        self.parent = None;
        self.left = None;
        self.right = None;
        self.split_feature = None;
        self.split_value = None;
        self.counters.fill(0);
        self.lower_bound.fill(0.0);
        self.upper_bound.fill(0.0);
        self.prev_lower_bound.fill(0.0);
        self.prev_upper_bound.fill(0.0);
        self.split_time = 0.0;
        self.fading_count = 0.0;
        self.expanded = false;
    }

    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.left.is_none() && self.right.is_none()
    }

    pub fn total_count(&self) -> u64 {
        self.counters.iter().map(|&c| c as u64).sum()
    }

    /// Collapses the box onto `x` (current and previous bounds).
    pub fn set_degenerate_box(&mut self, x: &[f64]) {
        self.lower_bound.copy_from_slice(x);
        self.upper_bound.copy_from_slice(x);
        self.prev_lower_bound.copy_from_slice(x);
        self.prev_upper_bound.copy_from_slice(x);
    }

    /// Saves the current bounds, then grows the box to contain `x`.
    /// Returns whether any bound moved.
    pub fn extend_box(&mut self, x: &[f64]) -> bool {
        self.prev_lower_bound.copy_from_slice(&self.lower_bound);
        self.prev_upper_bound.copy_from_slice(&self.upper_bound);
        let mut grew = false;
        for (d, &v) in x.iter().enumerate() {
            if v < self.lower_bound[d] {
                self.lower_bound[d] = v;
                grew = true;
            }
            if v > self.upper_bound[d] {
                self.upper_bound[d] = v;
                grew = true;
            }
        }
        grew
    }

    /// Equality of everything that shapes predictions and future training.
    /// The saved previous bounds are a rollback scratch slot and are ignored.
    pub fn same_model(&self, other: &NodeRecord) -> bool {
        self.parent == other.parent
            && self.left == other.left
            && self.right == other.right
            && self.split_feature == other.split_feature
            && self.split_value == other.split_value
            && self.counters == other.counters
            && self.lower_bound == other.lower_bound
            && self.upper_bound == other.upper_bound
            && self.split_time == other.split_time
            && self.fading_count == other.fading_count
            && self.expanded == other.expanded
    }

    pub fn restore_prev_box(&mut self) {
        self.lower_bound.copy_from_slice(&self.prev_lower_bound);
        self.upper_bound.copy_from_slice(&self.prev_upper_bound);
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(d, &v)| self.lower_bound[d] <= v && v <= self.upper_bound[d])
    }

    /// Child a point follows at this internal node. Values strictly below the
    /// split value go right, the rest go left.
    #[inline]
    pub fn child_for(&self, x: &[f64]) -> Option<NodeId> {
        match (self.split_feature, self.split_value) {
            (Some(f), Some(v)) if x[f] < v => self.right,
            (Some(_), Some(_)) => self.left,
            _ => None,
        }
    }
}

/// Pool of node records with a free list.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeArena {
    records: Vec<NodeRecord>,
    free_list: Vec<NodeId>,
    live: Vec<bool>,
    used: usize,
}

impl NodeArena {
    pub fn new(capacity: usize, features: usize, labels: usize) -> Self {
        let records = (0..capacity)
            .map(|_| NodeRecord::blank(features, labels))
            .collect();
        // Reverse order so handles are handed out from 0 upward.
        let free_list = (0..capacity as u32).rev().map(NodeId).collect();
        NodeArena {
            records,
            free_list,
            live: vec![false; capacity],
            used: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.records.len()
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn free(&self) -> usize {
        self.records.len() - self.used
    }

    /// Same live handles, free list and model fields on every live record.
    pub fn same_model(&self, other: &NodeArena) -> bool {
        self.live == other.live
            && self.free_list == other.free_list
            && self
                .records
                .iter()
                .zip(&other.records)
                .zip(&self.live)
                .all(|((a, b), &live)| !live || a.same_model(b))
    }

    pub fn is_live(&self, id: NodeId) -> bool {
        self.live.get(id.index()).copied().unwrap_or(false)
    }

    /// Takes a zeroed record from the free list.
    pub fn alloc(&mut self) -> Result<NodeId> {
        let id = self
            .free_list
            .pop()
            .ok_or(Error::OutOfCapacity { free: 0, needed: 1 })?;
        self.live[id.index()] = true;
        self.used += 1;
        Ok(id)
    }

    pub fn release(&mut self, id: NodeId) {
        assert!(self.is_live(id), "double free of node {id}");
        self.records[id.index()].reset();
        self.live[id.index()] = false;
        self.used -= 1;
        self.free_list.push(id);
    }

    #[inline]
    pub fn get(&self, id: NodeId) -> &NodeRecord {
        debug_assert!(self.is_live(id), "access to freed node {id}");
        &self.records[id.index()]
    }

    #[inline]
    pub fn get_mut(&mut self, id: NodeId) -> &mut NodeRecord {
        debug_assert!(self.is_live(id), "access to freed node {id}");
        &mut self.records[id.index()]
    }

    /// Handles of every node reachable from `root`, in depth-first pre-order.
    pub fn subtree(&self, root: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            out.push(id);
            let node = self.get(id);
            if let Some(r) = node.right {
                stack.push(r);
            }
            if let Some(l) = node.left {
                stack.push(l);
            }
        }
        out
    }

    pub fn leaves(&self, root: NodeId) -> Vec<NodeId> {
        self.subtree(root)
            .into_iter()
            .filter(|&id| self.get(id).is_leaf())
            .collect()
    }

    /// Ancestors of `id`, nearest first, root last.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.get(id).parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.get(p).parent;
        }
        out
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.ancestors(id).len()
    }
}
