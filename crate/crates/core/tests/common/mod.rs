#![allow(dead_code)]

use mondrian_core::{
    node_size_bytes, ForestConfig, ForestState, LabeledPoint, SplitMethod, Strategy, TrimMethod,
};
use proptest::prelude::prop;
use proptest::strategy::Strategy as Gen;

/// Config holding exactly `capacity` nodes.
pub fn config(
    features: usize,
    labels: usize,
    trees: usize,
    capacity: usize,
    strategy: Strategy,
    seed: u64,
) -> ForestConfig {
    let mut cfg = ForestConfig::new(features, labels);
    cfg.tree_count = trees;
    cfg.memory_budget_bytes = capacity * node_size_bytes(features, labels);
    cfg.strategy = strategy;
    cfg.seed = seed;
    cfg
}

pub fn forest(cfg: ForestConfig) -> ForestState {
    ForestState::new(cfg).expect("valid config")
}

pub fn train_all(forest: &mut ForestState, points: &[LabeledPoint]) {
    for p in points {
        forest.train_point(p).unwrap();
    }
}

pub fn arb_strategy() -> impl Gen<Value = Strategy> {
    prop::sample::select(Strategy::ALL.to_vec())
}

pub fn arb_trim() -> impl Gen<Value = TrimMethod> {
    prop::sample::select(TrimMethod::ALL.to_vec())
}

pub fn arb_split() -> impl Gen<Value = SplitMethod> {
    prop::sample::select(SplitMethod::ALL.to_vec())
}

/// Points on a coarse grid so that repeats and boundary hits are common.
pub fn arb_points(
    features: usize,
    labels: usize,
    len: std::ops::Range<usize>,
) -> impl Gen<Value = Vec<LabeledPoint>> {
    prop::collection::vec((prop::collection::vec(-4i32..=4, features), 0..labels), len).prop_map(
        |rows| {
            rows.into_iter()
                .map(|(xs, l)| {
                    LabeledPoint::new(xs.into_iter().map(|v| v as f64 * 0.5).collect(), l)
                })
                .collect()
        },
    )
}

/// Continuous points in `[-1, 1]^features`.
pub fn arb_points_continuous(
    features: usize,
    labels: usize,
    len: std::ops::Range<usize>,
) -> impl Gen<Value = Vec<LabeledPoint>> {
    prop::collection::vec(
        (prop::collection::vec(-1.0f64..1.0, features), 0..labels),
        len,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .map(|(x, l)| LabeledPoint::new(x, l))
            .collect()
    })
}
