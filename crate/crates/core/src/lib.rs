//! Memory-bounded Mondrian forest for data-stream classification.
//!
//! The forest lives in a [`NodeArena`] whose capacity is fixed by a byte
//! budget. Once the arena is full, one of five [`Strategy`] variants decides
//! how node statistics keep evolving, and optional trimming/regrowth
//! ([`TrimMethod`], [`SplitMethod`]) lets trees adapt to concept drift.
//!
//! ```
//! use mondrian_core::{ForestConfig, ForestState, LabeledPoint};
//!
//! let mut forest = ForestState::new(ForestConfig::new(2, 2)).unwrap();
//! forest.train_point(&LabeledPoint::new(vec![0.0, 0.0], 0)).unwrap();
//! forest.train_point(&LabeledPoint::new(vec![1.0, 1.0], 1)).unwrap();
//! let (label, _scores) = forest.predict(&[0.9, 1.0]).unwrap();
//! assert!(label < 2);
//! ```

pub mod adaptation;
pub mod arena;
pub mod audit;
pub mod config;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod forest;
pub mod ingest;
pub mod prediction;
pub mod strategies;

pub use arena::{node_size_bytes, NodeArena, NodeId, NodeRecord};
pub use config::{ForestConfig, SplitMethod, Strategy, TrimMethod, TrimThreshold};
pub use error::{Error, Result};
pub use evaluation::{run_prequential, FadingConfusion, Prequential, PrequentialReport};
pub use forest::{ForestState, LabeledPoint, TreeOutcome};
pub use prediction::LabelDistribution;
