use std::fmt;
use std::str::FromStr;

use crate::arena::node_size_bytes;
use crate::error::{Error, Result};

/// Out-of-memory behaviour of `update_box` / `update_counters`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Stopped,
    ExtendNode,
    PartialUpdate,
    CountOnly,
    Ghost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrimMethod {
    None,
    Random,
    Count,
    Fading,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitMethod {
    None,
    SplitAvg,
    SplitBarycenter,
}

/// Largest guarding count a leaf may have and still be trimmed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrimThreshold {
    /// Mean guarding count over the tree's leaves.
    Auto,
    Fixed(f64),
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($ty::$variant => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        "unknown {} `{}`",
                        stringify!($ty),
                        other
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Strategy {
    Stopped => "stopped",
    ExtendNode => "extend-node",
    PartialUpdate => "partial-update",
    CountOnly => "count-only",
    Ghost => "ghost",
});

keyword_enum!(TrimMethod {
    None => "none",
    Random => "random",
    Count => "count",
    Fading => "fading",
});

keyword_enum!(SplitMethod {
    None => "none",
    SplitAvg => "avg",
    SplitBarycenter => "barycenter",
});

impl fmt::Display for TrimThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrimThreshold::Auto => f.write_str("auto"),
            TrimThreshold::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for TrimThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(TrimThreshold::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 => Ok(TrimThreshold::Fixed(v)),
            _ => Err(Error::InvalidConfig(format!(
                "trim threshold must be `auto` or a non-negative number, got `{s}`"
            ))),
        }
    }
}

/// Parses a lifetime budget: a positive number or `inf`.
pub fn parse_budget(s: &str) -> Result<f64> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => match s.parse::<f64>() {
            Ok(v) if v > 0.0 => Ok(v),
            _ => Err(Error::InvalidConfig(format!(
                "budget must be positive or `inf`, got `{s}`"
            ))),
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestConfig {
    pub tree_count: usize,
    pub feature_count: usize,
    pub label_count: usize,
    pub memory_budget_bytes: usize,
    /// Mondrian lifetime; bounds split times and thereby tree depth.
    pub budget: f64,
    pub base_count: f64,
    pub discount_factor: f64,
    pub strategy: Strategy,
    pub trim_method: TrimMethod,
    pub split_method: SplitMethod,
    pub trim_threshold: TrimThreshold,
    /// Fading factor for leaf arrival counts and the split-helper mean.
    pub leaf_fading: f64,
    pub seed: u64,
}

impl ForestConfig {
    pub fn new(feature_count: usize, label_count: usize) -> Self {
        ForestConfig {
            tree_count: 10,
            feature_count,
            label_count,
            memory_budget_bytes: 600_000,
            budget: f64::INFINITY,
            base_count: 1.0,
            discount_factor: 0.1,
            strategy: Strategy::ExtendNode,
            trim_method: TrimMethod::None,
            split_method: SplitMethod::None,
            trim_threshold: TrimThreshold::Auto,
            leaf_fading: 0.99,
            seed: 0,
        }
    }

    pub fn node_size_bytes(&self) -> usize {
        node_size_bytes(self.feature_count, self.label_count)
    }

    pub fn node_capacity(&self) -> usize {
        self.memory_budget_bytes / self.node_size_bytes()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.tree_count == 0 {
            return bad("tree count must be at least 1");
        }
        if self.feature_count == 0 {
            return bad("feature count must be at least 1");
        }
        if self.label_count == 0 {
            return bad("label count must be at least 1");
        }
        if self.budget.is_nan() || self.budget <= 0.0 {
            return bad("budget must be positive");
        }
        if !self.base_count.is_finite() || self.base_count < 0.0 {
            return bad("base count must be a non-negative number");
        }
        if !(0.0..1.0).contains(&self.discount_factor) {
            return bad("discount factor must lie in [0, 1)");
        }
        if !(self.leaf_fading > 0.0 && self.leaf_fading <= 1.0) {
            return bad("leaf fading must lie in (0, 1]");
        }
        let required = self.node_size_bytes() * 2 * self.tree_count;
        if self.memory_budget_bytes < required {
            return Err(Error::BudgetTooSmall {
                budget: self.memory_budget_bytes,
                required,
            });
        }
        Ok(())
    }
}
