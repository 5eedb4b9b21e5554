//! Seeded synthetic streams in the style of the classic MOA generators.
//!
//! * **RandomRBF**: `centroids` Gaussian blobs. Each centroid gets a center
//!   uniform on `[0,1]^F`, a label, a radius and a weight uniform on `[0,1]`,
//!   all drawn once from the seed. A point picks a centroid by weight and is
//!   offset from its center along a random unit direction by
//!   `N(0,1) * radius`.
//! * **SEA**: three features uniform on `[0,10]`; label 1 iff `f1 + f2 <= theta`
//!   with `theta` = 8, 9, 7, 9.5 for functions 1 to 4.
//! * **SINE**: two features uniform on `[0,1]`. Function 1: label 1 iff
//!   `y < sin(x)`; 2 is its reverse; 3: label 1 iff
//!   `y < 0.5 + 0.3 sin(3 pi x)`; 4 is its reverse.
//! * **Hyperplane**: features uniform on `[0,1]`; label 1 iff
//!   `sum w_d x_d >= sum w_d / 2`. After each point the first
//!   `drifting_attributes` weights move by `drift_magnitude` in their current
//!   direction, and each direction flips with probability 0.1.
//!
//! Noise replaces the label by a uniformly drawn *different* label. Two
//! wrappers change the concept mid-stream: a function switch (SEA, SINE) and
//! a cyclic label shift (any family).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::forest::LabeledPoint;

pub const SEA_THRESHOLDS: [f64; 4] = [8.0, 9.0, 7.0, 9.5];
const DIRECTION_FLIP_PROBABILITY: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorFamily {
    RandomRbf,
    Sea,
    Sine,
    Hyperplane,
}

impl GeneratorFamily {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorFamily::RandomRbf => "randomrbf",
            GeneratorFamily::Sea => "sea",
            GeneratorFamily::Sine => "sine",
            GeneratorFamily::Hyperplane => "hyperplane",
        }
    }
}

impl fmt::Display for GeneratorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "randomrbf" => Ok(GeneratorFamily::RandomRbf),
            "sea" => Ok(GeneratorFamily::Sea),
            "sine" => Ok(GeneratorFamily::Sine),
            "hyperplane" => Ok(GeneratorFamily::Hyperplane),
            other => Err(Error::InvalidConfig(format!("unknown generator `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub family: GeneratorFamily,
    pub seed: u64,
    pub n_points: u64,
    pub noise: f64,
    /// Feature count for RandomRBF and Hyperplane.
    pub features: usize,
    /// Label count for RandomRBF.
    pub labels: usize,
    pub centroids: usize,
    pub sea_function: u8,
    pub sine_function: u8,
    pub drift_magnitude: f64,
    pub drifting_attributes: usize,
    /// SEA/SINE function used from `switch_at` onward.
    pub switch_function: Option<u8>,
    pub switch_at: Option<u64>,
    /// From this index on, labels are shifted by one (mod label count).
    pub shift_at: Option<u64>,
}

impl GeneratorConfig {
    pub fn new(family: GeneratorFamily, seed: u64) -> Self {
        GeneratorConfig {
            family,
            seed,
            n_points: 20_000,
            noise: 0.0,
            features: 10,
            labels: 2,
            centroids: 50,
            sea_function: 1,
            sine_function: 1,
            drift_magnitude: 0.0,
            drifting_attributes: 0,
            switch_function: None,
            switch_at: None,
            shift_at: None,
        }
    }

    pub fn feature_count(&self) -> usize {
        match self.family {
            GeneratorFamily::RandomRbf | GeneratorFamily::Hyperplane => self.features,
            GeneratorFamily::Sea => 3,
            GeneratorFamily::Sine => 2,
        }
    }

    pub fn label_count(&self) -> usize {
        match self.family {
            GeneratorFamily::RandomRbf => self.labels,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..1.0).contains(&self.noise) {
            return bad(format!("noise must lie in [0, 1), got {}", self.noise));
        }
        if self.feature_count() == 0 {
            return bad("generator needs at least one feature".into());
        }
        if self.label_count() < 2 {
            return bad("generator needs at least two labels".into());
        }
        if self.family == GeneratorFamily::RandomRbf && self.centroids == 0 {
            return bad("RandomRBF needs at least one centroid".into());
        }
        for f in [
            Some(self.sea_function),
            Some(self.sine_function),
            self.switch_function,
        ]
        .into_iter()
        .flatten()
        {
            if !(1..=4).contains(&f) {
                return bad(format!("generator function must be 1..=4, got {f}"));
            }
        }
        if self.switch_function.is_some() != self.switch_at.is_some() {
            return bad("a function switch needs both a function and a switch point".into());
        }
        if self.switch_function.is_some()
            && !matches!(self.family, GeneratorFamily::Sea | GeneratorFamily::Sine)
        {
            return bad("function switches apply to SEA and SINE only".into());
        }
        if self.family == GeneratorFamily::Hyperplane && self.drifting_attributes > self.features {
            return bad(format!(
                "{} drifting attributes exceed {} features",
                self.drifting_attributes, self.features
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Centroid {
    center: Vec<f64>,
    label: usize,
    radius: f64,
}

#[derive(Clone, Debug)]
enum Concept {
    RandomRbf {
        centroids: Vec<Centroid>,
        cumulative: Vec<f64>,
    },
    Sea,
    Sine,
    Hyperplane {
        weights: Vec<f64>,
        directions: Vec<f64>,
    },
}

/// A generated point together with its label before noise and shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedPoint {
    pub point: LabeledPoint,
    pub clean_label: usize,
}

/// Seeded stream; yields exactly `n_points` points.
#[derive(Clone, Debug)]
pub struct StreamGenerator {
    config: GeneratorConfig,
    rng: ChaCha8Rng,
    concept: Concept,
    emitted: u64,
}

impl StreamGenerator {
    pub fn new(config: GeneratorConfig) -> Result<Self> {
        config.validate()?;
        let mut model_rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let f = config.feature_count();
        let concept = match config.family {
            GeneratorFamily::RandomRbf => {
                let mut centroids = Vec::with_capacity(config.centroids);
                let mut cumulative = Vec::with_capacity(config.centroids);
                let mut total = 0.0;
                for _ in 0..config.centroids {
                    let center = (0..f).map(|_| model_rng.random::<f64>()).collect();
                    let label = model_rng.random_range(0..config.labels);
                    let radius = model_rng.random::<f64>();
                    total += model_rng.random::<f64>();
                    centroids.push(Centroid {
                        center,
                        label,
                        radius,
                    });
                    cumulative.push(total);
                }
                Concept::RandomRbf {
                    centroids,
                    cumulative,
                }
            }
            GeneratorFamily::Sea => Concept::Sea,
            GeneratorFamily::Sine => Concept::Sine,
            GeneratorFamily::Hyperplane => Concept::Hyperplane {
                weights: (0..f).map(|_| model_rng.random::<f64>()).collect(),
                directions: (0..f)
                    .map(|d| {
                        if d < config.drifting_attributes {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            },
        };
        Ok(StreamGenerator {
            config,
            rng,
            concept,
            emitted: 0,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn feature_count(&self) -> usize {
        self.config.feature_count()
    }

    pub fn label_count(&self) -> usize {
        self.config.label_count()
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Current hyperplane weights (empty for other families).
    pub fn hyperplane_weights(&self) -> &[f64] {
        match &self.concept {
            Concept::Hyperplane { weights, .. } => weights,
            _ => &[],
        }
    }

    fn active_function(&self, base: u8) -> u8 {
        match (self.config.switch_function, self.config.switch_at) {
            (Some(f), Some(at)) if self.emitted >= at => f,
            _ => base,
        }
    }

    /// Next point with its noise-free label, or `None` once exhausted.
    pub fn next_point(&mut self) -> Option<GeneratedPoint> {
        if self.emitted >= self.config.n_points {
            return None;
        }
        let sea_fn = self.active_function(self.config.sea_function);
        let sine_fn = self.active_function(self.config.sine_function);
        let rng = &mut self.rng;
        let (features, clean) = match &mut self.concept {
            Concept::RandomRbf {
                centroids,
                cumulative,
            } => {
                let target = rng.random::<f64>() * cumulative.last().copied().unwrap_or(0.0);
                let idx = cumulative
                    .iter()
                    .position(|&c| target < c)
                    .unwrap_or(centroids.len() - 1);
                let c = &centroids[idx];
                let mut dir: Vec<f64> = (0..c.center.len())
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let scale =
                    rng.sample::<f64, _>(StandardNormal) * c.radius / norm.max(f64::MIN_POSITIVE);
                for (v, &ctr) in dir.iter_mut().zip(&c.center) {
                    *v = ctr + *v * scale;
                }
                (dir, c.label)
            }
            Concept::Sea => {
                let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 10.0).collect();
                (x.clone(), sea_label(sea_fn, &x))
            }
            Concept::Sine => {
                let x: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
                (x.clone(), sine_label(sine_fn, &x))
            }
            Concept::Hyperplane {
                weights,
                directions,
            } => {
                let x: Vec<f64> = (0..weights.len()).map(|_| rng.random::<f64>()).collect();
                let dot: f64 = weights.iter().zip(&x).map(|(w, v)| w * v).sum();
                let total: f64 = weights.iter().sum();
                let label = usize::from(dot >= 0.5 * total);
                for d in 0..self.config.drifting_attributes {
                    weights[d] += self.config.drift_magnitude * directions[d];
                    if rng.random::<f64>() < DIRECTION_FLIP_PROBABILITY {
                        directions[d] = -directions[d];
                    }
                }
                (x, label)
            }
        };

        let labels = self.config.label_count();
        let mut label = clean;
        if self.config.noise > 0.0 && self.rng.random::<f64>() < self.config.noise {
            label = (clean + 1 + self.rng.random_range(0..labels - 1)) % labels;
        }
        if matches!(self.config.shift_at, Some(at) if self.emitted >= at) {
            label = (label + 1) % labels;
        }
        self.emitted += 1;
        Some(GeneratedPoint {
            point: LabeledPoint::new(features, label),
            clean_label: clean,
        })
    }
}

impl Iterator for StreamGenerator {
    type Item = LabeledPoint;

    fn next(&mut self) -> Option<LabeledPoint> {
        self.next_point().map(|g| g.point)
    }
}

/// SEA concept: label 1 iff `f1 + f2 <= theta`.
pub fn sea_label(function: u8, x: &[f64]) -> usize {
    let theta = SEA_THRESHOLDS[(function - 1) as usize];
    usize::from(x[0] + x[1] <= theta)
}

pub fn sine_label(function: u8, x: &[f64]) -> usize {
    let (a, b) = (x[0], x[1]);
    match function {
        1 => usize::from(b < a.sin()),
        2 => usize::from(b >= a.sin()),
        3 => usize::from(b < 0.5 + 0.3 * (3.0 * PI * a).sin()),
        _ => usize::from(b >= 0.5 + 0.3 * (3.0 * PI * a).sin()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sea_threshold_examples() {
        assert_eq!(sea_label(1, &[4.0, 5.0, 1.0]), 0);
        assert_eq!(sea_label(1, &[4.0, 4.0, 9.0]), 1);
        assert_eq!(sea_label(2, &[4.0, 5.0, 1.0]), 1);
        assert_eq!(sea_label(3, &[4.0, 3.5, 0.0]), 0);
        assert_eq!(sea_label(4, &[4.0, 5.5, 0.0]), 1);
    }

    #[test]
    fn sine_functions() {
        assert_eq!(sine_label(1, &[1.0, 0.1]), 1);
        assert_eq!(sine_label(2, &[1.0, 0.1]), 0);
        assert_eq!(sine_label(3, &[1.0 / 6.0, 0.7]), 1);
        assert_eq!(sine_label(4, &[1.0 / 6.0, 0.7]), 0);
    }

    #[test]
    fn emits_exactly_n_points() {
        for family in [
            GeneratorFamily::RandomRbf,
            GeneratorFamily::Sea,
            GeneratorFamily::Sine,
            GeneratorFamily::Hyperplane,
        ] {
            let mut cfg = GeneratorConfig::new(family, 5);
            cfg.n_points = 123;
            let generator = StreamGenerator::new(cfg.clone()).unwrap();
            let points: Vec<_> = generator.collect();
            assert_eq!(points.len(), 123);
            assert!(points
                .iter()
                .all(|p| p.features.len() == cfg.feature_count()));
            assert!(points.iter().all(|p| p.label < cfg.label_count()));
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let mut cfg = GeneratorConfig::new(GeneratorFamily::RandomRbf, 11);
        cfg.n_points = 500;
        let a: Vec<_> = StreamGenerator::new(cfg.clone()).unwrap().collect();
        let b: Vec<_> = StreamGenerator::new(cfg.clone()).unwrap().collect();
        assert_eq!(a, b);
        cfg.seed = 12;
        let c: Vec<_> = StreamGenerator::new(cfg).unwrap().collect();
        assert_ne!(a, c);
    }

    #[test]
    fn sea_points_follow_the_threshold() {
        let cfg = GeneratorConfig::new(GeneratorFamily::Sea, 3);
        for p in StreamGenerator::new(cfg).unwrap().take(2000) {
            assert_eq!(p.label, sea_label(1, &p.features));
            assert!(p.features.iter().all(|&v| (0.0..10.0).contains(&v)));
        }
    }

    #[test]
    fn noise_rate_matches() {
        for noise in [0.04, 0.08] {
            let mut cfg = GeneratorConfig::new(GeneratorFamily::Sea, 17);
            cfg.noise = noise;
            cfg.n_points = 100_000;
            let mut generator = StreamGenerator::new(cfg).unwrap();
            let mut flips = 0;
            while let Some(g) = generator.next_point() {
                if g.point.label != g.clean_label {
                    flips += 1;
                }
            }
            let rate = flips as f64 / 100_000.0;
            assert!((rate - noise).abs() < 0.005, "noise {noise}: rate {rate}");
        }
    }

    #[test]
    fn noise_picks_a_different_label_uniformly() {
        let mut cfg = GeneratorConfig::new(GeneratorFamily::RandomRbf, 2);
        cfg.labels = 3;
        cfg.noise = 0.5;
        cfg.n_points = 30_000;
        let mut generator = StreamGenerator::new(cfg).unwrap();
        let mut offsets = [0usize; 3];
        while let Some(g) = generator.next_point() {
            offsets[(g.point.label + 3 - g.clean_label) % 3] += 1;
        }
        let flipped = (offsets[1] + offsets[2]) as f64;
        assert!(
            (offsets[1] as f64 / flipped - 0.5).abs() < 0.02,
            "{offsets:?}"
        );
    }

    #[test]
    fn class_balance_envelope() {
        let families = [
            (GeneratorFamily::Sea, 1),
            (GeneratorFamily::Sea, 2),
            (GeneratorFamily::Sea, 4),
            (GeneratorFamily::Sine, 1),
            (GeneratorFamily::Sine, 3),
            (GeneratorFamily::Hyperplane, 1),
        ];
        // SEA function 3 (theta = 7) is the asymmetric one and sits near 0.25.
        for (family, function) in families {
            let mut cfg = GeneratorConfig::new(family, 99);
            cfg.sea_function = function;
            cfg.sine_function = function;
            let ones = StreamGenerator::new(cfg)
                .unwrap()
                .filter(|p| p.label == 1)
                .count();
            let frac = ones as f64 / 20_000.0;
            assert!((0.3..=0.7).contains(&frac), "{family} f{function}: {frac}");
        }
    }

    #[test]
    fn hyperplane_without_drift_keeps_its_weights() {
        let mut cfg = GeneratorConfig::new(GeneratorFamily::Hyperplane, 8);
        cfg.drifting_attributes = 4;
        cfg.drift_magnitude = 0.0;
        let mut generator = StreamGenerator::new(cfg).unwrap();
        let before = generator.hyperplane_weights().to_vec();
        let points: Vec<_> = generator.by_ref().collect();
        assert_eq!(generator.hyperplane_weights(), before.as_slice());
        let total: f64 = before.iter().sum();
        for p in points {
            let dot: f64 = before.iter().zip(&p.features).map(|(w, v)| w * v).sum();
            assert_eq!(p.label, usize::from(dot >= 0.5 * total));
        }
    }

    #[test]
    fn hyperplane_drift_moves_only_drifting_weights() {
        let mut cfg = GeneratorConfig::new(GeneratorFamily::Hyperplane, 8);
        cfg.drifting_attributes = 3;
        cfg.drift_magnitude = 0.001;
        let mut generator = StreamGenerator::new(cfg).unwrap();
        let before = generator.hyperplane_weights().to_vec();
        generator.by_ref().for_each(drop);
        let after = generator.hyperplane_weights();
        assert!((0..3).any(|d| after[d] != before[d]));
        assert_eq!(&after[3..], &before[3..]);
    }

    #[test]
    fn label_shift_only_permutes_labels() {
        let mut cfg = GeneratorConfig::new(GeneratorFamily::Sea, 4);
        cfg.n_points = 1000;
        let plain: Vec<_> = StreamGenerator::new(cfg.clone()).unwrap().collect();
        cfg.shift_at = Some(500);
        let shifted: Vec<_> = StreamGenerator::new(cfg).unwrap().collect();
        for (i, (a, b)) in plain.iter().zip(&shifted).enumerate() {
            assert_eq!(a.features, b.features);
            let expected = if i >= 500 { (a.label + 1) % 2 } else { a.label };
            assert_eq!(b.label, expected);
        }
    }

    #[test]
    fn function_switch_changes_the_concept() {
        let mut cfg = GeneratorConfig::new(GeneratorFamily::Sea, 4);
        cfg.n_points = 1000;
        cfg.sea_function = 2;
        cfg.switch_function = Some(3);
        cfg.switch_at = Some(600);
        for (i, p) in StreamGenerator::new(cfg).unwrap().enumerate() {
            let f = if i >= 600 { 3 } else { 2 };
            assert_eq!(p.label, sea_label(f, &p.features));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = GeneratorConfig::new(GeneratorFamily::Sea, 0);
        cfg.sea_function = 5;
        assert!(StreamGenerator::new(cfg).is_err());
        let mut cfg = GeneratorConfig::new(GeneratorFamily::Sea, 0);
        cfg.noise = 1.0;
        assert!(StreamGenerator::new(cfg).is_err());
        let mut cfg = GeneratorConfig::new(GeneratorFamily::Hyperplane, 0);
        cfg.drifting_attributes = 11;
        assert!(StreamGenerator::new(cfg).is_err());
        let mut cfg = GeneratorConfig::new(GeneratorFamily::RandomRbf, 0);
        cfg.switch_function = Some(2);
        cfg.switch_at = Some(10);
        assert!(StreamGenerator::new(cfg).is_err());
    }
}
