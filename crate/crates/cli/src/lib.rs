//! Experiment runner: builds a forest from flags, streams a generator or a
//! CSV file through prequential evaluation, and writes `point_index,f1` rows
//! plus a `key=value` manifest that can replay the run.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;

use mondrian_core::config::parse_budget;
use mondrian_core::datagen::{GeneratorConfig, GeneratorFamily, StreamGenerator};
use mondrian_core::evaluation::{run_prequential, DEFAULT_EVAL_FADING};
use mondrian_core::ingest::{parse_csv_stream, window_features};
use mondrian_core::{
    ForestConfig, ForestState, LabeledPoint, SplitMethod, Strategy, TrimMethod, TrimThreshold,
};

#[derive(Parser, Clone, Debug, PartialEq)]
#[command(
    name = "mondrian",
    about = "Prequential runs of a memory-bounded Mondrian forest",
    version
)]
pub struct Args {
    /// Replay a run from its manifest (other flags except --out are ignored).
    #[arg(long, value_name = "MANIFEST")]
    pub replay: Option<PathBuf>,

    /// CSV input: feature columns then an integer label column.
    #[arg(long, conflicts_with = "generator")]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = ["randomrbf", "sea", "sine", "hyperplane"])]
    pub generator: Option<String>,

    /// Generated stream length.
    #[arg(long, default_value_t = 20_000)]
    pub points: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 50)]
    pub centroids: usize,
    /// Feature count for randomrbf and hyperplane.
    #[arg(long, default_value_t = 10)]
    pub features: usize,
    /// Label count: randomrbf classes, or the label count of a CSV input
    /// (scanned from the file when omitted).
    #[arg(long)]
    pub labels: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub sea_function: u8,
    #[arg(long, default_value_t = 1)]
    pub sine_function: u8,
    #[arg(long, default_value_t = 0.0)]
    pub drift_magnitude: f64,
    #[arg(long, default_value_t = 0)]
    pub drifting_attributes: usize,
    /// SEA/SINE function used from --switch-at onward.
    #[arg(long, requires = "switch_at")]
    pub switch_function: Option<u8>,
    #[arg(long, requires = "switch_function")]
    pub switch_at: Option<u64>,
    /// Shift every label by one from this point on.
    #[arg(long)]
    pub shift_at: Option<u64>,
    /// Generator seed (defaults to --seed).
    #[arg(long)]
    pub stream_seed: Option<u64>,

    /// Raw samples per window for windowed feature extraction.
    #[arg(long)]
    pub window: Option<usize>,
    /// Comma-separated raw columns to window (default: all).
    #[arg(long, requires = "window", value_delimiter = ',')]
    pub axes: Option<Vec<usize>>,
    #[arg(long)]
    pub drop_label_0: bool,

    #[arg(long, default_value_t = 10)]
    pub trees: usize,
    #[arg(long, default_value_t = 600_000)]
    pub memory_bytes: usize,
    /// Mondrian lifetime, a positive number or `inf`.
    #[arg(long, default_value = "inf")]
    pub budget: String,
    #[arg(long, default_value_t = 1.0)]
    pub base_count: f64,
    #[arg(long, default_value_t = 0.1)]
    pub discount: f64,
    #[arg(long, default_value = "extend-node")]
    pub strategy: String,
    #[arg(long, default_value = "none")]
    pub trim: String,
    #[arg(long, default_value = "none")]
    pub split: String,
    #[arg(long, default_value = "auto")]
    pub trim_threshold: String,
    #[arg(long, default_value_t = 0.99)]
    pub leaf_fading: f64,
    #[arg(long, default_value_t = DEFAULT_EVAL_FADING)]
    pub eval_fading: f64,
    #[arg(long, default_value_t = 100)]
    pub report_every: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Results CSV (default: run.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path (default: <out>.manifest).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Comma-separated memory budgets; writes one CSV per budget.
    #[arg(long, value_delimiter = ',')]
    pub sweep_memory: Option<Vec<usize>>,
}

/// What one finished run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub out: PathBuf,
    pub manifest: PathBuf,
    pub points: u64,
    pub final_f1: f64,
    pub node_capacity: usize,
    pub nodes_used: usize,
}

type PointStream = Box<dyn Iterator<Item = mondrian_core::Result<LabeledPoint>>>;

impl Args {
    fn generator_config(&self, family: GeneratorFamily) -> GeneratorConfig {
        let mut g = GeneratorConfig::new(family, self.stream_seed.unwrap_or(self.seed));
        g.n_points = self.points;
        g.noise = self.noise;
        g.features = self.features;
        g.labels = self.labels.unwrap_or(2);
        g.centroids = self.centroids;
        g.sea_function = self.sea_function;
        g.sine_function = self.sine_function;
        g.drift_magnitude = self.drift_magnitude;
        g.drifting_attributes = self.drifting_attributes;
        g.switch_function = self.switch_function;
        g.switch_at = self.switch_at;
        g.shift_at = self.shift_at;
        g
    }

    /// Fresh point stream for this run.
    fn open_stream(&self) -> Result<PointStream> {
        let base: PointStream = match (&self.input, &self.generator) {
            (Some(path), None) => {
                let file =
                    File::open(path).with_context(|| format!("opening {}", path.display()))?;
                Box::new(parse_csv_stream(BufReader::new(file)))
            }
            (None, Some(name)) => {
                let family: GeneratorFamily = name.parse()?;
                let generator = StreamGenerator::new(self.generator_config(family))?;
                Box::new(generator.map(Ok))
            }
            _ => bail!("exactly one of --input or --generator is required"),
        };
        let windowed: PointStream = match self.window {
            Some(len) => Box::new(window_features(base, len, self.axes.clone())?),
            None => base,
        };
        Ok(if self.drop_label_0 {
            Box::new(windowed.filter(|p| !matches!(p, Ok(p) if p.label == 0)))
        } else {
            windowed
        })
    }

    /// Feature and label counts of the stream.
    fn stream_shape(&self) -> Result<(usize, usize)> {
        if let Some(name) = &self.generator {
            if self.window.is_none() {
                let g = self.generator_config(name.parse()?);
                return Ok((g.feature_count(), g.label_count()));
            }
        }
        let mut features = None;
        let mut max_label = 0;
        for point in self.open_stream()? {
            let point = point?;
            features.get_or_insert(point.features.len());
            max_label = max_label.max(point.label);
            if self.labels.is_some() {
                break;
            }
        }
        let features = features.context("input stream is empty")?;
        Ok((features, self.labels.unwrap_or(max_label + 1)))
    }

    pub fn forest_config(&self, features: usize, labels: usize) -> Result<ForestConfig> {
        let mut cfg = ForestConfig::new(features, labels);
        cfg.tree_count = self.trees;
        cfg.memory_budget_bytes = self.memory_bytes;
        cfg.budget = parse_budget(&self.budget)?;
        cfg.base_count = self.base_count;
        cfg.discount_factor = self.discount;
        cfg.strategy = self.strategy.parse::<Strategy>()?;
        cfg.trim_method = self.trim.parse::<TrimMethod>()?;
        cfg.split_method = self.split.parse::<SplitMethod>()?;
        cfg.trim_threshold = self.trim_threshold.parse::<TrimThreshold>()?;
        cfg.leaf_fading = self.leaf_fading;
        cfg.seed = self.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn out_path(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("run.csv"))
    }

    fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| {
            let mut s = self.out_path().into_os_string();
            s.push(".manifest");
            PathBuf::from(s)
        })
    }

    /// Flag/value pairs that reproduce this run (sweep and replay excluded).
    pub fn manifest_entries(&self) -> Vec<(&'static str, String)> {
        let mut e: Vec<(&'static str, String)> = Vec::new();
        let path = |p: &Path| p.display().to_string();
        if let Some(p) = &self.input {
            e.push(("input", path(p)));
        }
        if let Some(g) = &self.generator {
            e.push(("generator", g.clone()));
        }
        e.push(("points", self.points.to_string()));
        e.push(("noise", self.noise.to_string()));
        e.push(("centroids", self.centroids.to_string()));
        e.push(("features", self.features.to_string()));
        if let Some(l) = self.labels {
            e.push(("labels", l.to_string()));
        }
        e.push(("sea-function", self.sea_function.to_string()));
        e.push(("sine-function", self.sine_function.to_string()));
        e.push(("drift-magnitude", self.drift_magnitude.to_string()));
        e.push(("drifting-attributes", self.drifting_attributes.to_string()));
        if let Some(f) = self.switch_function {
            e.push(("switch-function", f.to_string()));
        }
        if let Some(at) = self.switch_at {
            e.push(("switch-at", at.to_string()));
        }
        if let Some(at) = self.shift_at {
            e.push(("shift-at", at.to_string()));
        }
        e.push((
            "stream-seed",
            self.stream_seed.unwrap_or(self.seed).to_string(),
        ));
        if let Some(w) = self.window {
            e.push(("window", w.to_string()));
        }
        if let Some(axes) = &self.axes {
            let s: Vec<String> = axes.iter().map(usize::to_string).collect();
            e.push(("axes", s.join(",")));
        }
        if self.drop_label_0 {
            e.push(("drop-label-0", "true".into()));
        }
        e.push(("trees", self.trees.to_string()));
        e.push(("memory-bytes", self.memory_bytes.to_string()));
        e.push(("budget", self.budget.clone()));
        e.push(("base-count", self.base_count.to_string()));
        e.push(("discount", self.discount.to_string()));
        e.push(("strategy", self.strategy.clone()));
        e.push(("trim", self.trim.clone()));
        e.push(("split", self.split.clone()));
        e.push(("trim-threshold", self.trim_threshold.clone()));
        e.push(("leaf-fading", self.leaf_fading.to_string()));
        e.push(("eval-fading", self.eval_fading.to_string()));
        e.push(("report-every", self.report_every.to_string()));
        e.push(("seed", self.seed.to_string()));
        e.push(("out", path(&self.out_path())));
        e
    }
}

/// Reads a manifest back into arguments. Lines starting with `#` are comments.
pub fn load_manifest(path: &Path) -> Result<Args> {
    let file = File::open(path).with_context(|| format!("opening manifest {}", path.display()))?;
    let mut argv = vec!["mondrian".to_string()];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("manifest line {}: expected key=value", i + 1))?;
        if key == "drop-label-0" {
            if value == "true" {
                argv.push("--drop-label-0".into());
            }
            continue;
        }
        argv.push(format!("--{key}"));
        argv.push(value.to_string());
    }
    Ok(Args::try_parse_from(argv)?)
}

fn write_manifest(args: &Args, cfg: &ForestConfig, path: &Path) -> Result<()> {
    let mut out =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(out, "# mondrian run manifest")?;
    writeln!(out, "# feature_count={}", cfg.feature_count)?;
    writeln!(out, "# label_count={}", cfg.label_count)?;
    writeln!(out, "# node_size_bytes={}", cfg.node_size_bytes())?;
    writeln!(out, "# node_capacity={}", cfg.node_capacity())?;
    for (k, v) in args.manifest_entries() {
        writeln!(out, "{k}={v}")?;
    }
    out.flush()?;
    Ok(())
}

fn run_single(args: &Args) -> Result<RunSummary> {
    let (features, labels) = args.stream_shape()?;
    let cfg = args.forest_config(features, labels)?;
    let manifest = args.manifest_path();
    write_manifest(args, &cfg, &manifest)?;

    let mut forest = ForestState::new(cfg.clone())?;
    let report = run_prequential(
        args.open_stream()?,
        &mut forest,
        args.eval_fading,
        args.report_every,
        false,
    )?;

    let out_path = args.out_path();
    let mut out = BufWriter::new(
        File::create(&out_path).with_context(|| format!("creating {}", out_path.display()))?,
    );
    writeln!(out, "point_index,f1")?;
    for (index, f1) in &report.series {
        writeln!(out, "{index},{f1}")?;
    }
    out.flush()?;
    Ok(RunSummary {
        out: out_path,
        manifest,
        points: report.points,
        final_f1: report.final_f1,
        node_capacity: cfg.node_capacity(),
        nodes_used: forest.node_count(),
    })
}

fn sweep_path(out: &Path, budget: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    let ext = out
        .extension()
        .map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.mem{budget}.{ext}"))
}

/// Runs the experiment described by `args` (one run, a memory sweep, or a
/// replayed manifest).
pub fn run_experiment(args: &Args) -> Result<Vec<RunSummary>> {
    if let Some(path) = &args.replay {
        let mut replayed = load_manifest(path)?;
        if args.out.is_some() {
            replayed.out = args.out.clone();
        }
        replayed.manifest = args.manifest.clone();
        return run_experiment(&replayed);
    }
    match &args.sweep_memory {
        None => Ok(vec![run_single(args)?]),
        Some(budgets) => budgets
            .iter()
            .map(|&budget| {
                let mut one = args.clone();
                one.sweep_memory = None;
                one.memory_bytes = budget;
                one.out = Some(sweep_path(&args.out_path(), budget));
                one.manifest = None;
                run_single(&one)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(extra: &[&str]) -> Args {
        let mut argv = vec!["mondrian"];
        argv.extend_from_slice(extra);
        Args::try_parse_from(argv).unwrap()
    }

    #[test]
    fn unknown_flags_rejected() {
        assert!(Args::try_parse_from(["mondrian", "--generator", "sea", "--tress", "3"]).is_err());
        assert!(Args::try_parse_from(["mondrian", "--generator", "moa"]).is_err());
    }

    #[test]
    fn config_from_flags() {
        let args = parse(&[
            "--generator",
            "sea",
            "--strategy",
            "ghost",
            "--trim",
            "fading",
            "--split",
            "avg",
            "--budget",
            "3.5",
            "--trim-threshold",
            "20",
        ]);
        let cfg = args.forest_config(3, 2).unwrap();
        assert_eq!(cfg.strategy, Strategy::Ghost);
        assert_eq!(cfg.trim_method, TrimMethod::Fading);
        assert_eq!(cfg.split_method, SplitMethod::SplitAvg);
        assert_eq!(cfg.budget, 3.5);
        assert_eq!(cfg.trim_threshold, TrimThreshold::Fixed(20.0));
        let bad = parse(&["--generator", "sea", "--strategy", "extend"]);
        assert!(bad.forest_config(3, 2).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        let args = parse(&[
            "--generator",
            "sea",
            "--points",
            "300",
            "--switch-function",
            "3",
            "--switch-at",
            "150",
            "--drop-label-0",
            "--out",
            out.to_str().unwrap(),
        ]);
        let summary = run_experiment(&args).unwrap();
        let replayed = load_manifest(&summary[0].manifest).unwrap();
        assert_eq!(replayed.manifest_entries(), args.manifest_entries());
    }

    #[test]
    fn sweep_names() {
        assert_eq!(
            sweep_path(Path::new("/tmp/run.csv"), 600000),
            PathBuf::from("/tmp/run.mem600000.csv")
        );
    }
}
