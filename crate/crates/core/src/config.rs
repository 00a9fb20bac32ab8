//! Flat `key = value` run configuration and the bundled presets.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::Method;
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::objective::SubRegularizer;
use crate::params::{DistanceNorm, ModelKind};
use crate::sampling::Strategy;
use crate::trainer::TrainConfig;

/// Every accepted key with a one-line description, in rendering order.
pub const KEYS: &[(&str, &str)] = &[
    ("preset", "named preset applied before the other keys"),
    (
        "dataset",
        "directory holding train.txt, valid.txt, test.txt",
    ),
    ("out", "output directory"),
    ("model", "transe | transd | distmult | complex | rotate"),
    ("norm", "l1 | l2 distance for transe and transd"),
    ("dim", "embedding dimension d"),
    ("batch_size", "positives per step b"),
    ("negatives", "negatives per positive n"),
    ("learning_rate", "Adam step size"),
    ("margin", "fixed margin gamma"),
    ("lambda1", "substitution down-weight and regularizer weight"),
    (
        "lambda1_reg",
        "separate regularizer weight, or auto to reuse lambda1",
    ),
    ("lambda2", "substitution loss weight"),
    (
        "use_self_adv",
        "true to weight negatives by softmax(-alpha f)",
    ),
    ("adv_temperature", "self-adversarial temperature alpha"),
    ("sigma", "Gaussian width in index units, or auto for 2|E|/k"),
    ("clusters", "number of k-means clusters k"),
    ("kmeans_iters", "maximum Lloyd iterations per refresh"),
    ("max_steps", "training steps"),
    ("reorder_interval", "steps between index refreshes"),
    ("strategy", "uniform | eans"),
    (
        "use_substitution",
        "true to train the substitution relation",
    ),
    ("regularizer", "abs-of-sum | sum-of-abs"),
    ("seed", "root random seed"),
    (
        "eval_interval",
        "steps between validation passes, 0 to disable",
    ),
    (
        "checkpoint_interval",
        "steps between periodic checkpoints, 0 to disable",
    ),
    (
        "eval_split",
        "valid | test | train for evaluate, sweep and ablation",
    ),
    ("n_values", "comma-separated negative counts for sweep"),
    (
        "methods",
        "comma-separated uniform, selfadv, gauss, eans, eans-selfadv",
    ),
    ("sweep_seeds", "comma-separated seeds for sweep"),
    ("jobs", "parallel sweep or ablation cells"),
    (
        "gap_batches",
        "mini-batches per checkpoint in the gap report",
    ),
    ("cdf_batches", "mini-batches for the weight CDF"),
    ("cdf_temperature", "softmax temperature for the weight CDF"),
    (
        "hist_batches",
        "mini-batches for the substitution histogram",
    ),
    ("hist_bins", "histogram bins"),
];

/// A full run description: training hyperparameters plus paths and the
/// options of the analysis subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub train: TrainConfig,
    pub eval_split: Split,
    pub n_values: Vec<usize>,
    pub methods: Vec<Method>,
    pub sweep_seeds: Vec<u64>,
    pub jobs: usize,
    pub gap_batches: usize,
    pub cdf_batches: usize,
    pub cdf_temperature: f64,
    pub hist_batches: usize,
    pub hist_bins: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            dataset: None,
            out: None,
            train: TrainConfig::default(),
            eval_split: Split::Test,
            n_values: vec![1, 4, 8, 16],
            methods: vec![Method::Eans, Method::SelfAdv],
            sweep_seeds: vec![0],
            jobs: 1,
            gap_batches: 1000,
            cdf_batches: 100,
            cdf_temperature: 1.0,
            hist_batches: 100,
            hist_bins: 50,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!(
            "`{key}` must list at least one value"
        )));
    }
    Ok(items)
}

fn parse_auto(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key; unknown keys are rejected by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "preset" => {
                let mut fresh = preset(value)?;
                fresh.dataset = self.dataset.take().or(fresh.dataset);
                fresh.out = self.out.take().or(fresh.out);
                *self = fresh;
            }
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "model" => t.model = value.parse()?,
            "norm" => t.norm = value.parse()?,
            "dim" => t.dim = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "negatives" => t.negatives = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "margin" => t.margin = parse(key, value)?,
            "lambda1" => t.lambda1 = parse(key, value)?,
            "lambda1_reg" => t.lambda1_reg = parse_auto(key, value)?,
            "lambda2" => t.lambda2 = parse(key, value)?,
            "use_self_adv" => t.use_self_adv = parse(key, value)?,
            "adv_temperature" => t.adv_temperature = parse(key, value)?,
            "sigma" => t.sigma = parse_auto(key, value)?,
            "clusters" => t.clusters = parse(key, value)?,
            "kmeans_iters" => t.kmeans_iters = parse(key, value)?,
            "max_steps" => t.max_steps = parse(key, value)?,
            "reorder_interval" => t.reorder_interval = parse(key, value)?,
            "strategy" => t.strategy = value.parse()?,
            "use_substitution" => t.use_substitution = parse(key, value)?,
            "regularizer" => t.regularizer = value.parse()?,
            "seed" => t.seed = parse(key, value)?,
            "eval_interval" => t.eval_interval = parse(key, value)?,
            "checkpoint_interval" => t.checkpoint_interval = parse(key, value)?,
            "eval_split" => self.eval_split = value.parse()?,
            "n_values" => self.n_values = parse_list(key, value)?,
            "methods" => self.methods = parse_list(key, value)?,
            "sweep_seeds" => self.sweep_seeds = parse_list(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "gap_batches" => self.gap_batches = parse(key, value)?,
            "cdf_batches" => self.cdf_batches = parse(key, value)?,
            "cdf_temperature" => self.cdf_temperature = parse(key, value)?,
            "hist_batches" => self.hist_batches = parse(key, value)?,
            "hist_bins" => self.hist_bins = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_str(text, origin)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_str(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |message: String| Error::Format {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected `key = value`, got `{line}`")))?;
            self.set(key.trim(), value.trim()).map_err(|e| {
                fail(
                    e.to_string()
                        .trim_start_matches("invalid configuration: ")
                        .to_owned(),
                )
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.jobs == 0 || self.hist_bins == 0 {
            return Err(Error::Config(
                "jobs and hist_bins must be at least 1".into(),
            ));
        }
        if self.n_values.contains(&0) {
            return Err(Error::Config("n_values must be positive".into()));
        }
        Ok(())
    }

    /// Renders every key with its resolved value; parsing the result gives
    /// back an equal config.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.preset {
            writeln!(out, "# preset {p} expanded below").unwrap();
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        if let Some(d) = path(&self.dataset) {
            writeln!(out, "dataset = {d}").unwrap();
        }
        if let Some(o) = path(&self.out) {
            writeln!(out, "out = {o}").unwrap();
        }
        for (k, v) in self.train.entries() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        let extra = [
            ("eval_split", self.eval_split.as_str().to_owned()),
            ("n_values", join(&self.n_values)),
            ("methods", join(&self.methods)),
            ("sweep_seeds", join(&self.sweep_seeds)),
            ("jobs", self.jobs.to_string()),
            ("gap_batches", self.gap_batches.to_string()),
            ("cdf_batches", self.cdf_batches.to_string()),
            ("cdf_temperature", self.cdf_temperature.to_string()),
            ("hist_batches", self.hist_batches.to_string()),
            ("hist_bins", self.hist_bins.to_string()),
        ];
        for (k, v) in extra {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}

/// Names of every bundled preset.
pub fn preset_names() -> Vec<String> {
    let mut names = Vec::new();
    for ds in ["fb15k237", "wn18rr", "toy"] {
        for m in ModelKind::ALL {
            names.push(format!("{ds}-{m}"));
        }
    }
    names
}

/// Builds a preset by name: `fb15k237-<model>`, `wn18rr-<model>` or
/// `toy-<model>`.
pub fn preset(name: &str) -> Result<RunConfig> {
    let unknown = || {
        Error::Config(format!(
            "unknown preset `{name}` (known: {})",
            preset_names().join(", ")
        ))
    };
    let (ds, model) = name.split_once('-').ok_or_else(unknown)?;
    let model: ModelKind = model.parse().map_err(|_| unknown())?;
    let distance = model.is_distance_model();
    let base = TrainConfig {
        model,
        norm: DistanceNorm::L1,
        strategy: Strategy::Eans,
        use_substitution: true,
        use_self_adv: false,
        regularizer: SubRegularizer::AbsOfSum,
        clusters: 100,
        reorder_interval: 1000,
        sigma: None,
        ..TrainConfig::default()
    };
    let train = match ds {
        "fb15k237" => TrainConfig {
            dim: 1000,
            batch_size: 1024,
            negatives: 256,
            learning_rate: if distance { 5e-5 } else { 0.001 },
            margin: if distance { 9.0 } else { 200.0 },
            adv_temperature: 1.0,
            lambda1: if distance { 0.1 } else { 0.05 },
            lambda2: 1.0,
            max_steps: 100_000,
            eval_interval: 10_000,
            ..base
        },
        "wn18rr" => TrainConfig {
            dim: 500,
            batch_size: 512,
            negatives: 1024,
            learning_rate: if distance { 5e-5 } else { 0.002 },
            margin: if distance { 6.0 } else { 200.0 },
            adv_temperature: if distance { 0.5 } else { 1.0 },
            lambda1: 0.01,
            lambda2: 0.05,
            max_steps: 80_000,
            eval_interval: 10_000,
            ..base
        },
        "toy" => TrainConfig {
            dim: 100,
            batch_size: 128,
            negatives: 16,
            learning_rate: 0.001,
            margin: if distance { 6.0 } else { 200.0 },
            adv_temperature: 1.0,
            lambda1: 0.001,
            lambda2: 1.0,
            clusters: 16,
            reorder_interval: 100,
            max_steps: 5000,
            eval_interval: 1000,
            ..base
        },
        _ => return Err(unknown()),
    };
    let mut cfg = RunConfig {
        preset: Some(name.to_owned()),
        train,
        ..RunConfig::default()
    };
    if ds == "toy" {
        cfg.dataset = Some(PathBuf::from("data/toy"));
        cfg.gap_batches = 1000;
        cfg.sweep_seeds = vec![0, 1, 2];
    }
    Ok(cfg)
}

/// Markdown table of [`KEYS`].
pub fn keys_markdown() -> String {
    let mut out = String::from("| key | meaning |\n|---|---|\n");
    for (k, v) in KEYS {
        writeln!(out, "| `{k}` | {} |", v.replace('|', "\\|")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err =
            RunConfig::parse_str("dim = 10\nsigma_scale = 2\n", Path::new("x.cfg")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sigma_scale") && msg.contains(":2:"), "{msg}");
    }

    #[test]
    fn comments_and_whitespace() {
        let cfg = RunConfig::parse_str(
            "# header\n  dim =  32  # trailing\n\nstrategy=uniform\n",
            Path::new("x.cfg"),
        )
        .unwrap();
        assert_eq!(cfg.train.dim, 32);
        assert_eq!(cfg.train.strategy, Strategy::Uniform);
    }

    #[test]
    fn render_round_trips() {
        for name in preset_names() {
            let mut cfg = preset(&name).unwrap();
            cfg.out = Some("runs/x".into());
            let back = RunConfig::parse_str(&cfg.render(), Path::new("r.cfg")).unwrap();
            assert_eq!(back.train, cfg.train, "{name}");
            assert_eq!(
                back.render(),
                cfg.render()
                    .lines()
                    .filter(|l| !l.starts_with('#'))
                    .map(|l| format!("{l}\n"))
                    .collect::<String>()
            );
        }
    }

    #[test]
    fn preset_then_override() {
        let cfg = RunConfig::parse_str("preset = toy-transe\nseed = 9\n", Path::new("x")).unwrap();
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.train.dim, 100);
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = preset("toy-transe").unwrap();
        let rendered = cfg.render();
        for (k, _) in KEYS {
            if *k == "preset" || *k == "dataset" || *k == "out" {
                continue;
            }
            assert!(rendered.contains(&format!("{k} = ")), "{k}");
        }
        let mut c = RunConfig::default();
        assert!(c.set("lambda1_reg", "auto").is_ok());
        assert!(c.set("methods", "eans,selfadv").is_ok());
        assert!(c.set("methods", "").is_err());
    }
}
