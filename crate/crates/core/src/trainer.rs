//! The training loop: batching, sampling, loss, Adam, periodic re-ordering,
//! validation, checkpoints and the training log.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::dataset::{KgDataset, Split, Triple};
use crate::eans_index::{refresh_with_clusters, VirtualIndexMap};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, Metrics, Protocol};
use crate::objective::{total_loss, LossConfig, SubRegularizer};
use crate::params::{
    adam_step, load_checkpoint, save_checkpoint, AdamConfig, Checkpoint, DistanceNorm, ModelKind,
    ModelParams, OptimizerState,
};
use crate::rng::{stream, stream_at, Stream};
use crate::sampling::{build_negative_batch, corruption_side, SamplerSpec, Strategy};

/// Every hyperparameter of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub norm: DistanceNorm,
    pub dim: usize,
    pub batch_size: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub margin: f64,
    /// λ₁, used both inside the KG loss and as the substitution regularizer.
    pub lambda1: f64,
    /// Separate regularizer weight; `None` reuses `lambda1`.
    pub lambda1_reg: Option<f64>,
    pub lambda2: f64,
    pub use_self_adv: bool,
    pub adv_temperature: f64,
    /// Gaussian width in virtual-index units; `None` means `2|E|/k`.
    pub sigma: Option<f64>,
    pub clusters: usize,
    pub kmeans_iters: usize,
    pub max_steps: u64,
    pub reorder_interval: u64,
    pub strategy: Strategy,
    pub use_substitution: bool,
    pub regularizer: SubRegularizer,
    pub seed: u64,
    /// Validation cadence in steps; 0 disables validation.
    pub eval_interval: u64,
    /// Periodic checkpoint cadence in steps; 0 keeps only best and final.
    pub checkpoint_interval: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::TransE,
            norm: DistanceNorm::L1,
            dim: 100,
            batch_size: 512,
            negatives: 64,
            learning_rate: 1e-3,
            margin: 9.0,
            lambda1: 0.1,
            lambda1_reg: None,
            lambda2: 1.0,
            use_self_adv: false,
            adv_temperature: 1.0,
            sigma: None,
            clusters: 100,
            kmeans_iters: 30,
            max_steps: 100_000,
            reorder_interval: 1000,
            strategy: Strategy::Eans,
            use_substitution: true,
            regularizer: SubRegularizer::AbsOfSum,
            seed: 0,
            eval_interval: 10_000,
            checkpoint_interval: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("batch_size", self.batch_size),
            ("negatives", self.negatives),
            ("kmeans_iters", self.kmeans_iters),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.strategy == Strategy::Eans {
            if self.clusters == 0 {
                return Err(Error::Config("clusters must be at least 1 for eans".into()));
            }
            if self.reorder_interval == 0 {
                return Err(Error::Config("reorder_interval must be at least 1".into()));
            }
            if let Some(s) = self.sigma {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Config(format!("sigma must be positive, got {s}")));
                }
            }
        }
        self.loss_config().validate()
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            margin: self.margin,
            lambda_down: self.lambda1,
            lambda_reg: self.lambda1_reg.unwrap_or(self.lambda1),
            lambda_sub: self.lambda2,
            adv_temperature: self.use_self_adv.then_some(self.adv_temperature),
            use_substitution: self.use_substitution,
            regularizer: self.regularizer,
        }
    }

    /// σ for a dataset with `num_entities` entities.
    pub fn resolved_sigma(&self, num_entities: usize) -> f64 {
        self.sigma
            .unwrap_or(2.0 * num_entities as f64 / self.clusters.max(1) as f64)
    }

    /// Fills dataset-dependent defaults.
    pub fn resolved(&self, num_entities: usize) -> Self {
        let mut cfg = self.clone();
        if cfg.strategy == Strategy::Eans {
            cfg.sigma = Some(cfg.resolved_sigma(num_entities));
        }
        cfg
    }

    /// Canonical `key = value` rendering, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_owned(), |x| x.to_string());
        vec![
            ("model", self.model.to_string()),
            ("norm", self.norm.as_str().to_owned()),
            ("dim", self.dim.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("negatives", self.negatives.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("margin", self.margin.to_string()),
            ("lambda1", self.lambda1.to_string()),
            ("lambda1_reg", opt(self.lambda1_reg)),
            ("lambda2", self.lambda2.to_string()),
            ("use_self_adv", self.use_self_adv.to_string()),
            ("adv_temperature", self.adv_temperature.to_string()),
            ("sigma", opt(self.sigma)),
            ("clusters", self.clusters.to_string()),
            ("kmeans_iters", self.kmeans_iters.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("reorder_interval", self.reorder_interval.to_string()),
            ("strategy", self.strategy.to_string()),
            ("use_substitution", self.use_substitution.to_string()),
            ("regularizer", self.regularizer.as_str().to_owned()),
            ("seed", self.seed.to_string()),
            ("eval_interval", self.eval_interval.to_string()),
            ("checkpoint_interval", self.checkpoint_interval.to_string()),
        ]
    }

    /// Hash of every key that shapes the parameter trajectory.
    ///
    /// Run-length and reporting keys are left out so a resumed run with a
    /// larger `max_steps` still matches its checkpoint.
    pub fn digest(&self) -> String {
        const SKIP: [&str; 3] = ["max_steps", "eval_interval", "checkpoint_interval"];
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            if !SKIP.contains(&k) {
                h.update(format!("{k}={v}\n"));
            }
        }
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One training step's record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    pub step: u64,
    pub loss: f64,
    pub kg_part: f64,
    pub sub_part: f64,
    pub mean_f_pos: f64,
    pub mean_f_neg: f64,
    pub wall_ms: f64,
}

impl TrainRecord {
    pub const CSV_HEADER: &'static str = "step,loss,kg_part,sub_part,mean_f_pos,mean_f_neg,wall_ms";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:.1}",
            self.step,
            self.loss,
            self.kg_part,
            self.sub_part,
            self.mean_f_pos,
            self.mean_f_neg,
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRecord {
    pub step: u64,
    pub mrr: f64,
    pub hits10: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefreshRecord {
    pub step: u64,
    pub inertia: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
    pub validation: Vec<ValidationRecord>,
    pub refreshes: Vec<RefreshRecord>,
}

impl TrainLog {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }
}

/// Where a run writes its checkpoints and logs.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub root: PathBuf,
}

impl RunOutput {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn checkpoint(&self, name: &str) -> PathBuf {
        self.checkpoints().join(name)
    }

    pub fn step_checkpoint(&self, step: u64) -> PathBuf {
        self.checkpoint(&format!("step-{step:08}"))
    }

    pub fn logs(&self) -> PathBuf {
        self.root.join("logs")
    }

    pub fn train_log(&self) -> PathBuf {
        self.logs().join("train.csv")
    }

    pub fn validation_log(&self) -> PathBuf {
        self.logs().join("validation.csv")
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn analysis(&self) -> PathBuf {
        self.root.join("analysis")
    }

    pub fn resolved_config(&self) -> PathBuf {
        self.root.join("resolved.cfg")
    }
}

fn refresh_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Sinks {
    out: RunOutput,
    train: BufWriter<File>,
    validation: BufWriter<File>,
}

fn open_append(path: &Path, header: &str) -> Result<BufWriter<File>> {
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    if fresh {
        writeln!(w, "{header}").map_err(|e| Error::io(path, e))?;
    }
    Ok(w)
}

/// A resumable training run over one dataset.
pub struct Trainer<'a> {
    dataset: &'a KgDataset,
    cfg: TrainConfig,
    loss_cfg: LossConfig,
    sigma: f64,
    digest: String,
    params: ModelParams<f32>,
    state: OptimizerState<f32>,
    batching: ChaCha8Rng,
    sampling: ChaCha8Rng,
    map: Option<VirtualIndexMap>,
    best: Option<ValidationRecord>,
    log: TrainLog,
    sinks: Option<Sinks>,
    started: Instant,
}

impl<'a> Trainer<'a> {
    /// Fresh parameters; for the entity-aware strategy the first map is
    /// built before step 1.
    pub fn new(dataset: &'a KgDataset, cfg: &TrainConfig) -> Result<Self> {
        let cfg = Self::check(dataset, cfg)?;
        let init_seed: u64 = stream(cfg.seed, Stream::Init).random();
        let mut params = ModelParams::<f32>::init(
            cfg.model,
            dataset.num_entities(),
            dataset.num_relations(),
            cfg.dim,
            cfg.margin,
            init_seed,
        )?
        .with_norm(cfg.norm);
        params.substitution_enabled = cfg.use_substitution;
        let state = OptimizerState::new(&params, AdamConfig::with_lr(cfg.learning_rate));
        let mut t = Self::assemble(dataset, cfg, params, state);
        t.batching = stream(t.cfg.seed, Stream::Batching);
        t.sampling = stream(t.cfg.seed, Stream::Sampling);
        if t.cfg.strategy == Strategy::Eans {
            t.refresh(0)?;
        }
        Ok(t)
    }

    /// Continues a run from a checkpoint written by [`Trainer::save`].
    pub fn resume(dataset: &'a KgDataset, cfg: &TrainConfig, ckpt: Checkpoint) -> Result<Self> {
        let cfg = Self::check(dataset, cfg)?;
        ckpt.ensure_compatible(
            Some(cfg.model),
            dataset.num_entities(),
            dataset.num_relations(),
        )?;
        if ckpt.config_digest != cfg.digest() {
            return Err(Error::Mismatch(format!(
                "config digest mismatch: checkpoint {} vs run {}",
                ckpt.config_digest,
                cfg.digest()
            )));
        }
        let word_pos = |key: &str| -> Result<u128> {
            ckpt.extra(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Checkpoint(format!("missing resume entry `{key}`")))
        };
        let batching = stream_at(cfg.seed, Stream::Batching, word_pos("rng.batching")?);
        let sampling = stream_at(cfg.seed, Stream::Sampling, word_pos("rng.sampling")?);
        let map = match ckpt.extra("map") {
            Some(v) => {
                let ids: Vec<usize> = v
                    .split_whitespace()
                    .map(|x| {
                        x.parse()
                            .map_err(|_| Error::Checkpoint("bad `map` entry".into()))
                    })
                    .collect::<Result<_>>()?;
                Some(VirtualIndexMap::from_virt_to_real(ids)?)
            }
            None if cfg.strategy == Strategy::Eans => {
                return Err(Error::Checkpoint("missing resume entry `map`".into()))
            }
            None => None,
        };
        let best = match (
            ckpt.extra("best.step"),
            ckpt.extra("best.mrr"),
            ckpt.extra("best.hits10"),
        ) {
            (Some(s), Some(m), Some(h)) => Some(ValidationRecord {
                step: s
                    .parse()
                    .map_err(|_| Error::Checkpoint("bad `best.step`".into()))?,
                mrr: m
                    .parse()
                    .map_err(|_| Error::Checkpoint("bad `best.mrr`".into()))?,
                hits10: h
                    .parse()
                    .map_err(|_| Error::Checkpoint("bad `best.hits10`".into()))?,
            }),
            _ => None,
        };
        let mut state = ckpt.state;
        state.config = AdamConfig::with_lr(cfg.learning_rate);
        let mut t = Self::assemble(dataset, cfg, ckpt.params, state);
        t.batching = batching;
        t.sampling = sampling;
        t.map = map;
        t.best = best;
        Ok(t)
    }

    pub fn resume_from_dir(dataset: &'a KgDataset, cfg: &TrainConfig, dir: &Path) -> Result<Self> {
        Self::resume(dataset, cfg, load_checkpoint(dir)?)
    }

    fn check(dataset: &KgDataset, cfg: &TrainConfig) -> Result<TrainConfig> {
        cfg.validate()?;
        let n = dataset.num_entities();
        if n < 2 {
            return Err(Error::Config(format!(
                "training needs at least 2 entities, have {n}"
            )));
        }
        if dataset.train.is_empty() {
            return Err(Error::EmptySplit("train".into()));
        }
        if cfg.strategy == Strategy::Eans && cfg.clusters > n {
            return Err(Error::Config(format!(
                "clusters ({}) exceeds entity count ({n})",
                cfg.clusters
            )));
        }
        Ok(cfg.resolved(n))
    }

    fn assemble(
        dataset: &'a KgDataset,
        cfg: TrainConfig,
        params: ModelParams<f32>,
        state: OptimizerState<f32>,
    ) -> Self {
        Self {
            dataset,
            loss_cfg: cfg.loss_config(),
            sigma: cfg.resolved_sigma(dataset.num_entities()),
            digest: cfg.digest(),
            cfg,
            params,
            state,
            batching: stream(0, Stream::Batching),
            sampling: stream(0, Stream::Sampling),
            map: None,
            best: None,
            log: TrainLog::default(),
            sinks: None,
            started: Instant::now(),
        }
    }

    /// Streams the training and validation logs to `out` and writes
    /// checkpoints there.
    pub fn with_output(mut self, out: RunOutput) -> Result<Self> {
        fs::create_dir_all(out.logs()).map_err(|e| Error::io(out.logs(), e))?;
        fs::create_dir_all(out.checkpoints()).map_err(|e| Error::io(out.checkpoints(), e))?;
        let train = open_append(&out.train_log(), TrainRecord::CSV_HEADER)?;
        let validation = open_append(&out.validation_log(), "step,mrr,hits10")?;
        self.sinks = Some(Sinks {
            out,
            train,
            validation,
        });
        Ok(self)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn step(&self) -> u64 {
        self.state.step
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }

    pub fn map(&self) -> Option<&VirtualIndexMap> {
        self.map.as_ref()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    pub fn best(&self) -> Option<&ValidationRecord> {
        self.best.as_ref()
    }

    fn refresh(&mut self, step: u64) -> Result<()> {
        let index = step / self.cfg.reorder_interval;
        let (map, clusters) = refresh_with_clusters(
            &self.params,
            self.cfg.clusters,
            refresh_seed(self.cfg.seed, index),
            self.cfg.kmeans_iters,
        )?;
        self.map = Some(map);
        self.log.refreshes.push(RefreshRecord {
            step,
            inertia: clusters.inertia,
            iterations: clusters.iterations,
        });
        Ok(())
    }

    fn draw_positives(&mut self) -> Vec<Triple> {
        let train = &self.dataset.train;
        (0..self.cfg.batch_size)
            .map(|_| train[self.batching.random_range(0..train.len())])
            .collect()
    }

    /// One optimization step, including any re-ordering it triggers.
    pub fn step_once(&mut self) -> Result<TrainRecord> {
        let step = self.state.step + 1;
        let positives = self.draw_positives();
        let side = corruption_side(step - 1);
        let spec = SamplerSpec {
            strategy: self.cfg.strategy,
            n: self.cfg.negatives,
            map: self.map.as_ref(),
            sigma: self.sigma,
        };
        let batch = build_negative_batch(
            &positives,
            side,
            &spec,
            self.dataset.num_entities(),
            &self.dataset.filter,
            &mut self.sampling,
        )?;
        let out =
            total_loss(&self.params, &positives, &batch, &self.loss_cfg).map_err(|e| match e {
                Error::NonFiniteLoss { what, .. } => Error::NonFiniteLoss { what, step },
                other => other,
            })?;
        adam_step(&mut self.state, &mut self.params, &out.grads)?;
        let record = TrainRecord {
            step,
            loss: out.total,
            kg_part: out.kg_part,
            sub_part: out.sub_part,
            mean_f_pos: out.mean_pos_score,
            mean_f_neg: out.mean_neg_score,
            wall_ms: self.started.elapsed().as_secs_f64() * 1e3,
        };
        self.log.records.push(record);
        if let Some(s) = &mut self.sinks {
            writeln!(s.train, "{}", record.csv_row())
                .map_err(|e| Error::io(s.out.train_log(), e))?;
        }
        if self.cfg.strategy == Strategy::Eans && step.is_multiple_of(self.cfg.reorder_interval) {
            self.refresh(step)?;
        }
        if self.cfg.eval_interval > 0 && step.is_multiple_of(self.cfg.eval_interval) {
            self.validate(step)?;
        }
        if self.cfg.checkpoint_interval > 0 && step.is_multiple_of(self.cfg.checkpoint_interval) {
            if let Some(out) = self.sinks.as_ref().map(|s| s.out.step_checkpoint(step)) {
                self.save(&out)?;
            }
        }
        Ok(record)
    }

    fn validate(&mut self, step: u64) -> Result<()> {
        let valid = self.dataset.split(Split::Valid);
        if valid.is_empty() {
            return Ok(());
        }
        let m = evaluate(
            &self.params,
            valid,
            &self.dataset.filter,
            Protocol::Filtered,
        );
        let record = ValidationRecord {
            step,
            mrr: m.mrr(),
            hits10: m.hit(10),
        };
        if let Some(s) = &mut self.sinks {
            writeln!(s.validation, "{},{},{}", step, record.mrr, record.hits10)
                .map_err(|e| Error::io(s.out.validation_log(), e))?;
        }
        let improved = self.best.as_ref().is_none_or(|b| record.mrr > b.mrr);
        self.log.validation.push(record.clone());
        if improved {
            self.best = Some(record);
            if let Some(out) = self.sinks.as_ref().map(|s| s.out.checkpoint("best")) {
                self.save(&out)?;
            }
        }
        Ok(())
    }

    /// Runs until `max_steps` or until `stop_at`, whichever comes first.
    pub fn run_until(&mut self, stop_at: u64) -> Result<()> {
        let target = stop_at.min(self.cfg.max_steps);
        while self.state.step < target {
            self.step_once()?;
        }
        self.flush()
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_until(self.cfg.max_steps)
    }

    fn flush(&mut self) -> Result<()> {
        if let Some(s) = &mut self.sinks {
            s.train
                .flush()
                .map_err(|e| Error::io(s.out.train_log(), e))?;
            s.validation
                .flush()
                .map_err(|e| Error::io(s.out.validation_log(), e))?;
        }
        Ok(())
    }

    /// Writes a checkpoint holding everything needed for a bitwise resume.
    pub fn save(&mut self, dir: &Path) -> Result<()> {
        self.flush()?;
        let mut extra = vec![
            (
                "rng.batching".to_owned(),
                self.batching.get_word_pos().to_string(),
            ),
            (
                "rng.sampling".to_owned(),
                self.sampling.get_word_pos().to_string(),
            ),
        ];
        if let Some(map) = &self.map {
            let ids: Vec<String> = map.virt_to_real().iter().map(usize::to_string).collect();
            extra.push(("map".to_owned(), ids.join(" ")));
        }
        if let Some(b) = &self.best {
            extra.push(("best.step".to_owned(), b.step.to_string()));
            extra.push(("best.mrr".to_owned(), b.mrr.to_string()));
            extra.push(("best.hits10".to_owned(), b.hits10.to_string()));
        }
        save_checkpoint(
            &self.params,
            &self.state,
            self.cfg.seed,
            &self.digest,
            &extra,
            dir,
        )
    }

    /// Saves the final checkpoint when writing to an output directory.
    pub fn finish(mut self) -> Result<(ModelParams<f32>, TrainLog)> {
        if let Some(out) = self.sinks.as_ref().map(|s| s.out.checkpoint("final")) {
            self.save(&out)?;
        }
        self.flush()?;
        Ok((self.params, self.log))
    }
}

/// Trains from scratch for `cfg.max_steps` steps.
pub fn train(dataset: &KgDataset, cfg: &TrainConfig) -> Result<(ModelParams<f32>, TrainLog)> {
    let mut t = Trainer::new(dataset, cfg)?;
    t.run()?;
    t.finish()
}

/// As [`train`], writing logs and checkpoints under `out`.
pub fn train_to(
    dataset: &KgDataset,
    cfg: &TrainConfig,
    out: &RunOutput,
) -> Result<(ModelParams<f32>, TrainLog)> {
    let mut t = Trainer::new(dataset, cfg)?.with_output(out.clone())?;
    t.run()?;
    t.finish()
}

/// One cell of the 2×2 ablation grid.
#[derive(Debug, Clone)]
pub struct AblationRow {
    pub gauss: bool,
    pub subs: bool,
    pub config: TrainConfig,
    pub metrics: Metrics,
}

impl AblationRow {
    pub const CSV_HEADER: &'static str = "gauss,subs,digest,mrr,hits10";

    pub fn csv_row(&self) -> String {
        let on = |b: bool| if b { "on" } else { "off" };
        format!(
            "{},{},{},{:.6},{:.6}",
            on(self.gauss),
            on(self.subs),
            self.config.digest(),
            self.metrics.mrr(),
            self.metrics.hit(10)
        )
    }
}

/// `base` with the Gaussian sampler and substitution loss toggled.
pub fn ablation_config(base: &TrainConfig, gauss: bool, subs: bool) -> TrainConfig {
    let mut cfg = base.clone();
    cfg.strategy = if gauss {
        Strategy::Eans
    } else {
        Strategy::Uniform
    };
    cfg.use_substitution = subs;
    cfg
}

/// Cell order of the grid: (off, off), (on, off), (off, on), (on, on).
pub const ABLATION_CELLS: [(bool, bool); 4] =
    [(false, false), (true, false), (false, true), (true, true)];

/// Trains every cell and evaluates it on `split` with the filtered protocol.
pub fn run_ablation(
    dataset: &KgDataset,
    base: &TrainConfig,
    split: Split,
) -> Result<Vec<AblationRow>> {
    ABLATION_CELLS
        .iter()
        .map(|&(gauss, subs)| {
            let cfg = ablation_config(base, gauss, subs);
            let (params, _) = train(dataset, &cfg)?;
            let metrics = evaluate(
                &params,
                dataset.split(split),
                &dataset.filter,
                Protocol::Filtered,
            );
            Ok(AblationRow {
                gauss,
                subs,
                config: cfg.resolved(dataset.num_entities()),
                metrics,
            })
        })
        .collect()
}
