//! Diagnostics over trained parameters: score gaps between positives and
//! negatives, the CDF of softmaxed negative weights, substitution-score
//! histograms and small-`n` sweeps.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{KgDataset, Scope, Split, Triple};
use crate::eans_index::{refresh, VirtualIndexMap};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, Protocol};
use crate::params::{ModelParams, Real};
use crate::rng::{stream, Stream};
use crate::sampling::{
    build_negative_batch, corruption_side, self_adv_weights, NegativeBatch, SamplerSpec, Strategy,
};
use crate::scoring::{score, substitution_score};
use crate::trainer::{train, TrainConfig};

/// How fresh negatives are drawn when probing a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSampler {
    pub strategy: Strategy,
    pub batch_size: usize,
    pub negatives: usize,
    pub clusters: usize,
    pub kmeans_iters: usize,
    pub sigma: Option<f64>,
    pub seed: u64,
}

impl ProbeSampler {
    /// Mirrors the sampling side of a training config.
    pub fn from_config(cfg: &TrainConfig) -> Self {
        Self {
            strategy: cfg.strategy,
            batch_size: cfg.batch_size,
            negatives: cfg.negatives,
            clusters: cfg.clusters,
            kmeans_iters: cfg.kmeans_iters,
            sigma: cfg.sigma,
            seed: cfg.seed,
        }
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        Self {
            strategy,
            ..self.clone()
        }
    }
}

/// Draws batches the way training does, from the analysis stream.
struct BatchSource<'a> {
    dataset: &'a KgDataset,
    sampler: &'a ProbeSampler,
    map: Option<VirtualIndexMap>,
    sigma: f64,
    rng: ChaCha8Rng,
    drawn: u64,
}

impl<'a> BatchSource<'a> {
    fn new<T: Real>(
        params: &ModelParams<T>,
        dataset: &'a KgDataset,
        sampler: &'a ProbeSampler,
    ) -> Result<Self> {
        let n = dataset.num_entities();
        let map = match sampler.strategy {
            Strategy::Eans => Some(refresh(
                params,
                sampler.clusters,
                sampler.seed,
                sampler.kmeans_iters,
            )?),
            Strategy::Uniform => None,
        };
        Ok(Self {
            dataset,
            sampler,
            map,
            sigma: sampler
                .sigma
                .unwrap_or(2.0 * n as f64 / sampler.clusters.max(1) as f64),
            rng: stream(sampler.seed, Stream::Analysis),
            drawn: 0,
        })
    }

    fn next(&mut self) -> Result<(Vec<Triple>, NegativeBatch)> {
        let train = &self.dataset.train;
        let positives: Vec<Triple> = (0..self.sampler.batch_size)
            .map(|_| train[self.rng.random_range(0..train.len())])
            .collect();
        let spec = SamplerSpec {
            strategy: self.sampler.strategy,
            n: self.sampler.negatives,
            map: self.map.as_ref(),
            sigma: self.sigma,
        };
        let batch = build_negative_batch(
            &positives,
            corruption_side(self.drawn),
            &spec,
            self.dataset.num_entities(),
            &self.dataset.filter,
            &mut self.rng,
        )?;
        self.drawn += 1;
        Ok((positives, batch))
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean positive and negative dissimilarity at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGapRow {
    pub step: u64,
    pub strategy: Strategy,
    pub batches: usize,
    pub mean_pos: f64,
    pub mean_neg: f64,
    /// Standard errors over per-batch means.
    pub se_pos: f64,
    pub se_neg: f64,
}

impl ScoreGapRow {
    pub const CSV_HEADER: &'static str =
        "step,strategy,batches,mean_f_pos,mean_f_neg,neg_mean_f_pos,neg_mean_f_neg,se_pos,se_neg";

    pub fn gap(&self) -> f64 {
        self.mean_neg - self.mean_pos
    }

    /// Combined standard error of the gap.
    pub fn gap_se(&self) -> f64 {
        self.se_pos.hypot(self.se_neg)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.step,
            self.strategy,
            self.batches,
            self.mean_pos,
            self.mean_neg,
            -self.mean_pos,
            -self.mean_neg,
            self.se_pos,
            self.se_neg
        )
    }
}

/// One row per checkpoint per sampler, each over `batches` fresh batches.
pub fn score_gap_report<T: Real>(
    checkpoints: &[(u64, &ModelParams<T>)],
    dataset: &KgDataset,
    samplers: &[ProbeSampler],
    batches: usize,
) -> Result<Vec<ScoreGapRow>> {
    if batches == 0 {
        return Err(Error::Config("gap report needs at least one batch".into()));
    }
    let mut rows = Vec::new();
    for &(step, params) in checkpoints {
        for sampler in samplers {
            let mut source = BatchSource::new(params, dataset, sampler)?;
            let mut pos_means = Vec::with_capacity(batches);
            let mut neg_means = Vec::with_capacity(batches);
            for _ in 0..batches {
                let (positives, batch) = source.next()?;
                let mut pos = 0.0;
                let mut neg = 0.0;
                for (i, p) in positives.iter().enumerate() {
                    pos += score(params, p);
                    for j in 0..batch.n {
                        neg += score(params, &batch.corrupted(p, i, j));
                    }
                }
                pos_means.push(pos / positives.len() as f64);
                neg_means.push(neg / (positives.len() * batch.n) as f64);
            }
            let (mean_pos, se_pos) = mean_and_se(&pos_means);
            let (mean_neg, se_neg) = mean_and_se(&neg_means);
            rows.push(ScoreGapRow {
                step,
                strategy: sampler.strategy,
                batches,
                mean_pos,
                mean_neg,
                se_pos,
                se_neg,
            });
        }
    }
    Ok(rows)
}

/// Cumulative softmax weight of the top-`rank` negatives, `rank = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightCdf {
    pub cumulative: Vec<f64>,
    pub batches: usize,
    pub batch_size: usize,
    pub temperature: f64,
}

impl WeightCdf {
    pub const CSV_HEADER: &'static str = "rank,cumulative_weight";

    /// Cumulative weight of the `k` heaviest negatives.
    pub fn top(&self, k: usize) -> f64 {
        self.cumulative[k.clamp(1, self.cumulative.len()) - 1]
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.cumulative
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{},{c:.9}", i + 1))
            .collect()
    }
}

/// Softmax of `−α·f` over each positive's negatives, sorted descending per
/// positive, averaged over all positives of `batches` batches, then summed
/// cumulatively.
pub fn neg_weight_cdf<T: Real>(
    params: &ModelParams<T>,
    dataset: &KgDataset,
    sampler: &ProbeSampler,
    temperature: f64,
    batches: usize,
) -> Result<WeightCdf> {
    if batches == 0 {
        return Err(Error::Config("cdf needs at least one batch".into()));
    }
    let n = sampler.negatives;
    let mut source = BatchSource::new(params, dataset, sampler)?;
    let mut acc = vec![0.0; n];
    let mut rows = 0usize;
    for _ in 0..batches {
        let (positives, batch) = source.next()?;
        for (i, p) in positives.iter().enumerate() {
            let f: Vec<f64> = (0..n)
                .map(|j| score(params, &batch.corrupted(p, i, j)))
                .collect();
            let mut w = self_adv_weights(&f, temperature);
            w.sort_by(|a, b| b.total_cmp(a));
            for (a, x) in acc.iter_mut().zip(&w) {
                *a += x;
            }
            rows += 1;
        }
    }
    let mut running = 0.0;
    let cumulative = acc
        .iter()
        .map(|a| {
            running += a / rows as f64;
            running
        })
        .collect();
    Ok(WeightCdf {
        cumulative,
        batches,
        batch_size: sampler.batch_size,
        temperature,
    })
}

/// Where a sampled negative sits relative to the known facts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeGroup {
    TrueNegative,
    TrainFalseNegative,
    EvalFalseNegative,
}

impl NegativeGroup {
    pub const ALL: [NegativeGroup; 3] = [
        NegativeGroup::TrueNegative,
        NegativeGroup::TrainFalseNegative,
        NegativeGroup::EvalFalseNegative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NegativeGroup::TrueNegative => "true_negative",
            NegativeGroup::TrainFalseNegative => "train_false_negative",
            NegativeGroup::EvalFalseNegative => "eval_false_negative",
        }
    }

    pub fn classify(dataset: &KgDataset, t: &Triple) -> Self {
        if dataset.filter.contains(t, Scope::TrainOnly) {
            NegativeGroup::TrainFalseNegative
        } else if dataset.filter.contains(t, Scope::AllSplits) {
            NegativeGroup::EvalFalseNegative
        } else {
            NegativeGroup::TrueNegative
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub counts: Vec<usize>,
}

/// Raw substitution scores `f(e, r_sub, e')` binned per group over one
/// shared range.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionHistogram {
    pub edges: Vec<f64>,
    pub groups: [GroupStats; 3],
}

impl SubstitutionHistogram {
    pub const CSV_HEADER: &'static str =
        "bin_lo,bin_hi,true_negative,train_false_negative,eval_false_negative";

    pub fn group(&self, g: NegativeGroup) -> &GroupStats {
        &self.groups[g as usize]
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// `(mean_a − mean_b) / sqrt(sd_a²/n_a + sd_b²/n_b)`.
    pub fn separation(&self, a: NegativeGroup, b: NegativeGroup) -> f64 {
        let (a, b) = (self.group(a), self.group(b));
        let se = (a.sd * a.sd / a.count as f64 + b.sd * b.sd / b.count as f64).sqrt();
        (a.mean - b.mean) / se
    }

    pub fn csv_rows(&self) -> Vec<String> {
        (0..self.edges.len() - 1)
            .map(|i| {
                format!(
                    "{:.6},{:.6},{},{},{}",
                    self.edges[i],
                    self.edges[i + 1],
                    self.groups[0].counts[i],
                    self.groups[1].counts[i],
                    self.groups[2].counts[i]
                )
            })
            .collect()
    }

    pub fn summary_lines(&self) -> Vec<String> {
        NegativeGroup::ALL
            .iter()
            .map(|&g| {
                let s = self.group(g);
                format!(
                    "# {} count={} mean={:.6} sd={:.6}",
                    g.as_str(),
                    s.count,
                    s.mean,
                    s.sd
                )
            })
            .collect()
    }
}

/// Samples `batches` batches of negatives and bins their substitution
/// scores into `bins` equal-width bins over the pooled range.
pub fn substitution_histogram<T: Real>(
    params: &ModelParams<T>,
    dataset: &KgDataset,
    sampler: &ProbeSampler,
    batches: usize,
    bins: usize,
) -> Result<SubstitutionHistogram> {
    if !params.substitution_enabled {
        return Err(Error::Config(
            "substitution scores were never trained for this checkpoint (substitution = false)"
                .into(),
        ));
    }
    if bins == 0 || batches == 0 {
        return Err(Error::Config(
            "histogram needs at least one bin and one batch".into(),
        ));
    }
    let mut source = BatchSource::new(params, dataset, sampler)?;
    let mut values: [Vec<f64>; 3] = Default::default();
    for _ in 0..batches {
        let (positives, batch) = source.next()?;
        for (i, p) in positives.iter().enumerate() {
            let anchor = batch.side.entity(p);
            for j in 0..batch.n {
                let group = NegativeGroup::classify(dataset, &batch.corrupted(p, i, j));
                let e = batch.entities_for(i)[j];
                values[group as usize].push(substitution_score(params, anchor, e));
            }
        }
    }
    let all = values.iter().flatten();
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let stats = |v: &[f64]| {
        let mut counts = vec![0usize; bins];
        for &x in v {
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        GroupStats {
            count: v.len(),
            mean,
            sd,
            counts,
        }
    };
    Ok(SubstitutionHistogram {
        edges,
        groups: [stats(&values[0]), stats(&values[1]), stats(&values[2])],
    })
}

/// A named sampling method as compared in the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Uniform,
    SelfAdv,
    Gauss,
    Eans,
    EansSelfAdv,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::SelfAdv => "selfadv",
            Method::Gauss => "gauss",
            Method::Eans => "eans",
            Method::EansSelfAdv => "eans-selfadv",
        }
    }

    /// `base` with the sampler, substitution and weighting switches set.
    pub fn apply(self, base: &TrainConfig) -> TrainConfig {
        let (strategy, subs, adv) = match self {
            Method::Uniform => (Strategy::Uniform, false, false),
            Method::SelfAdv => (Strategy::Uniform, false, true),
            Method::Gauss => (Strategy::Eans, false, false),
            Method::Eans => (Strategy::Eans, true, false),
            Method::EansSelfAdv => (Strategy::Eans, true, true),
        };
        TrainConfig {
            strategy,
            use_substitution: subs,
            use_self_adv: adv,
            ..base.clone()
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Method::Uniform),
            "selfadv" => Ok(Method::SelfAdv),
            "gauss" => Ok(Method::Gauss),
            "eans" => Ok(Method::Eans),
            "eans-selfadv" => Ok(Method::EansSelfAdv),
            _ => Err(Error::Config(format!(
                "unknown method `{s}` (expected uniform, selfadv, gauss, eans or eans-selfadv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub negatives: usize,
    pub method: Method,
    pub seed: u64,
    pub digest: String,
    pub mrr: f64,
    pub hits10: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "n,method,seed,digest,mrr,hits10";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6}",
            self.negatives, self.method, self.seed, self.digest, self.mrr, self.hits10
        )
    }
}

/// Runs `work` over `0..count` on up to `jobs` threads; results keep index
/// order and the first error wins.
pub fn run_jobs<R: Send>(
    count: usize,
    jobs: usize,
    work: impl Fn(usize) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, count.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let r = work(i);
                slots.lock().expect("job slot lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("job slot lock")
        .into_iter()
        .map(|r| r.unwrap_or_else(|| Err(Error::Internal("job did not run".into()))))
        .collect()
}

/// Trains one run per `(n, method, seed)` cell and evaluates it on `split`.
///
/// Cells are ordered by `n`, then method, then seed.
pub fn run_sweep(
    dataset: &KgDataset,
    base: &TrainConfig,
    n_values: &[usize],
    methods: &[Method],
    seeds: &[u64],
    split: Split,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    let mut cells = Vec::new();
    for &n in n_values {
        for &m in methods {
            for &seed in seeds {
                cells.push((n, m, seed));
            }
        }
    }
    run_jobs(cells.len(), jobs, |i| {
        let (n, method, seed) = cells[i];
        let cfg = TrainConfig {
            negatives: n,
            seed,
            ..method.apply(base)
        };
        let (params, _) = train(dataset, &cfg)?;
        let m = evaluate(
            &params,
            dataset.split(split),
            &dataset.filter,
            Protocol::Filtered,
        );
        Ok(SweepRow {
            negatives: n,
            method,
            seed,
            digest: cfg.resolved(dataset.num_entities()).digest(),
            mrr: m.mrr(),
            hits10: m.hit(10),
        })
    })
}

/// Writes a CSV whose first lines are `#` comments naming the config digest
/// and any extra notes.
pub fn write_csv(
    path: &Path,
    digest: &str,
    notes: &[String],
    header: &str,
    rows: &[String],
) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut out = format!("# config_digest = {digest}\n");
    for n in notes {
        if !n.starts_with('#') {
            out.push_str("# ");
        }
        out.push_str(n);
        out.push('\n');
    }
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
