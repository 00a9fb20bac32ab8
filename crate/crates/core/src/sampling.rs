//! Negative batches (uniform or entity-aware), false-negative labels and
//! self-adversarial weights.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::dataset::{FilterIndex, Scope, Side, Triple};
use crate::eans_index::{sample_eans, VirtualIndexMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Uniform,
    Eans,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Eans => "eans",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "eans" => Ok(Strategy::Eans),
            _ => Err(Error::Config(format!(
                "unknown strategy `{s}` (expected uniform or eans)"
            ))),
        }
    }
}

/// Even batches corrupt heads, odd batches corrupt tails.
pub fn corruption_side(batch_index: u64) -> Side {
    if batch_index.is_multiple_of(2) {
        Side::Head
    } else {
        Side::Tail
    }
}

/// Uniform over `[0, n) \ {pos}`.
pub fn sample_uniform(num_entities: usize, pos: usize, rng: &mut impl Rng) -> Result<usize> {
    if num_entities < 2 {
        return Err(Error::Config(format!(
            "uniform sampling needs at least 2 entities, have {num_entities}"
        )));
    }
    let mut e = rng.random_range(0..num_entities - 1);
    if e >= pos {
        e += 1;
    }
    Ok(e)
}

/// `n` corruptions per positive, all on the same side.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeBatch {
    pub side: Side,
    pub strategy: Strategy,
    pub n: usize,
    /// Row-major `positives × n` corrupted entity indices.
    pub entities: Vec<usize>,
    /// `true` where the corrupted triple is a training fact.
    pub labels: Vec<bool>,
}

impl NegativeBatch {
    pub fn entities_for(&self, i: usize) -> &[usize] {
        &self.entities[i * self.n..(i + 1) * self.n]
    }

    pub fn labels_for(&self, i: usize) -> &[bool] {
        &self.labels[i * self.n..(i + 1) * self.n]
    }

    pub fn corrupted(&self, positive: &Triple, i: usize, j: usize) -> Triple {
        self.side.replace(positive, self.entities[i * self.n + j])
    }
}

/// How negatives are drawn for one batch.
#[derive(Debug, Clone, Copy)]
pub struct SamplerSpec<'a> {
    pub strategy: Strategy,
    pub n: usize,
    pub map: Option<&'a VirtualIndexMap>,
    pub sigma: f64,
}

/// Draws `spec.n` negatives for every positive and labels each one by
/// training-split membership. False negatives are kept, not filtered.
pub fn build_negative_batch(
    positives: &[Triple],
    side: Side,
    spec: &SamplerSpec<'_>,
    num_entities: usize,
    filter: &FilterIndex,
    rng: &mut impl Rng,
) -> Result<NegativeBatch> {
    if spec.n == 0 {
        return Err(Error::Config("negative count must be at least 1".into()));
    }
    if num_entities < 2 {
        return Err(Error::Config(format!(
            "negative sampling needs at least 2 entities, have {num_entities}"
        )));
    }
    let map = match spec.strategy {
        Strategy::Eans => {
            let map = spec
                .map
                .ok_or_else(|| Error::Config("entity-aware sampling needs an index map".into()))?;
            if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
                return Err(Error::Config(format!(
                    "sigma must be positive, got {}",
                    spec.sigma
                )));
            }
            Some(map)
        }
        Strategy::Uniform => None,
    };
    let total = positives.len() * spec.n;
    let mut entities = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for pos in positives {
        let anchor = side.entity(pos);
        for _ in 0..spec.n {
            let e = match map {
                Some(map) => sample_eans(map, anchor, spec.sigma, rng),
                None => sample_uniform(num_entities, anchor, rng)?,
            };
            entities.push(e);
            labels.push(filter.contains(&side.replace(pos, e), Scope::TrainOnly));
        }
    }
    Ok(NegativeBatch {
        side,
        strategy: spec.strategy,
        n: spec.n,
        entities,
        labels,
    })
}

/// Softmax of `−α·f` over one positive's negatives, max-subtracted.
///
/// Lower dissimilarity (a more plausible negative) gets more weight. The
/// weights are constants for the gradient.
pub fn self_adv_weights(neg_scores: &[f64], alpha: f64) -> Vec<f64> {
    let logits: Vec<f64> = neg_scores.iter().map(|f| -alpha * f).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
