//! Training objective: the logsigmoid KG loss with false-negative masking
//! and substitution down-weighting, the substitution loss with its
//! regularizer, and their sum with gradients routed back to embedding rows.
//!
//! For one positive with negatives `i = 1..n`:
//!
//! ```text
//! L_kg  = −logσ(γ − f_pos) − Σᵢ wᵢ (1 − yᵢ) logσ(f_negᵢ − λ₁ f_subᵢ − γ)
//! L_sub = −(λ₂ / n) Σᵢ yᵢ logσ(f_subᵢ) + λ₁ |Σᵢ f_subᵢ|
//! ```
//!
//! with `wᵢ = 1/n` or self-adversarial weights. A batch loss is the mean over
//! its positives.

use rayon::prelude::*;

use crate::dataset::Triple;
use crate::error::{Error, Result};
use crate::params::{ModelParams, Real, RowGrads};
use crate::sampling::{self_adv_weights, NegativeBatch};
use crate::scoring::{score, score_grad_into};

/// How the substitution regularizer aggregates one positive's scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubRegularizer {
    /// `|Σᵢ f_subᵢ|`
    #[default]
    AbsOfSum,
    /// `Σᵢ |f_subᵢ|`
    SumOfAbs,
}

impl SubRegularizer {
    pub fn as_str(self) -> &'static str {
        match self {
            SubRegularizer::AbsOfSum => "abs-of-sum",
            SubRegularizer::SumOfAbs => "sum-of-abs",
        }
    }
}

impl std::str::FromStr for SubRegularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs-of-sum" => Ok(SubRegularizer::AbsOfSum),
            "sum-of-abs" => Ok(SubRegularizer::SumOfAbs),
            _ => Err(Error::Config(format!(
                "unknown regularizer `{s}` (expected abs-of-sum or sum-of-abs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub margin: f64,
    /// λ₁ as the down-weight of substitution scores inside the KG loss.
    pub lambda_down: f64,
    /// λ₁ as the regularizer weight of the substitution loss.
    pub lambda_reg: f64,
    /// λ₂
    pub lambda_sub: f64,
    /// Self-adversarial temperature; `None` averages negatives uniformly.
    pub adv_temperature: Option<f64>,
    pub use_substitution: bool,
    pub regularizer: SubRegularizer,
}

impl LossConfig {
    pub fn plain(margin: f64) -> Self {
        Self {
            margin,
            lambda_down: 0.0,
            lambda_reg: 0.0,
            lambda_sub: 0.0,
            adv_temperature: None,
            use_substitution: false,
            regularizer: SubRegularizer::AbsOfSum,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.margin.is_nan() || self.margin <= 0.0 {
            return Err(Error::Config(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if self.lambda_down < 0.0 || self.lambda_reg < 0.0 || self.lambda_sub < 0.0 {
            return Err(Error::Config("lambda weights must be non-negative".into()));
        }
        if let Some(a) = self.adv_temperature {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("bad adversarial temperature {a}")));
            }
        }
        Ok(())
    }
}

/// `ln(1 + eˣ)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `logσ(x) = −softplus(−x)`
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// A loss value with its partial derivatives w.r.t. the scores it read.
#[derive(Debug, Clone, PartialEq)]
pub struct KgTerms {
    pub value: f64,
    pub d_pos: f64,
    pub d_neg: Vec<f64>,
    pub d_sub: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubTerms {
    pub value: f64,
    pub d_sub: Vec<f64>,
}

fn check_finite(what: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteLoss {
            what: what.into(),
            step: 0,
        })
    }
}

/// KG loss of one positive. With substitution off the `f_subs` are ignored
/// (treated as zero) but the labels still mask.
pub fn kg_loss(
    f_pos: f64,
    f_negs: &[f64],
    f_subs: &[f64],
    labels: &[bool],
    weights: &[f64],
    cfg: &LossConfig,
) -> Result<KgTerms> {
    check_finite("positive score", &[f_pos])?;
    check_finite("negative score", f_negs)?;
    check_finite("weight", weights)?;
    if cfg.use_substitution {
        check_finite("substitution score", f_subs)?;
    }
    let n = f_negs.len();
    let gamma = cfg.margin;
    let mut value = softplus(f_pos - gamma);
    let d_pos = sigmoid(f_pos - gamma);
    let mut d_neg = vec![0.0; n];
    let mut d_sub = vec![0.0; n];
    for i in 0..n {
        if labels[i] {
            continue;
        }
        let sub = if cfg.use_substitution {
            cfg.lambda_down * f_subs[i]
        } else {
            0.0
        };
        let x = f_negs[i] - sub - gamma;
        value += weights[i] * softplus(-x);
        let s = weights[i] * sigmoid(-x);
        d_neg[i] = -s;
        if cfg.use_substitution {
            d_sub[i] = cfg.lambda_down * s;
        }
    }
    Ok(KgTerms {
        value,
        d_pos,
        d_neg,
        d_sub,
    })
}

/// Substitution loss of one positive's negatives.
pub fn sub_loss(f_subs: &[f64], labels: &[bool], cfg: &LossConfig) -> Result<SubTerms> {
    check_finite("substitution score", f_subs)?;
    let n = f_subs.len() as f64;
    let scale = cfg.lambda_sub / n;
    let mut value = 0.0;
    let mut d_sub = vec![0.0; f_subs.len()];
    for (i, (&f, &y)) in f_subs.iter().zip(labels).enumerate() {
        if y {
            value += scale * softplus(-f);
            d_sub[i] -= scale * sigmoid(-f);
        }
    }
    match cfg.regularizer {
        SubRegularizer::AbsOfSum => {
            let total: f64 = f_subs.iter().sum();
            value += cfg.lambda_reg * total.abs();
            let g = cfg.lambda_reg * signum0(total);
            d_sub.iter_mut().for_each(|d| *d += g);
        }
        SubRegularizer::SumOfAbs => {
            for (d, &f) in d_sub.iter_mut().zip(f_subs) {
                value += cfg.lambda_reg * f.abs();
                *d += cfg.lambda_reg * signum0(f);
            }
        }
    }
    Ok(SubTerms { value, d_sub })
}

#[inline]
fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct LossBreakdown {
    pub total: f64,
    pub kg_part: f64,
    pub sub_part: f64,
    pub mean_pos_score: f64,
    pub mean_neg_score: f64,
    pub grads: RowGrads,
}

struct PositiveEval {
    f_pos: f64,
    f_negs: Vec<f64>,
    kg: KgTerms,
    sub: Option<SubTerms>,
}

/// Negative weights of every positive: self-adversarial when a temperature
/// is set, uniform otherwise.
pub fn batch_weights<T: Real>(
    params: &ModelParams<T>,
    positives: &[Triple],
    batch: &NegativeBatch,
    cfg: &LossConfig,
) -> Vec<Vec<f64>> {
    positives
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let f: Vec<f64> = (0..batch.n)
                .map(|j| score(params, &batch.corrupted(p, i, j)))
                .collect();
            weights_for(&f, cfg)
        })
        .collect()
}

fn weights_for(f_negs: &[f64], cfg: &LossConfig) -> Vec<f64> {
    match cfg.adv_temperature {
        Some(alpha) => self_adv_weights(f_negs, alpha),
        None => vec![1.0 / f_negs.len() as f64; f_negs.len()],
    }
}

/// Batch loss and gradients.
pub fn total_loss<T: Real>(
    params: &ModelParams<T>,
    positives: &[Triple],
    batch: &NegativeBatch,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    total_loss_with_weights(params, positives, batch, cfg, None)
}

const GRAD_CHUNK: usize = 32;

/// [`total_loss`] with optionally frozen negative weights.
pub fn total_loss_with_weights<T: Real>(
    params: &ModelParams<T>,
    positives: &[Triple],
    batch: &NegativeBatch,
    cfg: &LossConfig,
    frozen: Option<&[Vec<f64>]>,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    if positives.is_empty() {
        return Err(Error::Internal("empty positive batch".into()));
    }
    let side = batch.side;
    let sub_rel = params.sub_relation();
    let evals: Vec<PositiveEval> = positives
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let f_pos = score(params, p);
            let f_negs: Vec<f64> = (0..batch.n)
                .map(|j| score(params, &batch.corrupted(p, i, j)))
                .collect();
            let anchor = side.entity(p);
            let f_subs: Vec<f64> = if cfg.use_substitution {
                batch
                    .entities_for(i)
                    .iter()
                    .map(|&e| score(params, &Triple::new(anchor, sub_rel, e)))
                    .collect()
            } else {
                vec![0.0; batch.n]
            };
            let weights = match frozen {
                Some(w) => w[i].clone(),
                None => weights_for(&f_negs, cfg),
            };
            let labels = batch.labels_for(i);
            let kg = kg_loss(f_pos, &f_negs, &f_subs, labels, &weights, cfg)?;
            let sub = if cfg.use_substitution {
                Some(sub_loss(&f_subs, labels, cfg)?)
            } else {
                None
            };
            Ok(PositiveEval {
                f_pos,
                f_negs,
                kg,
                sub,
            })
        })
        .collect::<Result<_>>()?;

    let b = positives.len() as f64;
    let mut kg_part = 0.0;
    let mut sub_part = 0.0;
    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    for e in &evals {
        kg_part += e.kg.value;
        sub_part += e.sub.as_ref().map_or(0.0, |s| s.value);
        pos_sum += e.f_pos;
        neg_sum += e.f_negs.iter().sum::<f64>();
    }
    kg_part /= b;
    sub_part /= b;
    let total = kg_part + sub_part;
    if !total.is_finite() {
        return Err(Error::NonFiniteLoss {
            what: "loss".into(),
            step: 0,
        });
    }

    let partials: Vec<RowGrads> = positives
        .par_chunks(GRAD_CHUNK)
        .zip(evals.par_chunks(GRAD_CHUNK))
        .enumerate()
        .map(|(c, (ps, es))| {
            let mut g = RowGrads::new();
            for (k, (p, e)) in ps.iter().zip(es).enumerate() {
                let i = c * GRAD_CHUNK + k;
                score_grad_into(params, p, e.kg.d_pos / b, &mut g);
                let anchor = side.entity(p);
                for j in 0..batch.n {
                    let d_neg = e.kg.d_neg[j];
                    if d_neg != 0.0 {
                        score_grad_into(params, &batch.corrupted(p, i, j), d_neg / b, &mut g);
                    }
                    if cfg.use_substitution {
                        let d_sub = e.kg.d_sub[j] + e.sub.as_ref().map_or(0.0, |s| s.d_sub[j]);
                        if d_sub != 0.0 {
                            let t = Triple::new(anchor, sub_rel, batch.entities_for(i)[j]);
                            score_grad_into(params, &t, d_sub / b, &mut g);
                        }
                    }
                }
            }
            g
        })
        .collect();
    let mut grads = RowGrads::new();
    for g in &partials {
        grads.merge(g, 1.0);
    }

    Ok(LossBreakdown {
        total,
        kg_part,
        sub_part,
        mean_pos_score: pos_sum / b,
        mean_neg_score: neg_sum / (b * batch.n as f64),
        grads,
    })
}
