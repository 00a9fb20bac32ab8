//! Link-prediction ranking with the filtered protocol and MR / MRR / Hit@N.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataset::{FilterIndex, Query, Side, Triple};
use crate::params::{ModelParams, Real};
use crate::scoring::score;

pub const HIT_LEVELS: [usize; 3] = [1, 3, 10];

/// Whether other known completions are removed from the candidate list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Filtered,
    Raw,
}

/// Rank of the true entity among all completions of `t` on `side`.
///
/// Ties are averaged: `1 + #{f < f_true} + #{f = f_true, c ≠ true} / 2`.
pub fn rank_triple<T: Real>(
    params: &ModelParams<T>,
    t: &Triple,
    side: Side,
    filter: &FilterIndex,
    protocol: Protocol,
) -> f64 {
    let truth = side.entity(t);
    let known = match protocol {
        Protocol::Filtered => filter.candidate_filter(Query::open(t, side)),
        Protocol::Raw => &[],
    };
    let f_true = score(params, t);
    let mut less = 0usize;
    let mut equal = 0usize;
    for c in 0..params.num_entities {
        if c == truth || known.binary_search(&c).is_ok() {
            continue;
        }
        let f = score(params, &side.replace(t, c));
        if f < f_true {
            less += 1;
        } else if f == f_true {
            equal += 1;
        }
    }
    1.0 + less as f64 + equal as f64 / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankSummary {
    pub count: usize,
    pub mr: f64,
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
}

impl RankSummary {
    pub fn from_ranks(ranks: &[f64]) -> Self {
        let n = ranks.len().max(1) as f64;
        let hits = HIT_LEVELS
            .iter()
            .map(|&k| {
                (
                    k,
                    ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / n,
                )
            })
            .collect();
        Self {
            count: ranks.len(),
            mr: ranks.iter().sum::<f64>() / n,
            mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
            hits,
        }
    }

    pub fn hit(&self, k: usize) -> f64 {
        self.hits.get(&k).copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub combined: RankSummary,
    pub head: RankSummary,
    pub tail: RankSummary,
}

impl Metrics {
    pub fn mrr(&self) -> f64 {
        self.combined.mrr
    }

    pub fn mr(&self) -> f64 {
        self.combined.mr
    }

    pub fn hit(&self, k: usize) -> f64 {
        self.combined.hit(k)
    }

    pub fn to_json(&self) -> String {
        let part = |s: &RankSummary| {
            let mut out = format!(
                "{{\"count\": {}, \"mr\": {}, \"mrr\": {}",
                s.count, s.mr, s.mrr
            );
            for (k, v) in &s.hits {
                write!(out, ", \"hits@{k}\": {v}").unwrap();
            }
            out.push('}');
            out
        };
        format!(
            "{{\n  \"combined\": {},\n  \"head\": {},\n  \"tail\": {}\n}}",
            part(&self.combined),
            part(&self.head),
            part(&self.tail)
        )
    }

    pub const CSV_HEADER: &'static str = "dataset,model,strategy,mr,mrr,h1,h3,h10,head_mr,head_mrr,head_h10,tail_mr,tail_mrr,tail_h10";

    pub fn csv_row(&self, dataset: &str, model: &str, strategy: &str) -> String {
        let c = &self.combined;
        format!(
            "{dataset},{model},{strategy},{:.4},{:.6},{:.6},{:.6},{:.6},{:.4},{:.6},{:.6},{:.4},{:.6},{:.6}",
            c.mr,
            c.mrr,
            c.hit(1),
            c.hit(3),
            c.hit(10),
            self.head.mr,
            self.head.mrr,
            self.head.hit(10),
            self.tail.mr,
            self.tail.mrr,
            self.tail.hit(10),
        )
    }
}

/// Ranks both sides of every triple; parallel over triples, merged in order.
pub fn evaluate<T: Real>(
    params: &ModelParams<T>,
    triples: &[Triple],
    filter: &FilterIndex,
    protocol: Protocol,
) -> Metrics {
    let ranks: Vec<(f64, f64)> = triples
        .par_iter()
        .map(|t| {
            (
                rank_triple(params, t, Side::Head, filter, protocol),
                rank_triple(params, t, Side::Tail, filter, protocol),
            )
        })
        .collect();
    let heads: Vec<f64> = ranks.iter().map(|r| r.0).collect();
    let tails: Vec<f64> = ranks.iter().map(|r| r.1).collect();
    let both: Vec<f64> = heads.iter().chain(&tails).copied().collect();
    Metrics {
        combined: RankSummary::from_ranks(&both),
        head: RankSummary::from_ranks(&heads),
        tail: RankSummary::from_ranks(&tails),
    }
}
