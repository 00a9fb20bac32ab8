//! Oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use eans::dataset::{KgDataset, Side, Triple};
use eans::eans_index::{sample_eans, VirtualIndexMap};
use eans::evaluator::HIT_LEVELS;
use eans::params::{DistanceNorm, ModelKind, ModelParams, RowGrads};
use eans::sampling::sample_uniform;
use eans::scoring::score;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;
pub const CHI_BINS: usize = 50;

/// Outcome of comparing an analytic gradient with central differences.
#[derive(Debug)]
pub enum FdCheck {
    /// Worst row-wise relative error.
    Ok(f64),
    /// Some coordinate sits on a kink of the loss (one-sided slopes differ).
    Kink,
    Mismatch {
        table: String,
        row: usize,
        rel: f64,
    },
}

/// Compares `grads` with central differences of `f`, row by row.
///
/// Relative error per row is `‖a − n‖ / max(‖a‖, ‖n‖, 1e-10)`. A
/// coordinate whose left and right slopes disagree is reported as a kink.
pub fn fd_check(
    params: &ModelParams<f64>,
    grads: &RowGrads,
    step: f64,
    tol: f64,
    f: impl Fn(&ModelParams<f64>) -> f64,
) -> FdCheck {
    let base = f(params);
    let mut worst = 0.0f64;
    let mut p = params.clone();
    for (table, row, g) in grads.iter() {
        let cols = params.tables[table.0].cols;
        let mut numeric = vec![0.0; cols];
        for (j, slot) in numeric.iter_mut().enumerate() {
            let idx = row * cols + j;
            let x = params.tables[table.0].data[idx];
            p.tables[table.0].data[idx] = x + step;
            let up = f(&p);
            p.tables[table.0].data[idx] = x - step;
            let down = f(&p);
            p.tables[table.0].data[idx] = x;
            let right = (up - base) / step;
            let left = (base - down) / step;
            if (right - left).abs() > (1e-2 * right.abs().max(left.abs())).max(1e-6) {
                return FdCheck::Kink;
            }
            *slot = (up - down) / (2.0 * step);
        }
        let diff: f64 = g
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n) * (a - n))
            .sum::<f64>()
            .sqrt();
        let na: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = diff / na.max(nn).max(1e-10);
        if rel > tol {
            return FdCheck::Mismatch {
                table: params.tables[table.0].name.to_string(),
                row,
                rel,
            };
        }
        worst = worst.max(rel);
    }
    FdCheck::Ok(worst)
}

/// `P(floor(z·σ) ≡ k mod n)` for `z ~ N(0, 1)`, every offset `k ∈ [0, n)`.
pub fn wrapped_floor_gaussian_pmf(sigma: f64, n: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).unwrap();
    let reach = (12.0 * sigma / n as f64).ceil() as i64 + 1;
    (0..n as i64)
        .map(|k| {
            (-reach..=reach)
                .map(|m| {
                    let lo = (k + m * n as i64) as f64;
                    normal.cdf(lo + 1.0) - normal.cdf(lo)
                })
                .sum()
        })
        .collect()
}

/// Groups consecutive categories into `bins` runs of roughly equal
/// probability; returns the bin of every category.
pub fn equal_probability_bins(pmf: &[f64], bins: usize) -> Vec<usize> {
    let total: f64 = pmf.iter().sum();
    let mut acc = 0.0;
    pmf.iter()
        .map(|p| {
            let b = ((acc / total) * bins as f64).floor() as usize;
            acc += p;
            b.min(bins - 1)
        })
        .collect()
}

/// Pearson chi-square p-value of `observed` against `expected` counts.
pub fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// Rank of the truth by scoring every entity in a plain loop.
pub fn brute_rank(
    params: &ModelParams<f64>,
    all_triples: &[Triple],
    t: &Triple,
    side: Side,
    filtered: bool,
) -> f64 {
    let known: HashSet<Triple> = all_triples.iter().copied().collect();
    let truth = side.entity(t);
    let f_true = score(params, t);
    let mut rank = 1.0;
    for c in 0..params.num_entities {
        if c == truth {
            continue;
        }
        let cand = side.replace(t, c);
        if filtered && known.contains(&cand) {
            continue;
        }
        let f = score(params, &cand);
        if f < f_true {
            rank += 1.0;
        } else if f == f_true {
            rank += 0.5;
        }
    }
    rank
}

/// `(mr, mrr, hits@1, hits@3, hits@10)` of a list of ranks.
pub fn summarize(ranks: &[f64]) -> [f64; 5] {
    let n = ranks.len() as f64;
    let mut out = [0.0; 5];
    out[0] = ranks.iter().sum::<f64>() / n;
    out[1] = ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n;
    for (i, k) in HIT_LEVELS.iter().enumerate() {
        out[2 + i] = ranks.iter().filter(|&&r| r <= *k as f64).count() as f64 / n;
    }
    out
}

/// 5 entities, 2 relations, d = 8, values spread well beyond the init range
/// so that L1 kinks are rare.
pub fn fd_model(kind: ModelKind, norm: DistanceNorm, seed: u64) -> ModelParams<f64> {
    let mut p = ModelParams::<f64>::init(kind, 5, 2, 8, 2.0, seed)
        .unwrap()
        .with_norm(norm);
    p.substitution_enabled = true;
    for t in &mut p.tables {
        if t.name != "relation.phase" {
            for x in &mut t.data {
                *x *= 3.0;
            }
        }
    }
    p
}

/// Retries fresh parameters while the draw lands on a kink.
pub fn check_until_smooth(mut attempt: impl FnMut(u64) -> FdCheck) -> f64 {
    for seed in 0..50 {
        match attempt(seed) {
            FdCheck::Ok(worst) => return worst,
            FdCheck::Kink => continue,
            FdCheck::Mismatch { table, row, rel } => {
                panic!("seed {seed}: {table} row {row} relative error {rel:e}")
            }
        }
    }
    panic!("every draw hit a kink");
}

/// The six-triple graph used by the loss gradient checks.
pub fn fd_dataset() -> KgDataset {
    let train = vec![
        Triple::new(0, 0, 1),
        Triple::new(0, 0, 2),
        Triple::new(1, 1, 3),
        Triple::new(2, 1, 3),
        Triple::new(4, 0, 0),
        Triple::new(3, 1, 4),
    ];
    KgDataset::from_indexed(5, 2, train, vec![Triple::new(2, 0, 1)], vec![])
}

pub fn shuffled_map(n: usize, seed: u64) -> VirtualIndexMap {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    VirtualIndexMap::from_virt_to_real(ids).unwrap()
}

/// Chi-square p-value of `draws` EANS draws around the entity at virtual
/// index `x` of a shuffled map, against the wrapped floor-Gaussian
/// conditioned on a non-zero offset.
pub fn eans_offset_fit(n: usize, sigma: f64, x: usize, draws: usize, seed: u64) -> f64 {
    let map = shuffled_map(n, seed);
    let pos = map.to_real(x);
    let pmf = wrapped_floor_gaussian_pmf(sigma, n);
    // Signed order −⌊n/2⌋..−1, 1..: keeps each bin a contiguous run of offsets.
    let half = n / 2;
    let order: Vec<usize> = (n - half..n).chain(1..n - half).collect();
    let probs: Vec<f64> = order.iter().map(|&k| pmf[k]).collect();
    let bin_of_rank = equal_probability_bins(&probs, CHI_BINS);
    let mut bin_of_offset = vec![usize::MAX; n];
    for (rank, &k) in order.iter().enumerate() {
        bin_of_offset[k] = bin_of_rank[rank];
    }
    let mass: f64 = probs.iter().sum();
    let mut expected = vec![0.0; CHI_BINS];
    for (rank, &p) in probs.iter().enumerate() {
        expected[bin_of_rank[rank]] += p / mass * draws as f64;
    }
    let mut observed = vec![0.0; CHI_BINS];
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    for _ in 0..draws {
        let e = sample_eans(&map, pos, sigma, &mut rng);
        assert_ne!(e, pos);
        let offset = (map.to_virt(e) + n - x) % n;
        observed[bin_of_offset[offset]] += 1.0;
    }
    chi_square_p(&observed, &expected)
}

/// Chi-square p-value of uniform draws over the entities other than `pos`.
pub fn uniform_fit(n: usize, pos: usize, draws: usize, seed: u64) -> f64 {
    let bins = equal_probability_bins(&vec![1.0; n - 1], CHI_BINS);
    let mut expected = vec![0.0; CHI_BINS];
    for &b in &bins {
        expected[b] += draws as f64 / (n - 1) as f64;
    }
    let mut observed = vec![0.0; CHI_BINS];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let e = sample_uniform(n, pos, &mut rng).unwrap();
        assert_ne!(e, pos);
        let rank = if e > pos { e - 1 } else { e };
        observed[bins[rank]] += 1.0;
    }
    chi_square_p(&observed, &expected)
}

/// A random graph with 3 to 50 entities, split 6:2:2.
pub fn random_kg(seed: u64) -> KgDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = rng.random_range(3..=50);
    let r = rng.random_range(1..=5);
    let want = rng.random_range(10..=4 * e);
    let mut set = BTreeSet::new();
    for _ in 0..want {
        set.insert(Triple::new(
            rng.random_range(0..e),
            rng.random_range(0..r),
            rng.random_range(0..e),
        ));
    }
    let (mut train, mut valid, mut test) = (vec![], vec![], vec![]);
    for t in set {
        match rng.random_range(0..10) {
            0..=5 => train.push(t),
            6 | 7 => valid.push(t),
            _ => test.push(t),
        }
    }
    KgDataset::from_indexed(e, r, train, valid, test)
}

/// DistMult with entries in {−1, 0, 1} and d = 2: ties are everywhere.
pub fn tied_params(ds: &KgDataset, seed: u64) -> ModelParams<f64> {
    let mut p = ModelParams::<f64>::init(
        ModelKind::DistMult,
        ds.num_entities(),
        ds.num_relations(),
        2,
        1.0,
        seed,
    )
    .unwrap();
    for t in &mut p.tables {
        for x in &mut t.data {
            *x = (*x * 3.0 / p.init_bound).round().clamp(-1.0, 1.0);
        }
    }
    p
}

pub fn all_triples(ds: &KgDataset) -> Vec<Triple> {
    ds.train
        .iter()
        .chain(&ds.valid)
        .chain(&ds.test)
        .copied()
        .collect()
}
