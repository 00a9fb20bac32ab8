//! Entity clustering, cluster-ordered virtual indices, and Gaussian
//! negative draws in that virtual index space.
//!
//! After clustering, clusters are visited nearest-centroid-first and their
//! members receive consecutive virtual indices, so entities with similar
//! representations sit next to each other. A negative for entity `e` is then
//! drawn around `e`'s virtual index with a Gaussian offset and mapped back to
//! a real entity index. Only the permutation changes on refresh; the
//! parameter tables are never moved.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{ModelParams, Real};
use crate::rng::{self, Stream};

/// Redraws allowed when a Gaussian draw lands on the positive itself.
pub const MAX_REDRAWS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    pub dim: usize,
    pub labels: Vec<usize>,
    /// Row-major `k × dim`.
    pub centroids: Vec<f64>,
    pub inertia: f64,
    /// Inertia after every assignment step, starting with the initial one.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl ClusterResult {
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[f64], dim: usize, centroids: &[f64]) -> (Vec<usize>, Vec<f64>) {
    points
        .par_chunks_exact(dim)
        .map(|p| nearest(p, centroids, dim))
        .unzip()
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty(
    points: &[f64],
    dim: usize,
    k: usize,
    labels: &mut [usize],
    dists: &mut [f64],
    centroids: &mut [f64],
) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let donor = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
        let Some(i) = donor else { break };
        sizes[labels[i]] -= 1;
        sizes[c] = 1;
        labels[i] = c;
        dists[i] = 0.0;
        centroids[c * dim..(c + 1) * dim].copy_from_slice(&points[i * dim..(i + 1) * dim]);
    }
}

fn means(points: &[f64], dim: usize, k: usize, labels: &[usize], old: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.chunks_exact(dim).zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(p) {
            *s += x;
        }
    }
    for c in 0..k {
        let row = &mut sums[c * dim..(c + 1) * dim];
        if counts[c] == 0 {
            row.copy_from_slice(&old[c * dim..(c + 1) * dim]);
        } else {
            let n = counts[c] as f64;
            row.iter_mut().for_each(|s| *s /= n);
        }
    }
    sums
}

fn kmeans_pp(points: &[f64], dim: usize, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = points.len() / dim;
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(&points[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = points
        .par_chunks_exact(dim)
        .map(|p| sq_dist(p, &centroids[..dim]))
        .collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick * dim..(pick + 1) * dim].to_vec();
        d2.par_iter_mut()
            .zip(points.par_chunks_exact(dim))
            .for_each(|(d, p)| *d = d.min(sq_dist(p, &c)));
        centroids.extend_from_slice(&c);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// `points` is row-major with `dim` columns. Stops after `max_iters` update
/// rounds or as soon as an assignment leaves every label unchanged.
pub fn kmeans(
    points: &[f64],
    dim: usize,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<ClusterResult> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::Internal(format!(
            "point buffer of length {} is not a multiple of dim {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "k-means needs 1 <= k <= number of points (k={k}, points={n})"
        )));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::Internal("non-finite entity representation".into()));
    }
    let mut rng = rng::stream(seed, Stream::Clustering);
    let mut centroids = kmeans_pp(points, dim, k, &mut rng);
    let (mut labels, mut dists) = assign(points, dim, &centroids);
    repair_empty(points, dim, k, &mut labels, &mut dists, &mut centroids);
    let mut history = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let next = means(points, dim, k, &labels, &centroids);
        let (mut new_labels, mut new_dists) = assign(points, dim, &next);
        centroids = next;
        repair_empty(
            points,
            dim,
            k,
            &mut new_labels,
            &mut new_dists,
            &mut centroids,
        );
        history.push(new_dists.iter().sum());
        let changed = new_labels != labels;
        labels = new_labels;
        dists = new_dists;
        if !changed {
            break;
        }
    }
    Ok(ClusterResult {
        k,
        dim,
        labels,
        centroids,
        inertia: dists.iter().sum(),
        inertia_history: history,
        iterations,
    })
}

/// Bijection between virtual (cluster-ordered) and real entity indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualIndexMap {
    virt_to_real: Vec<usize>,
    real_to_virt: Vec<usize>,
}

impl VirtualIndexMap {
    pub fn identity(n: usize) -> Self {
        Self {
            virt_to_real: (0..n).collect(),
            real_to_virt: (0..n).collect(),
        }
    }

    pub fn from_virt_to_real(virt_to_real: Vec<usize>) -> Result<Self> {
        let n = virt_to_real.len();
        let mut real_to_virt = vec![usize::MAX; n];
        for (v, &r) in virt_to_real.iter().enumerate() {
            if r >= n || real_to_virt[r] != usize::MAX {
                return Err(Error::Internal(format!(
                    "not a permutation: real index {r} at virtual {v}"
                )));
            }
            real_to_virt[r] = v;
        }
        Ok(Self {
            virt_to_real,
            real_to_virt,
        })
    }

    pub fn len(&self) -> usize {
        self.virt_to_real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.virt_to_real.is_empty()
    }

    #[inline]
    pub fn to_real(&self, virt: usize) -> usize {
        self.virt_to_real[virt]
    }

    #[inline]
    pub fn to_virt(&self, real: usize) -> usize {
        self.real_to_virt[real]
    }

    pub fn virt_to_real(&self) -> &[usize] {
        &self.virt_to_real
    }

    pub fn real_to_virt(&self) -> &[usize] {
        &self.real_to_virt
    }

    /// Audit dump: `real_index<TAB>virtual_index[<TAB>label]` per entity.
    pub fn dump(&self, path: &Path, labels: Option<&[usize]>) -> Result<()> {
        let mut out = String::new();
        for (real, &virt) in self.real_to_virt.iter().enumerate() {
            match labels {
                Some(l) => writeln!(out, "{real}\t{virt}\t{}", l[real]),
                None => writeln!(out, "{real}\t{virt}"),
            }
            .expect("writing to a String");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Virtual-index layout visiting clusters nearest-centroid-first from `start`.
///
/// Ties between equally near clusters go to the lower cluster id; members
/// of a cluster are laid out by ascending real index.
pub fn reorder_from(clusters: &ClusterResult, start: usize) -> VirtualIndexMap {
    let k = clusters.k;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (e, &l) in clusters.labels.iter().enumerate() {
        members[l].push(e);
    }
    let mut visited = vec![false; k];
    let mut order = Vec::with_capacity(clusters.labels.len());
    let mut current = start;
    for _ in 0..k {
        visited[current] = true;
        order.extend_from_slice(&members[current]);
        let here = clusters.centroid(current);
        let next = (0..k)
            .filter(|&c| !visited[c])
            .map(|c| (c, sq_dist(here, clusters.centroid(c))))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match next {
            Some((c, _)) => current = c,
            None => break,
        }
    }
    VirtualIndexMap::from_virt_to_real(order).expect("clusters partition the entities")
}

/// [`reorder_from`] with the starting cluster drawn uniformly from `seed`.
pub fn reorder(clusters: &ClusterResult, seed: u64) -> VirtualIndexMap {
    let mut rng = rng::stream(seed, Stream::Reorder);
    let start = rng.random_range(0..clusters.k);
    reorder_from(clusters, start)
}

/// `floor(x + z·σ)` wrapped onto the ring `[0, n)`.
#[inline]
pub fn gaussian_virtual_index(x: usize, z: f64, sigma: f64, n: usize) -> usize {
    let raw = (x as f64 + z * sigma).floor() as i64;
    raw.rem_euclid(n as i64) as usize
}

/// Draws a negative entity around `pos_real` in virtual index space.
///
/// A draw that lands on the positive is redrawn up to [`MAX_REDRAWS`] times,
/// then the draw falls back to uniform over the other entities.
pub fn sample_eans(
    map: &VirtualIndexMap,
    pos_real: usize,
    sigma: f64,
    rng: &mut impl Rng,
) -> usize {
    let n = map.len();
    debug_assert!(n >= 2 && sigma > 0.0);
    let x = map.to_virt(pos_real);
    for _ in 0..MAX_REDRAWS {
        let z: f64 = rng.sample(StandardNormal);
        let v = gaussian_virtual_index(x, z, sigma, n);
        if v != x {
            return map.to_real(v);
        }
    }
    let mut v = rng.random_range(0..n - 1);
    if v >= x {
        v += 1;
    }
    map.to_real(v)
}

/// Entity representations of every entity as a row-major matrix.
pub fn entity_matrix<T: Real>(params: &ModelParams<T>) -> Vec<f64> {
    let mut out = Vec::with_capacity(params.num_entities * params.repr_len());
    for e in 0..params.num_entities {
        out.extend(params.entity_repr(e));
    }
    out
}

/// Clusters the current entity representations and lays out a new map.
pub fn refresh_with_clusters<T: Real>(
    params: &ModelParams<T>,
    k: usize,
    seed: u64,
    kmeans_iters: usize,
) -> Result<(VirtualIndexMap, ClusterResult)> {
    let points = entity_matrix(params);
    let clusters = kmeans(&points, params.repr_len(), k, kmeans_iters, seed)?;
    let map = reorder(&clusters, seed);
    Ok((map, clusters))
}

pub fn refresh<T: Real>(
    params: &ModelParams<T>,
    k: usize,
    seed: u64,
    kmeans_iters: usize,
) -> Result<VirtualIndexMap> {
    refresh_with_clusters(params, k, seed, kmeans_iters).map(|(m, _)| m)
}
