//! Deterministic generator for a small typed knowledge graph.
//!
//! Entities belong to types and carry a hidden position in a latent space;
//! each relation links a few head types to one tail type, and a head's tails
//! are the tail-type entities closest to `latent(h) + offset(r)`.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{KgDataset, Triple};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub types: usize,
    pub per_type: usize,
    pub relations: usize,
    pub head_types_per_relation: usize,
    pub tails_per_head: usize,
    pub latent_dim: usize,
    /// Distance between type centres relative to within-type spread.
    pub type_separation: f64,
    pub valid: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            types: 8,
            per_type: 16,
            relations: 48,
            head_types_per_relation: 2,
            tails_per_head: 4,
            latent_dim: 6,
            type_separation: 3.0,
            valid: 500,
            test: 500,
            seed: 2023,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// All triples of the graph in a seeded order, before splitting.
pub fn generate_triples(spec: &ToySpec) -> Result<(usize, usize, Vec<Triple>)> {
    if spec.types < 2 || spec.per_type == 0 || spec.relations == 0 || spec.latent_dim == 0 {
        return Err(Error::Config(
            "toy graph needs ≥2 types and positive sizes".into(),
        ));
    }
    if spec.head_types_per_relation > spec.types || spec.tails_per_head > spec.per_type {
        return Err(Error::Config("toy graph fan-out exceeds type sizes".into()));
    }
    let mut rng = stream(spec.seed, Stream::Init);
    let unit = Normal::new(0.0, 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    let d = spec.latent_dim;
    let num_entities = spec.types * spec.per_type;

    let centres: Vec<Vec<f64>> = (0..spec.types)
        .map(|_| {
            (0..d)
                .map(|_| spec.type_separation * unit.sample(&mut rng))
                .collect()
        })
        .collect();
    let latent: Vec<Vec<f64>> = (0..num_entities)
        .map(|e| {
            let c = &centres[e / spec.per_type];
            c.iter().map(|x| x + unit.sample(&mut rng)).collect()
        })
        .collect();

    let mut triples = Vec::new();
    let type_ids: Vec<usize> = (0..spec.types).collect();
    for r in 0..spec.relations {
        let heads: Vec<usize> = type_ids
            .choose_multiple(&mut rng, spec.head_types_per_relation)
            .copied()
            .collect();
        let tail_type = rng.random_range(0..spec.types);
        let offset: Vec<f64> = (0..d).map(|_| unit.sample(&mut rng)).collect();
        for ht in heads {
            for h in ht * spec.per_type..(ht + 1) * spec.per_type {
                let target: Vec<f64> = latent[h].iter().zip(&offset).map(|(a, b)| a + b).collect();
                let mut tails: Vec<(f64, usize)> = (tail_type * spec.per_type
                    ..(tail_type + 1) * spec.per_type)
                    .filter(|&t| t != h)
                    .map(|t| (sq_dist(&latent[t], &target), t))
                    .collect();
                tails.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(_, t) in tails.iter().take(spec.tails_per_head) {
                    triples.push(Triple::new(h, r, t));
                }
            }
        }
    }
    triples.shuffle(&mut rng);
    Ok((num_entities, spec.relations, triples))
}

/// Splits the generated triples, keeping every entity and relation in train.
pub fn generate(spec: &ToySpec) -> Result<KgDataset> {
    let (num_entities, num_relations, triples) = generate_triples(spec)?;
    let mut seen = HashSet::new();
    let triples: Vec<Triple> = triples.into_iter().filter(|t| seen.insert(*t)).collect();
    if spec.valid + spec.test >= triples.len() {
        return Err(Error::Config(format!(
            "toy graph has only {} triples for {} held-out",
            triples.len(),
            spec.valid + spec.test
        )));
    }
    let mut entity_left = vec![0usize; num_entities];
    let mut relation_left = vec![0usize; num_relations];
    for t in &triples {
        entity_left[t.head] += 1;
        entity_left[t.tail] += 1;
        relation_left[t.relation] += 1;
    }
    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for t in triples {
        let movable = entity_left[t.head] > 1
            && entity_left[t.tail] > 1
            && relation_left[t.relation] > 1
            && t.head != t.tail;
        let target = if movable && test.len() < spec.test {
            Some(&mut test)
        } else if movable && valid.len() < spec.valid {
            Some(&mut valid)
        } else {
            None
        };
        match target {
            Some(split) => {
                entity_left[t.head] -= 1;
                entity_left[t.tail] -= 1;
                relation_left[t.relation] -= 1;
                split.push(t);
            }
            None => train.push(t),
        }
    }
    let names = |prefix: &str, n: usize, per: Option<usize>| -> Vec<String> {
        (0..n)
            .map(|i| match per {
                Some(p) => format!("{prefix}{}_{:02}", i / p, i % p),
                None => format!("{prefix}{i:02}"),
            })
            .collect()
    };
    KgDataset::with_vocab(
        names("type", num_entities, Some(spec.per_type)),
        names("rel", num_relations, None),
        train,
        valid,
        test,
    )
}
