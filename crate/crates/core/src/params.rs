//! Learnable tables, sparse row gradients, per-row Adam and checkpoints.
//!
//! Every model keeps its entity-specific tables first and its relation
//! tables after them; relation tables carry one extra row at index `|R|` for
//! the substitution relation. Complex coordinates are stored split: the
//! first `d` columns of a row are real parts, the next `d` imaginary parts.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Storage scalar. Training uses `f32`; gradient checks run on `f64`.
pub trait Real: Copy + Default + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    TransE,
    TransD,
    DistMult,
    ComplEx,
    RotatE,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::TransE,
        ModelKind::TransD,
        ModelKind::DistMult,
        ModelKind::ComplEx,
        ModelKind::RotatE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::TransD => "transd",
            ModelKind::DistMult => "distmult",
            ModelKind::ComplEx => "complex",
            ModelKind::RotatE => "rotate",
        }
    }

    /// Distance models start from a margin-scaled range, bilinear ones from 1/√d.
    pub fn is_distance_model(self) -> bool {
        matches!(
            self,
            ModelKind::TransE | ModelKind::TransD | ModelKind::RotatE
        )
    }

    /// `(name, width)` of each entity table, in concatenation order.
    pub fn entity_layout(self, dim: usize) -> Vec<(&'static str, usize)> {
        match self {
            ModelKind::TransE | ModelKind::DistMult => vec![("entity.embedding", dim)],
            ModelKind::TransD => vec![("entity.embedding", dim), ("entity.transfer", dim)],
            ModelKind::ComplEx | ModelKind::RotatE => vec![("entity.embedding", 2 * dim)],
        }
    }

    pub fn relation_layout(self, dim: usize) -> Vec<(&'static str, usize)> {
        match self {
            ModelKind::TransE | ModelKind::DistMult => vec![("relation.embedding", dim)],
            ModelKind::TransD => vec![("relation.embedding", dim), ("relation.transfer", dim)],
            ModelKind::ComplEx => vec![("relation.embedding", 2 * dim)],
            ModelKind::RotatE => vec![("relation.phase", dim)],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown model `{s}`")))
    }
}

/// Norm used by the TransE distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceNorm {
    #[default]
    L1,
    L2,
}

impl DistanceNorm {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceNorm::L1 => "l1",
            DistanceNorm::L2 => "l2",
        }
    }
}

impl FromStr for DistanceNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(DistanceNorm::L1),
            "l2" => Ok(DistanceNorm::L2),
            _ => Err(Error::Config(format!("unknown norm `{s}`"))),
        }
    }
}

/// Index of a table inside [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TableId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Table<T> {
    fn zeros(name: &'static str, rows: usize, cols: usize) -> Self {
        Self {
            name,
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub kind: ModelKind,
    pub norm: DistanceNorm,
    pub dim: usize,
    pub num_entities: usize,
    /// Original relations; the substitution relation lives at this index.
    pub num_relations: usize,
    /// Whether the substitution relation has been trained.
    pub substitution_enabled: bool,
    pub init_bound: f64,
    pub tables: Vec<Table<T>>,
    entity_tables: usize,
}

/// Half-width of the uniform initialization range.
pub fn init_bound(kind: ModelKind, dim: usize, margin: f64) -> f64 {
    if kind.is_distance_model() {
        (margin + 2.0) / dim as f64
    } else {
        1.0 / (dim as f64).sqrt()
    }
}

impl<T: Real> ModelParams<T> {
    /// Zero-filled tables with the layout of `kind`.
    pub fn zeros(
        kind: ModelKind,
        num_entities: usize,
        num_relations: usize,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 || num_entities == 0 || num_relations == 0 {
            return Err(Error::Config(format!(
                "dimensions must be positive (d={dim}, |E|={num_entities}, |R|={num_relations})"
            )));
        }
        let mut tables = Vec::new();
        for (name, cols) in kind.entity_layout(dim) {
            tables.push(Table::zeros(name, num_entities, cols));
        }
        let entity_tables = tables.len();
        for (name, cols) in kind.relation_layout(dim) {
            tables.push(Table::zeros(name, num_relations + 1, cols));
        }
        Ok(Self {
            kind,
            norm: DistanceNorm::default(),
            dim,
            num_entities,
            num_relations,
            substitution_enabled: false,
            init_bound: 0.0,
            tables,
            entity_tables,
        })
    }

    /// Uniform initialization in `(-b, b)`; RotatE phases in `[-π, π)`.
    pub fn init(
        kind: ModelKind,
        num_entities: usize,
        num_relations: usize,
        dim: usize,
        margin: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut p = Self::zeros(kind, num_entities, num_relations, dim)?;
        let bound = init_bound(kind, dim, margin);
        p.init_bound = bound;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = Uniform::new(-bound, bound).map_err(|e| Error::Config(e.to_string()))?;
        let phases = Uniform::new(-PI, PI).map_err(|e| Error::Config(e.to_string()))?;
        for table in &mut p.tables {
            let dist = if table.name == "relation.phase" {
                &phases
            } else {
                &values
            };
            for x in &mut table.data {
                *x = T::from_f64(dist.sample(&mut rng));
            }
            if table.name == "relation.phase" {
                // f32 rounding can land exactly on +π.
                for x in &mut table.data {
                    if x.to_f64() >= PI {
                        *x = T::from_f64(-PI);
                    }
                }
            }
        }
        Ok(p)
    }

    pub fn with_norm(mut self, norm: DistanceNorm) -> Self {
        self.norm = norm;
        self
    }

    /// Row index of the substitution relation.
    pub fn sub_relation(&self) -> usize {
        self.num_relations
    }

    pub fn entity_table_ids(&self) -> impl Iterator<Item = TableId> {
        (0..self.entity_tables).map(TableId)
    }

    pub fn relation_table_ids(&self) -> impl Iterator<Item = TableId> {
        (self.entity_tables..self.tables.len()).map(TableId)
    }

    pub fn is_entity_table(&self, id: TableId) -> bool {
        id.0 < self.entity_tables
    }

    #[inline]
    pub fn table(&self, id: TableId) -> &Table<T> {
        &self.tables[id.0]
    }

    #[inline]
    pub fn entity_row(&self, table: usize, i: usize) -> &[T] {
        self.tables[table].row(i)
    }

    #[inline]
    pub fn relation_row(&self, table: usize, i: usize) -> &[T] {
        self.tables[self.entity_tables + table].row(i)
    }

    pub fn entity_id(&self, table: usize) -> TableId {
        TableId(table)
    }

    pub fn relation_id(&self, table: usize) -> TableId {
        TableId(self.entity_tables + table)
    }

    /// Length of [`entity_repr`](Self::entity_repr).
    pub fn repr_len(&self) -> usize {
        self.tables[..self.entity_tables]
            .iter()
            .map(|t| t.cols)
            .sum()
    }

    /// Row `i` of every entity table, concatenated in table order.
    pub fn entity_repr(&self, i: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.repr_len());
        for t in &self.tables[..self.entity_tables] {
            out.extend(t.row(i).iter().map(|x| x.to_f64()));
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.tables
            .iter()
            .all(|t| t.data.iter().all(|x| x.to_f64().is_finite()))
    }

    /// Same parameters converted to another scalar type.
    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            kind: self.kind,
            norm: self.norm,
            dim: self.dim,
            num_entities: self.num_entities,
            num_relations: self.num_relations,
            substitution_enabled: self.substitution_enabled,
            init_bound: self.init_bound,
            tables: self
                .tables
                .iter()
                .map(|t| Table {
                    name: t.name,
                    rows: t.rows,
                    cols: t.cols,
                    data: t.data.iter().map(|x| U::from_f64(x.to_f64())).collect(),
                })
                .collect(),
            entity_tables: self.entity_tables,
        }
    }
}

/// Sparse gradient rows keyed by `(table, row)`; contributions to one row
/// are summed. Iteration follows first-touch order.
#[derive(Debug, Clone, Default)]
pub struct RowGrads {
    slots: HashMap<(TableId, usize), usize>,
    keys: Vec<(TableId, usize)>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl RowGrads {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn clear(&mut self) {
        self.slots.clear();
        self.keys.clear();
        self.offsets.clear();
        self.data.clear();
    }

    /// Mutable accumulator for a row, zero-initialized on first touch.
    pub fn row_mut(&mut self, table: TableId, row: usize, width: usize) -> &mut [f64] {
        let slot = match self.slots.get(&(table, row)) {
            Some(&s) => s,
            None => {
                let s = self.keys.len();
                self.slots.insert((table, row), s);
                self.keys.push((table, row));
                self.offsets.push(self.data.len());
                self.data.resize(self.data.len() + width, 0.0);
                s
            }
        };
        let start = self.offsets[slot];
        let end = self
            .offsets
            .get(slot + 1)
            .copied()
            .unwrap_or(self.data.len());
        &mut self.data[start..end]
    }

    pub fn add(&mut self, table: TableId, row: usize, grad: &[f64], scale: f64) {
        let dst = self.row_mut(table, row, grad.len());
        for (d, g) in dst.iter_mut().zip(grad) {
            *d += scale * g;
        }
    }

    pub fn get(&self, table: TableId, row: usize) -> Option<&[f64]> {
        self.slots.get(&(table, row)).map(|&s| self.slot(s))
    }

    fn slot(&self, s: usize) -> &[f64] {
        let start = self.offsets[s];
        let end = self.offsets.get(s + 1).copied().unwrap_or(self.data.len());
        &self.data[start..end]
    }

    pub fn iter(&self) -> impl Iterator<Item = (TableId, usize, &[f64])> + '_ {
        self.keys
            .iter()
            .enumerate()
            .map(|(s, &(t, r))| (t, r, self.slot(s)))
    }

    pub fn merge(&mut self, other: &RowGrads, scale: f64) {
        for (t, r, g) in other.iter() {
            self.add(t, r, g, scale);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments shaped like the parameter tables.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Vec<Vec<T>>,
    pub second: Vec<Vec<T>>,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(params: &ModelParams<T>, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<T>> = params
            .tables
            .iter()
            .map(|t| vec![T::default(); t.data.len()])
            .collect();
        Self {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }
}

/// One Adam update over exactly the rows present in `grads`.
///
/// Bias correction uses the global step counter. A non-finite gradient
/// aborts before anything is modified.
pub fn adam_step<T: Real>(
    state: &mut OptimizerState<T>,
    params: &mut ModelParams<T>,
    grads: &RowGrads,
) -> Result<()> {
    for (table, row, g) in grads.iter() {
        let t = params.table(table);
        if g.len() != t.cols || row >= t.rows {
            return Err(Error::Internal(format!(
                "gradient for {} row {row} has width {} (table is {}x{})",
                t.name,
                g.len(),
                t.rows,
                t.cols
            )));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient {
                table: t.name.to_string(),
                row,
            });
        }
    }
    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        eps,
    } = state.config;
    let step = state.step as i32;
    let bc1 = 1.0 - beta1.powi(step);
    let bc2 = 1.0 - beta2.powi(step);
    for (table, row, g) in grads.iter() {
        let cols = params.tables[table.0].cols;
        let range = row * cols..(row + 1) * cols;
        let p = &mut params.tables[table.0].data[range.clone()];
        let m = &mut state.first[table.0][range.clone()];
        let v = &mut state.second[table.0][range];
        for j in 0..cols {
            let mj = beta1 * m[j].to_f64() + (1.0 - beta1) * g[j];
            let vj = beta2 * v[j].to_f64() + (1.0 - beta2) * g[j] * g[j];
            m[j] = T::from_f64(mj);
            v[j] = T::from_f64(vj);
            let m_hat = mj / bc1;
            let v_hat = vj / bc2;
            let p_new = p[j].to_f64() - learning_rate * m_hat / (v_hat.sqrt() + eps);
            p[j] = T::from_f64(p_new);
        }
    }
    Ok(())
}

const CHECKPOINT_FORMAT: &str = "eans-checkpoint-v1";
const MANIFEST: &str = "manifest.txt";
const PAYLOAD: &str = "payload.bin";

/// Everything a checkpoint directory holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams<f32>,
    pub state: OptimizerState<f32>,
    pub seed: u64,
    pub config_digest: String,
    /// Free-form `key = value` entries (trainer resume state).
    pub extra: Vec<(String, String)>,
}

impl Checkpoint {
    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Rejects a checkpoint whose model or entity/relation counts differ.
    pub fn ensure_compatible(
        &self,
        kind: Option<ModelKind>,
        num_entities: usize,
        num_relations: usize,
    ) -> Result<()> {
        if let Some(kind) = kind {
            if kind != self.params.kind {
                return Err(Error::Mismatch(format!(
                    "model kind mismatch: checkpoint holds {}, run expects {kind}",
                    self.params.kind
                )));
            }
        }
        if num_entities != self.params.num_entities {
            return Err(Error::Mismatch(format!(
                "entity count mismatch: checkpoint has {}, dataset has {num_entities}",
                self.params.num_entities
            )));
        }
        if num_relations != self.params.num_relations {
            return Err(Error::Mismatch(format!(
                "relation count mismatch: checkpoint has {}, dataset has {num_relations}",
                self.params.num_relations
            )));
        }
        Ok(())
    }
}

/// Writes `manifest.txt` and `payload.bin` into `dir`.
///
/// The payload is the parameter tables followed by first and second
/// moments, each as little-endian `f32`, in manifest order.
pub fn save_checkpoint(
    params: &ModelParams<f32>,
    state: &OptimizerState<f32>,
    seed: u64,
    config_digest: &str,
    extra: &[(String, String)],
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    let mut push = |k: &str, v: String| {
        manifest.push_str(k);
        manifest.push_str(" = ");
        manifest.push_str(&v);
        manifest.push('\n');
    };
    push("format", CHECKPOINT_FORMAT.into());
    push("model", params.kind.to_string());
    push("norm", params.norm.as_str().into());
    push("dim", params.dim.to_string());
    push("entities", params.num_entities.to_string());
    push("relations", params.num_relations.to_string());
    push("substitution", params.substitution_enabled.to_string());
    push("init", format!("uniform bound={}", params.init_bound));
    push("step", state.step.to_string());
    push("seed", seed.to_string());
    push("config_digest", config_digest.into());
    let c = state.config;
    push(
        "adam",
        format!("{} {} {} {}", c.learning_rate, c.beta1, c.beta2, c.eps),
    );
    let mut payload = Vec::new();
    let groups: [(&str, Vec<&[f32]>); 3] = [
        (
            "",
            params.tables.iter().map(|t| t.data.as_slice()).collect(),
        ),
        ("adam.m.", state.first.iter().map(Vec::as_slice).collect()),
        ("adam.v.", state.second.iter().map(Vec::as_slice).collect()),
    ];
    for (prefix, arrays) in groups {
        for (t, arr) in params.tables.iter().zip(arrays) {
            push(
                "array",
                format!("{prefix}{} {} {} {}", t.name, t.rows, t.cols, arr.len() * 4),
            );
            for x in arr {
                payload.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    for (k, v) in extra {
        push(&format!("extra.{k}"), v.clone());
    }
    let path = dir.join(PAYLOAD);
    fs::write(&path, payload).map_err(|e| Error::io(path, e))?;
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn manifest_value<'a>(entries: &'a [(String, String)], key: &str) -> Result<&'a str> {
    entries
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Checkpoint(format!("manifest lacks `{key}`")))
}

fn parse_num<N: FromStr>(entries: &[(String, String)], key: &str) -> Result<N> {
    let v = manifest_value(entries, key)?;
    v.parse()
        .map_err(|_| Error::Checkpoint(format!("bad value `{v}` for `{key}`")))
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let mpath = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let entries: Vec<(String, String)> = text
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .collect();
    if manifest_value(&entries, "format")? != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint("unrecognized checkpoint format".into()));
    }
    let kind: ModelKind = manifest_value(&entries, "model")?.parse()?;
    let norm: DistanceNorm = manifest_value(&entries, "norm")?.parse()?;
    let dim: usize = parse_num(&entries, "dim")?;
    let num_entities: usize = parse_num(&entries, "entities")?;
    let num_relations: usize = parse_num(&entries, "relations")?;
    let substitution: bool = parse_num(&entries, "substitution")?;
    let step: u64 = parse_num(&entries, "step")?;
    let seed: u64 = parse_num(&entries, "seed")?;
    let config_digest = manifest_value(&entries, "config_digest")?.to_owned();
    let init_bound = manifest_value(&entries, "init")?
        .strip_prefix("uniform bound=")
        .and_then(|b| b.parse().ok())
        .ok_or_else(|| Error::Checkpoint("bad `init` entry".into()))?;
    let adam: Vec<f64> = manifest_value(&entries, "adam")?
        .split_whitespace()
        .map(|x| {
            x.parse()
                .map_err(|_| Error::Checkpoint("bad `adam` entry".into()))
        })
        .collect::<Result<_>>()?;
    if adam.len() != 4 {
        return Err(Error::Checkpoint("bad `adam` entry".into()));
    }

    let mut params =
        ModelParams::<f32>::zeros(kind, num_entities, num_relations, dim)?.with_norm(norm);
    params.substitution_enabled = substitution;
    params.init_bound = init_bound;
    let arrays: Vec<(String, usize, usize, usize)> = entries
        .iter()
        .filter(|(k, _)| k == "array")
        .map(|(_, v)| {
            let f: Vec<&str> = v.split_whitespace().collect();
            let bad = || Error::Checkpoint(format!("bad array entry `{v}`"));
            if f.len() != 4 {
                return Err(bad());
            }
            Ok((
                f[0].to_owned(),
                f[1].parse().map_err(|_| bad())?,
                f[2].parse().map_err(|_| bad())?,
                f[3].parse().map_err(|_| bad())?,
            ))
        })
        .collect::<Result<_>>()?;
    let n = params.tables.len();
    if arrays.len() != 3 * n {
        return Err(Error::Checkpoint(format!(
            "shape mismatch: expected {} arrays for {kind}, manifest lists {}",
            3 * n,
            arrays.len()
        )));
    }
    for (i, (name, rows, cols, bytes)) in arrays.iter().enumerate() {
        let t = &params.tables[i % n];
        let base = name.rsplit('.').take(2).collect::<Vec<_>>();
        let expect = t.name.rsplit('.').take(2).collect::<Vec<_>>();
        if base != expect || *rows != t.rows || *cols != t.cols || *bytes != t.rows * t.cols * 4 {
            return Err(Error::Checkpoint(format!(
                "shape mismatch for `{name}`: expected {} {}x{}",
                t.name, t.rows, t.cols
            )));
        }
    }

    let ppath = dir.join(PAYLOAD);
    let payload = fs::read(&ppath).map_err(|e| Error::io(&ppath, e))?;
    let expected: usize = arrays.iter().map(|a| a.3).sum();
    if payload.len() != expected {
        return Err(Error::Checkpoint(format!(
            "payload length mismatch: manifest lists {expected} bytes, file has {}",
            payload.len()
        )));
    }
    let mut cursor = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    for t in &mut params.tables {
        for x in &mut t.data {
            *x = cursor.next().unwrap_or_default();
        }
    }
    let mut state = OptimizerState::new(
        &params,
        AdamConfig {
            learning_rate: adam[0],
            beta1: adam[1],
            beta2: adam[2],
            eps: adam[3],
        },
    );
    state.step = step;
    for arr in state.first.iter_mut().chain(state.second.iter_mut()) {
        for x in arr.iter_mut() {
            *x = cursor.next().unwrap_or_default();
        }
    }
    let extra = entries
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("extra.").map(|k| (k.to_owned(), v.clone())))
        .collect();
    Ok(Checkpoint {
        params,
        state,
        seed,
        config_digest,
        extra,
    })
}
