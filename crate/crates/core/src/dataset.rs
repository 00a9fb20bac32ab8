//! Benchmark triple files, integer dictionaries and the membership index
//! used for false-negative labels and filtered ranking.
//!
//! A dataset directory holds `train.txt`, `valid.txt` and `test.txt` with one
//! `head<TAB>relation<TAB>tail` line per fact. Optional `entities.dict` and
//! `relations.dict` files (`index<TAB>name`) pin the index assignment;
//! otherwise indices follow first appearance over train, valid, test.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// An integer-encoded `(head, relation, tail)` fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub const fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// Which end of a triple is replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Head,
    Tail,
}

impl Side {
    pub fn entity(self, t: &Triple) -> usize {
        match self {
            Side::Head => t.head,
            Side::Tail => t.tail,
        }
    }

    /// `t` with the entity on this side replaced by `entity`.
    pub fn replace(self, t: &Triple, entity: usize) -> Triple {
        match self {
            Side::Head => Triple::new(entity, t.relation, t.tail),
            Side::Tail => Triple::new(t.head, t.relation, entity),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Head => "head",
            Side::Tail => "tail",
        }
    }
}

/// Bidirectional name/index dictionary with dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        i
    }

    fn from_names(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self { names, index }
    }
}

/// Membership scope for [`FilterIndex::contains`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    TrainOnly,
    AllSplits,
}

/// A partial triple with one entity slot open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Tails { head: usize, relation: usize },
    Heads { relation: usize, tail: usize },
}

impl Query {
    /// The query obtained by opening `side` of `t`.
    pub fn open(t: &Triple, side: Side) -> Self {
        match side {
            Side::Head => Query::Heads {
                relation: t.relation,
                tail: t.tail,
            },
            Side::Tail => Query::Tails {
                head: t.head,
                relation: t.relation,
            },
        }
    }
}

/// Set membership over the train split and over the union of all splits,
/// plus the grouped `(h, r, ·)` / `(·, r, t)` views of the union.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    train: HashSet<Triple>,
    all: HashSet<Triple>,
    tails: HashMap<(usize, usize), Vec<usize>>,
    heads: HashMap<(usize, usize), Vec<usize>>,
}

impl FilterIndex {
    pub fn build(train: &[Triple], valid: &[Triple], test: &[Triple]) -> Self {
        let train_set: HashSet<Triple> = train.iter().copied().collect();
        let mut all = train_set.clone();
        all.extend(valid.iter().copied());
        all.extend(test.iter().copied());

        let mut sorted: Vec<Triple> = all.iter().copied().collect();
        sorted.sort_unstable();
        let mut tails: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut heads: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for t in &sorted {
            tails.entry((t.head, t.relation)).or_default().push(t.tail);
            heads.entry((t.relation, t.tail)).or_default().push(t.head);
        }
        for v in heads.values_mut() {
            v.sort_unstable();
        }
        Self {
            train: train_set,
            all,
            tails,
            heads,
        }
    }

    pub fn contains(&self, t: &Triple, scope: Scope) -> bool {
        match scope {
            Scope::TrainOnly => self.train.contains(t),
            Scope::AllSplits => self.all.contains(t),
        }
    }

    /// Every entity completing `query` into a known triple of any split,
    /// sorted ascending. Unknown keys give an empty slice.
    pub fn candidate_filter(&self, query: Query) -> &[usize] {
        let found = match query {
            Query::Tails { head, relation } => self.tails.get(&(head, relation)),
            Query::Heads { relation, tail } => self.heads.get(&(relation, tail)),
        };
        found.map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn num_distinct(&self) -> usize {
        self.all.len()
    }

    /// Iterator over the `(head, relation)` keys of the tail view.
    pub fn tail_keys(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.tails.keys().copied()
    }
}

/// Which split files to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Splits {
    pub train: bool,
    pub valid: bool,
    pub test: bool,
}

impl Splits {
    pub const ALL: Splits = Splits {
        train: true,
        valid: true,
        test: true,
    };
    pub const TRAIN_ONLY: Splits = Splits {
        train: true,
        valid: false,
        test: false,
    };
}

/// Named split of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.txt",
            Split::Valid => "valid.txt",
            Split::Test => "test.txt",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!(
                "unknown split `{other}` (expected train, valid or test)"
            ))),
        }
    }
}

/// Summary of a load: per-split counts and names that never occur in train.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub num_entities: usize,
    pub num_relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub unseen_entities: Vec<String>,
    pub unseen_relations: Vec<String>,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entities = {}", self.num_entities)?;
        writeln!(f, "relations = {}", self.num_relations)?;
        writeln!(f, "train = {}", self.train)?;
        writeln!(f, "valid = {}", self.valid)?;
        writeln!(f, "test = {}", self.test)?;
        writeln!(f, "entities_not_in_train = {}", self.unseen_entities.len())?;
        for name in &self.unseen_entities {
            writeln!(f, "  entity {name}")?;
        }
        writeln!(
            f,
            "relations_not_in_train = {}",
            self.unseen_relations.len()
        )?;
        for name in &self.unseen_relations {
            writeln!(f, "  relation {name}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct KgDataset {
    pub entities: Vocab,
    pub relations: Vocab,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub filter: FilterIndex,
    pub report: LoadReport,
}

impl KgDataset {
    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// Number of original relations; the substitution relation is not counted.
    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Builds a dataset from already indexed triples, naming entities `e<i>`
    /// and relations `r<i>`.
    pub fn from_indexed(
        num_entities: usize,
        num_relations: usize,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        let entities = Vocab::from_names((0..num_entities).map(|i| format!("e{i}")).collect());
        let relations = Vocab::from_names((0..num_relations).map(|i| format!("r{i}")).collect());
        Self::assemble(entities, relations, train, valid, test)
    }

    /// Builds a dataset from indexed triples over the given vocabularies.
    pub fn with_vocab(
        entity_names: Vec<String>,
        relation_names: Vec<String>,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        let entities = Vocab::from_names(entity_names);
        let relations = Vocab::from_names(relation_names);
        if entities.index.len() != entities.len() || relations.index.len() != relations.len() {
            return Err(Error::Config("vocabulary names must be unique".into()));
        }
        let in_range = |t: &Triple| {
            t.head < entities.len() && t.tail < entities.len() && t.relation < relations.len()
        };
        if !train.iter().chain(&valid).chain(&test).all(in_range) {
            return Err(Error::Config("triple index outside the vocabulary".into()));
        }
        Ok(Self::assemble(entities, relations, train, valid, test))
    }

    /// Builds a dataset from named triples with first-appearance indexing.
    pub fn from_named(
        train: &[(&str, &str, &str)],
        valid: &[(&str, &str, &str)],
        test: &[(&str, &str, &str)],
    ) -> Self {
        let mut entities = Vocab::default();
        let mut relations = Vocab::default();
        let mut encode = |rows: &[(&str, &str, &str)]| -> Vec<Triple> {
            rows.iter()
                .map(|(h, r, t)| {
                    let h = entities.intern(h);
                    let r = relations.intern(r);
                    let t = entities.intern(t);
                    Triple::new(h, r, t)
                })
                .collect()
        };
        let train = encode(train);
        let valid = encode(valid);
        let test = encode(test);
        Self::assemble(entities, relations, train, valid, test)
    }

    fn assemble(
        entities: Vocab,
        relations: Vocab,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        let filter = FilterIndex::build(&train, &valid, &test);
        let report = build_report(&entities, &relations, &train, &valid, &test);
        Self {
            entities,
            relations,
            train,
            valid,
            test,
            filter,
            report,
        }
    }

    /// Writes the three split files with textual names, plus dictionary
    /// files pinning the index assignment.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (file, vocab) in [
            ("entities.dict", &self.entities),
            ("relations.dict", &self.relations),
        ] {
            let mut out = String::new();
            for (i, name) in vocab.names().iter().enumerate() {
                out.push_str(&format!("{i}\t{name}\n"));
            }
            let path = dir.join(file);
            fs::write(&path, out).map_err(|e| Error::io(path, e))?;
        }
        for split in [Split::Train, Split::Valid, Split::Test] {
            let mut out = String::new();
            for t in self.split(split) {
                out.push_str(self.entities.name(t.head).unwrap_or_default());
                out.push('\t');
                out.push_str(self.relations.name(t.relation).unwrap_or_default());
                out.push('\t');
                out.push_str(self.entities.name(t.tail).unwrap_or_default());
                out.push('\n');
            }
            let path = dir.join(split.file_name());
            fs::write(&path, out).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

fn build_report(
    entities: &Vocab,
    relations: &Vocab,
    train: &[Triple],
    valid: &[Triple],
    test: &[Triple],
) -> LoadReport {
    let mut ent_seen = vec![false; entities.len()];
    let mut rel_seen = vec![false; relations.len()];
    for t in train {
        ent_seen[t.head] = true;
        ent_seen[t.tail] = true;
        rel_seen[t.relation] = true;
    }
    let mut ent_used = vec![false; entities.len()];
    let mut rel_used = vec![false; relations.len()];
    for t in valid.iter().chain(test) {
        ent_used[t.head] = true;
        ent_used[t.tail] = true;
        rel_used[t.relation] = true;
    }
    let unseen_entities = (0..entities.len())
        .filter(|&i| ent_used[i] && !ent_seen[i])
        .filter_map(|i| entities.name(i).map(str::to_owned))
        .collect();
    let unseen_relations = (0..relations.len())
        .filter(|&i| rel_used[i] && !rel_seen[i])
        .filter_map(|i| relations.name(i).map(str::to_owned))
        .collect();
    LoadReport {
        num_entities: entities.len(),
        num_relations: relations.len(),
        train: train.len(),
        valid: valid.len(),
        test: test.len(),
        unseen_entities,
        unseen_relations,
    }
}

type NamedRow = (String, String, String, usize);

fn read_split(path: &Path) -> Result<Vec<NamedRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut seen: HashMap<(String, String, String), usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Format {
                path: path.to_owned(),
                line: lineno,
                message: format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.iter().filter(|f| !f.is_empty()).count()
                ),
            });
        }
        let key = (
            fields[0].to_owned(),
            fields[1].to_owned(),
            fields[2].to_owned(),
        );
        if let Some(first) = seen.get(&key) {
            return Err(Error::Format {
                path: path.to_owned(),
                line: lineno,
                message: format!("duplicate triple (first seen on line {first})"),
            });
        }
        seen.insert(key.clone(), lineno);
        rows.push((key.0, key.1, key.2, lineno));
    }
    Ok(rows)
}

fn read_dict(path: &Path) -> Result<Option<Vocab>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries: Vec<(usize, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Format {
            path: path.to_owned(),
            line: i + 1,
            message,
        };
        let (idx, name) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected `index<TAB>name`".into()))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad index `{idx}`")))?;
        entries.push((idx, name.trim().to_owned(), i + 1));
    }
    entries.sort_by_key(|e| e.0);
    let mut names = Vec::with_capacity(entries.len());
    let mut taken = HashSet::new();
    for (pos, (idx, name, line)) in entries.into_iter().enumerate() {
        if idx != pos {
            return Err(Error::Format {
                path: path.to_owned(),
                line,
                message: format!("indices must be dense from 0; expected {pos}, found {idx}"),
            });
        }
        if !taken.insert(name.clone()) {
            return Err(Error::Format {
                path: path.to_owned(),
                line,
                message: format!("name `{name}` listed twice"),
            });
        }
        names.push(name);
    }
    Ok(Some(Vocab::from_names(names)))
}

/// Loads the selected split files of `dir` into a fully indexed dataset.
///
/// Unselected splits are left empty. A selected split with no triples is an
/// error, as is a line without exactly three tab-separated fields or a
/// repeated line.
pub fn load_dataset(dir: &Path, splits: Splits) -> Result<KgDataset> {
    let ent_dict = read_dict(&dir.join("entities.dict"))?;
    let rel_dict = read_dict(&dir.join("relations.dict"))?;
    let fixed_entities = ent_dict.is_some();
    let fixed_relations = rel_dict.is_some();
    let mut entities = ent_dict.unwrap_or_default();
    let mut relations = rel_dict.unwrap_or_default();

    let mut encoded: [Vec<Triple>; 3] = Default::default();
    let selected = [
        (Split::Train, splits.train),
        (Split::Valid, splits.valid),
        (Split::Test, splits.test),
    ];
    for (slot, (split, wanted)) in selected.into_iter().enumerate() {
        if !wanted {
            continue;
        }
        let path = dir.join(split.file_name());
        let rows = read_split(&path)?;
        if rows.is_empty() {
            return Err(Error::EmptySplit(path.display().to_string()));
        }
        let mut out = Vec::with_capacity(rows.len());
        for (h, r, t, line) in rows {
            let lookup = |vocab: &mut Vocab, fixed: bool, name: &str, kind: &str| {
                if fixed {
                    vocab.get(name).ok_or_else(|| Error::Format {
                        path: path.clone(),
                        line,
                        message: format!("{kind} `{name}` missing from dictionary"),
                    })
                } else {
                    Ok(vocab.intern(name))
                }
            };
            let h = lookup(&mut entities, fixed_entities, &h, "entity")?;
            let r = lookup(&mut relations, fixed_relations, &r, "relation")?;
            let t = lookup(&mut entities, fixed_entities, &t, "entity")?;
            out.push(Triple::new(h, r, t));
        }
        encoded[slot] = out;
    }
    let [train, valid, test] = encoded;
    Ok(KgDataset::assemble(entities, relations, train, valid, test))
}
