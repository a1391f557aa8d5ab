//! Interaction ingest, leave-one-out splitting, user orderings and the item
//! co-occurrence graph.
//!
//! Items and users are interned to dense indices in order of first
//! appearance in the interaction file ("ingest order"). Every downstream
//! structure refers to items by that index.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub timestamp: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub title: Option<String>,
    /// Root-to-leaf category name lists.
    pub category_paths: Vec<Vec<String>>,
}

/// One user's interactions, stably sorted by timestamp.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSequence {
    pub user: String,
    pub items: Vec<usize>,
    pub timestamps: Vec<u64>,
}

impl UserSequence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Length of the training prefix under the leave-one-out split.
    pub fn train_len(&self) -> usize {
        if self.items.len() >= 3 {
            self.items.len() - 2
        } else {
            self.items.len()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CorpusData {
    items: Vec<String>,
    sequences: Vec<UserSequence>,
    metadata: BTreeMap<String, ItemMeta>,
}

/// Per-user interaction sequences plus item metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "CorpusData", into = "CorpusData")]
pub struct Corpus {
    items: Vec<String>,
    item_index: HashMap<String, usize>,
    sequences: Vec<UserSequence>,
    metadata: BTreeMap<String, ItemMeta>,
}

impl From<CorpusData> for Corpus {
    fn from(data: CorpusData) -> Self {
        let item_index = index_of(&data.items);
        Corpus {
            items: data.items,
            item_index,
            sequences: data.sequences,
            metadata: data.metadata,
        }
    }
}

impl From<Corpus> for CorpusData {
    fn from(c: Corpus) -> Self {
        CorpusData {
            items: c.items,
            sequences: c.sequences,
            metadata: c.metadata,
        }
    }
}

fn index_of(items: &[String]) -> HashMap<String, usize> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect()
}

impl Corpus {
    /// Build a corpus from interactions in file order.
    ///
    /// Users keep the order of their first interaction; each sequence is
    /// stably sorted by timestamp, so equal timestamps keep input order.
    /// Repeated interactions are retained.
    pub fn from_interactions<I>(interactions: I) -> Result<Corpus>
    where
        I: IntoIterator<Item = Interaction>,
    {
        let mut items = Vec::new();
        let mut item_index = HashMap::new();
        let mut user_index: HashMap<String, usize> = HashMap::new();
        let mut sequences: Vec<UserSequence> = Vec::new();

        for it in interactions {
            if it.user.is_empty() || it.item.is_empty() {
                return Err(Error::InvalidArgument(
                    "user and item ids must be non-empty".into(),
                ));
            }
            let item = *item_index.entry(it.item.clone()).or_insert_with(|| {
                items.push(it.item.clone());
                items.len() - 1
            });
            let u = *user_index.entry(it.user.clone()).or_insert_with(|| {
                sequences.push(UserSequence {
                    user: it.user.clone(),
                    items: Vec::new(),
                    timestamps: Vec::new(),
                });
                sequences.len() - 1
            });
            sequences[u].items.push(item);
            sequences[u].timestamps.push(it.timestamp);
        }
        if sequences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for seq in &mut sequences {
            let mut pairs: Vec<(u64, usize)> = seq
                .timestamps
                .iter()
                .copied()
                .zip(seq.items.iter().copied())
                .collect();
            pairs.sort_by_key(|&(ts, _)| ts);
            seq.timestamps = pairs.iter().map(|p| p.0).collect();
            seq.items = pairs.iter().map(|p| p.1).collect();
        }
        Ok(Corpus {
            items,
            item_index,
            sequences,
            metadata: BTreeMap::new(),
        })
    }

    /// Build a corpus from already-ordered sequences. Timestamps are a
    /// running counter, so the given user order is also the time order.
    pub fn from_sequences<U, S, I>(sequences: I) -> Result<Corpus>
    where
        U: AsRef<str>,
        S: AsRef<str>,
        I: IntoIterator<Item = (U, Vec<S>)>,
    {
        let mut ts = 0u64;
        let mut interactions = Vec::new();
        for (user, seq) in sequences {
            for item in seq {
                interactions.push(Interaction {
                    user: user.as_ref().to_string(),
                    item: item.as_ref().to_string(),
                    timestamp: ts,
                });
                ts += 1;
            }
        }
        Corpus::from_interactions(interactions)
    }

    pub fn with_metadata(mut self, metadata: BTreeMap<String, ItemMeta>) -> Self {
        self.metadata = metadata;
        self
    }

    /// All items in ingest order.
    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn item_name(&self, idx: usize) -> &str {
        &self.items[idx]
    }

    pub fn item_idx(&self, name: &str) -> Option<usize> {
        self.item_index.get(name).copied()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_users(&self) -> usize {
        self.sequences.len()
    }

    pub fn num_interactions(&self) -> usize {
        self.sequences.iter().map(UserSequence::len).sum()
    }

    pub fn sequences(&self) -> &[UserSequence] {
        &self.sequences
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.sequences.iter().map(|s| s.user.as_str())
    }

    pub fn metadata(&self) -> &BTreeMap<String, ItemMeta> {
        &self.metadata
    }

    pub fn meta(&self, item: &str) -> Option<&ItemMeta> {
        self.metadata.get(item)
    }

    /// Item names of a user's full sequence.
    pub fn sequence_names(&self, user: usize) -> Vec<&str> {
        self.sequences[user]
            .items
            .iter()
            .map(|&i| self.items[i].as_str())
            .collect()
    }
}

fn parse_interaction(line: &str) -> std::result::Result<Interaction, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(format!(
            "expected 3 tab-separated fields (user, item, timestamp), found {}",
            fields.len()
        ));
    }
    let (user, item) = (fields[0].trim(), fields[1].trim());
    if user.is_empty() || item.is_empty() {
        return Err("empty user or item id".into());
    }
    let timestamp = fields[2]
        .trim()
        .parse::<u64>()
        .map_err(|e| format!("bad timestamp {:?}: {e}", fields[2]))?;
    Ok(Interaction {
        user: user.to_string(),
        item: item.to_string(),
        timestamp,
    })
}

/// Read `user<TAB>item<TAB>timestamp` lines. Blank lines are skipped.
pub fn load_interactions(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut interactions = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        interactions.push(parse_interaction(line).map_err(|m| Error::parse(path, n + 1, m))?);
    }
    Corpus::from_interactions(interactions)
}

#[derive(Deserialize)]
struct MetaLine {
    item: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    categories: Vec<Vec<String>>,
}

/// Read item metadata from JSON lines
/// `{"item": str, "title": str|null, "categories": [[str, ...], ...]}`.
pub fn load_metadata(path: impl AsRef<Path>) -> Result<BTreeMap<String, ItemMeta>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MetaLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, n + 1, e.to_string()))?;
        if rec.item.is_empty() {
            return Err(Error::parse(path, n + 1, "empty item id"));
        }
        if rec.categories.iter().any(Vec::is_empty) {
            return Err(Error::parse(path, n + 1, "empty category path"));
        }
        out.insert(
            rec.item,
            ItemMeta {
                title: rec.title,
                category_paths: rec.categories,
            },
        );
    }
    Ok(out)
}

/// Leave-one-out split. Vectors are aligned with the corpus user order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCorpus {
    pub items: Vec<String>,
    pub users: Vec<String>,
    pub train: Vec<Vec<usize>>,
    pub validation: Vec<Option<usize>>,
    pub test: Vec<Option<usize>>,
}

impl SplitCorpus {
    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    fn user_pos(&self, user: &str) -> Option<usize> {
        self.users.iter().position(|u| u == user)
    }

    pub fn train_of(&self, user: &str) -> Option<&[usize]> {
        self.user_pos(user).map(|u| self.train[u].as_slice())
    }

    pub fn validation_target(&self, user: &str) -> Option<usize> {
        self.user_pos(user).and_then(|u| self.validation[u])
    }

    pub fn test_target(&self, user: &str) -> Option<usize> {
        self.user_pos(user).and_then(|u| self.test[u])
    }
}

/// Last item to test, second-to-last to validation, the rest to train.
/// Users with fewer than three interactions go entirely to train.
pub fn leave_one_out_split(corpus: &Corpus) -> SplitCorpus {
    let mut split = SplitCorpus {
        items: corpus.items.clone(),
        users: Vec::with_capacity(corpus.num_users()),
        train: Vec::with_capacity(corpus.num_users()),
        validation: Vec::with_capacity(corpus.num_users()),
        test: Vec::with_capacity(corpus.num_users()),
    };
    for seq in &corpus.sequences {
        let l = seq.items.len();
        split.users.push(seq.user.clone());
        if l >= 3 {
            split.train.push(seq.items[..l - 2].to_vec());
            split.validation.push(Some(seq.items[l - 2]));
            split.test.push(Some(seq.items[l - 1]));
        } else {
            split.train.push(seq.items.clone());
            split.validation.push(None);
            split.test.push(None);
        }
    }
    split
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserOrdering {
    /// Earliest first interaction first.
    TimeSensitive,
    /// Seeded uniform shuffle.
    Random(u64),
    ShortToLong,
    LongToShort,
}

impl std::str::FromStr for UserOrdering {
    type Err = Error;

    /// Parses `tso`, `s2lo`, `l2so`; `ro` yields `Random(0)` and expects the
    /// caller to substitute the real seed.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tso" => Ok(UserOrdering::TimeSensitive),
            "ro" => Ok(UserOrdering::Random(0)),
            "s2lo" => Ok(UserOrdering::ShortToLong),
            "l2so" => Ok(UserOrdering::LongToShort),
            other => Err(Error::InvalidArgument(format!(
                "unknown user ordering {other:?} (expected tso, ro, s2lo or l2so)"
            ))),
        }
    }
}

/// Permutation of user indices. Sort-based orderings break ties by input order.
pub fn order_users(corpus: &Corpus, ordering: UserOrdering) -> Vec<usize> {
    let mut order: Vec<usize> = (0..corpus.num_users()).collect();
    let seqs = &corpus.sequences;
    match ordering {
        UserOrdering::TimeSensitive => {
            order.sort_by_key(|&u| seqs[u].timestamps.first().copied().unwrap_or(u64::MAX))
        }
        UserOrdering::Random(s) => order.shuffle(&mut seed::rng(s)),
        UserOrdering::ShortToLong => order.sort_by_key(|&u| seqs[u].train_len()),
        UserOrdering::LongToShort => {
            order.sort_by_key(|&u| std::cmp::Reverse(seqs[u].train_len()))
        }
    }
    order
}

/// Weighted undirected item graph; weight = number of users whose training
/// sequence contains both endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct CooccurrenceGraph {
    items: Vec<String>,
    adjacency: Vec<Vec<(usize, u32)>>,
}

impl CooccurrenceGraph {
    /// Graph over `items` from explicit edges. Repeated pairs accumulate.
    pub fn from_edges(items: Vec<String>, edges: &[(usize, usize, u32)]) -> Result<Self> {
        let n = items.len();
        let mut acc: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for &(a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a},{b}) out of range")));
            }
            if w == 0 {
                continue;
            }
            *acc.entry((a.min(b), a.max(b))).or_insert(0) += w;
        }
        Ok(Self::from_pairs(items, acc))
    }

    /// Unnamed nodes `0..n`.
    pub fn with_nodes(n: usize, edges: &[(usize, usize, u32)]) -> Result<Self> {
        Self::from_edges((0..n).map(|i| i.to_string()).collect(), edges)
    }

    fn from_pairs(items: Vec<String>, pairs: BTreeMap<(usize, usize), u32>) -> Self {
        let mut adjacency = vec![Vec::new(); items.len()];
        for ((a, b), w) in pairs {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        CooccurrenceGraph { items, adjacency }
    }

    pub fn num_nodes(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, u32)] {
        &self.adjacency[node]
    }

    pub fn weight(&self, a: usize, b: usize) -> u32 {
        let row = &self.adjacency[a];
        row.binary_search_by_key(&b, |&(n, _)| n)
            .map(|i| row[i].1)
            .unwrap_or(0)
    }

    pub fn weighted_degree(&self, node: usize) -> u64 {
        self.adjacency[node].iter().map(|&(_, w)| u64::from(w)).sum()
    }

    /// Edges with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, row)| {
            row.iter()
                .filter(move |&&(b, _)| a < b)
                .map(move |&(b, w)| (a, b, w))
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| u64::from(w)).sum()
    }
}

/// Co-occurrence graph over every item of the split (items seen only in
/// validation/test become isolated nodes).
pub fn build_cooccurrence_graph(split: &SplitCorpus) -> CooccurrenceGraph {
    let mut pairs: HashMap<(usize, usize), u32> = HashMap::new();
    let mut distinct = Vec::new();
    for train in &split.train {
        distinct.clear();
        distinct.extend_from_slice(train);
        distinct.sort_unstable();
        distinct.dedup();
        for (i, &a) in distinct.iter().enumerate() {
            for &b in &distinct[i + 1..] {
                *pairs.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    CooccurrenceGraph::from_pairs(split.items.clone(), pairs.into_iter().collect())
}
