//! Item-ID schemes.
//!
//! Every builder returns an [`IndexAssignment`]: one non-empty token
//! sequence per item, pairwise distinct. Tree-based schemes (collaborative
//! and semantic) share the breadth-first token assignment defined here.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{leave_one_out_split, order_users, Corpus, CooccurrenceGraph, ItemMeta, UserOrdering};
use crate::seed;
use crate::spectral::{build_cluster_tree_with, ClusterNode, ClusterTree, EigenOptions, NodeId};
use crate::tokenization::{
    escape_whitespace, render_tokens, SegmenterModel, Token, TokenKind, TokenRegistry,
};
use crate::{Error, Result};

/// First integer handed out by sequential indexing.
pub const SID_START: u64 = 1001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeMode {
    /// Same category name at different places gets different tokens.
    Tree,
    /// One token per bare category name.
    NonTree,
}

impl std::str::FromStr for TreeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tree" => Ok(TreeMode::Tree),
            "non-tree" | "nontree" | "non_tree" => Ok(TreeMode::NonTree),
            other => Err(Error::InvalidArgument(format!(
                "unknown semid mode {other:?} (expected tree or non-tree)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HidOrder {
    SemIdFirst,
    CidFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HidVariant {
    SidIid,
    CidIid,
    SemIdIid,
    SemIdCid(HidOrder),
}

impl std::str::FromStr for HidVariant {
    type Err = Error;

    /// `sid+iid`, `cid+iid`, `semid+iid` or `semid+cid` (order defaults to
    /// SemID first).
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sid+iid" => Ok(HidVariant::SidIid),
            "cid+iid" => Ok(HidVariant::CidIid),
            "semid+iid" => Ok(HidVariant::SemIdIid),
            "semid+cid" => Ok(HidVariant::SemIdCid(HidOrder::SemIdFirst)),
            "cid+semid" => Ok(HidVariant::SemIdCid(HidOrder::CidFirst)),
            other => Err(Error::InvalidArgument(format!("unknown hid variant {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Rid,
    Tid,
    Iid,
    Sid,
    Cid,
    SemId,
    Hid(HidVariant),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Rid => f.write_str("rid"),
            Scheme::Tid => f.write_str("tid"),
            Scheme::Iid => f.write_str("iid"),
            Scheme::Sid => f.write_str("sid"),
            Scheme::Cid => f.write_str("cid"),
            Scheme::SemId => f.write_str("semid"),
            Scheme::Hid(HidVariant::SidIid) => f.write_str("hid:sid+iid"),
            Scheme::Hid(HidVariant::CidIid) => f.write_str("hid:cid+iid"),
            Scheme::Hid(HidVariant::SemIdIid) => f.write_str("hid:semid+iid"),
            Scheme::Hid(HidVariant::SemIdCid(HidOrder::SemIdFirst)) => f.write_str("hid:semid+cid"),
            Scheme::Hid(HidVariant::SemIdCid(HidOrder::CidFirst)) => f.write_str("hid:cid+semid"),
        }
    }
}

/// Parameters a scheme was built with.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub branching: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordering: Option<UserOrdering>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_mode: Option<TreeMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hid: Option<HidVariant>,
}

impl IndexParams {
    fn merge(&self, other: &IndexParams) -> IndexParams {
        IndexParams {
            seed: self.seed.or(other.seed),
            branching: self.branching.or(other.branching),
            k: self.k.or(other.k),
            ordering: self.ordering.or(other.ordering),
            tree_mode: self.tree_mode.or(other.tree_mode),
            hid: self.hid.or(other.hid),
        }
    }
}

/// Item → token sequence under one scheme.
#[derive(Clone, Debug)]
pub struct IndexAssignment {
    pub scheme: Scheme,
    /// Indexed items, in ingest order.
    pub items: Vec<String>,
    /// `ids[i]` is the ID of `items[i]`.
    pub ids: Vec<Vec<Token>>,
    pub params: IndexParams,
    /// Sequential indexing: items that never occur in any training sequence.
    pub cold: Vec<String>,
    /// Cluster or category tree behind CID / SemID.
    pub tree: Option<ClusterTree>,
}

impl IndexAssignment {
    fn new(scheme: Scheme, items: Vec<String>, ids: Vec<Vec<Token>>, params: IndexParams) -> Self {
        IndexAssignment {
            scheme,
            items,
            ids,
            params,
            cold: Vec::new(),
            tree: None,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn position(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item)
    }

    pub fn id_of(&self, item: &str) -> Option<&[Token]> {
        self.position(item).map(|p| self.ids[p].as_slice())
    }

    /// Extra tokens used by this assignment, in registry order.
    pub fn extra_tokens(&self) -> Vec<Token> {
        let mut seen = HashSet::new();
        let mut out: Vec<Token> = self
            .ids
            .iter()
            .flatten()
            .filter(|t| t.is_extra() && seen.insert(t.id))
            .cloned()
            .collect();
        out.sort_by_key(|t| t.id);
        out
    }

    /// `item<TAB>tok1 tok2 ...` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (item, id) in self.items.iter().zip(&self.ids) {
            out.push_str(item);
            out.push('\t');
            out.push_str(&render_tokens(id));
            out.push('\n');
        }
        out
    }

    /// Vocabulary additions: an init header, then one `<label>` per line.
    pub fn vocab_additions(&self) -> String {
        let mut out = String::from("#init=random\n");
        for t in self.extra_tokens() {
            out.push_str(&t.render());
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_tsv())
    }

    pub fn write_vocab(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.vocab_additions())
    }

    /// Parse an ID map, interning its tokens into `registry`.
    pub fn from_tsv(text: &str, scheme: Scheme, registry: &mut TokenRegistry) -> Result<Self> {
        let mut items = Vec::new();
        let mut ids = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (item, toks) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("<map>", n + 1, "expected item<TAB>tokens"))?;
            let id = toks
                .split_whitespace()
                .map(|t| {
                    TokenKind::parse_rendered(t)
                        .and_then(|k| registry.intern(&k))
                        .map_err(|e| Error::parse("<map>", n + 1, e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            if id.is_empty() {
                return Err(Error::parse("<map>", n + 1, "empty ID"));
            }
            items.push(item.to_string());
            ids.push(id);
        }
        Ok(IndexAssignment::new(scheme, items, ids, IndexParams::default()))
    }

    pub fn read_tsv(path: impl AsRef<Path>, scheme: Scheme, registry: &mut TokenRegistry) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text, scheme, registry).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::parse(path, line, message),
            other => other,
        })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

fn segment_all<'a>(
    model: &SegmenterModel,
    texts: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<Vec<Token>>> {
    texts.into_iter().map(|t| model.segment(t)).collect()
}

/// Random indexing: distinct integers from `[1, 10·n]`, segmented.
pub fn index_rid(items: &[String], seed: u64, model: &SegmenterModel) -> Result<IndexAssignment> {
    let numbers = random_numbers(items.len(), seed);
    let texts: Vec<String> = numbers.iter().map(u64::to_string).collect();
    let ids = segment_all(model, texts.iter().map(String::as_str))?;
    Ok(IndexAssignment::new(
        Scheme::Rid,
        items.to_vec(),
        ids,
        IndexParams {
            seed: Some(seed),
            ..IndexParams::default()
        },
    ))
}

/// The integers behind [`index_rid`].
pub fn random_numbers(n: usize, seed: u64) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    let mut rng = seed::rng(seed);
    rand::seq::index::sample(&mut rng, 10 * n, n)
        .into_iter()
        .map(|x| x as u64 + 1)
        .collect()
}

/// Collapse whitespace runs and trim.
pub fn normalize_title(title: &str) -> String {
    title.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized, de-duplicated titles: later copies of a title get ` (n)`.
pub fn unique_titles(items: &[String], metadata: &BTreeMap<String, ItemMeta>) -> Result<Vec<String>> {
    let mut missing = Vec::new();
    let mut normalized = Vec::with_capacity(items.len());
    for item in items {
        let t = metadata
            .get(item)
            .and_then(|m| m.title.as_deref())
            .map(normalize_title)
            .unwrap_or_default();
        if t.is_empty() {
            missing.push(item.clone());
        }
        normalized.push(t);
    }
    if !missing.is_empty() {
        return Err(Error::MissingTitle(missing));
    }
    let mut used: HashSet<String> = HashSet::new();
    let mut out = Vec::with_capacity(items.len());
    for t in normalized {
        let mut candidate = t.clone();
        let mut n = 2;
        while used.contains(&candidate) {
            candidate = format!("{t} ({n})");
            n += 1;
        }
        used.insert(candidate.clone());
        out.push(candidate);
    }
    Ok(out)
}

/// Title indexing. Spaces become word-boundary markers before segmentation.
pub fn index_tid(
    items: &[String],
    metadata: &BTreeMap<String, ItemMeta>,
    model: &SegmenterModel,
) -> Result<IndexAssignment> {
    let titles = unique_titles(items, metadata)?;
    let escaped: Vec<String> = titles.iter().map(|t| escape_whitespace(t)).collect();
    let ids = segment_all(model, escaped.iter().map(String::as_str))?;
    Ok(IndexAssignment::new(Scheme::Tid, items.to_vec(), ids, IndexParams::default()))
}

/// Independent indexing: item `n` gets `<IIDn>`.
pub fn index_iid(items: &[String], registry: &mut TokenRegistry) -> Result<IndexAssignment> {
    let ids = (0..items.len())
        .map(|n| registry.register_extra(&format!("IID{n}")).map(|t| vec![t]))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexAssignment::new(Scheme::Iid, items.to_vec(), ids, IndexParams::default()))
}

/// Sequential integers per item (aligned with `corpus.items()`), and the
/// items that received them without occurring in any training sequence.
pub fn sequential_numbers(corpus: &Corpus, ordering: UserOrdering) -> (Vec<u64>, Vec<usize>) {
    let split = leave_one_out_split(corpus);
    let mut numbers: Vec<Option<u64>> = vec![None; corpus.num_items()];
    let mut next = SID_START;
    for u in order_users(corpus, ordering) {
        for &item in &split.train[u] {
            if numbers[item].is_none() {
                numbers[item] = Some(next);
                next += 1;
            }
        }
    }
    let mut cold = Vec::new();
    for u in order_users(corpus, UserOrdering::TimeSensitive) {
        for &item in &corpus.sequences()[u].items {
            if numbers[item].is_none() {
                numbers[item] = Some(next);
                next += 1;
                cold.push(item);
            }
        }
    }
    let numbers = numbers
        .into_iter()
        .map(|n| n.expect("every corpus item occurs in some sequence"))
        .collect();
    (numbers, cold)
}

/// Sequential indexing over training sequences in the chosen user order.
pub fn index_sid(corpus: &Corpus, ordering: UserOrdering, model: &SegmenterModel) -> Result<IndexAssignment> {
    let (numbers, cold) = sequential_numbers(corpus, ordering);
    let texts: Vec<String> = numbers.iter().map(u64::to_string).collect();
    let ids = segment_all(model, texts.iter().map(String::as_str))?;
    let mut a = IndexAssignment::new(
        Scheme::Sid,
        corpus.items().to_vec(),
        ids,
        IndexParams {
            ordering: Some(ordering),
            ..IndexParams::default()
        },
    );
    a.cold = cold.into_iter().map(|i| corpus.item_name(i).to_string()).collect();
    Ok(a)
}

/// Label non-root nodes breadth-first with `<0>..<k-1>`, cycling, and the
/// items of each node with `<0>, <1>, ...` in item order.
pub fn assign_tokens_to_tree(tree: &mut ClusterTree, k: usize, registry: &mut TokenRegistry) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    for (id, node) in tree.nodes.iter().enumerate() {
        if node.children.len() > k {
            return Err(Error::Structure(format!(
                "node {id} has {} children but only {k} tokens are available",
                node.children.len()
            )));
        }
        if node.items.len() > k {
            return Err(Error::Structure(format!(
                "node {id} holds {} items but only {k} tokens are available",
                node.items.len()
            )));
        }
    }
    for (n, id) in tree.bfs().into_iter().enumerate() {
        tree.nodes[id].token = Some(registry.register_extra(&(n % k).to_string())?);
    }
    assign_leaf_tokens(tree, registry)
}

fn assign_leaf_tokens(tree: &mut ClusterTree, registry: &mut TokenRegistry) -> Result<()> {
    for node in &mut tree.nodes {
        node.items.sort_unstable();
        node.item_tokens = (0..node.items.len())
            .map(|i| registry.register_extra(&i.to_string()))
            .collect::<Result<_>>()?;
    }
    Ok(())
}

/// Item → ancestor tokens (root excluded) followed by the leaf token.
pub fn tree_item_ids(tree: &ClusterTree) -> Result<BTreeMap<usize, Vec<Token>>> {
    let mut out = BTreeMap::new();
    for (item, (path, pos)) in tree.item_paths() {
        let mut id = Vec::with_capacity(path.len() + 1);
        for &node in &path {
            let tok = tree.nodes[node]
                .token
                .clone()
                .ok_or_else(|| Error::Structure(format!("node {node} has no token")))?;
            id.push(tok);
        }
        let owner: NodeId = path.last().copied().unwrap_or(0);
        let leaf = tree.nodes[owner]
            .item_tokens
            .get(pos)
            .cloned()
            .ok_or_else(|| Error::Structure(format!("item {item} has no leaf token")))?;
        id.push(leaf);
        out.insert(item, id);
    }
    Ok(out)
}

pub fn index_cid(
    graph: &CooccurrenceGraph,
    branching: usize,
    k: usize,
    seed: u64,
    registry: &mut TokenRegistry,
) -> Result<IndexAssignment> {
    index_cid_with(graph, branching, k, seed, registry, &EigenOptions::default())
}

/// Collaborative indexing over the spectral cluster tree.
pub fn index_cid_with(
    graph: &CooccurrenceGraph,
    branching: usize,
    k: usize,
    seed: u64,
    registry: &mut TokenRegistry,
    eigen: &EigenOptions,
) -> Result<IndexAssignment> {
    let mut tree = build_cluster_tree_with(graph, branching, k, seed, eigen)?;
    assign_tokens_to_tree(&mut tree, k, registry)?;
    let by_item = tree_item_ids(&tree)?;
    let ids = (0..graph.num_nodes())
        .map(|i| {
            by_item
                .get(&i)
                .cloned()
                .ok_or_else(|| Error::Structure(format!("item {i} missing from cluster tree")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut a = IndexAssignment::new(
        Scheme::Cid,
        graph.items().to_vec(),
        ids,
        IndexParams {
            seed: Some(seed),
            branching: Some(branching),
            k: Some(k),
            ..IndexParams::default()
        },
    );
    a.tree = Some(tree);
    Ok(a)
}

/// Longest category path, ties broken lexicographically.
fn chosen_path(meta: Option<&ItemMeta>) -> Option<&Vec<String>> {
    meta?
        .category_paths
        .iter()
        .filter(|p| !p.is_empty())
        .min_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)))
}

fn sanitize(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join("_")
}

const UNKNOWN: &str = "Unknown";

/// Category tree over `items`, with items attached to the node at the end of
/// their chosen path. A dataset-wide root category is dropped.
pub fn build_category_tree(items: &[String], metadata: &BTreeMap<String, ItemMeta>) -> ClusterTree {
    let paths: Vec<Option<&Vec<String>>> = items.iter().map(|i| chosen_path(metadata.get(i))).collect();
    let mut firsts = paths.iter().flatten().map(|p| &p[0]);
    let strip = match firsts.next() {
        Some(first) => firsts.all(|f| f == first),
        None => false,
    };

    let mut tree = ClusterTree::default();
    // path key → node; the synthetic unknown node uses a key no real path can have
    let mut nodes: HashMap<Vec<String>, NodeId> = HashMap::new();
    for (item, path) in paths.into_iter().enumerate() {
        let names: Vec<(String, String)> = match path {
            Some(p) => {
                let p = if strip { &p[1..] } else { &p[..] };
                p.iter().map(|n| (n.clone(), n.clone())).collect()
            }
            None => vec![(format!("\u{0}{UNKNOWN}"), UNKNOWN.to_string())],
        };
        let mut key = Vec::new();
        let mut node = 0;
        for (k, display) in names {
            key.push(k);
            node = match nodes.get(&key) {
                Some(&id) => id,
                None => {
                    let id = tree.add_child(
                        node,
                        ClusterNode {
                            name: Some(display),
                            ..ClusterNode::default()
                        },
                    );
                    nodes.insert(key.clone(), id);
                    id
                }
            };
        }
        tree.nodes[node].items.push(item);
    }
    tree.sort_children();
    tree
}

/// Semantic indexing over the item category hierarchy.
pub fn index_semid(
    items: &[String],
    metadata: &BTreeMap<String, ItemMeta>,
    mode: TreeMode,
    registry: &mut TokenRegistry,
) -> Result<IndexAssignment> {
    let mut tree = build_category_tree(items, metadata);

    let order = tree.bfs();
    let mut places: HashMap<String, Vec<NodeId>> = HashMap::new();
    let mut by_creation = order.clone();
    by_creation.sort_unstable();
    for &id in &by_creation {
        let name = sanitize(tree.nodes[id].name.as_deref().unwrap_or(UNKNOWN));
        places.entry(name).or_default().push(id);
    }
    for id in order {
        let name = sanitize(tree.nodes[id].name.as_deref().unwrap_or(UNKNOWN));
        let label = match mode {
            TreeMode::NonTree => name,
            TreeMode::Tree => {
                let at = &places[&name];
                if at.len() > 1 {
                    let n = at.iter().position(|&x| x == id).expect("node listed") + 1;
                    format!("{name}{n}")
                } else {
                    name
                }
            }
        };
        tree.nodes[id].token = Some(registry.register_extra(&label)?);
    }
    assign_leaf_tokens(&mut tree, registry)?;

    let by_item = tree_item_ids(&tree)?;
    let mut ids: Vec<Vec<Token>> = (0..items.len()).map(|i| by_item[&i].clone()).collect();
    widen_leaf_counters(&mut ids, registry)?;

    let mut a = IndexAssignment::new(
        Scheme::SemId,
        items.to_vec(),
        ids,
        IndexParams {
            tree_mode: Some(mode),
            ..IndexParams::default()
        },
    );
    a.tree = Some(tree);
    Ok(a)
}

/// When two IDs coincide, renumber leaf tokens per distinct non-leaf token
/// sequence instead of per tree node.
fn widen_leaf_counters(ids: &mut [Vec<Token>], registry: &mut TokenRegistry) -> Result<()> {
    let mut seen = HashSet::new();
    if ids.iter().all(|id| seen.insert(id.clone())) {
        return Ok(());
    }
    let mut counters: HashMap<Vec<Token>, usize> = HashMap::new();
    for id in ids.iter_mut() {
        let prefix = id[..id.len() - 1].to_vec();
        let c = counters.entry(prefix).or_insert(0);
        *id.last_mut().expect("non-empty id") = registry.register_extra(&c.to_string())?;
        *c += 1;
    }
    Ok(())
}

fn aligned<'a>(reference: &IndexAssignment, other: &'a IndexAssignment) -> Result<Vec<&'a [Token]>> {
    if reference.len() != other.len() {
        return Err(Error::ItemSetMismatch);
    }
    let pos: HashMap<&str, usize> = other.items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    reference
        .items
        .iter()
        .map(|item| {
            pos.get(item.as_str())
                .map(|&p| other.ids[p].as_slice())
                .ok_or(Error::ItemSetMismatch)
        })
        .collect()
}

fn without_leaf(id: &[Token]) -> &[Token] {
    &id[..id.len().saturating_sub(1)]
}

/// Hybrid IDs.
///
/// For the `+IID` variants `first` is the base scheme and `second` the IID
/// assignment; SID keeps its full ID, CID and SemID drop their leaf token.
/// For SemID+CID, `first` is SemID and `second` CID: the SemID leaf token is
/// dropped and the CID leaf kept, in the configured order.
pub fn compose_hid(
    variant: HidVariant,
    first: &IndexAssignment,
    second: &IndexAssignment,
) -> Result<IndexAssignment> {
    let other = aligned(first, second)?;
    let ids = first
        .ids
        .iter()
        .zip(other)
        .map(|(a, b)| match variant {
            HidVariant::SidIid => [a.as_slice(), b].concat(),
            HidVariant::CidIid | HidVariant::SemIdIid => [without_leaf(a), b].concat(),
            HidVariant::SemIdCid(HidOrder::SemIdFirst) => [without_leaf(a), b].concat(),
            HidVariant::SemIdCid(HidOrder::CidFirst) => [b, without_leaf(a)].concat(),
        })
        .collect();
    let mut params = first.params.merge(&second.params);
    params.hid = Some(variant);
    Ok(IndexAssignment::new(Scheme::Hid(variant), first.items.clone(), ids, params))
}
