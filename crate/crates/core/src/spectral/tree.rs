//! Recursive spectral cluster tree.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{spectral_partition_with, EigenOptions, KMeansOptions};
use crate::corpus::CooccurrenceGraph;
use crate::seed;
use crate::tokenization::Token;
use crate::{Error, Result};

pub type NodeId = usize;

/// A tree node. Final clusters have items and no children; the root has no
/// token. `name` is only used by category trees.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClusterNode {
    pub children: Vec<NodeId>,
    pub items: Vec<usize>,
    pub token: Option<Token>,
    /// Leaf tokens, aligned with `items`.
    pub item_tokens: Vec<Token>,
    pub name: Option<String>,
}

impl ClusterNode {
    pub fn is_final(&self) -> bool {
        self.children.is_empty()
    }
}

/// Arena tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterTree {
    pub nodes: Vec<ClusterNode>,
}

impl Default for ClusterTree {
    fn default() -> Self {
        ClusterTree {
            nodes: vec![ClusterNode::default()],
        }
    }
}

pub const ROOT: NodeId = 0;

impl ClusterTree {
    pub fn root(&self) -> &ClusterNode {
        &self.nodes[ROOT]
    }

    pub fn add_child(&mut self, parent: NodeId, node: ClusterNode) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(node);
        self.nodes[parent].children.push(id);
        id
    }

    /// Final clusters in depth-first order.
    pub fn final_clusters(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![ROOT];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.is_final() {
                if !node.items.is_empty() {
                    out.push(id);
                }
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    /// Non-root nodes in breadth-first order, children in stored order.
    pub fn bfs(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut queue: VecDeque<NodeId> = self.nodes[ROOT].children.iter().copied().collect();
        while let Some(id) = queue.pop_front() {
            out.push(id);
            queue.extend(self.nodes[id].children.iter().copied());
        }
        out
    }

    /// For each item: the non-root nodes from the top down to its final
    /// cluster, and its position within that cluster.
    pub fn item_paths(&self) -> BTreeMap<usize, (Vec<NodeId>, usize)> {
        let mut out = BTreeMap::new();
        let mut stack: Vec<(NodeId, Vec<NodeId>)> = vec![(ROOT, Vec::new())];
        while let Some((id, path)) = stack.pop() {
            let node = &self.nodes[id];
            for (pos, &item) in node.items.iter().enumerate() {
                out.insert(item, (path.clone(), pos));
            }
            for &c in &node.children {
                let mut p = path.clone();
                p.push(c);
                stack.push((c, p));
            }
        }
        out
    }

    /// Number of non-root levels.
    pub fn depth(&self) -> usize {
        fn go(t: &ClusterTree, id: NodeId) -> usize {
            t.nodes[id]
                .children
                .iter()
                .map(|&c| 1 + go(t, c))
                .max()
                .unwrap_or(0)
        }
        go(self, ROOT)
    }

    pub fn num_items(&self) -> usize {
        self.nodes.iter().map(|n| n.items.len()).sum()
    }

    fn min_item(&self, id: NodeId) -> usize {
        let node = &self.nodes[id];
        node.items
            .iter()
            .copied()
            .chain(node.children.iter().map(|&c| self.min_item(c)))
            .min()
            .unwrap_or(usize::MAX)
    }

    /// Sort every child list by smallest contained item.
    pub fn sort_children(&mut self) {
        for id in 0..self.nodes.len() {
            let mut children = std::mem::take(&mut self.nodes[id].children);
            children.sort_by_key(|&c| self.min_item(c));
            self.nodes[id].children = children;
        }
    }

    /// Nested `{token, children}` / `{token, items}` JSON.
    pub fn to_json(&self, item_names: &[String]) -> Value {
        fn go(t: &ClusterTree, id: NodeId, names: &[String]) -> Value {
            let node = &t.nodes[id];
            let mut obj = serde_json::Map::new();
            obj.insert(
                "token".into(),
                node.token.as_ref().map_or(Value::Null, |tk| json!(tk.render())),
            );
            if let Some(name) = &node.name {
                obj.insert("name".into(), json!(name));
            }
            if !node.items.is_empty() || node.is_final() {
                let items: Vec<Value> = node
                    .items
                    .iter()
                    .enumerate()
                    .map(|(pos, &i)| {
                        json!({
                            "item": names.get(i).cloned().unwrap_or_else(|| i.to_string()),
                            "token": node.item_tokens.get(pos).map(Token::render),
                        })
                    })
                    .collect();
                obj.insert("items".into(), Value::Array(items));
            }
            if !node.is_final() {
                let children = node.children.iter().map(|&c| go(t, c, names)).collect();
                obj.insert("children".into(), Value::Array(children));
            }
            Value::Object(obj)
        }
        go(self, ROOT, item_names)
    }
}

enum Subtree {
    Final(Vec<usize>),
    Internal(Vec<Subtree>),
}

impl Subtree {
    fn min_item(&self) -> usize {
        match self {
            Subtree::Final(items) => items.iter().copied().min().unwrap_or(usize::MAX),
            Subtree::Internal(ch) => ch.iter().map(Subtree::min_item).min().unwrap_or(usize::MAX),
        }
    }

    fn size(&self) -> usize {
        match self {
            Subtree::Final(items) => items.len(),
            Subtree::Internal(ch) => ch.iter().map(Subtree::size).sum(),
        }
    }
}

struct Builder<'a> {
    graph: &'a CooccurrenceGraph,
    branching: usize,
    max_final: usize,
    seed: u64,
    eigen: &'a EigenOptions,
    kmeans: KMeansOptions,
}

impl Builder<'_> {
    fn cluster(&self, items: Vec<usize>) -> Result<Subtree> {
        if items.len() <= self.max_final {
            return Ok(Subtree::Final(items));
        }
        let parts = self.branching.min(items.len());
        let node_seed = seed::derive_indexed(self.seed, "cid.kmeans", items[0] as u64);
        let mut split = spectral_partition_with(
            self.graph,
            &items,
            parts,
            node_seed,
            self.eigen,
            &self.kmeans,
        )?;
        if split.len() < 2 {
            split = balanced_split(&items, parts);
        }
        let children = split
            .into_par_iter()
            .map(|part| self.cluster(part))
            .collect::<Result<Vec<_>>>()?;
        Ok(Subtree::Internal(children))
    }
}

/// Contiguous chunks of nearly equal size.
fn balanced_split(items: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let base = items.len() / parts;
    let extra = items.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

fn components(graph: &CooccurrenceGraph, nodes: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; graph.num_nodes()];
    let mut out = Vec::new();
    for &start in nodes {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in graph.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub fn build_cluster_tree(
    graph: &CooccurrenceGraph,
    branching: usize,
    max_final: usize,
    seed: u64,
) -> Result<ClusterTree> {
    build_cluster_tree_with(graph, branching, max_final, seed, &EigenOptions::default())
}

/// Recursive spectral clustering into a tree whose final clusters hold at
/// most `max_final` items and whose clustering nodes have at most
/// `branching` children.
///
/// Isolated items are packed, in item order, into their own final
/// clusters; every connected component is then clustered separately. When
/// that leaves the root with more than `branching` children, the smallest
/// ones are gathered under grouping nodes of at most `max_final` children.
/// A spectral step that fails to split its input falls back to contiguous
/// equal-size chunks. A root with a single child absorbs it.
pub fn build_cluster_tree_with(
    graph: &CooccurrenceGraph,
    branching: usize,
    max_final: usize,
    seed: u64,
    eigen: &EigenOptions,
) -> Result<ClusterTree> {
    if branching < 2 {
        return Err(Error::Constraint(format!("N must be at least 2, got {branching}")));
    }
    if branching > max_final {
        return Err(Error::Constraint(format!(
            "N ({branching}) must not exceed k ({max_final})"
        )));
    }
    let n = graph.num_nodes();
    let (isolated, connected): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| graph.neighbors(i).is_empty());

    let builder = Builder {
        graph,
        branching,
        max_final,
        seed,
        eigen,
        kmeans: KMeansOptions::default(),
    };
    let mut top: Vec<Subtree> = isolated
        .chunks(max_final)
        .map(|c| Subtree::Final(c.to_vec()))
        .collect();
    let comps = components(graph, &connected);
    let built = comps
        .into_par_iter()
        .map(|c| builder.cluster(c))
        .collect::<Result<Vec<_>>>()?;
    top.extend(built);
    top.sort_by_key(Subtree::min_item);

    while top.len() > branching {
        let take = max_final.min(top.len() - branching + 1);
        let mut by_size: Vec<usize> = (0..top.len()).collect();
        by_size.sort_by_key(|&i| (top[i].size(), top[i].min_item()));
        let mut picked: Vec<usize> = by_size[..take].to_vec();
        picked.sort_unstable_by(|a, b| b.cmp(a));
        let mut group: Vec<Subtree> = picked.into_iter().map(|i| top.remove(i)).collect();
        group.sort_by_key(Subtree::min_item);
        top.push(Subtree::Internal(group));
        top.sort_by_key(Subtree::min_item);
    }

    let root = if top.len() == 1 {
        top.pop().expect("one child")
    } else {
        Subtree::Internal(top)
    };
    let mut tree = ClusterTree::default();
    match root {
        Subtree::Final(items) => tree.nodes[ROOT].items = items,
        Subtree::Internal(children) => {
            for c in children {
                attach(&mut tree, ROOT, c);
            }
        }
    }
    tree.sort_children();
    Ok(tree)
}

fn attach(tree: &mut ClusterTree, parent: NodeId, sub: Subtree) {
    match sub {
        Subtree::Final(items) => {
            tree.add_child(
                parent,
                ClusterNode {
                    items,
                    ..ClusterNode::default()
                },
            );
        }
        Subtree::Internal(children) => {
            let id = tree.add_child(parent, ClusterNode::default());
            for c in children {
                attach(tree, id, c);
            }
        }
    }
}
