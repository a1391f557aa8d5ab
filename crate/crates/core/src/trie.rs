//! Prefix trie over item IDs, for constrained decoding and exact lookup.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::indexing::IndexAssignment;
use crate::tokenization::{Token, TokenId};
use crate::{Error, Result};

/// One entry of an allowed-next-token mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NextToken {
    Token(TokenId),
    /// The prefix is itself a complete ID.
    End,
}

#[derive(Clone, Debug, Default)]
struct TrieNode {
    children: BTreeMap<TokenId, usize>,
    terminal: Option<usize>,
}

/// Immutable after construction; node 0 is the root.
#[derive(Clone, Debug)]
pub struct PrefixTrie {
    nodes: Vec<TrieNode>,
    items: Vec<String>,
    tokens: BTreeMap<TokenId, Token>,
}

impl Default for PrefixTrie {
    fn default() -> Self {
        PrefixTrie {
            nodes: vec![TrieNode::default()],
            items: Vec::new(),
            tokens: BTreeMap::new(),
        }
    }
}

impl PrefixTrie {
    /// Trie over raw token-id sequences; item `i` is `ids[i]`.
    pub fn from_ids<S: AsRef<[TokenId]>>(ids: &[S]) -> Result<Self> {
        let mut trie = PrefixTrie::default();
        for (i, id) in ids.iter().enumerate() {
            trie.insert(id.as_ref(), i.to_string())?;
        }
        Ok(trie)
    }

    fn insert(&mut self, id: &[TokenId], item: String) -> Result<()> {
        let mut node = 0;
        for &t in id {
            node = match self.nodes[node].children.get(&t) {
                Some(&c) => c,
                None => {
                    let c = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children.insert(t, c);
                    c
                }
            };
        }
        if let Some(prev) = self.nodes[node].terminal {
            return Err(Error::DuplicateId {
                first: self.items[prev].clone(),
                second: item,
            });
        }
        self.nodes[node].terminal = Some(self.items.len());
        self.items.push(item);
        Ok(())
    }

    /// Nodes including the root.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.items.len()
    }

    fn walk(&self, prefix: &[TokenId]) -> Option<usize> {
        prefix
            .iter()
            .try_fold(0, |node, t| self.nodes[node].children.get(t).copied())
    }

    /// Tokens that extend `prefix` towards some stored ID, plus
    /// [`NextToken::End`] when `prefix` is itself an ID. Unknown prefixes
    /// give an empty set.
    pub fn allowed_next(&self, prefix: &[TokenId]) -> BTreeSet<NextToken> {
        let Some(node) = self.walk(prefix) else {
            return BTreeSet::new();
        };
        let node = &self.nodes[node];
        let mut out: BTreeSet<NextToken> = node.children.keys().map(|&t| NextToken::Token(t)).collect();
        if node.terminal.is_some() {
            out.insert(NextToken::End);
        }
        out
    }

    /// Index of the item whose ID is exactly `id`.
    pub fn lookup(&self, id: &[TokenId]) -> Option<usize> {
        self.walk(id).and_then(|n| self.nodes[n].terminal)
    }

    /// Name of the item whose ID is exactly `id`.
    pub fn lookup_item(&self, id: &[TokenId]) -> Option<&str> {
        self.lookup(id).map(|i| self.items[i].as_str())
    }

    /// Token behind an id, when the trie was built from an assignment.
    pub fn token(&self, id: TokenId) -> Option<&Token> {
        self.tokens.get(&id)
    }
}

/// Trie over every ID of `assignment`; lookups return indices into
/// `assignment.items`.
pub fn build_trie(assignment: &IndexAssignment) -> Result<PrefixTrie> {
    let mut trie = PrefixTrie::default();
    for (item, id) in assignment.items.iter().zip(&assignment.ids) {
        let raw: Vec<TokenId> = id.iter().map(|t| t.id).collect();
        trie.insert(&raw, item.clone())?;
        for t in id {
            trie.tokens.entry(t.id).or_insert_with(|| t.clone());
        }
    }
    Ok(trie)
}

/// Examples of prefix conflicts kept in a report.
pub const MAX_PREFIX_EXAMPLES: usize = 20;

/// Assignments up to this size are checked pairwise.
pub const BRUTE_FORCE_LIMIT: usize = 10_000;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub unique: bool,
    pub prefix_free: bool,
    /// `(first item with the ID, later item with the same ID)`.
    pub collisions: Vec<(String, String)>,
    /// Number of `(a, b)` pairs where `a`'s ID is a proper prefix of `b`'s.
    pub prefix_conflicts: usize,
    /// Some of those pairs.
    pub prefix_examples: Vec<(String, String)>,
}

struct Findings {
    collisions: Vec<(usize, usize)>,
    prefix_conflicts: usize,
    prefix_examples: Vec<(usize, usize)>,
}

fn note_prefix(f: &mut Findings, short: usize, long: usize) {
    f.prefix_conflicts += 1;
    if f.prefix_examples.len() < MAX_PREFIX_EXAMPLES {
        f.prefix_examples.push((short, long));
    }
}

fn pairwise(ids: &[Vec<TokenId>]) -> Findings {
    let mut f = Findings {
        collisions: Vec::new(),
        prefix_conflicts: 0,
        prefix_examples: Vec::new(),
    };
    let mut duplicate = vec![false; ids.len()];
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            let (a, b) = (&ids[i], &ids[j]);
            if a == b {
                if !duplicate[j] && !duplicate[i] {
                    f.collisions.push((i, j));
                }
                duplicate[j] = true;
            } else if b.starts_with(a) {
                note_prefix(&mut f, i, j);
            } else if a.starts_with(b) {
                note_prefix(&mut f, j, i);
            }
        }
    }
    f.collisions.sort_by_key(|&(_, j)| j);
    f
}

fn trie_walk(ids: &[Vec<TokenId>]) -> Findings {
    #[derive(Default)]
    struct Node {
        children: BTreeMap<TokenId, usize>,
        terminals: Vec<usize>,
    }
    let mut nodes = vec![Node::default()];
    for (i, id) in ids.iter().enumerate() {
        let mut n = 0;
        for &t in id {
            n = match nodes[n].children.get(&t) {
                Some(&c) => c,
                None => {
                    nodes.push(Node::default());
                    let c = nodes.len() - 1;
                    nodes[n].children.insert(t, c);
                    c
                }
            };
        }
        nodes[n].terminals.push(i);
    }

    let mut f = Findings {
        collisions: Vec::new(),
        prefix_conflicts: 0,
        prefix_examples: Vec::new(),
    };
    // depth-first, carrying the terminals of all proper ancestors
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
    while let Some((n, above)) = stack.pop() {
        let here = &nodes[n].terminals;
        for &long in here {
            for &short in &above {
                note_prefix(&mut f, short, long);
            }
        }
        if let Some((&first, rest)) = here.split_first() {
            f.collisions.extend(rest.iter().map(|&j| (first, j)));
        }
        let mut next = above;
        next.extend_from_slice(here);
        for &c in nodes[n].children.values() {
            stack.push((c, next.clone()));
        }
    }
    f.collisions.sort_by_key(|&(_, j)| j);
    f
}

/// Check that every ID is distinct, and whether no ID is a proper prefix of
/// another.
pub fn verify_assignment(assignment: &IndexAssignment) -> VerifyReport {
    let ids: Vec<Vec<TokenId>> = assignment
        .ids
        .iter()
        .map(|id| id.iter().map(|t| t.id).collect())
        .collect();
    let f = if ids.len() <= BRUTE_FORCE_LIMIT {
        pairwise(&ids)
    } else {
        trie_walk(&ids)
    };
    let name = |i: usize| assignment.items[i].clone();
    VerifyReport {
        unique: f.collisions.is_empty(),
        prefix_free: f.collisions.is_empty() && f.prefix_conflicts == 0,
        collisions: f.collisions.iter().map(|&(a, b)| (name(a), name(b))).collect(),
        prefix_conflicts: f.prefix_conflicts,
        prefix_examples: f.prefix_examples.iter().map(|&(a, b)| (name(a), name(b))).collect(),
    }
}
