//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::path::PathBuf;

use itemid::corpus::{Corpus, CooccurrenceGraph, ItemMeta};
use itemid::tokenization::{load_unigram_model, SegmenterModel, TokenId};
use itemid::trie::NextToken;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Small piece table with hand-set scores standing in for the T5 vocabulary.
pub fn fixture_model() -> SegmenterModel {
    load_unigram_model(data_path("t5_fixture.tsv")).expect("fixture loads")
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Normalized Laplacian of a weighted edge list, built from the definition.
pub fn dense_laplacian(n: usize, edges: &[(usize, usize, u32)]) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; n]; n];
    for &(a, b, x) in edges {
        w[a][b] += x as f64;
        w[b][a] += x as f64;
    }
    let deg: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                l[i][j] = 1.0;
            } else if deg[i] > 0.0 && deg[j] > 0.0 {
                l[i][j] = -w[i][j] / (deg[i] * deg[j]).sqrt();
            }
        }
    }
    l
}

pub fn random_edges(rng: &mut impl Rng, n: usize, p: f64, max_w: u32) -> Vec<(usize, usize, u32)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b, rng.random_range(1..=max_w)));
            }
        }
    }
    edges
}

pub fn clique(nodes: &[usize], w: u32) -> Vec<(usize, usize, u32)> {
    let mut out = Vec::new();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            out.push((a.min(b), a.max(b), w));
        }
    }
    out
}

/// Connected components by BFS, each sorted, ordered by smallest node.
pub fn components(n: usize, edges: &[(usize, usize, u32)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    q.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// `{t : some id extends prefix by t}`, plus End when prefix is an id.
pub fn brute_allowed(ids: &[Vec<TokenId>], prefix: &[TokenId]) -> BTreeSet<NextToken> {
    let mut out = BTreeSet::new();
    for id in ids {
        if id.starts_with(prefix) {
            match id.get(prefix.len()) {
                Some(&t) => {
                    out.insert(NextToken::Token(t));
                }
                None => {
                    out.insert(NextToken::End);
                }
            }
        }
    }
    out
}

/// Every segmentation of `text` into pieces of `table`, as piece lists.
pub fn all_segmentations(table: &BTreeMap<String, f64>, text: &[char]) -> Vec<Vec<String>> {
    if text.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for l in 1..=text.len() {
        let head: String = text[..l].iter().collect();
        if table.contains_key(&head) {
            for mut rest in all_segmentations(table, &text[l..]) {
                rest.insert(0, head.clone());
                out.push(rest);
            }
        }
    }
    out
}

const WORDS: &[&str] = &[
    "soap", "cream", "gel", "oil", "mask", "serum", "lotion", "balm", "tonic", "scrub", "mist", "wash",
];
const CATEGORY_NAMES: &[&str] = &[
    "Eyes", "Lips", "Face", "Skin Care", "Makeup", "Hair", "Nails", "Tools", "Fragrance", "Bath",
];

fn random_title(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n)
        .map(|_| *WORDS.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(if rng.random_bool(0.1) { "  " } else { " " })
}

fn random_path(rng: &mut impl Rng) -> Vec<String> {
    let depth = rng.random_range(1..=4);
    let mut p = vec!["Beauty".to_string()];
    p.extend((0..depth).map(|_| CATEGORY_NAMES.choose(rng).expect("non-empty").to_string()));
    p
}

/// Synthetic corpus with locality: users draw items from a window around a
/// random centre; leftover items are covered by short filler users. Every
/// item gets a title (duplicates likely) and usually a category path.
pub fn random_corpus(rng: &mut impl Rng, n_items: usize) -> Corpus {
    let n_users = (n_items / 4).max(2);
    let window = 30.min(n_items);
    let mut seqs: Vec<(String, Vec<String>)> = Vec::new();
    let mut covered = vec![false; n_items];
    for u in 0..n_users {
        let centre = rng.random_range(0..n_items);
        let len = rng.random_range(1..=12);
        let seq: Vec<String> = (0..len)
            .map(|_| {
                let i = (centre + rng.random_range(0..window)) % n_items;
                covered[i] = true;
                format!("it{i}")
            })
            .collect();
        seqs.push((format!("u{u}"), seq));
    }
    let mut rest: Vec<usize> = (0..n_items).filter(|&i| !covered[i]).collect();
    rest.shuffle(rng);
    for (c, chunk) in rest.chunks(5).enumerate() {
        seqs.push((format!("f{c}"), chunk.iter().map(|i| format!("it{i}")).collect()));
    }
    let corpus = Corpus::from_sequences(seqs).expect("non-empty corpus");
    let meta = corpus
        .items()
        .iter()
        .map(|item| {
            let paths = match rng.random_range(0..20) {
                0 => vec![],
                1 => vec![random_path(rng), random_path(rng)],
                _ => vec![random_path(rng)],
            };
            (
                item.clone(),
                ItemMeta {
                    title: Some(random_title(rng)),
                    category_paths: paths,
                },
            )
        })
        .collect();
    corpus.with_metadata(meta)
}

/// Two disjoint populations of `items` items on a ring each; every user
/// draws about 20 items from a window of 50 around a random centre within
/// its own population. Items are named `a*` and `b*`.
pub fn two_population_corpus(rng: &mut impl Rng, items: usize, users: usize) -> Corpus {
    let mut seqs = Vec::new();
    for pop in ["a", "b"] {
        for u in 0..users {
            let centre = rng.random_range(0..items);
            let len = rng.random_range(15..=25);
            let seq: Vec<String> = (0..len)
                .map(|_| format!("{pop}{}", (centre + rng.random_range(0..50)) % items))
                .collect();
            seqs.push((format!("{pop}-user{u}"), seq));
        }
    }
    Corpus::from_sequences(seqs).expect("non-empty corpus")
}

pub fn graph_from(n: usize, edges: &[(usize, usize, u32)]) -> CooccurrenceGraph {
    CooccurrenceGraph::with_nodes(n, edges).expect("valid graph")
}

pub fn distinct(v: &[Vec<TokenId>]) -> bool {
    let mut seen = HashSet::new();
    v.iter().all(|x| seen.insert(x))
}
