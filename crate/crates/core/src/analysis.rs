//! Metrics over ID assignments.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::CooccurrenceGraph;
use crate::indexing::IndexAssignment;
use crate::spectral::ClusterTree;
use crate::tokenization::Token;
use crate::{Error, Result};

/// Fewest positive-weight pairs for which a correlation is reported.
pub const MIN_PAIRS: usize = 10;

/// Mean number of tokens per ID.
pub fn avg_id_length(assignment: &IndexAssignment) -> Result<f64> {
    if assignment.is_empty() {
        return Err(Error::InvalidArgument("average ID length of an empty assignment".into()));
    }
    let total: usize = assignment.ids.iter().map(Vec::len).sum();
    Ok(total as f64 / assignment.len() as f64)
}

pub fn common_prefix_len(a: &[Token], b: &[Token]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x.id == y.id).count()
}

/// Length of the longest common prefix of two items' IDs.
pub fn shared_prefix_len(assignment: &IndexAssignment, a: &str, b: &str) -> Result<usize> {
    let id = |x: &str| assignment.id_of(x).ok_or_else(|| Error::UnknownItem(x.to_string()));
    Ok(common_prefix_len(id(a)?, id(b)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    /// One of the series was constant; `rho` is then reported as 0.
    pub degenerate: bool,
    pub pairs: usize,
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman's rho, or `None` when either series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    if x.is_empty() {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Rank correlation between co-occurrence weight and shared-prefix length
/// over all positive-weight item pairs of `graph`.
pub fn overlap_cooccurrence_correlation(
    assignment: &IndexAssignment,
    graph: &CooccurrenceGraph,
) -> Result<Correlation> {
    let pos: HashMap<&str, usize> = assignment
        .items
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let index = graph
        .items()
        .iter()
        .map(|name| {
            pos.get(name.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownItem(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let edges: Vec<(usize, usize, u32)> = graph.edges().filter(|&(_, _, w)| w > 0).collect();
    if edges.len() < MIN_PAIRS {
        return Err(Error::InsufficientPairs {
            needed: MIN_PAIRS,
            found: edges.len(),
        });
    }
    let (weights, shared): (Vec<f64>, Vec<f64>) = edges
        .par_iter()
        .map(|&(a, b, w)| {
            let s = common_prefix_len(&assignment.ids[index[a]], &assignment.ids[index[b]]);
            (w as f64, s as f64)
        })
        .unzip();
    Ok(match spearman(&weights, &shared) {
        Some(rho) => Correlation {
            rho,
            degenerate: false,
            pairs: edges.len(),
        },
        None => Correlation {
            rho: 0.0,
            degenerate: true,
            pairs: edges.len(),
        },
    })
}

/// Cluster size → number of tree nodes holding that many items directly.
pub fn cluster_size_histogram(tree: &ClusterTree) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for node in &tree.nodes {
        if !node.items.is_empty() {
            *h.entry(node.items.len()).or_insert(0) += 1;
        }
    }
    h
}
