use super::{kmeans_with, laplacian, smallest_eigenpairs_with, EigenOptions, KMeansOptions};
use crate::corpus::CooccurrenceGraph;
use crate::{Error, Result};

pub fn spectral_partition(
    graph: &CooccurrenceGraph,
    items: &[usize],
    parts: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    spectral_partition_with(
        graph,
        items,
        parts,
        seed,
        &EigenOptions::default(),
        &KMeansOptions::default(),
    )
}

/// One level of normalized spectral clustering.
///
/// Items are embedded by the rows of the `parts` smallest Laplacian
/// eigenvectors, each row scaled to unit length, and grouped by k-means.
/// Parts come back ordered by their smallest item; empty parts are dropped.
pub fn spectral_partition_with(
    graph: &CooccurrenceGraph,
    items: &[usize],
    parts: usize,
    seed: u64,
    eigen: &EigenOptions,
    km: &KMeansOptions,
) -> Result<Vec<Vec<usize>>> {
    if parts == 0 || parts > items.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} items into {parts} parts",
            items.len()
        )));
    }
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    if parts == 1 {
        return Ok(vec![sorted]);
    }
    if parts == sorted.len() {
        return Ok(sorted.into_iter().map(|i| vec![i]).collect());
    }

    let l = laplacian(graph, &sorted);
    let eig = smallest_eigenpairs_with(&l, parts, eigen)?;
    let embedding: Vec<Vec<f64>> = (0..sorted.len())
        .map(|r| {
            let row: Vec<f64> = eig.vectors.iter().map(|v| v[r]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.into_iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let clustering = kmeans_with(&embedding, parts, seed, km)?;

    // labels are numbered by first appearance over ascending items, so
    // grouping by label already orders parts by their smallest item
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); parts];
    for (&item, &label) in sorted.iter().zip(&clustering.labels) {
        out[label].push(item);
    }
    out.retain(|p| !p.is_empty());
    Ok(out)
}
