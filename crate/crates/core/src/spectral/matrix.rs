use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::corpus::CooccurrenceGraph;

/// Sparse symmetric matrix. Rows hold both triangles so a product needs no
/// transposition; `(i, j)` and `(j, i)` always agree.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSymMatrix {
    /// Build from upper-triangle entries `(i, j, value)` with `i <= j`.
    /// Entries given twice are summed.
    pub fn from_upper(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut acc: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n];
        for &(i, j, v) in entries {
            let (i, j) = (i.min(j), i.max(j));
            assert!(j < n, "entry ({i},{j}) out of range for dimension {n}");
            assert!(v.is_finite(), "non-finite matrix entry");
            *acc[i].entry(j).or_insert(0.0) += v;
            if i != j {
                *acc[j].entry(i).or_insert(0.0) += v;
            }
        }
        let rows = acc
            .into_iter()
            .map(|row| {
                let mut r: Vec<(usize, f64)> = row.into_iter().collect();
                r.sort_unstable_by_key(|&(j, _)| j);
                r
            })
            .collect();
        SparseSymMatrix { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| row[k].1)
            .unwrap_or(0.0)
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(&self.rows) {
            *yi = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Symmetric normalized Laplacian `I - D^{-1/2} A D^{-1/2}` of the subgraph
/// induced by `items`; row/column `r` corresponds to `items[r]`.
///
/// Degrees are taken inside the subgraph. A node with no neighbours in the
/// subset gets an identity row.
pub fn laplacian(graph: &CooccurrenceGraph, items: &[usize]) -> SparseSymMatrix {
    let local: HashMap<usize, usize> = items.iter().enumerate().map(|(r, &i)| (i, r)).collect();
    let inner = |i: usize| {
        graph
            .neighbors(i)
            .iter()
            .filter_map(|&(j, w)| local.get(&j).map(|&c| (c, f64::from(w))))
    };
    let degree: Vec<f64> = items.iter().map(|&i| inner(i).map(|(_, w)| w).sum()).collect();

    let mut entries = Vec::new();
    for (r, &i) in items.iter().enumerate() {
        entries.push((r, r, 1.0));
        if degree[r] == 0.0 {
            continue;
        }
        for (c, w) in inner(i) {
            if r < c {
                entries.push((r, c, -w / (degree[r] * degree[c]).sqrt()));
            }
        }
    }
    SparseSymMatrix::from_upper(items.len(), &entries)
}
