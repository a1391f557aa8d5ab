//! Spectral clustering machinery for collaborative indexing.
//!
//! The pieces compose bottom-up: [`laplacian`] builds the symmetric
//! normalized Laplacian of an item subgraph, [`smallest_eigenpairs`] embeds
//! the items, [`kmeans`] groups the embedding, [`spectral_partition`] wraps
//! one level of that, and [`build_cluster_tree`] recurses until every final
//! cluster holds at most `k` items.

mod eigen;
mod kmeans;
mod matrix;
mod partition;
mod tree;

pub use eigen::{
    dense_smallest_eigenpairs, lanczos_smallest_eigenpairs, smallest_eigenpairs,
    smallest_eigenpairs_with, EigenOptions, Eigenpairs,
};
pub use kmeans::{kmeans, kmeans_with, Clustering, KMeansOptions};
pub use matrix::{laplacian, SparseSymMatrix};
pub use partition::{spectral_partition, spectral_partition_with};
pub use tree::{build_cluster_tree, build_cluster_tree_with, ClusterNode, ClusterTree, NodeId};
