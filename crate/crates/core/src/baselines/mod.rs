//! Single-signal reference methods: k-means on features alone and spectral
//! modularity maximization on the graph alone.

pub mod kmeans;
pub mod spectral;

pub use kmeans::{kmeans, kmeans_best_of, KMeansResult};
pub use spectral::{
    greedy_refine, modularity_eigenpairs, modularity_matmul, modularity_matvec,
    spectral_modularity, EigenOptions, Eigenpairs,
};
