//! Experiment harness for `ghrelax`: file loading, triangle-mesh geodesics
//! and sampling, pairwise distance matrices, nearest-neighbour
//! classification, a synthetic labelled benchmark and the command line.

pub mod classify;
pub mod cli;
pub mod input;
pub mod mesh;
pub mod pairwise;
pub mod synthetic;

pub use classify::{nearest_neighbor_classify, ClassificationReport};
pub use mesh::{mesh_geodesic_metric, sample_vertices, MeshGraph, SampleMode};
pub use pairwise::{pairwise_distance_matrix, DistanceMatrix, Method, PairwiseConfig};
pub use synthetic::{synthetic_benchmark, SyntheticConfig};
