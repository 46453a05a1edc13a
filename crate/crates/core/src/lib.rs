//! Semidefinite relaxations of the Gromov–Hausdorff distance between finite
//! metric spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`metric`]: finite (pseudo)metric spaces, graph metrics, ε-nets.
//! * [`distortion`]: the distortion tensor `Γ_{ij,i'j'} = |d_X(i,i') − d_Y(j,j')|`.
//! * [`eigen`], [`sdp`]: symmetric eigendecomposition and a first-order
//!   conic solver for the lifted programs.
//! * [`relaxed`]: the GH / Reg / Sur feasible sets, relaxed distances,
//!   rounding and the composition certificate.
//! * [`ghmatch`]: the projected augmented-Lagrangian matcher, giving a hard
//!   correspondence and a GH upper bound.
//! * [`oracle`]: brute-force exact values for small instances.
//!
//! All modules share the flattening convention `(i, j) → i·m + j` for pairs
//! of points `x_i ∈ X`, `y_j ∈ Y` with `|Y| = m`.

pub mod assignment;
pub mod distortion;
pub mod eigen;
pub mod ghmatch;
pub mod matching;
pub mod metric;
pub mod oracle;
pub mod relaxed;
pub mod sdp;

pub use distortion::DistortionTensor;
pub use ghmatch::{gh_match, GhMatchConfig, GhMatchResult};
pub use oracle::{exact_gh, exact_gh_bijective, exact_gh_p_rank1, OracleResult};
pub use matching::{distortion_of_matching, Matching};
pub use metric::{FiniteMetricSpace, MetricError, SimpleGraph};
pub use relaxed::{
    relaxed_distance, relaxed_distance_inf, FeasibleSetKind, RelaxedDistanceResult,
};
pub use sdp::{SdpSolution, SolverConfig, SolverStatus};
