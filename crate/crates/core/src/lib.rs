//! Certified two-sided bounds on the claim-weighted maxmin partition value
//! of a one-dimensional divisible good.
//!
//! `n` agents value the interval `[0, 1]` through nonatomic measures given
//! by piecewise-polynomial densities; agent `i` holds a relative claim
//! `α_i > 0`. The quantity of interest is
//!
//! ```text
//!   v = sup { min_i μ_i(A_i) / α_i }
//! ```
//!
//! over all measurable partitions `(A_1, ..., A_n)`. Computing `v` exactly is
//! hard, but the partition range is convex and every weighted maxsum
//! partition touches its Pareto border. That yields cheap certified bounds:
//!
//! * [`evv`] computes efficient value vectors (EVVs), the value vectors of
//!   weighted maxsum partitions;
//! * [`bounds`] turns EVV sets into enclosures of `v` via determinant cone
//!   tests (generic, single-EVV and probability-measure specializations);
//! * [`refine`] improves both sides iteratively with a determinant swap test
//!   over random or subgradient-driven weight candidates;
//! * [`oracle`] independently verifies enclosures at desk scale through an
//!   exact LP on a discretized cake.

// dense index arithmetic over multiple parallel arrays reads better as
// plain range loops in the linear-algebra and tableau kernels
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod evv;
mod linalg;
pub mod measure;
pub mod oracle;
pub mod refine;

pub use bounds::{
    compute_bounds, cone_membership, legut_bounds, lower_bound, select_basis_rows,
    single_evv_bounds, upper_bound, BoundsError, BoundsResult, ConeSolution, ConeStatus, EvvBasis,
    SupportEvv,
};
pub use evv::{
    compute_evv, corner_evv, maxsum_value, weighted_argmax_partition, EvvRecord, LabeledPartition,
    PartitionParams, WeightVector,
};
pub use measure::{DensityFunction, Instance, IntervalSet, PolyPiece, RawInstance};
pub use oracle::{discretize, oracle_maxsum, oracle_value, resolution_slack, DiscretizedInstance};
pub use refine::{
    refine_random, refine_subgradient, swap_test, RefineOutcome, RefineTrace, StepRule,
    SubgradientConfig, SupportSet,
};
