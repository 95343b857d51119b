//! Classical simulation and verification of streaming unitary mixed Schur
//! sampling.
//!
//! The ambient space of m ordinary and n dual qudits splits into paired
//! irreps of the unitary group and the walled Brauer algebra, indexed by
//! staircases. This crate implements the streaming measurement of that label:
//! absorb one qudit at a time into a sparse Gelfand-Tsetlin register, apply
//! the (dual) Clebsch-Gordan transform as a cascade of reduced Wigner
//! rotations, measure the branching outcome and renormalize. Dense
//! brute-force oracles (the iterated transform, symmetric-group character
//! projectors and Haar-integration projectors) certify the output
//! distributions and post-measurement states at desk scale, and a cost model
//! mirrors the modeled gate and memory accounting, including the
//! reduced-rank fast path.
//!
//! Modules:
//! - [`combinatorics`]: staircases, box moves, paths, patterns, dimensions.
//! - [`wigner`]: reduced Wigner coefficients and their unitary completion.
//! - [`cg`]: the transform cascade on sparse registers and its dense form.
//! - [`sampler`]: the streaming sampler, exact branch enumeration, sources.
//! - [`oracle`]: dense transforms, independent projectors, verification.
//! - [`cost`]: modeled and measured resource records.

pub mod cg;
pub mod combinatorics;
pub mod cost;
pub mod error;
pub mod oracle;
pub mod sampler;
pub mod wigner;

pub use cg::{cg_apply, cg_matrix, irrep_action, CGOutput, CgMatrix, CgStats, SchurRegister};
pub use combinatorics::{
    allowed_staircases, dim_p, dual_partition, enumerate_gt_patterns, enumerate_paths,
    enumerate_staircases, interlaces, validate_staircase, GTPattern, Staircase, StaircaseSet,
    YYPath,
};
pub use cost::{cg_cost, measured_counts, pipeline_cost, pipeline_cost_low_memory, CostRecord};
pub use error::{Error, Result};
pub use oracle::{
    build_full_transform, compare_sampler_oracle, haar_projector_estimate, mn_character,
    sn_isotypic_projector, verify_instance, verify_intertwiner, walled_brauer_generator_action,
    weyl_character, FullTransform, ProjectorEstimate,
};
pub use sampler::{
    exact_distribution, marginal_staircase_distribution, sample_run, ExactDistribution,
    QuditSource, RunStats, SamplingOutcome,
};
pub use wigner::{reduced_wigner_matrix, t_cg, t_dcg, Direction, RankBounds, ReducedWignerMatrix};
