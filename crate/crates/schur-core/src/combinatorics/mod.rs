//! Label-level mathematics: staircases, box moves, Young-Yamanouchi paths,
//! Gelfand-Tsetlin patterns, dimensions and rank-restriction filters.
//!
//! Everything here is pure and immutable after construction; the only shared
//! state is the lock-guarded path-count memo.

mod path;
mod pattern;
mod staircase;

pub use path::{dim_p, enumerate_paths, paths_capped, PathIter, YYPath};
pub use pattern::{enumerate_gt_patterns, gt_patterns_capped, GTPattern, GtPatternIter};
pub use staircase::{
    allowed_staircases, canonical_cmp, dual_partition, enumerate_staircases, interlaces,
    validate_staircase, weyl_dimension, Staircase, StaircaseSet,
};

pub(crate) use staircase::{interlaces_unchecked, is_nonincreasing};

use crate::error::{Error, Result};

/// Default ceiling for materialized enumerations; dimensions grow quickly.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

/// Collect a lazy enumeration, refusing past `cap`.
pub fn collect_with_cap<I>(iter: I, cap: usize, what: &str) -> Result<Vec<I::Item>>
where
    I: Iterator,
{
    let mut out = Vec::new();
    for item in iter {
        if out.len() >= cap {
            return Err(Error::CapExceeded {
                what: what.to_string(),
                required: cap as u64 + 1,
                cap: cap as u64,
                env: "SCHUR_CAP_ENUM",
            });
        }
        out.push(item);
    }
    Ok(out)
}
