//! Gelfand-Tsetlin patterns: interlacing chains of staircases labelling the
//! basis vectors of a unitary irrep.
//!
//! A pattern for γ of length d is a chain (γ¹, …, γ^d) with γ^d = γ and
//! γⁱ ⪯ γ^{i+1}. Level i has i entries; entries may be negative in the mixed
//! setting. Patterns are enumerated lazily in a fixed canonical order so that
//! register serialization and dense matrix layouts are reproducible.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::staircase::{interlaces_unchecked, is_nonincreasing, Staircase};
use crate::error::{Error, Result};

/// Interlacing chain stored flat: level 1 first, so `flat` has length
/// d(d+1)/2 and level i occupies `flat[i(i-1)/2 .. i(i+1)/2]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GTPattern {
    d: usize,
    flat: Vec<i32>,
}

impl GTPattern {
    pub fn from_levels(levels: &[Vec<i32>]) -> Result<Self> {
        let d = levels.len();
        if d == 0 {
            return Err(Error::invalid("pattern must have at least one level"));
        }
        for (i, level) in levels.iter().enumerate() {
            if level.len() != i + 1 {
                return Err(Error::invalid(format!(
                    "pattern level {} has {} entries, expected {}",
                    i + 1,
                    level.len(),
                    i + 1
                )));
            }
            if !is_nonincreasing(level) {
                return Err(Error::invalid(format!("pattern level {:?} not nonincreasing", level)));
            }
            if i > 0 && !interlaces_unchecked(&levels[i - 1], level) {
                return Err(Error::invalid(format!(
                    "pattern levels {:?} and {:?} do not interlace",
                    levels[i - 1],
                    level
                )));
            }
        }
        let mut flat = Vec::with_capacity(d * (d + 1) / 2);
        for level in levels {
            flat.extend_from_slice(level);
        }
        Ok(GTPattern { d, flat })
    }

    pub(crate) fn from_flat_unchecked(d: usize, flat: Vec<i32>) -> Self {
        debug_assert_eq!(flat.len(), d * (d + 1) / 2);
        GTPattern { d, flat }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Level i, 1-based.
    pub fn level(&self, i: usize) -> &[i32] {
        let start = i * (i - 1) / 2;
        &self.flat[start..start + i]
    }

    pub(crate) fn level_mut(&mut self, i: usize) -> &mut [i32] {
        let start = i * (i - 1) / 2;
        &mut self.flat[start..start + i]
    }

    pub fn top(&self) -> &[i32] {
        self.level(self.d)
    }

    pub fn levels(&self) -> Vec<Vec<i32>> {
        (1..=self.d).map(|i| self.level(i).to_vec()).collect()
    }

    /// GT basis vector of the defining irrep carrying the computational basis
    /// state e_k (1-based): levels below k are zero, levels from k up are
    /// (1, 0, …, 0).
    pub fn defining(d: usize, k: usize) -> Self {
        assert!((1..=d).contains(&k));
        let mut flat = Vec::with_capacity(d * (d + 1) / 2);
        for i in 1..=d {
            let mut level = vec![0; i];
            if i >= k {
                level[0] = 1;
            }
            flat.extend_from_slice(&level);
        }
        GTPattern { d, flat }
    }

    /// GT basis vector of the dual defining irrep carrying ē_k: levels below
    /// k are zero, levels from k up are (0, …, 0, −1).
    pub fn dual_defining(d: usize, k: usize) -> Self {
        assert!((1..=d).contains(&k));
        let mut flat = Vec::with_capacity(d * (d + 1) / 2);
        for i in 1..=d {
            let mut level = vec![0; i];
            if i >= k {
                level[i - 1] = -1;
            }
            flat.extend_from_slice(&level);
        }
        GTPattern { d, flat }
    }
}

impl std::fmt::Debug for GTPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GT{:?}", self.levels())
    }
}

impl Serialize for GTPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.levels().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GTPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let levels = Vec::<Vec<i32>>::deserialize(deserializer)?;
        GTPattern::from_levels(&levels).map_err(D::Error::custom)
    }
}

/// Lazy enumeration of all patterns with top staircase γ, in canonical order:
/// levels are chosen top-down, each level running through its interlacing
/// choices in descending lexicographic order.
pub struct GtPatternIter {
    levels: Vec<Vec<i32>>,
    exhausted: bool,
}

impl GtPatternIter {
    fn new(top: &[i32]) -> Self {
        let d = top.len();
        let mut levels: Vec<Vec<i32>> = vec![Vec::new(); d];
        levels[d - 1] = top.to_vec();
        for i in (1..d).rev() {
            levels[i - 1] = first_choice(&levels[i]);
        }
        GtPatternIter { levels, exhausted: false }
    }

    fn advance(&mut self) -> bool {
        let d = self.levels.len();
        // Level 1 is the least significant digit group.
        for j in 0..d - 1 {
            let (lower, upper) = self.levels.split_at_mut(j + 1);
            if advance_level(&mut lower[j], &upper[0]) {
                for l in (0..j).rev() {
                    self.levels[l] = first_choice(&self.levels[l + 1]);
                }
                return true;
            }
        }
        false
    }
}

/// Maximal interlacing choice below `upper`: vₖ = upperₖ.
fn first_choice(upper: &[i32]) -> Vec<i32> {
    upper[..upper.len() - 1].to_vec()
}

/// Step `v` to its successor in descending lexicographic order within the
/// interlacing box upper_{k+1} ≤ v_k ≤ upper_k.
fn advance_level(v: &mut [i32], upper: &[i32]) -> bool {
    for k in (0..v.len()).rev() {
        if v[k] > upper[k + 1] {
            v[k] -= 1;
            for (j, slot) in v.iter_mut().enumerate().skip(k + 1) {
                *slot = upper[j];
            }
            return true;
        }
    }
    false
}

impl Iterator for GtPatternIter {
    type Item = GTPattern;

    fn next(&mut self) -> Option<GTPattern> {
        if self.exhausted {
            return None;
        }
        let item = GTPattern::from_flat_unchecked(
            self.levels.len(),
            self.levels.iter().flatten().copied().collect(),
        );
        if !self.advance() {
            self.exhausted = true;
        }
        Some(item)
    }
}

/// All interlacing chains ending at γ, lazily.
pub fn enumerate_gt_patterns(gamma: &Staircase) -> GtPatternIter {
    GtPatternIter::new(gamma.entries())
}

/// Patterns of γ materialized in canonical order, capped.
pub fn gt_patterns_capped(gamma: &Staircase, cap: usize) -> Result<Vec<GTPattern>> {
    super::collect_with_cap(enumerate_gt_patterns(gamma), cap, "pattern enumeration")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(entries: &[i32], m: u32, n: u32) -> Staircase {
        Staircase::new(entries.to_vec(), m, n).unwrap()
    }

    /// Independent recursive count of interlacing chains.
    fn brute_count(top: &[i32]) -> u64 {
        fn rec(upper: &[i32]) -> u64 {
            if upper.len() == 1 {
                return 1;
            }
            let mut total = 0;
            let mut v = first_choice(upper);
            loop {
                total += rec(&v);
                if !advance_level(&mut v, upper) {
                    return total;
                }
            }
        }
        rec(top)
    }

    #[test]
    fn pattern_counts_match_examples() {
        assert_eq!(enumerate_gt_patterns(&sc(&[2, 0], 2, 0)).count(), 3);
        assert_eq!(enumerate_gt_patterns(&sc(&[1, 1], 2, 0)).count(), 1);
        assert_eq!(enumerate_gt_patterns(&sc(&[1, 0, -1], 1, 1)).count(), 8);
    }

    #[test]
    fn pattern_count_equals_weyl_dimension() {
        for (d, m, n) in [(2, 3, 0), (3, 2, 1), (3, 1, 2), (4, 2, 1)] {
            for gamma in super::super::enumerate_staircases(d, m, n) {
                let count = enumerate_gt_patterns(&gamma).count() as u64;
                assert_eq!(count, gamma.dim_q(), "gamma = {gamma:?}");
                assert_eq!(count, brute_count(gamma.entries()));
            }
        }
    }

    #[test]
    fn patterns_are_valid_and_canonically_ordered() {
        let gamma = sc(&[2, 1, -1], 3, 1);
        let pats: Vec<_> = enumerate_gt_patterns(&gamma).collect();
        for p in &pats {
            assert_eq!(p.top(), gamma.entries());
            GTPattern::from_levels(&p.levels()).unwrap();
        }
        let mut sorted = pats.clone();
        // Canonical order sorts by levels top-down, descending.
        sorted.sort_by(|a, b| {
            let key = |p: &GTPattern| {
                let mut v = Vec::new();
                for i in (1..=p.d()).rev() {
                    v.extend_from_slice(p.level(i));
                }
                v
            };
            key(b).cmp(&key(a))
        });
        assert_eq!(pats, sorted);
    }

    #[test]
    fn defining_patterns_enumerate_in_basis_order() {
        for d in 1..=4 {
            let pats: Vec<_> = enumerate_gt_patterns(&Staircase::defining(d)).collect();
            for (idx, p) in pats.iter().enumerate() {
                assert_eq!(*p, GTPattern::defining(d, idx + 1));
            }
            let duals: Vec<_> = enumerate_gt_patterns(&Staircase::dual_defining(d)).collect();
            for (idx, p) in duals.iter().enumerate() {
                assert_eq!(*p, GTPattern::dual_defining(d, d - idx));
            }
        }
    }

    #[test]
    fn pattern_cap_is_enforced() {
        let err = gt_patterns_capped(&sc(&[2, 0], 2, 0), 2).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn pattern_json_is_levels_array() {
        let p = GTPattern::defining(3, 2);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[[0],[1,0],[1,0,0]]");
        let back: GTPattern = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
