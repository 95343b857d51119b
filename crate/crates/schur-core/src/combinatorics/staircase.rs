//! Staircases: the nonincreasing integer vectors that index the paired irreps
//! of mixed Schur-Weyl duality.
//!
//! A staircase γ ⊢_d (m, n) is a vector of d integers with
//! γ₁ ≥ γ₂ ≥ … ≥ γ_d, Σγᵢ = m − n, the positive entries summing to at most m
//! and the negative entries to at least −n. For n = 0 this is an ordinary
//! partition of m; partitions are represented as staircases with n = 0 rather
//! than as a separate type.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer label of a paired irrep of the unitary group and the walled Brauer
/// algebra, together with its (m, n) context.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawStaircase", into = "RawStaircase")]
pub struct Staircase {
    entries: Vec<i32>,
    m: u32,
    n: u32,
}

#[derive(Serialize, Deserialize)]
struct RawStaircase {
    entries: Vec<i32>,
    m: u32,
    n: u32,
}

impl TryFrom<RawStaircase> for Staircase {
    type Error = Error;
    fn try_from(raw: RawStaircase) -> Result<Self> {
        Staircase::new(raw.entries, raw.m, raw.n)
    }
}

impl From<Staircase> for RawStaircase {
    fn from(s: Staircase) -> Self {
        RawStaircase { entries: s.entries, m: s.m, n: s.n }
    }
}

impl fmt::Debug for Staircase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}⊢({},{})", self.entries, self.m, self.n)
    }
}

impl fmt::Display for Staircase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// True iff `entries` (of length `d`) satisfies all staircase constraints for
/// context (m, n). Errors only on a length mismatch.
pub fn validate_staircase(entries: &[i32], d: usize, m: u32, n: u32) -> Result<bool> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    if entries.len() != d {
        return Err(Error::invalid(format!(
            "staircase has {} entries, expected d = {}",
            entries.len(),
            d
        )));
    }
    Ok(entries_valid(entries, m, n))
}

fn entries_valid(entries: &[i32], m: u32, n: u32) -> bool {
    if entries.windows(2).any(|w| w[0] < w[1]) {
        return false;
    }
    let sum: i64 = entries.iter().map(|&e| e as i64).sum();
    if sum != m as i64 - n as i64 {
        return false;
    }
    let pos: i64 = entries.iter().filter(|&&e| e > 0).map(|&e| e as i64).sum();
    let neg: i64 = entries.iter().filter(|&&e| e < 0).map(|&e| -(e as i64)).sum();
    pos <= m as i64 && neg <= n as i64
}

impl Staircase {
    pub fn new(entries: Vec<i32>, m: u32, n: u32) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("staircase must have at least one entry"));
        }
        if !entries_valid(&entries, m, n) {
            return Err(Error::invalid(format!(
                "{:?} is not a staircase for (m, n) = ({m}, {n})",
                entries
            )));
        }
        Ok(Staircase { entries, m, n })
    }

    /// The all-zero staircase of (0, 0), the label of the trivial irrep.
    pub fn vacuum(d: usize) -> Self {
        Staircase { entries: vec![0; d], m: 0, n: 0 }
    }

    /// (1, 0, …, 0) ⊢_d (1, 0): the defining irrep.
    pub fn defining(d: usize) -> Self {
        let mut entries = vec![0; d];
        entries[0] = 1;
        Staircase { entries, m: 1, n: 0 }
    }

    /// (0, …, 0, −1) ⊢_d (0, 1): the dual of the defining irrep.
    pub fn dual_defining(d: usize) -> Self {
        let mut entries = vec![0; d];
        entries[d - 1] = -1;
        Staircase { entries, m: 0, n: 1 }
    }

    pub fn entries(&self) -> &[i32] {
        &self.entries
    }

    pub fn d(&self) -> usize {
        self.entries.len()
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of absorbed qudits, ordinary plus dual.
    pub fn weight(&self) -> u32 {
        self.m + self.n
    }

    pub fn positive_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e > 0).count()
    }

    pub fn negative_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e < 0).count()
    }

    /// True iff all entries are nonnegative and n = 0.
    pub fn is_partition(&self) -> bool {
        self.n == 0 && self.entries.iter().all(|&e| e >= 0)
    }

    /// All valid γ + eᵢ in context (m + 1, n).
    pub fn add_box(&self) -> StaircaseSet {
        let mut out = Vec::new();
        for i in 0..self.d() {
            let mut e = self.entries.clone();
            e[i] += 1;
            if entries_valid(&e, self.m + 1, self.n) {
                out.push(Staircase { entries: e, m: self.m + 1, n: self.n });
            }
        }
        StaircaseSet::from_vec(out)
    }

    /// All valid γ − eᵢ in context (m, n + 1).
    pub fn remove_box(&self) -> StaircaseSet {
        let mut out = Vec::new();
        for i in 0..self.d() {
            let mut e = self.entries.clone();
            e[i] -= 1;
            if entries_valid(&e, self.m, self.n + 1) {
                out.push(Staircase { entries: e, m: self.m, n: self.n + 1 });
            }
        }
        StaircaseSet::from_vec(out)
    }

    /// The staircases one absorption step before this one: parents ν with
    /// γ ∈ {ν − □} when n > 0, or γ ∈ {ν + □} when n = 0. Empty exactly when
    /// m + n ≤ 1.
    pub fn parents(&self) -> StaircaseSet {
        let mut out = Vec::new();
        if self.n > 0 {
            for i in 0..self.d() {
                let mut e = self.entries.clone();
                e[i] += 1;
                if entries_valid(&e, self.m, self.n - 1) {
                    out.push(Staircase { entries: e, m: self.m, n: self.n - 1 });
                }
            }
        } else if self.m > 1 {
            for i in 0..self.d() {
                let mut e = self.entries.clone();
                e[i] -= 1;
                if entries_valid(&e, self.m - 1, 0) {
                    out.push(Staircase { entries: e, m: self.m - 1, n: 0 });
                }
            }
        }
        StaircaseSet::from_vec(out)
    }

    /// Entrywise γ + k. Shifting relabels the same unitary irrep, so the Weyl
    /// dimension is unchanged. The result carries its minimal context
    /// (positive sum, negative sum).
    pub fn shift(&self, k: i32) -> Staircase {
        let entries: Vec<i32> = self.entries.iter().map(|&e| e + k).collect();
        let m: i64 = entries.iter().filter(|&&e| e > 0).map(|&e| e as i64).sum();
        let n: i64 = entries.iter().filter(|&&e| e < 0).map(|&e| -(e as i64)).sum();
        Staircase { entries, m: m as u32, n: n as u32 }
    }

    /// Dimension of the unitary irrep labelled by this staircase, by the Weyl
    /// dimension formula Π_{i<j} (γᵢ − γⱼ + j − i)/(j − i), evaluated in exact
    /// integer arithmetic with the quotient checked integral.
    pub fn dim_q(&self) -> u64 {
        weyl_dimension(&self.entries)
    }
}

/// Weyl dimension formula over raw entries; shared with intermediate
/// Gelfand-Tsetlin levels which are plain nonincreasing vectors.
pub fn weyl_dimension(entries: &[i32]) -> u64 {
    let d = entries.len();
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..d {
        for j in (i + 1)..d {
            let f = (entries[i] - entries[j]) as i64 + (j as i64 - i as i64);
            debug_assert!(f > 0, "Weyl factor must be positive for nonincreasing input");
            num *= f as u128;
            den *= (j - i) as u128;
            let g = gcd(num, den);
            num /= g;
            den /= g;
        }
    }
    assert_eq!(den, 1, "Weyl dimension product failed to reduce to an integer");
    u64::try_from(num).expect("Weyl dimension overflows u64")
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Deduplicated collection of staircases in canonical (descending
/// lexicographic) order, so that measurement outcomes and serialized output
/// index blocks deterministically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StaircaseSet {
    members: Vec<Staircase>,
}

impl StaircaseSet {
    pub fn from_vec(mut members: Vec<Staircase>) -> Self {
        members.sort_by(|a, b| b.cmp(a));
        members.dedup();
        StaircaseSet { members }
    }

    pub fn members(&self) -> &[Staircase] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, s: &Staircase) -> bool {
        self.members.binary_search_by(|probe| s.cmp(probe)).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Staircase> {
        self.members.iter()
    }
}

impl IntoIterator for StaircaseSet {
    type Item = Staircase;
    type IntoIter = std::vec::IntoIter<Staircase>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.into_iter()
    }
}

impl<'a> IntoIterator for &'a StaircaseSet {
    type Item = &'a Staircase;
    type IntoIter = std::slice::Iter<'a, Staircase>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// All γ ⊢_d (m, n), in canonical order.
pub fn enumerate_staircases(d: usize, m: u32, n: u32) -> StaircaseSet {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(d);
    gen_staircases(d, m as i64, n as i64, i32::try_from(m).unwrap(), &mut prefix, &mut out);
    StaircaseSet::from_vec(out)
}

fn gen_staircases(
    d: usize,
    m: i64,
    n: i64,
    hi: i32,
    prefix: &mut Vec<i32>,
    out: &mut Vec<Staircase>,
) {
    if prefix.len() == d {
        if entries_valid(prefix, m as u32, n as u32) {
            out.push(Staircase { entries: prefix.clone(), m: m as u32, n: n as u32 });
        }
        return;
    }
    // Entries live in [-n, min(hi, m)]; the nonincreasing constraint tightens
    // the upper bound to the previous entry.
    let lo = -(n as i32);
    for v in (lo..=hi).rev() {
        prefix.push(v);
        gen_staircases(d, m, n, v, prefix, out);
        prefix.pop();
    }
}

/// The staircases reachable from inputs confined to an r-dimensional ordinary
/// subspace and an r′-dimensional dual subspace: at most r positive and r′
/// negative entries.
pub fn allowed_staircases(d: usize, m: u32, n: u32, r: usize, r_dual: usize) -> StaircaseSet {
    let members = enumerate_staircases(d, m, n)
        .into_iter()
        .filter(|s| s.positive_count() <= r && s.negative_count() <= r_dual)
        .collect();
    StaircaseSet { members }
}

/// Reversal complement μ̄ = (μ₁ − μ_d, …, μ₁ − μ₂, 0) of a partition: the
/// label of the conjugate irrep.
pub fn dual_partition(mu: &Staircase) -> Result<Staircase> {
    if !mu.is_partition() {
        return Err(Error::invalid(format!("{mu:?} is not a partition")));
    }
    let e = mu.entries();
    let d = e.len();
    let top = e[0];
    let entries: Vec<i32> = (0..d).map(|i| if i == d - 1 { 0 } else { top - e[d - 1 - i] }).collect();
    let m: i64 = entries.iter().map(|&x| x as i64).sum();
    Ok(Staircase { entries, m: m as u32, n: 0 })
}

/// True iff ν (length d−1) interlaces γ (length d):
/// γ₁ ≥ ν₁ ≥ γ₂ ≥ … ≥ ν_{d−1} ≥ γ_d.
pub fn interlaces(nu: &[i32], gamma: &[i32]) -> Result<bool> {
    if nu.len() + 1 != gamma.len() {
        return Err(Error::invalid(format!(
            "interlacing needs lengths d-1 and d, got {} and {}",
            nu.len(),
            gamma.len()
        )));
    }
    Ok(interlaces_unchecked(nu, gamma))
}

pub(crate) fn interlaces_unchecked(nu: &[i32], gamma: &[i32]) -> bool {
    for k in 0..nu.len() {
        if !(gamma[k] >= nu[k] && nu[k] >= gamma[k + 1]) {
            return false;
        }
    }
    true
}

pub(crate) fn is_nonincreasing(v: &[i32]) -> bool {
    v.windows(2).all(|w| w[0] >= w[1])
}

impl Staircase {
    /// Construct from raw entries with the minimal context implied by the
    /// positive/negative sums. Fails if the entries are not nonincreasing.
    pub fn with_minimal_context(entries: Vec<i32>) -> Result<Self> {
        if entries.is_empty() || !is_nonincreasing(&entries) {
            return Err(Error::invalid(format!("{entries:?} is not nonincreasing")));
        }
        let m: i64 = entries.iter().filter(|&&e| e > 0).map(|&e| e as i64).sum();
        let n: i64 = entries.iter().filter(|&&e| e < 0).map(|&e| -(e as i64)).sum();
        Ok(Staircase { entries, m: m as u32, n: n as u32 })
    }

    /// Same entries reinterpreted in another valid context.
    pub fn in_context(&self, m: u32, n: u32) -> Result<Self> {
        Staircase::new(self.entries.clone(), m, n)
    }
}

/// Canonical comparison used for measurement-outcome indexing: descending
/// lexicographic on entries.
pub fn canonical_cmp(a: &Staircase, b: &Staircase) -> Ordering {
    b.entries.cmp(&a.entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(entries: &[i32], m: u32, n: u32) -> Staircase {
        Staircase::new(entries.to_vec(), m, n).unwrap()
    }

    #[test]
    fn validates_basic_staircases() {
        assert!(validate_staircase(&[1, 0, -1], 3, 1, 1).unwrap());
        assert!(!validate_staircase(&[0, 1, 0], 3, 1, 0).unwrap());
        assert!(validate_staircase(&[2, 1, -2], 3, 3, 2).unwrap());
        // sum constraint
        assert!(!validate_staircase(&[1, 0, 0], 3, 2, 0).unwrap());
        // positive part exceeding m
        assert!(!validate_staircase(&[2, -1], 2, 1, 1).unwrap());
        // length mismatch is an input error, not a false
        assert!(validate_staircase(&[1, 0], 3, 1, 0).is_err());
        assert!(validate_staircase(&[], 0, 0, 0).is_err());
    }

    #[test]
    fn add_box_examples() {
        let got = sc(&[1, 0, 0], 1, 0).add_box();
        assert_eq!(got.members(), &[sc(&[2, 0, 0], 2, 0), sc(&[1, 1, 0], 2, 0)]);

        let got = sc(&[1, 1, 1], 3, 0).add_box();
        assert_eq!(got.members(), &[sc(&[2, 1, 1], 4, 0)]);
    }

    /// Brute-force filter: every γ ± eᵢ run through the validator.
    fn brute_box_moves(s: &Staircase, add: bool) -> Vec<Vec<i32>> {
        let (m, n) = if add { (s.m() + 1, s.n()) } else { (s.m(), s.n() + 1) };
        let mut v: Vec<Vec<i32>> = (0..s.d())
            .filter_map(|i| {
                let mut e = s.entries().to_vec();
                e[i] += if add { 1 } else { -1 };
                validate_staircase(&e, s.d(), m, n).unwrap().then_some(e)
            })
            .collect();
        v.sort_by(|a, b| b.cmp(a));
        v.dedup();
        v
    }

    #[test]
    fn box_moves_match_brute_force_filter() {
        for (entries, m, n) in [
            (vec![2, 1, -2], 3u32, 2u32),
            (vec![1, 0], 1, 0),
            (vec![0, 0, -2], 0, 2),
            (vec![3, 1, 0, -1], 4, 1),
        ] {
            let s = Staircase::new(entries, m, n).unwrap();
            let add: Vec<_> = s.add_box().into_iter().map(|x| x.entries().to_vec()).collect();
            assert_eq!(add, brute_box_moves(&s, true));
            let rem: Vec<_> = s.remove_box().into_iter().map(|x| x.entries().to_vec()).collect();
            assert_eq!(rem, brute_box_moves(&s, false));
        }
    }

    #[test]
    fn remove_box_mixed_example() {
        let got = sc(&[2, 1, -2], 3, 2).remove_box();
        assert_eq!(
            got.members(),
            &[sc(&[2, 1, -3], 3, 3), sc(&[2, 0, -2], 3, 3), sc(&[1, 1, -2], 3, 3)]
        );

        let got = sc(&[1, 0], 1, 0).remove_box();
        assert_eq!(got.members(), &[sc(&[1, -1], 1, 1), sc(&[0, 0], 1, 1)]);

        // Single dual column keeps exactly two moves once d >= 2.
        let got = sc(&[0, 0, -2], 0, 2).remove_box();
        assert_eq!(got.members(), &[sc(&[0, 0, -3], 0, 3), sc(&[0, -1, -2], 0, 3)]);
    }

    #[test]
    fn enumerate_small_contexts() {
        let got = enumerate_staircases(2, 2, 0);
        assert_eq!(got.members(), &[sc(&[2, 0], 2, 0), sc(&[1, 1], 2, 0)]);

        let got = enumerate_staircases(1, 3, 0);
        assert_eq!(got.members(), &[sc(&[3], 3, 0)]);

        let got = enumerate_staircases(2, 1, 1);
        assert_eq!(got.members(), &[sc(&[1, -1], 1, 1), sc(&[0, 0], 1, 1)]);
    }

    /// Independent exhaustive search over the bounded integer box.
    fn brute_enumerate(d: usize, m: u32, n: u32) -> Vec<Vec<i32>> {
        let lo = -(n as i32);
        let hi = m as i32;
        let mut out = Vec::new();
        let mut v = vec![lo; d];
        loop {
            if validate_staircase(&v, d, m, n).unwrap() {
                out.push(v.clone());
            }
            let mut i = d;
            loop {
                if i == 0 {
                    out.sort_by(|a, b| b.cmp(a));
                    return out;
                }
                i -= 1;
                if v[i] < hi {
                    v[i] += 1;
                    for x in v.iter_mut().skip(i + 1) {
                        *x = lo;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (d, m, n) in [(2, 3, 0), (3, 2, 1), (3, 1, 2), (4, 2, 2), (2, 0, 3)] {
            let fast: Vec<_> =
                enumerate_staircases(d, m, n).into_iter().map(|s| s.entries().to_vec()).collect();
            assert_eq!(fast, brute_enumerate(d, m, n), "d={d} m={m} n={n}");
        }
    }

    #[test]
    fn interlacing_examples() {
        assert!(interlaces(&[1], &[2, 0]).unwrap());
        assert!(!interlaces(&[0], &[1, 1]).unwrap());
        assert!(interlaces(&[1, -1], &[1, 0, -1]).unwrap());
        assert!(interlaces(&[1, 0], &[2, 0]).is_err());
    }

    #[test]
    fn allowed_staircases_filters() {
        let got = allowed_staircases(3, 2, 0, 1, 3);
        assert_eq!(got.members(), &[sc(&[2, 0, 0], 2, 0)]);

        let got = allowed_staircases(2, 2, 0, 2, 2);
        assert_eq!(got, enumerate_staircases(2, 2, 0));

        let got = allowed_staircases(3, 1, 1, 1, 1);
        assert_eq!(got.members(), &[sc(&[1, 0, -1], 1, 1), sc(&[0, 0, 0], 1, 1)]);
    }

    #[test]
    fn shift_and_dual_partition() {
        let s = sc(&[1, 0, -1], 1, 1).shift(1);
        assert_eq!(s.entries(), &[2, 1, 0]);
        assert_eq!(s.dim_q(), sc(&[1, 0, -1], 1, 1).dim_q());

        let mu = dual_partition(&sc(&[2, 1, 0], 3, 0)).unwrap();
        assert_eq!(mu.entries(), &[2, 1, 0]);
        let mu = dual_partition(&sc(&[1, 0], 1, 0)).unwrap();
        assert_eq!(mu.entries(), &[1, 0]);
        assert!(dual_partition(&sc(&[1, -1], 1, 1)).is_err());
    }

    #[test]
    fn weyl_dimension_known_values() {
        assert_eq!(sc(&[2, 0], 2, 0).dim_q(), 3);
        assert_eq!(sc(&[1, 1], 2, 0).dim_q(), 1);
        assert_eq!(sc(&[1, 0, -1], 1, 1).dim_q(), 8);
        assert_eq!(Staircase::defining(5).dim_q(), 5);
        assert_eq!(Staircase::dual_defining(5).dim_q(), 5);
    }

    #[test]
    fn staircase_json_roundtrip() {
        let s = sc(&[2, 1, -2], 3, 2);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"entries":[2,1,-2],"m":3,"n":2}"#);
        let back: Staircase = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Staircase>(r#"{"entries":[0,1],"m":1,"n":0}"#).is_err());
    }
}
