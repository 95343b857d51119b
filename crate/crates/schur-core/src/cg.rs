//! The (dual) Clebsch-Gordan transform on Gelfand-Tsetlin-encoded registers.
//!
//! A register on Q_γ is a sparse map from GT patterns to amplitudes. Absorbing
//! one fresh qudit runs the level cascade: for i = 1..d, the branch index
//! carried by the fresh factor is expanded through the reduced Wigner matrix
//! controlled on the pattern's levels i−1 (already updated) and i, and the
//! level-i staircase entry picked by the outcome is stepped by one box. The
//! final branch index selects the output block γ′ ∈ {γ ± □}.
//!
//! Keeping the register sparse is the point: for product streams the live
//! support never exceeds dim Q_γ, while a dense statevector would grow as
//! d^k. The cascade works term-by-term, expanding only through nonzero
//! coefficients and merging colliding keys so interference is exact.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::combinatorics::{
    enumerate_gt_patterns, GTPattern, Staircase, StaircaseSet,
};
use crate::error::{Error, Result};
use crate::wigner::{t_coefficient, Direction, RankBounds};

/// Amplitudes with the small amount of structure the cascade needs. `f64`
/// carries the exact real entries of dense transform columns, `Complex64` a
/// plain register, and `Vec<Complex64>` a register entangled with deferred
/// qudits.
pub trait Amplitude: Clone {
    fn weight(&self) -> f64;
    fn scaled(&self, factor: f64) -> Self;
    fn accumulate(&mut self, other: &Self);
}

impl Amplitude for f64 {
    fn weight(&self) -> f64 {
        self * self
    }
    fn scaled(&self, factor: f64) -> Self {
        self * factor
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
}

impl Amplitude for Complex64 {
    fn weight(&self) -> f64 {
        self.norm_sqr()
    }
    fn scaled(&self, factor: f64) -> Self {
        self * factor
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
}

impl Amplitude for Vec<Complex64> {
    fn weight(&self) -> f64 {
        self.iter().map(|c| c.norm_sqr()).sum()
    }
    fn scaled(&self, factor: f64) -> Self {
        self.iter().map(|c| c * factor).collect()
    }
    fn accumulate(&mut self, other: &Self) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
}

/// Counters filled while cascading; the cost module turns them into records.
#[derive(Clone, Copy, Debug, Default)]
pub struct CgStats {
    /// Reduced Wigner coefficient evaluations.
    pub coefficient_evals: u64,
    /// Largest sparse register support seen.
    pub max_keys: usize,
    /// Largest matrix dimension touched (level size or rank window size).
    pub rotation_dim: usize,
    /// Total squared amplitude dropped by pruning.
    pub pruned_mass: f64,
}

impl CgStats {
    pub fn merge(&mut self, other: &CgStats) {
        self.coefficient_evals += other.coefficient_evals;
        self.max_keys = self.max_keys.max(other.max_keys);
        self.rotation_dim = self.rotation_dim.max(other.rotation_dim);
        self.pruned_mass += other.pruned_mass;
    }
}

/// Amplitudes below this are pruned; the dropped mass is tracked and asserted
/// negligible per step.
const PRUNE_AMPLITUDE: f64 = 1e-14;
const PRUNE_MASS_LIMIT: f64 = 1e-10;
const LEAKAGE_TOL: f64 = 1e-8;
const NORMALIZATION_TOL: f64 = 1e-9;

/// Sparse state on Q_γ in the GT basis.
#[derive(Clone, Debug)]
pub struct SchurRegister {
    gamma: Staircase,
    amplitudes: HashMap<GTPattern, Complex64>,
}

impl SchurRegister {
    pub fn new(gamma: Staircase, amplitudes: HashMap<GTPattern, Complex64>) -> Result<Self> {
        for pattern in amplitudes.keys() {
            if pattern.top() != gamma.entries() {
                return Err(Error::invalid(format!(
                    "pattern {pattern:?} does not end at {gamma:?}"
                )));
            }
        }
        Ok(SchurRegister { gamma, amplitudes })
    }

    /// The weight-zero register absorbed before any qudit: the trivial label
    /// with its single empty pattern.
    pub fn vacuum(d: usize) -> Self {
        let gamma = Staircase::vacuum(d);
        let pattern = GTPattern::from_levels(
            &(1..=d).map(|i| vec![0; i]).collect::<Vec<_>>(),
        )
        .expect("vacuum pattern is valid");
        let mut amplitudes = HashMap::new();
        amplitudes.insert(pattern, Complex64::new(1.0, 0.0));
        SchurRegister { gamma, amplitudes }
    }

    pub fn gamma(&self) -> &Staircase {
        &self.gamma
    }

    pub fn amplitudes(&self) -> &HashMap<GTPattern, Complex64> {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut HashMap<GTPattern, Complex64> {
        &mut self.amplitudes
    }

    pub fn key_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.amplitudes.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Scale so the total weight is one.
    pub fn normalize(&mut self) {
        let w = self.total_weight().sqrt();
        if w > 0.0 {
            for a in self.amplitudes.values_mut() {
                *a /= w;
            }
        }
    }

    /// Amplitudes in canonical pattern order; the serialization order.
    pub fn sorted_amplitudes(&self) -> Vec<(GTPattern, Complex64)> {
        let mut v: Vec<_> = self.amplitudes.iter().map(|(p, a)| (p.clone(), *a)).collect();
        v.sort_by(|x, y| canonical_pattern_cmp(&x.0, &y.0));
        v
    }

    /// Dense coordinates in canonical pattern order.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let patterns: Vec<GTPattern> = enumerate_gt_patterns(&self.gamma).collect();
        patterns
            .iter()
            .map(|p| self.amplitudes.get(p).copied().unwrap_or(Complex64::new(0.0, 0.0)))
            .collect()
    }

    /// Overlap ⟨self|other⟩ over the common support.
    pub fn overlap(&self, other: &SchurRegister) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, a) in &self.amplitudes {
            if let Some(b) = other.amplitudes.get(p) {
                acc += a.conj() * b;
            }
        }
        acc
    }

    /// In rank-reduced runs every level staircase of every key must stay
    /// inside the allowed set for its level.
    pub fn respects_rank_bounds(&self, rank: RankBounds) -> bool {
        self.amplitudes.keys().all(|p| pattern_respects_bounds(p, rank))
    }
}

fn pattern_respects_bounds(pattern: &GTPattern, rank: RankBounds) -> bool {
    (1..=pattern.d()).all(|i| {
        let level = pattern.level(i);
        let pos = level.iter().filter(|&&e| e > 0).count();
        let neg = level.iter().filter(|&&e| e < 0).count();
        pos <= rank.r && neg <= rank.r_dual
    })
}

/// Canonical pattern order: levels compared top-down, larger first. This is
/// the order `enumerate_gt_patterns` produces.
pub fn canonical_pattern_cmp(a: &GTPattern, b: &GTPattern) -> std::cmp::Ordering {
    debug_assert_eq!(a.d(), b.d());
    for i in (1..=a.d()).rev() {
        match b.level(i).cmp(a.level(i)) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// One branching block of a transform application, still unnormalized.
#[derive(Clone, Debug)]
pub struct CgBlock {
    pub register: SchurRegister,
    /// Squared norm of the block; the Born probability of observing it.
    pub weight: f64,
}

/// Output of one (dual) Clebsch-Gordan application, organized by branch label
/// in canonical order.
#[derive(Clone, Debug)]
pub struct CGOutput {
    blocks: Vec<(Staircase, CgBlock)>,
}

impl CGOutput {
    pub fn blocks(&self) -> &[(Staircase, CgBlock)] {
        &self.blocks
    }

    pub fn block(&self, gamma: &Staircase) -> Option<&CgBlock> {
        self.blocks.iter().find(|(g, _)| g == gamma).map(|(_, b)| b)
    }

    pub fn block_labels(&self) -> StaircaseSet {
        StaircaseSet::from_vec(self.blocks.iter().map(|(g, _)| g.clone()).collect())
    }

    pub fn total_weight(&self) -> f64 {
        self.blocks.iter().map(|(_, b)| b.weight).sum()
    }
}

pub(crate) type CascadeKey = (GTPattern, usize);

/// Run the level cascade on raw (pattern, branch-index) terms. Shared by the
/// sparse register path, the dense matrix builder and the deferred-qudit
/// sampler mode.
pub(crate) fn cascade_terms<A: Amplitude>(
    d: usize,
    direction: Direction,
    terms: HashMap<CascadeKey, A>,
    rank: Option<RankBounds>,
    stats: &mut CgStats,
) -> Result<HashMap<CascadeKey, A>> {
    let mut frontier = terms;
    for level in 1..=d {
        let rows: Vec<usize> = match rank {
            Some(rb) => rb.window(level),
            None => (1..=level).collect(),
        };
        stats.rotation_dim = stats.rotation_dim.max(rows.len());
        let mut next: HashMap<CascadeKey, A> = HashMap::with_capacity(frontier.len());
        for ((pattern, j), amp) in frontier.drain() {
            if j > level {
                merge(&mut next, (pattern, j), amp);
                continue;
            }
            if rank.is_some() && !rows.contains(&j) {
                return Err(Error::invalid(format!(
                    "branch index {j} at level {level} violates the declared rank bounds"
                )));
            }
            let top = pattern.level(level).to_vec();
            let lower: Vec<i32> =
                if level >= 2 { pattern.level(level - 1).to_vec() } else { Vec::new() };
            for &i_row in &rows {
                stats.coefficient_evals += 1;
                let t = t_coefficient(direction, level, &top, i_row, j, &lower);
                if t == 0.0 {
                    continue;
                }
                let mut out = pattern.clone();
                out.level_mut(level)[i_row - 1] += direction.box_sign();
                merge(&mut next, (out, i_row), amp.scaled(t));
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

fn merge<A: Amplitude>(map: &mut HashMap<CascadeKey, A>, key: CascadeKey, amp: A) {
    match map.entry(key) {
        std::collections::hash_map::Entry::Occupied(mut e) => e.get_mut().accumulate(&amp),
        std::collections::hash_map::Entry::Vacant(e) => {
            e.insert(amp);
        }
    }
}

/// Apply the (dual) Clebsch-Gordan transform to `register ⊗ qudit`.
///
/// The fresh qudit is the rightmost tensor factor; for the dual direction its
/// coordinates are amplitudes in the dual basis. Both inputs must be
/// normalized. The output organizes the image by branch label; block weights
/// sum to one.
pub fn cg_apply(
    register: &SchurRegister,
    qudit: &[Complex64],
    direction: Direction,
    rank: Option<RankBounds>,
    stats: &mut CgStats,
) -> Result<CGOutput> {
    let d = register.gamma.d();
    if qudit.len() != d {
        return Err(Error::invalid(format!(
            "qudit has {} amplitudes, register dimension is {d}",
            qudit.len()
        )));
    }
    if !register.is_normalized() {
        return Err(Error::invalid(format!(
            "register weight {} is not 1 within {NORMALIZATION_TOL}",
            register.total_weight()
        )));
    }
    let qnorm: f64 = qudit.iter().map(|c| c.norm_sqr()).sum();
    if (qnorm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::invalid(format!("qudit norm² {qnorm} is not 1")));
    }
    if let Some(rb) = rank {
        if !register.respects_rank_bounds(rb) {
            return Err(Error::invalid(
                "register support violates the declared rank bounds".to_string(),
            ));
        }
    }

    let mut terms: HashMap<CascadeKey, Complex64> = HashMap::new();
    for (pattern, amp) in &register.amplitudes {
        for (k0, q) in qudit.iter().enumerate() {
            if q.norm_sqr() > 0.0 {
                merge(&mut terms, (pattern.clone(), k0 + 1), amp * q);
            }
        }
    }

    let out = cascade_terms(d, direction, terms, rank, stats)?;
    finish_blocks(register, direction, out, stats)
}

/// Group cascade output by branch label, pruning negligible amplitudes and
/// checking that no weight leaked. Blocks come out in canonical order.
pub(crate) fn group_blocks<A: Amplitude>(
    m: u32,
    n: u32,
    out: HashMap<CascadeKey, A>,
    stats: &mut CgStats,
) -> Result<Vec<(Staircase, f64, HashMap<GTPattern, A>)>> {
    let mut pruned = 0.0;
    let mut by_block: HashMap<Vec<i32>, HashMap<GTPattern, A>> = HashMap::new();
    for ((pattern, _), amp) in out {
        let w = amp.weight();
        if w < PRUNE_AMPLITUDE * PRUNE_AMPLITUDE {
            pruned += w;
            continue;
        }
        by_block.entry(pattern.top().to_vec()).or_default().insert(pattern, amp);
    }
    stats.pruned_mass += pruned;
    if pruned >= PRUNE_MASS_LIMIT {
        return Err(Error::internal(format!("pruned mass {pruned} above limit")));
    }

    let mut blocks = Vec::with_capacity(by_block.len());
    for (entries, amplitudes) in by_block {
        let gamma = Staircase::new(entries, m, n)
            .map_err(|e| Error::internal(format!("cascade produced an invalid label: {e}")))?;
        let weight: f64 = amplitudes.values().map(|a| a.weight()).sum();
        blocks.push((gamma, weight, amplitudes));
    }
    blocks.sort_by(|a, b| crate::combinatorics::canonical_cmp(&a.0, &b.0));

    let total: f64 = blocks.iter().map(|(_, w, _)| w).sum();
    if (total - 1.0).abs() > LEAKAGE_TOL {
        return Err(Error::internal(format!(
            "amplitude leakage: block weights sum to {total}"
        )));
    }
    Ok(blocks)
}

fn finish_blocks(
    register: &SchurRegister,
    direction: Direction,
    out: HashMap<CascadeKey, Complex64>,
    stats: &mut CgStats,
) -> Result<CGOutput> {
    let (m, n) = match direction {
        Direction::Cg => (register.gamma.m() + 1, register.gamma.n()),
        Direction::DualCg => (register.gamma.m(), register.gamma.n() + 1),
    };
    let blocks = group_blocks(m, n, out, stats)?
        .into_iter()
        .map(|(gamma, weight, amplitudes)| {
            let register = SchurRegister { gamma: gamma.clone(), amplitudes };
            (gamma, CgBlock { register, weight })
        })
        .collect();
    Ok(CGOutput { blocks })
}

/// Dense labeled unitary of the transform on Q_γ ⊗ ℂ^d.
#[derive(Clone, Debug)]
pub struct CgMatrix {
    pub gamma: Staircase,
    pub direction: Direction,
    /// Output basis: (branch label, pattern) in canonical block order.
    pub row_labels: Vec<(Staircase, GTPattern)>,
    /// Input basis: (pattern, qudit index), qudit fastest.
    pub col_labels: Vec<(GTPattern, usize)>,
    /// Row ranges of each branch block.
    pub block_ranges: Vec<(Staircase, std::ops::Range<usize>)>,
    pub matrix: DMatrix<f64>,
}

pub const DEFAULT_DENSE_CAP: u64 = 4096;

/// Materialize the transform for γ as a dense real orthogonal matrix by
/// cascading every basis input. Refuses when dim Q_γ · d exceeds `cap`.
pub fn cg_matrix(gamma: &Staircase, direction: Direction, cap: u64) -> Result<CgMatrix> {
    let d = gamma.d();
    let dim_in = gamma
        .dim_q()
        .checked_mul(d as u64)
        .ok_or_else(|| Error::invalid("dimension overflow"))?;
    if dim_in > cap {
        return Err(Error::CapExceeded {
            what: format!("dense transform for {gamma:?}"),
            required: dim_in,
            cap,
            env: "SCHUR_CAP_DENSE",
        });
    }

    let patterns: Vec<GTPattern> = enumerate_gt_patterns(gamma).collect();
    let branches = match direction {
        Direction::Cg => gamma.add_box(),
        Direction::DualCg => gamma.remove_box(),
    };
    let mut row_labels = Vec::with_capacity(dim_in as usize);
    let mut block_ranges = Vec::new();
    let mut block_index: HashMap<Vec<i32>, HashMap<GTPattern, usize>> = HashMap::new();
    let mut offset = 0usize;
    for b in branches.iter() {
        let pats: Vec<GTPattern> = enumerate_gt_patterns(b).collect();
        let range = offset..offset + pats.len();
        let index: HashMap<GTPattern, usize> =
            pats.iter().cloned().enumerate().map(|(idx, p)| (p, offset + idx)).collect();
        for p in &pats {
            row_labels.push((b.clone(), p.clone()));
        }
        block_index.insert(b.entries().to_vec(), index);
        block_ranges.push((b.clone(), range));
        offset += pats.len();
    }
    if offset != dim_in as usize {
        return Err(Error::internal(format!(
            "branch dimensions sum to {offset}, expected {dim_in}"
        )));
    }

    let mut matrix = DMatrix::<f64>::zeros(offset, offset);
    let mut col_labels = Vec::with_capacity(offset);
    let mut stats = CgStats::default();
    for (p_idx, pattern) in patterns.iter().enumerate() {
        for k in 1..=d {
            let col = p_idx * d + (k - 1);
            col_labels.push((pattern.clone(), k));
            let mut terms: HashMap<CascadeKey, f64> = HashMap::new();
            terms.insert((pattern.clone(), k), 1.0);
            let out = cascade_terms(d, direction, terms, None, &mut stats)?;
            for ((out_pattern, _), amp) in out {
                let index = block_index
                    .get(out_pattern.top())
                    .ok_or_else(|| Error::internal("cascade left the branching set"))?;
                let row = *index
                    .get(&out_pattern)
                    .ok_or_else(|| Error::internal("cascade produced unknown pattern"))?;
                matrix[(row, col)] = amp;
            }
        }
    }

    Ok(CgMatrix { gamma: gamma.clone(), direction, row_labels, col_labels, block_ranges, matrix })
}

static CG_MATRIX_CACHE: OnceLock<Mutex<HashMap<(Staircase, Direction), CgMatrix>>> =
    OnceLock::new();

/// Cached dense transform; shared by the iterated transform builder and the
/// representation bootstrap, which revisit the same labels many times.
pub fn cg_matrix_cached(gamma: &Staircase, direction: Direction, cap: u64) -> Result<CgMatrix> {
    let cache = CG_MATRIX_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (gamma.clone(), direction);
    if let Some(m) = cache.lock().unwrap().get(&key) {
        return Ok(m.clone());
    }
    let m = cg_matrix(gamma, direction, cap)?;
    cache.lock().unwrap().insert(key, m.clone());
    Ok(m)
}

/// Representation matrix of `u` on Q_γ in the GT basis, built recursively
/// from the defining action by extracting branch blocks of the conjugated
/// transform.
pub fn irrep_action(gamma: &Staircase, u: &DMatrix<Complex64>, cap: u64) -> Result<DMatrix<Complex64>> {
    let d = gamma.d();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::invalid(format!("unitary must be {d}×{d}")));
    }
    let residual = unitarity_residual(u);
    if residual > 1e-10 {
        return Err(Error::invalid(format!("input is not unitary: residual {residual}")));
    }
    irrep_action_inner(gamma, u, cap)
}

fn irrep_action_inner(
    gamma: &Staircase,
    u: &DMatrix<Complex64>,
    cap: u64,
) -> Result<DMatrix<Complex64>> {
    let d = gamma.d();
    if *gamma == Staircase::defining(d) {
        return Ok(u.clone());
    }
    if *gamma == Staircase::dual_defining(d) {
        let v = dual_basis_map(d)?;
        let vc = v.map(|x| Complex64::new(x, 0.0));
        return Ok(&vc * u.map(|c| c.conj()) * vc.transpose());
    }

    // Step back one absorption: prefer undoing a dual step when n > 0.
    let parent = gamma
        .parents()
        .iter()
        .next()
        .cloned()
        .ok_or_else(|| Error::invalid(format!("{gamma:?} has no parent labels")))?;
    let direction = if gamma.n() > 0 { Direction::DualCg } else { Direction::Cg };
    let q_parent = irrep_action_inner(&parent, u, cap)?;
    let fresh = match direction {
        Direction::Cg => u.clone(),
        Direction::DualCg => u.map(|c| c.conj()),
    };
    let cg = cg_matrix_cached(&parent, direction, cap)?;
    let cgc = cg.matrix.map(|x| Complex64::new(x, 0.0));
    let conjugated = &cgc * q_parent.kronecker(&fresh) * cgc.transpose();
    let range = cg
        .block_ranges
        .iter()
        .find(|(g, _)| g == gamma)
        .map(|(_, r)| r.clone())
        .ok_or_else(|| Error::internal("missing branch block"))?;
    Ok(conjugated.view((range.start, range.start), (range.len(), range.len())).into_owned())
}

/// Basis change from dual-basis coordinates ē_k to the GT basis of the dual
/// defining irrep, as produced by cascading from the vacuum. A signed
/// permutation.
pub fn dual_basis_map(d: usize) -> Result<DMatrix<f64>> {
    let pats: Vec<GTPattern> = enumerate_gt_patterns(&Staircase::dual_defining(d)).collect();
    let index: HashMap<GTPattern, usize> =
        pats.into_iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut v = DMatrix::<f64>::zeros(d, d);
    let mut stats = CgStats::default();
    let vacuum = vacuum_pattern(d);
    for k in 1..=d {
        let mut terms: HashMap<CascadeKey, f64> = HashMap::new();
        terms.insert((vacuum.clone(), k), 1.0);
        let out = cascade_terms(d, Direction::DualCg, terms, None, &mut stats)?;
        for ((pattern, _), amp) in out {
            let row = *index
                .get(&pattern)
                .ok_or_else(|| Error::internal("vacuum cascade left the dual label"))?;
            v[(row, k - 1)] = amp;
        }
    }
    Ok(v)
}

fn vacuum_pattern(d: usize) -> GTPattern {
    GTPattern::from_levels(&(1..=d).map(|i| vec![0; i]).collect::<Vec<_>>())
        .expect("vacuum pattern is valid")
}

pub fn unitarity_residual(u: &DMatrix<Complex64>) -> f64 {
    let gram = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for r in 0..gram.nrows() {
        for c in 0..gram.ncols() {
            let want = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((gram[(r, c)] - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}
