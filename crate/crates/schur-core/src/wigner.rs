//! Reduced Wigner coefficients and their completion to unitary matrices.
//!
//! At level i of the Clebsch-Gordan cascade, a single scalar couples the two
//! orders of decomposing Q_γ ⊗ ℂ^i into SU(i−1) irreps: branch first at level
//! i (rows, γ′ = γ ± e_i) or first at level i−1 (columns, ν′ = ν ± e_j, with
//! j = i standing for ν′ = ν). The scalar is a square root of a ratio of
//! integer products in the shifted coordinates γ_k − k; the sign is S(i, j) =
//! +1 for i ≤ j and −1 otherwise. Branching-inconsistent index pairs take the
//! value 0 by definition; the consistent block of each (γ, ν′) matrix is
//! orthogonal on its own and the leftover rows and columns are completed
//! deterministically.
//!
//! The closed forms follow Vilenkin-Klimyk's tables for the SU(d) ⊃ SU(d−1)
//! reduction. The dual-direction forms are the conjugation transport of the
//! ordinary ones: conj(Q_γ) ≅ Q_{γ*} with γ* the reversed negated staircase,
//! which sends (i, j) to (d+1−i, d−j) and removes the offset constants from
//! the ordinary formulas.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::combinatorics::{interlaces_unchecked, is_nonincreasing};
use crate::error::{Error, Result};

/// Which Clebsch-Gordan transform a coefficient or matrix belongs to: absorb
/// an ordinary qudit (add a box) or a dual qudit (remove a box).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Cg,
    DualCg,
}

impl Direction {
    pub fn box_sign(self) -> i32 {
        match self {
            Direction::Cg => 1,
            Direction::DualCg => -1,
        }
    }
}

/// Input-subspace dimensions (ordinary, dual) promised for rank-reduced runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RankBounds {
    pub r: usize,
    pub r_dual: usize,
}

impl RankBounds {
    pub fn new(r: usize, r_dual: usize) -> Self {
        RankBounds { r, r_dual }
    }

    /// Active index window at a given level: the leading r + 1 slots and the
    /// trailing r′ slots; everything in between stays untouched for inputs
    /// respecting the bounds.
    pub fn window(&self, level: usize) -> Vec<usize> {
        (1..=level)
            .filter(|&x| x <= self.r + 1 || x + self.r_dual > level)
            .collect()
    }

    /// Stored matrix size at `level`, at most r + r′ + 1.
    pub fn window_size(&self, level: usize) -> usize {
        self.window(level).len()
    }
}

/// Branching consistency of a row index: γ ± e_i nonincreasing and
/// interlacing with the outgoing lower label ν′.
fn row_consistent(direction: Direction, gamma: &[i32], i: usize, nu_out: &[i32]) -> bool {
    let level = gamma.len();
    debug_assert!((1..=level).contains(&i));
    let s = direction.box_sign();
    let gi = gamma[i - 1] + s;
    let nonincr = match direction {
        Direction::Cg => i == 1 || gamma[i - 2] >= gi,
        Direction::DualCg => i == level || gi >= gamma[i],
    };
    if !nonincr {
        return false;
    }
    // Interlacing of ν′ with γ ± e_i, checked without materializing it.
    for k in 0..nu_out.len() {
        let upper_k = if k + 1 == i { gi } else { gamma[k] };
        let upper_k1 = if k + 2 == i { gi } else { gamma[k + 1] };
        if !(upper_k >= nu_out[k] && nu_out[k] >= upper_k1) {
            return false;
        }
    }
    true
}

/// Branching consistency of a column index: the incoming lower label
/// ν = ν′ ∓ e_j (or ν = ν′ for j = level) must be nonincreasing and interlace
/// with γ.
fn col_consistent(direction: Direction, gamma: &[i32], j: usize, nu_out: &[i32]) -> bool {
    let level = gamma.len();
    debug_assert!((1..=level).contains(&j));
    let s = direction.box_sign();
    if j == level {
        return interlaces_unchecked(nu_out, gamma);
    }
    let nj = nu_out[j - 1] - s;
    let nonincr = match direction {
        Direction::Cg => j == level - 1 || nj >= nu_out[j],
        Direction::DualCg => j == 1 || nu_out[j - 2] >= nj,
    };
    if !nonincr {
        return false;
    }
    for k in 0..nu_out.len() {
        let nk = if k + 1 == j { nj } else { nu_out[k] };
        if !(gamma[k] >= nk && nk >= gamma[k + 1]) {
            return false;
        }
    }
    true
}

/// Exact ratio accumulator: products of small integers with running gcd
/// reduction, so large-m factors cancel pairwise instead of overflowing.
#[derive(Clone, Copy)]
struct Ratio {
    num: i128,
    den: i128,
}

impl Ratio {
    fn one() -> Self {
        Ratio { num: 1, den: 1 }
    }

    fn mul(&mut self, num: i64, den: i64) {
        assert!(den != 0, "zero denominator on a branching-consistent reduced Wigner evaluation");
        self.num *= num as i128;
        self.den *= den as i128;
        let g = gcd128(self.num.unsigned_abs(), self.den.unsigned_abs());
        if g > 1 {
            self.num /= g as i128;
            self.den /= g as i128;
        }
    }

    fn abs_value(self) -> f64 {
        (self.num.unsigned_abs() as f64) / (self.den.unsigned_abs() as f64)
    }
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn sign(i: usize, j: usize) -> f64 {
    if i <= j {
        1.0
    } else {
        -1.0
    }
}

/// Shifted coordinate x_k = v_k − k with 1-based k.
#[inline]
fn sh(v: &[i32], k: usize) -> i64 {
    v[k - 1] as i64 - k as i64
}

/// Reduced Wigner coefficient for the ordinary Clebsch-Gordan step.
///
/// `level` plays the role of the group rank d in the closed forms; `gamma`
/// has `level` entries and `nu_out` (the outgoing lower label ν′) has
/// `level − 1`. Returns 0 for branching-inconsistent (i, j).
pub fn t_cg(level: usize, gamma: &[i32], i: usize, j: usize, nu_out: &[i32]) -> f64 {
    t_coefficient(Direction::Cg, level, gamma, i, j, nu_out)
}

/// Reduced Wigner coefficient for the dual Clebsch-Gordan step.
pub fn t_dcg(level: usize, gamma: &[i32], i: usize, j: usize, nu_out: &[i32]) -> f64 {
    t_coefficient(Direction::DualCg, level, gamma, i, j, nu_out)
}

pub fn t_coefficient(
    direction: Direction,
    level: usize,
    gamma: &[i32],
    i: usize,
    j: usize,
    nu_out: &[i32],
) -> f64 {
    assert_eq!(gamma.len(), level, "top label must have `level` entries");
    assert_eq!(nu_out.len(), level - 1, "lower label must have `level - 1` entries");
    assert!((1..=level).contains(&i) && (1..=level).contains(&j));
    debug_assert!(is_nonincreasing(gamma) && is_nonincreasing(nu_out));

    if !row_consistent(direction, gamma, i, nu_out)
        || !col_consistent(direction, gamma, j, nu_out)
    {
        return 0.0;
    }

    // Offsets distinguishing the two directions: the ordinary forms carry
    // −1/+1 shifts that the dual transport removes.
    let (a, b) = match direction {
        Direction::Cg => (-1i64, 1i64),
        Direction::DualCg => (0, 0),
    };

    let gi = sh(gamma, i);
    let mut ratio = Ratio::one();
    if j == level {
        for k in 1..level {
            ratio.mul(sh(nu_out, k) - gi + a, 1);
        }
        for k in 1..=level {
            if k != i {
                ratio.mul(1, sh(gamma, k) - gi);
            }
        }
        ratio.abs_value().sqrt()
    } else {
        let nj = sh(nu_out, j);
        for k in 1..level {
            if k != j {
                ratio.mul(sh(nu_out, k) - gi + a, sh(nu_out, k) - nj);
            }
        }
        for k in 1..=level {
            if k != i {
                ratio.mul(sh(gamma, k) - nj + b, sh(gamma, k) - gi);
            }
        }
        sign(i, j) * ratio.abs_value().sqrt()
    }
}

/// One level of the cascade as a labeled square matrix: the closed-form cells
/// on the branching-consistent rows and columns, completed to a (real)
/// unitary on the rest.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedWignerMatrix {
    pub direction: Direction,
    pub level: usize,
    /// γ, the level label before the step.
    pub top: Vec<i32>,
    /// ν′, the updated label one level down.
    pub lower_out: Vec<i32>,
    /// Row indices i (γ′ = γ ± e_i), 1-based; all of 1..=level in full mode,
    /// the rank window otherwise.
    pub row_labels: Vec<usize>,
    /// Column indices j (ν′ = ν ± e_j, with j = level meaning ν′ = ν).
    pub col_labels: Vec<usize>,
    #[serde(skip)]
    pub entries: DMatrix<f64>,
}

const COMPLETION_TOL: f64 = 1e-8;
const UNITARITY_TOL: f64 = 1e-10;

/// Assemble the reduced Wigner matrix at one cascade level.
///
/// In rank-reduced mode only the window indices are stored; the closed-form
/// cells on the common index set are bit-identical to the full assembly since
/// the same formula is evaluated.
pub fn reduced_wigner_matrix(
    direction: Direction,
    level: usize,
    top: &[i32],
    lower_out: &[i32],
    rank: Option<RankBounds>,
) -> Result<ReducedWignerMatrix> {
    if top.len() != level || lower_out.len() + 1 != level {
        return Err(Error::invalid(format!(
            "label lengths {}/{} do not fit level {level}",
            top.len(),
            lower_out.len()
        )));
    }
    if !is_nonincreasing(top) || !is_nonincreasing(lower_out) {
        return Err(Error::invalid("labels must be nonincreasing"));
    }
    let labels: Vec<usize> = match rank {
        Some(rb) => rb.window(level),
        None => (1..=level).collect(),
    };
    let index_of: HashMap<usize, usize> =
        labels.iter().enumerate().map(|(pos, &lab)| (lab, pos)).collect();
    if let Some(_rb) = rank {
        for x in 1..=level {
            if index_of.contains_key(&x) {
                continue;
            }
            if row_consistent(direction, top, x, lower_out)
                || col_consistent(direction, top, x, lower_out)
            {
                return Err(Error::invalid(format!(
                    "labels ({top:?}, {lower_out:?}) have active index {x} outside the rank window"
                )));
            }
        }
    }

    let size = labels.len();
    let mut m = DMatrix::<f64>::zeros(size, size);
    let mut col_defined = vec![false; size];
    for (cj, &j) in labels.iter().enumerate() {
        if !col_consistent(direction, top, j, lower_out) {
            continue;
        }
        col_defined[cj] = true;
        for (ri, &i) in labels.iter().enumerate() {
            m[(ri, cj)] = t_coefficient(direction, level, top, i, j, lower_out);
        }
    }

    // The defined columns must already be orthonormal; anything else means a
    // coefficient bug, not a completion problem.
    for cj in 0..size {
        if !col_defined[cj] {
            continue;
        }
        for ck in 0..=cj {
            if !col_defined[ck] {
                continue;
            }
            let dot: f64 = (0..size).map(|r| m[(r, cj)] * m[(r, ck)]).sum();
            let want = if cj == ck { 1.0 } else { 0.0 };
            if (dot - want).abs() > COMPLETION_TOL {
                return Err(Error::internal(format!(
                    "defined reduced Wigner columns not orthonormal at level {level}, \
                     top {top:?}, lower {lower_out:?}: <c{ck}, c{cj}> = {dot}"
                )));
            }
        }
    }

    // Complete the missing columns in ascending column order by Gram-Schmidt
    // against the identity basis, fixing each sign so the first nonzero entry
    // is positive.
    for cj in 0..size {
        if col_defined[cj] {
            continue;
        }
        let mut completed = None;
        for basis in 0..size {
            let mut v = vec![0.0; size];
            v[basis] = 1.0;
            // Project against every column filled so far (defined ones plus
            // the completions made at smaller column labels).
            for ck in 0..size {
                if !col_defined[ck] {
                    continue;
                }
                let dot: f64 = (0..size).map(|r| m[(r, ck)] * v[r]).sum();
                for r in 0..size {
                    v[r] -= dot * m[(r, ck)];
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for x in v.iter_mut() {
                    *x /= norm;
                }
                if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                    if *first < 0.0 {
                        for x in v.iter_mut() {
                            *x = -*x;
                        }
                    }
                }
                completed = Some(v);
                break;
            }
        }
        let v = completed.ok_or_else(|| {
            Error::internal(format!(
                "could not complete column {cj} of reduced Wigner matrix at level {level}"
            ))
        })?;
        for r in 0..size {
            m[(r, cj)] = v[r];
        }
        col_defined[cj] = true;
    }

    let residual = orthogonality_residual(&m);
    if residual > UNITARITY_TOL {
        return Err(Error::internal(format!(
            "assembled reduced Wigner matrix not orthogonal: residual {residual} at level \
             {level}, top {top:?}, lower {lower_out:?}"
        )));
    }

    Ok(ReducedWignerMatrix {
        direction,
        level,
        top: top.to_vec(),
        lower_out: lower_out.to_vec(),
        row_labels: labels.clone(),
        col_labels: labels,
        entries: m,
    })
}

pub fn orthogonality_residual(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let mut worst: f64 = 0.0;
    for r in 0..gram.nrows() {
        for c in 0..gram.ncols() {
            let want = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((gram[(r, c)] - want).abs());
        }
    }
    worst
}

type MatrixKey = (Direction, usize, Vec<i32>, Vec<i32>);

static MATRIX_CACHE: OnceLock<Mutex<HashMap<MatrixKey, ReducedWignerMatrix>>> = OnceLock::new();

/// Cached full-mode assembly, for callers that revisit the same block.
pub fn reduced_wigner_matrix_cached(
    direction: Direction,
    level: usize,
    top: &[i32],
    lower_out: &[i32],
) -> Result<ReducedWignerMatrix> {
    let cache = MATRIX_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (direction, level, top.to_vec(), lower_out.to_vec());
    if let Some(m) = cache.lock().unwrap().get(&key) {
        return Ok(m.clone());
    }
    let m = reduced_wigner_matrix(direction, level, top, lower_out, None)?;
    cache.lock().unwrap().insert(key, m.clone());
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{enumerate_staircases, Staircase};

    #[test]
    fn level_one_blocks_are_trivial() {
        assert_eq!(t_cg(1, &[0], 1, 1, &[]), 1.0);
        assert_eq!(t_cg(1, &[3], 1, 1, &[]), 1.0);
        assert_eq!(t_dcg(1, &[0], 1, 1, &[]), 1.0);
        assert_eq!(t_dcg(1, &[-2], 1, 1, &[]), 1.0);
    }

    #[test]
    fn known_two_level_couplings() {
        // Coupling the defining SU(2) irrep with one more qudit splits the
        // weight-0 space evenly.
        let v = t_cg(2, &[1, 0], 1, 1, &[1]);
        assert!((v - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        let v = t_cg(2, &[1, 0], 2, 1, &[1]);
        assert!((v + 1.0 / 2f64.sqrt()).abs() < 1e-14);
        let v = t_cg(2, &[1, 0], 1, 2, &[1]);
        assert!((v - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        let v = t_cg(2, &[1, 0], 2, 2, &[1]);
        assert!((v - 1.0 / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn inconsistent_pairs_vanish() {
        // (1,1) cannot take a box in row 2 twice.
        assert_eq!(t_cg(2, &[1, 0], 2, 2, &[2]), 0.0);
        // Dual: ν = ν′ + e_2 = (0,1) is not nonincreasing.
        assert_eq!(t_dcg(3, &[1, 0, 0], 1, 2, &[0, 0]), 0.0);
    }

    /// Independent SU(2) Clebsch-Gordan oracle via the closed Racah sum for
    /// coupling spin j1 with spin 1/2, in doubled-integer convention.
    fn su2_cg_half(two_j1: i64, two_m1: i64, two_m2: i64, two_j: i64) -> f64 {
        assert!(two_m2 == 1 || two_m2 == -1);
        let two_m = two_m1 + two_m2;
        if two_m.abs() > two_j {
            return 0.0;
        }
        let up = two_m2 == 1;
        if two_j == two_j1 + 1 {
            let num = (two_j1 + if up { two_m } else { -two_m } + 1) as f64;
            (num / (2.0 * two_j1 as f64 + 2.0)).sqrt()
        } else if two_j == two_j1 - 1 {
            let num = (two_j1 + if up { -two_m } else { two_m } + 1) as f64;
            let v = (num / (2.0 * two_j1 as f64 + 2.0)).sqrt();
            if up {
                -v
            } else {
                v
            }
        } else {
            0.0
        }
    }

    #[test]
    fn level_two_magnitudes_match_su2_clebsch_gordan() {
        // γ = (a, b) couples as spin j1 = (a−b)/2; the fresh qudit is spin
        // 1/2 with e_1 ↦ m2 = +1/2, e_2 ↦ m2 = −1/2. Column j=1 corresponds to
        // the qudit having entered at level 1 (m2 = +1/2), column j=2 to
        // entering at level 2 (m2 = −1/2).
        for m in 1..=5u32 {
            for gamma in enumerate_staircases(2, m, 0) {
                let (a, b) = (gamma.entries()[0] as i64, gamma.entries()[1] as i64);
                let two_j1 = a - b;
                for nu1 in b..=a {
                    // Lower label before the step: ν = (nu1); weight 2m1 = 2ν₁ − (a+b).
                    let two_m1 = 2 * nu1 - (a + b);
                    for (j_col, two_m2) in [(1usize, 1i64), (2usize, -1i64)] {
                        let nu_out = [if j_col == 1 { nu1 + 1 } else { nu1 } as i32];
                        if !is_nonincreasing(&nu_out) {
                            continue;
                        }
                        for (i_row, two_j) in [(1usize, two_j1 + 1), (2usize, two_j1 - 1)] {
                            let got = t_cg(2, gamma.entries(), i_row, j_col, &nu_out);
                            let want = su2_cg_half(two_j1, two_m1, two_m2, two_j);
                            assert!(
                                (got.abs() - want.abs()).abs() < 1e-10,
                                "gamma={gamma:?} nu_out={nu_out:?} i={i_row} j={j_col}: \
                                 got {got}, oracle {want}"
                            );
                        }
                    }
                }
            }
        }
    }

    fn lower_labels(direction: Direction, gamma: &Staircase) -> Vec<Vec<i32>> {
        // Possible updated lower labels ν′ after one step: interlacing with
        // some branch γ′ of γ.
        let branches = match direction {
            Direction::Cg => gamma.add_box(),
            Direction::DualCg => gamma.remove_box(),
        };
        let mut out = Vec::new();
        for b in branches.iter() {
            for p in crate::combinatorics::enumerate_gt_patterns(b) {
                if b.d() >= 2 {
                    out.push(p.level(b.d() - 1).to_vec());
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn assembled_matrices_are_orthogonal() {
        for direction in [Direction::Cg, Direction::DualCg] {
            for d in 1..=4usize {
                for m in 0..=3u32 {
                    for n in 0..=(3 - m.min(3)) {
                        if m + n == 0 || m + n > 3 {
                            continue;
                        }
                        for gamma in enumerate_staircases(d, m, n) {
                            for nu_out in lower_labels(direction, &gamma) {
                                let mat = reduced_wigner_matrix(
                                    direction,
                                    d,
                                    gamma.entries(),
                                    &nu_out,
                                    None,
                                )
                                .unwrap();
                                assert!(
                                    orthogonality_residual(&mat.entries) <= 1e-10,
                                    "direction {direction:?} gamma {gamma:?} nu {nu_out:?}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coefficients_are_bounded() {
        for direction in [Direction::Cg, Direction::DualCg] {
            for gamma in enumerate_staircases(3, 2, 1) {
                for nu_out in lower_labels(direction, &gamma) {
                    for i in 1..=3 {
                        for j in 1..=3 {
                            let t = t_coefficient(direction, 3, gamma.entries(), i, j, &nu_out);
                            assert!(t.abs() <= 1.0 + 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rank_reduced_assembly_matches_full_on_the_window() {
        let rb = RankBounds::new(1, 1);
        // d = 6 with one positive and one negative entry active.
        let top = [2, 0, 0, 0, 0, -1];
        let nu_out = [2, 0, 0, 0, -1];
        let full =
            reduced_wigner_matrix(Direction::Cg, 6, &top, &nu_out, None).unwrap();
        let red = reduced_wigner_matrix(Direction::Cg, 6, &top, &nu_out, Some(rb)).unwrap();
        assert!(red.entries.nrows() <= 3);
        for (rpos, &ri) in red.row_labels.iter().enumerate() {
            for (cpos, &cj) in red.col_labels.iter().enumerate() {
                if col_consistent(Direction::Cg, &top, cj, &nu_out) {
                    let f = full.entries[(ri - 1, cj - 1)];
                    assert_eq!(red.entries[(rpos, cpos)], f, "i={ri} j={cj}");
                }
            }
        }
        // Outside the window every defined cell vanishes.
        for j in rb.window(6) {
            for i in 1..=6 {
                if rb.window(6).contains(&i) {
                    continue;
                }
                assert_eq!(t_cg(6, &top, i, j, &nu_out), 0.0);
            }
        }
    }

    #[test]
    fn window_size_is_bounded() {
        let rb = RankBounds::new(1, 1);
        assert_eq!(rb.window(6), vec![1, 2, 6]);
        assert_eq!(rb.window_size(2), 2);
        let rb = RankBounds::new(2, 3);
        assert!(rb.window_size(10) <= 6);
    }
}
