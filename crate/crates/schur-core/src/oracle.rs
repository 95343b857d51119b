//! Independent ground truth at desk scale: the dense transform built by
//! iterating the cascade, isotypic projectors built three mutually
//! independent ways, walled Brauer generator matrices, and the reports that
//! certify the sampler and transform modules against them.
//!
//! The independence boundary: the character/permutation projector and the
//! Haar/Weyl-character projector share no code with the cascade pipeline, so
//! agreement between all three methods checks the closed-form coefficients
//! end to end.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cg::{cg_matrix_cached, irrep_action, unitarity_residual, SchurRegister};
use crate::combinatorics::{
    dim_p, enumerate_gt_patterns, enumerate_staircases, GTPattern, Staircase, YYPath,
};
use crate::error::{Error, Result};
use crate::sampler::{exact_distribution, seeded_shot_rng, QuditSource, RunStats};
use crate::wigner::Direction;

pub const DEFAULT_DENSE_CAP: u64 = 4096;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Seeded generator for oracle randomness; stream-split like sampler shots.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    seeded_shot_rng(seed, stream)
}

pub fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids a distribution dependency for the few draws we need.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phase-fixing diagonal correction.
pub fn haar_unitary<R: Rng>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| c64(std_normal(rng), std_normal(rng)));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c64(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar unitary normalized to unit determinant.
pub fn haar_special_unitary<R: Rng>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let u = haar_unitary(d, rng);
    let det = determinant(&u);
    let phase = det.powf(1.0 / d as f64).conj() / det.norm().powf(1.0 / d as f64);
    u.map(|x| x * phase)
}

/// Haar-random pure state of the given dimension.
pub fn haar_state<R: Rng>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim).map(|_| c64(std_normal(rng), std_normal(rng))).collect();
    let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

pub fn determinant(u: &DMatrix<Complex64>) -> Complex64 {
    // LU with partial pivoting on a copy; dimensions here are tiny.
    let n = u.nrows();
    let mut a = u.clone();
    let mut det = c64(1.0, 0.0);
    for k in 0..n {
        let mut pivot = k;
        for r in k + 1..n {
            if a[(r, k)].norm() > a[(pivot, k)].norm() {
                pivot = r;
            }
        }
        if a[(pivot, k)].norm() == 0.0 {
            return c64(0.0, 0.0);
        }
        if pivot != k {
            a.swap_rows(pivot, k);
            det = -det;
        }
        det *= a[(k, k)];
        for r in k + 1..n {
            let f = a[(r, k)] / a[(k, k)];
            for cidx in k..n {
                let v = a[(k, cidx)];
                a[(r, cidx)] -= f * v;
            }
        }
    }
    det
}

/// The action of one unitary on the ambient space: U on each ordinary factor
/// and conj(U) on each dual factor.
pub fn ambient_action(u: &DMatrix<Complex64>, m: u32, n: u32) -> DMatrix<Complex64> {
    let mut out = DMatrix::identity(1, 1);
    for _ in 0..m {
        out = out.kronecker(u);
    }
    let conj = u.map(|x| x.conj());
    for _ in 0..n {
        out = out.kronecker(&conj);
    }
    out
}

// ---------------------------------------------------------------------------
// Method 1: dense transform assembled from the cascade.
// ---------------------------------------------------------------------------

/// The full transform for (d, m, n): a d^(m+n)-dimensional unitary whose rows
/// are labelled (path, pattern), built by absorbing one qudit at a time.
#[derive(Clone, Debug)]
pub struct FullTransform {
    pub d: usize,
    pub m: u32,
    pub n: u32,
    pub matrix: DMatrix<Complex64>,
    pub row_labels: Vec<(YYPath, GTPattern)>,
}

impl FullTransform {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Endpoint label of each row.
    pub fn row_endpoint(&self, row: usize) -> &Staircase {
        self.row_labels[row].0.endpoint()
    }

    /// Ambient-space isotypic projector onto the γ block.
    pub fn isotypic_projector(&self, gamma: &Staircase) -> DMatrix<Complex64> {
        let dim = self.dimension();
        let mut diag = DMatrix::<Complex64>::zeros(dim, dim);
        for row in 0..dim {
            if self.row_endpoint(row) == gamma {
                diag[(row, row)] = c64(1.0, 0.0);
            }
        }
        self.matrix.adjoint() * diag * &self.matrix
    }

    /// Probability of the γ outcome on a pure ambient state.
    pub fn outcome_probability(&self, gamma: &Staircase, state: &[Complex64]) -> f64 {
        let phi = self.apply(state);
        (0..self.dimension())
            .filter(|&row| self.row_endpoint(row) == gamma)
            .map(|row| phi[row].norm_sqr())
            .sum()
    }

    pub fn apply(&self, state: &[Complex64]) -> Vec<Complex64> {
        let v = DMatrix::from_column_slice(state.len(), 1, state);
        let out = &self.matrix * v;
        out.column(0).iter().copied().collect()
    }

    /// Conditional post-measurement data per path on a pure state: the
    /// probability and the normalized state on Q_γ in pattern order.
    pub fn path_conditionals(&self, state: &[Complex64]) -> Vec<(YYPath, f64, Vec<Complex64>)> {
        let phi = self.apply(state);
        let mut by_path: Vec<(YYPath, Vec<Complex64>)> = Vec::new();
        let mut row = 0;
        while row < self.dimension() {
            let path = self.row_labels[row].0.clone();
            let dim_q = path.endpoint().dim_q() as usize;
            let block: Vec<Complex64> = (row..row + dim_q).map(|r| phi[r]).collect();
            by_path.push((path, block));
            row += dim_q;
        }
        by_path
            .into_iter()
            .map(|(path, mut block)| {
                let p: f64 = block.iter().map(|x| x.norm_sqr()).sum();
                let norm = p.sqrt();
                if norm > 0.0 {
                    for x in block.iter_mut() {
                        *x /= norm;
                    }
                }
                (path, p, block)
            })
            .collect()
    }
}

/// Assemble the transform by iterating the cascade: starting from the
/// trivial register, each step tensors one fresh qudit and applies the dense
/// block transform on every (path, label) sector.
pub fn build_full_transform(d: usize, m: u32, n: u32, cap: u64) -> Result<FullTransform> {
    if m + n == 0 {
        return Err(Error::invalid("transform needs at least one qudit"));
    }
    let dim = (d as u64)
        .checked_pow(m + n)
        .ok_or_else(|| Error::invalid("dimension overflow"))?;
    if dim > cap {
        return Err(Error::CapExceeded {
            what: format!("dense transform for d={d}, m={m}, n={n}"),
            required: dim,
            cap,
            env: "SCHUR_CAP_DENSE",
        });
    }

    // Sectors in row order, with the path taken to reach each.
    let mut sectors: Vec<(Vec<Staircase>, Staircase)> = vec![(Vec::new(), Staircase::vacuum(d))];
    let mut u = DMatrix::<Complex64>::identity(1, 1);
    for step in 1..=(m + n) {
        let direction = if step <= m { Direction::Cg } else { Direction::DualCg };
        let ext = u.kronecker(&DMatrix::<Complex64>::identity(d, d));
        let mut new_rows = 0usize;
        let mut pieces: Vec<(Vec<Staircase>, Staircase, DMatrix<Complex64>)> = Vec::new();
        let mut offset = 0usize;
        for (path, gamma) in &sectors {
            let block_dim = gamma.dim_q() as usize * d;
            let cg = cg_matrix_cached(gamma, direction, cap.max(block_dim as u64))?;
            let cgc = cg.matrix.map(|x| c64(x, 0.0));
            let sector_rows = ext.view((offset, 0), (block_dim, ext.ncols()));
            let transformed = &cgc * sector_rows;
            let mut local = 0usize;
            for (child, range) in &cg.block_ranges {
                let mut path = path.clone();
                path.push(child.clone());
                let rows = transformed.view((local, 0), (range.len(), ext.ncols())).into_owned();
                new_rows += range.len();
                pieces.push((path, child.clone(), rows));
                local += range.len();
            }
            offset += block_dim;
        }
        let mut next = DMatrix::<Complex64>::zeros(new_rows, ext.ncols());
        let mut row = 0usize;
        let mut next_sectors = Vec::with_capacity(pieces.len());
        for (path, gamma, rows) in pieces {
            next.view_mut((row, 0), (rows.nrows(), rows.ncols())).copy_from(&rows);
            row += rows.nrows();
            next_sectors.push((path, gamma));
        }
        u = next;
        sectors = next_sectors;
    }

    let mut row_labels = Vec::with_capacity(dim as usize);
    for (path, gamma) in &sectors {
        let path = YYPath::new(path.clone())?;
        for pattern in enumerate_gt_patterns(gamma) {
            row_labels.push((path.clone(), pattern.clone()));
        }
    }
    if row_labels.len() != dim as usize {
        return Err(Error::internal(format!(
            "transform rows {} do not fill dimension {dim}",
            row_labels.len()
        )));
    }
    Ok(FullTransform { d, m, n, matrix: u, row_labels })
}

// ---------------------------------------------------------------------------
// Method 2: symmetric-group characters and permutation matrices (n = 0).
// ---------------------------------------------------------------------------

/// How a projector estimate was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProjectorMethod {
    Transform,
    Characters,
    Haar,
}

#[derive(Clone, Debug)]
pub struct ProjectorEstimate {
    pub gamma: Staircase,
    pub matrix: DMatrix<Complex64>,
    pub method: ProjectorMethod,
    pub sample_count: Option<u64>,
}

impl ProjectorEstimate {
    pub fn trace(&self) -> Complex64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_abs(&(self.matrix.adjoint() - &self.matrix))
    }

    pub fn idempotency_residual(&self) -> f64 {
        max_abs(&(&self.matrix * &self.matrix - &self.matrix))
    }
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Character of the symmetric-group irrep λ on the class of cycle type μ,
/// by border-strip removal on beta-sets.
pub fn mn_character(lambda: &[i32], cycle_type: &[usize]) -> i64 {
    let size: i64 = lambda.iter().map(|&x| x as i64).sum();
    let cycles: i64 = cycle_type.iter().map(|&c| c as i64).sum();
    assert_eq!(size, cycles, "cycle type must partition the size of λ");
    let rows = lambda.len().max(1);
    let beta: Vec<i64> =
        (0..rows).map(|j| lambda.get(j).copied().unwrap_or(0) as i64 + (rows - 1 - j) as i64).collect();
    let mut memo = HashMap::new();
    mn_rec(&beta, cycle_type, &mut memo)
}

fn mn_rec(beta: &[i64], cycles: &[usize], memo: &mut HashMap<(Vec<i64>, usize), i64>) -> i64 {
    let Some((&ell, rest)) = cycles.split_first() else {
        return 1;
    };
    let key = ({
        let mut b = beta.to_vec();
        b.sort_unstable();
        b
    }, cycles.len());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut total = 0i64;
    for (idx, &b) in beta.iter().enumerate() {
        let target = b - ell as i64;
        if target < 0 || beta.contains(&target) {
            continue;
        }
        let between = beta.iter().filter(|&&x| x < b && x > target).count();
        let sign = if between % 2 == 0 { 1 } else { -1 };
        let mut next = beta.to_vec();
        next[idx] = target;
        total += sign * mn_rec(&next, rest, memo);
    }
    memo.insert(key, total);
    total
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..m).collect();
    let mut out = Vec::new();
    heap_permute(&mut items, m, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

fn cycle_type(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut cycles = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = perm[cur];
            len += 1;
        }
        cycles.push(len);
    }
    cycles.sort_unstable_by(|a, b| b.cmp(a));
    cycles
}

/// Apply the place permutation |i₁…i_m⟩ ↦ |i_{σ⁻¹(1)}…i_{σ⁻¹(m)}⟩ as an
/// index map on d^m.
fn permutation_image(perm: &[usize], d: usize, index: usize) -> usize {
    let m = perm.len();
    let mut digits = vec![0usize; m];
    let mut rest = index;
    for pos in (0..m).rev() {
        digits[pos] = rest % d;
        rest /= d;
    }
    // Factor at target position `perm[src]` receives the digit from `src`.
    let mut out_digits = vec![0usize; m];
    for src in 0..m {
        out_digits[perm[src]] = digits[src];
    }
    let mut out = 0usize;
    for pos in 0..m {
        out = out * d + out_digits[pos];
    }
    out
}

/// Exact isotypic projector for λ ⊢ m on (ℂ^d)^{⊗m}:
/// (dim λ / m!) Σ_σ χ_λ(σ) P(σ).
pub fn sn_isotypic_projector(lambda: &Staircase, d: usize) -> Result<ProjectorEstimate> {
    if !lambda.is_partition() {
        return Err(Error::invalid(format!("{lambda:?} is not a partition")));
    }
    let m = lambda.m() as usize;
    if m == 0 {
        return Err(Error::invalid("projector needs m >= 1"));
    }
    let dim = d.pow(m as u32);
    let dim_lambda = mn_character(lambda.entries(), &vec![1; m]);
    let mut factorial = 1f64;
    for k in 2..=m {
        factorial *= k as f64;
    }
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for perm in permutations(m) {
        let chi = mn_character(lambda.entries(), &cycle_type(&perm)) as f64;
        if chi == 0.0 {
            continue;
        }
        for col in 0..dim {
            let row = permutation_image(&perm, d, col);
            acc[(row, col)] += c64(chi, 0.0);
        }
    }
    let scale = dim_lambda as f64 / factorial;
    Ok(ProjectorEstimate {
        gamma: lambda.clone(),
        matrix: acc.map(|x| x * scale),
        method: ProjectorMethod::Characters,
        sample_count: None,
    })
}

// ---------------------------------------------------------------------------
// Method 3: Haar integration against Weyl characters.
// ---------------------------------------------------------------------------

/// Character of Q_γ at a unitary, evaluated from the traces of matrix powers:
/// power sums feed complete homogeneous sums through Newton's identities, the
/// shifted partition's Jacobi-Trudi determinant gives the Schur polynomial,
/// and the shift is undone by a determinant power.
pub fn weyl_character(gamma: &Staircase, u: &DMatrix<Complex64>) -> Complex64 {
    let d = gamma.d();
    debug_assert_eq!(u.nrows(), d);
    let shift = -(gamma.entries()[d - 1].min(0));
    let mu: Vec<i64> = gamma.entries().iter().map(|&e| (e + shift) as i64).collect();
    let max_h = (mu[0] + d as i64) as usize;

    let mut power = DMatrix::<Complex64>::identity(d, d);
    let mut p = vec![c64(0.0, 0.0); max_h + 1];
    for j in 1..=max_h {
        power = &power * u;
        p[j] = (0..d).map(|i| power[(i, i)]).sum();
    }
    let mut h = vec![c64(0.0, 0.0); max_h + 1];
    h[0] = c64(1.0, 0.0);
    for k in 1..=max_h {
        let mut acc = c64(0.0, 0.0);
        for i in 1..=k {
            acc += p[i] * h[k - i];
        }
        h[k] = acc / k as f64;
    }

    let jt = DMatrix::from_fn(d, d, |i, j| {
        let idx = mu[i] - i as i64 + j as i64;
        if idx < 0 {
            c64(0.0, 0.0)
        } else {
            h[idx as usize]
        }
    });
    let schur = determinant(&jt);
    if shift == 0 {
        schur
    } else {
        let det_u = determinant(u);
        schur * det_u.powi(-shift)
    }
}

/// Monte-Carlo estimate of the ambient isotypic projector:
/// dim Q_γ · E_U[ conj(χ_γ(U)) · U^{⊗m} ⊗ conj(U)^{⊗n} ].
pub fn haar_projector_estimate(
    gamma: &Staircase,
    d: usize,
    samples: u64,
    seed: u64,
) -> Result<ProjectorEstimate> {
    if samples < 1_000 {
        return Err(Error::invalid("haar estimate needs at least 1000 samples"));
    }
    if gamma.d() != d {
        return Err(Error::invalid("label length must equal d"));
    }
    let (m, n) = (gamma.m(), gamma.n());
    let dim = (d as usize).pow(m + n);
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    let mut rng = seeded_rng(seed, 0);
    for _ in 0..samples {
        let u = haar_unitary(d, &mut rng);
        let chi = weyl_character(gamma, &u).conj();
        if chi.norm() == 0.0 {
            continue;
        }
        let rep = ambient_action(&u, m, n);
        acc += rep.map(|x| x * chi);
    }
    let scale = gamma.dim_q() as f64 / samples as f64;
    Ok(ProjectorEstimate {
        gamma: gamma.clone(),
        matrix: acc.map(|x| x * scale),
        method: ProjectorMethod::Haar,
        sample_count: Some(samples),
    })
}

/// Transform-route projector packaged like the other methods.
pub fn transform_projector(
    transform: &FullTransform,
    gamma: &Staircase,
) -> ProjectorEstimate {
    ProjectorEstimate {
        gamma: gamma.clone(),
        matrix: transform.isotypic_projector(gamma),
        method: ProjectorMethod::Transform,
        sample_count: None,
    }
}

// ---------------------------------------------------------------------------
// Walled Brauer generators.
// ---------------------------------------------------------------------------

/// Generators of the diagram algebra acting on m ordinary and n dual factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BrauerGenerator {
    Identity,
    /// Adjacent transposition of factors k, k+1 (1-based), both on the same
    /// side of the wall.
    Transposition(u32),
    /// The contraction joining the last ordinary and the first dual factor:
    /// d·|Φ⟩⟨Φ| on that pair, with Φ the normalized maximally entangled state.
    Contraction,
}

pub fn walled_brauer_generator_action(
    generator: BrauerGenerator,
    d: usize,
    m: u32,
    n: u32,
) -> Result<DMatrix<Complex64>> {
    let total = (m + n) as usize;
    let dim = d.pow(total as u32);
    match generator {
        BrauerGenerator::Identity => Ok(DMatrix::identity(dim, dim)),
        BrauerGenerator::Transposition(k) => {
            let k = k as usize;
            let same_side = (k >= 1 && k + 1 <= m as usize)
                || (k > m as usize && k + 1 <= total);
            if !same_side || k + 1 > total {
                return Err(Error::invalid(format!(
                    "transposition ({k} {}) crosses the wall or leaves [1, {total}]",
                    k + 1
                )));
            }
            let mut out = DMatrix::<Complex64>::zeros(dim, dim);
            for col in 0..dim {
                let mut digits = to_digits(col, d, total);
                digits.swap(k - 1, k);
                out[(from_digits(&digits, d), col)] = c64(1.0, 0.0);
            }
            Ok(out)
        }
        BrauerGenerator::Contraction => {
            if m == 0 || n == 0 {
                return Err(Error::invalid("contraction needs m >= 1 and n >= 1"));
            }
            let a = m as usize - 1;
            let b = m as usize;
            let mut out = DMatrix::<Complex64>::zeros(dim, dim);
            for col in 0..dim {
                let digits = to_digits(col, d, total);
                if digits[a] != digits[b] {
                    continue;
                }
                for j in 0..d {
                    let mut image = digits.clone();
                    image[a] = j;
                    image[b] = j;
                    out[(from_digits(&image, d), col)] += c64(1.0, 0.0);
                }
            }
            Ok(out)
        }
    }
}

fn to_digits(index: usize, d: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0usize; len];
    let mut rest = index;
    for pos in (0..len).rev() {
        digits[pos] = rest % d;
        rest /= d;
    }
    digits
}

fn from_digits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct IntertwinerReport {
    pub gamma: Staircase,
    pub direction: Direction,
    pub trials: u32,
    pub unitarity_residual: f64,
    pub max_off_block_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Conjugate the dense transform by the representation action and measure how
/// far the result is from block-diagonal over the branch labels.
pub fn verify_intertwiner(
    gamma: &Staircase,
    direction: Direction,
    trials: u32,
    tol: f64,
    seed: u64,
    cap: u64,
) -> Result<IntertwinerReport> {
    let d = gamma.d();
    let cg = cg_matrix_cached(gamma, direction, cap)?;
    let unitarity = crate::wigner::orthogonality_residual(&cg.matrix);
    let cgc = cg.matrix.map(|x| c64(x, 0.0));
    let mut rng = seeded_rng(seed, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u = haar_special_unitary(d, &mut rng);
        let q = irrep_action(gamma, &u, cap)?;
        let fresh = match direction {
            Direction::Cg => u.clone(),
            Direction::DualCg => u.map(|x| x.conj()),
        };
        let conj = &cgc * q.kronecker(&fresh) * cgc.adjoint();
        let block_of: Vec<usize> = {
            let mut v = vec![usize::MAX; conj.nrows()];
            for (idx, (_, range)) in cg.block_ranges.iter().enumerate() {
                for r in range.clone() {
                    v[r] = idx;
                }
            }
            v
        };
        for r in 0..conj.nrows() {
            for c in 0..conj.ncols() {
                if block_of[r] != block_of[c] {
                    worst = worst.max(conj[(r, c)].norm());
                }
            }
        }
    }
    Ok(IntertwinerReport {
        gamma: gamma.clone(),
        direction,
        trials,
        unitarity_residual: unitarity,
        max_off_block_residual: worst,
        tolerance: tol,
        pass: unitarity <= tol && worst <= tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub d: usize,
    pub m: u32,
    pub n: u32,
    pub max_probability_deviation: f64,
    pub min_post_state_fidelity: f64,
    pub dropped_mass: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Check the streaming sampler's exact distribution against the dense
/// transform: endpoint probabilities against the isotypic projectors and
/// per-path post states against the projected, partial-traced rows.
pub fn compare_sampler_oracle(source: &QuditSource, tol: f64, cap: u64) -> Result<CompareReport> {
    let (d, m, n) = (source.d(), source.m(), source.n());
    let transform = build_full_transform(d, m, n, cap)?;
    let state = source.dense_state();
    let mut stats = RunStats::default();
    let dist = exact_distribution(source, None, &mut stats)?;

    let mut max_dev: f64 = 0.0;
    for gamma in enumerate_staircases(d, m, n).iter() {
        let oracle_p = transform.outcome_probability(gamma, &state);
        let sampler_p = dist.probability_of(gamma);
        max_dev = max_dev.max((oracle_p - sampler_p).abs());
    }

    let mut min_fid: f64 = 1.0;
    let conditionals = transform.path_conditionals(&state);
    let by_path: HashMap<&YYPath, (f64, &Vec<Complex64>)> =
        conditionals.iter().map(|(p, prob, v)| (p, (*prob, v))).collect();
    for (path, p, reg) in dist.branches() {
        let Some((oracle_p, oracle_vec)) = by_path.get(path) else {
            return Err(Error::internal(format!("path {path:?} missing from oracle")));
        };
        if *p < 1e-12 && *oracle_p < 1e-12 {
            continue;
        }
        let fid = register_fidelity(reg, oracle_vec);
        min_fid = min_fid.min(fid);
        max_dev = max_dev.max((p - oracle_p).abs());
    }

    Ok(CompareReport {
        d,
        m,
        n,
        max_probability_deviation: max_dev,
        min_post_state_fidelity: min_fid,
        dropped_mass: dist.dropped_mass,
        tolerance: tol,
        pass: max_dev <= tol && min_fid >= 1.0 - tol,
    })
}

/// |⟨register|dense⟩|² with the dense vector in canonical pattern order.
pub fn register_fidelity(reg: &SchurRegister, dense: &[Complex64]) -> f64 {
    let mine = reg.to_dense();
    debug_assert_eq!(mine.len(), dense.len());
    let overlap: Complex64 = mine.iter().zip(dense).map(|(a, b)| a.conj() * b).sum();
    overlap.norm_sqr()
}

/// Instance-level verification: dimensions, unitarity, intertwining,
/// cross-method projectors and the sampling laws on seeded random states.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceReport {
    pub d: usize,
    pub m: u32,
    pub n: u32,
    pub dimension_sum_ok: bool,
    pub transform_unitarity_residual: f64,
    pub max_cg_unitarity_residual: f64,
    pub max_intertwiner_residual: f64,
    pub max_projector_cross_method_error: f64,
    pub max_commutant_residual: f64,
    pub max_probability_deviation: f64,
    pub min_post_state_fidelity: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn verify_instance(
    d: usize,
    m: u32,
    n: u32,
    tol: f64,
    seed: u64,
    cap: u64,
) -> Result<InstanceReport> {
    let staircases = enumerate_staircases(d, m, n);
    let dim_total: u64 = staircases.iter().map(|g| dim_p(g) * g.dim_q()).sum();
    let dimension_sum_ok = dim_total == (d as u64).pow(m + n);

    let transform = build_full_transform(d, m, n, cap)?;
    let transform_unitarity = unitarity_residual(&transform.matrix);

    let mut max_cg_res: f64 = 0.0;
    let mut max_inter: f64 = 0.0;
    for gamma in staircases.iter() {
        for direction in [Direction::Cg, Direction::DualCg] {
            if direction == Direction::DualCg && gamma.remove_box().is_empty() {
                continue;
            }
            let report = verify_intertwiner(gamma, direction, 3, tol, seed, cap)?;
            max_cg_res = max_cg_res.max(report.unitarity_residual);
            max_inter = max_inter.max(report.max_off_block_residual);
        }
    }

    // Cross-method projectors and commutant checks.
    let mut max_cross: f64 = 0.0;
    let mut max_comm: f64 = 0.0;
    let mut rng = seeded_rng(seed, 2);
    let u = haar_unitary(d, &mut rng);
    let rep = ambient_action(&u, m, n);
    let mut generators = vec![BrauerGenerator::Identity];
    for k in 1..m {
        generators.push(BrauerGenerator::Transposition(k));
    }
    for k in (m + 1)..(m + n) {
        generators.push(BrauerGenerator::Transposition(k));
    }
    if m >= 1 && n >= 1 {
        generators.push(BrauerGenerator::Contraction);
    }
    for gamma in staircases.iter() {
        let pi = transform.isotypic_projector(gamma);
        if n == 0 {
            let chars = sn_isotypic_projector(gamma, d)?;
            max_cross = max_cross.max(max_abs(&(&pi - &chars.matrix)));
        }
        max_comm = max_comm.max(max_abs(&(&pi * &rep - &rep * &pi)));
        for &g in &generators {
            let a = walled_brauer_generator_action(g, d, m, n)?;
            max_comm = max_comm.max(max_abs(&(&pi * &a - &a * &pi)));
        }
    }

    // Sampling laws on a few seeded random pure states.
    let mut max_dev: f64 = 0.0;
    let mut min_fid: f64 = 1.0;
    for trial in 0..3 {
        let mut rng = seeded_rng(seed, 3 + trial);
        let amps = haar_state(d.pow(m + n), &mut rng);
        let source = QuditSource::entangled(d, m, n, amps)?;
        let report = compare_sampler_oracle(&source, tol, cap)?;
        max_dev = max_dev.max(report.max_probability_deviation);
        min_fid = min_fid.min(report.min_post_state_fidelity);
    }

    let pass = dimension_sum_ok
        && transform_unitarity <= tol
        && max_cg_res <= tol
        && max_inter <= tol
        && max_cross <= tol
        && max_comm <= tol
        && max_dev <= tol
        && min_fid >= 1.0 - tol;
    Ok(InstanceReport {
        d,
        m,
        n,
        dimension_sum_ok,
        transform_unitarity_residual: transform_unitarity,
        max_cg_unitarity_residual: max_cg_res,
        max_intertwiner_residual: max_inter,
        max_projector_cross_method_error: max_cross,
        max_commutant_residual: max_comm,
        max_probability_deviation: max_dev,
        min_post_state_fidelity: min_fid,
        tolerance: tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(entries: &[i32], m: u32, n: u32) -> Staircase {
        Staircase::new(entries.to_vec(), m, n).unwrap()
    }

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = seeded_rng(1, 0);
        for d in 1..=4 {
            let u = haar_unitary(d, &mut rng);
            assert!(unitarity_residual(&u) < 1e-12);
            let su = haar_special_unitary(d, &mut rng);
            assert!(unitarity_residual(&su) < 1e-11);
            assert!((determinant(&su) - c64(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn weyl_character_at_identity_is_the_dimension() {
        for gamma in [sc(&[2, 0], 2, 0), sc(&[1, 0, -1], 1, 1), sc(&[2, 1, -1], 3, 1)] {
            let d = gamma.d();
            let chi = weyl_character(&gamma, &DMatrix::identity(d, d));
            assert!((chi.re - gamma.dim_q() as f64).abs() < 1e-8, "{gamma:?}: {chi}");
            assert!(chi.im.abs() < 1e-10);
        }
    }

    #[test]
    fn weyl_character_is_a_class_function() {
        let mut rng = seeded_rng(2, 0);
        let gamma = sc(&[2, 0, -1], 2, 1);
        let u = haar_unitary(3, &mut rng);
        let v = haar_unitary(3, &mut rng);
        let chi1 = weyl_character(&gamma, &u);
        let chi2 = weyl_character(&gamma, &(&v * &u * v.adjoint()));
        assert!((chi1 - chi2).norm() < 1e-9);
    }

    #[test]
    fn mn_characters_of_s3() {
        // Character table of S₃ on classes [1,1,1], [2,1], [3].
        let classes: [&[usize]; 3] = [&[1, 1, 1], &[2, 1], &[3]];
        let expected = [
            (&[3, 0, 0][..], [1i64, 1, 1]),
            (&[2, 1, 0][..], [2, 0, -1]),
            (&[1, 1, 1][..], [1, -1, 1]),
        ];
        for (lambda, chis) in expected {
            for (cls, want) in classes.iter().zip(chis) {
                assert_eq!(mn_character(lambda, cls), want, "λ={lambda:?}, class={cls:?}");
            }
        }
    }

    #[test]
    fn dim_of_sn_irrep_matches_path_count() {
        for m in 1..=5u32 {
            for lambda in enumerate_staircases(2, m, 0).iter() {
                let dim = mn_character(lambda.entries(), &vec![1; m as usize]);
                assert_eq!(dim as u64, dim_p(lambda), "λ = {lambda:?}");
            }
        }
    }

    #[test]
    fn symmetrizer_and_antisymmetrizer() {
        let sym = sn_isotypic_projector(&sc(&[2, 0], 2, 0), 2).unwrap();
        let swap = walled_brauer_generator_action(BrauerGenerator::Transposition(1), 2, 2, 0)
            .unwrap();
        let eye = DMatrix::<Complex64>::identity(4, 4);
        let want = (&eye + &swap).map(|x| x * 0.5);
        assert!(max_abs(&(&sym.matrix - &want)) < 1e-12);
        assert!((sym.trace().re - 3.0).abs() < 1e-12);

        let anti = sn_isotypic_projector(&sc(&[1, 1], 2, 0), 2).unwrap();
        let want = (&eye - &swap).map(|x| x * 0.5);
        assert!(max_abs(&(&anti.matrix - &want)) < 1e-12);
        assert!((anti.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hook_irrep_projector_rank() {
        // λ = (2,1), d = 2, m = 3: rank = dim P · dim Q = 2·2 = 4.
        let proj = sn_isotypic_projector(&sc(&[2, 1], 3, 0), 2).unwrap();
        assert!((proj.trace().re - 4.0).abs() < 1e-10);
        assert!(proj.idempotency_residual() < 1e-10);
        assert!(proj.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn contraction_matrix_shape() {
        let e = walled_brauer_generator_action(BrauerGenerator::Contraction, 2, 1, 1).unwrap();
        let trace: Complex64 = (0..4).map(|i| e[(i, i)]).sum();
        assert!((trace.re - 2.0).abs() < 1e-12);
        // d·|Φ⟩⟨Φ| squares to d·itself.
        let sq = &e * &e;
        assert!(max_abs(&(sq - e.map(|x| x * 2.0))) < 1e-12);
    }

    #[test]
    fn transform_blocks_and_ranks_for_two_qubits() {
        let t = build_full_transform(2, 2, 0, DEFAULT_DENSE_CAP).unwrap();
        assert!(unitarity_residual(&t.matrix) < 1e-10);
        let sym = t.isotypic_projector(&sc(&[2, 0], 2, 0));
        let anti = t.isotypic_projector(&sc(&[1, 1], 2, 0));
        let sym_rank: Complex64 = (0..4).map(|i| sym[(i, i)]).sum();
        let anti_rank: Complex64 = (0..4).map(|i| anti[(i, i)]).sum();
        assert!((sym_rank.re - 3.0).abs() < 1e-9);
        assert!((anti_rank.re - 1.0).abs() < 1e-9);

        // Against the independent permutation-character route.
        let chars = sn_isotypic_projector(&sc(&[2, 0], 2, 0), 2).unwrap();
        assert!(max_abs(&(&sym - &chars.matrix)) < 1e-10);
    }

    #[test]
    fn transform_block_dimensions_mixed() {
        let t = build_full_transform(2, 1, 1, DEFAULT_DENSE_CAP).unwrap();
        assert!(unitarity_residual(&t.matrix) < 1e-10);
        let trivial = t.isotypic_projector(&sc(&[0, 0], 1, 1));
        let adjoint = t.isotypic_projector(&sc(&[1, -1], 1, 1));
        let tr1: Complex64 = (0..4).map(|i| trivial[(i, i)]).sum();
        let tr2: Complex64 = (0..4).map(|i| adjoint[(i, i)]).sum();
        assert!((tr1.re - 1.0).abs() < 1e-9);
        assert!((tr2.re - 3.0).abs() < 1e-9);

        let t = build_full_transform(3, 2, 0, DEFAULT_DENSE_CAP).unwrap();
        let p1 = t.isotypic_projector(&sc(&[2, 0, 0], 2, 0));
        let p2 = t.isotypic_projector(&sc(&[1, 1, 0], 2, 0));
        let tr1: Complex64 = (0..9).map(|i| p1[(i, i)]).sum();
        let tr2: Complex64 = (0..9).map(|i| p2[(i, i)]).sum();
        assert!((tr1.re - 6.0).abs() < 1e-9);
        assert!((tr2.re - 3.0).abs() < 1e-9);
    }

    #[test]
    fn projectors_commute_with_the_commutant() {
        let t = build_full_transform(2, 1, 1, DEFAULT_DENSE_CAP).unwrap();
        let mut rng = seeded_rng(6, 0);
        let u = haar_unitary(2, &mut rng);
        let rep = ambient_action(&u, 1, 1);
        let e = walled_brauer_generator_action(BrauerGenerator::Contraction, 2, 1, 1).unwrap();
        for gamma in enumerate_staircases(2, 1, 1).iter() {
            let pi = t.isotypic_projector(gamma);
            assert!(max_abs(&(&pi * &rep - &rep * &pi)) < 1e-9);
            assert!(max_abs(&(&pi * &e - &e * &pi)) < 1e-9);
        }
    }

    #[test]
    fn haar_estimate_traces_converge() {
        // Fixed-seed smoke runs with modest sample counts.
        let est = haar_projector_estimate(&sc(&[2, 0], 2, 0), 2, 4000, 77).unwrap();
        let bound = 5.0 / (4000f64).sqrt();
        assert!((est.trace().re - 3.0).abs() < 3.0 * bound * 4.0);
        assert!(est.hermiticity_residual() < 1.0);

        let est = haar_projector_estimate(&sc(&[1, -1], 1, 1), 2, 4000, 78).unwrap();
        assert!((est.trace().re - 3.0).abs() < 3.0 * bound * 4.0);
        let est = haar_projector_estimate(&sc(&[0, 0], 1, 1), 2, 4000, 79).unwrap();
        assert!((est.trace().re - 1.0).abs() < 3.0 * bound * 4.0);
    }

    #[test]
    fn small_instances_verify_end_to_end() {
        for (d, m, n) in [(2, 2, 0), (2, 1, 1), (3, 1, 1), (2, 2, 1)] {
            let report = verify_instance(d, m, n, 1e-8, 1234, DEFAULT_DENSE_CAP).unwrap();
            assert!(report.pass, "instance d={d} m={m} n={n}: {report:?}");
        }
    }
}
