//! The streaming sampler: consume qudits one at a time, apply the (dual)
//! Clebsch-Gordan transform, measure the branching label, renormalize, and
//! emit the visited path, the final label and the post-measurement register.
//!
//! Absorbing the first qudit is itself a transform step from the trivial
//! register, so the loop is uniform over all m + n qudits: ordinary qudits
//! add boxes, dual qudits remove them. Product streams keep the register
//! sparse; fully entangled inputs are supported in a deferred mode that holds
//! the unreceived suffix in memory for oracle cross-checks, deliberately
//! giving up the streaming memory advantage.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cg::{cascade_terms, cg_apply, group_blocks, CascadeKey, CgStats, SchurRegister};
use crate::combinatorics::{GTPattern, Staircase, YYPath};
use crate::error::{Error, Result};
use crate::wigner::{Direction, RankBounds};

const NORMALIZATION_TOL: f64 = 1e-9;
/// Branches thinner than this are dropped in exact mode, with the mass kept
/// on record.
const BRANCH_FLOOR: f64 = 1e-14;

/// Stream of m ordinary and n dual qudits of dimension d.
#[derive(Clone, Debug)]
pub enum QuditSource {
    /// m normalized vectors followed by n normalized dual vectors
    /// (coordinates in the dual basis).
    Product { d: usize, m: u32, n: u32, qudits: Vec<Vec<Complex64>> },
    /// One pure statevector over all m + n qudits, row-major with the
    /// leftmost qudit most significant.
    Entangled { d: usize, m: u32, n: u32, amplitudes: Vec<Complex64> },
}

impl QuditSource {
    pub fn product(d: usize, m: u32, n: u32, qudits: Vec<Vec<Complex64>>) -> Result<Self> {
        if m + n == 0 {
            return Err(Error::invalid("source must contain at least one qudit"));
        }
        if qudits.len() != (m + n) as usize {
            return Err(Error::invalid(format!(
                "product source has {} qudits, expected m + n = {}",
                qudits.len(),
                m + n
            )));
        }
        for (idx, q) in qudits.iter().enumerate() {
            if q.len() != d {
                return Err(Error::invalid(format!(
                    "qudit {idx} has {} amplitudes, expected d = {d}",
                    q.len()
                )));
            }
            let norm: f64 = q.iter().map(|c| c.norm_sqr()).sum();
            if (norm - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::invalid(format!("qudit {idx} has norm² {norm}")));
            }
        }
        Ok(QuditSource::Product { d, m, n, qudits })
    }

    pub fn entangled(d: usize, m: u32, n: u32, amplitudes: Vec<Complex64>) -> Result<Self> {
        if m + n == 0 {
            return Err(Error::invalid("source must contain at least one qudit"));
        }
        let want = (d as u64).checked_pow(m + n).ok_or_else(|| Error::invalid("dimension overflow"))?;
        if amplitudes.len() as u64 != want {
            return Err(Error::invalid(format!(
                "entangled source has {} amplitudes, expected d^(m+n) = {want}",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!("statevector has norm² {norm}")));
        }
        Ok(QuditSource::Entangled { d, m, n, amplitudes })
    }

    pub fn d(&self) -> usize {
        match self {
            QuditSource::Product { d, .. } | QuditSource::Entangled { d, .. } => *d,
        }
    }

    pub fn m(&self) -> u32 {
        match self {
            QuditSource::Product { m, .. } | QuditSource::Entangled { m, .. } => *m,
        }
    }

    pub fn n(&self) -> u32 {
        match self {
            QuditSource::Product { n, .. } | QuditSource::Entangled { n, .. } => *n,
        }
    }

    pub fn total(&self) -> u32 {
        self.m() + self.n()
    }

    /// Dense ambient statevector (dual coordinates as stored), for oracle
    /// comparisons.
    pub fn dense_state(&self) -> Vec<Complex64> {
        match self {
            QuditSource::Entangled { amplitudes, .. } => amplitudes.clone(),
            QuditSource::Product { qudits, .. } => {
                let mut v = vec![Complex64::new(1.0, 0.0)];
                for q in qudits {
                    let mut next = Vec::with_capacity(v.len() * q.len());
                    for a in &v {
                        for b in q {
                            next.push(a * b);
                        }
                    }
                    v = next;
                }
                v
            }
        }
    }
}

/// One sampled trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct SamplingOutcome {
    pub seed: u64,
    pub shot_index: u64,
    /// Visited labels γ¹ … γ^{m+n}.
    pub path: YYPath,
    /// Final label Γ.
    pub staircase: Staircase,
    /// Normalized post-measurement state on Q_Γ.
    #[serde(serialize_with = "serialize_register")]
    pub post_state: SchurRegister,
    /// Exact branch probability; absent in shot mode.
    pub probability: Option<f64>,
}

fn serialize_register<S: serde::Serializer>(
    reg: &SchurRegister,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry {
        pattern: GTPattern,
        amp: [f64; 2],
    }
    #[derive(Serialize)]
    struct Reg<'a> {
        gamma: &'a Staircase,
        amplitudes: Vec<Entry>,
    }
    let entries: Vec<Entry> = reg
        .sorted_amplitudes()
        .into_iter()
        .map(|(pattern, a)| Entry { pattern, amp: [a.re, a.im] })
        .collect();
    Reg { gamma: reg.gamma(), amplitudes: entries }.serialize(s)
}

/// Per-run instrumentation: what the streaming pass actually did.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RunStats {
    pub coefficient_evals: u64,
    pub max_register_keys: usize,
    pub rotation_dim: usize,
    pub pruned_mass: f64,
    /// Steps executed (qudits absorbed).
    pub steps: u32,
}

impl RunStats {
    fn absorb(&mut self, cg: &CgStats) {
        self.coefficient_evals += cg.coefficient_evals;
        self.rotation_dim = self.rotation_dim.max(cg.rotation_dim);
        self.pruned_mass += cg.pruned_mass;
    }

    pub fn merge(&mut self, other: &RunStats) {
        self.coefficient_evals += other.coefficient_evals;
        self.max_register_keys = self.max_register_keys.max(other.max_register_keys);
        self.rotation_dim = self.rotation_dim.max(other.rotation_dim);
        self.pruned_mass += other.pruned_mass;
        self.steps += other.steps;
    }
}

fn direction_for_step(k: u32, m: u32) -> Direction {
    // Qudit k (1-based) is ordinary for k ≤ m.
    if k <= m {
        Direction::Cg
    } else {
        Direction::DualCg
    }
}

/// Live state of a stream being absorbed.
enum LiveState {
    Product { register: SchurRegister },
    /// Register entangled with the unreceived suffix: each pattern key holds
    /// a vector over the remaining computational indices.
    Deferred { gamma: Staircase, amps: HashMap<GTPattern, Vec<Complex64>> },
}

impl LiveState {
    fn key_count(&self) -> usize {
        match self {
            LiveState::Product { register } => register.key_count(),
            LiveState::Deferred { amps, .. } => amps.len(),
        }
    }

    fn gamma(&self) -> &Staircase {
        match self {
            LiveState::Product { register } => register.gamma(),
            LiveState::Deferred { gamma, .. } => gamma,
        }
    }

    /// Expand one absorption step into its branch blocks.
    fn branches(
        &self,
        source: &QuditSource,
        step: u32,
        rank: Option<RankBounds>,
        stats: &mut RunStats,
    ) -> Result<Vec<(Staircase, f64, LiveState)>> {
        let direction = direction_for_step(step, source.m());
        let mut cg_stats = CgStats::default();
        let out = match self {
            LiveState::Product { register } => {
                let qudit = match source {
                    QuditSource::Product { qudits, .. } => &qudits[(step - 1) as usize],
                    _ => unreachable!("product state needs a product source"),
                };
                let out = cg_apply(register, qudit, direction, rank, &mut cg_stats)?;
                out.blocks()
                    .iter()
                    .map(|(g, b)| {
                        let mut reg = b.register.clone();
                        let scale = b.weight.sqrt();
                        if scale > 0.0 {
                            for a in reg.amplitudes_mut().values_mut() {
                                *a /= scale;
                            }
                        }
                        (g.clone(), b.weight, LiveState::Product { register: reg })
                    })
                    .collect()
            }
            LiveState::Deferred { gamma, amps } => {
                let d = source.d();
                let suffix_len = amps.values().next().map(|v| v.len()).unwrap_or(0);
                let chunk = suffix_len / d;
                let mut terms: HashMap<CascadeKey, Vec<Complex64>> = HashMap::new();
                for (pattern, vec) in amps {
                    for k in 1..=d {
                        let slice = vec[(k - 1) * chunk..k * chunk].to_vec();
                        if slice.iter().any(|c| c.norm_sqr() > 0.0) {
                            terms.insert((pattern.clone(), k), slice);
                        }
                    }
                }
                let out = cascade_terms(d, direction, terms, rank, &mut cg_stats)?;
                let (m, n) = match direction {
                    Direction::Cg => (gamma.m() + 1, gamma.n()),
                    Direction::DualCg => (gamma.m(), gamma.n() + 1),
                };
                group_blocks(m, n, out, &mut cg_stats)?
                    .into_iter()
                    .map(|(g, w, mut amps)| {
                        let scale = w.sqrt();
                        if scale > 0.0 {
                            for v in amps.values_mut() {
                                for c in v.iter_mut() {
                                    *c /= scale;
                                }
                            }
                        }
                        (g.clone(), w, LiveState::Deferred { gamma: g, amps })
                    })
                    .collect()
            }
        };
        stats.absorb(&cg_stats);
        stats.max_register_keys = stats.max_register_keys.max(self.key_count());
        Ok(out)
    }

    fn into_register(self) -> Result<SchurRegister> {
        match self {
            LiveState::Product { register } => Ok(register),
            LiveState::Deferred { gamma, amps } => {
                // Fully absorbed: suffix vectors have length one.
                let mut flat = HashMap::with_capacity(amps.len());
                for (p, v) in amps {
                    if v.len() != 1 {
                        return Err(Error::internal("deferred suffix not fully absorbed"));
                    }
                    flat.insert(p, v[0]);
                }
                SchurRegister::new(gamma, flat)
            }
        }
    }
}

fn initial_state(source: &QuditSource) -> LiveState {
    let d = source.d();
    match source {
        QuditSource::Product { .. } => LiveState::Product { register: SchurRegister::vacuum(d) },
        QuditSource::Entangled { amplitudes, .. } => {
            let mut amps = HashMap::new();
            let vacuum = SchurRegister::vacuum(d);
            let pattern = vacuum.amplitudes().keys().next().unwrap().clone();
            amps.insert(pattern, amplitudes.clone());
            LiveState::Deferred { gamma: Staircase::vacuum(d), amps }
        }
    }
}

/// Drive one seeded trajectory through the stream. Shots are independent
/// given (seed, shot_index); shot i draws from the stream derived from both,
/// so shots can run concurrently and reproduce exactly.
pub fn sample_run(
    source: &QuditSource,
    seed: u64,
    shot_index: u64,
    rank: Option<RankBounds>,
    stats: &mut RunStats,
) -> Result<SamplingOutcome> {
    let mut rng = seeded_shot_rng(seed, shot_index);
    let mut state = initial_state(source);
    let mut path = Vec::with_capacity(source.total() as usize);
    for step in 1..=source.total() {
        let branches = state.branches(source, step, rank, stats)?;
        stats.steps += 1;
        let pick: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        // Inverse CDF over blocks in canonical label order. Weight-zero
        // blocks are never produced, so every draw lands somewhere.
        let last = branches.len() - 1;
        for (idx, (gamma, weight, next)) in branches.into_iter().enumerate() {
            acc += weight;
            if pick < acc || idx == last {
                path.push(gamma);
                chosen = Some(next);
                break;
            }
        }
        state = chosen.ok_or_else(|| Error::internal("no branch selected"))?;
    }
    stats.max_register_keys = stats.max_register_keys.max(state.key_count());
    let staircase = state.gamma().clone();
    let mut post_state = state.into_register()?;
    post_state.normalize();
    Ok(SamplingOutcome {
        seed,
        shot_index,
        path: YYPath::new(path)?,
        staircase,
        post_state,
        probability: None,
    })
}

pub fn seeded_shot_rng(seed: u64, shot_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot_index);
    rng
}

/// Every trajectory with its exact probability and post-measurement state.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    branches: Vec<(YYPath, f64, SchurRegister)>,
    pub dropped_mass: f64,
}

impl ExactDistribution {
    pub fn branches(&self) -> &[(YYPath, f64, SchurRegister)] {
        &self.branches
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|(_, p, _)| p).sum()
    }

    /// Path probabilities folded by endpoint, canonical order.
    pub fn marginal_staircase_distribution(&self) -> Vec<(Staircase, f64)> {
        let mut acc: HashMap<Staircase, f64> = HashMap::new();
        for (path, p, _) in &self.branches {
            *acc.entry(path.endpoint().clone()).or_insert(0.0) += p;
        }
        let mut v: Vec<(Staircase, f64)> = acc.into_iter().collect();
        v.sort_by(|a, b| crate::combinatorics::canonical_cmp(&a.0, &b.0));
        v
    }

    pub fn probability_of(&self, gamma: &Staircase) -> f64 {
        self.branches
            .iter()
            .filter(|(path, _, _)| path.endpoint() == gamma)
            .map(|(_, p, _)| p)
            .sum()
    }
}

/// Enumerate all measurement branches instead of sampling.
pub fn exact_distribution(
    source: &QuditSource,
    rank: Option<RankBounds>,
    stats: &mut RunStats,
) -> Result<ExactDistribution> {
    let mut branches = Vec::new();
    let mut dropped = 0.0;
    let mut frontier: Vec<(Vec<Staircase>, f64, LiveState)> =
        vec![(Vec::new(), 1.0, initial_state(source))];
    for step in 1..=source.total() {
        let mut next = Vec::new();
        for (path, prob, state) in frontier {
            for (gamma, weight, child) in state.branches(source, step, rank, stats)? {
                let p = prob * weight;
                if p < BRANCH_FLOOR {
                    dropped += p;
                    continue;
                }
                let mut path = path.clone();
                path.push(gamma);
                next.push((path, p, child));
            }
        }
        stats.steps += 1;
        frontier = next;
    }
    for (path, p, state) in frontier {
        let mut reg = state.into_register()?;
        reg.normalize();
        branches.push((YYPath::new(path)?, p, reg));
    }
    branches.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ExactDistribution { branches, dropped_mass: dropped })
}

/// Endpoint marginals of an exact distribution.
pub fn marginal_staircase_distribution(dist: &ExactDistribution) -> Vec<(Staircase, f64)> {
    dist.marginal_staircase_distribution()
}

#[derive(Deserialize)]
struct StateFile {
    d: usize,
    m: u32,
    n: u32,
    mode: String,
    #[serde(default)]
    qudits: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    amplitudes: Option<Vec<[f64; 2]>>,
}

impl QuditSource {
    /// Parse the JSON state format: {"d", "m", "n", "mode": "product" |
    /// "entangled", "qudits": [[[re, im], …], …]} or {"amplitudes": [[re,
    /// im], …]} row-major with the leftmost qudit most significant.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("state file: {e}")))?;
        match file.mode.as_str() {
            "product" => {
                let raw = file.qudits.ok_or_else(|| {
                    Error::invalid("state file: mode \"product\" requires field \"qudits\"")
                })?;
                let qudits = raw
                    .into_iter()
                    .map(|q| q.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                    .collect();
                QuditSource::product(file.d, file.m, file.n, qudits)
            }
            "entangled" => {
                let raw = file.amplitudes.ok_or_else(|| {
                    Error::invalid("state file: mode \"entangled\" requires field \"amplitudes\"")
                })?;
                let amplitudes =
                    raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
                QuditSource::entangled(file.d, file.m, file.n, amplitudes)
            }
            other => Err(Error::invalid(format!(
                "state file: field \"mode\" must be \"product\" or \"entangled\", got {other:?}"
            ))),
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            d: usize,
            m: u32,
            n: u32,
            mode: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            qudits: Option<Vec<Vec<[f64; 2]>>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            amplitudes: Option<Vec<[f64; 2]>>,
        }
        let out = match self {
            QuditSource::Product { d, m, n, qudits } => Out {
                d: *d,
                m: *m,
                n: *n,
                mode: "product",
                qudits: Some(
                    qudits.iter().map(|q| q.iter().map(|c| [c.re, c.im]).collect()).collect(),
                ),
                amplitudes: None,
            },
            QuditSource::Entangled { d, m, n, amplitudes } => Out {
                d: *d,
                m: *m,
                n: *n,
                mode: "entangled",
                qudits: None,
                amplitudes: Some(amplitudes.iter().map(|c| [c.re, c.im]).collect()),
            },
        };
        serde_json::to_string(&out).expect("state serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sc(entries: &[i32], m: u32, n: u32) -> Staircase {
        Staircase::new(entries.to_vec(), m, n).unwrap()
    }

    fn ket(d: usize, k: usize) -> Vec<Complex64> {
        (0..d).map(|i| c(if i == k { 1.0 } else { 0.0 }, 0.0)).collect()
    }

    #[test]
    fn symmetric_product_is_deterministic() {
        let source =
            QuditSource::product(2, 2, 0, vec![ket(2, 0), ket(2, 0)]).unwrap();
        let mut stats = RunStats::default();
        let out = sample_run(&source, 1, 0, None, &mut stats).unwrap();
        assert_eq!(out.staircase, sc(&[2, 0], 2, 0));
        let dist = exact_distribution(&source, None, &mut stats).unwrap();
        let marg = dist.marginal_staircase_distribution();
        assert_eq!(marg.len(), 1);
        assert!((marg[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singlet_lands_in_the_antisymmetric_label() {
        let s = 1.0 / 2f64.sqrt();
        let source = QuditSource::entangled(
            2,
            2,
            0,
            vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let mut stats = RunStats::default();
        for shot in 0..20 {
            let out = sample_run(&source, 7, shot, None, &mut stats).unwrap();
            assert_eq!(out.staircase, sc(&[1, 1], 2, 0));
        }
        let dist = exact_distribution(&source, None, &mut stats).unwrap();
        assert_eq!(dist.branches().len(), 1);
        let (path, p, _) = &dist.branches()[0];
        assert_eq!(path.steps(), &[sc(&[1, 0], 1, 0), sc(&[1, 1], 2, 0)]);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_qubit_ensemble_recovers_projector_ranks() {
        // Mixing the four computational two-qubit states weights each label
        // by its isotypic dimension: 3/4 and 1/4.
        let mut p_sym = 0.0;
        let mut stats = RunStats::default();
        for a in 0..2 {
            for b in 0..2 {
                let source =
                    QuditSource::product(2, 2, 0, vec![ket(2, a), ket(2, b)]).unwrap();
                let dist = exact_distribution(&source, None, &mut stats).unwrap();
                p_sym += 0.25 * dist.probability_of(&sc(&[2, 0], 2, 0));
            }
        }
        assert!((p_sym - 0.75).abs() < 1e-12);
    }

    #[test]
    fn product_pair_antisymmetric_probability_formula() {
        // p((1,1)) = (1 − |⟨ψ₁|ψ₂⟩|²)/2 for a qubit product pair.
        let mut rng = crate::oracle::seeded_rng(21, 0);
        for _ in 0..5 {
            let psi1 = crate::oracle::haar_state(2, &mut rng);
            let psi2 = crate::oracle::haar_state(2, &mut rng);
            let overlap: Complex64 =
                psi1.iter().zip(&psi2).map(|(a, b)| a.conj() * b).sum();
            let want = (1.0 - overlap.norm_sqr()) / 2.0;
            let source = QuditSource::product(2, 2, 0, vec![psi1, psi2]).unwrap();
            let mut stats = RunStats::default();
            let dist = exact_distribution(&source, None, &mut stats).unwrap();
            let got = dist.probability_of(&sc(&[1, 1], 2, 0));
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
    }

    #[test]
    fn exact_probabilities_sum_to_one() {
        let mut rng = crate::oracle::seeded_rng(3, 0);
        let amps = crate::oracle::haar_state(8, &mut rng);
        let source = QuditSource::entangled(2, 3, 0, amps).unwrap();
        let mut stats = RunStats::default();
        let dist = exact_distribution(&source, None, &mut stats).unwrap();
        assert!((dist.total_probability() - 1.0).abs() < 1e-9);
        for (_, _, reg) in dist.branches() {
            assert!(reg.is_normalized());
        }
    }

    #[test]
    fn register_support_stays_within_the_irrep_dimension() {
        let mut rng = crate::oracle::seeded_rng(5, 0);
        let qudits: Vec<Vec<Complex64>> =
            (0..5).map(|_| crate::oracle::haar_state(2, &mut rng)).collect();
        let source = QuditSource::product(2, 5, 0, qudits).unwrap();
        let mut stats = RunStats::default();
        let out = sample_run(&source, 9, 0, None, &mut stats).unwrap();
        assert!(stats.max_register_keys as u64 <= out.staircase.dim_q().max(6));
        assert!(out.post_state.key_count() as u64 <= out.staircase.dim_q());
    }

    #[test]
    fn mixed_stream_visits_valid_contexts() {
        let mut rng = crate::oracle::seeded_rng(12, 0);
        let qudits: Vec<Vec<Complex64>> =
            (0..4).map(|_| crate::oracle::haar_state(3, &mut rng)).collect();
        let source = QuditSource::product(3, 2, 2, qudits).unwrap();
        let mut stats = RunStats::default();
        let out = sample_run(&source, 4, 0, None, &mut stats).unwrap();
        assert_eq!(out.path.len(), 4);
        assert_eq!(out.path.endpoint(), &out.staircase);
        assert_eq!(out.staircase.m(), 2);
        assert_eq!(out.staircase.n(), 2);
    }

    #[test]
    fn shots_are_reproducible_and_streams_independent() {
        let mut rng = crate::oracle::seeded_rng(8, 0);
        let amps = crate::oracle::haar_state(8, &mut rng);
        let source = QuditSource::entangled(2, 3, 0, amps).unwrap();
        let mut s1 = RunStats::default();
        let a = sample_run(&source, 42, 3, None, &mut s1).unwrap();
        let b = sample_run(&source, 42, 3, None, &mut s1).unwrap();
        assert_eq!(a.path, b.path);
        let dense_a = a.post_state.to_dense();
        let dense_b = b.post_state.to_dense();
        for (x, y) in dense_a.iter().zip(&dense_b) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn permuting_ordinary_product_qudits_fixes_marginals() {
        let mut rng = crate::oracle::seeded_rng(17, 0);
        let q: Vec<Vec<Complex64>> =
            (0..3).map(|_| crate::oracle::haar_state(2, &mut rng)).collect();
        let mut stats = RunStats::default();
        let base = exact_distribution(
            &QuditSource::product(2, 3, 0, q.clone()).unwrap(),
            None,
            &mut stats,
        )
        .unwrap()
        .marginal_staircase_distribution();
        for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let permuted: Vec<Vec<Complex64>> = perm.iter().map(|&i| q[i].clone()).collect();
            let dist = exact_distribution(
                &QuditSource::product(2, 3, 0, permuted).unwrap(),
                None,
                &mut stats,
            )
            .unwrap()
            .marginal_staircase_distribution();
            for ((g1, p1), (g2, p2)) in base.iter().zip(&dist) {
                assert_eq!(g1, g2);
                assert!((p1 - p2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn state_file_roundtrip_and_errors() {
        let src = QuditSource::product(2, 1, 1, vec![ket(2, 0), ket(2, 1)]).unwrap();
        let json = src.to_json();
        let back = QuditSource::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);

        assert!(QuditSource::from_json("{\"d\":2}").is_err());
        let bad = r#"{"d":2,"m":1,"n":0,"mode":"product","qudits":[[[2,0],[0,0]]]}"#;
        assert!(QuditSource::from_json(bad).is_err());
        let empty = r#"{"d":2,"m":0,"n":0,"mode":"product","qudits":[]}"#;
        assert!(QuditSource::from_json(empty).is_err());
    }
}
