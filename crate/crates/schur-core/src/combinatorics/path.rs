//! Young-Yamanouchi paths: staircase sequences labelling the basis vectors of
//! a walled Brauer irrep.
//!
//! A path to γ ⊢_d (m, n) starts at (1, 0, …, 0) when m ≥ 1 (else at
//! (0, …, 0, −1)), adds a box at each of the first m steps and removes one at
//! each of the last n. There is no product formula for the walled Brauer
//! dimension here; it is defined as the path count and computed by memoized
//! dynamic programming over the branching graph.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::staircase::Staircase;
use crate::error::{Error, Result};

/// Staircase sequence from the one-box label to its endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YYPath {
    steps: Vec<Staircase>,
}

impl YYPath {
    pub fn new(steps: Vec<Staircase>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::invalid("path must have at least one step"));
        }
        let d = steps[0].d();
        let first = &steps[0];
        let expected_first =
            if first.m() >= 1 { Staircase::defining(d) } else { Staircase::dual_defining(d) };
        if *first != expected_first {
            return Err(Error::invalid(format!("path must start at {expected_first:?}")));
        }
        for w in steps.windows(2) {
            let grows = w[1].m() == w[0].m() + 1 && w[1].n() == w[0].n();
            let shrinks = w[1].m() == w[0].m() && w[1].n() == w[0].n() + 1;
            let set = if grows {
                w[0].add_box()
            } else if shrinks {
                w[0].remove_box()
            } else {
                return Err(Error::invalid(format!(
                    "path step {:?} -> {:?} changes neither m nor n by one",
                    w[0], w[1]
                )));
            };
            if !set.contains(&w[1]) {
                return Err(Error::invalid(format!("{:?} is not a box move of {:?}", w[1], w[0])));
            }
            // Box removals must come after all additions.
            if grows && w[0].n() > 0 {
                return Err(Error::invalid("box additions must precede removals"));
            }
        }
        Ok(YYPath { steps })
    }

    pub fn steps(&self) -> &[Staircase] {
        &self.steps
    }

    pub fn endpoint(&self) -> &Staircase {
        self.steps.last().expect("paths are nonempty")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Serialize for YYPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<&[i32]> = self.steps.iter().map(|s| s.entries()).collect();
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for YYPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<Vec<i32>>::deserialize(deserializer)?;
        let total = raw.len() as u32;
        let mut steps = Vec::with_capacity(raw.len());
        // Infer each step's context: m grows until entries start shrinking.
        let mut m = 0u32;
        let mut n = 0u32;
        let mut prev_sum = 0i64;
        for entries in raw {
            let sum: i64 = entries.iter().map(|&e| e as i64).sum();
            if sum == prev_sum + 1 && n == 0 {
                m += 1;
            } else {
                n += 1;
            }
            prev_sum = sum;
            steps.push(Staircase::new(entries, m, n).map_err(D::Error::custom)?);
        }
        if m + n != total {
            return Err(D::Error::custom("inconsistent path contexts"));
        }
        YYPath::new(steps).map_err(D::Error::custom)
    }
}

/// Lazy depth-first enumeration of all paths to `target`, walking the
/// branching graph backwards through `parents` (canonical order) and emitting
/// forward sequences.
pub struct PathIter {
    // Stack of (staircase, its parents, next parent index). stack[0] holds
    // the target; a full chain down to weight 1 is one path, reversed.
    stack: Vec<Frame>,
    done: bool,
}

struct Frame {
    node: Staircase,
    parents: Vec<Staircase>,
    next: usize,
}

impl Frame {
    fn new(node: Staircase) -> Self {
        let parents = node.parents().into_iter().collect();
        Frame { node, parents, next: 0 }
    }
}

impl PathIter {
    fn new(target: &Staircase) -> Self {
        let mut it = PathIter { stack: vec![Frame::new(target.clone())], done: false };
        if !it.descend() {
            it.done = true;
        }
        it
    }

    /// Extend the chain with first-choice parents until weight 1 is reached.
    fn descend(&mut self) -> bool {
        loop {
            let top = self.stack.last().expect("stack never empty");
            if top.node.weight() == 1 {
                return true;
            }
            if top.parents.is_empty() {
                return self.backtrack();
            }
            let child = top.parents[0].clone();
            self.stack.last_mut().unwrap().next = 1;
            self.stack.push(Frame::new(child));
        }
    }

    /// Pop exhausted frames and move to the next unexplored parent.
    fn backtrack(&mut self) -> bool {
        loop {
            self.stack.pop();
            let Some(top) = self.stack.last_mut() else {
                return false;
            };
            if top.next < top.parents.len() {
                let child = top.parents[top.next].clone();
                top.next += 1;
                self.stack.push(Frame::new(child));
                return self.descend_from_top();
            }
        }
    }

    fn descend_from_top(&mut self) -> bool {
        let top = self.stack.last().expect("stack never empty");
        if top.node.weight() == 1 {
            return true;
        }
        self.descend()
    }

    fn emit(&self) -> YYPath {
        let steps: Vec<Staircase> = self.stack.iter().rev().map(|f| f.node.clone()).collect();
        YYPath { steps }
    }
}

impl Iterator for PathIter {
    type Item = YYPath;

    fn next(&mut self) -> Option<YYPath> {
        if self.done {
            return None;
        }
        let path = self.emit();
        if !self.backtrack() {
            self.done = true;
        }
        Some(path)
    }
}

/// All Young-Yamanouchi paths to γ, lazily.
pub fn enumerate_paths(gamma: &Staircase) -> PathIter {
    PathIter::new(gamma)
}

/// Paths materialized, capped.
pub fn paths_capped(gamma: &Staircase, cap: usize) -> Result<Vec<YYPath>> {
    super::collect_with_cap(enumerate_paths(gamma), cap, "path enumeration")
}

static DIM_P_MEMO: OnceLock<Mutex<HashMap<Staircase, u64>>> = OnceLock::new();

/// Walled Brauer irrep dimension: the number of paths to γ.
pub fn dim_p(gamma: &Staircase) -> u64 {
    if gamma.weight() == 1 {
        return 1;
    }
    let memo = DIM_P_MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = memo.lock().unwrap().get(gamma) {
        return v;
    }
    let value: u64 = gamma.parents().iter().map(dim_p).sum();
    memo.lock().unwrap().insert(gamma.clone(), value);
    value
}
