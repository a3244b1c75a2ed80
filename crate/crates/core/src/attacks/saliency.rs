//! Saliency-map pair selection: the exhaustive search over all feature pairs
//! and the apriori variant that restricts the first coordinate to the top-k
//! features ranked by the target-class derivative.

use std::cmp::Ordering;

use serde::Serialize;

use super::Direction;
use crate::nn::Jacobian;

/// Feature indices that may still be perturbed, kept in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSpace {
    members: Vec<usize>,
}

impl SearchSpace {
    /// Builds a search space from arbitrary indices (deduplicated, sorted).
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SearchSpace { members: indices }
    }

    /// Features that can still move in `direction`.
    pub fn for_image(pixels: &[f32], direction: Direction) -> Self {
        let members = pixels
            .iter()
            .enumerate()
            .filter(|(_, &v)| match direction {
                Direction::Decrease => v > 0.0,
                Direction::Increase => v < 1.0,
            })
            .map(|(i, _)| i)
            .collect();
        SearchSpace { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn remove(&mut self, i: usize) -> bool {
        match self.members.binary_search(&i) {
            Ok(pos) => {
                self.members.remove(pos);
                true
            }
            Err(_) => false,
        }
    }
}

/// The winning pair of one selection round. `p1 < p2` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSelection {
    pub p1: usize,
    pub p2: usize,
    /// `-alpha * beta`
    pub score: f32,
    pub alpha: f32,
    pub beta: f32,
}

/// Result of one selection round together with how many candidate pairs were scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSearch {
    pub best: Option<PairSelection>,
    pub pairs_evaluated: u64,
}

/// Per-feature sums shared by every pair: the target-class derivative and the
/// summed derivative of all other classes.
struct FeatureSums {
    target: Vec<f32>,
    others: Vec<f32>,
}

impl FeatureSums {
    fn new(jac: &Jacobian, t: usize) -> Self {
        let target = jac.row(t).to_vec();
        let mut others = vec![0.0f32; jac.features()];
        for j in (0..jac.classes()).filter(|&j| j != t) {
            for (o, &d) in others.iter_mut().zip(jac.row(j)) {
                *o += d;
            }
        }
        FeatureSums { target, others }
    }
}

struct Best {
    current: Option<PairSelection>,
    direction: Direction,
    evaluated: u64,
}

impl Best {
    fn new(direction: Direction) -> Self {
        Best {
            current: None,
            direction,
            evaluated: 0,
        }
    }

    #[inline]
    fn consider(&mut self, sums: &FeatureSums, p: usize, q: usize) {
        self.evaluated += 1;
        let alpha = sums.target[p] + sums.target[q];
        let beta = sums.others[p] + sums.others[q];
        let admissible = match self.direction {
            Direction::Decrease => alpha < 0.0 && beta > 0.0,
            Direction::Increase => alpha > 0.0 && beta < 0.0,
        };
        if !admissible {
            return;
        }
        let score = -alpha * beta;
        let (p1, p2) = if p < q { (p, q) } else { (q, p) };
        let better = match &self.current {
            None => true,
            Some(b) => score > b.score || (score == b.score && (p1, p2) < (b.p1, b.p2)),
        };
        if better {
            self.current = Some(PairSelection {
                p1,
                p2,
                score,
                alpha,
                beta,
            });
        }
    }

    fn finish(self) -> PairSearch {
        PairSearch {
            best: self.current,
            pairs_evaluated: self.evaluated,
        }
    }
}

/// Scores every unordered pair of `gamma` and keeps the admissible pair with
/// the largest `-alpha * beta`; ties go to the lexicographically smallest pair.
pub fn select_pair_exhaustive(jac: &Jacobian, gamma: &SearchSpace, t: usize, direction: Direction) -> PairSearch {
    let mut best = Best::new(direction);
    if gamma.len() < 2 {
        return best.finish();
    }
    let sums = FeatureSums::new(jac, t);
    let members = gamma.members();
    for (a, &p) in members.iter().enumerate() {
        for &q in &members[a + 1..] {
            best.consider(&sums, p, q);
        }
    }
    best.finish()
}

/// The `min(k, |gamma|)` members with the largest target-class derivative in
/// the attack direction (most negative for `Decrease`), smaller index first
/// on ties. Runs in linear expected time; the result is returned ascending.
pub fn select_top_k(jac: &Jacobian, gamma: &SearchSpace, t: usize, k: usize, direction: Direction) -> Vec<usize> {
    let row = jac.row(t);
    let key = |i: usize| match direction {
        Direction::Decrease => -row[i],
        Direction::Increase => row[i],
    };
    let mut pool = gamma.members().to_vec();
    if k < pool.len() {
        let rank = |a: &usize, b: &usize| key(*b).partial_cmp(&key(*a)).unwrap_or(Ordering::Equal).then(a.cmp(b));
        pool.select_nth_unstable_by(k, rank);
        pool.truncate(k);
        pool.sort_unstable();
    }
    pool
}

/// Apriori pair selection: `p` ranges over the top-k set, `q` over all of
/// `gamma`, with the same admissibility test, score and tie-break as the
/// exhaustive search. Scores at most `k * |gamma|` ordered pairs.
pub fn select_pair_apriori(
    jac: &Jacobian,
    gamma: &SearchSpace,
    t: usize,
    k: usize,
    direction: Direction,
) -> PairSearch {
    let mut best = Best::new(direction);
    if gamma.len() < 2 || k == 0 {
        return best.finish();
    }
    let sums = FeatureSums::new(jac, t);
    let top = select_top_k(jac, gamma, t, k, direction);
    for &p in &top {
        for &q in gamma.members() {
            if p != q {
                best.consider(&sums, p, q);
            }
        }
    }
    best.finish()
}
