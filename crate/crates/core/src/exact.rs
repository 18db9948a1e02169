//! Exhaustive search over all `h^n` assignments, used as ground truth.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::instance::{Assignment, Instance};

/// Default cap on the number of complete assignments.
pub const DEFAULT_LIMIT: u64 = 100_000_000;

/// Relative slack under which two costs count as tied.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error(
        "{hubs}^{nonhubs} assignments exceed the enumeration limit {limit}; \
         use the LP value as a lower bound instead"
    )]
    LimitExceeded { hubs: usize, nonhubs: usize, limit: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub assignment: Assignment,
    pub value: f64,
    /// Complete assignments reached (not pruned).
    pub leaves: u64,
}

/// The objective split into per-non-hub terms and per-pair hub terms:
/// `sum_p c[p][f(p)] * throughput(p) + sum_{p<q} (w_pq + w_qp) c_{f(p) f(q)}`.
#[derive(Debug, Clone)]
pub struct DecomposedCost {
    linear: Vec<Vec<f64>>,
    pair: Vec<Vec<f64>>,
    ell: Vec<f64>,
}

impl DecomposedCost {
    pub fn new(inst: &Instance) -> Self {
        let (n, h) = (inst.nonhub_count(), inst.hub_count());
        let linear = (0..n)
            .map(|p| {
                let through = inst.throughput(p);
                (0..h).map(|i| inst.collection_cost(p, i) * through).collect()
            })
            .collect();
        let pair = (0..n)
            .map(|p| (0..n).map(|q| if q < p { inst.pair_weight(p, q) } else { 0.0 }).collect())
            .collect();
        let ell = (0..h).map(|i| inst.spoke_length(i)).collect();
        Self { linear, pair, ell }
    }

    #[inline]
    fn hub_cost(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.ell[i] + self.ell[j]
        }
    }

    /// Cost added by placing non-hub `p` on `hub` given the hubs of all
    /// `q < p` in `prefix`.
    #[inline]
    pub fn increment(&self, p: usize, hub: usize, prefix: &[usize]) -> f64 {
        let mut delta = self.linear[p][hub];
        for (q, &j) in prefix.iter().enumerate().take(p) {
            let w = self.pair[p][q];
            if w != 0.0 {
                delta += w * self.hub_cost(hub, j);
            }
        }
        delta
    }

    pub fn cost(&self, f: &[usize]) -> f64 {
        (0..f.len()).map(|p| self.increment(p, f[p], f)).sum()
    }
}

/// Global optimum by depth-first enumeration with a lower-bound prune.
/// Among optima, the lexicographically smallest assignment wins.
pub fn solve_exact(inst: &Instance, limit: u64) -> Result<ExactSolution, ExactError> {
    let (n, h) = (inst.nonhub_count(), inst.hub_count());
    let count = (h as u64).checked_pow(n as u32);
    if count.is_none_or(|c| c > limit) {
        return Err(ExactError::LimitExceeded {
            hubs: h,
            nonhubs: n,
            limit,
        });
    }
    let cost = DecomposedCost::new(inst);
    // suffix[p] = sum over q >= p of the cheapest linear term.
    let mut suffix = vec![0.0; n + 1];
    for p in (0..n).rev() {
        let m = cost.linear[p].iter().copied().fold(f64::INFINITY, f64::min);
        suffix[p] = suffix[p + 1] + m;
    }

    let mut search = Search {
        cost: &cost,
        suffix: &suffix,
        h,
        current: vec![0; n],
        best: Vec::new(),
        best_value: f64::INFINITY,
        leaves: 0,
    };
    search.descend(0, 0.0);
    Ok(ExactSolution {
        assignment: Assignment(search.best),
        value: search.best_value,
        leaves: search.leaves,
    })
}

struct Search<'a> {
    cost: &'a DecomposedCost,
    suffix: &'a [f64],
    h: usize,
    current: Vec<usize>,
    best: Vec<usize>,
    best_value: f64,
    leaves: u64,
}

impl Search<'_> {
    fn cutoff(&self) -> f64 {
        if self.best_value.is_infinite() {
            return f64::INFINITY;
        }
        self.best_value - TIE_EPS * self.best_value.abs().max(1.0)
    }

    fn descend(&mut self, p: usize, partial: f64) {
        if p == self.current.len() {
            self.leaves += 1;
            if partial < self.cutoff() {
                self.best_value = partial;
                self.best.clone_from(&self.current);
            }
            return;
        }
        for hub in 0..self.h {
            let next = partial + self.cost.increment(p, hub, &self.current);
            if next + self.suffix[p + 1] >= self.cutoff() {
                continue;
            }
            self.current[p] = hub;
            self.descend(p + 1, next);
        }
    }
}
