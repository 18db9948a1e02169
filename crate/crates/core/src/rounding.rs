//! Randomized rounding of a fractional assignment.
//!
//! One trial draws a shift `lambda ~ U[0, 1)` and buckets hubs into
//! geometric classes of base `r`. A single shared threshold then sends every
//! non-hub to a class by scanning its fractional row in a fixed hub order
//! (dependent rounding). Finally each class is resolved independently by
//! phases: pick a hub of the class uniformly, pick a threshold uniformly, and
//! give that hub every still-unassigned non-hub whose fraction on it reaches
//! the threshold.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use thiserror::Error;

use crate::instance::{evaluate_cost, Assignment, Instance};
use crate::lp::{solve_lrp, FractionalSolution, LpError};
use crate::rng::{self, StreamRng};
use crate::transport::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoundingError {
    #[error("classing base r = {0} must be a finite real > 1")]
    InvalidBase(f64),
    #[error("shift lambda = {0} must lie in [0, 1)")]
    InvalidShift(f64),
    #[error("non-hub {nonhub} has no fractional mass on the hubs of its class {class}")]
    NoSupport { nonhub: usize, class: u32 },
    #[error("class {class} exceeded {cap} rounding phases")]
    PhaseCap { class: u32, cap: usize },
    #[error("trace phase {phase} does not reproduce its recorded assignment")]
    TraceMismatch { phase: usize },
    #[error("trace leaves non-hub {0} unassigned")]
    Incomplete(usize),
    #[error("at least one trial is required")]
    NoTrials,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Geometric classes of the hubs for one value of the shift.
#[derive(Debug, Clone, PartialEq)]
pub struct HubClassing {
    pub r: f64,
    pub lambda: f64,
    /// Class of each hub; class 0 holds exactly the zero-length spokes.
    pub alpha: Vec<u32>,
    pub kappa_max: u32,
    /// Upper scale `r^(alpha - 1 + lambda)` of each hub's class, or 0 for
    /// class 0.
    pub u: Vec<f64>,
    /// Classes laid out as even labels descending, then odd labels ascending.
    pub class_order: Vec<u32>,
    /// Hubs grouped by `class_order`; ascending spoke length then index
    /// inside a class.
    pub hub_order: Vec<usize>,
}

impl HubClassing {
    pub fn hub_count(&self) -> usize {
        self.alpha.len()
    }

    /// Hubs of class `kappa`, in `hub_order`.
    pub fn hubs_in_class(&self, kappa: u32) -> Vec<usize> {
        self.hub_order
            .iter()
            .copied()
            .filter(|&i| self.alpha[i] == kappa)
            .collect()
    }

    /// Position of `kappa` in `class_order`.
    pub fn class_rank(&self, kappa: u32) -> usize {
        self.class_order
            .iter()
            .position(|&k| k == kappa)
            .expect("class label within 0..=kappa_max")
    }

    /// `r^(e + lambda)` for `e >= 0`; the class boundaries are exactly these
    /// values.
    fn boundary(r: f64, lambda: f64, e: i64) -> f64 {
        libm::pow(r, e as f64 + lambda)
    }
}

/// Lower end of class `kappa >= 1`: `r^max(kappa - 2 + lambda, 0)`.
pub fn class_lower(r: f64, lambda: f64, kappa: u32) -> f64 {
    if kappa < 2 {
        1.0
    } else {
        HubClassing::boundary(r, lambda, kappa as i64 - 2)
    }
}

/// Upper end (exclusive) of class `kappa >= 1`: `r^(kappa - 1 + lambda)`.
pub fn class_upper(r: f64, lambda: f64, kappa: u32) -> f64 {
    HubClassing::boundary(r, lambda, kappa as i64 - 1)
}

/// Class of a single spoke length, located by interval search around a
/// logarithmic estimate.
pub fn class_of(spoke: u64, r: f64, lambda: f64) -> u32 {
    if spoke == 0 {
        return 0;
    }
    let l = spoke as f64;
    let estimate = libm::floor(libm::log(l) / libm::log(r) - lambda) + 2.0;
    let mut kappa = if estimate.is_finite() && estimate > 1.0 {
        estimate as u32
    } else {
        1
    };
    while kappa > 1 && l < class_lower(r, lambda, kappa) {
        kappa -= 1;
    }
    while l >= class_upper(r, lambda, kappa) {
        kappa += 1;
    }
    kappa
}

/// Class labels in rounding order: evens descending, then odds ascending.
pub fn class_order(kappa_max: u32) -> Vec<u32> {
    let top_even = kappa_max - kappa_max % 2;
    let evens = (0..=top_even).rev().step_by(2);
    let odds = (1..=kappa_max).step_by(2);
    evens.chain(odds).collect()
}

fn check_params(r: f64, lambda: f64) -> Result<(), RoundingError> {
    if !(r.is_finite() && r > 1.0) {
        return Err(RoundingError::InvalidBase(r));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(RoundingError::InvalidShift(lambda));
    }
    Ok(())
}

/// Classes hubs with spoke lengths `ell` (non-decreasing not required).
pub fn classify_hubs(ell: &[u64], r: f64, lambda: f64) -> Result<HubClassing, RoundingError> {
    check_params(r, lambda)?;
    let alpha: Vec<u32> = ell.iter().map(|&l| class_of(l, r, lambda)).collect();
    let kappa_max = alpha.iter().copied().max().unwrap_or(0);
    let u = alpha
        .iter()
        .map(|&a| if a == 0 { 0.0 } else { class_upper(r, lambda, a) })
        .collect();
    let class_order = class_order(kappa_max);
    let mut rank = vec![0usize; kappa_max as usize + 1];
    for (pos, &k) in class_order.iter().enumerate() {
        rank[k as usize] = pos;
    }
    let mut hub_order: Vec<usize> = (0..ell.len()).collect();
    hub_order.sort_by_key(|&i| (rank[alpha[i] as usize], ell[i], i));
    Ok(HubClassing {
        r,
        lambda,
        alpha,
        kappa_max,
        u,
        class_order,
        hub_order,
    })
}

/// Class of every non-hub, plus the induced partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    pub beta: Vec<u32>,
    /// `members[kappa]` lists the non-hubs of class `kappa` in index order.
    pub members: Vec<Vec<usize>>,
}

/// Sends each non-hub to the class of the first hub (in `hub_order`) whose
/// prefix sum exceeds the shared threshold.
pub fn classify_nonhubs(x: &[Vec<f64>], hc: &HubClassing, threshold: f64) -> ClassPartition {
    let mut members = vec![Vec::new(); hc.kappa_max as usize + 1];
    let beta = x
        .iter()
        .enumerate()
        .map(|(p, row)| {
            let mut acc = 0.0;
            let mut chosen = None;
            for &i in &hc.hub_order {
                acc += row[i];
                if threshold < acc {
                    chosen = Some(i);
                    break;
                }
            }
            // Prefix sums may fall short of 1 by rounding; fall back to the
            // last hub carrying mass.
            let hub = chosen.unwrap_or_else(|| {
                hc.hub_order
                    .iter()
                    .rev()
                    .copied()
                    .find(|&i| row[i] > 0.0)
                    .unwrap_or(*hc.hub_order.last().expect("at least one hub"))
            });
            let kappa = hc.alpha[hub];
            members[kappa as usize].push(p);
            kappa
        })
        .collect();
    ClassPartition { beta, members }
}

/// Joint law of the classes of two non-hubs under one shared threshold,
/// indexed by positions in `class_order`. Each row's classes occupy
/// consecutive intervals of `[0, 1)`; the joint mass is their overlap.
pub fn class_joint_probability<T: Scalar>(x_p: &[T], x_q: &[T], hc: &HubClassing) -> Vec<Vec<T>> {
    let a = class_block_masses(x_p, hc);
    let b = class_block_masses(x_q, hc);
    let intervals = |m: &[T]| {
        let mut start = T::zero();
        m.iter()
            .map(|&v| {
                let iv = (start, start + v);
                start = start + v;
                iv
            })
            .collect::<Vec<_>>()
    };
    let (ia, ib) = (intervals(&a), intervals(&b));
    ia.iter()
        .map(|&(s1, e1)| {
            ib.iter()
                .map(|&(s2, e2)| {
                    let lo = if s1 > s2 { s1 } else { s2 };
                    let hi = if e1 < e2 { e1 } else { e2 };
                    if hi > lo {
                        hi - lo
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect()
}

/// Total fractional mass of a row on each class, indexed by positions in
/// `class_order`.
pub fn class_block_masses<T: Scalar>(x_p: &[T], hc: &HubClassing) -> Vec<T> {
    let mut masses = vec![T::zero(); hc.class_order.len()];
    for (i, &v) in x_p.iter().enumerate() {
        let pos = hc.class_rank(hc.alpha[i]);
        masses[pos] = masses[pos] + v;
    }
    masses
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundingOptions {
    /// Draw each phase threshold from `[0, m)` where `m` is the largest
    /// fraction any remaining non-hub of the class puts on any hub of the
    /// class, skipping phases that could not assign anything.
    pub truncate_u: bool,
    pub phase_cap: usize,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        Self {
            truncate_u: true,
            phase_cap: 1_000_000,
        }
    }
}

/// One productive phase of the within-class rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub class: u32,
    pub hub: usize,
    pub threshold: f64,
    pub assigned: Vec<usize>,
}

/// Everything needed to replay one rounding trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingTrace {
    pub seed: u64,
    pub r: f64,
    pub lambda: f64,
    /// Shared threshold of the class step.
    pub class_threshold: f64,
    /// Phases that assigned at least one non-hub, in execution order.
    pub phases: Vec<Phase>,
    pub assignment: Assignment,
}

/// Resolves every class into hubs. Classes are processed in increasing
/// label order.
pub fn assign_within_classes(
    x: &[Vec<f64>],
    hc: &HubClassing,
    partition: &ClassPartition,
    rng: &mut StreamRng,
    opts: &RoundingOptions,
) -> Result<(Vec<Phase>, Assignment), RoundingError> {
    let mut target = vec![usize::MAX; x.len()];
    let mut phases = Vec::new();
    for (kappa, members) in partition.members.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let kappa = kappa as u32;
        let hubs = hc.hubs_in_class(kappa);
        for &p in members {
            if !hubs.iter().any(|&i| x[p][i] > 0.0) {
                return Err(RoundingError::NoSupport { nonhub: p, class: kappa });
            }
        }
        let mut remaining = members.clone();
        let mut count = 0usize;
        while !remaining.is_empty() {
            count += 1;
            if count > opts.phase_cap {
                return Err(RoundingError::PhaseCap {
                    class: kappa,
                    cap: opts.phase_cap,
                });
            }
            let hub = hubs[rng.random_range(0..hubs.len())];
            // Shared across the class so that only phases null for every hub are cut.
            let bound = if opts.truncate_u {
                remaining
                    .iter()
                    .flat_map(|&p| hubs.iter().map(move |&i| x[p][i]))
                    .fold(0.0, f64::max)
            } else {
                1.0
            };
            let threshold = bound * rng.random::<f64>();
            let (assigned, rest): (Vec<usize>, Vec<usize>) = remaining
                .iter()
                .partition(|&&p| x[p][hub] > 0.0 && threshold <= x[p][hub]);
            if assigned.is_empty() {
                continue;
            }
            for &p in &assigned {
                target[p] = hub;
            }
            remaining = rest;
            phases.push(Phase {
                class: kappa,
                hub,
                threshold,
                assigned,
            });
        }
    }
    if let Some(p) = target.iter().position(|&t| t == usize::MAX) {
        return Err(RoundingError::Incomplete(p));
    }
    Ok((phases, Assignment(target)))
}

fn round_from(
    x: &[Vec<f64>],
    hc: &HubClassing,
    rng: &mut StreamRng,
    seed: u64,
    opts: &RoundingOptions,
) -> Result<RoundingTrace, RoundingError> {
    let class_threshold: f64 = rng.random();
    let partition = classify_nonhubs(x, hc, class_threshold);
    let (phases, assignment) = assign_within_classes(x, hc, &partition, rng, opts)?;
    Ok(RoundingTrace {
        seed,
        r: hc.r,
        lambda: hc.lambda,
        class_threshold,
        phases,
        assignment,
    })
}

/// One full trial: draws the shift, classes the hubs and rounds `x`.
pub fn round_trial(
    ell: &[u64],
    x: &[Vec<f64>],
    r: f64,
    seed: u64,
    opts: &RoundingOptions,
) -> Result<RoundingTrace, RoundingError> {
    check_params(r, 0.0)?;
    let mut rng = rng::stream(seed);
    let lambda: f64 = rng.random();
    let hc = classify_hubs(ell, r, lambda)?;
    round_from(x, &hc, &mut rng, seed, opts)
}

/// One trial with the hub classing held fixed.
pub fn round_with_classing(
    x: &[Vec<f64>],
    hc: &HubClassing,
    seed: u64,
    opts: &RoundingOptions,
) -> Result<RoundingTrace, RoundingError> {
    let mut rng = rng::stream(seed);
    round_from(x, hc, &mut rng, seed, opts)
}

/// Recomputes the assignment of a trace without any randomness and checks
/// every recorded phase along the way.
pub fn replay(ell: &[u64], x: &[Vec<f64>], trace: &RoundingTrace) -> Result<Assignment, RoundingError> {
    let hc = classify_hubs(ell, trace.r, trace.lambda)?;
    let partition = classify_nonhubs(x, &hc, trace.class_threshold);
    let mut target = vec![usize::MAX; x.len()];
    for (k, phase) in trace.phases.iter().enumerate() {
        let assigned: Vec<usize> = partition.members[phase.class as usize]
            .iter()
            .copied()
            .filter(|&p| {
                target[p] == usize::MAX && x[p][phase.hub] > 0.0 && phase.threshold <= x[p][phase.hub]
            })
            .collect();
        if assigned != phase.assigned || hc.alpha[phase.hub] != phase.class {
            return Err(RoundingError::TraceMismatch { phase: k });
        }
        for p in assigned {
            target[p] = phase.hub;
        }
    }
    if let Some(p) = target.iter().position(|&t| t == usize::MAX) {
        return Err(RoundingError::Incomplete(p));
    }
    Ok(Assignment(target))
}

/// Result of one trial of [`run_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trace: RoundingTrace,
    pub cost: f64,
}

/// Trial `index` of a run seeded with `master_seed`.
pub fn run_trial(
    inst: &Instance,
    lp: &FractionalSolution,
    r: f64,
    master_seed: u64,
    index: u64,
    opts: &RoundingOptions,
) -> Result<TrialResult, RoundingError> {
    let seed = rng::derive_seed(master_seed, index);
    let trace = round_trial(inst.spoke_lengths(), &lp.x, r, seed, opts)?;
    let cost = evaluate_cost(inst, &trace.assignment).expect("rounding yields a total assignment");
    Ok(TrialResult { trace, cost })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub lp: FractionalSolution,
    /// Cheapest assignment over all trials (earliest trial on ties).
    pub best: Assignment,
    pub best_cost: f64,
    pub best_trial: usize,
    /// Cost of every trial, in trial order.
    pub costs: Vec<f64>,
}

impl PipelineOutcome {
    /// Assembles an outcome from trial results given in trial order.
    pub fn from_trials(lp: FractionalSolution, trials: Vec<TrialResult>) -> Result<Self, RoundingError> {
        if trials.is_empty() {
            return Err(RoundingError::NoTrials);
        }
        let mut best_trial = 0;
        for (t, tr) in trials.iter().enumerate() {
            if tr.cost < trials[best_trial].cost {
                best_trial = t;
            }
        }
        let costs = trials.iter().map(|t| t.cost).collect();
        let best_cost = trials[best_trial].cost;
        let best = trials.into_iter().nth(best_trial).unwrap().trace.assignment;
        Ok(Self {
            lp,
            best,
            best_cost,
            best_trial,
            costs,
        })
    }

    pub fn mean_cost(&self) -> f64 {
        self.costs.iter().sum::<f64>() / self.costs.len() as f64
    }
}

/// Solves the relaxation once and runs `trials` independent rounding
/// trials, trial `t` seeded by `derive_seed(seed, t)`.
pub fn run_pipeline(
    inst: &Instance,
    r: f64,
    trials: usize,
    seed: u64,
    opts: &RoundingOptions,
) -> Result<PipelineOutcome, RoundingError> {
    check_params(r, 0.0)?;
    if trials == 0 {
        return Err(RoundingError::NoTrials);
    }
    let lp = solve_lrp(inst)?;
    let results = (0..trials as u64)
        .map(|t| run_trial(inst, &lp, r, seed, t, opts))
        .collect::<Result<Vec<_>, _>>()?;
    PipelineOutcome::from_trials(lp, results)
}
