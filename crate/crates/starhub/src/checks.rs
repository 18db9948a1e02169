//! Invariant suites. Exact identities are checked in rational arithmetic
//! where the inputs allow it; probabilistic statements are checked against
//! binomial error bars at a fixed shift `lambda`.

use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use starhub_core::ratio::{expected_u_scale, expected_u_scale_quadrature, minimize_ratio};
use starhub_core::rng::{derive_seed, stream, StreamRng};
use starhub_core::rounding::{
    class_block_masses, class_joint_probability, classify_hubs, round_with_classing, HubClassing, RoundingOptions,
};
use starhub_core::transport::{
    build_hat_matrix, couple_from_marginals, is_monge, is_monge_under, northwest_corner, nwcr, nwcr_ordered,
    transport_optimal, TransportInstance,
};
use starhub_core::{Assignment, Instance};

/// Target of the ratio minimization and its accuracy.
pub const RATIO_ARGMIN: f64 = 1.91065;
pub const RATIO_MIN: f64 = 5.2809;
pub const RATIO_TOL: f64 = 1e-3;

/// Binomial standard deviations allowed for empirical frequencies.
pub const SIGMA_BAND: f64 = 4.0;

pub const QUADRATURE_TOL: f64 = 1e-6;
pub const QUADRATURE_INTERVALS: usize = 2000;
pub const TRANSPORT_TOL: f64 = 1e-8;
pub const COUPLING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn from_failures(name: &str, cases: usize, failures: &[String], summary: String) -> Self {
        let detail = match failures.first() {
            None => format!("{cases} cases; {summary}"),
            Some(first) => format!("{} of {cases} cases failed; first: {first}", failures.len()),
        };
        Self {
            name: name.to_string(),
            passed: failures.is_empty(),
            detail,
        }
    }
}

fn rng_for(seed: u64, index: u64) -> StreamRng {
    stream(derive_seed(seed, index))
}

fn random_stochastic(rng: &mut StreamRng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.random_range(0..len)] = 1.0;
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

fn random_spokes(rng: &mut StreamRng, len: usize, max: u64) -> Vec<u64> {
    let mut ell: Vec<u64> = (0..len).map(|_| rng.random_range(0..=max)).collect();
    ell.sort_unstable();
    ell
}

/// The minimizer of the ratio curve against its published value.
pub fn ratio_minimum() -> CheckOutcome {
    let (r, f) = minimize_ratio();
    CheckOutcome {
        name: "ratio minimum".into(),
        passed: (r - RATIO_ARGMIN).abs() <= RATIO_TOL && (f - RATIO_MIN).abs() <= RATIO_TOL,
        detail: format!("r* = {r:.6}, f(r*) = {f:.6}"),
    }
}

/// Simpson quadrature of `int_0^1 r^lambda` against `(r - 1) / ln r`.
pub fn expected_u_closed_form(rs: &[f64]) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for &r in rs {
        match (expected_u_scale(r), expected_u_scale_quadrature(r, QUADRATURE_INTERVALS)) {
            (Ok(closed), Ok(quad)) => {
                let rel = (closed - quad).abs() / closed;
                worst = worst.max(rel);
                if rel > QUADRATURE_TOL {
                    failures.push(format!("r = {r}: closed {closed}, quadrature {quad}"));
                }
            }
            (Err(e), _) | (_, Err(e)) => failures.push(e.to_string()),
        }
    }
    CheckOutcome::from_failures("E[u] closed form", rs.len(), &failures, format!("worst relative error {worst:.2e}"))
}

/// Assignments of `trials` within-class roundings at a fixed classing.
pub fn sample_fixed_shift(
    x: &[Vec<f64>],
    hc: &HubClassing,
    trials: u64,
    seed: u64,
    opts: &RoundingOptions,
) -> Result<Vec<Assignment>, String> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            round_with_classing(x, hc, derive_seed(seed, t), opts)
                .map(|tr| tr.assignment)
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// A fixed-shift sample of one instance, shared by the probabilistic checks.
pub struct ShiftSample<'a> {
    pub instance: &'a Instance,
    pub x: &'a [Vec<f64>],
    pub classing: HubClassing,
    pub assignments: Vec<Assignment>,
}

impl<'a> ShiftSample<'a> {
    pub fn draw(
        instance: &'a Instance,
        x: &'a [Vec<f64>],
        r: f64,
        lambda: f64,
        trials: u64,
        seed: u64,
        opts: &RoundingOptions,
    ) -> Result<Self, String> {
        let classing = classify_hubs(instance.spoke_lengths(), r, lambda).map_err(|e| e.to_string())?;
        let assignments = sample_fixed_shift(x, &classing, trials, seed, opts)?;
        Ok(Self {
            instance,
            x,
            classing,
            assignments,
        })
    }

    fn trials(&self) -> f64 {
        self.assignments.len() as f64
    }

    /// Failures of `|freq - x_pi| <= 4 sqrt(x (1 - x) / T)`, and the
    /// largest deviation in units of the binomial standard deviation.
    pub fn marginal_failures(&self) -> (Vec<String>, f64) {
        let (n, h) = (self.x.len(), self.instance.hub_count());
        let t = self.trials();
        let mut counts = vec![vec![0u64; h]; n];
        for a in &self.assignments {
            for (p, &i) in a.as_slice().iter().enumerate() {
                counts[p][i] += 1;
            }
        }
        let mut failures = Vec::new();
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for i in 0..h {
                let x = self.x[p][i];
                let freq = counts[p][i] as f64 / t;
                let sd = (x * (1.0 - x) / t).sqrt();
                let dev = (freq - x).abs();
                if sd > 0.0 {
                    worst = worst.max(dev / sd);
                }
                if dev > SIGMA_BAND * sd {
                    failures.push(format!("p = {p}, i = {i}: frequency {freq} vs x = {x}"));
                }
            }
        }
        (failures, worst)
    }

    /// Same-class separation: for every pair, the mean of
    /// `(l_i + l_j) [f(p) = i != j = f(q), same class]` is at most
    /// `2 sum_i u_i |x_pi - x_qi|`, up to 4 standard errors.
    pub fn separation_failures(&self) -> (Vec<String>, usize) {
        let n = self.x.len();
        let hc = &self.classing;
        let ell = self.instance.spoke_lengths();
        let mut failures = Vec::new();
        let mut pairs = 0;
        for p in 0..n {
            for q in 0..n {
                if p == q {
                    continue;
                }
                pairs += 1;
                let samples: Vec<f64> = self
                    .assignments
                    .iter()
                    .map(|a| {
                        let (i, j) = (a.hub_of(p), a.hub_of(q));
                        if i != j && hc.alpha[i] == hc.alpha[j] {
                            (ell[i] + ell[j]) as f64
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let (mean, se) = mean_and_se(&samples);
                let bound: f64 = (0..ell.len())
                    .map(|i| 2.0 * hc.u[i] * (self.x[p][i] - self.x[q][i]).abs())
                    .sum();
                if mean > bound + SIGMA_BAND * se + 1e-9 * bound.max(1.0) {
                    failures.push(format!("pair ({p}, {q}): mean {mean} > bound {bound} (se {se})"));
                }
            }
        }
        (failures, pairs)
    }

    /// Corner-rule block law: the hub-level corner-rule plan in hub order,
    /// summed over class blocks, equals the interval-overlap joint law of
    /// the classes, and off-diagonal block frequencies stay below it.
    pub fn block_failures(&self) -> (Vec<String>, usize) {
        let n = self.x.len();
        let hc = &self.classing;
        let classes = hc.class_order.len();
        let t = self.trials();
        let mut failures = Vec::new();
        let mut pairs = 0;
        for p in 0..n {
            for q in 0..n {
                if p == q {
                    continue;
                }
                pairs += 1;
                let (xp, xq) = (&self.x[p], &self.x[q]);
                let zero = vec![vec![0.0; xq.len()]; xp.len()];
                let plan = match TransportInstance::new(xp.clone(), xq.clone(), zero) {
                    Ok(ti) => nwcr_ordered(&ti, &hc.hub_order, &hc.hub_order),
                    Err(e) => {
                        failures.push(format!("pair ({p}, {q}): {e}"));
                        continue;
                    }
                };
                let mut blocks = vec![vec![0.0; classes]; classes];
                for (i, row) in plan.flows.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        blocks[hc.class_rank(hc.alpha[i])][hc.class_rank(hc.alpha[j])] += v;
                    }
                }
                let joint = class_joint_probability(xp, xq, hc);
                let mut counts = vec![vec![0u64; classes]; classes];
                for a in &self.assignments {
                    let kp = hc.class_rank(hc.alpha[a.hub_of(p)]);
                    let kq = hc.class_rank(hc.alpha[a.hub_of(q)]);
                    counts[kp][kq] += 1;
                }
                for a in 0..classes {
                    for b in 0..classes {
                        if (blocks[a][b] - joint[a][b]).abs() > 1e-9 {
                            failures.push(format!(
                                "pair ({p}, {q}) block ({a}, {b}): corner rule {} vs joint law {}",
                                blocks[a][b], joint[a][b]
                            ));
                        }
                        if a == b {
                            continue;
                        }
                        let m = blocks[a][b].clamp(0.0, 1.0);
                        let freq = counts[a][b] as f64 / t;
                        let band = SIGMA_BAND * (m * (1.0 - m) / t).sqrt();
                        if freq > m + band + 1e-12 {
                            failures.push(format!("pair ({p}, {q}) block ({a}, {b}): frequency {freq} > {m}"));
                        }
                    }
                }
            }
        }
        (failures, pairs)
    }
}

pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Marginal preservation on a fixed-shift sample.
pub fn marginal_preservation(samples: &[ShiftSample<'_>]) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for (k, s) in samples.iter().enumerate() {
        let (f, w) = s.marginal_failures();
        failures.extend(f.into_iter().map(|m| format!("sample {k}: {m}")));
        worst = worst.max(w);
        cells += s.x.len() * s.instance.hub_count();
    }
    CheckOutcome::from_failures("marginal preservation", cells, &failures, format!("worst deviation {worst:.2} sd"))
}

pub fn same_class_separation(samples: &[ShiftSample<'_>]) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut pairs = 0;
    for (k, s) in samples.iter().enumerate() {
        let (f, c) = s.separation_failures();
        failures.extend(f.into_iter().map(|m| format!("sample {k}: {m}")));
        pairs += c;
    }
    CheckOutcome::from_failures("same-class separation", pairs, &failures, "all pair means within bound".into())
}

pub fn class_block_law(samples: &[ShiftSample<'_>]) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut pairs = 0;
    for (k, s) in samples.iter().enumerate() {
        let (f, c) = s.block_failures();
        failures.extend(f.into_iter().map(|m| format!("sample {k}: {m}")));
        pairs += c;
    }
    CheckOutcome::from_failures("class block law", pairs, &failures, "blocks match the corner rule".into())
}

/// Convex function of `s_i - t_j` on sorted positions plus offsets; Monge by
/// construction.
fn random_monge_instance(rng: &mut StreamRng) -> TransportInstance<f64> {
    let (m, n) = (rng.random_range(1..=8), rng.random_range(1..=8));
    let sorted = |rng: &mut StreamRng, len: usize| {
        let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (s, t) = (sorted(rng, m), sorted(rng, n));
    let a: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..5.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
    let kind = rng.random_range(0..3);
    let cost = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = s[i] - t[j];
                    let phi = match kind {
                        0 => d.abs(),
                        1 => d * d,
                        _ => d.max(0.0),
                    };
                    phi + a[i] + b[j]
                })
                .collect()
        })
        .collect();
    let (supply, demand) = (random_stochastic(rng, m), random_stochastic(rng, n));
    TransportInstance::new(supply, demand, cost).expect("stochastic marginals balance")
}

/// On Monge costs the corner rule matches the transport optimum; on a
/// non-Monge witness it is strictly worse.
pub fn monge_nwcr_optimality(count: usize, seed: u64) -> CheckOutcome {
    let failures: Vec<String> = (0..count)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = rng_for(seed, k as u64);
            let t = random_monge_instance(&mut rng);
            if !is_monge(t.cost()) {
                return Some(format!("instance {k}: generated cost is not Monge"));
            }
            let greedy = t.plan_cost(&nwcr(&t));
            match transport_optimal(&t) {
                Ok(plan) => {
                    let best = t.plan_cost(&plan);
                    ((greedy - best).abs() > TRANSPORT_TOL).then(|| format!("instance {k}: corner rule {greedy} vs optimum {best}"))
                }
                Err(e) => Some(format!("instance {k}: {e}")),
            }
        })
        .collect();
    let mut failures = failures;
    let witness = TransportInstance::new(vec![0.5, 0.5], vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]])
        .expect("balanced witness");
    let greedy = witness.plan_cost(&nwcr(&witness));
    let gap = match transport_optimal(&witness) {
        Ok(plan) => greedy - witness.plan_cost(&plan),
        Err(e) => {
            failures.push(format!("witness: {e}"));
            0.0
        }
    };
    if is_monge(witness.cost()) || gap <= TRANSPORT_TOL {
        failures.push(format!("non-Monge witness has gap {gap}"));
    }
    CheckOutcome::from_failures("Monge corner-rule optimality", count + 1, &failures, format!("witness gap {gap}"))
}

/// The prefix identity of the corner rule, exactly in rationals.
pub fn prefix_identity(count: usize, seed: u64) -> CheckOutcome {
    type Q = Ratio<i128>;
    let failures: Vec<String> = (0..count)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = rng_for(seed, k as u64);
            let draw = |rng: &mut StreamRng, len: usize| -> Vec<Q> {
                let mut w: Vec<i128> = (0..len).map(|_| rng.random_range(0..50)).collect();
                if w.iter().all(|&v| v == 0) {
                    w[0] = 1;
                }
                let total: i128 = w.iter().sum();
                w.into_iter().map(|v| Q::new(v, total)).collect()
            };
            let (m, n) = (rng.random_range(1..=8), rng.random_range(1..=8));
            let (a, b) = (draw(&mut rng, m), draw(&mut rng, n));
            let plan = northwest_corner(&a, &b);
            let plan = starhub_core::transport::TransportPlan { flows: plan };
            (!plan.satisfies_prefix_identity(&a, &b, Q::zero())).then(|| format!("instance {k}: {a:?} / {b:?}"))
        })
        .collect();
    CheckOutcome::from_failures("corner-rule prefix identity", count, &failures, "exact".into())
}

/// Hat costs equal `|s_i - s_j|` under the signed-parity positions and are
/// Monge once hubs are sorted by position.
pub fn line_metric(classings: &[HubClassing]) -> CheckOutcome {
    let mut failures = Vec::new();
    for (k, hc) in classings.iter().enumerate() {
        let hat = build_hat_matrix(hc);
        let h = hc.hub_count();
        let mismatch = (0..h)
            .flat_map(|i| (0..h).map(move |j| (i, j)))
            .find(|&(i, j)| hat.entries[i][j] != (hat.positions[i] - hat.positions[j]).abs());
        if let Some((i, j)) = mismatch {
            failures.push(format!("classing {k}: entry ({i}, {j}) is not |s_i - s_j|"));
        }
        let order = hat.position_order();
        if !is_monge_under(&hat.entries, &order, &order) {
            failures.push(format!("classing {k}: not Monge in position order"));
        }
    }
    CheckOutcome::from_failures("line-metric realization", classings.len(), &failures, "exact".into())
}

/// Random classings: up to 10 hubs, `l` in `0..=10^4`, `r` in `[1.05, 5)`.
pub fn random_classings(count: usize, seed: u64) -> Vec<HubClassing> {
    (0..count)
        .map(|k| {
            let mut rng = rng_for(seed, k as u64);
            let h = rng.random_range(1..=10);
            let ell = random_spokes(&mut rng, h, 10_000);
            let r = rng.random_range(1.05..5.0);
            let lambda = rng.random::<f64>();
            classify_hubs(&ell, r, lambda).expect("r > 1 and lambda in [0, 1)")
        })
        .collect()
}

/// Cross-class pairs violating `u_i + u_j <= ((r^2 + 1) / (r^2 - 1)) c_ij`.
///
/// With `r` taken as the exact rational value of the float, the common
/// factor `r^lambda` cancels and the inequality is decided in rationals. The
/// float hat matrix must agree with the rational one scaled by `r^lambda`.
pub fn class_gap_violations(hc: &HubClassing) -> Vec<String> {
    let Some(r) = BigRational::from_float(hc.r) else {
        return vec![format!("r = {} is not finite", hc.r)];
    };
    let v: Vec<BigRational> = hc
        .alpha
        .iter()
        .map(|&a| if a == 0 { BigRational::zero() } else { num_traits::pow(r.clone(), a as usize - 1) })
        .collect();
    let r2 = &r * &r;
    let (lo, hi) = (&r2 - BigRational::one(), &r2 + BigRational::one());
    let hat = build_hat_matrix(hc);
    let scale = hc.r.powf(hc.lambda);
    let mut bad = Vec::new();
    for i in 0..v.len() {
        for j in 0..v.len() {
            let exact_hat = if hc.alpha[i] % 2 == hc.alpha[j] % 2 {
                if v[i] > v[j] { &v[i] - &v[j] } else { &v[j] - &v[i] }
            } else {
                &v[i] + &v[j]
            };
            let approx = exact_hat.to_f64().unwrap_or(f64::NAN) * scale;
            if (approx - hat.entries[i][j]).abs() > 1e-9 * approx.abs().max(1.0) {
                bad.push(format!("hat ({i}, {j}) = {} but expected {approx}", hat.entries[i][j]));
            }
            if hc.alpha[i] != hc.alpha[j] && (&v[i] + &v[j]) * &lo > &hi * &exact_hat {
                bad.push(format!("classes {} and {} at r = {}", hc.alpha[i], hc.alpha[j], hc.r));
            }
        }
    }
    bad
}

pub fn class_gap_bound(classings: &[HubClassing]) -> CheckOutcome {
    let failures: Vec<String> = classings
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, hc)| class_gap_violations(hc).into_iter().map(move |m| format!("classing {k}: {m}")))
        .collect();
    CheckOutcome::from_failures("class-gap bound", classings.len(), &failures, "exact in rationals".into())
}

/// Coupling identity `sum_{i != j} (l_i + l_j) y_ij = sum_i l_i |x_pi - x_qi|`
/// together with exact-marginal and excess-mass checks.
pub fn coupling_identity_on(ell: &[f64], xp: &[f64], xq: &[f64]) -> Result<(), String> {
    let plan = couple_from_marginals(xp, xq).map_err(|e| e.to_string())?;
    let h = xp.len();
    let (rows, cols) = (plan.row_sums(), plan.col_sums());
    for i in 0..h {
        if (rows[i] - xp[i]).abs() > 1e-12 || (cols[i] - xq[i]).abs() > 1e-12 {
            return Err(format!("marginal {i} off"));
        }
        let off: f64 = (0..h).filter(|&j| j != i).map(|j| plan.flows[i][j]).sum();
        if (off - (xp[i] - xq[i]).max(0.0)).abs() > 1e-12 {
            return Err(format!("row {i} carries {off} off the diagonal"));
        }
    }
    let mut lhs = 0.0;
    for i in 0..h {
        for j in 0..h {
            if i != j {
                lhs += (ell[i] + ell[j]) * plan.flows[i][j];
            }
        }
    }
    let rhs: f64 = (0..h).map(|i| ell[i] * (xp[i] - xq[i]).abs()).sum();
    if (lhs - rhs).abs() > COUPLING_TOL {
        return Err(format!("identity: {lhs} vs {rhs}"));
    }
    Ok(())
}

/// The coupling identity on `count` random stochastic pairs.
pub fn coupling_identity(count: usize, seed: u64) -> CheckOutcome {
    let failures: Vec<String> = (0..count)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = rng_for(seed, k as u64);
            let h = rng.random_range(1..=10);
            let ell: Vec<f64> = random_spokes(&mut rng, h, 100).into_iter().map(|l| l as f64).collect();
            let (xp, xq) = (random_stochastic(&mut rng, h), random_stochastic(&mut rng, h));
            coupling_identity_on(&ell, &xp, &xq).err().map(|m| format!("pair {k}: {m}"))
        })
        .collect();
    CheckOutcome::from_failures("coupling identity", count, &failures, format!("tolerance {COUPLING_TOL:e}"))
}

/// Corner rule on the hat matrix in position order versus the transport
/// optimum, for every pair of LP rows of one instance.
pub fn hat_transport_failures(hc: &HubClassing, x: &[Vec<f64>]) -> Vec<String> {
    let hat = build_hat_matrix(hc);
    let order = hat.position_order();
    let mut failures = Vec::new();
    for p in 0..x.len() {
        for q in p + 1..x.len() {
            let t = match TransportInstance::new(x[p].clone(), x[q].clone(), hat.entries.clone()) {
                Ok(t) => t,
                Err(e) => {
                    failures.push(format!("pair ({p}, {q}): {e}"));
                    continue;
                }
            };
            let greedy = t.plan_cost(&nwcr_ordered(&t, &order, &order));
            match transport_optimal(&t) {
                Ok(plan) => {
                    let best = t.plan_cost(&plan);
                    if (greedy - best).abs() > TRANSPORT_TOL * best.abs().max(1.0) {
                        failures.push(format!("pair ({p}, {q}): corner rule {greedy} vs optimum {best}"));
                    }
                }
                Err(e) => failures.push(format!("pair ({p}, {q}): {e}")),
            }
        }
    }
    failures
}

/// Rational form of `class_joint_probability` against the corner rule.
pub fn exact_block_law(hc: &HubClassing, xp: &[Ratio<i128>], xq: &[Ratio<i128>]) -> bool {
    let (bp, bq) = (class_block_masses(xp, hc), class_block_masses(xq, hc));
    northwest_corner(&bp, &bq) == class_joint_probability(xp, xq, hc)
}
