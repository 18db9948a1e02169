//! Corpus experiments: LP, rounding trials and the exact optimum per
//! instance, plus the invariant suites, collected into one report.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use starhub_core::exact::solve_exact;
use starhub_core::lp::solve_lrp;
use starhub_core::rng::{derive_seed, stream};
use starhub_core::rounding::{classify_hubs, run_trial, HubClassing, PipelineOutcome, RoundingOptions};
use starhub_core::DEFAULT_R;

use crate::checks::{self, mean_and_se, CheckOutcome, ShiftSample};
use crate::corpus::CorpusEntry;

/// Multiplier on the LP value in the expectation check.
pub const BOUND_FACTOR: f64 = 5.281;
/// Standard errors of slack in the expectation check.
pub const BOUND_SE: f64 = 3.0;
/// Relative slack of the `LP <= exact <= rounded` sandwich.
pub const SANDWICH_SLACK: f64 = 1e-6;
/// Instances with more than this many assignments skip the exact solver.
pub const EXACT_LIMIT: u64 = 1_000_000;

/// Sizes of the invariant suites run alongside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckPlan {
    /// Number of corpus instances sampled at a fixed shift.
    pub shift_instances: usize,
    pub shift_trials: u64,
    /// Fixed shifts, used cyclically over the sampled instances.
    pub shifts: Vec<f64>,
    pub random_classings: usize,
    /// Shifts drawn per corpus instance for the class-gap and line checks.
    pub shifts_per_instance: usize,
    pub monge_instances: usize,
    pub prefix_instances: usize,
    pub coupling_pairs: usize,
    pub quadrature_bases: Vec<f64>,
}

impl Default for CheckPlan {
    fn default() -> Self {
        Self {
            shift_instances: 3,
            shift_trials: 20_000,
            shifts: vec![0.25, 0.5, 0.75],
            random_classings: 100,
            shifts_per_instance: 4,
            monge_instances: 200,
            prefix_instances: 500,
            coupling_pairs: 1000,
            quadrature_bases: vec![1.1, 1.91065, 3.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub r: f64,
    pub trials: usize,
    pub seed: u64,
    /// Truncate within-class thresholds to the largest remaining fraction.
    pub truncate_u: bool,
    pub exact_limit: u64,
    /// `None` skips the invariant suites.
    pub checks: Option<CheckPlan>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            r: DEFAULT_R,
            trials: 2000,
            seed: 1,
            truncate_u: true,
            exact_limit: EXACT_LIMIT,
                checks: Some(CheckPlan::default()),
        }
    }
}

impl ExperimentConfig {
    pub fn options(&self) -> RoundingOptions {
        RoundingOptions {
            truncate_u: self.truncate_u,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRow {
    pub id: usize,
    pub n: usize,
    pub h: usize,
    pub lp_value: Option<f64>,
    pub exact_value: Option<f64>,
    pub best_cost: Option<f64>,
    pub mean_cost: Option<f64>,
    pub std_cost: Option<f64>,
    pub se_cost: Option<f64>,
    pub trials: usize,
    pub ratio_mean_lp: Option<f64>,
    pub ratio_best_lp: Option<f64>,
    pub ratio_best_exact: Option<f64>,
    /// `mean <= 5.281 LP + 3 SE`.
    pub bound_ok: bool,
    /// `LP <= exact <= best`; `None` without an exact value.
    pub sandwich_ok: Option<bool>,
    pub r: f64,
    /// Master seed of this instance's trials.
    pub seed: u64,
    pub best_assignment: Vec<usize>,
    pub costs: Vec<f64>,
    pub error: Option<String>,
}

impl InstanceRow {
    fn failed(id: usize, entry: &CorpusEntry, cfg: &ExperimentConfig, seed: u64, error: String) -> Self {
        Self {
            id,
            n: entry.instance.nonhub_count(),
            h: entry.instance.hub_count(),
            lp_value: None,
            exact_value: None,
            best_cost: None,
            mean_cost: None,
            std_cost: None,
            se_cost: None,
            trials: cfg.trials,
            ratio_mean_lp: None,
            ratio_best_lp: None,
            ratio_best_exact: None,
            bound_ok: false,
            sandwich_ok: None,
            r: cfg.r,
            seed,
            best_assignment: Vec::new(),
            costs: Vec::new(),
            error: Some(error),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none() && self.bound_ok && self.sandwich_ok != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<InstanceRow>,
    pub checks: Vec<CheckOutcome>,
}

/// CSV columns, in order.
pub const CSV_COLUMNS: [&str; 18] = [
    "id",
    "n",
    "h",
    "lp_value",
    "exact_value",
    "best_cost",
    "mean_cost",
    "std_cost",
    "se_cost",
    "trials",
    "ratio_mean_lp",
    "ratio_best_lp",
    "ratio_best_exact",
    "bound_ok",
    "sandwich_ok",
    "r",
    "seed",
    "error",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    id: usize,
    n: usize,
    h: usize,
    lp_value: Option<f64>,
    exact_value: Option<f64>,
    best_cost: Option<f64>,
    mean_cost: Option<f64>,
    std_cost: Option<f64>,
    se_cost: Option<f64>,
    trials: usize,
    ratio_mean_lp: Option<f64>,
    ratio_best_lp: Option<f64>,
    ratio_best_exact: Option<f64>,
    bound_ok: bool,
    sandwich_ok: Option<bool>,
    r: f64,
    seed: u64,
    error: Option<&'a str>,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(InstanceRow::ok) && self.checks.iter().all(|c| c.passed)
    }

    /// Expectation bound over all rows.
    pub fn bound_check(&self) -> CheckOutcome {
        let failures: Vec<String> = self
            .rows
            .iter()
            .filter(|r| !r.bound_ok)
            .map(|r| match &r.error {
                Some(e) => format!("instance {}: {e}", r.id),
                None => format!(
                    "instance {}: mean {:?} vs LP {:?} (se {:?})",
                    r.id, r.mean_cost, r.lp_value, r.se_cost
                ),
            })
            .collect();
        let worst = self
            .rows
            .iter()
            .filter_map(|r| r.ratio_mean_lp)
            .fold(f64::NEG_INFINITY, f64::max);
        CheckOutcome::from_failures("expectation bound", self.rows.len(), &failures, format!("largest mean/LP {worst:.4}"))
    }

    /// `LP <= exact <= every rounded cost` over rows with an exact value.
    pub fn sandwich_check(&self) -> CheckOutcome {
        let with_exact: Vec<&InstanceRow> = self.rows.iter().filter(|r| r.exact_value.is_some()).collect();
        let failures: Vec<String> = with_exact
            .iter()
            .filter(|r| r.sandwich_ok != Some(true))
            .map(|r| format!("instance {}: LP {:?}, exact {:?}, best {:?}", r.id, r.lp_value, r.exact_value, r.best_cost))
            .collect();
        CheckOutcome::from_failures("exact sandwich", with_exact.len(), &failures, format!("slack {SANDWICH_SLACK:e} relative"))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        for r in &self.rows {
            w.serialize(CsvRow {
                id: r.id,
                n: r.n,
                h: r.h,
                lp_value: r.lp_value,
                exact_value: r.exact_value,
                best_cost: r.best_cost,
                mean_cost: r.mean_cost,
                std_cost: r.std_cost,
                se_cost: r.se_cost,
                trials: r.trials,
                ratio_mean_lp: r.ratio_mean_lp,
                ratio_best_lp: r.ratio_best_lp,
                ratio_best_exact: r.ratio_best_exact,
                bound_ok: r.bound_ok,
                sandwich_ok: r.sandwich_ok,
                r: r.r,
                seed: r.seed,
                error: r.error.as_deref(),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn within(lower: f64, upper: f64) -> bool {
    lower <= upper + SANDWICH_SLACK * lower.abs().max(upper.abs()).max(1.0)
}

/// LP, trials and exact solve for one corpus entry.
pub fn run_instance(entry: &CorpusEntry, cfg: &ExperimentConfig) -> InstanceRow {
    let seed = derive_seed(cfg.seed, entry.id as u64);
    let inst = &entry.instance;
    let opts = cfg.options();
    let lp = match solve_lrp(inst) {
        Ok(lp) => lp,
        Err(e) => return InstanceRow::failed(entry.id, entry, cfg, seed, format!("LP: {e}")),
    };
    let trials = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(inst, &lp, cfg.r, seed, t, &opts))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())
        .and_then(|t| PipelineOutcome::from_trials(lp, t).map_err(|e| e.to_string()));
    let outcome = match trials {
        Ok(o) => o,
        Err(e) => return InstanceRow::failed(entry.id, entry, cfg, seed, format!("rounding: {e}")),
    };
    let exact = solve_exact(inst, cfg.exact_limit).ok().map(|s| s.value);
    let lp_value = outcome.lp.objective_value;
    let (mean, se) = mean_and_se(&outcome.costs);
    let std = se * (outcome.costs.len() as f64).sqrt();
    let sandwich_ok = exact.map(|e| within(lp_value, e) && within(e, outcome.best_cost));
    InstanceRow {
        id: entry.id,
        n: inst.nonhub_count(),
        h: inst.hub_count(),
        lp_value: Some(lp_value),
        exact_value: exact,
        best_cost: Some(outcome.best_cost),
        mean_cost: Some(mean),
        std_cost: Some(std),
        se_cost: Some(se),
        trials: cfg.trials,
        ratio_mean_lp: ratio(mean, lp_value),
        ratio_best_lp: ratio(outcome.best_cost, lp_value),
        ratio_best_exact: exact.and_then(|e| ratio(outcome.best_cost, e)),
        bound_ok: mean <= BOUND_FACTOR * lp_value + BOUND_SE * se,
        sandwich_ok,
        r: cfg.r,
        seed,
        best_assignment: outcome.best.0,
        costs: outcome.costs,
        error: None,
    }
}

/// Shifts drawn for corpus instance `id` by the class-gap and line checks.
fn corpus_classings(entries: &[CorpusEntry], cfg: &ExperimentConfig, per_instance: usize) -> Vec<HubClassing> {
    entries
        .iter()
        .flat_map(|e| {
            let mut rng = stream(derive_seed(cfg.seed ^ 0xC1A5_5E5, e.id as u64));
            (0..per_instance)
                .filter_map(|_| classify_hubs(e.instance.spoke_lengths(), cfg.r, rng.random()).ok())
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Entries strictly inside (0, 1) by more than this count as fractional.
pub const FRACTIONAL_TOL: f64 = 1e-6;

pub fn is_fractional(x: &[Vec<f64>]) -> bool {
    x.iter().flatten().any(|&v| v > FRACTIONAL_TOL && v < 1.0 - FRACTIONAL_TOL)
}

/// Runs every invariant suite of `plan` on the corpus and on random inputs.
pub fn run_checks(entries: &[CorpusEntry], cfg: &ExperimentConfig, plan: &CheckPlan) -> Vec<CheckOutcome> {
    let mut out = vec![checks::ratio_minimum(), checks::expected_u_closed_form(&plan.quadrature_bases)];

    // Integral relaxations make the sampling suites trivial; prefer fractional ones.
    let (mut lps, integral): (Vec<_>, Vec<_>) = entries
        .iter()
        .filter_map(|e| solve_lrp(&e.instance).ok().map(|lp| (e, lp)))
        .partition(|(_, lp)| is_fractional(&lp.x));
    lps.extend(integral);
    lps.truncate(plan.shift_instances);
    let samples: Result<Vec<ShiftSample<'_>>, String> = lps
        .iter()
        .enumerate()
        .map(|(k, (e, lp))| {
            let lambda = plan.shifts[k % plan.shifts.len().max(1)];
            ShiftSample::draw(
                &e.instance,
                &lp.x,
                cfg.r,
                lambda,
                plan.shift_trials,
                derive_seed(cfg.seed ^ 0x5A3F, e.id as u64),
                &cfg.options(),
            )
        })
        .collect();
    match samples {
        Ok(samples) if !samples.is_empty() => {
            out.push(checks::marginal_preservation(&samples));
            out.push(checks::same_class_separation(&samples));
            out.push(checks::class_block_law(&samples));
        }
        Ok(_) => {}
        Err(e) => out.push(CheckOutcome {
            name: "fixed-shift sampling".into(),
            passed: false,
            detail: e,
        }),
    }

    let mut classings = checks::random_classings(plan.random_classings, cfg.seed);
    classings.extend(corpus_classings(entries, cfg, plan.shifts_per_instance));
    out.push(checks::class_gap_bound(&classings));
    out.push(checks::line_metric(&classings));
    out.push(checks::monge_nwcr_optimality(plan.monge_instances, cfg.seed));
    out.push(corpus_hat_transport(entries, cfg));
    out.push(checks::prefix_identity(plan.prefix_instances, cfg.seed));
    out.push(checks::coupling_identity(plan.coupling_pairs, cfg.seed));
    out.push(corpus_coupling(entries));
    out
}

/// Corner rule on the hat matrix is optimal for every pair of LP rows.
fn corpus_hat_transport(entries: &[CorpusEntry], cfg: &ExperimentConfig) -> CheckOutcome {
    let failures: Vec<String> = entries
        .par_iter()
        .flat_map_iter(|e| {
            let mut rng = stream(derive_seed(cfg.seed ^ 0x4A7, e.id as u64));
            let found = match (solve_lrp(&e.instance), classify_hubs(e.instance.spoke_lengths(), cfg.r, rng.random())) {
                (Ok(lp), Ok(hc)) => checks::hat_transport_failures(&hc, &lp.x),
                (Err(err), _) => vec![err.to_string()],
                (_, Err(err)) => vec![err.to_string()],
            };
            found.into_iter().map(move |m| format!("instance {}: {m}", e.id))
        })
        .collect();
    CheckOutcome::from_failures("hat-cost transport on corpus", entries.len(), &failures, "corner rule optimal".into())
}

/// The coupling identity on every pair of LP rows of the corpus.
fn corpus_coupling(entries: &[CorpusEntry]) -> CheckOutcome {
    let failures: Vec<String> = entries
        .par_iter()
        .flat_map_iter(|e| {
            let ell: Vec<f64> = (0..e.instance.hub_count()).map(|i| e.instance.spoke_length(i)).collect();
            let found = match solve_lrp(&e.instance) {
                Ok(lp) => {
                    let n = lp.x.len();
                    (0..n)
                        .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
                        .filter_map(|(p, q)| {
                            checks::coupling_identity_on(&ell, &lp.x[p], &lp.x[q])
                                .err()
                                .map(|m| format!("pair ({p}, {q}): {m}"))
                        })
                        .collect()
                }
                Err(err) => vec![err.to_string()],
            };
            found.into_iter().map(move |m| format!("instance {}: {m}", e.id))
        })
        .collect();
    CheckOutcome::from_failures("coupling identity on corpus", entries.len(), &failures, "LP row pairs".into())
}

pub fn run_experiment(entries: &[CorpusEntry], cfg: &ExperimentConfig) -> ExperimentReport {
    let mut rows: Vec<InstanceRow> = entries.par_iter().map(|e| run_instance(e, cfg)).collect();
    rows.sort_by_key(|r| r.id);
    let mut checks = Vec::new();
    if let Some(plan) = &cfg.checks {
        checks = run_checks(entries, cfg, plan);
    }
    let mut report = ExperimentReport {
        config: cfg.clone(),
        rows,
        checks,
    };
    if !report.rows.is_empty() {
        let bound = report.bound_check();
        let sandwich = report.sandwich_check();
        report.checks.push(bound);
        report.checks.push(sandwich);
    }
    report
}
