//! The linear relaxation of the hub assignment program and its solver.
//!
//! The relaxation replaces `|x_pk - x_qk|` by a gap variable `Z` bounded below
//! by both signed differences. Ordered pairs `(p, q)` and `(q, p)` share the
//! same gap block, so one block is built per unordered pair with the combined
//! demand as weight; pairs with no demand get no block.

mod format;
mod simplex;

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::instance::Instance;

pub use format::write_lp_format;
pub use simplex::{solve, solve_with, LpSolution, SimplexOptions};

/// Role of an LP column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// Fraction of non-hub `nonhub` assigned to `hub`.
    Assign { nonhub: usize, hub: usize },
    /// Gap variable of the unordered pair `(p, q)`, `p < q`, at `hub`.
    Gap { p: usize, q: usize, hub: usize },
    /// Transport flow from supply `row` to demand `col`.
    Flow { row: usize, col: usize },
    /// Slack of a `<=` row.
    Slack { row: usize },
    /// Surplus of a `>=` row.
    Surplus { row: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// Minimize `objective . v` subject to `rows v = rhs`, `v >= 0`.
///
/// Rows are stored sparsely. Inequalities were turned into equalities by the
/// builder, so every row is an equality and slack/surplus columns are regular
/// columns tagged in `columns`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    columns: Vec<ColumnKind>,
}

impl LinearProgram {
    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn columns(&self) -> &[ColumnKind] {
        &self.columns
    }

    pub fn count_columns(&self, pred: impl Fn(&ColumnKind) -> bool) -> usize {
        self.columns.iter().filter(|k| pred(k)).count()
    }
}

/// Incremental construction of a [`LinearProgram`] from relational rows.
#[derive(Debug, Default)]
pub struct LpBuilder {
    objective: Vec<f64>,
    columns: Vec<ColumnKind>,
    rows: Vec<(Vec<(usize, f64)>, Relation, f64)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_column(&mut self, kind: ColumnKind, cost: f64) -> usize {
        self.objective.push(cost);
        self.columns.push(kind);
        self.columns.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(rhs.is_finite());
        self.rows.push((coeffs, relation, rhs));
    }

    pub fn finish(self) -> LinearProgram {
        let LpBuilder {
            mut objective,
            mut columns,
            rows: relational,
        } = self;
        let mut rows = Vec::with_capacity(relational.len());
        let mut rhs = Vec::with_capacity(relational.len());
        for (r, (mut coeffs, relation, b)) in relational.into_iter().enumerate() {
            let extra = match relation {
                Relation::Le => Some((ColumnKind::Slack { row: r }, 1.0)),
                Relation::Ge => Some((ColumnKind::Surplus { row: r }, -1.0)),
                Relation::Eq => None,
            };
            if let Some((kind, sign)) = extra {
                objective.push(0.0);
                columns.push(kind);
                coeffs.push((columns.len() - 1, sign));
            }
            rows.push(coeffs);
            rhs.push(b);
        }
        LinearProgram {
            objective,
            rows,
            rhs,
            columns,
        }
    }
}

/// Builds the pair-merged relaxation of `inst`.
///
/// Column layout: `x[p][i]` at `p * h + i`, then the gap blocks in
/// lexicographic pair order, then slack/surplus columns.
pub fn build_lrp(inst: &Instance) -> LinearProgram {
    let (n, h) = (inst.nonhub_count(), inst.hub_count());
    let mut b = LpBuilder::new();
    for p in 0..n {
        let through = inst.throughput(p);
        for i in 0..h {
            b.add_column(
                ColumnKind::Assign { nonhub: p, hub: i },
                inst.collection_cost(p, i) * through,
            );
        }
    }
    for p in 0..n {
        b.add_row((0..h).map(|i| (p * h + i, 1.0)).collect(), Relation::Eq, 1.0);
    }
    for p in 0..n {
        for q in p + 1..n {
            let weight = inst.pair_weight(p, q);
            if weight == 0.0 {
                continue;
            }
            for k in 0..h {
                let z = b.add_column(ColumnKind::Gap { p, q, hub: k }, weight * inst.spoke_length(k));
                let (xp, xq) = (p * h + k, q * h + k);
                b.add_row(vec![(z, 1.0), (xp, -1.0), (xq, 1.0)], Relation::Ge, 0.0);
                b.add_row(vec![(z, 1.0), (xp, 1.0), (xq, -1.0)], Relation::Ge, 0.0);
            }
        }
    }
    b.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("internal error: the relaxation is always feasible and bounded, solver reported {0:?}")]
    Internal(SolverStatus),
}

/// Cleaned-up optimum of the relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    /// Row-stochastic `n x h` matrix.
    pub x: Vec<Vec<f64>>,
    /// Relaxation objective re-evaluated from `x`.
    pub objective_value: f64,
    pub status: SolverStatus,
}

impl FractionalSolution {
    pub fn row(&self, nonhub: usize) -> &[f64] {
        &self.x[nonhub]
    }
}

/// Objective of the relaxation at a stochastic `x`, with gaps set to
/// `|x_pk - x_qk|`.
pub fn lrp_objective(inst: &Instance, x: &[Vec<f64>]) -> f64 {
    let (n, h) = (inst.nonhub_count(), inst.hub_count());
    let mut total = 0.0;
    for p in 0..n {
        let through = inst.throughput(p);
        if through == 0.0 {
            continue;
        }
        let linear: f64 = (0..h).map(|i| inst.collection_cost(p, i) * x[p][i]).sum();
        total += through * linear;
    }
    for p in 0..n {
        for q in p + 1..n {
            let weight = inst.pair_weight(p, q);
            if weight == 0.0 {
                continue;
            }
            let gap: f64 = (0..h)
                .map(|k| inst.spoke_length(k) * libm::fabs(x[p][k] - x[q][k]))
                .sum();
            total += weight * gap;
        }
    }
    total
}

/// Entries below this are treated as exact zeros after solving.
const ZERO_SNAP: f64 = 1e-12;

/// Clamps to `[0, 1]`, snaps solver noise to zero and renormalizes each row.
/// A row that vanishes entirely becomes uniform.
pub fn clean_rows(x: &mut [Vec<f64>]) {
    for row in x.iter_mut() {
        for v in row.iter_mut() {
            *v = v.clamp(0.0, 1.0);
            if *v < ZERO_SNAP {
                *v = 0.0;
            }
        }
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        } else {
            let u = 1.0 / row.len() as f64;
            row.iter_mut().for_each(|v| *v = u);
        }
    }
}

/// Builds and solves the relaxation, returning the cleaned optimum.
pub fn solve_lrp(inst: &Instance) -> Result<FractionalSolution, LpError> {
    let lp = build_lrp(inst);
    let sol = solve(&lp);
    match sol.status {
        SolverStatus::Optimal | SolverStatus::IterationLimit => {}
        s => return Err(LpError::Internal(s)),
    }
    if sol.status == SolverStatus::IterationLimit {
        log::warn!("simplex hit its iteration cap; returning the current basis");
    }
    let (n, h) = (inst.nonhub_count(), inst.hub_count());
    let mut x = vec![vec![0.0; h]; n];
    for (j, kind) in lp.columns().iter().enumerate() {
        if let ColumnKind::Assign { nonhub, hub } = *kind {
            x[nonhub][hub] = sol.values[j];
        }
    }
    clean_rows(&mut x);
    let objective_value = lrp_objective(inst, &x);
    Ok(FractionalSolution {
        x,
        objective_value,
        status: sol.status,
    })
}
