//! Hitchcock transportation tools.
//!
//! Marginal-only routines (the north-west corner rule, the diagonal-first
//! coupling) are generic over [`Scalar`] so they can run on exact rationals
//! as well as `f64`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;
use thiserror::Error;

use crate::lp::{self, ColumnKind, LpBuilder, Relation, SolverStatus};
use crate::rounding::HubClassing;

/// Numeric type usable by the marginal routines.
pub trait Scalar: Num + Copy + PartialOrd + Debug {
    /// Slack allowed when checking that marginals balance or sum to one.
    fn balance_tol() -> Self;
    /// Relative slack for Monge inequalities.
    fn monge_tol() -> Self;

    fn abs_val(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    fn min_val(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn balance_tol() -> Self {
        1e-9
    }
    fn monge_tol() -> Self {
        1e-12
    }
}

macro_rules! exact_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for Ratio<$t> {
            fn balance_tol() -> Self {
                Self::from_integer(0)
            }
            fn monge_tol() -> Self {
                Self::from_integer(0)
            }
        }
    )*};
}
exact_scalar!(i64, i128);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("supply total and demand total differ")]
    Unbalanced,
    #[error("marginal entry {0} is negative")]
    Negative(usize),
    #[error("cost matrix must be {rows}x{cols}")]
    Dimension { rows: usize, cols: usize },
    #[error("marginal vectors must be stochastic and of equal length")]
    NotStochastic,
    #[error("transport LP ended with status {0:?}")]
    Solver(SolverStatus),
}

fn total<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x)
}

fn nearly_equal<T: Scalar>(a: T, b: T) -> bool {
    let scale = if a.abs_val() > T::one() { a.abs_val() } else { T::one() };
    (a - b).abs_val() <= T::balance_tol() * scale
}

/// A balanced transportation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportInstance<T> {
    supply: Vec<T>,
    demand: Vec<T>,
    cost: Vec<Vec<T>>,
}

impl<T: Scalar> TransportInstance<T> {
    pub fn new(supply: Vec<T>, demand: Vec<T>, cost: Vec<Vec<T>>) -> Result<Self, TransportError> {
        check_marginals(&supply, &demand)?;
        if cost.len() != supply.len() || cost.iter().any(|r| r.len() != demand.len()) {
            return Err(TransportError::Dimension {
                rows: supply.len(),
                cols: demand.len(),
            });
        }
        Ok(Self { supply, demand, cost })
    }

    pub fn supply(&self) -> &[T] {
        &self.supply
    }

    pub fn demand(&self) -> &[T] {
        &self.demand
    }

    pub fn cost(&self) -> &[Vec<T>] {
        &self.cost
    }

    pub fn plan_cost(&self, plan: &TransportPlan<T>) -> T {
        plan.cost_under(&self.cost)
    }
}

fn check_marginals<T: Scalar>(a: &[T], b: &[T]) -> Result<(), TransportError> {
    for (k, &v) in a.iter().chain(b).enumerate() {
        if v < T::zero() {
            return Err(TransportError::Negative(k));
        }
    }
    if !nearly_equal(total(a), total(b)) {
        return Err(TransportError::Unbalanced);
    }
    Ok(())
}

/// A coupling `y[i][j] >= 0` between two marginal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    pub flows: Vec<Vec<T>>,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn row_sums(&self) -> Vec<T> {
        self.flows.iter().map(|r| total(r)).collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let cols = self.flows.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| self.flows.iter().fold(T::zero(), |acc, r| acc + r[j]))
            .collect()
    }

    pub fn cost_under(&self, cost: &[Vec<T>]) -> T {
        let mut acc = T::zero();
        for (row, crow) in self.flows.iter().zip(cost) {
            for (&y, &c) in row.iter().zip(crow) {
                acc = acc + y * c;
            }
        }
        acc
    }

    pub fn positive_cells(&self) -> usize {
        self.flows.iter().flatten().filter(|&&y| y > T::zero()).count()
    }

    /// `sum_{i != j} (w_i + w_j) y_ij` for a square plan.
    pub fn off_diagonal_weighted(&self, weights: &[T]) -> T {
        let mut acc = T::zero();
        for (i, row) in self.flows.iter().enumerate() {
            for (j, &y) in row.iter().enumerate() {
                if i != j {
                    acc = acc + (weights[i] + weights[j]) * y;
                }
            }
        }
        acc
    }

    /// Whether every north-west prefix block carries
    /// `min(prefix supply, prefix demand)`, within `tol`.
    pub fn satisfies_prefix_identity(&self, supply: &[T], demand: &[T], tol: T) -> bool {
        let (rows, cols) = (supply.len(), demand.len());
        // Running 2-D prefix sums.
        let mut block = vec![vec![T::zero(); cols]; rows];
        let mut sa = T::zero();
        for i in 0..rows {
            sa = sa + supply[i];
            let mut row_acc = T::zero();
            let mut sb = T::zero();
            for j in 0..cols {
                row_acc = row_acc + self.flows[i][j];
                sb = sb + demand[j];
                block[i][j] = row_acc + if i > 0 { block[i - 1][j] } else { T::zero() };
                if (block[i][j] - sa.min_val(sb)).abs_val() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// North-west corner rule on raw marginals in the given order.
pub fn northwest_corner<T: Scalar>(supply: &[T], demand: &[T]) -> Vec<Vec<T>> {
    let (rows, cols) = (supply.len(), demand.len());
    let mut y = vec![vec![T::zero(); cols]; rows];
    if rows == 0 || cols == 0 {
        return y;
    }
    let mut ra = supply.to_vec();
    let mut rb = demand.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let amount = ra[i].min_val(rb[j]);
        y[i][j] = amount;
        ra[i] = ra[i] - amount;
        rb[j] = rb[j] - amount;
        if i == rows - 1 && j == cols - 1 {
            break;
        }
        let column_done = rb[j] <= T::zero();
        if j + 1 < cols && (column_done || i == rows - 1) {
            j += 1;
        } else {
            i += 1;
        }
    }
    y
}

/// North-west corner rule on `t` in its natural order.
pub fn nwcr<T: Scalar>(t: &TransportInstance<T>) -> TransportPlan<T> {
    TransportPlan {
        flows: northwest_corner(&t.supply, &t.demand),
    }
}

/// North-west corner rule after reordering rows and columns; the plan is
/// returned in the original indexing.
pub fn nwcr_ordered<T: Scalar>(t: &TransportInstance<T>, row_order: &[usize], col_order: &[usize]) -> TransportPlan<T> {
    let a: Vec<T> = row_order.iter().map(|&i| t.supply[i]).collect();
    let b: Vec<T> = col_order.iter().map(|&j| t.demand[j]).collect();
    let y = northwest_corner(&a, &b);
    let mut flows = vec![vec![T::zero(); t.demand.len()]; t.supply.len()];
    for (pi, &i) in row_order.iter().enumerate() {
        for (pj, &j) in col_order.iter().enumerate() {
            flows[i][j] = y[pi][pj];
        }
    }
    TransportPlan { flows }
}

/// Exhaustive Monge check: `c[i][j] + c[k][l] <= c[i][l] + c[k][j]` for all
/// `i < k`, `j < l`, with slack `monge_tol * max(1, max |c|)`.
pub fn is_monge<T: Scalar>(c: &[Vec<T>]) -> bool {
    let mut scale = T::one();
    for &v in c.iter().flatten() {
        if v.abs_val() > scale {
            scale = v.abs_val();
        }
    }
    let tol = T::monge_tol() * scale;
    let rows = c.len();
    let cols = c.first().map_or(0, Vec::len);
    for i in 0..rows {
        for k in i + 1..rows {
            for j in 0..cols {
                for l in j + 1..cols {
                    if c[i][j] + c[k][l] > c[i][l] + c[k][j] + tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Whether `c` becomes Monge after permuting rows by `row_order` and
/// columns by `col_order`.
pub fn is_monge_under<T: Scalar>(c: &[Vec<T>], row_order: &[usize], col_order: &[usize]) -> bool {
    let permuted: Vec<Vec<T>> = row_order
        .iter()
        .map(|&i| col_order.iter().map(|&j| c[i][j]).collect())
        .collect();
    is_monge(&permuted)
}

/// Surrogate hub-pair costs of a classing and their line embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct HatCostMatrix {
    pub entries: Vec<Vec<f64>>,
    /// `+u` for odd classes, `-u` for even ones (class 0 sits at 0).
    pub positions: Vec<f64>,
}

impl HatCostMatrix {
    /// Hubs sorted by ascending position, ties by index.
    pub fn position_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.positions.len()).collect();
        order.sort_by(|&a, &b| {
            self.positions[a]
                .partial_cmp(&self.positions[b])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order
    }
}

/// `|u_i - u_j|` for classes of equal parity, `u_i + u_j` otherwise.
pub fn build_hat_matrix(hc: &HubClassing) -> HatCostMatrix {
    let h = hc.hub_count();
    let entries = (0..h)
        .map(|i| {
            (0..h)
                .map(|j| {
                    if hc.alpha[i] % 2 == hc.alpha[j] % 2 {
                        libm::fabs(hc.u[i] - hc.u[j])
                    } else {
                        hc.u[i] + hc.u[j]
                    }
                })
                .collect()
        })
        .collect();
    let positions = (0..h)
        .map(|i| if hc.alpha[i] % 2 == 1 { hc.u[i] } else { -hc.u[i] })
        .collect();
    HatCostMatrix { entries, positions }
}

/// Optimal plan of `t` by the dense simplex.
pub fn transport_optimal(t: &TransportInstance<f64>) -> Result<TransportPlan<f64>, TransportError> {
    let (rows, cols) = (t.supply.len(), t.demand.len());
    let mut b = LpBuilder::new();
    let mut ids = vec![vec![0usize; cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            ids[i][j] = b.add_column(ColumnKind::Flow { row: i, col: j }, t.cost[i][j]);
        }
    }
    for i in 0..rows {
        b.add_row((0..cols).map(|j| (ids[i][j], 1.0)).collect(), Relation::Eq, t.supply[i]);
    }
    for j in 0..cols {
        b.add_row((0..rows).map(|i| (ids[i][j], 1.0)).collect(), Relation::Eq, t.demand[j]);
    }
    let sol = lp::solve(&b.finish());
    if sol.status != SolverStatus::Optimal {
        return Err(TransportError::Solver(sol.status));
    }
    let flows = ids
        .iter()
        .map(|row| row.iter().map(|&k| sol.values[k]).collect())
        .collect();
    Ok(TransportPlan { flows })
}

fn check_stochastic<T: Scalar>(x: &[T]) -> Result<(), TransportError> {
    if x.iter().any(|&v| v < T::zero()) || !nearly_equal(total(x), T::one()) {
        return Err(TransportError::NotStochastic);
    }
    Ok(())
}

/// Couples two stochastic vectors: keep `min(x_p[i], x_q[i])` on the
/// diagonal, then sweep rows in order, filling each row's excess into the
/// leftmost columns that still lack mass.
///
/// Off the diagonal, row `i` carries `(x_p[i] - x_q[i])+` and column `j`
/// carries `(x_q[j] - x_p[j])+`.
pub fn couple_from_marginals<T: Scalar>(x_p: &[T], x_q: &[T]) -> Result<TransportPlan<T>, TransportError> {
    if x_p.len() != x_q.len() {
        return Err(TransportError::NotStochastic);
    }
    check_stochastic(x_p)?;
    check_stochastic(x_q)?;
    let h = x_p.len();
    let mut y = vec![vec![T::zero(); h]; h];
    let mut row_rest = Vec::with_capacity(h);
    let mut col_rest = Vec::with_capacity(h);
    for i in 0..h {
        let d = x_p[i].min_val(x_q[i]);
        y[i][i] = d;
        row_rest.push(x_p[i] - d);
        col_rest.push(x_q[i] - d);
    }
    for i in 0..h {
        let mut j = 0;
        while row_rest[i] > T::zero() && j < h {
            let amount = row_rest[i].min_val(col_rest[j]);
            if amount > T::zero() {
                y[i][j] = y[i][j] + amount;
                row_rest[i] = row_rest[i] - amount;
                col_rest[j] = col_rest[j] - amount;
            }
            j += 1;
        }
    }
    Ok(TransportPlan { flows: y })
}
