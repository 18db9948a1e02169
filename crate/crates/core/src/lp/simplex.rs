//! Dense two-phase primal simplex on a full tableau.
//!
//! Entering columns follow Dantzig's rule until a streak of degenerate pivots
//! reaches `bland_after`, after which Bland's smallest-index rule takes over
//! until a pivot makes progress again. Rows whose slack or surplus column can
//! start in the basis need no artificial variable.

use alloc::vec;
use alloc::vec::Vec;

use super::{ColumnKind, LinearProgram, SolverStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Smallest pivot magnitude (and reduced-cost threshold).
    pub pivot_tol: f64,
    /// Phase-one residual above which the program is declared infeasible,
    /// relative to `max(1, max |rhs|)`.
    pub feasibility_tol: f64,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub bland_after: usize,
    /// Iteration cap is `iteration_factor * (rows + cols)`.
    pub iteration_factor: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            feasibility_tol: 1e-7,
            bland_after: 50,
            iteration_factor: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// One value per LP column.
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: SolverStatus,
    pub iterations: usize,
}

pub fn solve(lp: &LinearProgram) -> LpSolution {
    solve_with(lp, &SimplexOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    let mut t = Tableau::new(lp, opts);
    let cap = opts.iteration_factor * (lp.row_count() + lp.column_count()).max(1);

    if t.artificials > 0 {
        let mut phase1 = vec![0.0; t.cols];
        phase1[t.structural..].iter_mut().for_each(|c| *c = 1.0);
        t.set_objective(&phase1);
        let outcome = t.run(t.cols, cap);
        if outcome == Outcome::IterationLimit {
            return t.solution(lp, SolverStatus::IterationLimit);
        }
        let scale = lp.rhs().iter().fold(1.0f64, |m, b| m.max(b.abs()));
        if t.objective_value() > opts.feasibility_tol * scale {
            return t.solution(lp, SolverStatus::Infeasible);
        }
        t.expel_artificials();
    }

    let mut phase2 = lp.objective().to_vec();
    phase2.resize(t.cols, 0.0);
    t.set_objective(&phase2);
    let status = match t.run(t.structural, cap) {
        Outcome::Optimal => SolverStatus::Optimal,
        Outcome::Unbounded => SolverStatus::Unbounded,
        Outcome::IterationLimit => SolverStatus::IterationLimit,
    };
    t.solution(lp, status)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau<'o> {
    opts: &'o SimplexOptions,
    m: usize,
    /// Structural plus slack/surplus columns; artificials follow them.
    structural: usize,
    artificials: usize,
    cols: usize,
    /// `(m + 1) x (cols + 1)` row-major; row `m` holds reduced costs and the
    /// negated objective value in the last column.
    data: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

impl<'o> Tableau<'o> {
    fn new(lp: &LinearProgram, opts: &'o SimplexOptions) -> Self {
        let m = lp.row_count();
        let structural = lp.column_count();

        // Decide per row: sign flip and starting basic column.
        let mut flips = vec![false; m];
        let mut starts: Vec<Option<usize>> = vec![None; m];
        for (r, row) in lp.rows().iter().enumerate() {
            let b = lp.rhs()[r];
            let own = row.iter().find_map(|&(j, a)| match lp.columns()[j] {
                ColumnKind::Slack { row } | ColumnKind::Surplus { row } if row == r => Some((j, a)),
                _ => None,
            });
            flips[r] = b < 0.0 || (b == 0.0 && matches!(own, Some((_, a)) if a < 0.0));
            if let Some((j, a)) = own {
                let a = if flips[r] { -a } else { a };
                if a > 0.0 {
                    starts[r] = Some(j);
                }
            }
        }
        let artificials = starts.iter().filter(|s| s.is_none()).count();
        let cols = structural + artificials;
        let width = cols + 1;
        let mut data = vec![0.0; (m + 1) * width];
        let mut basis = vec![0; m];
        let mut next_art = structural;
        for (r, row) in lp.rows().iter().enumerate() {
            let sign = if flips[r] { -1.0 } else { 1.0 };
            let line = &mut data[r * width..(r + 1) * width];
            for &(j, a) in row {
                line[j] += sign * a;
            }
            line[cols] = sign * lp.rhs()[r];
            basis[r] = match starts[r] {
                Some(j) => {
                    // Normalize so the starting column is a unit vector.
                    let a = line[j];
                    if a != 1.0 {
                        line.iter_mut().for_each(|v| *v /= a);
                    }
                    j
                }
                None => {
                    line[next_art] = 1.0;
                    next_art += 1;
                    next_art - 1
                }
            };
        }
        Self {
            opts,
            m,
            structural,
            artificials,
            cols,
            data,
            basis,
            iterations: 0,
        }
    }

    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn objective_value(&self) -> f64 {
        -self.at(self.m, self.cols)
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let (m, w, cols) = (self.m, self.width(), self.cols);
        let obj = m * w;
        self.data[obj..obj + cols].copy_from_slice(&costs[..cols]);
        self.data[obj + cols] = 0.0;
        for r in 0..m {
            let cb = costs[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for c in 0..w {
                self.data[obj + c] -= cb * self.data[r * w + c];
            }
        }
    }

    /// Iterates until optimal, unbounded or out of budget. Only columns
    /// `< allowed` may enter.
    fn run(&mut self, allowed: usize, cap: usize) -> Outcome {
        let tol = self.opts.pivot_tol;
        let mut degenerate_streak = 0usize;
        loop {
            if self.iterations >= cap {
                return Outcome::IterationLimit;
            }
            let obj = self.m * self.width();
            let reduced = &self.data[obj..obj + allowed];
            let entering = if degenerate_streak >= self.opts.bland_after {
                reduced.iter().position(|&d| d < -tol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for (j, &d) in reduced.iter().enumerate() {
                    if d < -tol && best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(j) = entering else {
                return Outcome::Optimal;
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, j);
                if a <= tol {
                    continue;
                }
                let ratio = self.at(r, self.cols) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12
                            || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, step)) = leave else {
                return Outcome::Unbounded;
            };
            if step <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(r, j);
            self.iterations += 1;
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let pv = self.data[pr * w + pc];
        {
            let row = &mut self.data[pr * w..(pr + 1) * w];
            row.iter_mut().for_each(|v| *v /= pv);
            row[pc] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.m {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            let line = &mut self.data[r * w..(r + 1) * w];
            for (v, &p) in line.iter_mut().zip(&pivot_row) {
                if p != 0.0 {
                    *v -= factor * p;
                    if v.abs() < 1e-14 {
                        *v = 0.0;
                    }
                }
            }
            line[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Pivots basic artificials (all at zero after a feasible phase one) out
    /// of the basis. A row with no usable column is redundant; its artificial
    /// stays basic at zero and is never touched again.
    fn expel_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.structural {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.structural {
                let a = self.at(r, j).abs();
                if a > self.opts.pivot_tol && best.is_none_or(|(_, ba)| a > ba) {
                    best = Some((j, a));
                }
            }
            match best {
                Some((j, _)) => self.pivot(r, j),
                None => {
                    let w = self.width();
                    self.data[r * w..r * w + self.structural]
                        .iter_mut()
                        .for_each(|v| *v = 0.0);
                    self.data[r * w + self.cols] = 0.0;
                }
            }
        }
    }

    fn solution(&self, lp: &LinearProgram, status: SolverStatus) -> LpSolution {
        let mut values = vec![0.0; self.structural];
        for r in 0..self.m {
            let j = self.basis[r];
            if j < self.structural {
                values[j] = self.at(r, self.cols).max(0.0);
            }
        }
        let objective = lp
            .objective()
            .iter()
            .zip(&values)
            .map(|(c, v)| c * v)
            .sum();
        LpSolution {
            values,
            objective,
            status,
            iterations: self.iterations,
        }
    }
}
