//! Two-phase primal simplex on a dense tableau with implicit upper bounds.
//!
//! Every structural column is shifted so its lower bound is zero. Finite
//! upper bounds are handled by complementing: a variable sitting at its upper
//! bound is replaced by `ub - y`, so all nonbasic columns are always at zero
//! and the textbook tableau update applies unchanged.

use crate::problem::{LpProblem, Sense};
use crate::solution::{LpSolution, Status};
use crate::{LpError, LpSolver};

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub feasibility_tol: f64,
    /// Relative to the largest objective coefficient.
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Iterations without objective progress before switching to Bland's rule.
    pub stall_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            feasibility_tol: crate::FEASIBILITY_TOL,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            stall_limit: 500,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DenseSimplex {
    pub options: SimplexOptions,
}

impl DenseSimplex {
    pub fn new(options: SimplexOptions) -> Self {
        Self { options }
    }
}

impl LpSolver for DenseSimplex {
    fn solve_relaxation(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        problem.validate()?;
        let (mut tab, maps) = StandardForm::build(problem);
        let opts = &self.options;
        let mut iterations = 0;

        if tab.num_artificial > 0 {
            tab.load_costs(&tab.phase_one_costs());
            match tab.iterate(opts, &mut iterations) {
                Outcome::IterationLimit => {
                    return Ok(LpSolution::without_point(Status::IterationLimit, iterations))
                }
                // Phase one is bounded below by zero.
                Outcome::Optimal | Outcome::Unbounded => {}
            }
            let infeasibility = tab.artificial_sum();
            if infeasibility > opts.feasibility_tol * (1.0 + tab.rhs_scale) {
                return Ok(LpSolution::without_point(Status::Infeasible, iterations));
            }
            tab.drive_out_artificials(opts);
        }

        tab.load_costs(&tab.phase_two_costs.clone());
        let status = match tab.iterate(opts, &mut iterations) {
            Outcome::Optimal => Status::Optimal,
            Outcome::Unbounded => return Ok(LpSolution::without_point(Status::Unbounded, iterations)),
            Outcome::IterationLimit => Status::IterationLimit,
        };
        let x = maps.recover(problem, &tab.column_values());
        Ok(LpSolution::with_point(problem, status, x, iterations))
    }
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Copy)]
enum ColumnMap {
    /// x = lower + y
    Shifted { col: usize, lower: f64 },
    /// x = upper - y
    Mirrored { col: usize, upper: f64 },
    /// x = y+ - y-
    Split { pos: usize, neg: usize },
}

struct Maps(Vec<ColumnMap>);

impl Maps {
    fn recover(&self, problem: &LpProblem, y: &[f64]) -> Vec<f64> {
        self.0
            .iter()
            .zip(problem.vars())
            .map(|(map, var)| {
                let x = match *map {
                    ColumnMap::Shifted { col, lower } => lower + y[col],
                    ColumnMap::Mirrored { col, upper } => upper - y[col],
                    ColumnMap::Split { pos, neg } => y[pos] - y[neg],
                };
                x.clamp(var.lower, var.upper)
            })
            .collect()
    }
}

struct StandardForm {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`.
    a: Vec<f64>,
    rhs: Vec<f64>,
    upper: Vec<f64>,
    flipped: Vec<bool>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    objective: f64,
    artificial_start: usize,
    num_artificial: usize,
    banned: Vec<bool>,
    dead_row: Vec<bool>,
    phase_two_costs: Vec<f64>,
    rhs_scale: f64,
}

impl StandardForm {
    fn build(problem: &LpProblem) -> (Self, Maps) {
        let mut maps = Vec::with_capacity(problem.num_vars());
        let mut upper = Vec::new();
        let mut costs = Vec::new();
        for (var, &c) in problem.vars().iter().zip(problem.objective()) {
            let col = upper.len();
            if var.lower.is_finite() {
                maps.push(ColumnMap::Shifted {
                    col,
                    lower: var.lower,
                });
                upper.push(var.upper - var.lower);
                costs.push(c);
            } else if var.upper.is_finite() {
                maps.push(ColumnMap::Mirrored {
                    col,
                    upper: var.upper,
                });
                upper.push(f64::INFINITY);
                costs.push(-c);
            } else {
                maps.push(ColumnMap::Split { pos: col, neg: col + 1 });
                upper.extend([f64::INFINITY, f64::INFINITY]);
                costs.extend([c, -c]);
            }
        }
        let structural = upper.len();
        let rows = problem.num_constraints();

        // Dense rows over structural columns plus slack bookkeeping.
        let mut dense_rows: Vec<Vec<f64>> = Vec::with_capacity(rows);
        let mut rhs = Vec::with_capacity(rows);
        let mut slack_sign = Vec::with_capacity(rows);
        for con in problem.constraints() {
            let mut row = vec![0.0; structural];
            let mut b = con.rhs;
            for &(v, a) in &con.terms {
                match maps[v.index()] {
                    ColumnMap::Shifted { col, lower } => {
                        row[col] += a;
                        b -= a * lower;
                    }
                    ColumnMap::Mirrored { col, upper } => {
                        row[col] -= a;
                        b -= a * upper;
                    }
                    ColumnMap::Split { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            let mut s = match con.sense {
                Sense::Le => 1.0,
                Sense::Ge => -1.0,
                Sense::Eq => 0.0,
            };
            if b < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
                b = -b;
                s = -s;
            }
            dense_rows.push(row);
            rhs.push(b);
            slack_sign.push(s);
        }

        let num_slack = slack_sign.iter().filter(|s| **s != 0.0).count();
        let num_artificial = slack_sign.iter().filter(|s| **s <= 0.0).count();
        let artificial_start = structural + num_slack;
        let cols = artificial_start + num_artificial;

        let mut a = vec![0.0; rows * cols];
        let mut basis = Vec::with_capacity(rows);
        let mut next_slack = structural;
        let mut next_art = artificial_start;
        for (r, row) in dense_rows.iter().enumerate() {
            a[r * cols..r * cols + structural].copy_from_slice(row);
            let s = slack_sign[r];
            if s != 0.0 {
                a[r * cols + next_slack] = s;
                if s > 0.0 {
                    basis.push(next_slack);
                }
                next_slack += 1;
            }
            if s <= 0.0 {
                a[r * cols + next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }
        upper.resize(cols, f64::INFINITY);
        costs.resize(cols, 0.0);

        let mut basic_row = vec![None; cols];
        for (r, &b) in basis.iter().enumerate() {
            basic_row[b] = Some(r);
        }
        let rhs_scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let tab = StandardForm {
            rows,
            cols,
            a,
            rhs,
            upper,
            flipped: vec![false; cols],
            basis,
            basic_row,
            cost: vec![0.0; cols],
            reduced: vec![0.0; cols],
            objective: 0.0,
            artificial_start,
            num_artificial,
            banned: vec![false; cols],
            dead_row: vec![false; rows],
            phase_two_costs: costs,
            rhs_scale,
        };
        (tab, Maps(maps))
    }

    fn phase_one_costs(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| if j >= self.artificial_start { 1.0 } else { 0.0 })
            .collect()
    }

    /// Installs original-orientation costs, respecting complemented columns.
    fn load_costs(&mut self, costs: &[f64]) {
        for j in 0..self.cols {
            self.cost[j] = if self.flipped[j] { -costs[j] } else { costs[j] };
        }
        self.reduced.copy_from_slice(&self.cost);
        self.objective = 0.0;
        for r in 0..self.rows {
            let cb = self.cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            for (d, &v) in self.reduced.iter_mut().zip(row) {
                *d -= cb * v;
            }
            self.objective += cb * self.rhs[r];
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    fn artificial_sum(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .filter(|(b, _)| **b >= self.artificial_start)
            .map(|(_, v)| v.abs())
            .sum()
    }

    fn iterate(&mut self, opts: &SimplexOptions, iterations: &mut usize) -> Outcome {
        let cost_scale = self.cost.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let dtol = opts.optimality_tol * cost_scale;
        let mut bland = false;
        let mut stalled = 0usize;
        loop {
            let Some(enter) = self.choose_entering(dtol, bland) else {
                return Outcome::Optimal;
            };
            if *iterations >= opts.max_iterations {
                return Outcome::IterationLimit;
            }
            *iterations += 1;
            let before = self.objective;
            match self.ratio_test(enter, opts.pivot_tol, bland) {
                None => return Outcome::Unbounded,
                Some(Leave::Flip) => self.flip(enter),
                Some(Leave::Row { row, to_upper }) => {
                    if to_upper {
                        self.complement_basic(row);
                    }
                    self.pivot(row, enter);
                }
            }
            if before - self.objective > 1e-12 * (1.0 + before.abs()) {
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= opts.stall_limit {
                    bland = true;
                }
            }
        }
    }

    fn choose_entering(&self, dtol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if self.banned[j] || self.basic_row[j].is_some() || self.upper[j] == 0.0 {
                continue;
            }
            let d = self.reduced[j];
            if d >= -dtol {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    }

    fn ratio_test(&self, enter: usize, pivot_tol: f64, bland: bool) -> Option<Leave> {
        let mut best_theta = self.upper[enter];
        let mut best = if best_theta.is_finite() {
            Some(Leave::Flip)
        } else {
            None
        };
        let mut best_pivot = 0.0;
        for r in 0..self.rows {
            if self.dead_row[r] {
                continue;
            }
            let a = self.a[r * self.cols + enter];
            let b = self.basis[r];
            let (theta, to_upper) = if a > pivot_tol {
                (self.rhs[r].max(0.0) / a, false)
            } else if a < -pivot_tol && self.upper[b].is_finite() {
                ((self.upper[b] - self.rhs[r]).max(0.0) / -a, true)
            } else {
                continue;
            };
            let tie = 1e-12 * (1.0 + best_theta.abs().min(1e12));
            let better = match best {
                None => true,
                Some(_) if theta < best_theta - tie => true,
                Some(Leave::Flip) => theta <= best_theta + tie,
                Some(Leave::Row { row, .. }) if theta <= best_theta + tie => {
                    if bland {
                        b < self.basis[row]
                    } else {
                        a.abs() > best_pivot
                    }
                }
                Some(_) => false,
            };
            if better {
                best_theta = theta;
                best_pivot = a.abs();
                best = Some(Leave::Row { row: r, to_upper });
            }
        }
        best
    }

    fn flip(&mut self, j: usize) {
        let ub = self.upper[j];
        for r in 0..self.rows {
            let idx = r * self.cols + j;
            self.rhs[r] -= ub * self.a[idx];
            self.a[idx] = -self.a[idx];
        }
        self.objective += self.reduced[j] * ub;
        self.reduced[j] = -self.reduced[j];
        self.cost[j] = -self.cost[j];
        self.flipped[j] = !self.flipped[j];
    }

    /// Rewrites the basic variable of `row` as `ub - y` so it can leave at zero.
    fn complement_basic(&mut self, row: usize) {
        let b = self.basis[row];
        let start = row * self.cols;
        for j in 0..self.cols {
            if j != b {
                self.a[start + j] = -self.a[start + j];
            }
        }
        self.rhs[row] = self.upper[b] - self.rhs[row];
        self.cost[b] = -self.cost[b];
        self.flipped[b] = !self.flipped[b];
    }

    fn pivot(&mut self, row: usize, enter: usize) {
        let cols = self.cols;
        let p = self.a[row * cols + enter];
        {
            let pivot_row = &mut self.a[row * cols..(row + 1) * cols];
            pivot_row.iter_mut().for_each(|v| *v /= p);
        }
        self.rhs[row] /= p;
        let (before, rest) = self.a.split_at_mut(row * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        let eliminate = |target: &mut [f64], rhs: &mut f64, pivot_rhs: f64| {
            let f = target[enter];
            if f != 0.0 {
                for (t, &pv) in target.iter_mut().zip(pivot_row.iter()) {
                    *t -= f * pv;
                }
                *rhs -= f * pivot_rhs;
                target[enter] = 0.0;
            }
        };
        let pivot_rhs = self.rhs[row];
        for (r, target) in before.chunks_mut(cols).enumerate() {
            eliminate(target, &mut self.rhs[r], pivot_rhs);
        }
        for (i, target) in after.chunks_mut(cols).enumerate() {
            let r = row + 1 + i;
            eliminate(target, &mut self.rhs[r], pivot_rhs);
        }
        let f = self.reduced[enter];
        if f != 0.0 {
            for (d, &pv) in self.reduced.iter_mut().zip(pivot_row.iter()) {
                *d -= f * pv;
            }
            self.objective += f * pivot_rhs;
        }
        self.reduced[enter] = 0.0;
        let leaving = self.basis[row];
        self.basic_row[leaving] = None;
        self.basic_row[enter] = Some(row);
        self.basis[row] = enter;
    }

    /// Pivots zero-valued artificials out of the basis and bans all
    /// artificial columns from re-entering. Rows where no replacement exists
    /// are linearly dependent and get retired.
    fn drive_out_artificials(&mut self, opts: &SimplexOptions) {
        for j in self.artificial_start..self.cols {
            self.banned[j] = true;
        }
        for r in 0..self.rows {
            if self.basis[r] < self.artificial_start {
                continue;
            }
            let start = r * self.cols;
            let candidate = (0..self.artificial_start)
                .filter(|&j| self.basic_row[j].is_none())
                .map(|j| (j, self.a[start + j].abs()))
                .filter(|&(_, v)| v > opts.pivot_tol)
                .max_by(|x, y| x.1.total_cmp(&y.1));
            match candidate {
                Some((j, _)) => {
                    self.rhs[r] = 0.0;
                    self.pivot(r, j);
                }
                None => self.dead_row[r] = true,
            }
        }
    }

    fn column_values(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                let v = self.basic_row[j].map_or(0.0, |r| self.rhs[r]);
                if self.flipped[j] {
                    self.upper[j] - v
                } else {
                    v
                }
            })
            .collect()
    }
}

enum Leave {
    Flip,
    Row { row: usize, to_upper: bool },
}
