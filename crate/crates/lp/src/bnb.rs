use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::problem::{LpProblem, VarId};
use crate::solution::{LpSolution, Status};
use crate::{LpError, LpSolver, INTEGRALITY_TOL};

#[derive(Clone, Copy, Debug)]
pub struct BranchOptions {
    pub max_nodes: usize,
    pub integrality_tol: f64,
    /// Nodes whose bound is within this (relative) margin of the incumbent are pruned.
    pub relative_gap: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            max_nodes: 200_000,
            integrality_tol: INTEGRALITY_TOL,
            relative_gap: 1e-9,
        }
    }
}

struct Node {
    bound: f64,
    seq: usize,
    fixings: Vec<(VarId, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: invert so the lowest bound (then oldest node) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first branch-and-bound over binary variables.
///
/// Every node solves the LP relaxation with branched binaries fixed. When a
/// relaxation comes back integral, the binaries are rounded and the LP is
/// re-solved with them fixed so the reported point is an exact LP optimum for
/// that assignment.
pub fn solve_milp(
    solver: &dyn LpSolver,
    problem: &LpProblem,
    options: &BranchOptions,
) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let binaries: Vec<VarId> = problem.integer_vars().collect();
    for &b in &binaries {
        let v = problem.var(b);
        if v.lower < 0.0 || v.upper > 1.0 {
            return Err(LpError::NonBinaryInteger(v.name.clone()));
        }
    }
    if binaries.is_empty() {
        return solver.solve_relaxation(problem);
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq: 0,
        fixings: Vec::new(),
    });
    let mut seq = 1;
    let mut incumbent: Option<LpSolution> = None;
    let mut nodes = 0usize;
    let mut iterations = 0usize;

    while let Some(node) = heap.pop() {
        if let Some(best) = &incumbent {
            if prunable(node.bound, best.objective, options) {
                continue;
            }
        }
        if nodes >= options.max_nodes {
            return Ok(limit_result(problem, incumbent, iterations));
        }
        nodes += 1;

        let relaxed = solver.solve_relaxation(&with_fixings(problem, &node.fixings))?;
        iterations += relaxed.iterations;
        match relaxed.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded => {
                return Ok(LpSolution::without_point(Status::Unbounded, iterations));
            }
            Status::IterationLimit => return Ok(limit_result(problem, incumbent, iterations)),
        }
        if let Some(best) = &incumbent {
            if prunable(relaxed.objective, best.objective, options) {
                continue;
            }
        }

        let branch_var = binaries
            .iter()
            .map(|&b| (b, relaxed.value(b)))
            .filter(|(_, v)| (v - v.round()).abs() > options.integrality_tol)
            .min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()));

        match branch_var {
            None => {
                let mut fixings = node.fixings.clone();
                for &b in &binaries {
                    if !fixings.iter().any(|(v, _)| *v == b) {
                        fixings.push((b, relaxed.value(b).round()));
                    }
                }
                let exact = solver.solve_relaxation(&with_fixings(problem, &fixings))?;
                iterations += exact.iterations;
                if exact.is_optimal()
                    && incumbent
                        .as_ref()
                        .map_or(true, |best| exact.objective < best.objective)
                {
                    incumbent = Some(exact);
                }
            }
            Some((var, _)) => {
                for value in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((var, value));
                    heap.push(Node {
                        bound: relaxed.objective,
                        seq,
                        fixings,
                    });
                    seq += 1;
                }
            }
        }
    }

    Ok(match incumbent {
        Some(mut best) => {
            best.iterations = iterations;
            best
        }
        None => LpSolution::without_point(Status::Infeasible, iterations),
    })
}

fn prunable(bound: f64, incumbent: f64, options: &BranchOptions) -> bool {
    bound >= incumbent - options.relative_gap * (1.0 + incumbent.abs())
}

fn with_fixings(problem: &LpProblem, fixings: &[(VarId, f64)]) -> LpProblem {
    let mut p = problem.clone();
    for &(v, value) in fixings {
        p.set_bounds(v, value, value);
    }
    p
}

fn limit_result(problem: &LpProblem, incumbent: Option<LpSolution>, iterations: usize) -> LpSolution {
    match incumbent {
        Some(best) => LpSolution::with_point(problem, Status::IterationLimit, best.values, iterations),
        None => LpSolution::without_point(Status::IterationLimit, iterations),
    }
}
