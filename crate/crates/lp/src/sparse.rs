use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::problem::{LpProblem, Sense};
use crate::solution::{LpSolution, Status};
use crate::{LpError, LpSolver};

/// Sparse revised simplex provided by the `microlp` crate.
///
/// Integrality flags are dropped: this backend only ever sees relaxations.
#[derive(Clone, Debug, Default)]
pub struct SparseSimplex;

impl LpSolver for SparseSimplex {
    fn solve_relaxation(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        problem.validate()?;
        let mut model = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = problem
            .vars()
            .iter()
            .zip(problem.objective())
            .map(|(v, &c)| model.add_var(c, (v.lower, v.upper)))
            .collect();
        for con in problem.constraints() {
            let op = match con.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Eq => ComparisonOp::Eq,
                Sense::Ge => ComparisonOp::Ge,
            };
            let expr: Vec<_> = con
                .terms
                .iter()
                .filter(|(_, a)| *a != 0.0)
                .map(|&(v, a)| (vars[v.index()], a))
                .collect();
            if expr.is_empty() {
                // microlp rejects empty rows; judge them directly.
                let ok = match con.sense {
                    Sense::Le => 0.0 <= con.rhs + crate::FEASIBILITY_TOL,
                    Sense::Ge => 0.0 >= con.rhs - crate::FEASIBILITY_TOL,
                    Sense::Eq => con.rhs.abs() <= crate::FEASIBILITY_TOL,
                };
                if !ok {
                    return Ok(LpSolution::without_point(Status::Infeasible, 0));
                }
                continue;
            }
            model.add_constraint(expr, op, con.rhs);
        }
        match model.solve() {
            Ok(outcome) => match outcome.solution() {
                Some(sol) => {
                    let x = vars
                        .iter()
                        .zip(problem.vars())
                        .map(|(&v, var)| sol.var_value_raw(v).clamp(var.lower, var.upper))
                        .collect();
                    let iterations = sol.stats().lp_iterations as usize;
                    Ok(LpSolution::with_point(problem, Status::Optimal, x, iterations))
                }
                None => Ok(LpSolution::without_point(Status::IterationLimit, 0)),
            },
            Err(microlp::Error::Infeasible) => Ok(LpSolution::without_point(Status::Infeasible, 0)),
            Err(microlp::Error::Unbounded) => Ok(LpSolution::without_point(Status::Unbounded, 0)),
            Err(e) => Err(LpError::Backend(e.to_string())),
        }
    }
}
