use crate::problem::{LpProblem, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration-limit",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    /// Variable values; empty unless a point is available.
    pub values: Vec<f64>,
    /// `c^T x + offset` recomputed from `values`; NaN without a point.
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub(crate) fn without_point(status: Status, iterations: usize) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            iterations,
        }
    }

    pub(crate) fn with_point(
        problem: &LpProblem,
        status: Status,
        values: Vec<f64>,
        iterations: usize,
    ) -> Self {
        let objective = problem.evaluate_objective(&values);
        Self {
            status,
            values,
            objective,
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.index()]
    }
}
