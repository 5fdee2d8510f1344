//! Linear and mixed-binary programming for storage dispatch and sizing.
//!
//! Problems are assembled as an [`LpProblem`] and handed to anything that
//! implements [`LpSolver`]. Two backends ship with the crate:
//!
//! - [`DenseSimplex`], a bounded-variable two-phase tableau simplex. It is the
//!   reference implementation and is exact enough to be checked against
//!   vertex enumeration on small instances.
//! - [`SparseSimplex`], backed by the `microlp` revised simplex, used when the
//!   tableau would be too large to hold densely.
//!
//! [`solve_milp`] runs best-first branch-and-bound over binary variables on
//! top of either backend.

mod bnb;
mod dense;
mod lpformat;
mod problem;
mod solution;
mod sparse;

pub use bnb::{solve_milp, BranchOptions};
pub use dense::{DenseSimplex, SimplexOptions};
pub use lpformat::write_lp;
pub use problem::{Constraint, LpProblem, Sense, VarId, Variable};
pub use solution::{LpSolution, Status};
pub use sparse::SparseSimplex;

/// Row and bound feasibility tolerance used when judging solutions.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Distance from an integer below which a binary is considered integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("variable {var} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { var: String, lower: f64, upper: f64 },
    #[error("row {row} references undeclared variable index {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("problem has integer variables; use solve_milp")]
    IntegralInLp,
    #[error("integer variable {0} is not binary")]
    NonBinaryInteger(String),
    #[error("solver backend failed: {0}")]
    Backend(String),
}

/// Anything that can solve the continuous relaxation of an [`LpProblem`].
pub trait LpSolver: Send + Sync {
    /// Solves the problem ignoring integrality flags.
    fn solve_relaxation(&self, problem: &LpProblem) -> Result<LpSolution, LpError>;

    /// Solves a purely continuous problem.
    fn solve_lp(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        if problem.has_integers() {
            return Err(LpError::IntegralInLp);
        }
        self.solve_relaxation(problem)
    }
}

/// Which backend [`AutoSolver`] should use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    Dense,
    Sparse,
    /// Dense for small tableaus, sparse otherwise.
    #[default]
    Auto,
}

/// Dispatches to the dense or sparse simplex depending on problem size.
#[derive(Clone, Debug, Default)]
pub struct AutoSolver {
    pub backend: Backend,
    pub dense: DenseSimplex,
    pub sparse: SparseSimplex,
}

/// Tableau cells (rows x columns) above which `Backend::Auto` goes sparse.
const DENSE_CELL_LIMIT: usize = 40_000;

impl AutoSolver {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }

    fn pick(&self, problem: &LpProblem) -> &dyn LpSolver {
        match self.backend {
            Backend::Dense => &self.dense,
            Backend::Sparse => &self.sparse,
            Backend::Auto => {
                let rows = problem.num_constraints();
                let cols = problem.num_vars() + rows;
                if rows.saturating_mul(cols) <= DENSE_CELL_LIMIT {
                    &self.dense
                } else {
                    &self.sparse
                }
            }
        }
    }
}

impl LpSolver for AutoSolver {
    fn solve_relaxation(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        self.pick(problem).solve_relaxation(problem)
    }
}
