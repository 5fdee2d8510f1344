//! Model-predictive dispatch of the ice tank and battery.

mod mpc;
mod problem;
mod trace;

pub use mpc::{baseline_dispatch, run_mpc, ForecastNoise, MpcOptions};
pub use problem::{
    build_dispatch_problem, solve_horizon, DispatchLayout, DispatchOptions, HorizonInputs, HorizonMonth, HorizonPlan,
    SolveMode,
};
pub use trace::{DispatchTrace, TraceEvent, TraceRow};

use storopt_lp::LpError;

use crate::cuts::CutError;
use crate::models::ModelError;
use crate::series::SeriesError;
use crate::tariff::TariffError;

#[derive(Debug, thiserror::Error)]
pub enum DispatchError {
    #[error("cooling load cannot be served at step {step}: short by {deficit:.3} kW")]
    Infeasible { step: usize, deficit: f64 },
    #[error("solver stopped early: {0}")]
    SolverLimit(String),
    #[error("invalid dispatch input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tariff(#[from] TariffError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}
