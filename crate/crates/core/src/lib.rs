//! Fuel-minimizing multi-period dispatch.
//!
//! Generator fuel use `P/(α·η(P))` is a sum of ratios. The [`engine`]
//! alternates between a conic relaxation of the AC network ([`relaxation`],
//! solved through [`socp`]) and closed-form updates of the auxiliary
//! multipliers of the ratio surrogate ([`fractional`]). [`baseline`] holds
//! independent reference solvers for small cases.

pub mod baseline;
pub mod cases;
pub mod engine;
pub mod fractional;
pub mod netmodel;
pub mod relaxation;
pub mod report;
pub mod socp;


pub use engine::{
    compare_models, compute_fuel, solve_dispatch, Comparison, DispatchSolution, DispatchStatus,
    Schedule, SolverConfig, Variant,
};
pub use netmodel::{load_case, parse_case, validate_case, NetworkCase};
