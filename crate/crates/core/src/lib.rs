//! Explicit-control steering for the bilinear Schrödinger equation
//! `i∂ψ = −Δψ + u(t)Bψ` on (0,1) with Dirichlet conditions.
//!
//! Modules, bottom up: [`spectral`] (eigenbasis, norms, coupling matrices),
//! [`propagator`] (time integration), [`bounds`] (explicit constants and error
//! bounds), [`moments`] (trigonometric moment problems), [`steering`] (the
//! approximate-then-exact transfer pipeline) and [`report`] (the x² worked
//! example table and unit conversion).

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod control;
pub mod error;
pub mod moments;
pub mod propagator;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod steering;

pub use control::{ControlSignal, Term};
pub use error::{Error, Result};
pub use propagator::{duhamel_residual, fidelity_phase, propagate, IntegrationOptions, Propagator, Scheme, Trajectory};
pub use spectral::{
    assumption_constant, coupling_x2, eigenvalue, free_evolve, operator_norm, sobolev_norm, CouplingOperator, Generator,
    ModalState, NormEstimate, NormKind,
};
pub use bounds::{BoundReport, Constants, ConstantsMode};
pub use moments::{build_biorthogonal, build_frequencies, solve_moments, BiorthogonalFamily, FrequencySet};
pub use steering::{approximate_steer, exact_correct, full_transfer, linearized_map, SteeringMode, SteeringPlan, SteeringResult};
