//! Solvers for `u_t + u u_x = (n/(n-1)) D^{-2} D (u_x^2)` on the unit
//! circle, the one-dimensional reduction of the `n`-dimensional Euler
//! equations under a stagnation-point ansatz.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` and `*32` aliases below fix it.

// Negated comparisons are used on purpose so that NaN fails the checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod eulerian;
pub mod interp;
pub mod lagrangian;
pub mod lift;
pub mod ode;
pub mod operators;
pub mod profile;
pub mod scalar;
pub mod separable;
pub mod twophase;

pub use diagnostics::{drift_report, BoundCheck, DiagnosticsRecord, DriftReport, InitialBounds};
pub use error::{Error, Result};
pub use eulerian::{evolve, step_rk4, BlowUpError, SimConfig, SimState, StepControl, Trajectory};
pub use lagrangian::{evolve_flow, FlowOptions, FlowState, ForcingRoute};
pub use operators::{deriv, evolution_rhs, forcing_f, inv_dx, mean, nonlocal, Dimension, Field, PeriodicGrid};
pub use profile::InitialProfile;
pub use scalar::Real;
pub use twophase::{evolve_twophase, TwoPhaseInit, TwoPhaseState};

pub type Field64 = Field<f64>;
pub type Field32 = Field<f32>;
pub type Grid64 = PeriodicGrid<f64>;
pub type Grid32 = PeriodicGrid<f32>;
pub type SimState64 = SimState<f64>;
pub type SimState32 = SimState<f32>;
pub type SimConfig64 = SimConfig<f64>;
pub type FlowState64 = FlowState<f64>;
pub type TwoPhaseState64 = TwoPhaseState<f64>;
pub type DiagnosticsRecord64 = DiagnosticsRecord<f64>;
