//! Finite-volume lab for the doubly nonlinear parabolic equation
//! `u_t - Delta_p u + |grad u|^q = 0` with `p > 2` and `1 < q < p - 1`, in one or two
//! space dimensions.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases at the crate
//! root pin the common `f64` and `f32` instances.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod barriers;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod initial;
pub mod io;
pub mod operators;
pub mod params;
pub mod profile;
pub mod scalar;
pub mod stepper;
pub mod suite;

pub use barriers::{check_comparison, eval_s1, eval_sa, max_amplitude_ar, Barrier, ComparisonReport, Direction};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use grid::{Field, Grid, Norms, PositivitySet};
pub use initial::{initial_bump, InitialData};
pub use operators::PLaplacianKind;
pub use params::{DerivedConstants, Params, Regime, RegimeLabel};
pub use profile::{build_vinf, eikonal_residual, LimitProfile};
pub use scalar::Real;
pub use stepper::{Integrator, Mode, RunOutcome, StepControl, Trajectory};

pub type Params64 = Params<f64>;
pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Integrator64 = Integrator<f64>;
pub type LimitProfile64 = LimitProfile<f64>;

pub type Params32 = Params<f32>;
pub type Grid32 = Grid<f32>;
pub type Field32 = Field<f32>;
pub type Trajectory32 = Trajectory<f32>;
pub type Integrator32 = Integrator<f32>;
