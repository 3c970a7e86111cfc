//! Port-Hamiltonian passivity-based control of a grid-tied AC/DC converter
//! feeding constant-power loads, with a cascaded PI baseline, a fixed-step
//! simulator and energy-balance audits.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the I/O
//! layer and the aliases below use `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ab;
pub mod audit;
pub mod controllers;
pub mod demos;
pub mod engine;
pub mod error;
pub mod integrator;
pub mod io;
pub mod ph;
pub mod plant;
pub mod scalar;

pub use ab::Ab;
pub use controllers::ControllerKind;
pub use error::{Error, Result};
pub use scalar::Real;

pub type Scenario = engine::Scenario<f64>;
pub type RunResult = engine::RunResult<f64>;
pub type Sample = engine::Sample<f64>;
pub type SimState = engine::SimState<f64>;
pub type PlantParams = plant::PlantParams<f64>;
pub type GridProfile = plant::GridProfile<f64>;
pub type LoadProfile = plant::LoadProfile<f64>;
pub type ControllerConfig = controllers::ControllerConfig<f64>;
