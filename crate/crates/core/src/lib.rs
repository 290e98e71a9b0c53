//! Laser phase noise in pumped optical cavities.
//!
//! The crate answers one question from several independent directions: how
//! much does phase diffusion of the pump laser heat the fluctuation mode of a
//! strongly driven cavity, and does that heating survive once the cavity is
//! coupled to a mechanical oscillator it is supposed to cool?
//!
//! - [`model`] holds the physical parameter types and their validation.
//! - [`analytic`] gives closed-form steady-state answers and feasibility margins.
//! - [`noise`] generates reproducible vacuum and phase-noise paths and estimates spectra.
//! - [`sim`] integrates the stochastic amplitude equations and estimates occupations.
//! - [`coupled`] solves the linearized cavity-mirror system in steady state.
//! - [`config`] reads and writes the key/value scenario document.
//!
//! All rates are angular (rad/s) internally.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod constants;
pub mod coupled;
mod error;
pub mod fmt;
pub mod model;
pub mod noise;
pub mod quad;
pub mod sim;

pub use error::{Error, Result, Violation};
pub use model::{
    pump_rate_from_power, validate, Frame, Lorentzian, NoiseKind, NoiseSpec, SimConfig,
    SystemParams, Validated,
};
