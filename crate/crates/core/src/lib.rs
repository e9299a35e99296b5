//! Simulation of a two-photon-driven, nonreciprocally coupled charger–battery
//! pair of bosonic modes.
//!
//! * [`model`]: parameters and derived rates
//! * [`dynamics`]: moment equations, integration and numeric steady state
//! * [`analytic`]: closed-form trajectories and steady states, with a
//!   diagnostics channel comparing published formulas against the numerics
//! * [`metrics`]: energy, passive energy, ergotropy, power and ratios
//! * [`oracle`]: truncated-Fock Lindblad integrator used for cross-validation

// `!(x > y)` is used on purpose so that NaN fails the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod csv;
pub mod dynamics;
pub mod metrics;
pub mod model;
pub mod ode;
pub mod oracle;

pub use dynamics::{MomentState, Trajectory};
pub use model::{derive_rates, DerivedRates, ModelParams};
