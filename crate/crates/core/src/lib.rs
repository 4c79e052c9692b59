//! Barrier-option pricing with a high-order implicit finite-difference
//! scheme on a probability-truncated domain.
//!
//! The pipeline maps the Black-Scholes problem onto the heat equation
//! ([`transform`]), truncates the domain where the barrier stops mattering
//! ([`boundary`]), and time-steps a fourth-order-in-space theta scheme with
//! exact boundary data ([`pde_engine`]). Discretely monitored barriers are in
//! [`discrete_monitor`]; the schemes used for comparison live in
//! [`scheme_lab`]; closed-form oracles are in [`analytic`].

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected, and the
// closed forms take the market parameters one by one.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::needless_range_loop
)]

pub mod analytic;
pub mod boundary;
pub mod contracts;
pub mod discrete_monitor;
mod error;
pub mod pde_engine;
pub mod scheme_lab;
pub mod transform;

pub use contracts::{
    validate, BarrierContract, BarrierGeometry, ContractConfig, MarketParams, MonitoringFrequency, MonitoringPolicy,
};
pub use error::{PricingError, Result};
