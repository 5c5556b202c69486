//! Simulation and cost model for data centers built from shipping-container
//! macro-modules.
//!
//! The arithmetic modules ([`model`], [`econ`], [`power_floor`]) are generic
//! over [`Scalar`], so the same code runs on `f64` for simulation and on
//! [`Exact`] rationals when an identity has to hold exactly. The aliases
//! below fix the scalar for everyday use.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod econ;
pub mod error;
pub mod failure;
pub mod fleet;
pub mod model;
pub mod power_floor;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Exact, Real, Scalar};

pub type SystemSpec = model::SystemSpec<f64>;
pub type ModuleSpec = model::ModuleSpec<f64>;
pub type ModuleState = model::ModuleState<f64>;
pub type CostShares = model::CostShares<f64>;
pub type CostBreakdown = econ::CostBreakdown<f64>;
pub type FacilityParams = econ::FacilityParams<f64>;
pub type MaintenancePolicy = econ::MaintenancePolicy<f64>;
pub type TcoInputs = econ::TcoInputs<f64>;
pub type ProvisioningOutcome = power_floor::ProvisioningOutcome<f64>;

pub type ModuleSpecF32 = model::ModuleSpec<f32>;
pub type CostBreakdownF32 = econ::CostBreakdown<f32>;

pub type ExactModuleSpec = model::ModuleSpec<Exact>;
pub type ExactCostShares = model::CostShares<Exact>;
pub type ExactCostBreakdown = econ::CostBreakdown<Exact>;
pub type ExactFacilityParams = econ::FacilityParams<Exact>;
pub type ExactProvisioningOutcome = power_floor::ProvisioningOutcome<Exact>;

pub use model::{Cooling, ContainerLength, Preset};
