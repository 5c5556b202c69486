//! Power-density provisioning: what a mismatch between designed and realised
//! density costs, and how much floor an air-cooled room actually gives to IT.

use serde::{Deserialize, Serialize};

use crate::econ::CostBreakdown;
use crate::error::{Error, Result};
use crate::model::Cooling;
use crate::scalar::Scalar;

/// Reference densities in W/sqft, plus the documented air-cooling study
/// figures used to annotate reports. No airflow is computed from the latter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityPreset;

impl DensityPreset {
    pub const TYPICAL: u32 = 100;
    pub const HIGH_RANGE: (u32, u32) = (350, 600);
    pub const RACKABLE: u32 = 750;

    pub const STUDY_RACK_KW: u32 = 35;
    pub const STUDY_AIRFLOW_CFM: u32 = 222_000;
    pub const STUDY_DUCT_FEET: u32 = 6;

    pub fn sweep_points() -> [u32; 4] {
        [Self::TYPICAL, Self::HIGH_RANGE.0, Self::HIGH_RANGE.1, Self::RACKABLE]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProvisioningOutcome<T> {
    pub stranded_power_fraction: T,
    pub unusable_floor_fraction: T,
    pub stranded_cost: T,
    pub wasted_floor_cost: T,
}

/// Linear mismatch: under-filled power is stranded, over-dense equipment
/// leaves floor it cannot use. At most one fraction is non-zero.
pub fn provisioning_mismatch<T: Scalar>(design_density: T, realized_density: T) -> Result<ProvisioningOutcome<T>> {
    if !(design_density > T::zero()) {
        return Err(Error::domain("design density must be > 0"));
    }
    if !(realized_density >= T::zero()) {
        return Err(Error::domain("realized density must be >= 0"));
    }
    let (stranded, floor) = if realized_density <= design_density {
        (T::one() - realized_density / design_density, T::zero())
    } else {
        (T::zero(), T::one() - design_density / realized_density)
    };
    Ok(ProvisioningOutcome {
        stranded_power_fraction: stranded,
        unusable_floor_fraction: floor,
        stranded_cost: T::zero(),
        wasted_floor_cost: T::zero(),
    })
}

/// Prices the fractions against a facility's power-equipment and building lines.
pub fn mismatch_cost<T: Scalar>(outcome: &ProvisioningOutcome<T>, facility: &CostBreakdown<T>) -> ProvisioningOutcome<T> {
    ProvisioningOutcome {
        stranded_cost: outcome.stranded_power_fraction * facility.power_equipment,
        wasted_floor_cost: outcome.unusable_floor_fraction * facility.building,
        ..*outcome
    }
}

/// Share of floor left for systems once CRAC units (and optionally walkways)
/// take their area. Both ratios are per unit of system floor.
pub fn air_cooled_floor_utilization<T: Scalar>(crac_space_ratio: T) -> Result<T> {
    floor_utilization(Cooling::Air, crac_space_ratio, T::zero())
}

pub fn floor_utilization<T: Scalar>(cooling: Cooling, crac_space_ratio: T, walkway_ratio: T) -> Result<T> {
    if crac_space_ratio < T::zero() || walkway_ratio < T::zero() {
        return Err(Error::domain("space ratios must be >= 0"));
    }
    Ok(match cooling {
        Cooling::DirectLiquid => T::one(),
        Cooling::Air => T::one() / (T::one() + crac_space_ratio + walkway_ratio),
    })
}
