//! Domain types for servers and container modules, the named module presets,
//! and the footprint/density arithmetic built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One commodity server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec<T> {
    /// USD per system.
    pub unit_price: T,
    /// Watts drawn at the wall.
    pub power_draw: T,
    /// Probability that a system permanently fails within one year.
    pub annual_failure_prob: T,
}

impl<T: Scalar> SystemSpec<T> {
    pub fn new(unit_price: T, power_draw: T, annual_failure_prob: T) -> Result<Self> {
        let spec = SystemSpec {
            unit_price,
            power_draw,
            annual_failure_prob,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.unit_price < T::zero() {
            return Err(Error::invalid("unit_price", "must be >= 0"));
        }
        if self.power_draw <= T::zero() {
            return Err(Error::invalid("power_draw", "must be > 0"));
        }
        if self.annual_failure_prob < T::zero() || self.annual_failure_prob >= T::one() {
            return Err(Error::invalid("annual_failure_prob", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// ISO container length. Only the two standard lengths are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum ContainerLength {
    Twenty,
    Forty,
}

impl ContainerLength {
    pub fn feet(self) -> u32 {
        match self {
            ContainerLength::Twenty => 20,
            ContainerLength::Forty => 40,
        }
    }
}

impl TryFrom<u32> for ContainerLength {
    type Error = String;

    fn try_from(feet: u32) -> std::result::Result<Self, String> {
        match feet {
            20 => Ok(ContainerLength::Twenty),
            40 => Ok(ContainerLength::Forty),
            other => Err(format!("container_length must be 20 or 40 feet, got {other}")),
        }
    }
}

impl From<ContainerLength> for u32 {
    fn from(len: ContainerLength) -> u32 {
        len.feet()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cooling {
    Air,
    DirectLiquid,
}

/// Static design of one container macro-module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec<T> {
    pub container_length: ContainerLength,
    /// Feet; 8 for a standard container.
    pub container_width: T,
    pub system_count: u32,
    pub system: SystemSpec<T>,
    pub container_price_new: T,
    pub container_price_remanufactured: T,
    pub cooling: Cooling,
    /// Years between deployment and return for recycling.
    pub service_life: T,
    /// Cooling power as a fraction of IT power.
    pub cooling_overhead: T,
}

impl<T: Scalar> ModuleSpec<T> {
    pub fn validate(&self) -> Result<()> {
        self.system.validate().map_err(|e| e.within("system"))?;
        if self.system_count == 0 {
            return Err(Error::invalid("system_count", "must be >= 1"));
        }
        if self.container_width <= T::zero() {
            return Err(Error::invalid("container_width", "must be > 0"));
        }
        if self.service_life <= T::zero() {
            return Err(Error::invalid("service_life", "must be > 0"));
        }
        if self.container_price_new < T::zero() {
            return Err(Error::invalid("container_price_new", "must be >= 0"));
        }
        if self.container_price_remanufactured < T::zero() {
            return Err(Error::invalid("container_price_remanufactured", "must be >= 0"));
        }
        if self.cooling_overhead < T::zero() {
            return Err(Error::invalid("cooling_overhead", "must be >= 0"));
        }
        Ok(())
    }

    pub fn with_power_draw(mut self, watts: T) -> Self {
        self.system.power_draw = watts;
        self
    }

    pub fn with_width(mut self, feet: T) -> Self {
        self.container_width = feet;
        self
    }
}

/// State of a module in service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleState<T> {
    pub age: T,
    pub failed_count: u32,
}

impl<T: Scalar> ModuleState<T> {
    pub fn new(spec: &ModuleSpec<T>, age: T, failed_count: u32) -> Result<Self> {
        if age < T::zero() {
            return Err(Error::invalid("age", "must be >= 0"));
        }
        if failed_count > spec.system_count {
            return Err(Error::invalid(
                "failed_count",
                format!("{failed_count} exceeds system_count {}", spec.system_count),
            ));
        }
        Ok(ModuleState { age, failed_count })
    }

    pub fn capacity_fraction(&self, spec: &ModuleSpec<T>) -> Result<T> {
        capacity_fraction(spec.system_count, self.failed_count)
    }
}

/// Split of facility capex across power equipment, building shell and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostShares<T> {
    pub power_equipment: T,
    pub building: T,
    pub other: T,
}

impl<T: Scalar> CostShares<T> {
    pub fn new(power_equipment: T, building: T, other: T) -> Result<Self> {
        let shares = CostShares {
            power_equipment,
            building,
            other,
        };
        shares.validate()?;
        Ok(shares)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("power_equipment", self.power_equipment),
            ("building", self.building),
            ("other", self.other),
        ] {
            if v < T::zero() || v > T::one() {
                return Err(Error::invalid(name, "share must lie in [0, 1]"));
            }
        }
        let sum = self.power_equipment + self.building + self.other;
        if sum.abs_diff(T::one()) > T::approx_from_f64(1e-9) {
            return Err(Error::invalid(
                "shares",
                format!("must sum to 1, got {:?}", sum),
            ));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for CostShares<T> {
    /// Power distribution and equipment at 40%, building shell at 15%.
    fn default() -> Self {
        CostShares {
            power_equipment: T::ratio(40, 100),
            building: T::ratio(15, 100),
            other: T::ratio(45, 100),
        }
    }
}

/// Named module designs addressable from scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 20 ft container holding 1,000 commodity systems.
    Baseline20,
    /// Rackable-style 40 ft high-cube container with 1,152 systems, rated
    /// at 750 W/sqft. The 9'6" height does not enter any floor-area math.
    Rackable40,
    /// Sun-style 20 ft container with 242 systems.
    Sun20,
}

/// Per-system draw that puts 1,152 systems on 320 sqft at ~750 W/sqft.
pub const RACKABLE_POWER_DRAW_TENTHS: i64 = 2083;
pub const DEFAULT_POWER_DRAW: i64 = 250;
pub const DEFAULT_UNIT_PRICE: i64 = 1_500;
pub const CONTAINER_PRICE_NEW: i64 = 1_950;
pub const CONTAINER_PRICE_REMANUFACTURED: i64 = 1_500;
pub const STANDARD_WIDTH_FEET: i64 = 8;

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Baseline20, Preset::Rackable40, Preset::Sun20];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Baseline20 => "baseline20",
            Preset::Rackable40 => "rackable40",
            Preset::Sun20 => "sun20",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn spec<T: Scalar>(self) -> ModuleSpec<T> {
        let (length, count, draw) = match self {
            Preset::Baseline20 => (ContainerLength::Twenty, 1_000, T::from_count(DEFAULT_POWER_DRAW as u64)),
            Preset::Rackable40 => (ContainerLength::Forty, 1_152, T::ratio(RACKABLE_POWER_DRAW_TENTHS, 10)),
            Preset::Sun20 => (ContainerLength::Twenty, 242, T::from_count(DEFAULT_POWER_DRAW as u64)),
        };
        ModuleSpec {
            container_length: length,
            container_width: T::from_count(STANDARD_WIDTH_FEET as u64),
            system_count: count,
            system: SystemSpec {
                unit_price: T::from_count(DEFAULT_UNIT_PRICE as u64),
                power_draw: draw,
                annual_failure_prob: T::ratio(5, 100),
            },
            container_price_new: T::from_count(CONTAINER_PRICE_NEW as u64),
            container_price_remanufactured: T::from_count(CONTAINER_PRICE_REMANUFACTURED as u64),
            cooling: Cooling::DirectLiquid,
            service_life: T::from_count(3),
            // 30% below a 0.5 air-cooled baseline.
            cooling_overhead: T::ratio(35, 100),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Surviving fraction of a module's systems: `(n - failed) / n`.
pub fn capacity_fraction<T: Scalar>(system_count: u32, failed_count: u32) -> Result<T> {
    if system_count == 0 {
        return Err(Error::domain("system_count must be >= 1"));
    }
    if failed_count > system_count {
        return Err(Error::domain(format!(
            "failed_count {failed_count} exceeds system_count {system_count}"
        )));
    }
    let alive = T::from_count(u64::from(system_count - failed_count));
    Ok(alive / T::from_count(u64::from(system_count)))
}

/// Square feet of ground covered by one container.
pub fn module_footprint<T: Scalar>(spec: &ModuleSpec<T>) -> T {
    T::from_count(u64::from(spec.container_length.feet())) * spec.container_width
}

/// IT watts per square foot of container footprint; cooling is excluded.
pub fn power_density<T: Scalar>(spec: &ModuleSpec<T>) -> T {
    T::from_count(u64::from(spec.system_count)) * spec.system.power_draw / module_footprint(spec)
}

pub fn areal_system_density<T: Scalar>(spec: &ModuleSpec<T>) -> T {
    T::from_count(u64::from(spec.system_count)) / module_footprint(spec)
}
