//! Capex/opex accounting for conventional and container-module builds, and the
//! administrative-error downtime model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostShares, ModuleSpec};
use crate::scalar::Scalar;

pub const HOURS_PER_YEAR: i64 = 8_766;

/// Itemised cost of one architecture over a horizon, in USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown<T> {
    pub building: T,
    pub power_equipment: T,
    pub other_facility: T,
    pub systems: T,
    pub containers: T,
    pub generators: T,
    pub energy: T,
    pub field_maintenance: T,
    pub admin_staff: T,
    pub recycle: T,
    pub relocation: T,
    pub total: T,
}

/// Component names in report order. `total` is not a component.
pub const COMPONENTS: [&str; 11] = [
    "building",
    "power_equipment",
    "other_facility",
    "systems",
    "containers",
    "generators",
    "energy",
    "field_maintenance",
    "admin_staff",
    "recycle",
    "relocation",
];

impl<T: Scalar> CostBreakdown<T> {
    pub fn zero() -> Self {
        CostBreakdown {
            building: T::zero(),
            power_equipment: T::zero(),
            other_facility: T::zero(),
            systems: T::zero(),
            containers: T::zero(),
            generators: T::zero(),
            energy: T::zero(),
            field_maintenance: T::zero(),
            admin_staff: T::zero(),
            recycle: T::zero(),
            relocation: T::zero(),
            total: T::zero(),
        }
    }

    pub fn components(&self) -> [(&'static str, T); 11] {
        [
            (COMPONENTS[0], self.building),
            (COMPONENTS[1], self.power_equipment),
            (COMPONENTS[2], self.other_facility),
            (COMPONENTS[3], self.systems),
            (COMPONENTS[4], self.containers),
            (COMPONENTS[5], self.generators),
            (COMPONENTS[6], self.energy),
            (COMPONENTS[7], self.field_maintenance),
            (COMPONENTS[8], self.admin_staff),
            (COMPONENTS[9], self.recycle),
            (COMPONENTS[10], self.relocation),
        ]
    }

    pub fn component_sum(&self) -> T {
        self.components().iter().fold(T::zero(), |acc, &(_, v)| acc + v)
    }

    /// Recomputes `total` from the components.
    pub fn finalize(mut self) -> Self {
        self.total = self.component_sum();
        self
    }

    pub fn capex(&self) -> T {
        self.building
            + self.power_equipment
            + self.other_facility
            + self.systems
            + self.containers
            + self.generators
    }

    pub fn opex(&self) -> T {
        self.energy + self.field_maintenance + self.admin_staff + self.recycle + self.relocation
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        CostBreakdown {
            building: f(self.building, other.building),
            power_equipment: f(self.power_equipment, other.power_equipment),
            other_facility: f(self.other_facility, other.other_facility),
            systems: f(self.systems, other.systems),
            containers: f(self.containers, other.containers),
            generators: f(self.generators, other.generators),
            energy: f(self.energy, other.energy),
            field_maintenance: f(self.field_maintenance, other.field_maintenance),
            admin_staff: f(self.admin_staff, other.admin_staff),
            recycle: f(self.recycle, other.recycle),
            relocation: f(self.relocation, other.relocation),
            total: f(self.total, other.total),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    /// Component-wise `self - other`; components may go negative, so the
    /// result is a delta, not a breakdown.
    pub fn minus(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scaled(&self, k: T) -> Self {
        self.zip(self, |a, _| a * k)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.components() {
            if v < T::zero() {
                return Err(Error::invalid(name, "cost component must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorUnit<T> {
    pub rating_mw: T,
    pub price: T,
}

/// A conventional facility shell: power plant, building and generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct FacilityParams<T> {
    pub power_capacity_mw: T,
    /// Facility cost per watt of critical power.
    pub cost_per_watt: T,
    pub shares: CostShares<T>,
    pub generator: GeneratorUnit<T>,
    pub generator_count: u32,
}

impl<T: Scalar> FacilityParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.power_capacity_mw <= T::zero() {
            return Err(Error::invalid("power_capacity_mw", "must be > 0"));
        }
        if self.cost_per_watt <= T::zero() {
            return Err(Error::invalid("cost_per_watt", "must be > 0"));
        }
        if self.generator.rating_mw < T::zero() || self.generator.price < T::zero() {
            return Err(Error::invalid("generator", "rating and price must be >= 0"));
        }
        self.shares.validate().map_err(|e| e.within("shares"))
    }
}

impl<T: Scalar> Default for FacilityParams<T> {
    /// 15 MW at $10/W ($150M) with ten 2.5 MW generators at $1.5M each.
    fn default() -> Self {
        FacilityParams {
            power_capacity_mw: T::from_count(15),
            cost_per_watt: T::from_count(10),
            shares: CostShares::default(),
            generator: GeneratorUnit {
                rating_mw: T::ratio(5, 2),
                price: T::from_count(1_500_000),
            },
            generator_count: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaintenanceMode {
    FieldService,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaintenancePolicy<T> {
    pub mode: MaintenanceMode,
    /// Fraction of a system's price spent on service per three years.
    pub rate: T,
}

impl<T: Scalar> MaintenancePolicy<T> {
    /// Contracted field service at 25% of system price per 3 years.
    pub fn field_service() -> Self {
        MaintenancePolicy {
            mode: MaintenanceMode::FieldService,
            rate: T::ratio(1, 4),
        }
    }

    pub fn none() -> Self {
        MaintenancePolicy {
            mode: MaintenanceMode::None,
            rate: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerCondition {
    #[default]
    New,
    Remanufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Conventional,
    Modular,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Conventional => "conventional",
            Architecture::Modular => "modular",
        }
    }
}

/// Purchase price of one populated module. Integration overhead applies to
/// the systems only, not the container.
pub fn module_capex<T: Scalar>(
    spec: &ModuleSpec<T>,
    condition: ContainerCondition,
    integration_fraction: T,
) -> T {
    container_price(spec, condition) + systems_price(spec, integration_fraction)
}

pub fn container_price<T: Scalar>(spec: &ModuleSpec<T>, condition: ContainerCondition) -> T {
    match condition {
        ContainerCondition::New => spec.container_price_new,
        ContainerCondition::Remanufactured => spec.container_price_remanufactured,
    }
}

fn systems_price<T: Scalar>(spec: &ModuleSpec<T>, integration_fraction: T) -> T {
    T::from_count(u64::from(spec.system_count))
        * spec.system.unit_price
        * (T::one() + integration_fraction)
}

/// Service spend prorated linearly from the three-year rate.
pub fn maintenance_cost<T: Scalar>(
    policy: &MaintenancePolicy<T>,
    unit_price: T,
    system_count: T,
    years: T,
) -> T {
    match policy.mode {
        MaintenanceMode::None => T::zero(),
        MaintenanceMode::FieldService => {
            system_count * unit_price * policy.rate * years / T::from_count(3)
        }
    }
}

/// Facility shell cost split by `shares`; generators are priced per unit on
/// top. Only the facility fields of the returned breakdown are populated.
pub fn facility_capex<T: Scalar>(params: &FacilityParams<T>) -> CostBreakdown<T> {
    let total = params.power_capacity_mw * T::from_count(1_000_000) * params.cost_per_watt;
    let building = params.shares.building * total;
    let power_equipment = params.shares.power_equipment * total;
    CostBreakdown {
        building,
        power_equipment,
        other_facility: total - building - power_equipment,
        generators: T::from_count(u64::from(params.generator_count)) * params.generator.price,
        ..CostBreakdown::zero()
    }
    .finalize()
}

/// Energy bill for IT load plus cooling overhead.
pub fn energy_opex<T: Scalar>(mean_it_power_kw: T, cooling_overhead: T, price_per_kwh: T, years: T) -> T {
    mean_it_power_kw
        * (T::one() + cooling_overhead)
        * T::from_count(HOURS_PER_YEAR as u64)
        * years
        * price_per_kwh
}

/// Annual downtime once a share of outages caused by administrative error is
/// (partly) eliminated.
pub fn downtime_model<T: Scalar>(base_downtime: T, admin_error_share: T, elimination: T) -> Result<T> {
    for (name, v) in [("admin_error_share", admin_error_share), ("elimination", elimination)] {
        if v < T::zero() || v > T::one() {
            return Err(Error::invalid(name, "must lie in [0, 1]"));
        }
    }
    Ok(base_downtime * (T::one() - admin_error_share * elimination))
}

/// Everything [`tco`] needs for one architecture over one horizon.
///
/// Counts are scalars so the fleet engine can pass replication means (and
/// discount-weighted counts) straight through.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcoInputs<T> {
    /// One entry per site.
    pub facilities: Vec<FacilityParams<T>>,
    pub module: ModuleSpec<T>,
    /// Module-equivalents of systems bought over the horizon.
    pub modules_purchased: T,
    pub condition: ContainerCondition,
    pub integration_fraction: T,
    pub maintenance: MaintenancePolicy<T>,
    /// System-years under service contract.
    pub serviced_system_years: T,
    pub mean_it_power_kw: T,
    pub cooling_overhead: T,
    pub energy_price: T,
    pub admin_staff_per_year: T,
    pub modules_recycled: T,
    pub recycle_cost_per_module: T,
    pub relocation_cost: T,
    pub horizon: T,
}

pub fn tco<T: Scalar>(architecture: Architecture, inputs: &TcoInputs<T>) -> Result<CostBreakdown<T>> {
    match (architecture, inputs.maintenance.mode) {
        (Architecture::Modular, MaintenanceMode::None)
        | (Architecture::Conventional, MaintenanceMode::FieldService) => {}
        (arch, mode) => {
            return Err(Error::invalid(
                "maintenance.mode",
                format!("{mode:?} maintenance is inconsistent with the {} architecture", arch.name()),
            ))
        }
    }
    let facility = inputs
        .facilities
        .iter()
        .fold(CostBreakdown::zero(), |acc, f| acc.plus(&facility_capex(f)));
    let containers = match architecture {
        Architecture::Modular => {
            inputs.modules_purchased * container_price(&inputs.module, inputs.condition)
        }
        Architecture::Conventional => T::zero(),
    };
    let breakdown = CostBreakdown {
        systems: inputs.modules_purchased * systems_price(&inputs.module, inputs.integration_fraction),
        containers,
        energy: energy_opex(
            inputs.mean_it_power_kw,
            inputs.cooling_overhead,
            inputs.energy_price,
            inputs.horizon,
        ),
        field_maintenance: maintenance_cost(
            &inputs.maintenance,
            inputs.module.system.unit_price,
            T::one(),
            inputs.serviced_system_years,
        ),
        admin_staff: inputs.admin_staff_per_year * inputs.horizon,
        recycle: inputs.modules_recycled * inputs.recycle_cost_per_module,
        relocation: inputs.relocation_cost,
        ..facility
    }
    .finalize();
    breakdown.validate()?;
    Ok(breakdown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;
    use crate::scalar::Exact;
    use approx::assert_relative_eq;

    #[test]
    fn module_capex_with_container_prices() {
        let spec: ModuleSpec<f64> = Preset::Baseline20.spec();
        assert_eq!(module_capex(&spec, ContainerCondition::New, 0.0), 1_501_950.0);
        assert_eq!(module_capex(&spec, ContainerCondition::Remanufactured, 0.0), 1_501_500.0);
        let empty = ModuleSpec { system_count: 0, ..spec };
        assert_eq!(module_capex(&empty, ContainerCondition::New, 0.0), 1_950.0);
        // Integration overhead hits the systems only.
        let exact: ModuleSpec<Exact> = Preset::Baseline20.spec();
        assert_eq!(
            module_capex(&exact, ContainerCondition::New, Exact::new(1, 10)),
            Exact::from_integer(1_950 + 1_650_000)
        );
    }

    #[test]
    fn maintenance_rule() {
        let fs = MaintenancePolicy::<f64>::field_service();
        assert_eq!(maintenance_cost(&fs, 3_000.0, 1.0, 3.0), 750.0);
        assert_eq!(maintenance_cost(&fs, 2_000.0, 1_000.0, 1.5), 250_000.0);
        assert_eq!(maintenance_cost(&MaintenancePolicy::none(), 3_000.0, 1_000.0, 3.0), 0.0);
    }

    #[test]
    fn facility_split() {
        let f = facility_capex(&FacilityParams::<f64>::default());
        assert_relative_eq!(f.building + f.power_equipment + f.other_facility, 150e6, max_relative = 1e-15);
        assert_relative_eq!(f.power_equipment, 60e6, max_relative = 1e-15);
        assert_relative_eq!(f.building, 22.5e6, max_relative = 1e-15);
        assert_eq!(f.generators, 15e6);

        let exact = facility_capex(&FacilityParams::<Exact>::default());
        assert_eq!(exact.power_equipment / exact.building, Exact::new(40, 15));
        assert_eq!(exact.building + exact.power_equipment + exact.other_facility, Exact::from_integer(150_000_000));

        let none = FacilityParams::<f64> { generator_count: 0, ..Default::default() };
        assert_eq!(facility_capex(&none).generators, 0.0);
    }

    #[test]
    fn energy_bills() {
        assert_eq!(energy_opex(0.0, 0.5, 0.07, 1.0), 0.0);
        assert_relative_eq!(energy_opex(100.0, 0.5, 0.07, 1.0), 92_043.0, max_relative = 1e-12);
        assert_relative_eq!(energy_opex(100.0, 0.35, 0.07, 1.0), 82_838.7, max_relative = 1e-12);
        let e = |oh: i64| energy_opex(Exact::from_integer(100), Exact::new(oh, 100), Exact::new(7, 100), Exact::from_integer(1));
        assert_eq!(e(35) / e(50), Exact::new(9, 10));
    }

    #[test]
    fn downtime() {
        assert_eq!(downtime_model(10.0, 0.5, 1.0).unwrap(), 5.0);
        assert_eq!(downtime_model(10.0, 0.3, 0.0).unwrap(), 10.0);
        assert_relative_eq!(downtime_model(87.66, 0.2, 1.0).unwrap(), 70.128, max_relative = 1e-12);
        assert!(downtime_model(10.0, 1.5, 1.0).is_err());
    }

    fn inputs(arch: Architecture) -> TcoInputs<f64> {
        TcoInputs {
            facilities: vec![FacilityParams::default()],
            module: Preset::Baseline20.spec(),
            modules_purchased: 10.0,
            condition: ContainerCondition::New,
            integration_fraction: 0.0,
            maintenance: match arch {
                Architecture::Conventional => MaintenancePolicy::field_service(),
                Architecture::Modular => MaintenancePolicy::none(),
            },
            serviced_system_years: 30_000.0,
            mean_it_power_kw: 2_500.0,
            cooling_overhead: 0.5,
            energy_price: 0.07,
            admin_staff_per_year: 0.0,
            modules_recycled: 0.0,
            recycle_cost_per_module: 5_000.0,
            relocation_cost: 0.0,
            horizon: 3.0,
        }
    }

    #[test]
    fn tco_structural_difference() {
        let conv = tco(Architecture::Conventional, &inputs(Architecture::Conventional)).unwrap();
        let modu = tco(Architecture::Modular, &inputs(Architecture::Modular)).unwrap();
        assert_eq!(modu.field_maintenance, 0.0);
        assert!(modu.containers > 0.0);
        assert_eq!(conv.containers, 0.0);
        // 30,000 system-years at 25%/3yr of $1,500
        assert_eq!(conv.field_maintenance, 3_750_000.0);
        let delta = modu.minus(&conv);
        for (name, v) in delta.components() {
            match name {
                "containers" => assert_eq!(v, 19_500.0),
                "field_maintenance" => assert_eq!(v, -3_750_000.0),
                _ => assert_eq!(v, 0.0, "{name}"),
            }
        }
        assert_relative_eq!(conv.power_equipment / conv.building, 40.0 / 15.0, max_relative = 1e-12);
    }

    #[test]
    fn tco_rejects_mismatched_policy() {
        assert!(tco(Architecture::Modular, &inputs(Architecture::Conventional)).is_err());
        assert!(tco(Architecture::Conventional, &inputs(Architecture::Modular)).is_err());
    }

    #[test]
    fn tco_all_zero() {
        let mut z = inputs(Architecture::Modular);
        z.facilities[0].cost_per_watt = 0.0;
        z.facilities[0].generator.price = 0.0;
        z.modules_purchased = 0.0;
        z.mean_it_power_kw = 0.0;
        z.recycle_cost_per_module = 0.0;
        let b = tco(Architecture::Modular, &z).unwrap();
        assert_eq!(b, CostBreakdown::zero());
    }

    #[test]
    fn breakdown_arithmetic() {
        let a = facility_capex(&FacilityParams::<Exact>::default());
        let twice = a.plus(&a);
        assert_eq!(twice, a.scaled(Exact::from_integer(2)));
        assert_eq!(twice.minus(&a), a);
        assert_eq!(a.capex() + a.opex(), a.total);
    }
}
