use serde::{Deserialize, Serialize};

use crate::econ::{ContainerCondition, FacilityParams};
use crate::error::{Error, Result};
use crate::failure::LifetimeLaw;
use crate::model::{ContainerLength, Cooling, ModuleSpec, Preset, SystemSpec};

/// Ground stacking limit for containers; higher stacks need ship-style lashing.
pub const MAX_GROUND_STACK: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Diesel generators ride through utility outages.
    #[default]
    OnsiteGenerators,
    /// No generators; other sites absorb the load of a failed one.
    GeoFailover,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::OnsiteGenerators => "onsite_generators",
            Strategy::GeoFailover => "geo_failover",
        }
    }
}

/// A unit of simulation: fleet layout, demand, redundancy strategy and prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Years.
    pub horizon: f64,
    /// Seeds above `i64::MAX` are written as decimal strings, since TOML
    /// integers are signed.
    #[serde(default, with = "seed_format")]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub strategy: Strategy,
    /// Extra modules per site, as a fraction of planned modules, bought only
    /// under geo-failover.
    #[serde(default)]
    pub overprovision_fraction: f64,
    pub module: ModuleConfig,
    #[serde(default)]
    pub failure_law: LifetimeLaw,
    pub demand: DemandCurve,
    pub sites: Vec<SiteSpec>,
    #[serde(default)]
    pub econ: EconInputs,
    #[serde(default)]
    pub density: DensitySettings,
    #[serde(default)]
    pub downtime: DowntimeSettings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relocations: Vec<RelocationOrder>,
}

fn default_replications() -> u32 {
    1
}

mod seed_format {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(v),
            Raw::Text(t) => t
                .parse()
                .map_err(|_| de::Error::custom(format!("seed must be an unsigned 64-bit integer, got {t:?}"))),
        }
    }
}

impl Scenario {
    pub fn module_spec(&self) -> &ModuleSpec<f64> {
        &self.module.spec
    }

    /// Modules bought per site on top of the plan. Zero unless geo-failover.
    pub fn extra_modules(&self, site: &SiteSpec) -> u32 {
        match self.strategy {
            Strategy::OnsiteGenerators => 0,
            Strategy::GeoFailover => {
                let x = self.overprovision_fraction * f64::from(site.modules);
                // Tolerate representation error in products like 0.3 * 10.
                (x - 1e-9).ceil().max(0.0) as u32
            }
        }
    }

    pub fn site_slots(&self, site: &SiteSpec) -> u32 {
        site.module_slots
            .unwrap_or(site.modules + self.extra_modules(site))
    }

    pub fn site_index(&self, name: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.name == name)
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Scenario {
        Scenario {
            strategy,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be a positive number of years"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be >= 1"));
        }
        if !(self.overprovision_fraction >= 0.0 && self.overprovision_fraction.is_finite()) {
            return Err(Error::invalid("overprovision_fraction", "must be >= 0"));
        }
        self.module.spec.validate().map_err(|e| e.within("module"))?;
        self.failure_law.validate()?;
        self.demand.validate(self.horizon).map_err(|e| e.within("demand"))?;
        if self.sites.is_empty() {
            return Err(Error::invalid("sites", "at least one site is required"));
        }
        if self.strategy == Strategy::GeoFailover && self.sites.len() < 2 {
            return Err(Error::invalid(
                "strategy",
                "geo_failover needs at least two sites to fail over to",
            ));
        }
        for (i, site) in self.sites.iter().enumerate() {
            let path = format!("sites[{i}]");
            site.validate().map_err(|e| e.within(&path))?;
            if self.sites[..i].iter().any(|s| s.name == site.name) {
                return Err(Error::invalid(format!("{path}.name"), "site names must be unique"));
            }
            let needed = site.modules + self.extra_modules(site);
            if self.site_slots(site) < needed {
                return Err(Error::invalid(
                    format!("{path}.module_slots"),
                    format!("{needed} modules (including overprovision) do not fit"),
                ));
            }
        }
        self.econ.validate().map_err(|e| e.within("econ"))?;
        self.density.validate().map_err(|e| e.within("density"))?;
        self.downtime.validate().map_err(|e| e.within("downtime"))?;
        for (i, r) in self.relocations.iter().enumerate() {
            let path = format!("relocations[{i}]");
            for (field, name) in [("from", &r.from), ("to", &r.to)] {
                if self.site_index(name).is_none() {
                    return Err(Error::invalid(format!("{path}.{field}"), format!("unknown site '{name}'")));
                }
            }
            if r.from == r.to {
                return Err(Error::invalid(format!("{path}.to"), "must differ from 'from'"));
            }
            if !(r.at >= 0.0 && r.at < self.horizon) {
                return Err(Error::invalid(format!("{path}.at"), "must lie within [0, horizon)"));
            }
            if !(r.cost_per_module >= 0.0) || !(r.downtime_hours >= 0.0) {
                return Err(Error::invalid(path, "cost and downtime must be >= 0"));
            }
        }
        Ok(())
    }
}

/// A module design given either by preset name, by explicit fields, or by a
/// preset with individual fields overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModuleSection", into = "ModuleSection")]
pub struct ModuleConfig {
    pub preset: Option<Preset>,
    pub spec: ModuleSpec<f64>,
}

impl ModuleConfig {
    pub fn preset(preset: Preset) -> Self {
        ModuleConfig {
            preset: Some(preset),
            spec: preset.spec(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    container_length: Option<ContainerLength>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    container_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    system_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    container_price_new: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    container_price_remanufactured: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cooling: Option<Cooling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    service_life: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cooling_overhead: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    system: Option<SystemSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_draw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annual_failure_prob: Option<f64>,
}

impl TryFrom<ModuleSection> for ModuleConfig {
    type Error = String;

    fn try_from(m: ModuleSection) -> std::result::Result<Self, String> {
        let base: Option<ModuleSpec<f64>> = m.preset.map(|p| p.spec());
        fn pick<V>(v: Option<V>, base: Option<V>, name: &str) -> std::result::Result<V, String> {
            v.or(base)
                .ok_or_else(|| format!("module.{name} is required when no preset is given"))
        }
        let sys = m.system.unwrap_or_default();
        let spec = ModuleSpec {
            container_length: pick(m.container_length, base.map(|b| b.container_length), "container_length")?,
            container_width: pick(m.container_width, base.map(|b| b.container_width), "container_width")?,
            system_count: pick(m.system_count, base.map(|b| b.system_count), "system_count")?,
            system: SystemSpec {
                unit_price: pick(sys.unit_price, base.map(|b| b.system.unit_price), "system.unit_price")?,
                power_draw: pick(sys.power_draw, base.map(|b| b.system.power_draw), "system.power_draw")?,
                annual_failure_prob: pick(
                    sys.annual_failure_prob,
                    base.map(|b| b.system.annual_failure_prob),
                    "system.annual_failure_prob",
                )?,
            },
            container_price_new: pick(m.container_price_new, base.map(|b| b.container_price_new), "container_price_new")?,
            container_price_remanufactured: pick(
                m.container_price_remanufactured,
                base.map(|b| b.container_price_remanufactured),
                "container_price_remanufactured",
            )?,
            cooling: pick(m.cooling, base.map(|b| b.cooling), "cooling")?,
            service_life: pick(m.service_life, base.map(|b| b.service_life), "service_life")?,
            cooling_overhead: pick(m.cooling_overhead, base.map(|b| b.cooling_overhead), "cooling_overhead")?,
        };
        Ok(ModuleConfig {
            preset: m.preset,
            spec,
        })
    }
}

impl From<ModuleConfig> for ModuleSection {
    fn from(c: ModuleConfig) -> Self {
        let s = c.spec;
        ModuleSection {
            preset: c.preset,
            container_length: Some(s.container_length),
            container_width: Some(s.container_width),
            system_count: Some(s.system_count),
            container_price_new: Some(s.container_price_new),
            container_price_remanufactured: Some(s.container_price_remanufactured),
            cooling: Some(s.cooling),
            service_life: Some(s.service_life),
            cooling_overhead: Some(s.cooling_overhead),
            system: Some(SystemSection {
                unit_price: Some(s.system.unit_price),
                power_draw: Some(s.system.power_draw),
                annual_failure_prob: Some(s.system.annual_failure_prob),
            }),
        }
    }
}

/// Required healthy systems over time, piecewise constant on `[0, until)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandCurve {
    /// End of the period the curve covers, in years.
    pub until: f64,
    pub steps: Vec<DemandStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandStep {
    pub at: f64,
    pub systems: f64,
}

impl DemandCurve {
    pub fn constant(systems: f64, until: f64) -> Self {
        DemandCurve {
            until,
            steps: vec![DemandStep { at: 0.0, systems }],
        }
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        match self.steps.first() {
            None => return Err(Error::invalid("steps", "at least one step is required")),
            Some(s) if s.at != 0.0 => return Err(Error::invalid("steps[0].at", "first step must start at 0")),
            _ => {}
        }
        for (i, s) in self.steps.iter().enumerate() {
            if !(s.systems >= 0.0 && s.systems.is_finite()) {
                return Err(Error::invalid(format!("steps[{i}].systems"), "must be >= 0"));
            }
            if i > 0 && !(s.at > self.steps[i - 1].at) {
                return Err(Error::invalid(format!("steps[{i}].at"), "step times must be strictly increasing"));
            }
        }
        if !(self.until >= horizon) {
            return Err(Error::invalid(
                "until",
                format!("demand covers {} years but the scenario horizon is {horizon}", self.until),
            ));
        }
        Ok(())
    }

    pub fn systems_at(&self, t: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.at <= t);
        if idx == 0 {
            0.0
        } else {
            self.steps[idx - 1].systems
        }
    }

    /// First step time strictly after `t`.
    pub fn next_change_after(&self, t: f64) -> Option<f64> {
        let idx = self.steps.partition_point(|s| s.at <= t);
        self.steps.get(idx).map(|s| s.at)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSpec {
    pub name: String,
    /// Modules planned for this site.
    pub modules: u32,
    /// Positions available; defaults to planned plus overprovisioned modules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub module_slots: Option<u32>,
    #[serde(default = "default_stack_height")]
    pub stack_height: u32,
    /// Years from order to a module serving load.
    #[serde(default = "default_lead_time")]
    pub deployment_lead_time: f64,
    /// Utility outages per year (Poisson).
    #[serde(default)]
    pub utility_outage_rate: f64,
    #[serde(default = "default_outage_hours")]
    pub outage_duration_hours: f64,
    /// Square feet for the central power, network, cooling and security building.
    #[serde(default = "default_building_area")]
    pub central_building_area: f64,
    #[serde(default)]
    pub circulation_fraction: f64,
    #[serde(default)]
    pub facility: FacilityParams<f64>,
}

fn default_stack_height() -> u32 {
    3
}
fn default_lead_time() -> f64 {
    0.25
}
fn default_outage_hours() -> f64 {
    24.0
}
fn default_building_area() -> f64 {
    5_000.0
}

impl SiteSpec {
    pub fn new(name: impl Into<String>, modules: u32) -> Self {
        SiteSpec {
            name: name.into(),
            modules,
            module_slots: None,
            stack_height: default_stack_height(),
            deployment_lead_time: default_lead_time(),
            utility_outage_rate: 0.0,
            outage_duration_hours: default_outage_hours(),
            central_building_area: default_building_area(),
            circulation_fraction: 0.0,
            facility: FacilityParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("name", "must not be empty"));
        }
        if self.stack_height == 0 || self.stack_height > MAX_GROUND_STACK {
            return Err(Error::invalid(
                "stack_height",
                format!(
                    "{} is outside 1..={MAX_GROUND_STACK}; containers stack 3 to 5 high on the ground \
                     (7 high only with ship lashing)",
                    self.stack_height
                ),
            ));
        }
        if let Some(slots) = self.module_slots {
            if slots < self.modules {
                return Err(Error::invalid("module_slots", "must be >= modules"));
            }
        }
        for (name, v) in [
            ("deployment_lead_time", self.deployment_lead_time),
            ("utility_outage_rate", self.utility_outage_rate),
            ("outage_duration_hours", self.outage_duration_hours),
            ("central_building_area", self.central_building_area),
            ("circulation_fraction", self.circulation_fraction),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be a finite number >= 0"));
            }
        }
        self.facility.validate().map_err(|e| e.within("facility"))
    }
}

/// Price and policy knobs. All optional in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconInputs {
    /// USD per kWh.
    pub energy_price: f64,
    pub integration_fraction: f64,
    pub container_condition: ContainerCondition,
    /// Conventional field-service spend per 3 years, as a fraction of system price.
    pub maintenance_rate: f64,
    /// Cooling power per unit IT power in a conventional air-cooled room.
    pub conventional_cooling_overhead: f64,
    pub admin_staff_per_year_conventional: f64,
    pub admin_staff_per_year_modular: f64,
    /// Return shipping and handling of one end-of-life module.
    pub recycle_cost_per_module: f64,
    /// Annual rate; 0 gives undiscounted totals.
    pub discount_rate: f64,
}

impl Default for EconInputs {
    fn default() -> Self {
        EconInputs {
            energy_price: 0.07,
            integration_fraction: 0.0,
            container_condition: ContainerCondition::New,
            maintenance_rate: 0.25,
            conventional_cooling_overhead: 0.5,
            admin_staff_per_year_conventional: 0.0,
            admin_staff_per_year_modular: 0.0,
            recycle_cost_per_module: 5_000.0,
            discount_rate: 0.0,
        }
    }
}

impl EconInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("energy_price", self.energy_price),
            ("integration_fraction", self.integration_fraction),
            ("maintenance_rate", self.maintenance_rate),
            ("conventional_cooling_overhead", self.conventional_cooling_overhead),
            ("admin_staff_per_year_conventional", self.admin_staff_per_year_conventional),
            ("admin_staff_per_year_modular", self.admin_staff_per_year_modular),
            ("recycle_cost_per_module", self.recycle_cost_per_module),
            ("discount_rate", self.discount_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be a finite number >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySettings {
    /// Density the facility's power plant is built for, W/sqft.
    pub design_w_per_sqft: f64,
    /// Density the installed equipment reaches; defaults to the module's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realized_w_per_sqft: Option<f64>,
    /// CRAC floor area per unit of system floor in an air-cooled room.
    pub crac_space_ratio: f64,
    pub walkway_ratio: f64,
}

impl Default for DensitySettings {
    fn default() -> Self {
        DensitySettings {
            design_w_per_sqft: 100.0,
            realized_w_per_sqft: None,
            crac_space_ratio: 1.0,
            walkway_ratio: 0.0,
        }
    }
}

impl DensitySettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.design_w_per_sqft > 0.0 && self.design_w_per_sqft.is_finite()) {
            return Err(Error::invalid("design_w_per_sqft", "must be > 0"));
        }
        if let Some(r) = self.realized_w_per_sqft {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::invalid("realized_w_per_sqft", "must be >= 0"));
            }
        }
        if !(self.crac_space_ratio >= 0.0) || !(self.walkway_ratio >= 0.0) {
            return Err(Error::invalid("crac_space_ratio", "space ratios must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DowntimeSettings {
    /// Conventional downtime, hours per year.
    pub base_hours_per_year: f64,
    /// Share of outages caused by administrative error.
    pub admin_error_share: f64,
    /// Share of those the sealed-module model removes.
    pub elimination: f64,
}

impl Default for DowntimeSettings {
    fn default() -> Self {
        DowntimeSettings {
            base_hours_per_year: 87.66,
            admin_error_share: 0.2,
            elimination: 1.0,
        }
    }
}

impl DowntimeSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_hours_per_year >= 0.0 && self.base_hours_per_year.is_finite()) {
            return Err(Error::invalid("base_hours_per_year", "must be >= 0"));
        }
        for (name, v) in [("admin_error_share", self.admin_error_share), ("elimination", self.elimination)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Trucks `modules` modules from one site to another at time `at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelocationOrder {
    pub at: f64,
    pub from: String,
    pub to: String,
    pub modules: u32,
    pub cost_per_module: f64,
    pub downtime_hours: f64,
}
