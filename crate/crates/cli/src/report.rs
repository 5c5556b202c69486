//! The report document. Every number a table shows is a field here; the
//! formatters only copy.

use macromodule::econ::{downtime_model, facility_capex, CostBreakdown};
use macromodule::failure::RNG_IDENTITY;
use macromodule::fleet::{
    ground_positions, yard_area, Estimate, Metrics, RedundancyComparison, ReplicationMetrics, Scenario,
};
use macromodule::model::{areal_system_density, power_density};
use macromodule::power_floor::{floor_utilization, mismatch_cost, provisioning_mismatch, ProvisioningOutcome};
use macromodule::Cooling;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const TOOL: &str = "mmsim";

/// Caveats printed with every report.
pub const NOTES: [&str; 3] = [
    "facility cost per watt defaults to $10/W, inferred by pairing a 15 MW facility with a $150M build cost",
    "geo_failover migrates load instantly with no added latency; network limits are not modeled",
    "module delivery lead time (default 0.25 yr) is an assumed figure; conventional facilities take over 24 months to build",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: Metadata,
    pub metrics: Metrics,
    pub facility: Vec<SiteFacility>,
    pub yard: Vec<YardLine>,
    pub density: DensityLine,
    pub downtime: DowntimeLine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    /// One row per replication (per sweep value, when sweeping).
    pub series: Vec<SeriesRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub replications: u32,
    pub rng: String,
    pub notes: Vec<String>,
    pub defaults_applied: Vec<String>,
    /// The resolved scenario, with command-line overrides folded in. Running
    /// it again reproduces this report.
    pub scenario: Scenario,
}

impl Metadata {
    pub fn new(command: &str, scenario: &Scenario, defaults_applied: &[String]) -> Self {
        Metadata {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: scenario.seed,
            replications: scenario.replications,
            rng: RNG_IDENTITY.into(),
            notes: NOTES.iter().map(|s| s.to_string()).collect(),
            defaults_applied: defaults_applied.to_vec(),
            scenario: scenario.clone(),
        }
    }
}

/// The conventional facility shell a site would otherwise need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteFacility {
    pub site: String,
    pub breakdown: CostBreakdown<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YardLine {
    pub site: String,
    pub module_slots: u32,
    pub stack_height: u32,
    pub ground_positions: u64,
    pub area_sqft: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityLine {
    /// Module IT watts per square foot of container footprint.
    pub module_w_per_sqft: f64,
    pub module_systems_per_sqft: f64,
    pub design_w_per_sqft: f64,
    pub realized_w_per_sqft: f64,
    /// Fractions and their cost against the summed facility lines.
    pub mismatch: ProvisioningOutcome<f64>,
    pub air_cooled_floor_utilization: f64,
    pub module_floor_utilization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DowntimeLine {
    pub admin_error_share: f64,
    pub elimination: f64,
    pub conventional_hours_per_year: f64,
    pub modular_hours_per_year: f64,
    /// Fraction of conventional downtime removed, `share * elimination`.
    pub reduction_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Modular minus conventional, per component.
    pub delta: CostBreakdown<f64>,
    pub conventional_capex: f64,
    pub conventional_opex: f64,
    pub modular_capex: f64,
    pub modular_opex: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redundancy: Option<RedundancyLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancySide {
    pub modular_tco: CostBreakdown<f64>,
    pub shortfall_hours: Estimate,
    pub availability: Estimate,
    pub outages: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancyLine {
    pub onsite_generators: RedundancySide,
    pub geo_failover: RedundancySide,
    /// Geo-failover minus on-site generators.
    pub cost_delta: CostBreakdown<f64>,
    pub shortfall_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Metrics,
    pub density: DensityLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub replication: u32,
    pub delivered_system_hours: f64,
    pub demanded_system_hours: f64,
    pub shortfall_hours: f64,
    pub served_system_hours: f64,
    pub availability: f64,
    pub modules_deployed: u32,
    pub modules_recycled: u32,
    pub system_failures: u32,
    pub outages: u32,
}

impl SeriesRow {
    pub fn new(value: Option<f64>, replication: u32, m: &ReplicationMetrics) -> Self {
        SeriesRow {
            value,
            replication,
            delivered_system_hours: m.delivered_system_hours,
            demanded_system_hours: m.demanded_system_hours,
            shortfall_hours: m.shortfall_hours,
            served_system_hours: m.served_system_hours,
            availability: m.availability,
            modules_deployed: m.modules_deployed,
            modules_recycled: m.modules_recycled,
            system_failures: m.system_failures,
            outages: m.outages,
        }
    }
}

pub fn site_facilities(scenario: &Scenario) -> Vec<SiteFacility> {
    scenario
        .sites
        .iter()
        .map(|s| SiteFacility {
            site: s.name.clone(),
            breakdown: facility_capex(&s.facility),
        })
        .collect()
}

pub fn yard_lines(scenario: &Scenario) -> Vec<YardLine> {
    let spec = scenario.module_spec();
    scenario
        .sites
        .iter()
        .map(|s| {
            let slots = scenario.site_slots(s);
            YardLine {
                site: s.name.clone(),
                module_slots: slots,
                stack_height: s.stack_height,
                ground_positions: ground_positions(slots, s.stack_height),
                area_sqft: yard_area(slots, spec, s.stack_height, s.central_building_area, s.circulation_fraction),
            }
        })
        .collect()
}

pub fn density_line(scenario: &Scenario) -> Result<DensityLine> {
    let spec = scenario.module_spec();
    let d = &scenario.density;
    let module_w = power_density(spec);
    let realized = d.realized_w_per_sqft.unwrap_or(module_w);
    let facility = site_facilities(scenario)
        .iter()
        .fold(CostBreakdown::zero(), |acc, f| acc.plus(&f.breakdown));
    let outcome = provisioning_mismatch(d.design_w_per_sqft, realized).map_err(CliError::validation)?;
    Ok(DensityLine {
        module_w_per_sqft: module_w,
        module_systems_per_sqft: areal_system_density(spec),
        design_w_per_sqft: d.design_w_per_sqft,
        realized_w_per_sqft: realized,
        mismatch: mismatch_cost(&outcome, &facility),
        air_cooled_floor_utilization: floor_utilization(Cooling::Air, d.crac_space_ratio, d.walkway_ratio)
            .map_err(CliError::validation)?,
        module_floor_utilization: floor_utilization(spec.cooling, d.crac_space_ratio, d.walkway_ratio)
            .map_err(CliError::validation)?,
    })
}

pub fn downtime_line(scenario: &Scenario) -> Result<DowntimeLine> {
    let d = &scenario.downtime;
    Ok(DowntimeLine {
        admin_error_share: d.admin_error_share,
        elimination: d.elimination,
        conventional_hours_per_year: d.base_hours_per_year,
        modular_hours_per_year: downtime_model(d.base_hours_per_year, d.admin_error_share, d.elimination)
            .map_err(CliError::validation)?,
        reduction_fraction: d.admin_error_share * d.elimination,
    })
}

pub fn comparison(metrics: &Metrics, redundancy: Option<&RedundancyComparison>) -> Comparison {
    let tco = &metrics.tco;
    Comparison {
        delta: tco.modular.minus(&tco.conventional),
        conventional_capex: tco.conventional.capex(),
        conventional_opex: tco.conventional.opex(),
        modular_capex: tco.modular.capex(),
        modular_opex: tco.modular.opex(),
        redundancy: redundancy.map(|r| {
            let side = |m: &Metrics| RedundancySide {
                modular_tco: m.tco.modular,
                shortfall_hours: m.shortfall_hours,
                availability: m.availability,
                outages: m.outages,
            };
            RedundancyLine {
                onsite_generators: side(&r.onsite.metrics),
                geo_failover: side(&r.geo.metrics),
                cost_delta: r.cost_delta,
                shortfall_delta: r.shortfall_delta,
            }
        }),
    }
}
