//! Multi-site fleet simulation over a multi-year horizon.
//!
//! Each replication is an isolated event loop: modules deploy after their
//! lead time, lose systems to failures, are recycled at end of life and
//! replaced; utility outages take a site offline unless generators cover it.
//! Replications run in parallel on disjoint random streams and are merged
//! once all have finished.

mod accumulator;
mod engine;
mod event;
mod scenario;
mod yard;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use accumulator::{replay, DiscountedTotals, Interval, MetricsAccumulator, ReplicationMetrics};
pub use engine::{
    relocate, simulate_replication, DeployedModule, FleetState, Relocation, ReplicationOutcome, SiteSlots,
};
pub use event::{EventKind, FleetEvent, RelocationStage};
pub use scenario::{
    DemandCurve, DemandStep, DensitySettings, DowntimeSettings, EconInputs, ModuleConfig, RelocationOrder, Scenario,
    SiteSpec, Strategy, MAX_GROUND_STACK,
};
pub use yard::{ground_positions, yard_area};

use crate::econ::{tco, Architecture, CostBreakdown, MaintenanceMode, MaintenancePolicy, TcoInputs};
use crate::error::{Error, Result};

/// Mean and standard error of a per-replication quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Estimate {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Estimate::default();
        }
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Estimate { mean, std_error: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcoPair {
    pub conventional: CostBreakdown<f64>,
    pub modular: CostBreakdown<f64>,
}

/// Aggregate over all replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub replications: u32,
    pub delivered_system_hours: Estimate,
    pub demanded_system_hours: Estimate,
    pub shortfall_hours: Estimate,
    pub served_system_hours: Estimate,
    pub availability: Estimate,
    pub installed_system_hours: Estimate,
    pub modules_deployed: Estimate,
    pub modules_recycled: Estimate,
    pub system_failures: Estimate,
    pub outages: Estimate,
    pub relocation_cost: Estimate,
    pub tco: TcoPair,
}

impl Metrics {
    pub fn aggregate(scenario: &Scenario, reps: &[ReplicationMetrics]) -> Result<Metrics> {
        let est = |f: fn(&ReplicationMetrics) -> f64| Estimate::from_samples(reps.iter().map(f));
        let n = reps.len().max(1) as f64;
        let sum = |f: fn(&DiscountedTotals) -> f64| reps.iter().map(|r| f(&r.discounted)).sum::<f64>() / n;
        let mean_discounted = DiscountedTotals {
            delivered_system_years: sum(|d| d.delivered_system_years),
            installed_system_years: sum(|d| d.installed_system_years),
            modules_deployed: sum(|d| d.modules_deployed),
            modules_recycled: sum(|d| d.modules_recycled),
            relocation_cost: sum(|d| d.relocation_cost),
            years: sum(|d| d.years),
        };
        Ok(Metrics {
            replications: reps.len() as u32,
            delivered_system_hours: est(|r| r.delivered_system_hours),
            demanded_system_hours: est(|r| r.demanded_system_hours),
            shortfall_hours: est(|r| r.shortfall_hours),
            served_system_hours: est(|r| r.served_system_hours),
            availability: est(|r| r.availability),
            installed_system_hours: est(|r| r.installed_system_hours),
            modules_deployed: est(|r| f64::from(r.modules_deployed)),
            modules_recycled: est(|r| f64::from(r.modules_recycled)),
            system_failures: est(|r| f64::from(r.system_failures)),
            outages: est(|r| f64::from(r.outages)),
            relocation_cost: est(|r| r.relocation_cost),
            tco: fleet_tco(scenario, &mean_discounted)?,
        })
    }
}

/// Prices a fleet both ways from (discount-weighted) simulation totals.
///
/// The modular fleet pays for containers, energy on healthy systems only,
/// recycling and relocation, and no field service. The conventional build
/// buys the same systems, keeps them repaired under a service contract and
/// cools them at the conventional overhead.
pub fn fleet_tco(scenario: &Scenario, totals: &DiscountedTotals) -> Result<TcoPair> {
    let spec = *scenario.module_spec();
    let econ = &scenario.econ;
    let facilities = scenario
        .sites
        .iter()
        .map(|s| {
            let mut f = s.facility;
            if scenario.strategy == Strategy::GeoFailover {
                f.generator_count = 0;
            }
            f
        })
        .collect::<Vec<_>>();
    let years = totals.years;
    let kw_per_system = spec.system.power_draw / 1000.0;
    let mean_kw = |system_years: f64| {
        if years > 0.0 {
            system_years * kw_per_system / years
        } else {
            0.0
        }
    };
    let base = TcoInputs {
        facilities,
        module: spec,
        modules_purchased: totals.modules_deployed,
        condition: econ.container_condition,
        integration_fraction: econ.integration_fraction,
        maintenance: MaintenancePolicy::none(),
        serviced_system_years: 0.0,
        mean_it_power_kw: mean_kw(totals.delivered_system_years),
        cooling_overhead: spec.cooling_overhead,
        energy_price: econ.energy_price,
        admin_staff_per_year: econ.admin_staff_per_year_modular,
        modules_recycled: totals.modules_recycled,
        recycle_cost_per_module: econ.recycle_cost_per_module,
        relocation_cost: totals.relocation_cost,
        horizon: years,
    };
    let conventional = TcoInputs {
        maintenance: MaintenancePolicy {
            mode: MaintenanceMode::FieldService,
            rate: econ.maintenance_rate,
        },
        serviced_system_years: totals.installed_system_years,
        mean_it_power_kw: mean_kw(totals.installed_system_years),
        cooling_overhead: econ.conventional_cooling_overhead,
        admin_staff_per_year: econ.admin_staff_per_year_conventional,
        modules_recycled: 0.0,
        relocation_cost: 0.0,
        ..base.clone()
    };
    Ok(TcoPair {
        conventional: tco(Architecture::Conventional, &conventional)?,
        modular: tco(Architecture::Modular, &base)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep traces for the first `n` replications; `None` keeps all.
    pub keep_traces: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct FleetRun {
    /// Traces for the first replications, in replication order.
    pub traces: Vec<Vec<FleetEvent>>,
    pub replications: Vec<ReplicationMetrics>,
    pub metrics: Metrics,
}

/// Runs every replication of `scenario`, keeping every trace.
pub fn run(scenario: &Scenario) -> Result<FleetRun> {
    run_with(scenario, RunOptions::default())
}

pub fn run_with(scenario: &Scenario, options: RunOptions) -> Result<FleetRun> {
    scenario.validate()?;
    let keep = options.keep_traces.unwrap_or(usize::MAX);
    let outcomes = (0..scenario.replications)
        .into_par_iter()
        .map(|rep| simulate_replication(scenario, rep, (rep as usize) < keep, false))
        .collect::<Result<Vec<_>>>()?;
    let mut traces = Vec::new();
    let mut replications = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if let Some(t) = o.trace {
            traces.push(t);
        }
        replications.push(o.metrics);
    }
    let metrics = Metrics::aggregate(scenario, &replications)?;
    Ok(FleetRun {
        traces,
        replications,
        metrics,
    })
}

#[derive(Debug, Clone)]
pub struct RedundancyComparison {
    pub onsite: FleetRun,
    pub geo: FleetRun,
    /// Modular TCO, geo-failover minus on-site generators.
    pub cost_delta: CostBreakdown<f64>,
    /// Mean shortfall system-hours, geo-failover minus on-site generators.
    pub shortfall_delta: f64,
}

/// Runs the scenario under both redundancy strategies with the same seed, so
/// failure and outage times coincide across the pair.
pub fn compare_redundancy(scenario: &Scenario, options: RunOptions) -> Result<RedundancyComparison> {
    if scenario.sites.len() < 2 {
        return Err(Error::invalid(
            "sites",
            "geo_failover comparison needs at least two sites",
        ));
    }
    let onsite = run_with(&scenario.with_strategy(Strategy::OnsiteGenerators), options)?;
    let geo = run_with(&scenario.with_strategy(Strategy::GeoFailover), options)?;
    Ok(RedundancyComparison {
        cost_delta: geo.metrics.tco.modular.minus(&onsite.metrics.tco.modular),
        shortfall_delta: geo.metrics.shortfall_hours.mean - onsite.metrics.shortfall_hours.mean,
        onsite,
        geo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = Estimate::from_samples([3.0, 3.0, 3.0]);
        assert_eq!(e, Estimate { mean: 3.0, std_error: 0.0 });
        let one = Estimate::from_samples([5.0]);
        assert_eq!(one.std_error, 0.0);
    }

    #[test]
    fn estimate_matches_hand_computation() {
        // mean 2.5, sample var 5/3, se = sqrt(5/12)
        let e = Estimate::from_samples([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
