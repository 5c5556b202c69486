//! Turns a time-ordered trace into replication metrics.
//!
//! The engine feeds every event it emits through a [`MetricsAccumulator`], and
//! a saved trace replayed through a fresh accumulator reproduces the same
//! [`ReplicationMetrics`] bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::event::{EventKind, FleetEvent, RelocationStage};
use super::scenario::DemandCurve;
use crate::error::{Error, Result};
use crate::failure::HOURS_PER_YEAR;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    /// Healthy systems at reachable sites, integrated over time.
    pub delivered_system_hours: f64,
    pub demanded_system_hours: f64,
    /// Unmet demand, in system-hours.
    pub shortfall_hours: f64,
    pub served_system_hours: f64,
    pub availability: f64,
    /// Design systems (failed or not) at reachable sites.
    pub installed_system_hours: f64,
    pub modules_deployed: u32,
    pub modules_recycled: u32,
    pub system_failures: u32,
    pub outages: u32,
    pub relocation_cost: f64,
    pub discounted: DiscountedTotals,
}

/// Quantities weighted by `(1 + r)^-t`; equal to the plain totals when the
/// discount rate is zero. These feed the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscountedTotals {
    pub delivered_system_years: f64,
    pub installed_system_years: f64,
    pub modules_deployed: f64,
    pub modules_recycled: f64,
    pub relocation_cost: f64,
    pub years: f64,
}

/// Constant-state stretch between two consecutive breakpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub demand: f64,
    pub available: f64,
    pub served: f64,
}

#[derive(Debug, Clone, Copy)]
struct Track {
    site: Option<u32>,
    healthy: u32,
    systems: u32,
}

#[derive(Debug, Clone)]
pub struct MetricsAccumulator<'a> {
    demand: &'a DemandCurve,
    horizon: f64,
    discount_rate: f64,
    now: f64,
    modules: BTreeMap<u64, Track>,
    healthy_at: Vec<u64>,
    installed_at: Vec<u64>,
    down: Vec<bool>,
    years: Totals,
    m: ReplicationMetrics,
    intervals: Option<Vec<Interval>>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Totals {
    delivered: f64,
    demanded: f64,
    shortfall: f64,
    served: f64,
    installed: f64,
}

impl<'a> MetricsAccumulator<'a> {
    pub fn new(demand: &'a DemandCurve, horizon: f64, discount_rate: f64) -> Self {
        MetricsAccumulator {
            demand,
            horizon,
            discount_rate,
            now: 0.0,
            modules: BTreeMap::new(),
            healthy_at: Vec::new(),
            installed_at: Vec::new(),
            down: Vec::new(),
            years: Totals::default(),
            m: ReplicationMetrics::default(),
            intervals: None,
        }
    }

    /// Also keep every integration interval, for per-instant checks.
    pub fn recording_intervals(mut self) -> Self {
        self.intervals = Some(Vec::new());
        self
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn available(&self) -> u64 {
        (0..self.healthy_at.len()).map(|s| self.available_at(s as u32)).sum()
    }

    pub fn available_at(&self, site: u32) -> u64 {
        let s = site as usize;
        if self.down.get(s).copied().unwrap_or(false) {
            0
        } else {
            self.healthy_at.get(s).copied().unwrap_or(0)
        }
    }

    pub fn demand_now(&self) -> f64 {
        self.demand.systems_at(self.now)
    }

    pub fn intervals(&self) -> Option<&[Interval]> {
        self.intervals.as_deref()
    }

    fn ensure_site(&mut self, site: u32) {
        let n = site as usize + 1;
        if self.healthy_at.len() < n {
            self.healthy_at.resize(n, 0);
            self.installed_at.resize(n, 0);
            self.down.resize(n, false);
        }
    }

    fn installed(&self) -> u64 {
        (0..self.installed_at.len())
            .filter(|&s| !self.down[s])
            .map(|s| self.installed_at[s])
            .sum()
    }

    fn discount_factor(&self, t: f64) -> f64 {
        if self.discount_rate == 0.0 {
            1.0
        } else {
            libm::pow(1.0 + self.discount_rate, -t)
        }
    }

    fn discounted_span(&self, a: f64, b: f64) -> f64 {
        if self.discount_rate == 0.0 {
            b - a
        } else {
            (self.discount_factor(a) - self.discount_factor(b)) / libm::log1p(self.discount_rate)
        }
    }

    fn advance(&mut self, to: f64) {
        let available = self.available() as f64;
        let installed = self.installed() as f64;
        while self.now < to {
            let end = match self.demand.next_change_after(self.now) {
                Some(c) if c < to => c,
                _ => to,
            };
            let dt = end - self.now;
            let demand = self.demand.systems_at(self.now);
            let served = demand.min(available);
            self.years.delivered += available * dt;
            self.years.demanded += demand * dt;
            self.years.shortfall += (demand - available).max(0.0) * dt;
            self.years.served += served * dt;
            self.years.installed += installed * dt;
            let w = self.discounted_span(self.now, end);
            self.m.discounted.delivered_system_years += available * w;
            self.m.discounted.installed_system_years += installed * w;
            self.m.discounted.years += w;
            if let Some(iv) = self.intervals.as_mut() {
                iv.push(Interval {
                    start: self.now,
                    end,
                    demand,
                    available,
                    served,
                });
            }
            self.now = end;
        }
    }

    fn track(&mut self, module: u64) -> Result<&mut Track> {
        self.modules
            .get_mut(&module)
            .ok_or_else(|| Error::invalid("trace", format!("event for unknown module {module}")))
    }

    pub fn apply(&mut self, event: &FleetEvent) -> Result<()> {
        let t = event.time;
        if !(t >= self.now) {
            return Err(Error::invalid("trace", format!("event at {t} precedes {}", self.now)));
        }
        if t > self.horizon {
            return Err(Error::invalid("trace", format!("event at {t} beyond horizon {}", self.horizon)));
        }
        self.advance(t);
        match event.kind {
            EventKind::ModuleDeployed { site, module, systems, .. } => {
                if self.modules.contains_key(&module) {
                    return Err(Error::invalid("trace", format!("module {module} deployed twice")));
                }
                self.ensure_site(site);
                self.modules.insert(
                    module,
                    Track {
                        site: Some(site),
                        healthy: systems,
                        systems,
                    },
                );
                self.healthy_at[site as usize] += u64::from(systems);
                self.installed_at[site as usize] += u64::from(systems);
                self.m.modules_deployed += 1;
                self.m.discounted.modules_deployed += self.discount_factor(t);
            }
            EventKind::SystemFailed { module } => {
                let tr = self.track(module)?;
                if tr.healthy == 0 {
                    return Err(Error::invalid("trace", format!("module {module} has no healthy systems left")));
                }
                tr.healthy -= 1;
                if let Some(s) = tr.site {
                    self.healthy_at[s as usize] -= 1;
                }
                self.m.system_failures += 1;
            }
            EventKind::ModuleRecycled { module, .. } => {
                let tr = self
                    .modules
                    .remove(&module)
                    .ok_or_else(|| Error::invalid("trace", format!("recycled module {module} was never deployed")))?;
                if let Some(s) = tr.site {
                    self.healthy_at[s as usize] -= u64::from(tr.healthy);
                    self.installed_at[s as usize] -= u64::from(tr.systems);
                }
                self.m.modules_recycled += 1;
                self.m.discounted.modules_recycled += self.discount_factor(t);
            }
            EventKind::DcOutageStart { site, covered } => {
                self.ensure_site(site);
                if !covered {
                    self.down[site as usize] = true;
                }
                self.m.outages += 1;
            }
            EventKind::DcOutageEnd { site, covered } => {
                self.ensure_site(site);
                if !covered {
                    self.down[site as usize] = false;
                }
            }
            EventKind::LoadMigrated { .. } => {}
            EventKind::ModuleRelocated {
                module,
                from_site,
                to_site,
                stage,
                cost,
            } => {
                self.ensure_site(from_site.max(to_site));
                let tr = *self.track(module)?;
                match stage {
                    RelocationStage::Departed => {
                        if tr.site != Some(from_site) {
                            return Err(Error::invalid("trace", format!("module {module} is not at site {from_site}")));
                        }
                        self.healthy_at[from_site as usize] -= u64::from(tr.healthy);
                        self.installed_at[from_site as usize] -= u64::from(tr.systems);
                        self.track(module)?.site = None;
                        self.m.relocation_cost += cost;
                        self.m.discounted.relocation_cost += cost * self.discount_factor(t);
                    }
                    RelocationStage::Arrived => {
                        if tr.site.is_some() {
                            return Err(Error::invalid("trace", format!("module {module} arrived without departing")));
                        }
                        self.healthy_at[to_site as usize] += u64::from(tr.healthy);
                        self.installed_at[to_site as usize] += u64::from(tr.systems);
                        self.track(module)?.site = Some(to_site);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> ReplicationMetrics {
        self.advance(self.horizon);
        let h = HOURS_PER_YEAR;
        // Quantities fixed by the scenario alone are summed in closed form so
        // they do not pick up rounding from wherever events happened to fall.
        self.years.demanded = demanded_system_years(self.demand, self.horizon);
        let mut m = self.m;
        m.discounted.years = self.discounted_span(0.0, self.horizon);
        m.delivered_system_hours = self.years.delivered * h;
        m.demanded_system_hours = self.years.demanded * h;
        m.shortfall_hours = self.years.shortfall * h;
        m.served_system_hours = self.years.served * h;
        m.installed_system_hours = self.years.installed * h;
        m.availability = if self.years.demanded > 0.0 {
            self.years.served / self.years.demanded
        } else {
            1.0
        };
        m
    }

    /// Like [`finish`](Self::finish) but also hands back the recorded intervals.
    pub fn finish_with_intervals(self) -> (ReplicationMetrics, Vec<Interval>) {
        let mut me = self;
        me.advance(me.horizon);
        let intervals = me.intervals.take().unwrap_or_default();
        (me.finish(), intervals)
    }
}

fn demanded_system_years(demand: &DemandCurve, horizon: f64) -> f64 {
    let steps = &demand.steps;
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let end = steps.get(i + 1).map_or(horizon, |n| n.at).min(horizon);
            s.systems * (end - s.at).max(0.0)
        })
        .sum()
}

/// Replays a complete trace.
pub fn replay(
    events: &[FleetEvent],
    demand: &DemandCurve,
    horizon: f64,
    discount_rate: f64,
) -> Result<ReplicationMetrics> {
    let mut acc = MetricsAccumulator::new(demand, horizon, discount_rate);
    for e in events {
        acc.apply(e)?;
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(time: f64, kind: EventKind) -> FleetEvent {
        FleetEvent { time, kind }
    }

    #[test]
    fn single_step_integration() {
        let demand = DemandCurve::constant(1000.0, 1.0);
        let mut events = vec![ev(0.0, EventKind::ModuleDeployed { site: 0, module: 0, systems: 1000, generation: 0 })];
        for _ in 0..50 {
            events.push(ev(0.5, EventKind::SystemFailed { module: 0 }));
        }
        let m = replay(&events, &demand, 1.0, 0.0).unwrap();
        assert_eq!(m.delivered_system_hours, 0.975 * 8_766_000.0);
        assert_eq!(m.shortfall_hours, 0.5 * 50.0 * 8766.0);
        assert_eq!(m.system_failures, 50);
        assert!((m.availability - 0.975).abs() < 1e-15);
    }

    #[test]
    fn uncovered_outage_removes_site() {
        let demand = DemandCurve::constant(10.0, 2.0);
        let events = vec![
            ev(0.0, EventKind::ModuleDeployed { site: 0, module: 0, systems: 10, generation: 0 }),
            ev(0.5, EventKind::DcOutageStart { site: 0, covered: false }),
            ev(1.0, EventKind::DcOutageEnd { site: 0, covered: false }),
            ev(1.2, EventKind::DcOutageStart { site: 0, covered: true }),
            ev(1.4, EventKind::DcOutageEnd { site: 0, covered: true }),
        ];
        let m = replay(&events, &demand, 2.0, 0.0).unwrap();
        assert_eq!(m.shortfall_hours, 10.0 * 0.5 * 8766.0);
        assert_eq!(m.outages, 2);
        assert_eq!(m.availability, 0.75);
    }

    #[test]
    fn rejects_inconsistent_traces() {
        let demand = DemandCurve::constant(0.0, 1.0);
        let bad_order = vec![
            ev(0.5, EventKind::ModuleDeployed { site: 0, module: 0, systems: 1, generation: 0 }),
            ev(0.2, EventKind::SystemFailed { module: 0 }),
        ];
        assert!(replay(&bad_order, &demand, 1.0, 0.0).is_err());
        let ghost = vec![ev(0.5, EventKind::ModuleRecycled { site: 0, module: 9 })];
        assert!(replay(&ghost, &demand, 1.0, 0.0).is_err());
        let late = vec![ev(1.5, EventKind::SystemFailed { module: 0 })];
        assert!(replay(&late, &demand, 1.0, 0.0).is_err());
    }

    #[test]
    fn discounting_weights_time() {
        let demand = DemandCurve::constant(0.0, 1.0);
        let events = vec![ev(0.0, EventKind::ModuleDeployed { site: 0, module: 0, systems: 1, generation: 0 })];
        let m = replay(&events, &demand, 1.0, 0.1).unwrap();
        // integral of 1.1^-t over [0, 1] = (1 - 1/1.1) / ln 1.1
        let expect = (1.0 - 1.0 / 1.1) / 1.1f64.ln();
        assert!((m.discounted.years - expect).abs() < 1e-12);
        assert_eq!(m.discounted.modules_deployed, 1.0);
        let undiscounted = replay(&events, &demand, 1.0, 0.0).unwrap();
        assert_eq!(undiscounted.discounted.years, 1.0);
    }

    #[test]
    fn zero_demand_is_fully_available() {
        let demand = DemandCurve::constant(0.0, 1.0);
        let m = replay(&[], &demand, 1.0, 0.0).unwrap();
        assert_eq!(m.availability, 1.0);
        assert_eq!(m.shortfall_hours, 0.0);
    }
}
