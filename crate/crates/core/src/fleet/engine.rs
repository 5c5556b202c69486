//! Single-replication event loop.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::accumulator::{Interval, MetricsAccumulator, ReplicationMetrics};
use super::event::{EventKind, FleetEvent, RelocationStage};
use super::scenario::{Scenario, Strategy};
use crate::error::{Error, Result};
use crate::failure::{sample_lifetimes, unit_exponential, RngStream, HOURS_PER_YEAR};

const KEY_MODULE: u64 = 1;
const KEY_OUTAGE: u64 = 2;

#[derive(Debug, Clone, Copy)]
enum Action {
    Deploy { site: u32, slot: u32, generation: u32 },
    Fail { module: u64 },
    Recycle { module: u64 },
    OutageStart { site: u32 },
    OutageEnd { site: u32 },
    Relocate { order: usize },
    Arrive { module: u64, from: u32, to: u32 },
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    seq: u64,
    action: Action,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed: BinaryHeap is a max-heap and we want the earliest event,
    // ties broken by scheduling order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeployedModule {
    pub id: u64,
    /// Current site, or destination while in transit.
    pub site: u32,
    pub slot: u32,
    pub generation: u32,
    pub deployed_at: f64,
    pub healthy: u32,
    pub in_transit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteSlots {
    pub slots: u32,
    /// Slots held by deployed, in-transit or on-order modules.
    pub occupied: u32,
    pub next_slot: u32,
}

/// Mutable fleet layout during one replication.
#[derive(Debug, Clone, Default)]
pub struct FleetState {
    pub modules: BTreeMap<u64, DeployedModule>,
    pub sites: Vec<SiteSlots>,
}

impl FleetState {
    pub fn modules_at(&self, site: u32) -> impl Iterator<Item = &DeployedModule> {
        self.modules
            .values()
            .filter(move |m| m.site == site && !m.in_transit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relocation {
    /// One `module_relocated` departure per module.
    pub events: Vec<FleetEvent>,
    pub arrival_time: f64,
    pub cost: f64,
}

/// Moves `module_ids` from one site to another. The modules carry no load
/// until `arrival_time`; their age and failures travel with them.
pub fn relocate(
    state: &mut FleetState,
    site_from: u32,
    site_to: u32,
    module_ids: &[u64],
    cost_per_module: f64,
    downtime_hours: f64,
    now: f64,
) -> Result<Relocation> {
    let arrival_time = now + downtime_hours / HOURS_PER_YEAR;
    if module_ids.is_empty() {
        return Ok(Relocation {
            events: Vec::new(),
            arrival_time,
            cost: 0.0,
        });
    }
    let nsites = state.sites.len() as u32;
    if site_from >= nsites || site_to >= nsites || site_from == site_to {
        return Err(Error::invalid("relocate", "source and destination must be distinct known sites"));
    }
    for id in module_ids {
        match state.modules.get(id) {
            Some(m) if m.site == site_from && !m.in_transit => {}
            _ => {
                return Err(Error::invalid(
                    "relocate.module_ids",
                    format!("module {id} is not deployed at site {site_from}"),
                ))
            }
        }
    }
    let k = module_ids.len() as u32;
    let dest = state.sites[site_to as usize];
    if dest.occupied + k > dest.slots {
        return Err(Error::invalid(
            "relocate.site_to",
            format!(
                "slot overflow: {k} modules do not fit in {} free slots",
                dest.slots - dest.occupied
            ),
        ));
    }
    let mut events = Vec::with_capacity(module_ids.len());
    for id in module_ids {
        let slot = state.sites[site_to as usize].next_slot;
        state.sites[site_to as usize].next_slot += 1;
        let m = state.modules.get_mut(id).expect("checked above");
        m.site = site_to;
        m.slot = slot;
        m.in_transit = true;
        events.push(FleetEvent {
            time: now,
            kind: EventKind::ModuleRelocated {
                module: *id,
                from_site: site_from,
                to_site: site_to,
                stage: RelocationStage::Departed,
                cost: cost_per_module,
            },
        });
    }
    state.sites[site_from as usize].occupied -= k;
    state.sites[site_to as usize].occupied += k;
    Ok(Relocation {
        events,
        arrival_time,
        cost: cost_per_module * f64::from(k),
    })
}

/// What one replication produced.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub trace: Option<Vec<FleetEvent>>,
    pub metrics: ReplicationMetrics,
    pub intervals: Option<Vec<Interval>>,
}

struct Sim<'a> {
    sc: &'a Scenario,
    rep: u64,
    base: RngStream,
    queue: BinaryHeap<Pending>,
    seq: u64,
    next_id: u64,
    state: FleetState,
    acc: MetricsAccumulator<'a>,
    trace: Option<Vec<FleetEvent>>,
}

impl<'a> Sim<'a> {
    fn schedule(&mut self, time: f64, action: Action) {
        if time < self.sc.horizon {
            self.queue.push(Pending {
                time,
                seq: self.seq,
                action,
            });
            self.seq += 1;
        }
    }

    fn emit(&mut self, time: f64, kind: EventKind) -> Result<()> {
        let event = FleetEvent { time, kind };
        self.acc.apply(&event)?;
        if let Some(t) = self.trace.as_mut() {
            t.push(event);
        }
        Ok(())
    }

    fn init(&mut self) -> Result<()> {
        let sc = self.sc;
        for (i, site) in sc.sites.iter().enumerate() {
            let count = site.modules + sc.extra_modules(site);
            self.state.sites.push(SiteSlots {
                slots: sc.site_slots(site),
                occupied: 0,
                next_slot: count,
            });
            if site.deployment_lead_time < sc.horizon {
                self.state.sites[i].occupied = count;
            }
            for slot in 0..count {
                self.schedule(
                    site.deployment_lead_time,
                    Action::Deploy {
                        site: i as u32,
                        slot,
                        generation: 0,
                    },
                );
            }
            if site.utility_outage_rate > 0.0 {
                let mut rng = self.base.derive(&[KEY_OUTAGE, self.rep, i as u64]).rng();
                let duration = site.outage_duration_hours / HOURS_PER_YEAR;
                let mut t = 0.0;
                loop {
                    t += unit_exponential(&mut rng) / site.utility_outage_rate;
                    if t >= sc.horizon {
                        break;
                    }
                    self.schedule(t, Action::OutageStart { site: i as u32 });
                    t += duration;
                    self.schedule(t, Action::OutageEnd { site: i as u32 });
                }
            }
        }
        for (order, r) in sc.relocations.iter().enumerate() {
            self.schedule(r.at, Action::Relocate { order });
        }
        Ok(())
    }

    fn step(&mut self, p: Pending) -> Result<()> {
        let sc = self.sc;
        let t = p.time;
        match p.action {
            Action::Deploy { site, slot, generation } => {
                let spec = sc.module_spec();
                let id = self.next_id;
                self.next_id += 1;
                let stream = self.base.derive(&[
                    KEY_MODULE,
                    self.rep,
                    u64::from(site),
                    u64::from(slot),
                    u64::from(generation),
                ]);
                let recycle_at = t + spec.service_life;
                let window_end = recycle_at.min(sc.horizon);
                let lifetimes = sample_lifetimes(
                    spec.system_count,
                    spec.system.annual_failure_prob,
                    sc.failure_law,
                    &stream,
                )?;
                self.state.modules.insert(
                    id,
                    DeployedModule {
                        id,
                        site,
                        slot,
                        generation,
                        deployed_at: t,
                        healthy: spec.system_count,
                        in_transit: false,
                    },
                );
                self.emit(
                    t,
                    EventKind::ModuleDeployed {
                        site,
                        module: id,
                        systems: spec.system_count,
                        generation,
                    },
                )?;
                for life in lifetimes {
                    let at = t + life;
                    if at < window_end {
                        self.schedule(at, Action::Fail { module: id });
                    }
                }
                self.schedule(recycle_at, Action::Recycle { module: id });
            }
            Action::Fail { module } => {
                if let Some(m) = self.state.modules.get_mut(&module) {
                    m.healthy -= 1;
                    self.emit(t, EventKind::SystemFailed { module })?;
                }
            }
            Action::Recycle { module } => {
                let m = self
                    .state
                    .modules
                    .remove(&module)
                    .expect("recycle is scheduled once per live module");
                // A module recycled in transit is recorded against its destination.
                self.emit(t, EventKind::ModuleRecycled { site: m.site, module })?;
                let lead = sc.sites[m.site as usize].deployment_lead_time;
                if t + lead < sc.horizon {
                    self.schedule(
                        t + lead,
                        Action::Deploy {
                            site: m.site,
                            slot: m.slot,
                            generation: m.generation + 1,
                        },
                    );
                } else {
                    self.state.sites[m.site as usize].occupied -= 1;
                }
            }
            Action::OutageStart { site } => {
                let covered = sc.strategy == Strategy::OnsiteGenerators;
                let migration = if covered {
                    None
                } else {
                    let total = self.acc.available() as f64;
                    let here = self.acc.available_at(site) as f64;
                    let served = sc.demand.systems_at(t).min(total);
                    let load = if total > 0.0 { served * here / total } else { 0.0 };
                    let spare = ((total - here) - (served - load)).max(0.0);
                    Some((load, load.min(spare)))
                };
                self.emit(t, EventKind::DcOutageStart { site, covered })?;
                if let Some((load, absorbed)) = migration {
                    self.emit(
                        t,
                        EventKind::LoadMigrated {
                            from_site: site,
                            load,
                            absorbed,
                        },
                    )?;
                }
            }
            Action::OutageEnd { site } => {
                let covered = sc.strategy == Strategy::OnsiteGenerators;
                self.emit(t, EventKind::DcOutageEnd { site, covered })?;
            }
            Action::Relocate { order } => {
                let r = &sc.relocations[order];
                let from = sc.site_index(&r.from).expect("validated") as u32;
                let to = sc.site_index(&r.to).expect("validated") as u32;
                let ids: Vec<u64> = self
                    .state
                    .modules_at(from)
                    .map(|m| m.id)
                    .take(r.modules as usize)
                    .collect();
                if ids.len() < r.modules as usize {
                    return Err(Error::invalid(
                        format!("relocations[{order}].modules"),
                        format!("only {} modules deployed at '{}' at t = {t}", ids.len(), r.from),
                    ));
                }
                let plan = relocate(&mut self.state, from, to, &ids, r.cost_per_module, r.downtime_hours, t)
                    .map_err(|e| e.within(&format!("relocations[{order}]")))?;
                for e in plan.events {
                    self.emit(e.time, e.kind)?;
                }
                for id in ids {
                    self.schedule(plan.arrival_time, Action::Arrive { module: id, from, to });
                }
            }
            Action::Arrive { module, from, to } => {
                if let Some(m) = self.state.modules.get_mut(&module) {
                    if m.in_transit {
                        m.in_transit = false;
                        self.emit(
                            t,
                            EventKind::ModuleRelocated {
                                module,
                                from_site: from,
                                to_site: to,
                                stage: RelocationStage::Arrived,
                                cost: 0.0,
                            },
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs replication `rep` of a validated scenario.
pub fn simulate_replication(
    scenario: &Scenario,
    rep: u32,
    keep_trace: bool,
    record_intervals: bool,
) -> Result<ReplicationOutcome> {
    let mut acc = MetricsAccumulator::new(&scenario.demand, scenario.horizon, scenario.econ.discount_rate);
    if record_intervals {
        acc = acc.recording_intervals();
    }
    let mut sim = Sim {
        sc: scenario,
        rep: u64::from(rep),
        base: RngStream::new(scenario.seed, 0),
        queue: BinaryHeap::new(),
        seq: 0,
        next_id: 0,
        state: FleetState::default(),
        acc,
        trace: keep_trace.then(Vec::new),
    };
    sim.init()?;
    while let Some(p) = sim.queue.pop() {
        sim.step(p)?;
    }
    let (metrics, intervals) = if record_intervals {
        let (m, iv) = sim.acc.finish_with_intervals();
        (m, Some(iv))
    } else {
        (sim.acc.finish(), None)
    };
    Ok(ReplicationOutcome {
        trace: sim.trace,
        metrics,
        intervals,
    })
}
