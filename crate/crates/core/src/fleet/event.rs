use serde::{Deserialize, Serialize};

/// One line of a fleet trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetEvent {
    /// Years since the start of the run.
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelocationStage {
    Departed,
    Arrived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    ModuleDeployed {
        site: u32,
        module: u64,
        systems: u32,
        generation: u32,
    },
    SystemFailed {
        module: u64,
    },
    ModuleRecycled {
        site: u32,
        module: u64,
    },
    /// `covered` is true when on-site generators carry the load.
    DcOutageStart {
        site: u32,
        covered: bool,
    },
    DcOutageEnd {
        site: u32,
        covered: bool,
    },
    /// Informational: load moved off a failed site and how much of it the
    /// surviving sites could take.
    LoadMigrated {
        from_site: u32,
        load: f64,
        absorbed: f64,
    },
    ModuleRelocated {
        module: u64,
        from_site: u32,
        to_site: u32,
        stage: RelocationStage,
        cost: f64,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::ModuleDeployed { .. } => "module_deployed",
            EventKind::SystemFailed { .. } => "system_failed",
            EventKind::ModuleRecycled { .. } => "module_recycled",
            EventKind::DcOutageStart { .. } => "dc_outage_start",
            EventKind::DcOutageEnd { .. } => "dc_outage_end",
            EventKind::LoadMigrated { .. } => "load_migrated",
            EventKind::ModuleRelocated { .. } => "module_relocated",
        }
    }
}
