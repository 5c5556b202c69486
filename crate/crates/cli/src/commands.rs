use std::path::Path;

use macromodule::fleet::{compare_redundancy, run_with, FleetEvent, FleetRun, RunOptions, Scenario};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::format::{report_json, series_csv, table_csv, tables};
use crate::report::{
    comparison, density_line, downtime_line, site_facilities, yard_lines, Metadata, Report, SeriesRow, Sweep,
    SweepRow,
};
use crate::scenario_file::LoadedScenario;

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub replications: Option<u32>,
    /// Trace files to keep, counted from replication 0.
    pub traces: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            replications: None,
            traces: 1,
        }
    }
}

impl RunConfig {
    /// The scenario as it will run; this is what the report echoes.
    pub fn apply(&self, scenario: &Scenario) -> Result<Scenario> {
        let mut s = scenario.clone();
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(n) = self.replications {
            s.replications = n;
        }
        s.validate().map_err(CliError::validation)?;
        Ok(s)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            keep_traces: Some(self.traces),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Output {
    pub report: Report,
    /// Traces for replications `0..traces.len()`.
    pub traces: Vec<Vec<FleetEvent>>,
}

fn series(run: &FleetRun, value: Option<f64>) -> Vec<SeriesRow> {
    run.replications
        .iter()
        .enumerate()
        .map(|(i, m)| SeriesRow::new(value, i as u32, m))
        .collect()
}

fn base_report(command: &str, scenario: &Scenario, loaded: &LoadedScenario, run: &FleetRun) -> Result<Report> {
    Ok(Report {
        metadata: Metadata::new(command, scenario, &loaded.defaults_applied),
        metrics: run.metrics.clone(),
        facility: site_facilities(scenario),
        yard: yard_lines(scenario),
        density: density_line(scenario)?,
        downtime: downtime_line(scenario)?,
        comparison: None,
        sweep: None,
        series: series(run, None),
    })
}

pub fn simulate(loaded: &LoadedScenario, config: &RunConfig) -> Result<Output> {
    let scenario = config.apply(&loaded.scenario)?;
    let run = run_with(&scenario, config.options()).map_err(CliError::runtime)?;
    Ok(Output {
        report: base_report("simulate", &scenario, loaded, &run)?,
        traces: run.traces,
    })
}

/// Conventional against modular on one scenario; with two or more sites,
/// also on-site generators against geo-failover.
pub fn compare(loaded: &LoadedScenario, config: &RunConfig) -> Result<Output> {
    let scenario = config.apply(&loaded.scenario)?;
    let run = run_with(&scenario, config.options()).map_err(CliError::runtime)?;
    let redundancy = if scenario.sites.len() >= 2 {
        Some(compare_redundancy(&scenario, RunOptions { keep_traces: Some(0) }).map_err(CliError::runtime)?)
    } else {
        None
    };
    let mut report = base_report("compare", &scenario, loaded, &run)?;
    report.comparison = Some(comparison(&run.metrics, redundancy.as_ref()));
    Ok(Output {
        report,
        traces: run.traces,
    })
}

/// One run per value of the numeric field at `parameter`, all on the same
/// seed so rows share random numbers.
pub fn sweep(loaded: &LoadedScenario, config: &RunConfig, parameter: &str, values: &[f64]) -> Result<Output> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let scenario = config.apply(&loaded.scenario)?;
    let mut rows = Vec::with_capacity(values.len());
    let mut all_series = Vec::new();
    let mut first: Option<(Scenario, FleetRun)> = None;
    for &v in values {
        let s = with_parameter(&scenario, parameter, v)?;
        let run = run_with(&s, config.options()).map_err(CliError::runtime)?;
        all_series.extend(series(&run, Some(v)));
        rows.push(SweepRow {
            value: v,
            metrics: run.metrics.clone(),
            density: density_line(&s)?,
        });
        if first.is_none() {
            first = Some((s, run));
        }
    }
    let (s0, run0) = first.expect("at least one value");
    let mut report = base_report("sweep", &scenario, loaded, &run0)?;
    // Base sections describe the first row; the echo keeps the unswept scenario.
    report.facility = site_facilities(&s0);
    report.yard = yard_lines(&s0);
    report.downtime = downtime_line(&s0)?;
    report.density = rows[0].density;
    report.sweep = Some(Sweep {
        parameter: parameter.into(),
        rows,
    });
    report.series = all_series;
    Ok(Output {
        report,
        traces: Vec::new(),
    })
}

/// Sets the numeric field addressed by a dotted path such as
/// `module.system.annual_failure_prob` or `sites[1].utility_outage_rate`.
pub fn with_parameter(scenario: &Scenario, path: &str, value: f64) -> Result<Scenario> {
    let invalid = |reason: String| CliError::Invalid {
        field: path.into(),
        reason,
        location: None,
    };
    let mut doc = serde_json::to_value(scenario).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut slot = &mut doc;
    for part in path_parts(path).map_err(invalid)? {
        slot = match part {
            PathPart::Key(k) => slot.get_mut(k),
            PathPart::Index(i) => slot.get_mut(i),
        }
        .ok_or_else(|| invalid("no such field in the resolved scenario".into()))?;
    }
    let Value::Number(old) = slot else {
        return Err(invalid("sweep target must be a numeric field".into()));
    };
    *slot = if old.is_f64() {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| invalid(format!("{value} is not a finite number")))?
    } else if value.fract() == 0.0 && value >= 0.0 && value <= u64::MAX as f64 {
        Value::from(value as u64)
    } else {
        return Err(invalid(format!("{value} is not a valid value for an integer field")));
    };
    let s: Scenario = serde_json::from_value(doc).map_err(|e| invalid(e.to_string()))?;
    s.validate().map_err(CliError::validation)?;
    Ok(s)
}

enum PathPart<'a> {
    Key(&'a str),
    Index(usize),
}

fn path_parts(path: &str) -> std::result::Result<Vec<PathPart<'_>>, String> {
    let mut parts = Vec::new();
    for seg in path.split('.') {
        let (key, mut rest) = seg.split_once('[').map_or((seg, ""), |(k, r)| (k, r));
        if key.is_empty() {
            return Err("empty path segment".into());
        }
        parts.push(PathPart::Key(key));
        while !rest.is_empty() {
            let (idx, after) = rest.split_once(']').ok_or("unclosed '['")?;
            parts.push(PathPart::Index(idx.parse().map_err(|_| format!("bad index '{idx}'"))?));
            rest = after.strip_prefix('[').unwrap_or(after);
            if !after.is_empty() && !after.starts_with('[') {
                return Err(format!("unexpected '{after}' after index"));
            }
        }
    }
    Ok(parts)
}

/// Writes `report.json`, one CSV per table, `series.csv` and
/// `traces/rep-NNNNN.jsonl`, creating `dir` if needed.
pub fn write_outputs(out: &Output, dir: &Path) -> Result<()> {
    let write = |path: &Path, body: &str| std::fs::write(path, body).map_err(|e| CliError::io(path, e));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write(&dir.join("report.json"), &report_json(&out.report))?;
    for t in tables(&out.report) {
        write(&dir.join(format!("{}.csv", t.name)), &table_csv(&t))?;
    }
    write(&dir.join("series.csv"), &series_csv(&out.report.series))?;
    if !out.traces.is_empty() {
        let traces = dir.join("traces");
        std::fs::create_dir_all(&traces).map_err(|e| CliError::io(&traces, e))?;
        for (i, trace) in out.traces.iter().enumerate() {
            let mut body = String::new();
            for ev in trace {
                body.push_str(&serde_json::to_string(ev).map_err(|e| CliError::Runtime(e.to_string()))?);
                body.push('\n');
            }
            write(&trace_path(dir, i), &body)?;
        }
    }
    Ok(())
}

pub fn trace_path(dir: &Path, replication: usize) -> std::path::PathBuf {
    dir.join("traces").join(format!("rep-{replication:05}.jsonl"))
}
