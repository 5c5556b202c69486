//! Tables, CSV and text rendering of a [`Report`]. Cells are copied from
//! report fields verbatim; nothing here does arithmetic.

use std::fmt::Write as _;

use macromodule::econ::CostBreakdown;
use macromodule::fleet::{Estimate, Metrics};

use crate::report::{Report, SeriesRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    JsonDoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&str]) -> Self {
        Table {
            name,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn estimate_rows(t: &mut Table, m: &Metrics) {
    let rows: [(&str, &Estimate); 11] = [
        ("delivered_system_hours", &m.delivered_system_hours),
        ("demanded_system_hours", &m.demanded_system_hours),
        ("shortfall_hours", &m.shortfall_hours),
        ("served_system_hours", &m.served_system_hours),
        ("availability", &m.availability),
        ("installed_system_hours", &m.installed_system_hours),
        ("modules_deployed", &m.modules_deployed),
        ("modules_recycled", &m.modules_recycled),
        ("system_failures", &m.system_failures),
        ("outages", &m.outages),
        ("relocation_cost", &m.relocation_cost),
    ];
    for (name, e) in rows {
        t.row(vec![name.into(), num(e.mean), num(e.std_error)]);
    }
}

fn breakdown_columns(t: &mut Table, columns: &[&CostBreakdown<f64>]) {
    let named: Vec<_> = columns.iter().map(|b| b.components()).collect();
    for i in 0..named[0].len() {
        let mut row = vec![named[0][i].0.to_string()];
        row.extend(named.iter().map(|c| num(c[i].1)));
        t.row(row);
    }
    let mut total = vec!["total".to_string()];
    total.extend(columns.iter().map(|b| num(b.total)));
    t.row(total);
}

pub fn tables(report: &Report) -> Vec<Table> {
    let mut out = Vec::new();

    let mut summary = Table::new("summary", &["metric", "mean", "std_error"]);
    estimate_rows(&mut summary, &report.metrics);
    out.push(summary);

    let tco = &report.metrics.tco;
    match &report.comparison {
        Some(c) => {
            let mut t = Table::new("tco", &["component", "conventional", "modular", "delta"]);
            breakdown_columns(&mut t, &[&tco.conventional, &tco.modular, &c.delta]);
            t.row(vec!["capex".into(), num(c.conventional_capex), num(c.modular_capex), String::new()]);
            t.row(vec!["opex".into(), num(c.conventional_opex), num(c.modular_opex), String::new()]);
            out.push(t);
            if let Some(r) = &c.redundancy {
                let mut t = Table::new("redundancy", &["component", "onsite_generators", "geo_failover", "delta"]);
                breakdown_columns(
                    &mut t,
                    &[&r.onsite_generators.modular_tco, &r.geo_failover.modular_tco, &r.cost_delta],
                );
                t.row(vec![
                    "shortfall_hours".into(),
                    num(r.onsite_generators.shortfall_hours.mean),
                    num(r.geo_failover.shortfall_hours.mean),
                    num(r.shortfall_delta),
                ]);
                t.row(vec![
                    "availability".into(),
                    num(r.onsite_generators.availability.mean),
                    num(r.geo_failover.availability.mean),
                    String::new(),
                ]);
                out.push(t);
            }
        }
        None => {
            let mut t = Table::new("tco", &["component", "conventional", "modular"]);
            breakdown_columns(&mut t, &[&tco.conventional, &tco.modular]);
            out.push(t);
        }
    }

    let mut t = Table::new(
        "facility",
        &["site", "building", "power_equipment", "other_facility", "generators", "total"],
    );
    for f in &report.facility {
        let b = &f.breakdown;
        t.row(vec![
            f.site.clone(),
            num(b.building),
            num(b.power_equipment),
            num(b.other_facility),
            num(b.generators),
            num(b.total),
        ]);
    }
    out.push(t);

    let mut t = Table::new("yard", &["site", "module_slots", "stack_height", "ground_positions", "area_sqft"]);
    for y in &report.yard {
        t.row(vec![
            y.site.clone(),
            y.module_slots.to_string(),
            y.stack_height.to_string(),
            y.ground_positions.to_string(),
            num(y.area_sqft),
        ]);
    }
    out.push(t);

    let d = &report.density;
    let mut t = Table::new("density", &["item", "value"]);
    for (k, v) in [
        ("module_w_per_sqft", d.module_w_per_sqft),
        ("module_systems_per_sqft", d.module_systems_per_sqft),
        ("design_w_per_sqft", d.design_w_per_sqft),
        ("realized_w_per_sqft", d.realized_w_per_sqft),
        ("stranded_power_fraction", d.mismatch.stranded_power_fraction),
        ("unusable_floor_fraction", d.mismatch.unusable_floor_fraction),
        ("stranded_cost", d.mismatch.stranded_cost),
        ("wasted_floor_cost", d.mismatch.wasted_floor_cost),
        ("air_cooled_floor_utilization", d.air_cooled_floor_utilization),
        ("module_floor_utilization", d.module_floor_utilization),
    ] {
        t.row(vec![k.into(), num(v)]);
    }
    out.push(t);

    let d = &report.downtime;
    let mut t = Table::new("downtime", &["item", "value"]);
    for (k, v) in [
        ("conventional_hours_per_year", d.conventional_hours_per_year),
        ("modular_hours_per_year", d.modular_hours_per_year),
        ("reduction_fraction", d.reduction_fraction),
        ("admin_error_share", d.admin_error_share),
        ("elimination", d.elimination),
    ] {
        t.row(vec![k.into(), num(v)]);
    }
    out.push(t);

    if let Some(s) = &report.sweep {
        let mut t = Table::new(
            "sweep",
            &[
                "parameter",
                "value",
                "delivered_system_hours",
                "delivered_std_error",
                "shortfall_hours",
                "availability",
                "conventional_tco",
                "modular_tco",
                "stranded_cost",
                "wasted_floor_cost",
            ],
        );
        for r in &s.rows {
            let m = &r.metrics;
            t.row(vec![
                s.parameter.clone(),
                num(r.value),
                num(m.delivered_system_hours.mean),
                num(m.delivered_system_hours.std_error),
                num(m.shortfall_hours.mean),
                num(m.availability.mean),
                num(m.tco.conventional.total),
                num(m.tco.modular.total),
                num(r.density.mismatch.stranded_cost),
                num(r.density.mismatch.wasted_floor_cost),
            ]);
        }
        out.push(t);
    }
    out
}

pub fn table_csv(t: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header).expect("in-memory write");
    for r in &t.rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 cells")
}

pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "value",
        "replication",
        "delivered_system_hours",
        "demanded_system_hours",
        "shortfall_hours",
        "served_system_hours",
        "availability",
        "modules_deployed",
        "modules_recycled",
        "system_failures",
        "outages",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.value.map(num).unwrap_or_default(),
            r.replication.to_string(),
            num(r.delivered_system_hours),
            num(r.demanded_system_hours),
            num(r.shortfall_hours),
            num(r.served_system_hours),
            num(r.availability),
            r.modules_deployed.to_string(),
            r.modules_recycled.to_string(),
            r.system_failures.to_string(),
            r.outages.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 cells")
}

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports always serialize");
    s.push('\n');
    s
}

fn text_table(t: &Table) -> String {
    let widths: Vec<usize> = (0..t.header.len())
        .map(|i| {
            t.rows
                .iter()
                .map(|r| r[i].len())
                .chain([t.header[i].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut s = format!("== {} ==\n", t.name);
    let line = |s: &mut String, cells: &[String]| {
        for (i, c) in cells.iter().enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}", w = widths[i]);
            } else {
                let _ = write!(s, "  {c:>w$}", w = widths[i]);
            }
        }
        s.push('\n');
    };
    line(&mut s, &t.header);
    for r in &t.rows {
        line(&mut s, r);
    }
    s
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::JsonDoc => report_json(report),
        Format::Csv => tables(report)
            .iter()
            .map(|t| format!("# {}\n{}", t.name, table_csv(t)))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Table => {
            let m = &report.metadata;
            let mut s = format!(
                "{} {} {}  seed={} replications={}\n",
                m.tool, m.version, m.command, m.seed, m.replications
            );
            for n in &m.notes {
                let _ = writeln!(s, "note: {n}");
            }
            for t in tables(report) {
                s.push('\n');
                s.push_str(&text_table(&t));
            }
            s
        }
    }
}
