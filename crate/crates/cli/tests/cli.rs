use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use macromodule::fleet::Scenario;
use macromodule_cli::commands::with_parameter;
use macromodule_cli::format::{table_csv, tables};
use macromodule_cli::report::Report;
use macromodule_cli::{compare, echo, parse_scenario, parse_scenario_str, simulate, sweep, write_outputs, CliError, RunConfig};
use proptest::prelude::*;

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

const MINIMAL: &str = r#"
horizon = 3.0
seed = 42
replications = 20

[module]
preset = "baseline20"

[demand]
until = 3.0
steps = [{ at = 0.0, systems = 900.0 }]

[[sites]]
name = "a"
modules = 1
"#;

fn minimal() -> macromodule_cli::LoadedScenario {
    parse_scenario_str(MINIMAL, "minimal.toml").unwrap()
}

fn with_site_line(line: &str) -> String {
    MINIMAL.replace("modules = 1\n", &format!("modules = 1\n{line}\n"))
}

fn invalid_field(err: CliError) -> (String, String) {
    match err {
        CliError::Invalid { field, reason, .. } => (field, reason),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn minimal_file_resolves_defaults_and_lists_them() {
    let loaded = minimal();
    let s = &loaded.scenario;
    assert_eq!(s.module.spec.system_count, 1000);
    assert_eq!(s.sites[0].stack_height, 3);
    assert_eq!(s.econ.energy_price, 0.07);
    for key in [
        "econ.energy_price",
        "sites[0].stack_height",
        "sites[0].facility.cost_per_watt",
        "module.system.power_draw",
        "downtime.admin_error_share",
    ] {
        assert!(loaded.defaults_applied.iter().any(|k| k == key), "{key} not listed");
    }
    for given in ["horizon", "seed", "sites[0].name", "module.preset"] {
        assert!(!loaded.defaults_applied.iter().any(|k| k == given), "{given} listed");
    }
}

#[test]
fn echo_round_trips() {
    for name in ["minimal.toml", "two-sites.toml"] {
        let loaded = parse_scenario(&scenarios_dir().join(name)).unwrap();
        let again = parse_scenario_str(&echo(&loaded.scenario), "echo").unwrap();
        assert_eq!(again.scenario, loaded.scenario, "{name}");
        assert!(again.defaults_applied.is_empty(), "{:?}", again.defaults_applied);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn echo_round_trips_arbitrary_numbers(
        horizon in 0.01f64..3.0,
        seed in any::<u64>(),
        afr in 0.0f64..0.9,
        price in 0.0f64..1.0,
        demand in 0.0f64..1e6,
        discount in 0.0f64..0.2,
    ) {
        let mut s = minimal().scenario;
        s.horizon = horizon;
        s.demand.until = horizon;
        s.demand.steps[0].systems = demand;
        s.seed = seed;
        s.module.spec.system.annual_failure_prob = afr;
        s.econ.energy_price = price;
        s.econ.discount_rate = discount;
        let back = parse_scenario_str(&echo(&s), "echo").unwrap();
        prop_assert_eq!(back.scenario, s);
    }
}

#[test]
fn stack_height_seven_cites_ground_bound() {
    let err = parse_scenario_str(&with_site_line("stack_height = 7"), "f").unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let (field, reason) = invalid_field(err);
    assert_eq!(field, "sites[0].stack_height");
    assert!(reason.contains("3 to 5"), "{reason}");
}

#[test]
fn shares_summing_past_one_are_rejected() {
    let text = format!(
        "{MINIMAL}\n[sites.facility.shares]\npower_equipment = 0.6\nbuilding = 0.3\nother = 0.3\n"
    );
    let (field, _) = invalid_field(parse_scenario_str(&text, "f").unwrap_err());
    assert!(field.starts_with("sites[0].facility.shares"), "{field}");
}

#[test]
fn unknown_key_is_rejected_with_path_and_position() {
    let err = parse_scenario_str(&with_site_line("stak_height = 3"), "f").unwrap_err();
    match err {
        CliError::Invalid { field, location, .. } => {
            assert_eq!(field, "sites[0].stak_height");
            assert_eq!(location.as_deref(), Some("16:1"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_key_is_named() {
    let text = MINIMAL.replace("horizon = 3.0\n", "");
    let (field, _) = invalid_field(parse_scenario_str(&text, "f").unwrap_err());
    assert_eq!(field, "horizon");
    let text = MINIMAL.replace("name = \"a\"\n", "");
    let (field, _) = invalid_field(parse_scenario_str(&text, "f").unwrap_err());
    assert_eq!(field, "sites[0].name");
}

#[test]
fn syntax_error_reports_line_and_column() {
    let err = parse_scenario_str("horizon = 3.0\n[module\n", "bad.toml").unwrap_err();
    assert_eq!(err.exit_code(), 1);
    match err {
        CliError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 8)),
        other => panic!("{other:?}"),
    }
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn missing_output_directory_is_created() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("a/b/c");
    let out = simulate(&minimal(), &RunConfig::default()).unwrap();
    write_outputs(&out, &dir).unwrap();
    for f in ["report.json", "summary.csv", "tco.csv", "series.csv", "traces/rep-00000.jsonl"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn uncreatable_output_directory_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = simulate(&minimal(), &RunConfig::default()).unwrap();
    let err = write_outputs(&out, &blocker.join("sub")).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = RunConfig { traces: 3, ..RunConfig::default() };
    for name in ["x", "y"] {
        let out = compare(&minimal(), &config).unwrap();
        write_outputs(&out, &tmp.path().join(name)).unwrap();
    }
    let x = files_under(&tmp.path().join("x"));
    let y = files_under(&tmp.path().join("y"));
    assert_eq!(x.len(), y.len());
    assert!(x.len() > 8);
    for (a, b) in x.iter().zip(&y) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
}

#[test]
fn tables_rederive_from_report_document() {
    let tmp = tempfile::tempdir().unwrap();
    let loaded = parse_scenario(&scenarios_dir().join("two-sites.toml")).unwrap();
    let config = RunConfig { replications: Some(4), ..RunConfig::default() };
    let out = compare(&loaded, &config).unwrap();
    write_outputs(&out, tmp.path()).unwrap();

    let doc: Report = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(doc, out.report);
    let rederived = tables(&doc);
    assert!(rederived.iter().any(|t| t.name == "redundancy"));
    for t in &rederived {
        let written = fs::read_to_string(tmp.path().join(format!("{}.csv", t.name))).unwrap();
        assert_eq!(written, table_csv(t), "{}", t.name);
    }
    let tco = rederived.iter().find(|t| t.name == "tco").unwrap();
    let total = tco.rows.iter().find(|r| r[0] == "total").unwrap();
    assert_eq!(total[1], doc.metrics.tco.conventional.total.to_string());
    assert_eq!(total[2], doc.metrics.tco.modular.total.to_string());
}

#[test]
fn report_reproduces_from_its_echo() {
    let config = RunConfig { seed: Some(99), replications: Some(5), traces: 0 };
    let first = simulate(&minimal(), &config).unwrap().report;
    let echoed = parse_scenario_str(&echo(&first.metadata.scenario), "echo").unwrap();
    let again = simulate(&echoed, &RunConfig { traces: 0, ..RunConfig::default() }).unwrap().report;
    assert_eq!(again.metadata.seed, 99);
    assert_eq!(again.metrics, first.metrics);
    assert_eq!(again.series, first.series);
}

#[test]
fn more_replications_change_errors_not_metadata() {
    let one = simulate(&minimal(), &RunConfig { replications: Some(1), ..RunConfig::default() }).unwrap().report;
    let many = simulate(&minimal(), &RunConfig { replications: Some(400), ..RunConfig::default() }).unwrap().report;
    let strip = |r: &Report| {
        let mut m = r.metadata.clone();
        m.replications = 0;
        m.scenario.replications = 0;
        m
    };
    assert_eq!(strip(&one), strip(&many));
    assert_eq!(one.metrics.delivered_system_hours.std_error, 0.0);
    assert!(many.metrics.delivered_system_hours.std_error > 0.0);
    // One replication is the first of the many.
    assert_eq!(one.series[0], many.series[0]);
}

#[test]
fn compare_defaults_follow_maintenance_rule() {
    let out = compare(&minimal(), &RunConfig::default()).unwrap().report;
    let tco = &out.metrics.tco;
    assert_eq!(tco.modular.field_maintenance, 0.0);
    let serviced_years = out.metrics.installed_system_hours.mean / macromodule::failure::HOURS_PER_YEAR;
    let expect = serviced_years * 1_500.0 * 0.25 / 3.0;
    assert!((tco.conventional.field_maintenance - expect).abs() <= 1e-9 * expect);
    let d = out.downtime;
    assert_eq!(d.conventional_hours_per_year, 87.66);
    assert_eq!(d.modular_hours_per_year, 87.66 * (1.0 - 0.2 * 1.0));
}

#[test]
fn zeroed_knobs_leave_only_energy_in_opex_delta() {
    let mut loaded = minimal();
    let s = &mut loaded.scenario;
    s.econ.maintenance_rate = 0.0;
    s.econ.recycle_cost_per_module = 0.0;
    s.module.spec.container_price_new = 0.0;
    s.horizon = 3.0;
    let c = compare(&loaded, &RunConfig::default()).unwrap().report.comparison.unwrap();
    for (name, v) in c.delta.components() {
        if name != "energy" {
            assert_eq!(v, 0.0, "{name}");
        }
    }
    assert!(c.delta.energy < 0.0);
    assert_eq!(c.conventional_capex, c.modular_capex);
}

#[test]
fn single_value_sweep_matches_simulate() {
    let path = "module.system.annual_failure_prob";
    let base = minimal();
    let swept = sweep(&base, &RunConfig::default(), path, &[0.08]).unwrap().report;
    let mut direct = base.clone();
    direct.scenario = with_parameter(&base.scenario, path, 0.08).unwrap();
    let sim = simulate(&direct, &RunConfig::default()).unwrap().report;
    let row = &swept.sweep.as_ref().unwrap().rows[0];
    assert_eq!(row.metrics, sim.metrics);
    assert_eq!(swept.metrics, sim.metrics);
}

#[test]
fn sweep_rejects_non_numeric_targets() {
    for path in ["module.preset", "sites[0].name", "econ.nope", "sites[3].modules", "strategy"] {
        let err = sweep(&minimal(), &RunConfig::default(), path, &[1.0]).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{path}");
    }
    // Values that break validation are validation errors too.
    let err = sweep(&minimal(), &RunConfig::default(), "sites[0].stack_height", &[7.0]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn density_sweep_prices_mismatch_against_facility_lines() {
    let mut loaded = minimal();
    loaded.scenario.module = macromodule::fleet::ModuleConfig::preset(macromodule::Preset::Rackable40);
    loaded.scenario.density.realized_w_per_sqft = Some(350.0);
    let r = sweep(&loaded, &RunConfig::default(), "density.design_w_per_sqft", &[100.0, 350.0, 600.0, 750.0])
        .unwrap()
        .report;
    let rows = &r.sweep.unwrap().rows;
    assert_eq!(rows.len(), 4);
    let at = |i: usize| rows[i].density.mismatch;
    assert_eq!(at(1).stranded_cost + at(1).wasted_floor_cost, 0.0);
    assert!(at(0).wasted_floor_cost > 0.0 && at(0).stranded_cost == 0.0);
    assert!(at(2).stranded_cost > 0.0 && at(2).wasted_floor_cost == 0.0);
    for i in [0, 2, 3] {
        let m = at(i);
        let per_unit = m.stranded_cost / 60e6 + m.wasted_floor_cost / 22.5e6;
        let frac = m.stranded_power_fraction + m.unusable_floor_fraction;
        assert!((per_unit - frac).abs() < 1e-12);
    }
}

#[test]
fn relocation_overflow_is_a_runtime_error() {
    let text = format!(
        "{}\n[[sites]]\nname = \"b\"\nmodules = 1\n\n[[relocations]]\nat = 1.0\nfrom = \"a\"\nto = \"b\"\nmodules = 1\ncost_per_module = 0.0\ndowntime_hours = 0.0\n",
        MINIMAL
    );
    let err = simulate(&parse_scenario_str(&text, "f").unwrap(), &RunConfig::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

fn mmsim(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mmsim")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn binary_exit_codes_and_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let good = scenarios_dir().join("minimal.toml");
    let good = good.to_str().unwrap();
    let out = tmp.path().join("out");

    let (code, stdout, _) = mmsim(&["simulate", "--scenario", good, "--replications", "3", "--format", "json-doc", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(stdout, fs::read_to_string(out.join("report.json")).unwrap());

    let (code, stdout, _) = mmsim(&["compare", "--scenario", good, "--replications", "2", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("# summary\nmetric,mean,std_error\n"), "{stdout}");

    let (code, stdout, _) = mmsim(&["sweep", "--scenario", good, "--replications", "2", "--param", "econ.energy_price", "--values", "0.05,0.1"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("== sweep =="));

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, with_site_line("stack_height = 7")).unwrap();
    let (code, _, stderr) = mmsim(&["simulate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("sites[0].stack_height"), "{stderr}");

    let (code, _, _) = mmsim(&["simulate", "--scenario", good, "--format", "yaml"]);
    assert_eq!(code, 1);
    let (code, _, _) = mmsim(&["simulate", "--scenario", tmp.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(code, 2);
    let (code, _, _) = mmsim(&["--version"]);
    assert_eq!(code, 0);
}

#[test]
fn shipped_scenarios_are_valid() {
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            parse_scenario(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

/// Every key of a resolved scenario is declared in the shipped schema, and
/// every key the schema requires is present.
#[test]
fn schema_covers_resolved_scenarios() {
    let schema: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(scenarios_dir().join("../docs/scenario.schema.json")).unwrap()).unwrap();
    let defs = &schema["$defs"];
    fn resolve<'a>(node: &'a serde_json::Value, defs: &'a serde_json::Value) -> &'a serde_json::Value {
        match node.get("$ref").and_then(|r| r.as_str()) {
            Some(r) => &defs[r.trim_start_matches("#/$defs/")],
            None => node,
        }
    }
    fn check(value: &serde_json::Value, node: &serde_json::Value, defs: &serde_json::Value, path: &str) {
        let node = resolve(node, defs);
        match value {
            serde_json::Value::Object(map) => {
                let props = node["properties"].as_object().unwrap_or_else(|| panic!("{path}: no properties"));
                for (k, v) in map {
                    let sub = props.get(k).unwrap_or_else(|| panic!("{path}.{k} missing from schema"));
                    check(v, sub, defs, &format!("{path}.{k}"));
                }
                for req in node["required"].as_array().into_iter().flatten() {
                    assert!(map.contains_key(req.as_str().unwrap()), "{path}: {req} required");
                }
            }
            serde_json::Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    check(v, &node["items"], defs, &format!("{path}[{i}]"));
                }
            }
            _ => {}
        }
    }
    for name in ["minimal.toml", "two-sites.toml"] {
        let s: Scenario = parse_scenario(&scenarios_dir().join(name)).unwrap().scenario;
        let mut weibull = s.clone();
        weibull.failure_law = macromodule::failure::LifetimeLaw::Weibull { shape: 1.5 };
        for s in [s, weibull] {
            check(&serde_json::to_value(&s).unwrap(), &schema, defs, "");
        }
    }
}
