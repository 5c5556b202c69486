use macromodule::econ::{
    downtime_model, maintenance_cost, tco, Architecture, ContainerCondition, CostBreakdown, FacilityParams,
    GeneratorUnit, MaintenancePolicy, TcoInputs,
};
use macromodule::failure::{expected_capacity, failure_rate};
use macromodule::model::{areal_system_density, capacity_fraction, power_density, CostShares, ModuleSpec};
use macromodule::power_floor::{air_cooled_floor_utilization, mismatch_cost, provisioning_mismatch};
use macromodule::{Exact, Preset, Scalar};
use proptest::prelude::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale == 0.0 || (a - b).abs() <= tol * scale
}

prop_compose! {
    fn tco_inputs()(
        arch_modular in any::<bool>(),
        power_mw in 0.5f64..50.0,
        cost_per_watt in 1.0f64..20.0,
        pe in 0.0f64..0.6, bld in 0.0f64..0.4,
        gens in 0u32..20, gen_price in 0.0f64..3e6,
        purchased in 0.0f64..200.0,
        unit_price in 1_000.0f64..3_000.0,
        integration in 0.0f64..0.3,
        serviced in 0.0f64..1e6,
        kw in 0.0f64..20_000.0,
        overhead in 0.0f64..1.0,
        price in 0.0f64..0.3,
        admin in 0.0f64..1e6,
        recycled in 0.0f64..100.0,
        recycle_cost in 0.0f64..20_000.0,
        relocation in 0.0f64..1e6,
        horizon in 0.0f64..10.0,
    ) -> (Architecture, TcoInputs<f64>) {
        let arch = if arch_modular { Architecture::Modular } else { Architecture::Conventional };
        let mut module: ModuleSpec<f64> = Preset::Baseline20.spec();
        module.system.unit_price = unit_price;
        let inputs = TcoInputs {
            facilities: vec![FacilityParams {
                power_capacity_mw: power_mw,
                cost_per_watt,
                shares: CostShares { power_equipment: pe, building: bld, other: 1.0 - pe - bld },
                generator: GeneratorUnit { rating_mw: 2.5, price: gen_price },
                generator_count: gens,
            }],
            module,
            modules_purchased: purchased,
            condition: ContainerCondition::New,
            integration_fraction: integration,
            maintenance: if arch_modular { MaintenancePolicy::none() } else { MaintenancePolicy::field_service() },
            serviced_system_years: serviced,
            mean_it_power_kw: kw,
            cooling_overhead: overhead,
            energy_price: price,
            admin_staff_per_year: admin,
            modules_recycled: recycled,
            recycle_cost_per_module: recycle_cost,
            relocation_cost: relocation,
            horizon,
        };
        (arch, inputs)
    }
}

/// Multiplies every monetary input by `k`; fractions and counts stay put.
fn scale_prices(inputs: &TcoInputs<f64>, k: f64) -> TcoInputs<f64> {
    let mut s = inputs.clone();
    for f in &mut s.facilities {
        f.cost_per_watt *= k;
        f.generator.price *= k;
    }
    s.module.system.unit_price *= k;
    s.module.container_price_new *= k;
    s.module.container_price_remanufactured *= k;
    s.energy_price *= k;
    s.admin_staff_per_year *= k;
    s.recycle_cost_per_module *= k;
    s.relocation_cost *= k;
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn breakdown_total_is_component_sum((arch, inputs) in tco_inputs()) {
        let b = tco(arch, &inputs).unwrap();
        prop_assert!(rel_close(b.total, b.component_sum(), 1e-6));
        prop_assert!(b.components().iter().all(|&(_, v)| v >= 0.0));
    }

    #[test]
    fn breakdown_is_homogeneous_in_prices((arch, inputs) in tco_inputs(), k in 0.01f64..100.0) {
        let b = tco(arch, &inputs).unwrap();
        let scaled = tco(arch, &scale_prices(&inputs, k)).unwrap();
        for ((name, x), (_, y)) in b.components().iter().zip(scaled.components().iter()) {
            prop_assert!(rel_close(x * k, *y, 1e-9), "{name}: {} vs {}", x * k, y);
        }
        prop_assert!(rel_close(b.total * k, scaled.total, 1e-9));
    }

    #[test]
    fn maintenance_is_linear(price in 0.0f64..5_000.0, n in 0.0f64..5_000.0, years in 0.0f64..10.0, k in 0.0f64..10.0) {
        let p = MaintenancePolicy::field_service();
        let base = maintenance_cost(&p, price, n, years);
        prop_assert!(rel_close(maintenance_cost(&p, price, n, years * k), base * k, 1e-12));
        prop_assert!(rel_close(maintenance_cost(&p, price, n * k, years), base * k, 1e-12));
        prop_assert!(rel_close(maintenance_cost(&p, price * k, n, years), base * k, 1e-12));
    }

    #[test]
    fn capacity_fraction_is_monotone(n in 1u32..5_000, a in 0u32..5_000, b in 0u32..5_000) {
        let (lo, hi) = (a.min(b).min(n), a.max(b).min(n));
        let f_lo: f64 = capacity_fraction(n, lo).unwrap();
        let f_hi: f64 = capacity_fraction(n, hi).unwrap();
        prop_assert!(f_hi <= f_lo);
        prop_assert_eq!(f_lo == 1.0, lo == 0);
        let exact: Exact = capacity_fraction(n, lo).unwrap();
        prop_assert!((exact.to_f64_lossy() - f_lo).abs() <= 1e-12);
    }

    #[test]
    fn downtime_never_exceeds_base(base in 0.0f64..1_000.0, share in 0.0f64..=1.0, elim in 0.0f64..=1.0) {
        let d = downtime_model(base, share, elim).unwrap();
        prop_assert!(d <= base);
        if share * elim == 0.0 {
            prop_assert_eq!(d, base);
        }
    }

    #[test]
    fn mismatch_is_zero_on_diagonal_and_one_sided(design in 1.0f64..1_000.0, realized in 0.0f64..1_000.0) {
        let o = provisioning_mismatch(design, design).unwrap();
        prop_assert_eq!(o.stranded_power_fraction, 0.0);
        prop_assert_eq!(o.unusable_floor_fraction, 0.0);
        let o = provisioning_mismatch(design, realized).unwrap();
        prop_assert!(o.stranded_power_fraction == 0.0 || o.unusable_floor_fraction == 0.0);
        prop_assert!((0.0..=1.0).contains(&o.stranded_power_fraction));
        prop_assert!((0.0..=1.0).contains(&o.unusable_floor_fraction));
    }

    #[test]
    fn mismatch_is_continuous(design in 1.0f64..1_000.0, realized in 0.0f64..1_000.0) {
        let eps = 1e-7;
        let a = provisioning_mismatch(design, realized).unwrap();
        let b = provisioning_mismatch(design, realized + eps).unwrap();
        let c = provisioning_mismatch(design + eps, realized).unwrap();
        for o in [b, c] {
            prop_assert!((a.stranded_power_fraction - o.stranded_power_fraction).abs() < 1e-6);
            prop_assert!((a.unusable_floor_fraction - o.unusable_floor_fraction).abs() < 1e-6);
        }
    }

    #[test]
    fn stranded_power_costs_more_than_wasted_floor(
        m_pct in 1i64..100, pe_pct in 2i64..90, bld_pct in 1i64..50,
    ) {
        prop_assume!(pe_pct > bld_pct && pe_pct + bld_pct <= 100);
        let params = FacilityParams::<Exact> {
            shares: CostShares::new(
                Exact::new(pe_pct, 100),
                Exact::new(bld_pct, 100),
                Exact::new(100 - pe_pct - bld_pct, 100),
            ).unwrap(),
            ..Default::default()
        };
        let facility = macromodule::econ::facility_capex(&params);
        let m = Exact::new(m_pct, 100);
        let zero = provisioning_mismatch(Exact::from_integer(1), Exact::from_integer(1)).unwrap();
        let s = mismatch_cost(&macromodule::power_floor::ProvisioningOutcome { stranded_power_fraction: m, ..zero }, &facility);
        let w = mismatch_cost(&macromodule::power_floor::ProvisioningOutcome { unusable_floor_fraction: m, ..zero }, &facility);
        prop_assert!(s.stranded_cost > w.wasted_floor_cost);
    }

    #[test]
    fn floor_utilization_decreases(a in 0.0f64..50.0, d in 0.001f64..50.0) {
        let u1 = air_cooled_floor_utilization(a).unwrap();
        let u2 = air_cooled_floor_utilization(a + d).unwrap();
        prop_assert!(u2 < u1);
        prop_assert!(u1 > 0.0 && u1 <= 1.0);
    }

    #[test]
    fn rate_and_expectation_agree(p in 0.0f64..0.99) {
        prop_assert!((expected_capacity(p, 1.0).unwrap() - (1.0 - p)).abs() <= 1e-12);
        let lam = failure_rate(p).unwrap();
        prop_assert!((expected_capacity(p, 2.0).unwrap() - (-2.0 * lam).exp()).abs() <= 1e-12);
    }
}

#[test]
fn density_identity_in_f32_and_f64() {
    for preset in Preset::ALL {
        let s: ModuleSpec<f64> = preset.spec();
        assert!(rel_close(power_density(&s), areal_system_density(&s) * s.system.power_draw, 1e-12));
        let s: ModuleSpec<f32> = preset.spec();
        let lhs = power_density(&s);
        let rhs = areal_system_density(&s) * s.system.power_draw;
        assert!((lhs - rhs).abs() <= 1e-3 * lhs.max(1.0));
    }
}

/// No architecture wins unconditionally: with expensive containers and free
/// field service the conventional build is cheaper, with the usual 25% rate
/// and cheap containers the modular build is.
#[test]
fn architecture_ranking_flips_with_maintenance_rate() {
    let modular_minus_conventional = |container_price: f64, rate: f64| {
        let mut module: ModuleSpec<f64> = Preset::Baseline20.spec();
        module.container_price_new = container_price;
        let base = TcoInputs {
            facilities: vec![FacilityParams::default()],
            module,
            modules_purchased: 10.0,
            condition: ContainerCondition::New,
            integration_fraction: 0.0,
            maintenance: MaintenancePolicy::none(),
            serviced_system_years: 30_000.0,
            mean_it_power_kw: 2_500.0,
            cooling_overhead: 0.35,
            energy_price: 0.07,
            admin_staff_per_year: 0.0,
            modules_recycled: 10.0,
            recycle_cost_per_module: 5_000.0,
            relocation_cost: 0.0,
            horizon: 3.0,
        };
        let conv = TcoInputs {
            maintenance: MaintenancePolicy { rate, ..MaintenancePolicy::field_service() },
            cooling_overhead: 0.5,
            modules_recycled: 0.0,
            ..base.clone()
        };
        let m: CostBreakdown<f64> = tco(Architecture::Modular, &base).unwrap();
        let c = tco(Architecture::Conventional, &conv).unwrap();
        m.total - c.total
    };
    let at_zero = modular_minus_conventional(2_000_000.0, 0.0);
    let at_quarter = modular_minus_conventional(1_950.0, 0.25);
    assert!(at_zero > 0.0, "{at_zero}");
    assert!(at_quarter < 0.0, "{at_quarter}");
}
