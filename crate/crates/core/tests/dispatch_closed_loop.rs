//! Receding-horizon dispatch against simple references.

use storopt::dispatch::{baseline_dispatch, run_mpc, ForecastNoise, MpcOptions, SolveMode};
use storopt::models::{Assets, BesSpec, ChillerCurves, ChillerSpec, TesSpec};
use storopt::plant::{EventKind, PlantConfig};
use storopt::profiles::{synth_profiles, Climate, SynthTemplate};
use storopt::series::StepSeries;
use storopt::tariff::Tariff;

fn series(tariff: &Tariff, days: u32, seed: u64) -> StepSeries {
    let mut tpl = SynthTemplate::new(800.0, 600.0, Climate::hot_summer());
    tpl.start_day = 200;
    tpl.days = days;
    StepSeries::build(&synth_profiles(seed, &tpl).unwrap(), tariff, &PlantConfig::default()).unwrap()
}

fn assets() -> Assets {
    let curves = ChillerCurves::example();
    Assets {
        base_chiller: ChillerSpec::new(900.0, 5.5, curves.clone()),
        tes_chiller: ChillerSpec::new(250.0, 3.5, curves),
        tes: TesSpec::new(2000.0, 0.0, 1.0),
        bes: BesSpec {
            capacity_kwh: 400.0,
            power_max_kw: 100.0,
            ..BesSpec::none()
        },
    }
}

#[test]
fn without_storage_the_controller_reproduces_the_baseline() {
    let tariff = Tariff::two_tier(0.08, 0.3, 12.0, 18.0, 19.0);
    let s = series(&tariff, 3, 1);
    let mut a = assets();
    a.tes = TesSpec::none();
    a.tes_chiller.capacity = 0.0;
    a.bes = BesSpec::none();
    let mpc = run_mpc(&s, &a, &tariff, &MpcOptions::default()).unwrap();
    let base = baseline_dispatch(&s, &a.base_chiller, &tariff).unwrap();
    for (m, b) in mpc.rows.iter().zip(&base.rows) {
        assert!((m.p_total_kw - b.p_total_kw).abs() < 1e-9, "{} vs {}", m.p_total_kw, b.p_total_kw);
    }
    assert!((mpc.bill.total - base.bill.total).abs() < 1e-6);
    assert_eq!(mpc.tes_throughput_kwh() + mpc.bes_throughput_kwh(), 0.0);
}

#[test]
fn realised_power_tracks_the_plan() {
    let tariff = Tariff::two_tier(0.08, 0.3, 12.0, 18.0, 19.0);
    let s = series(&tariff, 3, 2);
    let trace = run_mpc(&s, &assets(), &tariff, &MpcOptions::default()).unwrap();
    assert_eq!(trace.count_events(EventKind::Fallback), 0);
    assert_eq!(trace.unmet_kwh(), 0.0);
    assert!(trace.tes_throughput_kwh() > 0.0);
    // The plan uses cuts, the plant the full curves; cuts never overestimate.
    for r in &trace.rows {
        let planned = r.planned_p_total_kw.unwrap();
        assert!(r.p_total_kw >= planned - 1e-6, "{} < {planned}", r.p_total_kw);
        assert!(r.p_total_kw - planned < 0.05 * r.p_total_kw + 1.0);
    }
}

#[test]
fn forecast_noise_is_reproducible_and_still_serves_the_load() {
    let tariff = Tariff::two_tier(0.08, 0.3, 12.0, 18.0, 19.0);
    let s = series(&tariff, 2, 3);
    let opts = MpcOptions {
        forecast_noise: Some(ForecastNoise {
            relative_std: 0.1,
            seed: 42,
        }),
        ..MpcOptions::default()
    };
    let a = run_mpc(&s, &assets(), &tariff, &opts).unwrap();
    let b = run_mpc(&s, &assets(), &tariff, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.unmet_kwh(), 0.0);
    let perfect = run_mpc(&s, &assets(), &tariff, &MpcOptions::default()).unwrap();
    assert_ne!(a.rows, perfect.rows);
}

#[test]
fn longer_control_interval_solves_less_often() {
    let tariff = Tariff::two_tier(0.08, 0.3, 12.0, 18.0, 19.0);
    let s = series(&tariff, 2, 4);
    let every = run_mpc(&s, &assets(), &tariff, &MpcOptions::default()).unwrap();
    let opts = MpcOptions {
        apply_steps: 4,
        ..MpcOptions::default()
    };
    let blocky = run_mpc(&s, &assets(), &tariff, &opts).unwrap();
    assert_eq!(every.solves, s.len());
    assert_eq!(blocky.solves, s.len() / 4);
    assert_eq!(blocky.rows.len(), s.len());
}

#[test]
fn mixed_integer_mode_keeps_running_chillers_above_minimum_load() {
    let tariff = Tariff::two_tier(0.08, 0.3, 12.0, 18.0, 19.0);
    let s = series(&tariff, 1, 5);
    let mut a = assets();
    a.bes = BesSpec::none();
    a.tes_chiller.min_plr = 0.3;
    let mut opts = MpcOptions {
        horizon: 8,
        ..MpcOptions::default()
    };
    opts.dispatch.mode = SolveMode::Milp;
    opts.dispatch.breakpoints = 4;
    let trace = run_mpc(&s, &a, &tariff, &opts).unwrap();
    assert_eq!(trace.count_events(EventKind::Fallback), 0);
    for (t, r) in trace.rows.iter().enumerate() {
        let min = 0.3 * a.tes_chiller.q_avail(&s.op_tes[t]).unwrap();
        // Gross output: into the tank plus straight to the load.
        let q = r.q_tes_charge_kw + r.q_tes_direct_kw;
        assert!(q == 0.0 || q >= min - 1e-6, "step {t}: {q}");
    }
}

#[test]
fn undersized_plant_reports_infeasibility() {
    let tariff = Tariff::flat(0.1, 0.0);
    let s = series(&tariff, 1, 6);
    let small = ChillerSpec::new(100.0, 5.5, ChillerCurves::example());
    assert!(baseline_dispatch(&s, &small, &tariff).is_err());
}
