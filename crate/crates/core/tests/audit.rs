use approx::assert_relative_eq;
use dcpbc::audit::{
    compare_runs, energy_consistency_check, passivity_check, recompute_energy, regulation_metrics, scenario_checks,
    EnergyAccumulator, Recovery,
};
use dcpbc::engine::{run_scenario, InitialCondition, SimState};
use dcpbc::ph::EnergyState;
use dcpbc::plant::{GridProfile, Interpolation, LoadProfile, PlantParams};
use dcpbc::{Ab, ControllerConfig, ControllerKind, Error, RunResult, Sample, Scenario};

fn fine(name: &str, duration: f64) -> Scenario {
    let mut s = Scenario::steady(name, duration);
    s.decimation = 1;
    s
}

#[test]
fn accumulator_is_exact_on_a_cubic_energy() {
    // H = t³ has Ḣ = 3t², which Simpson integrates exactly.
    let mut acc = EnergyAccumulator::new(vec![], 0.0, 0.0);
    for k in 0..50 {
        let t = k as f64 * 0.01;
        acc.push(t, t.powi(3), 3.0 * t * t, 1e9);
    }
    let a = acc.finish();
    assert_eq!(a.points, 50);
    assert_eq!(a.stencils, 48);
    assert_eq!(a.excluded, 0);
    assert!(a.max_abs_mismatch < 1e-12, "{}", a.max_abs_mismatch);
    // The pointwise comparison keeps the O(Δ²) term: Δ² = 1e-4.
    assert_relative_eq!(a.max_abs_pointwise, 1e-4, max_relative = 1e-6);
    assert_eq!(a.supply_violations, 0);
}

#[test]
fn accumulator_skips_breakpoints_and_counts_excess() {
    let mut acc = EnergyAccumulator::new(vec![0.035], 0.5, 0.0);
    for k in 0..10 {
        let t = k as f64 * 0.01;
        let supply = if k == 4 { 0.0 } else { 100.0 };
        acc.push(t, t, 1.0, supply);
    }
    let a = acc.finish();
    // Stencils centred at 0.03 and 0.04 contain the breakpoint.
    assert_eq!(a.excluded, 2);
    assert_eq!(a.stencils, 6);
    assert_eq!(a.supply_violations, 1);
}

#[test]
fn equilibrium_trajectory_balances() {
    let s = fine("eq", 0.005);
    let r = run_scenario(&s).unwrap();
    let c = energy_consistency_check(&r.records, &s.plant, &s.controller, &s.breakpoints(), 1e-4).unwrap();
    assert!(c.passes, "{}", c.max_rel_mismatch);
    assert!(c.flagged.is_empty());
    let p = passivity_check(&r.records, s.controller.kind, 1e-6 * s.plant.s_base);
    assert_eq!(p.violations, 0);
    assert!(p.controller_terms);
}

#[test]
fn recomputed_energy_matches_recorded_values() {
    let mut s = fine("rec", 0.002);
    s.load = LoadProfile::new(vec![0.0, 0.001], vec![1.0, 1.3], Interpolation::Linear).unwrap();
    let r = run_scenario(&s).unwrap();
    for rec in &r.records {
        let (h, rate) = recompute_energy(rec, &s.plant, &s.controller).unwrap();
        assert_relative_eq!(h, rec.hamiltonian.total, max_relative = 1e-12);
        assert!((rate.h_cl_rate - rec.rates.h_cl_rate).abs() <= 1e-9 * s.plant.s_base);
    }
}

#[test]
fn corrupted_sample_is_flagged() {
    let s = fine("fault", 0.005);
    let mut records = run_scenario(&s).unwrap().records;
    let k = 200;
    records[k].v_dc *= 1.01;
    let c = energy_consistency_check(&records, &s.plant, &s.controller, &s.breakpoints(), 1e-4).unwrap();
    assert!(!c.passes);
    assert!(!c.flagged.is_empty());
    assert!(c.flagged.iter().all(|&j| j + 1 >= k && j <= k + 1), "{:?}", c.flagged);
}

#[test]
fn consistency_check_needs_three_records() {
    let s = fine("short", 0.005);
    let r = run_scenario(&s).unwrap();
    let e = energy_consistency_check(&r.records[..2], &s.plant, &s.controller, &[], 1e-4);
    assert!(matches!(e, Err(Error::TooShort { len: 2, need: 3 })));
}

#[test]
fn free_decay_is_monotone() {
    let mut s = fine("decay", 0.01);
    s.controller.kind = ControllerKind::Idle;
    s.grid = GridProfile::constant(0.0, 60.0);
    s.load = LoadProfile::constant(0.0);
    s.initial = InitialCondition::Explicit(SimState {
        energy: EnergyState {
            phi: Ab::new(0.02, 0.01),
            q_dc: 8.0,
            ..EnergyState::default()
        },
        ..SimState::default()
    });
    let r = run_scenario(&s).unwrap();
    let p = passivity_check(&r.records, s.controller.kind, 0.0);
    assert_eq!(p.violations, 0);
    assert!(p.max_rel_increase <= 0.0);
    assert!(!p.controller_terms);
    assert!(r.energy.max_rel_increase <= 1e-9);
}

#[test]
fn lossless_rate_isolates_each_term() {
    let mut s = fine("lossless", 0.01);
    s.plant = PlantParams {
        r_g: 0.0,
        r_f: 0.0,
        eta: 1.0,
        ..PlantParams::default()
    };
    s.controller = ControllerConfig::defaults_for(&s.plant);
    s.load = LoadProfile::new(vec![0.0, 0.004], vec![1.0, 1.2], Interpolation::Linear).unwrap();
    let r = run_scenario(&s).unwrap();
    let g = &s.controller.ph;
    for rec in &r.records {
        let i = rec.state.energy.phi / s.plant.l_tot();
        let supply = rec.v_g.dot(i);
        let tau_dc = -(g.k_v * rec.e_v + g.a_v * rec.state.energy.zeta_v);
        let tau_ac = -(rec.e_i * g.k_i + rec.state.energy.zeta_i * g.m_i);
        let inflow = -(rec.e_v * tau_dc + rec.e_i.dot(tau_ac));
        let expected =
            supply - g.k_v * rec.e_v * rec.e_v - g.k_i * rec.e_i.norm_sq() - rec.p_load + inflow;
        let got = rec.rates.h_cl_rate;
        assert!((got - expected).abs() <= 1e-9 * s.plant.s_base, "t = {}: {got} vs {expected}", rec.t);
        assert_eq!(rec.rates.plant.r_g_loss, 0.0);
        assert_eq!(rec.rates.plant.r_f_loss, 0.0);
        assert!(rec.rates.plant.converter_loss.abs() <= 1e-9 * s.plant.s_base);
    }
}

fn flat(v: f64, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|k| Sample {
            t: k as f64 * 1e-3,
            v_dc: v,
            ..Sample::default()
        })
        .collect()
}

#[test]
fn regulation_of_a_flat_trace() {
    let r = regulation_metrics(&flat(800.0, 10), 800.0, 0.005, 0.0).unwrap();
    assert_eq!(r.max_deviation_pu, 0.0);
    assert_eq!(r.recovery, Recovery::Recovered(0.0));
    assert!(regulation_metrics(&[], 800.0, 0.005, 0.0).is_err());
}

#[test]
fn regulation_recovery_time_and_unrecovered() {
    let mut trace = flat(800.0, 10);
    trace[3].v_dc = 790.0;
    trace[4].v_dc = 795.0;
    let r = regulation_metrics(&trace, 800.0, 0.005, 0.002).unwrap();
    assert_relative_eq!(r.undershoot_pu, 0.0125, max_relative = 1e-12);
    assert_eq!(r.overshoot_pu, 0.0);
    // Last sample outside 0.5% is at 4 ms; the band is held from 5 ms.
    assert_relative_eq!(r.recovery.time().unwrap(), 0.003, max_relative = 1e-12);
    trace[9].v_dc = 810.0;
    let r = regulation_metrics(&trace, 800.0, 0.005, 0.002).unwrap();
    assert_eq!(r.recovery, Recovery::Unrecovered);
    assert_relative_eq!(r.max_deviation_pu, 0.0125, max_relative = 1e-12);
}

fn short_run(name: &str, kind: ControllerKind) -> RunResult {
    let mut s = Scenario::steady(name, 0.02);
    s.controller.kind = kind;
    run_scenario(&s).unwrap()
}

#[test]
fn comparing_identical_runs_gives_zero_deltas() {
    let a = short_run("same", ControllerKind::Ph);
    let c = compare_runs(&a, &a).unwrap();
    for m in ["max_deviation_pu", "undershoot_pu", "overshoot_pu", "recovery_s"] {
        assert_eq!(c.delta(m), Some(0.0), "{m}");
    }
    assert!(c.to_csv().starts_with("metric,ph,ph,delta\n"));
}

#[test]
fn comparing_different_scenarios_is_an_error() {
    let a = short_run("a", ControllerKind::Ph);
    let b = short_run("b", ControllerKind::Pi);
    assert!(matches!(compare_runs(&a, &b), Err(Error::ScenarioMismatch { .. })));
}

#[test]
fn diverging_pi_run_still_renders() {
    let mut s = Scenario::steady("stress", 0.3);
    s.load = LoadProfile::new(vec![0.0, 0.05], vec![1.0, 4.0], Interpolation::ZeroOrderHold).unwrap();
    s.check.recovery_band_pu = Some(0.005);
    let ph = run_scenario(&s).unwrap();
    s.controller.kind = ControllerKind::Pi;
    let pi = run_scenario(&s).unwrap();
    assert_eq!(pi.regulation.unwrap().recovery, Recovery::Unrecovered);
    let c = compare_runs(&ph, &pi).unwrap();
    let csv = c.to_csv();
    assert!(csv.contains("unrecovered"), "{csv}");
    assert!(c.delta("recovery_s").is_none());
    assert!(!format!("{c}").is_empty());
    let checks = scenario_checks(&pi, &s.check);
    assert!(checks.iter().any(|c| !c.passed));
}
