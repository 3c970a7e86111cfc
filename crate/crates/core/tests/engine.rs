use approx::assert_relative_eq;
use dcpbc::audit::Recovery;
use dcpbc::engine::{
    cold_start, equilibrium_initializer, equilibrium_residual, equilibrium_state, run_scenario, run_sweep,
    InitialCondition, SimState, STATE_LEN,
};
use dcpbc::integrator::rk4_step;
use dcpbc::ph::EnergyState;
use dcpbc::plant::{GridProfile, GridSegment, Interpolation, LoadProfile, PlantParams};
use dcpbc::{Ab, ControllerKind, Error, Scenario};

#[test]
fn rk4_leaves_constant_state_alone() {
    let x = rk4_step(|_, _: &[f64; 3]| Ok([0.0; 3]), 0.0, &[1.0, -2.0, 3.5], 0.1).unwrap();
    assert_eq!(x, [1.0, -2.0, 3.5]);
}

#[test]
fn rk4_one_step_on_exponential() {
    let h = 0.1f64;
    let x = rk4_step(|_, x: &[f64; 1]| Ok([-x[0]]), 0.0, &[1.0], h).unwrap()[0];
    let taylor = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
    assert_relative_eq!(x, taylor, max_relative = 1e-15);
    assert!((x - (-h).exp()).abs() < h.powi(5) / 120.0);
    assert!((x - 0.9048375).abs() < 1e-7);
}

#[test]
fn state_array_round_trip() {
    let s = SimState {
        energy: EnergyState {
            phi: Ab::new(1.0, 2.0),
            q_dc: 3.0,
            zeta_v: 4.0,
            zeta_i: Ab::new(5.0, 6.0),
        },
        s: Ab::new(7.0, 8.0),
        v_f: Ab::new(9.0, 10.0),
    };
    let a = s.to_array();
    assert_eq!(a.len(), STATE_LEN);
    assert_eq!(SimState::from_array(&a), s);
}

#[test]
fn scenario_validation_rejects_bad_timing() {
    let mut s = Scenario::steady("x", 0.1);
    s.step = 0.0;
    assert!(matches!(s.validate(), Err(Error::Scenario(_))));
    let mut s = Scenario::steady("x", 0.1);
    s.decimation = 0;
    assert!(s.validate().is_err());
    let mut s = Scenario::steady("x", 0.1);
    s.duration = 3.3e-6;
    assert!(s.validate().is_err());
    let mut s = Scenario::steady("x", 0.1);
    s.duration = 15e-6;
    assert!(s.validate().is_err());
    assert!(Scenario::steady("x", 0.1).validate().is_ok());
}

#[test]
fn zero_duration_gives_empty_result() {
    let r = run_scenario(&Scenario::steady("empty", 0.0)).unwrap();
    assert!(r.records.is_empty());
    assert!(r.regulation.is_none());
    assert!(r.failure.is_none());
    assert_eq!(r.steps_completed, 0);
    assert_eq!(r.energy.points, 0);
}

#[test]
fn zero_load_equilibrium_is_at_rest() {
    let mut s = Scenario::steady("idle-load", 0.1);
    s.load = LoadProfile::constant(0.0);
    let x = equilibrium_state(&s).unwrap();
    let i = x.energy.current(&s.plant);
    assert!(i.norm() < 1e-6 * s.plant.i_base(), "{}", i.norm());
    assert_relative_eq!(x.energy.v_dc(&s.plant), 800.0, max_relative = 1e-12);
}

#[test]
fn lossless_equilibrium_carries_base_power() {
    let mut s = Scenario::steady("lossless", 0.1);
    s.plant = PlantParams {
        r_g: 0.0,
        r_f: 0.0,
        eta: 1.0,
        ..PlantParams::default()
    };
    s.controller = dcpbc::ControllerConfig::defaults_for(&s.plant);
    let x = equilibrium_state(&s).unwrap();
    let i = x.energy.current(&s.plant);
    let peak = s.plant.nominal_peak();
    // Grid voltage at t = 0 lies on the alpha axis.
    assert_relative_eq!(i.alpha, s.plant.s_base / peak, max_relative = 1e-9);
    assert!(equilibrium_residual(&s, &x).unwrap() <= 1e-6);
}

#[test]
fn equilibrium_residual_is_small_for_each_controller() {
    for kind in [ControllerKind::Ph, ControllerKind::Pi] {
        let mut s = Scenario::steady("eq", 0.1);
        s.controller.kind = kind;
        let x = equilibrium_state(&s).unwrap();
        let r = equilibrium_residual(&s, &x).unwrap();
        assert!(r <= 1e-6, "{kind}: {r}");
    }
}

#[test]
fn unreachable_operating_point_falls_back_to_cold_start() {
    let mut s = Scenario::steady("overload", 0.1);
    s.load = LoadProfile::constant(60.0);
    assert!(equilibrium_state(&s).is_err());
    assert_eq!(equilibrium_initializer(&s), cold_start(&s).unwrap());
}

#[test]
fn steady_ph_run_holds_the_link_voltage() {
    let mut s = Scenario::steady("steady", 0.2);
    s.check.max_deviation_pu = 1e-3;
    let r = run_scenario(&s).unwrap();
    assert!(r.succeeded());
    let worst = r
        .records
        .iter()
        .map(|x| (x.v_dc / 800.0 - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
    assert_eq!(r.regulation.unwrap().max_deviation_pu, worst);
    assert_eq!(r.records.len(), 20_000 / 10 + 1);
    assert_eq!(r.guard_events, 0);
}

#[test]
fn steady_pi_run_holds_the_link_voltage() {
    let mut s = Scenario::steady("steady-pi", 0.2);
    s.controller.kind = ControllerKind::Pi;
    let r = run_scenario(&s).unwrap();
    assert!(r.succeeded());
    assert!(r.regulation.unwrap().max_deviation_pu <= 1e-3);
}

#[test]
fn load_step_dips_then_recovers() {
    let mut s = Scenario::steady("step", 0.8);
    s.load = LoadProfile::new(vec![0.0, 0.5], vec![1.0, 1.5], Interpolation::ZeroOrderHold).unwrap();
    s.check.recovery_band_pu = Some(0.005);
    let r = run_scenario(&s).unwrap();
    let reg = r.regulation.unwrap();
    assert!(reg.undershoot_pu > 1e-3);
    assert!(matches!(reg.recovery, Recovery::Recovered(t) if t < 0.2));
    assert_eq!(reg.event_t, 0.5);
    let after: Vec<_> = r.records.iter().filter(|x| x.t > 0.5 && x.t <= 0.55).collect();
    assert!(after.iter().any(|x| x.rates.h_cl_rate < 0.0));
}

#[test]
fn grid_collapse_stops_with_partial_trajectory() {
    let mut s = Scenario::steady("collapse", 0.05);
    s.grid = GridProfile::new(vec![
        GridSegment::nominal(0.0, 1.0, 60.0),
        GridSegment::nominal(0.01, 0.0, 60.0),
    ])
    .unwrap();
    let r = run_scenario(&s).unwrap();
    let f = r.failure.as_ref().expect("run must stop");
    assert!(f.t > 0.01 && f.t < 0.05, "{}", f.t);
    assert!(!r.records.is_empty());
    assert!(r.records.last().unwrap().t < 0.05);
    assert_eq!(r.regulation.unwrap().recovery, Recovery::Unrecovered);
}

#[test]
fn idle_free_decay_never_gains_energy() {
    let mut s = Scenario::steady("decay", 0.02);
    s.controller.kind = ControllerKind::Idle;
    s.grid = GridProfile::constant(0.0, 60.0);
    s.load = LoadProfile::constant(0.0);
    s.decimation = 1;
    s.initial = InitialCondition::Explicit(SimState {
        energy: EnergyState {
            phi: Ab::new(0.03, -0.02),
            q_dc: 8.0,
            ..EnergyState::default()
        },
        ..SimState::default()
    });
    let r = run_scenario(&s).unwrap();
    assert!(r.succeeded());
    for w in r.records.windows(2) {
        let (a, b) = (w[0].hamiltonian.total, w[1].hamiltonian.total);
        assert!(b <= a * (1.0 + 1e-9), "t = {}", w[1].t);
    }
    let first = r.records.first().unwrap().hamiltonian.line;
    let last = r.records.last().unwrap().hamiltonian.line;
    // Line energy decays at 2 R_tot / L_tot.
    let p = &s.plant;
    let expected = first * (-2.0 * p.r_tot() / p.l_tot() * 0.02).exp();
    assert_relative_eq!(last, expected, max_relative = 1e-6);
    assert_eq!(r.energy.supply_violations, 0);
}

#[test]
fn sweep_keeps_input_order() {
    let runs: Vec<Scenario> = [0.5, 1.0, 1.2]
        .into_iter()
        .map(|p| {
            let mut s = Scenario::steady(format!("p{p}"), 0.01);
            s.load = LoadProfile::constant(p);
            s
        })
        .collect();
    let out = run_sweep(&runs);
    for (s, r) in runs.iter().zip(out) {
        let r = r.unwrap();
        assert_eq!(r.scenario, s.name);
        let p = r.records[0].p_load;
        assert_relative_eq!(p, s.load.at_watts(0.0, 5e5), max_relative = 1e-15);
    }
}

#[test]
fn runs_are_bitwise_repeatable() {
    let s = Scenario::steady("rep", 0.01);
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.records, b.records);
}
