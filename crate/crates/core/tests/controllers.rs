use approx::assert_relative_eq;
use dcpbc::controllers::ph::{
    controller_power_balance, dvoc_current_reference, inner_current_loop, outer_voltage_loop, ph_controller_step,
    PhGains, PhMeasurements, PhState,
};
use dcpbc::controllers::pi::{pi_controller_step, pi_current_loop, PiGains, PiMeasurements, PiState};
use dcpbc::integrator::rk4_step;
use dcpbc::plant::PlantParams;
use dcpbc::{Ab, ControllerKind, Error};
use proptest::prelude::*;

#[test]
fn outer_loop_examples() {
    assert_eq!(outer_voltage_loop(800.0, 800.0, 500.0, 100.0, 0.0, 0.0, 80.0).unwrap(), 500.0);
    let i: f64 = outer_voltage_loop(840.0, 800.0, 500.0, 100.0, 0.0, 0.0, 80.0).unwrap();
    assert_relative_eq!(i, 500.0 - 100.0 * 40.0 / 840.0, max_relative = 1e-15);
    assert!((i - 495.24).abs() < 5e-3);
    let r = outer_voltage_loop(50.0, 800.0, 500.0, 100.0, 0.0, 0.0, 80.0);
    assert!(matches!(r, Err(Error::Singularity { .. })));
}

#[test]
fn outer_loop_dc_port_identity() {
    // With i_conv = i_conv* the DC-link power is −k_v e_v when the integral term is off.
    let (v_dc, v_star, k_v, p_load) = (812.0, 800.0, 2000.0, 4e5);
    let i_load = p_load / v_dc;
    let i_conv = outer_voltage_loop(v_dc, v_star, i_load, k_v, 0.0, 0.0, 80.0).unwrap();
    let h_dc_rate = v_dc * (i_conv - i_load);
    assert_relative_eq!(h_dc_rate, -k_v * (v_dc - v_star), max_relative = 1e-12);
}

#[test]
fn dvoc_examples() {
    let i = dvoc_current_reference(1000.0, 0.0, Ab::new(100.0, 0.0), 1.0).unwrap();
    assert_eq!((i.alpha, i.beta), (10.0, 0.0));
    let v = Ab::new(0.0, 2.0);
    let i = dvoc_current_reference(0.0, 2.0, v, 1.0).unwrap();
    assert_relative_eq!(i.alpha, -1.0, max_relative = 1e-15);
    assert_eq!(i.beta, 0.0);
    assert_relative_eq!(v.quarter_turn().dot(i), 2.0, max_relative = 1e-15);
    let v = Ab::new(313.0f64, -117.0);
    let i = dvoc_current_reference(5e4, 0.0, v, 1.0).unwrap();
    assert!((v.alpha * i.beta - v.beta * i.alpha).abs() < 1e-12 * v.norm() * i.norm());
    assert!(matches!(
        dvoc_current_reference(1.0, 0.0, Ab::new(0.1, 0.0), 1.0),
        Err(Error::GridCollapse { .. })
    ));
}

#[test]
fn inner_loop_at_zero_error_is_feedforward_only() {
    let (i, v) = (Ab::new(120.0, -40.0), Ab::new(380.0, 25.0));
    let e = inner_current_loop(i, i, Ab::zero(), v, 2e-3, 30e-6, 2000.0, 0.0, Ab::zero());
    assert_relative_eq!(e.alpha, v.alpha - 2e-3 * i.alpha, max_relative = 1e-15);
    assert_relative_eq!(e.beta, v.beta - 2e-3 * i.beta, max_relative = 1e-15);
}

#[test]
fn inner_loop_error_decays_at_k_i() {
    let (r_f, l_f, k_i) = (2e-3, 30e-6, 2000.0);
    let i_star = Ab::new(400.0, 100.0);
    let v_ac = Ab::new(390.0, 0.0);
    // Filter KVL driven by the inner law with a frozen reference.
    let f = |_t: f64, x: &[f64; 2]| {
        let i = Ab::new(x[0], x[1]);
        let e = inner_current_loop(i, i_star, Ab::zero(), v_ac, r_f, l_f, k_i, 0.0, Ab::zero());
        let di = (v_ac - e - i * r_f) / l_f;
        Ok([di.alpha, di.beta])
    };
    let h = 1e-6;
    let n = (1.0 / k_i / h).round() as usize;
    let mut x = [i_star.alpha + 1.0, i_star.beta];
    for k in 0..n {
        x = rk4_step(f, k as f64 * h, &x, h).unwrap();
    }
    let err = (Ab::new(x[0], x[1]) - i_star).norm();
    assert!((err - (-1.0f64).exp()).abs() < 0.01 * (-1.0f64).exp(), "{err}");
}

fn plant() -> PlantParams<f64> {
    PlantParams::default()
}

fn nominal_measurements(p: &PlantParams<f64>) -> PhMeasurements<f64> {
    PhMeasurements {
        v_dc: 803.0,
        v_g: Ab::new(p.nominal_peak(), 0.0),
        i_f: Ab::new(1150.0, 30.0),
        i_load: 5e5 / 803.0,
    }
}

#[test]
fn proportional_mode_ignores_integrator_states() {
    let p = plant();
    let g = PhGains { a_v: 0.0, m_i: 0.0, ..PhGains::defaults_for(&p) };
    let m = nominal_measurements(&p);
    let base = PhState {
        v_f: Ab::new(p.nominal_peak(), 10.0),
        s: Ab::new(1100.0, 0.0),
        ..PhState::default()
    };
    let a = ph_controller_step(&m, &base, &g, &p).unwrap();
    let b = ph_controller_step(
        &m,
        &PhState {
            zeta_v: 37.0,
            zeta_i: Ab::new(-4.0, 9.0),
            ..base
        },
        &g,
        &p,
    )
    .unwrap();
    assert_eq!(a.e.alpha.to_bits(), b.e.alpha.to_bits());
    assert_eq!(a.e.beta.to_bits(), b.e.beta.to_bits());
    assert_eq!(a.rates.zeta_v, b.rates.zeta_v);
}

#[test]
fn controller_step_rates_are_the_integrator_laws() {
    let p = plant();
    let g = PhGains::defaults_for(&p);
    let m = nominal_measurements(&p);
    let x = PhState {
        zeta_v: 1e-3,
        zeta_i: Ab::zero(),
        s: Ab::new(1100.0, 5.0),
        v_f: Ab::new(p.nominal_peak() * 0.99, 3.0),
    };
    let s = ph_controller_step(&m, &x, &g, &p).unwrap();
    assert_eq!(s.rates.zeta_v, m.v_dc - g.v_dc_star);
    assert_eq!(s.rates.zeta_i, m.i_f - s.i_f_star);
    assert_relative_eq!(s.rates.s.alpha, (s.i_f_star.alpha - x.s.alpha) / g.tau_d, max_relative = 1e-12);
    // The node voltage returned satisfies the filter loop with the converter voltage chosen.
    let lhs = s.v_ac - s.e - m.i_f * p.r_f;
    assert_relative_eq!(lhs.alpha, p.l_f * s.slope.alpha, max_relative = 1e-9);
    assert_relative_eq!(lhs.beta, p.l_f * s.slope.beta, max_relative = 1e-9);
    // Active power drawn by the reference equals p*.
    assert_relative_eq!(x.v_f.dot(s.i_f_star), s.p_star, max_relative = 1e-12);
}

#[test]
fn pi_zero_error_returns_grid_feedforward() {
    let p = plant();
    let g = PiGains::tuned_for(&p);
    let theta = 0.7;
    let v_g = Ab::from_polar(p.nominal_peak(), theta);
    let m = PiMeasurements { v_dc: g.v_dc_star, v_g, i_f: Ab::zero() };
    let s = pi_controller_step(&m, &PiState::default(), &g, &p, theta, p.omega_nom()).unwrap();
    assert_relative_eq!(s.e.alpha, v_g.alpha, max_relative = 1e-12);
    assert_relative_eq!(s.e.beta, v_g.beta, max_relative = 1e-12);
    assert_eq!(s.i_d_star, 0.0);
    assert!(!s.saturated);
}

#[test]
fn pi_anti_windup_freezes_integrator() {
    let p = plant();
    let g = PiGains::tuned_for(&p);
    let m = PiMeasurements {
        v_dc: 500.0,
        v_g: Ab::new(p.nominal_peak(), 0.0),
        i_f: Ab::zero(),
    };
    let s = pi_controller_step(&m, &PiState::default(), &g, &p, 0.0, p.omega_nom()).unwrap();
    assert!(s.saturated);
    assert_eq!(s.i_d_star, g.current_limit);
    assert_eq!(s.rates.zeta_v, 0.0);
    // An error pulling back out of the limit integrates again.
    let back = PiMeasurements { v_dc: 900.0, ..m };
    let x = PiState { zeta_v: 10.0, ..PiState::default() };
    let s = pi_controller_step(&back, &x, &g, &p, 0.0, p.omega_nom()).unwrap();
    assert!(s.saturated);
    assert_eq!(s.rates.zeta_v, g.v_dc_star - 900.0);
}

#[test]
fn pi_current_step_matches_discrete_pi_oracle() {
    let p = plant();
    let g = PiGains::tuned_for(&p);
    let (l, r) = (p.l_tot(), p.r_tot());
    let i_ref = 100.0;
    let v_g = 390.0;

    // Library loop on the d-axis RL plant with the cross terms off, integrated by RK4.
    let f = |_t: f64, x: &[f64; 2]| {
        let (e, err) = pi_current_loop(
            Ab::new(x[0], 0.0),
            Ab::new(i_ref, 0.0),
            Ab::new(v_g, 0.0),
            Ab::new(x[1], 0.0),
            &g,
            l,
            0.0,
        );
        Ok([(v_g - e.alpha - r * x[0]) / l, err.alpha])
    };
    let h = 10e-6;
    let t_end: f64 = 2e-3;
    let n = (t_end / h).round() as usize;
    let mut x = [0.0, 0.0];
    let mut lib = vec![0.0];
    for k in 0..n {
        x = rk4_step(f, k as f64 * h, &x, h).unwrap();
        lib.push(x[0]);
    }

    // Independent PI difference equation, forward Euler on a fine grid.
    let sub = 1000;
    let dt = h / sub as f64;
    let (mut i, mut zeta) = (0.0f64, 0.0f64);
    let mut oracle = vec![0.0];
    for _ in 0..n {
        for _ in 0..sub {
            let err = i_ref - i;
            let u = g.kp_i * err + g.ki_i * zeta;
            i += dt * (u - r * i) / l;
            zeta += dt * err;
        }
        oracle.push(i);
    }
    for (k, (a, b)) in lib.iter().zip(&oracle).enumerate() {
        assert!((a - b).abs() < 1e-3 * i_ref, "step {k}: {a} vs {b}");
    }
    // Pole-zero cancellation leaves a first-order response at 2000 rad/s.
    let t = t_end;
    assert!((lib[n] - i_ref * (1.0 - (-2000.0 * t).exp())).abs() < 1e-3 * i_ref);
}

#[test]
fn controller_kind_parses() {
    for k in [ControllerKind::Ph, ControllerKind::Pi, ControllerKind::Idle] {
        assert_eq!(k.as_str().parse::<ControllerKind>().unwrap(), k);
    }
    assert!("pid".parse::<ControllerKind>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dvoc_projections_reproduce_references(
        mag in 10.0..1000.0f64, ang in -3.2..3.2f64,
        p_star in -1e6..1e6f64, q_star in -1e6..1e6f64,
    ) {
        let v = Ab::from_polar(mag, ang);
        let i = dvoc_current_reference(p_star, q_star, v, 1.0).unwrap();
        let scale = p_star.abs().max(q_star.abs()).max(1.0);
        prop_assert!((v.dot(i) - p_star).abs() <= 1e-12 * scale);
        prop_assert!((v.quarter_turn().dot(i) - q_star).abs() <= 1e-12 * scale);
    }

    #[test]
    fn controller_storage_is_passive_through_error_ports(
        e_v in -100.0..100.0f64, ea in -500.0..500.0f64, eb in -500.0..500.0f64,
        zv in -1.0..1.0f64, za in -1.0..1.0f64, zb in -1.0..1.0f64,
        k_v in 0.0..1e4f64, k_i in 0.0..1e4f64, a_v in 0.0..1e6f64, m_i in 0.0..1e6f64,
    ) {
        let g = PhGains { k_v, k_i, a_v, m_i, ..PhGains::defaults_for(&PlantParams::default()) };
        let e_i = Ab::new(ea, eb);
        let b = controller_power_balance(e_v, e_i, zv, Ab::new(za, zb), &g);
        let dissipation = -k_v * e_v * e_v - k_i * e_i.norm_sq();
        let lhs = b.h_c_rate + e_v * b.tau_dc + e_i.dot(b.tau_ac);
        let scale = (k_v * e_v * e_v + k_i * e_i.norm_sq() + a_v * (zv * e_v).abs() + m_i * (za.abs() + zb.abs()) * e_i.norm()).max(1.0);
        prop_assert!((lhs - dissipation).abs() <= 1e-12 * scale);
        prop_assert!(lhs <= 1e-12 * scale);
        prop_assert!(b.residual().abs() <= 1e-12 * scale);
    }
}
