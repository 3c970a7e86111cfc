//! Closed-loop integration, equilibrium initialization and scenario sweeps.

use num_complex::Complex;
use rayon::prelude::*;

use crate::ab::Ab;
use crate::audit::{self, EnergyAccumulator, EnergyAudit, RegulationReport};
use crate::controllers::ph::{ph_controller_step, PhMeasurements, PhState};
use crate::controllers::pi::{pi_controller_step, PiMeasurements, PiState};
use crate::controllers::{ControllerConfig, ControllerKind};
use crate::error::{Error, Result};
use crate::integrator::rk4_step_with;
use crate::ph::{energy_rate_analytic, hamiltonian_total, EnergyRate, EnergyState, Hamiltonian, PortInputs};
use crate::plant::{
    ac_side_power, cpl_current, dc_side_power, grid_voltage, plant_rates_with_source, GridProfile, GuardFlags,
    LoadProfile, PlantParams,
};
use crate::scalar::Real;

pub const STATE_LEN: usize = 10;

/// Full integrated state. For the PI baseline `zeta_v` and `zeta_i` hold
/// its voltage and dq current integrators; `s` and `v_f` stay at rest.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimState<T> {
    pub energy: EnergyState<T>,
    pub s: Ab<T>,
    pub v_f: Ab<T>,
}

impl<T: Real> SimState<T> {
    pub fn to_array(&self) -> [T; STATE_LEN] {
        let e = &self.energy;
        [
            e.phi.alpha,
            e.phi.beta,
            e.q_dc,
            e.zeta_v,
            e.zeta_i.alpha,
            e.zeta_i.beta,
            self.s.alpha,
            self.s.beta,
            self.v_f.alpha,
            self.v_f.beta,
        ]
    }

    pub fn from_array(x: &[T; STATE_LEN]) -> Self {
        Self {
            energy: EnergyState {
                phi: Ab::new(x[0], x[1]),
                q_dc: x[2],
                zeta_v: x[3],
                zeta_i: Ab::new(x[4], x[5]),
            },
            s: Ab::new(x[6], x[7]),
            v_f: Ab::new(x[8], x[9]),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum InitialCondition<T> {
    #[default]
    Equilibrium,
    ColdStart,
    Explicit(SimState<T>),
}

/// Pass/fail thresholds attached to a scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckThresholds<T> {
    pub max_deviation_pu: T,
    /// Tighter band that must be re-entered after the last event.
    pub recovery_band_pu: Option<T>,
    pub recovery_within_s: Option<T>,
    /// Supply-rate tolerance in units of `S_base`.
    pub supply_tol_pu: T,
    pub energy_tol_rel: T,
}

impl<T: Real> Default for CheckThresholds<T> {
    fn default() -> Self {
        Self {
            max_deviation_pu: T::lit(0.02),
            recovery_band_pu: None,
            recovery_within_s: None,
            supply_tol_pu: T::lit(1e-6),
            energy_tol_rel: T::lit(1e-4),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    pub name: String,
    pub duration: T,
    pub step: T,
    pub decimation: usize,
    pub plant: PlantParams<T>,
    pub controller: ControllerConfig<T>,
    pub grid: GridProfile<T>,
    pub load: LoadProfile<T>,
    pub initial: InitialCondition<T>,
    pub check: CheckThresholds<T>,
}

impl<T: Real> Scenario<T> {
    /// Constant 1 p.u. load on a nominal grid with default plant and gains.
    pub fn steady(name: impl Into<String>, duration: T) -> Self {
        let plant = PlantParams::default();
        Self {
            name: name.into(),
            duration,
            step: T::lit(10e-6),
            decimation: 10,
            controller: ControllerConfig::defaults_for(&plant),
            grid: GridProfile::constant(T::one(), plant.f_nom),
            load: LoadProfile::constant(T::one()),
            plant,
            initial: InitialCondition::Equilibrium,
            check: CheckThresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.controller.validate()?;
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return Err(Error::Scenario(format!("step must be positive, got {}", self.step)));
        }
        if !(self.duration >= T::zero()) || !self.duration.is_finite() {
            return Err(Error::Scenario(format!("duration must be non-negative, got {}", self.duration)));
        }
        if self.duration > T::zero() && self.duration < self.step {
            return Err(Error::Scenario(format!(
                "duration {} s is shorter than one step of {} s",
                self.duration, self.step
            )));
        }
        let n = (self.duration / self.step).round();
        if (n * self.step - self.duration).abs() > T::lit(1e-6) * self.step + T::lit(4.0) * T::epsilon() * self.duration {
            return Err(Error::Scenario(format!(
                "duration {} s is not a whole number of {} s steps",
                self.duration, self.step
            )));
        }
        if self.decimation == 0 {
            return Err(Error::Scenario("decimation must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.step).round().to_usize().unwrap_or(0)
    }

    /// Input discontinuities: load samples and grid segment starts after `t = 0`.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut b: Vec<T> = self
            .load
            .times()
            .iter()
            .copied()
            .chain(self.grid.breakpoints())
            .filter(|&t| t > T::zero())
            .collect();
        b.sort_by(|a, c| a.partial_cmp(c).unwrap_or(core::cmp::Ordering::Equal));
        b.dedup();
        b
    }

    /// Last breakpoint inside the horizon, the origin when there is none.
    pub fn last_event(&self) -> T {
        self.breakpoints()
            .into_iter()
            .filter(|&t| t <= self.duration)
            .last()
            .unwrap_or_else(T::zero)
    }

    pub fn v_dc_star(&self) -> T {
        self.controller.v_dc_star()
    }

    pub fn regulation_band(&self) -> T {
        self.check.recovery_band_pu.unwrap_or(self.check.max_deviation_pu)
    }
}

/// `Ḣ_cl = Ḣ_tot + Ḣ_C` kept term by term.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClosedLoopRate<T> {
    pub plant: EnergyRate<T>,
    pub voltage_damping: T,
    pub current_damping: T,
    pub controller_inflow: T,
    pub h_c_rate: T,
    pub h_cl_rate: T,
}

impl<T: Real> ClosedLoopRate<T> {
    pub fn h_tot_rate(&self) -> T {
        self.plant.total
    }

    /// Controller terms are zero for laws without a storage function.
    pub fn assemble(plant: EnergyRate<T>, voltage_damping: T, current_damping: T, controller_inflow: T) -> Self {
        let h_c_rate = controller_inflow - voltage_damping - current_damping;
        Self {
            plant,
            voltage_damping,
            current_damping,
            controller_inflow,
            h_c_rate,
            h_cl_rate: plant.total + h_c_rate,
        }
    }
}

/// Everything evaluated at one instant of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub state: SimState<T>,
    pub v_g: Ab<T>,
    pub v_ac: Ab<T>,
    pub e: Ab<T>,
    pub i_f: Ab<T>,
    pub v_dc: T,
    pub i_conv: T,
    pub i_load: T,
    pub p_load: T,
    pub p_star: T,
    pub i_f_star: Ab<T>,
    /// `v_dc − v_dc*`.
    pub e_v: T,
    /// `i_f − i_f*`.
    pub e_i: Ab<T>,
    pub hamiltonian: Hamiltonian<T>,
    pub rates: ClosedLoopRate<T>,
    pub flags: GuardFlags,
}

/// Closed-loop right-hand side together with all recorded quantities.
pub fn evaluate<T: Real>(s: &Scenario<T>, t: T, x: &[T; STATE_LEN]) -> Result<(Sample<T>, [T; STATE_LEN])> {
    let p = &s.plant;
    let c = &s.controller;
    let st = SimState::from_array(x);
    let en = st.energy;
    let i_f = en.current(p);
    let v_dc = en.v_dc(p);
    let v_g = grid_voltage(t, &s.grid, p.nominal_peak())?;
    let p_load = s.load.at_watts(t, p.s_base);
    let load = cpl_current(p_load, v_dc, p.v_dc_min)?;
    let mut flags = GuardFlags::NONE;
    flags.set(GuardFlags::LOAD_CLAMP, load.clamped);

    let zero = Ab::zero();
    let (e, p_star, i_f_star, e_v, e_i, damping_v, damping_i, inflow, ctrl_rates) = match c.kind {
        ControllerKind::Ph => {
            let m = PhMeasurements {
                v_dc,
                v_g,
                i_f,
                i_load: load.current,
            };
            let cx = PhState {
                zeta_v: en.zeta_v,
                zeta_i: en.zeta_i,
                s: st.s,
                v_f: st.v_f,
            };
            let out = ph_controller_step(&m, &cx, &c.ph, p)?;
            let b = out.balance;
            (
                out.e,
                out.p_star,
                out.i_f_star,
                out.e_v,
                out.e_i,
                b.voltage_damping,
                b.current_damping,
                b.port_inflow,
                out.rates,
            )
        }
        ControllerKind::Pi => {
            let m = PiMeasurements { v_dc, v_g, i_f };
            let cx = PiState {
                zeta_v: en.zeta_v,
                zeta_dq: en.zeta_i,
            };
            let out = pi_controller_step(&m, &cx, &c.pi, p, s.grid.angle(t)?, s.grid.omega(t)?)?;
            flags.set(GuardFlags::CURRENT_LIMIT, out.saturated);
            let rates = PhState {
                zeta_v: out.rates.zeta_v,
                zeta_i: out.rates.zeta_dq,
                s: zero,
                v_f: zero,
            };
            let zt = T::zero();
            (out.e, v_g.dot(out.i_f_star), out.i_f_star, -out.e_v, i_f - out.i_f_star, zt, zt, zt, rates)
        }
        ControllerKind::Idle => {
            let zt = T::zero();
            (zero, zt, i_f, v_dc - c.ph.v_dc_star, zero, zt, zt, zt, PhState::default())
        }
    };

    let pr = plant_rates_with_source(&en, e, p_load, v_g, p)?;
    flags.set(GuardFlags::LINK_CLAMP, pr.port.clamped);
    let hamiltonian = hamiltonian_total(&en, p, &c.storage_weights())?;
    let plant_rate = energy_rate_analytic(&en, &PortInputs { v_g, e, p_load }, p)?;
    let rates = ClosedLoopRate::assemble(plant_rate, damping_v, damping_i, inflow);

    let deriv = [
        pr.dphi.alpha,
        pr.dphi.beta,
        pr.dq_dc,
        ctrl_rates.zeta_v,
        ctrl_rates.zeta_i.alpha,
        ctrl_rates.zeta_i.beta,
        ctrl_rates.s.alpha,
        ctrl_rates.s.beta,
        ctrl_rates.v_f.alpha,
        ctrl_rates.v_f.beta,
    ];
    let sample = Sample {
        t,
        state: st,
        v_g,
        v_ac: pr.v_ac,
        e,
        i_f,
        v_dc,
        i_conv: pr.port.i_conv,
        i_load: load.current,
        p_load,
        p_star,
        i_f_star,
        e_v,
        e_i,
        hamiltonian,
        rates,
        flags,
    };
    Ok((sample, deriv))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub t: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct RunResult<T> {
    pub scenario: String,
    pub controller: ControllerKind,
    pub step: T,
    pub records: Vec<Sample<T>>,
    pub failure: Option<RunFailure>,
    /// Energy balance audited at every integration step.
    pub energy: EnergyAudit<T>,
    /// `None` for an empty trajectory.
    pub regulation: Option<RegulationReport<T>>,
    pub steps_completed: usize,
    /// Integration points at which any guard flag was raised.
    pub guard_events: usize,
}

impl<T: Real> RunResult<T> {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn initial_state<T: Real>(s: &Scenario<T>) -> Result<SimState<T>> {
    match s.initial {
        InitialCondition::Equilibrium => Ok(equilibrium_initializer(s)),
        InitialCondition::ColdStart => cold_start(s),
        InitialCondition::Explicit(x) => Ok(x),
    }
}

pub fn run_scenario<T: Real>(s: &Scenario<T>) -> Result<RunResult<T>> {
    s.validate()?;
    let n = s.steps();
    let h = s.step;
    let breakpoints = s.breakpoints();
    let mut acc = EnergyAccumulator::new(
        breakpoints,
        s.check.supply_tol_pu * s.plant.s_base,
        T::lit(audit::RATE_FLOOR_PU) * s.plant.s_base,
    );
    let mut records = Vec::with_capacity(if n == 0 { 0 } else { n / s.decimation + 1 });
    let mut failure = None;
    let mut guard_events = 0;
    let mut steps_completed = 0;

    if n > 0 {
        let mut x = initial_state(s)?.to_array();
        let mut f = |t: T, y: &[T; STATE_LEN]| evaluate(s, t, y).map(|(_, d)| d);
        for k in 0..=n {
            let t = T::from_count(k) * h;
            let (sample, deriv) = match evaluate(s, t, &x) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(RunFailure {
                        t: t.as_f64(),
                        reason: e.to_string(),
                    });
                    break;
                }
            };
            acc.push(t, sample.hamiltonian.total, sample.rates.h_cl_rate, sample.rates.plant.supply);
            if !sample.flags.is_empty() {
                guard_events += 1;
            }
            if k % s.decimation == 0 {
                records.push(sample);
            }
            if k == n {
                break;
            }
            match rk4_step_with(&mut f, t, &x, h, Some(deriv)) {
                Ok(next) => x = next,
                Err(e) => {
                    failure = Some(RunFailure {
                        t: t.as_f64(),
                        reason: e.to_string(),
                    });
                    break;
                }
            }
            steps_completed += 1;
        }
    }

    if let Some(f) = &failure {
        log::warn!("scenario `{}` stopped at t = {} s: {}", s.name, f.t, f.reason);
    }
    let regulation = if records.is_empty() {
        None
    } else {
        let mut r = audit::regulation_metrics(&records, s.v_dc_star(), s.regulation_band(), s.last_event())?;
        if failure.is_some() {
            r.recovery = audit::Recovery::Unrecovered;
        }
        Some(r)
    };
    Ok(RunResult {
        scenario: s.name.clone(),
        controller: s.controller.kind,
        step: h,
        records,
        failure,
        energy: acc.finish(),
        regulation,
        steps_completed,
        guard_events,
    })
}

/// Runs independent scenarios on the worker pool; results keep input order.
pub fn run_sweep<T: Real>(scenarios: &[Scenario<T>]) -> Vec<Result<RunResult<T>>> {
    scenarios.par_iter().map(run_scenario).collect()
}

pub fn cold_start<T: Real>(s: &Scenario<T>) -> Result<SimState<T>> {
    let p = &s.plant;
    Ok(SimState {
        energy: EnergyState {
            q_dc: p.c_dc * s.v_dc_star(),
            ..EnergyState::default()
        },
        s: Ab::zero(),
        v_f: grid_voltage(T::zero(), &s.grid, p.nominal_peak())?,
    })
}

/// Steady-state estimate at `t = 0`, or a cold start (with a warning) when
/// the fixed point does not converge or its residual exceeds 1e−6 p.u.
pub fn equilibrium_initializer<T: Real>(s: &Scenario<T>) -> SimState<T> {
    let attempt = equilibrium_state(s).and_then(|x| {
        let r = equilibrium_residual(s, &x)?;
        if r <= T::lit(1e-6) {
            Ok(x)
        } else {
            Err(Error::Scenario(format!("equilibrium residual {r} p.u. above 1e-6")))
        }
    });
    match attempt {
        Ok(x) => x,
        Err(e) => {
            log::warn!("equilibrium initialization of `{}` failed ({e}); using a cold start", s.name);
            cold_start(s).unwrap_or_default()
        }
    }
}

fn ab_of<T: Real>(z: Complex<T>) -> Ab<T> {
    Ab::new(z.re, z.im)
}

/// Phasor fixed point of the closed loop with the state rotating at the
/// initial grid frequency.
pub fn equilibrium_state<T: Real>(s: &Scenario<T>) -> Result<SimState<T>> {
    s.validate()?;
    let p = &s.plant;
    let t0 = T::zero();
    let seg = s.grid.segment_at(t0)?;
    let v_g = seg.amplitude * p.nominal_peak();
    let rot = Complex::from_polar(T::one(), s.grid.angle(t0)?);
    let w = s.grid.omega(t0)?;
    let p_load = s.load.at_watts(t0, p.s_base);
    let v_star = s.v_dc_star();
    match s.controller.kind {
        ControllerKind::Idle => cold_start(s),
        ControllerKind::Pi => {
            let g = &s.controller.pi;
            let pac = ac_side_power(p_load, p.eta);
            let r = p.r_tot();
            let disc = v_g * v_g - T::lit(4.0) * r * pac;
            if disc < T::zero() || v_g <= T::zero() {
                return Err(Error::Scenario("no PI operating point for the initial load".into()));
            }
            let i_d = if r > T::zero() {
                T::lit(2.0) * pac / (v_g + disc.sqrt())
            } else {
                pac / v_g
            };
            if g.ki_v <= T::zero() || g.ki_i <= T::zero() {
                return Err(Error::Scenario("PI equilibrium needs non-zero integral gains".into()));
            }
            Ok(SimState {
                energy: EnergyState {
                    phi: ab_of(rot * (p.l_tot() * i_d)),
                    q_dc: p.c_dc * v_star,
                    zeta_v: i_d / g.ki_v,
                    zeta_i: Ab::new(r * i_d / g.ki_i, T::zero()),
                },
                s: Ab::zero(),
                v_f: Ab::zero(),
            })
        }
        ControllerKind::Ph => {
            let g = &s.controller.ph;
            let j = Complex::new(T::zero(), T::one());
            let jw = j * w;
            let pac_target = ac_side_power(p_load, p.eta);
            let vg = Complex::new(v_g, T::zero());
            let mut pstar = pac_target;
            let mut v = vg;
            let mut converged = false;
            let mut out = None;
            for _ in 0..100 {
                let v_f = v / (Complex::new(T::one(), T::zero()) + j * ((w - p.omega_nom()) * g.tau_v));
                let i_star = v_f * Complex::new(pstar, g.q_star) / v_f.norm_sqr();
                let s_f = i_star / (Complex::new(T::one(), T::zero()) + jw * g.tau_d);
                let d = (i_star - s_f) / g.tau_d;
                let denom = if w > T::zero() {
                    jw + g.k_i + Complex::new(g.m_i, T::zero()) / jw
                } else {
                    Complex::new(g.k_i, T::zero())
                };
                let err = (d - jw * i_star) / denom;
                let i = i_star + err;
                let u = jw * i;
                let v_new = vg - i * p.r_g - u * p.l_g;
                let e = v_new - u * p.l_f - i * p.r_f;
                let pac = (e * i.conj()).re;
                let dp = pac_target - pac;
                let dv = (v_new - v).norm();
                pstar += dp;
                v = v_new;
                let zeta_i = if w > T::zero() { err / jw } else { Complex::new(T::zero(), T::zero()) };
                out = Some((i, s_f, v_f, zeta_i));
                let tol = T::lit(1e-13);
                if dp.abs() <= tol * p.s_base && dv <= tol * p.nominal_peak() {
                    converged = true;
                    break;
                }
            }
            let (i, s_f, v_f, zeta_i) = out.expect("at least one iteration");
            if !converged {
                return Err(Error::Scenario("equilibrium iteration did not converge in 100 iterations".into()));
            }
            let shortfall = p_load - dc_side_power(pstar - p.r_f * i.norm_sqr(), p.eta);
            let (zeta_v, v_dc) = if g.a_v > T::zero() {
                (shortfall / g.a_v, v_star)
            } else {
                (T::zero(), v_star + shortfall / g.k_v)
            };
            Ok(SimState {
                energy: EnergyState {
                    phi: ab_of(rot * i * p.l_tot()),
                    q_dc: p.c_dc * v_dc,
                    zeta_v,
                    zeta_i: ab_of(rot * zeta_i),
                },
                s: ab_of(rot * s_f),
                v_f: ab_of(rot * v_f),
            })
        }
    }
}

/// Largest per-unit component of `ẋ − ω J x` at `t = 0`, with rotating
/// states measured in the grid-synchronous frame.
pub fn equilibrium_residual<T: Real>(s: &Scenario<T>, x: &SimState<T>) -> Result<T> {
    let p = &s.plant;
    let w = s.grid.omega(T::zero())?;
    let (_, d) = evaluate(s, T::zero(), &x.to_array())?;
    let d = SimState::from_array(&d);
    let sync = |rate: Ab<T>, v: Ab<T>| (rate - v.quarter_turn() * w).norm();
    let i_base = p.i_base();
    let peak = p.nominal_peak();
    let zeta_i_res = match s.controller.kind {
        ControllerKind::Pi => d.energy.zeta_i.norm(),
        _ => sync(d.energy.zeta_i, x.energy.zeta_i),
    };
    let parts = [
        sync(d.energy.phi, x.energy.phi) / peak,
        d.energy.q_dc.abs() / (p.s_base / p.v_base_dc),
        d.energy.zeta_v.abs() / p.v_base_dc,
        zeta_i_res / i_base,
        sync(d.s, x.s) * s.controller.ph.tau_d / i_base,
        sync(d.v_f, x.v_f) * s.controller.ph.tau_v / peak,
    ];
    Ok(parts.into_iter().fold(T::zero(), T::max))
}
