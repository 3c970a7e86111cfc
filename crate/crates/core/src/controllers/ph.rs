//! Passivity-based two-loop controller.

use crate::ab::Ab;
use crate::error::{Error, Result};
use crate::plant::{ac_node_voltage_from_slope, ac_side_power, PlantParams};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhGains<T> {
    /// Outer-loop damping [W/V].
    pub k_v: T,
    /// Inner-loop damping [1/s].
    pub k_i: T,
    /// Voltage integral weight [W/(V·s)].
    pub a_v: T,
    /// Current integral weight [1/s²].
    pub m_i: T,
    pub q_star: T,
    /// Time constant of the reference-derivative filter [s].
    pub tau_d: T,
    /// Time constant of the synchronous filter on the node-voltage measurement [s].
    pub tau_v: T,
    pub v_dc_star: T,
    pub v_ac_min: T,
}

impl<T: Real> PhGains<T> {
    pub fn defaults_for(plant: &PlantParams<T>) -> Self {
        Self {
            k_v: T::lit(2000.0),
            k_i: T::lit(2000.0),
            a_v: T::lit(125_000.0),
            m_i: T::zero(),
            q_star: T::zero(),
            tau_d: T::lit(100e-6),
            tau_v: T::lit(200e-6),
            v_dc_star: plant.v_base_dc,
            v_ac_min: T::lit(0.05) * plant.nominal_peak(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_v", self.k_v),
            ("k_i", self.k_i),
            ("tau_d", self.tau_d),
            ("tau_v", self.tau_v),
            ("v_dc_star", self.v_dc_star),
            ("v_ac_min", self.v_ac_min),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::parameter(name, format!("must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("a_v", self.a_v), ("m_i", self.m_i)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::parameter(name, format!("must be non-negative and finite, got {v}")));
            }
        }
        if !self.q_star.is_finite() {
            return Err(Error::parameter("q_star", "must be finite"));
        }
        Ok(())
    }
}

/// `i_conv* = i_load − (k_v (v_dc − v_dc*) + a_v ζ_v) / v_dc`.
pub fn outer_voltage_loop<T: Real>(
    v_dc: T,
    v_dc_star: T,
    i_load: T,
    k_v: T,
    a_v: T,
    zeta_v: T,
    v_dc_min: T,
) -> Result<T> {
    if !(v_dc >= v_dc_min) {
        return Err(Error::Singularity {
            v_dc: v_dc.as_f64(),
            guard: v_dc_min.as_f64(),
        });
    }
    Ok(i_load - (k_v * (v_dc - v_dc_star) + a_v * zeta_v) / v_dc)
}

/// AC power that delivers `v_dc i_conv*` through the converter and also
/// covers the filter copper loss.
pub fn power_reference<T: Real>(i_conv_star: T, v_dc: T, i_f: Ab<T>, r_f: T, eta: T) -> T {
    ac_side_power(v_dc * i_conv_star, eta) + r_f * i_f.norm_sq()
}

/// `i* = (p* v + q* J v) / ‖v‖²`.
pub fn dvoc_current_reference<T: Real>(p_star: T, q_star: T, v_ac: Ab<T>, v_ac_min: T) -> Result<Ab<T>> {
    let n2 = v_ac.norm_sq();
    if !(n2.sqrt() >= v_ac_min) {
        return Err(Error::GridCollapse {
            magnitude: n2.sqrt().as_f64(),
            guard: v_ac_min.as_f64(),
        });
    }
    Ok((v_ac * p_star + v_ac.quarter_turn() * q_star) / n2)
}

/// Current slope imposed by the inner law: `di*/dt − K_i e_i − m_i ζ_i`.
pub fn commanded_slope<T: Real>(di_star_dt: Ab<T>, e_i: Ab<T>, k_i: T, m_i: T, zeta_i: Ab<T>) -> Ab<T> {
    di_star_dt - e_i * k_i - zeta_i * m_i
}

/// `e = v_ac − L_f (di*/dt − K_i e_i − m_i ζ_i) − R_f i_f`.
#[allow(clippy::too_many_arguments)]
pub fn inner_current_loop<T: Real>(
    i_f: Ab<T>,
    i_f_star: Ab<T>,
    di_star_dt: Ab<T>,
    v_ac: Ab<T>,
    r_f: T,
    l_f: T,
    k_i: T,
    m_i: T,
    zeta_i: Ab<T>,
) -> Ab<T> {
    let slope = commanded_slope(di_star_dt, i_f - i_f_star, k_i, m_i, zeta_i);
    v_ac - slope * l_f - i_f * r_f
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhMeasurements<T> {
    pub v_dc: T,
    pub v_g: Ab<T>,
    pub i_f: Ab<T>,
    pub i_load: T,
}

/// Dynamic controller states.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhState<T> {
    pub zeta_v: T,
    pub zeta_i: Ab<T>,
    /// Low-pass copy of the current reference; its drift is the derivative estimate.
    pub s: Ab<T>,
    /// Synchronously filtered node voltage used for the current reference.
    pub v_f: Ab<T>,
}

/// Power balance of the controller storage written with the error ports.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControllerBalance<T> {
    pub tau_dc: T,
    pub tau_ac: Ab<T>,
    pub h_c_rate: T,
    /// `−(e_v τ_dc + e_iᵀ τ_ac)`.
    pub port_inflow: T,
    /// `k_v e_v²`.
    pub voltage_damping: T,
    /// `K_i ‖e_i‖²`.
    pub current_damping: T,
}

impl<T: Real> ControllerBalance<T> {
    /// `Ḣ_C − port inflow + damping`, zero up to rounding.
    pub fn residual(&self) -> T {
        self.h_c_rate - self.port_inflow + self.voltage_damping + self.current_damping
    }
}

pub fn controller_power_balance<T: Real>(
    e_v: T,
    e_i: Ab<T>,
    zeta_v: T,
    zeta_i: Ab<T>,
    g: &PhGains<T>,
) -> ControllerBalance<T> {
    let tau_dc = -(g.k_v * e_v + g.a_v * zeta_v);
    let tau_ac = -(e_i * g.k_i + zeta_i * g.m_i);
    ControllerBalance {
        tau_dc,
        tau_ac,
        h_c_rate: g.a_v * zeta_v * e_v + g.m_i * zeta_i.dot(e_i),
        port_inflow: -(e_v * tau_dc + e_i.dot(tau_ac)),
        voltage_damping: g.k_v * e_v * e_v,
        current_damping: g.k_i * e_i.norm_sq(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhStep<T> {
    pub e: Ab<T>,
    pub v_ac: Ab<T>,
    pub i_conv_star: T,
    pub p_star: T,
    pub i_f_star: Ab<T>,
    pub di_star_dt: Ab<T>,
    pub slope: Ab<T>,
    pub e_v: T,
    pub e_i: Ab<T>,
    pub balance: ControllerBalance<T>,
    pub rates: PhState<T>,
}

/// Outer loop, power reference, current reference, derivative filter and
/// inner loop evaluated in sequence.
pub fn ph_controller_step<T: Real>(
    m: &PhMeasurements<T>,
    x: &PhState<T>,
    g: &PhGains<T>,
    p: &PlantParams<T>,
) -> Result<PhStep<T>> {
    let i_conv_star = outer_voltage_loop(m.v_dc, g.v_dc_star, m.i_load, g.k_v, g.a_v, x.zeta_v, p.v_dc_min)?;
    let p_star = power_reference(i_conv_star, m.v_dc, m.i_f, p.r_f, p.eta);
    let i_f_star = dvoc_current_reference(p_star, g.q_star, x.v_f, g.v_ac_min)?;
    let di_star_dt = (i_f_star - x.s) / g.tau_d;
    let e_v = m.v_dc - g.v_dc_star;
    let e_i = m.i_f - i_f_star;
    let slope = commanded_slope(di_star_dt, e_i, g.k_i, g.m_i, x.zeta_i);
    // Node voltage consistent with the commanded slope, so the inner law
    // closes on the true v_ac without an algebraic loop.
    let v_ac = ac_node_voltage_from_slope(m.i_f, slope, m.v_g, p);
    let e = inner_current_loop(m.i_f, i_f_star, di_star_dt, v_ac, p.r_f, p.l_f, g.k_i, g.m_i, x.zeta_i);
    let omega = p.omega_nom();
    Ok(PhStep {
        e,
        v_ac,
        i_conv_star,
        p_star,
        i_f_star,
        di_star_dt,
        slope,
        e_v,
        e_i,
        balance: controller_power_balance(e_v, e_i, x.zeta_v, x.zeta_i, g),
        rates: PhState {
            zeta_v: e_v,
            zeta_i: e_i,
            s: di_star_dt,
            v_f: (v_ac - x.v_f) / g.tau_v + x.v_f.quarter_turn() * omega,
        },
    })
}
