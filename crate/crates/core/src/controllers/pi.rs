//! Cascaded PI baseline in the grid-synchronous dq frame.

use crate::ab::Ab;
use crate::error::{Error, Result};
use crate::plant::PlantParams;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiGains<T> {
    pub kp_v: T,
    pub ki_v: T,
    pub kp_i: T,
    pub ki_i: T,
    /// Bound on the d-axis current reference [A].
    pub current_limit: T,
    pub v_dc_star: T,
}

impl<T: Real> PiGains<T> {
    /// Inner loop by pole-zero cancellation at 2000 rad/s; outer loop by the
    /// symmetric optimum (a = 3) against the integrating DC link.
    pub fn tuned_for(p: &PlantParams<T>) -> Self {
        let omega_c = T::lit(2000.0);
        let t_sigma = T::one() / omega_c;
        let a = T::lit(3.0);
        let v_dc_star = p.v_base_dc;
        let k_dc = p.eta * p.nominal_peak() / (v_dc_star * p.c_dc);
        let kp_v = T::one() / (a * k_dc * t_sigma);
        Self {
            kp_v,
            ki_v: kp_v / (a * a * t_sigma),
            kp_i: p.l_tot() * omega_c,
            ki_i: p.r_tot() * omega_c,
            current_limit: T::lit(2.5) * p.i_base(),
            v_dc_star,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kp_v", self.kp_v),
            ("ki_v", self.ki_v),
            ("kp_i", self.kp_i),
            ("ki_i", self.ki_i),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::parameter(name, format!("must be non-negative and finite, got {v}")));
            }
        }
        for (name, v) in [("current_limit", self.current_limit), ("v_dc_star", self.v_dc_star)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::parameter(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PiMeasurements<T> {
    pub v_dc: T,
    pub v_g: Ab<T>,
    pub i_f: Ab<T>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PiState<T> {
    pub zeta_v: T,
    /// Current-loop integrators in dq.
    pub zeta_dq: Ab<T>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PiStep<T> {
    pub e: Ab<T>,
    /// Current reference rotated back to αβ.
    pub i_f_star: Ab<T>,
    pub i_d_star: T,
    pub e_v: T,
    pub saturated: bool,
    pub rates: PiState<T>,
}

/// Inner dq current PI with grid feedforward and cross-coupling
/// decoupling. Returns the converter voltage in dq and the integrator rates.
pub fn pi_current_loop<T: Real>(
    i_dq: Ab<T>,
    i_ref_dq: Ab<T>,
    v_g_dq: Ab<T>,
    zeta_dq: Ab<T>,
    g: &PiGains<T>,
    l_tot: T,
    omega: T,
) -> (Ab<T>, Ab<T>) {
    let err = i_ref_dq - i_dq;
    let y = err * g.kp_i + zeta_dq * g.ki_i;
    (v_g_dq - i_dq.quarter_turn() * (omega * l_tot) - y, err)
}

/// `theta` and `omega` come from the ideal grid-angle oracle.
pub fn pi_controller_step<T: Real>(
    m: &PiMeasurements<T>,
    x: &PiState<T>,
    g: &PiGains<T>,
    p: &PlantParams<T>,
    theta: T,
    omega: T,
) -> Result<PiStep<T>> {
    if !(m.v_dc >= p.v_dc_min) {
        return Err(Error::Singularity {
            v_dc: m.v_dc.as_f64(),
            guard: p.v_dc_min.as_f64(),
        });
    }
    let e_v = g.v_dc_star - m.v_dc;
    let raw = g.kp_v * e_v + g.ki_v * x.zeta_v;
    let i_d_star = raw.max(-g.current_limit).min(g.current_limit);
    let saturated = i_d_star != raw;
    // Freeze the integrator only while the error drives further into the limit.
    let winding = saturated && (raw > T::zero()) == (e_v > T::zero()) && e_v != T::zero();
    let i_ref_dq = Ab::new(i_d_star, T::zero());
    let (e_dq, dzeta_dq) = pi_current_loop(
        m.i_f.rotate(-theta),
        i_ref_dq,
        m.v_g.rotate(-theta),
        x.zeta_dq,
        g,
        p.l_tot(),
        omega,
    );
    Ok(PiStep {
        e: e_dq.rotate(theta),
        i_f_star: i_ref_dq.rotate(theta),
        i_d_star,
        e_v,
        saturated,
        rates: PiState {
            zeta_v: if winding { T::zero() } else { e_v },
            zeta_dq: dzeta_dq,
        },
    })
}
