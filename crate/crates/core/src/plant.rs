//! Averaged converter plant: grid source, lumped series RL, lossy converter
//! port, DC-link capacitor and constant-power load.

use crate::ab::Ab;
use crate::error::{Error, Result};
use crate::ph::EnergyState;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantParams<T> {
    pub r_g: T,
    pub l_g: T,
    pub r_f: T,
    pub l_f: T,
    pub c_dc: T,
    pub eta: T,
    /// Line-to-line rms.
    pub v_base_ac: T,
    pub v_base_dc: T,
    pub s_base: T,
    pub f_nom: T,
    pub v_dc_min: T,
}

impl<T: Real> Default for PlantParams<T> {
    fn default() -> Self {
        Self {
            r_g: T::lit(1e-3),
            l_g: T::lit(10e-6),
            r_f: T::lit(2e-3),
            l_f: T::lit(30e-6),
            c_dc: T::lit(10e-3),
            eta: T::lit(0.98),
            v_base_ac: T::lit(480.0),
            v_base_dc: T::lit(800.0),
            s_base: T::lit(500e3),
            f_nom: T::lit(60.0),
            v_dc_min: T::lit(80.0),
        }
    }
}

impl<T: Real> PlantParams<T> {
    pub fn l_tot(&self) -> T {
        self.l_g + self.l_f
    }

    pub fn r_tot(&self) -> T {
        self.r_g + self.r_f
    }

    /// Per-phase peak voltage at nominal amplitude.
    pub fn nominal_peak(&self) -> T {
        self.v_base_ac * (T::lit(2.0) / T::lit(3.0)).sqrt()
    }

    pub fn omega_nom(&self) -> T {
        T::TAU() * self.f_nom
    }

    /// Current magnitude that carries `S_base` at nominal peak voltage.
    pub fn i_base(&self) -> T {
        self.s_base / self.nominal_peak()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("l_g", self.l_g),
            ("l_f", self.l_f),
            ("c_dc", self.c_dc),
            ("eta", self.eta),
            ("v_base_ac", self.v_base_ac),
            ("v_base_dc", self.v_base_dc),
            ("s_base", self.s_base),
            ("f_nom", self.f_nom),
            ("v_dc_min", self.v_dc_min),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::parameter(name, format!("must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("r_g", self.r_g), ("r_f", self.r_f)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::parameter(name, format!("must be non-negative and finite, got {v}")));
            }
        }
        if self.eta > T::one() {
            return Err(Error::parameter("eta", format!("must lie in (0, 1], got {}", self.eta)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSegment<T> {
    pub start: T,
    /// Multiplier on the nominal peak.
    pub amplitude: T,
    pub frequency_hz: T,
    pub phase_offset: T,
}

impl<T: Real> GridSegment<T> {
    pub fn nominal(start: T, amplitude: T, frequency_hz: T) -> Self {
        Self {
            start,
            amplitude,
            frequency_hz,
            phase_offset: T::zero(),
        }
    }
}

/// Piecewise grid description starting at `t = 0`; the last segment extends
/// indefinitely. The rotating angle is continuous across boundaries apart from
/// explicit phase offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct GridProfile<T> {
    segments: Vec<GridSegment<T>>,
    base_angle: Vec<T>,
}

impl<T: Real> GridProfile<T> {
    pub fn new(segments: Vec<GridSegment<T>>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::Scenario("grid profile has no segments".into()))?;
        if first.start != T::zero() {
            return Err(Error::Scenario(format!(
                "first grid segment must start at 0 s, got {}",
                first.start
            )));
        }
        for (k, s) in segments.iter().enumerate() {
            if !(s.amplitude >= T::zero()) || !s.amplitude.is_finite() {
                return Err(Error::Scenario(format!("grid segment {k}: amplitude {} is negative", s.amplitude)));
            }
            if !(s.frequency_hz >= T::zero()) || !s.frequency_hz.is_finite() || !s.phase_offset.is_finite() {
                return Err(Error::Scenario(format!("grid segment {k}: invalid frequency or phase")));
            }
        }
        for (k, w) in segments.windows(2).enumerate() {
            if !(w[1].start > w[0].start) {
                return Err(Error::Scenario(format!(
                    "grid segment {} starts at {} s, not after {} s",
                    k + 1,
                    w[1].start,
                    w[0].start
                )));
            }
        }
        let mut base_angle = Vec::with_capacity(segments.len());
        let mut acc = T::zero();
        for (k, s) in segments.iter().enumerate() {
            base_angle.push(acc);
            if let Some(next) = segments.get(k + 1) {
                acc += T::TAU() * s.frequency_hz * (next.start - s.start);
            }
        }
        Ok(Self { segments, base_angle })
    }

    pub fn constant(amplitude: T, frequency_hz: T) -> Self {
        Self::new(vec![GridSegment::nominal(T::zero(), amplitude, frequency_hz)])
            .expect("single segment from zero is valid")
    }

    pub fn segments(&self) -> &[GridSegment<T>] {
        &self.segments
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = T> + '_ {
        self.segments.iter().skip(1).map(|s| s.start)
    }

    fn locate(&self, t: T) -> Result<usize> {
        if !(t >= T::zero()) {
            return Err(Error::OutsideCoverage { t: t.as_f64() });
        }
        Ok(self.segments.partition_point(|s| s.start <= t) - 1)
    }

    pub fn segment_at(&self, t: T) -> Result<&GridSegment<T>> {
        Ok(&self.segments[self.locate(t)?])
    }

    /// Electrical angle θ(t) including the segment's phase offset.
    pub fn angle(&self, t: T) -> Result<T> {
        let k = self.locate(t)?;
        let s = &self.segments[k];
        Ok(self.base_angle[k] + T::TAU() * s.frequency_hz * (t - s.start) + s.phase_offset)
    }

    pub fn omega(&self, t: T) -> Result<T> {
        Ok(T::TAU() * self.segment_at(t)?.frequency_hz)
    }
}

pub fn grid_voltage<T: Real>(t: T, g: &GridProfile<T>, nominal_peak: T) -> Result<Ab<T>> {
    let a = g.segment_at(t)?.amplitude;
    Ok(Ab::from_polar(a * nominal_peak, g.angle(t)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    ZeroOrderHold,
    Linear,
}

/// Load demand in per-unit of `S_base`; held constant outside the samples.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadProfile<T> {
    times: Vec<T>,
    power_pu: Vec<T>,
    interpolation: Interpolation,
}

impl<T: Real> LoadProfile<T> {
    pub fn new(times: Vec<T>, power_pu: Vec<T>, interpolation: Interpolation) -> Result<Self> {
        if times.is_empty() || times.len() != power_pu.len() {
            return Err(Error::Scenario(format!(
                "load profile needs matching non-empty columns, got {} times and {} powers",
                times.len(),
                power_pu.len()
            )));
        }
        for (k, (&t, &p)) in times.iter().zip(&power_pu).enumerate() {
            if !t.is_finite() || !p.is_finite() {
                return Err(Error::Scenario(format!("load point {k} is not finite")));
            }
            if p < T::zero() {
                return Err(Error::Scenario(format!("load point {k}: negative power {p} p.u.")));
            }
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Scenario(format!(
                "load times must be strictly increasing (point {})",
                k + 1
            )));
        }
        Ok(Self {
            times,
            power_pu,
            interpolation,
        })
    }

    pub fn constant(power_pu: T) -> Self {
        Self::new(vec![T::zero()], vec![power_pu], Interpolation::ZeroOrderHold)
            .expect("constant non-negative load is valid")
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn power_pu(&self) -> &[T] {
        &self.power_pu
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn at_pu(&self, t: T) -> T {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.power_pu[0];
        }
        if k == self.times.len() {
            return self.power_pu[k - 1];
        }
        match self.interpolation {
            Interpolation::ZeroOrderHold => self.power_pu[k - 1],
            Interpolation::Linear => {
                let (t0, t1) = (self.times[k - 1], self.times[k]);
                let (p0, p1) = (self.power_pu[k - 1], self.power_pu[k]);
                p0 + (p1 - p0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn at_watts(&self, t: T, s_base: T) -> T {
        self.at_pu(t) * s_base
    }
}

/// Guard conditions raised while evaluating the model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct GuardFlags(u8);

impl GuardFlags {
    pub const NONE: Self = Self(0);
    /// CPL division clamped at `v_dc_min`.
    pub const LOAD_CLAMP: Self = Self(1);
    /// Converter power-link division clamped at `v_dc_min`.
    pub const LINK_CLAMP: Self = Self(1 << 1);
    /// PI current reference saturated (integrator frozen).
    pub const CURRENT_LIMIT: Self = Self(1 << 2);

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn from_bits(bits: u8) -> Self {
        Self(bits)
    }

    pub const fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn set(&mut self, other: Self, on: bool) {
        if on {
            self.0 |= other.0;
        }
    }
}

impl core::ops::BitOr for GuardFlags {
    type Output = Self;
    fn bitor(self, rhs: Self) -> Self {
        Self(self.0 | rhs.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CplCurrent<T> {
    pub current: T,
    pub clamped: bool,
}

pub fn cpl_current<T: Real>(p_load: T, v_dc: T, v_dc_min: T) -> Result<CplCurrent<T>> {
    if p_load < T::zero() {
        return Err(Error::NegativeLoad(p_load.as_f64()));
    }
    let clamped = v_dc < v_dc_min;
    Ok(CplCurrent {
        current: p_load / v_dc.max(v_dc_min),
        clamped,
    })
}

/// `∂i_load/∂v_dc = −P/v_dc²`.
pub fn incremental_conductance<T: Real>(p_load: T, v_dc: T) -> T {
    -p_load / (v_dc * v_dc)
}

/// Internal node voltage that satisfies both series KVL equations with the
/// shared current `i = φ/L_tot`.
pub fn ac_node_voltage<T: Real>(phi: Ab<T>, e: Ab<T>, v_g: Ab<T>, p: &PlantParams<T>) -> Ab<T> {
    let i = phi / p.l_tot();
    let slope = (v_g - e - i * p.r_tot()) / p.l_tot();
    ac_node_voltage_from_slope(i, slope, v_g, p)
}

/// Same node voltage written with a known current slope `di/dt`.
pub fn ac_node_voltage_from_slope<T: Real>(i: Ab<T>, slope: Ab<T>, v_g: Ab<T>, p: &PlantParams<T>) -> Ab<T> {
    v_g - i * p.r_g - slope * p.l_g
}

/// Power exchanged at the converter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConverterPort<T> {
    /// `eᵀ i`, positive when rectifying.
    pub p_ac: T,
    /// Power delivered to the DC link.
    pub p_dc: T,
    pub i_conv: T,
    /// `p_ac − v_dc i_conv`, never negative.
    pub loss: T,
    pub clamped: bool,
}

/// DC power from AC power through the efficiency in either direction.
pub fn dc_side_power<T: Real>(p_ac: T, eta: T) -> T {
    if p_ac >= T::zero() {
        eta * p_ac
    } else {
        p_ac / eta
    }
}

/// Inverse of [`dc_side_power`].
pub fn ac_side_power<T: Real>(p_dc: T, eta: T) -> T {
    if p_dc >= T::zero() {
        p_dc / eta
    } else {
        p_dc * eta
    }
}

pub fn converter_dc_current<T: Real>(e: Ab<T>, i_f: Ab<T>, v_dc: T, eta: T, v_dc_min: T) -> Result<ConverterPort<T>> {
    if !(eta > T::zero()) || eta > T::one() {
        return Err(Error::parameter("eta", format!("must lie in (0, 1], got {eta}")));
    }
    let p_ac = e.dot(i_f);
    let p_dc = dc_side_power(p_ac, eta);
    let clamped = v_dc < v_dc_min;
    let i_conv = p_dc / v_dc.max(v_dc_min);
    Ok(ConverterPort {
        p_ac,
        p_dc,
        i_conv,
        loss: p_ac - v_dc * i_conv,
        clamped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantRates<T> {
    pub dphi: Ab<T>,
    pub dq_dc: T,
    pub i: Ab<T>,
    pub v_dc: T,
    pub v_g: Ab<T>,
    pub v_ac: Ab<T>,
    pub port: ConverterPort<T>,
    pub load: CplCurrent<T>,
}

pub fn plant_derivatives<T: Real>(
    x: &EnergyState<T>,
    e: Ab<T>,
    p_load: T,
    g: &GridProfile<T>,
    t: T,
    p: &PlantParams<T>,
) -> Result<PlantRates<T>> {
    let v_g = grid_voltage(t, g, p.nominal_peak())?;
    plant_rates_with_source(x, e, p_load, v_g, p)
}

/// [`plant_derivatives`] with the grid voltage already sampled.
pub fn plant_rates_with_source<T: Real>(
    x: &EnergyState<T>,
    e: Ab<T>,
    p_load: T,
    v_g: Ab<T>,
    p: &PlantParams<T>,
) -> Result<PlantRates<T>> {
    let i = x.current(p);
    let v_dc = x.v_dc(p);
    let port = converter_dc_current(e, i, v_dc, p.eta, p.v_dc_min)?;
    let load = cpl_current(p_load, v_dc, p.v_dc_min)?;
    Ok(PlantRates {
        dphi: v_g - e - i * p.r_tot(),
        dq_dc: port.i_conv - load.current,
        i,
        v_dc,
        v_g,
        v_ac: ac_node_voltage(x.phi, e, v_g, p),
        port,
        load,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_profile_holds_outside_samples() {
        let l = LoadProfile::new(vec![0.5, 1.0], vec![1.0, 2.0], Interpolation::Linear).unwrap();
        assert_eq!(l.at_pu(0.0), 1.0);
        assert_eq!(l.at_pu(0.75), 1.5);
        assert_eq!(l.at_pu(3.0), 2.0);
    }

    #[test]
    fn negative_time_is_outside_coverage() {
        let g = GridProfile::<f64>::constant(1.0, 60.0);
        assert!(matches!(g.angle(-1e-3), Err(Error::OutsideCoverage { .. })));
    }
}
