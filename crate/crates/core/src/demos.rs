//! Built-in case studies: load step, fluctuating load and grid sag.

use crate::engine::{CheckThresholds, Scenario};
use crate::error::Result;
use crate::io::synthetic::SyntheticLoad;
use crate::plant::{GridProfile, GridSegment, Interpolation, LoadProfile};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Demo {
    Normal,
    Ocp,
    Sag,
}

impl Demo {
    pub const ALL: [Demo; 3] = [Demo::Normal, Demo::Ocp, Demo::Sag];

    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Ocp => "ocp",
            Self::Sag => "sag",
        }
    }

    pub fn scenario<T: Real>(self, seed: u64) -> Result<Scenario<T>> {
        match self {
            Self::Normal => Ok(normal()),
            Self::Ocp => ocp(seed),
            Self::Sag => Ok(sag()),
        }
    }
}

impl core::str::FromStr for Demo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "normal" => Ok(Self::Normal),
            "ocp" => Ok(Self::Ocp),
            "sag" => Ok(Self::Sag),
            other => Err(format!("unknown demo `{other}` (expected normal, ocp or sag)")),
        }
    }
}

pub const LOAD_STEP_AT_S: f64 = 0.5;
pub const SAG_START_S: f64 = 0.5;
pub const SAG_END_S: f64 = 0.7;
pub const SAG_DEPTH_PU: f64 = 0.8;

/// 1.0 → 1.5 p.u. load step at 0.5 s over 2 s.
pub fn normal<T: Real>() -> Scenario<T> {
    let mut s = Scenario::steady("normal", T::lit(2.0));
    s.load = LoadProfile::new(
        vec![T::zero(), T::lit(LOAD_STEP_AT_S)],
        vec![T::one(), T::lit(1.5)],
        Interpolation::ZeroOrderHold,
    )
    .expect("static profile");
    s.check = CheckThresholds {
        max_deviation_pu: T::lit(0.02),
        recovery_band_pu: Some(T::lit(0.005)),
        recovery_within_s: Some(T::lit(0.2)),
        ..CheckThresholds::default()
    };
    s
}

/// Seeded fluctuating load between 0.5 and 1.0 p.u. over 2 s.
pub fn ocp<T: Real>(seed: u64) -> Result<Scenario<T>> {
    let mut s = Scenario::steady("ocp", T::lit(2.0));
    s.load = SyntheticLoad {
        seed,
        ..SyntheticLoad::default()
    }
    .generate()?;
    s.check.max_deviation_pu = T::lit(0.01);
    Ok(s)
}

/// Grid amplitude at 0.8 p.u. from 0.5 s to 0.7 s under 1 p.u. load.
pub fn sag<T: Real>() -> Scenario<T> {
    let mut s = Scenario::steady("sag", T::lit(1.5));
    let f = s.plant.f_nom;
    s.grid = GridProfile::new(vec![
        GridSegment::nominal(T::zero(), T::one(), f),
        GridSegment::nominal(T::lit(SAG_START_S), T::lit(SAG_DEPTH_PU), f),
        GridSegment::nominal(T::lit(SAG_END_S), T::one(), f),
    ])
    .expect("static profile");
    s.check.max_deviation_pu = T::lit(0.02);
    s
}
