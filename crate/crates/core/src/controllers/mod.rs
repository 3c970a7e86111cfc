//! Converter voltage laws: the passivity-based controller and a cascaded PI baseline.

pub mod ph;
pub mod pi;

use crate::error::Result;
use crate::plant::PlantParams;
use crate::ph::StorageWeights;
use crate::scalar::Real;

pub use ph::PhGains;
pub use pi::PiGains;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    #[default]
    Ph,
    Pi,
    /// Converter voltage held at zero with frozen controller states.
    Idle,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ph => "ph",
            Self::Pi => "pi",
            Self::Idle => "idle",
        }
    }
}

impl core::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.pad(self.as_str())
    }
}

impl core::str::FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ph" => Ok(Self::Ph),
            "pi" => Ok(Self::Pi),
            "idle" => Ok(Self::Idle),
            other => Err(format!("unknown controller `{other}` (expected ph, pi or idle)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerConfig<T> {
    pub kind: ControllerKind,
    pub ph: PhGains<T>,
    pub pi: PiGains<T>,
}

impl<T: Real> ControllerConfig<T> {
    pub fn defaults_for(plant: &PlantParams<T>) -> Self {
        Self {
            kind: ControllerKind::Ph,
            ph: PhGains::defaults_for(plant),
            pi: PiGains::tuned_for(plant),
        }
    }

    pub fn with_kind(mut self, kind: ControllerKind) -> Self {
        self.kind = kind;
        self
    }

    /// Reference DC voltage of the active law.
    pub fn v_dc_star(&self) -> T {
        match self.kind {
            ControllerKind::Pi => self.pi.v_dc_star,
            _ => self.ph.v_dc_star,
        }
    }

    /// Controller storage weights; only the passivity-based law defines one.
    pub fn storage_weights(&self) -> StorageWeights<T> {
        match self.kind {
            ControllerKind::Ph | ControllerKind::Idle => StorageWeights {
                a_v: self.ph.a_v,
                m_i: self.ph.m_i,
            },
            ControllerKind::Pi => StorageWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ph.validate()?;
        self.pi.validate()
    }
}
