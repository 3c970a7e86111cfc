//! Seeded stand-in for a fluctuating compute-cluster load.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::plant::{Interpolation, LoadProfile};
use crate::scalar::Real;

/// Random levels held for `hold_s` and joined by linear ramps of `ramp_s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticLoad {
    pub seed: u64,
    pub duration_s: f64,
    pub hold_s: f64,
    pub ramp_s: f64,
    pub min_pu: f64,
    pub max_pu: f64,
}

impl Default for SyntheticLoad {
    fn default() -> Self {
        Self {
            seed: 7,
            duration_s: 2.0,
            hold_s: 0.025,
            ramp_s: 0.005,
            min_pu: 0.5,
            max_pu: 1.0,
        }
    }
}

impl SyntheticLoad {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Scenario(format!("synthetic load: {m}")));
        if !(self.duration_s > 0.0) || !(self.hold_s > 0.0) || !(self.ramp_s > 0.0) {
            return bad("duration, hold and ramp must be positive");
        }
        if !(self.min_pu >= 0.0) || !(self.max_pu >= self.min_pu) || !self.max_pu.is_finite() {
            return bad("need 0 <= min_pu <= max_pu");
        }
        Ok(())
    }

    pub fn generate<T: Real>(&self) -> Result<LoadProfile<T>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut level = || {
            if self.max_pu > self.min_pu {
                rng.gen_range(self.min_pu..=self.max_pu)
            } else {
                self.min_pu
            }
        };
        let mut times = vec![0.0];
        let mut power = vec![level()];
        let mut t = 0.0;
        while t < self.duration_s {
            let held = *power.last().expect("non-empty");
            t += self.hold_s;
            times.push(t);
            power.push(held);
            t += self.ramp_s;
            times.push(t);
            power.push(level());
        }
        LoadProfile::new(
            times.into_iter().map(T::lit).collect(),
            power.into_iter().map(T::lit).collect(),
            Interpolation::Linear,
        )
    }
}
