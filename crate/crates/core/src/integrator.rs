//! Classical fixed-step Runge–Kutta.

use crate::error::{Error, Result};
use crate::scalar::Real;

fn axpy<T: Real, const N: usize>(x: &[T; N], h: T, k: &[T; N]) -> [T; N] {
    core::array::from_fn(|n| x[n] + h * k[n])
}

/// One RK4 step of `ẋ = f(t, x)`. `k1` may be supplied when the caller has
/// already evaluated `f(t, x)`.
pub fn rk4_step_with<T, F, const N: usize>(f: &mut F, t: T, x: &[T; N], h: T, k1: Option<[T; N]>) -> Result<[T; N]>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> Result<[T; N]>,
{
    let half = h * T::lit(0.5);
    let k1 = match k1 {
        Some(k) => k,
        None => f(t, x)?,
    };
    let k2 = f(t + half, &axpy(x, half, &k1))?;
    let k3 = f(t + half, &axpy(x, half, &k2))?;
    let k4 = f(t + h, &axpy(x, h, &k3))?;
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let next: [T; N] = core::array::from_fn(|n| x[n] + sixth * (k1[n] + two * (k2[n] + k3[n]) + k4[n]));
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFinite { t: (t + h).as_f64() })
    }
}

pub fn rk4_step<T, F, const N: usize>(mut f: F, t: T, x: &[T; N], h: T) -> Result<[T; N]>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> Result<[T; N]>,
{
    rk4_step_with(&mut f, t, x, h, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_is_reported() {
        let r = rk4_step(|_, _: &[f64; 1]| Ok([f64::NAN]), 0.0, &[1.0], 0.1);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }
}
