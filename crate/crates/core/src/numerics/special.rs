//! Exponential integrals E_n(z) = ∫₁^∞ e^{−zt} t^{−n} dt for real z > 0.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
const MAX_TERMS: usize = 500;

/// E_n(z), n ≥ 1, z > 0. Relative accuracy ≈ 1e-14 in `f64`.
pub fn exp_integral_e<T: Real>(n: u32, z: T) -> Result<T> {
    if n == 0 {
        return Err(Error::domain("exponential integral order must be >= 1"));
    }
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::domain(format!("exponential integral needs finite z > 0, got {z}")));
    }
    if z >= T::one() {
        return Ok(continued_fraction(n, z));
    }
    // Upward recurrence from E_1 is stable for z < 1 ≤ n.
    let ez = (-z).exp();
    let mut e = e1_series(z);
    for k in 1..n {
        e = (ez - z * e) / from_usize(k as usize);
    }
    Ok(e)
}

/// Γ(0, z) = E_1(z).
pub fn gamma_zero<T: Real>(z: T) -> Result<T> {
    exp_integral_e(1, z)
}

/// E_1 by its convergent power series, −γ − ln z − Σ (−z)^k / (k·k!).
pub(crate) fn e1_series<T: Real>(z: T) -> T {
    let mut sum = T::zero();
    let mut term = T::one();
    for k in 1..MAX_TERMS {
        let kf = from_usize::<T>(k);
        term = term * (-z) / kf;
        let contribution = term / kf;
        sum = sum + contribution;
        if contribution.abs() <= T::epsilon() * sum.abs() * lit(0.1) {
            break;
        }
    }
    -lit::<T>(EULER_GAMMA) - z.ln() - sum
}

/// E_n by the modified Lentz evaluation of its continued fraction.
pub(crate) fn continued_fraction<T: Real>(n: u32, z: T) -> T {
    let nf = from_usize::<T>(n as usize);
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = z + nf;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let fi = from_usize::<T>(i);
        let an = -fi * (nf - T::one() + fi);
        b = b + lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let del = c * d;
        h = h * del;
        if (del - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    h * (-z).exp()
}
