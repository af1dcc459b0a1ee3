//! Truncated univariate Taylor series ("jets") in a formal amplitude λ.
//!
//! A jet of order N stores c_0..c_N, the coefficients of λ^0..λ^N. All
//! arithmetic truncates at N. Transcendental functions use the usual
//! coefficient recurrences, so results are deterministic.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 16;

const LEN: usize = MAX_ORDER + 1;

/// Smallest constant term accepted as a divisor.
const DIVISOR_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, PartialEq)]
pub struct Jet<T> {
    order: usize,
    c: [T; LEN],
}

impl<T: Real> std::fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet").field("order", &self.order).field("coeffs", &self.coeffs()).finish()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::domain(format!("jet order {order} exceeds maximum {MAX_ORDER}")))
    } else {
        Ok(())
    }
}

impl<T: Real> Jet<T> {
    pub fn zero(order: usize) -> Result<Self> {
        check_order(order)?;
        Ok(Jet { order, c: [T::zero(); LEN] })
    }

    pub fn constant(order: usize, value: T) -> Result<Self> {
        let mut j = Self::zero(order)?;
        j.c[0] = value;
        Ok(j)
    }

    /// `value + λ`.
    pub fn variable(order: usize, value: T) -> Result<Self> {
        let mut j = Self::constant(order, value)?;
        if order >= 1 {
            j.c[1] = T::one();
        }
        Ok(j)
    }

    /// Jet from explicit coefficients; order is `coeffs.len() - 1`.
    pub fn from_coeffs(coeffs: &[T]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::domain("a jet needs at least one coefficient"));
        }
        let mut j = Self::zero(coeffs.len() - 1)?;
        j.c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(j)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c[..=self.order]
    }

    pub fn coeff(&self, k: usize) -> T {
        if k <= self.order {
            self.c[k]
        } else {
            T::zero()
        }
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.is_finite())
    }

    /// Evaluates the truncated polynomial at λ (Horner).
    pub fn eval(&self, lambda: T) -> T {
        self.coeffs().iter().rev().fold(T::zero(), |acc, &c| acc * lambda + c)
    }

    fn same_order(&self, other: &Self) -> Result<()> {
        if self.order == other.order {
            Ok(())
        } else {
            Err(Error::OrderMismatch(self.order, other.order))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_order(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_order(other)?;
        Ok(self.add_unchecked(&other.scale(-T::one())))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_order(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.same_order(other)?;
        if !(other.c[0].abs() >= lit(DIVISOR_FLOOR)) {
            return Err(Error::domain("jet division by a series with vanishing constant term"));
        }
        Ok(self.div_unchecked(other))
    }

    pub fn scale(&self, s: T) -> Self {
        let mut r = *self;
        for c in &mut r.c[..=self.order] {
            *c = *c * s;
        }
        r
    }

    pub fn add_scalar(&self, s: T) -> Self {
        let mut r = *self;
        r.c[0] = r.c[0] + s;
        r
    }

    pub fn try_sqrt(&self) -> Result<Self> {
        if !(self.c[0] > T::zero()) {
            return Err(Error::domain("jet sqrt needs a positive constant term"));
        }
        Ok(self.sqrt_unchecked())
    }

    pub fn try_ln(&self) -> Result<Self> {
        if !(self.c[0] > T::zero()) {
            return Err(Error::domain("jet log needs a positive constant term"));
        }
        Ok(self.ln_unchecked())
    }

    pub fn try_exp(&self) -> Result<Self> {
        let r = self.exp_unchecked();
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::domain("jet exp overflowed"))
        }
    }

    fn add_unchecked(&self, other: &Self) -> Self {
        let mut r = *self;
        for k in 0..=self.order {
            r.c[k] = self.c[k] + other.c[k];
        }
        r
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut r = Jet { order: self.order, c: [T::zero(); LEN] };
        for k in 0..=self.order {
            let mut acc = T::zero();
            for i in 0..=k {
                acc = acc + self.c[i] * other.c[k - i];
            }
            r.c[k] = acc;
        }
        r
    }

    fn div_unchecked(&self, other: &Self) -> Self {
        let mut q = Jet { order: self.order, c: [T::zero(); LEN] };
        let inv = T::one() / other.c[0];
        for k in 0..=self.order {
            let mut acc = self.c[k];
            for i in 1..=k {
                acc = acc - other.c[i] * q.c[k - i];
            }
            q.c[k] = acc * inv;
        }
        q
    }

    fn sqrt_unchecked(&self) -> Self {
        let mut r = Jet { order: self.order, c: [T::zero(); LEN] };
        r.c[0] = self.c[0].sqrt();
        let inv = T::one() / (r.c[0] + r.c[0]);
        for k in 1..=self.order {
            let mut acc = self.c[k];
            for i in 1..k {
                acc = acc - r.c[i] * r.c[k - i];
            }
            r.c[k] = acc * inv;
        }
        r
    }

    fn ln_unchecked(&self) -> Self {
        let mut r = Jet { order: self.order, c: [T::zero(); LEN] };
        r.c[0] = self.c[0].ln();
        let inv = T::one() / self.c[0];
        for k in 1..=self.order {
            let mut acc = T::zero();
            for i in 1..k {
                acc = acc + from_usize::<T>(i) * r.c[i] * self.c[k - i];
            }
            r.c[k] = (self.c[k] - acc / from_usize(k)) * inv;
        }
        r
    }

    fn exp_unchecked(&self) -> Self {
        let mut r = Jet { order: self.order, c: [T::zero(); LEN] };
        r.c[0] = self.c[0].exp();
        for k in 1..=self.order {
            let mut acc = T::zero();
            for i in 1..=k {
                acc = acc + from_usize::<T>(i) * self.c[i] * r.c[k - i];
            }
            r.c[k] = acc / from_usize(k);
        }
        r
    }
}

// Operator forms assume matching orders (checked in debug builds). Domain
// violations in sqrt/ln surface as non-finite coefficients, which the
// quadrature layer rejects.

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.order, rhs.order);
        self.add_unchecked(&rhs)
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.order, rhs.order);
        let mut r = self;
        for k in 0..=self.order {
            r.c[k] = self.c[k] - rhs.c[k];
        }
        r
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        debug_assert_eq!(self.order, rhs.order);
        self.mul_unchecked(&rhs)
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        debug_assert_eq!(self.order, rhs.order);
        if rhs.c[0].abs() < lit(DIVISOR_FLOOR) {
            let mut r = self;
            r.c[..=self.order].fill(T::nan());
            return r;
        }
        self.div_unchecked(&rhs)
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

/// Arithmetic needed to evaluate an integrand either exactly (plain scalar)
/// or order by order in λ (a [`Jet`]).
pub trait Amplitude<T: Real>:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    /// A constant with the same shape (order) as `self`.
    fn lift(&self, value: T) -> Self;
    fn scale(&self, s: T) -> Self;
    fn sqrt(&self) -> Self;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    /// ln(1 + self), accurate when the constant term is small.
    fn ln_1p(&self) -> Self;
    fn constant_term(&self) -> T;
}

impl<T: Real> Amplitude<T> for T {
    fn lift(&self, value: T) -> Self {
        value
    }
    fn scale(&self, s: T) -> Self {
        *self * s
    }
    fn sqrt(&self) -> Self {
        num_traits::Float::sqrt(*self)
    }
    fn ln(&self) -> Self {
        num_traits::Float::ln(*self)
    }
    fn exp(&self) -> Self {
        num_traits::Float::exp(*self)
    }
    fn ln_1p(&self) -> Self {
        num_traits::Float::ln_1p(*self)
    }
    fn constant_term(&self) -> T {
        *self
    }
}

impl<T: Real> Amplitude<T> for Jet<T> {
    fn lift(&self, value: T) -> Self {
        let mut r = Jet { order: self.order, c: [T::zero(); LEN] };
        r.c[0] = value;
        r
    }
    fn scale(&self, s: T) -> Self {
        Jet::scale(self, s)
    }
    fn sqrt(&self) -> Self {
        if self.c[0] > T::zero() {
            self.sqrt_unchecked()
        } else {
            self.lift(T::nan())
        }
    }
    fn ln(&self) -> Self {
        if self.c[0] > T::zero() {
            self.ln_unchecked()
        } else {
            self.lift(T::nan())
        }
    }
    fn exp(&self) -> Self {
        self.exp_unchecked()
    }
    fn ln_1p(&self) -> Self {
        let shifted = self.add_scalar(T::one());
        if shifted.c[0] > T::zero() {
            let mut r = shifted.ln_unchecked();
            r.c[0] = self.c[0].ln_1p();
            r
        } else {
            self.lift(T::nan())
        }
    }
    fn constant_term(&self) -> T {
        self.c[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn j(c: &[f64]) -> Jet<f64> {
        Jet::from_coeffs(c).unwrap()
    }

    fn assert_coeffs(a: &Jet<f64>, expected: &[f64], tol: f64) {
        assert_eq!(a.order() + 1, expected.len());
        for (k, (&x, &y)) in a.coeffs().iter().zip(expected).enumerate() {
            assert!((x - y).abs() <= tol, "coeff {k}: {x} vs {y}");
        }
    }

    #[test]
    fn linear_ops() {
        assert_coeffs(&j(&[1.0, 1.0]).try_add(&j(&[1.0, -1.0])).unwrap(), &[2.0, 0.0], 0.0);
        assert_coeffs(&j(&[0.0, 1.0]).scale(3.0), &[0.0, 3.0], 0.0);
        let a = j(&[1.0, 0.0, 1.0]);
        assert_coeffs(&a.try_sub(&a).unwrap(), &[0.0, 0.0, 0.0], 0.0);
        assert_eq!(j(&[1.0, 2.0]).try_add(&j(&[1.0])), Err(Error::OrderMismatch(1, 0)));
    }

    #[test]
    fn products() {
        let p = j(&[1.0, 1.0, 0.0, 0.0, 0.0]).try_mul(&j(&[1.0, -1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_coeffs(&p, &[1.0, 0.0, -1.0, 0.0, 0.0], 0.0);
        let lam = j(&[0.0, 1.0]);
        assert_coeffs(&(lam * lam), &[0.0, 0.0], 0.0);
        let a = j(&[1.0, 1.0, 1.0]);
        assert_coeffs(&(a * a), &[1.0, 2.0, 3.0], 0.0);
    }

    #[test]
    fn division() {
        let one = Jet::constant(3, 1.0).unwrap();
        let q = one.try_div(&j(&[1.0, -1.0, 0.0, 0.0])).unwrap();
        assert_coeffs(&q, &[1.0, 1.0, 1.0, 1.0], 0.0);
        let a = j(&[0.7, -0.2, 1.3]);
        assert_coeffs(&a.try_div(&a).unwrap(), &[1.0, 0.0, 0.0], 1e-15);
        let cm = j(&[0.0, 1.0, 0.0, 0.0]).try_div(&j(&[1.0, -1.0 / 3.0, 0.0, 0.0])).unwrap();
        assert_coeffs(&cm, &[0.0, 1.0, 1.0 / 3.0, 1.0 / 9.0], 1e-15);
        assert!(matches!(a.try_div(&j(&[0.0, 1.0, 0.0])), Err(Error::Domain(_))));
        assert!(a.try_div(&j(&[1e-301, 1.0, 0.0])).is_err());
    }

    #[test]
    fn sqrt_examples() {
        let r = j(&[1.0, 1.0, 0.0, 0.0]).try_sqrt().unwrap();
        assert_coeffs(&r, &[1.0, 0.5, -0.125, 0.0625], 1e-16);
        assert_coeffs(&Jet::constant(2, 4.0).unwrap().try_sqrt().unwrap(), &[2.0, 0.0, 0.0], 0.0);
        assert!(j(&[0.0, 1.0]).try_sqrt().is_err());
        assert!(j(&[-1.0, 1.0]).try_sqrt().is_err());
    }

    #[test]
    fn log_exp_examples() {
        let l = j(&[1.0, 1.0, 0.0, 0.0]).try_ln().unwrap();
        assert_coeffs(&l, &[0.0, 1.0, -0.5, 1.0 / 3.0], 1e-16);
        assert_coeffs(&Jet::zero(3).unwrap().try_exp().unwrap(), &[1.0, 0.0, 0.0, 0.0], 0.0);
        assert!(j(&[0.0, 1.0]).try_ln().is_err());
        assert!(j(&[1000.0]).try_exp().is_err());
        let e = j(&[0.0, 1.0, 0.0, 0.0, 0.0]).try_exp().unwrap();
        assert_coeffs(&e, &[1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0], 1e-16);
    }

    #[test]
    fn order_limits() {
        assert!(Jet::<f64>::zero(MAX_ORDER).is_ok());
        assert!(Jet::<f64>::zero(MAX_ORDER + 1).is_err());
        assert!(Jet::<f64>::from_coeffs(&[]).is_err());
    }

    #[test]
    fn eval_and_coeff_access() {
        let a = j(&[1.0, 2.0, 3.0]);
        assert_eq!(a.eval(2.0), 17.0);
        assert_eq!(a.coeff(5), 0.0);
        assert_eq!(a.value(), 1.0);
    }

    // Central finite differences of λ ↦ f(λ) at λ = 0 against the jet
    // coefficients k! c_k, for a composite function exercising every op.
    #[test]
    fn coefficients_match_finite_differences() {
        let f_scalar = |l: f64| {
            let eps = 1.0 + 0.7 * l;
            let s = (eps - 1.0 + 1.5f64.powi(2)).sqrt();
            let r = (s - 1.5 * eps) / (s + 1.5 * eps);
            (1.0 - 0.3 * r * r).ln() + (0.2 * l).exp()
        };
        let order = 4;
        let lam = Jet::variable(order, 0.0).unwrap();
        let eps = lam.scale(0.7).add_scalar(1.0);
        let s = Amplitude::sqrt(&eps.add_scalar(-1.0 + 2.25));
        let pe = eps.scale(1.5);
        let r = (s - pe) / (s + pe);
        let jet = Amplitude::ln(&(r * r).scale(-0.3).add_scalar(1.0)) + Amplitude::exp(&lam.scale(0.2));

        // Derivatives via central differences with step h, orders 1..4.
        let h: f64 = 1e-2;
        let f = |k: i32| f_scalar(k as f64 * h);
        let d = [
            f(0),
            (f(1) - f(-1)) / (2.0 * h),
            (f(1) - 2.0 * f(0) + f(-1)) / (h * h),
            (f(2) - 2.0 * f(1) + 2.0 * f(-1) - f(-2)) / (2.0 * h.powi(3)),
            (f(2) - 4.0 * f(1) + 6.0 * f(0) - 4.0 * f(-1) + f(-2)) / h.powi(4),
        ];
        // Richardson step to push truncation error below 1e-6.
        let h2 = h / 2.0;
        let g = |k: i32| f_scalar(k as f64 * h2);
        let d2 = [
            g(0),
            (g(1) - g(-1)) / (2.0 * h2),
            (g(1) - 2.0 * g(0) + g(-1)) / (h2 * h2),
            (g(2) - 2.0 * g(1) + 2.0 * g(-1) - g(-2)) / (2.0 * h2.powi(3)),
            (g(2) - 4.0 * g(1) + 6.0 * g(0) - 4.0 * g(-1) + g(-2)) / h2.powi(4),
        ];
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        for k in 0..=order {
            let fd = (4.0 * d2[k] - d[k]) / 3.0;
            let c = jet.coeff(k) * fact[k];
            let tol = if k <= 2 { 1e-6 } else { 1e-4 };
            assert_relative_eq!(c, fd, max_relative = tol);
        }
    }

    fn arb_jet(order: usize, lo: f64, hi: f64) -> impl Strategy<Value = Jet<f64>> {
        (lo..hi, prop::collection::vec(-1.0f64..1.0, order))
            .prop_map(|(c0, rest)| {
                let mut v = vec![c0];
                v.extend(rest);
                Jet::from_coeffs(&v).unwrap()
            })
    }

    fn max_abs_diff(a: &Jet<f64>, b: &Jet<f64>) -> f64 {
        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_jet(8, -1.0, 1.0), b in arb_jet(8, -1.0, 1.0), c in arb_jet(8, -1.0, 1.0)) {
            prop_assert!(max_abs_diff(&((a * b) * c), &(a * (b * c))) < 1e-13);
            prop_assert!(max_abs_diff(&(a * (b + c)), &(a * b + a * c)) < 1e-13);
            prop_assert!(max_abs_diff(&(a * b), &(b * a)) < 1e-13);
        }

        #[test]
        fn sqrt_round_trip(a in arb_jet(12, 0.5, 2.0)) {
            let r = a.try_sqrt().unwrap();
            prop_assert!(max_abs_diff(&(r * r), &a) < 1e-12);
            prop_assert!(r.value() > 0.0);
        }

        #[test]
        fn exp_log_round_trip(a in arb_jet(12, 0.5, 2.0)) {
            let r = a.try_ln().unwrap().try_exp().unwrap();
            prop_assert!(max_abs_diff(&r, &a) < 1e-12);
        }

        #[test]
        fn division_inverts_multiplication(a in arb_jet(10, -1.0, 1.0), b in arb_jet(10, 0.5, 2.0)) {
            let q = a.try_div(&b).unwrap();
            prop_assert!(max_abs_diff(&(q * b), &a) < 1e-11);
        }
    }
}
