//! Free-space dyadic kernels at imaginary frequency (c = 1).
//!
//! * `K₀⁻¹(ζ, q) = (ζ² δ_ij + q_i q_j) / (ζ² (ζ² + q²))`
//! * `A(ζ, q) = (2ζ² δ_ij + 3 q_i q_j − q² δ_ij) / (3 (ζ² + q²))`, so that
//!   `K₀⁻¹ = (3A + I) / (3ζ²)`
//! * `A(ζ, r)` is the imaginary-frequency field of an oscillating dipole;
//!   `G(ζ, r) = A(ζ, r) + δ_ij δ³(r) / 3`, with the contact term carried as
//!   a coefficient rather than discretised.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

/// A 3×3 tensor kernel value plus the coefficient of `δ_ij δ³(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTensor<T> {
    pub m: Mat3<T>,
    pub delta_coeff: T,
}

impl<T: Real> KernelTensor<T> {
    fn regular(m: Mat3<T>) -> Self {
        KernelTensor { m, delta_coeff: T::zero() }
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.m[i][j] - self.m[j][i]).abs());
            }
        }
        worst
    }
}

pub fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

fn norm_sq<T: Real>(v: &Vec3<T>) -> T {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

fn dyad<T: Real>(diag: T, outer: T, v: &Vec3<T>) -> Mat3<T> {
    let mut m = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = outer * v[i] * v[j];
        }
        m[i][i] = m[i][i] + diag;
    }
    m
}

fn check_zeta<T: Real>(zeta: T) -> Result<()> {
    if zeta >= T::zero() && zeta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("imaginary frequency must be finite and >= 0, got {zeta}")))
    }
}

/// Free propagator inverse `K₀⁻¹(ζ, q)`. Has a pole at ζ = 0.
pub fn k0_inv_fourier<T: Real>(zeta: T, q: Vec3<T>) -> Result<KernelTensor<T>> {
    check_zeta(zeta)?;
    if zeta == T::zero() {
        return Err(Error::domain("K0^-1 has a pole at zeta = 0"));
    }
    let z2 = zeta * zeta;
    let denom = z2 * (z2 + norm_sq(&q));
    Ok(KernelTensor::regular(dyad(z2 / denom, T::one() / denom, &q)))
}

pub fn a_fourier<T: Real>(zeta: T, q: Vec3<T>) -> Result<KernelTensor<T>> {
    check_zeta(zeta)?;
    let z2 = zeta * zeta;
    let q2 = norm_sq(&q);
    if z2 + q2 == T::zero() {
        return Err(Error::domain("A(zeta, q) is undefined at zeta = q = 0"));
    }
    let three = lit::<T>(3.0);
    let denom = three * (z2 + q2);
    Ok(KernelTensor::regular(dyad((z2 + z2 - q2) / denom, three / denom, &q)))
}

/// Radial profile of `A(ζ, r)`: the coefficients of `δ_ij` and `r̂_i r̂_j`.
pub fn a_real_profile<T: Real>(zeta: T, r: T) -> (T, T) {
    let pref = (-zeta * r).exp() / (lit::<T>(4.0) * T::PI() * r);
    let zr = zeta / r;
    let rr = T::one() / (r * r);
    let z2 = zeta * zeta;
    let three = lit::<T>(3.0);
    (pref * (z2 + zr + rr), -pref * (z2 + three * zr + three * rr))
}

/// Position-space `A(ζ, r)`; rejects r = 0, where only the regularised
/// operator is meaningful.
pub fn a_real<T: Real>(zeta: T, r: Vec3<T>) -> Result<KernelTensor<T>> {
    check_zeta(zeta)?;
    let len = norm_sq(&r).sqrt();
    if !(len > T::zero()) || !len.is_finite() {
        return Err(Error::domain("A(zeta, r) is singular at r = 0"));
    }
    let (diag, radial) = a_real_profile(zeta, len);
    let unit = [r[0] / len, r[1] / len, r[2] / len];
    Ok(KernelTensor::regular(dyad(diag, radial, &unit)))
}

/// Position-space `G(ζ, r)`: the regular part of [`a_real`] plus the
/// `δ_ij δ³(r) / 3` contact term recorded in `delta_coeff`.
pub fn g_real<T: Real>(zeta: T, r: Vec3<T>) -> Result<KernelTensor<T>> {
    let a = a_real(zeta, r)?;
    Ok(KernelTensor { m: a.m, delta_coeff: T::one() / lit(3.0) })
}

/// `tr[A(ζ, r) A(ζ, −r)]` as a function of separation only:
/// `e^{−2u} (u⁴ + 2u³ + 5u² + 6u + 3) / (8π² r⁶)` with u = ζr.
pub fn a_pair_trace<T: Real>(zeta: T, r: T) -> T {
    let u = zeta * r;
    let poly = (((u + lit(2.0)) * u + lit(5.0)) * u + lit(6.0)) * u + lit(3.0);
    let r2 = r * r;
    (-(u + u)).exp() * poly / (lit::<T>(8.0) * T::PI() * T::PI() * r2 * r2 * r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_semi_infinite, QuadratureConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn max_abs(m: &Mat3<f64>) -> f64 {
        m.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    fn sub(a: &Mat3<f64>, b: &Mat3<f64>) -> Mat3<f64> {
        let mut out = *a;
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] -= b[i][j];
            }
        }
        out
    }

    #[test]
    fn k0_inverse_examples() {
        let k = k0_inv_fourier(2.0, [0.0; 3]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k.m[i][j], if i == j { 0.25 } else { 0.0 });
            }
        }
        let q = [0.3, -1.2, 0.7];
        let kp = k0_inv_fourier(0.8, q).unwrap();
        let km = k0_inv_fourier(0.8, [-0.3, 1.2, -0.7]).unwrap();
        assert_eq!(kp, km);
        assert!(k0_inv_fourier(0.0, q).is_err());
    }

    #[test]
    fn a_fourier_examples() {
        let a = a_fourier(1.3, [0.0; 3]).unwrap();
        for i in 0..3 {
            assert_relative_eq!(a.m[i][i], 2.0 / 3.0, max_relative = 1e-15);
        }
        let a = a_fourier(0.0, [0.0, 0.0, 1.0]).unwrap();
        let expect = [-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        for i in 0..3 {
            assert_relative_eq!(a.m[i][i], expect[i], max_relative = 1e-15);
        }
        assert!(a_fourier(0.0, [0.0; 3]).is_err());
        let (z, q) = (0.7, [0.4, 1.1, -2.0]);
        let q2: f64 = q.iter().map(|x| x * x).sum();
        assert_relative_eq!(a_fourier(z, q).unwrap().trace(), 2.0 * z * z / (z * z + q2), max_relative = 1e-14);
    }

    #[test]
    fn a_real_examples() {
        let (z, r) = (0.9, [0.3, -0.5, 1.1]);
        let len = (0.09f64 + 0.25 + 1.21).sqrt();
        let a = a_real(z, r).unwrap();
        assert_relative_eq!(a.trace(), 2.0 * z * z * (-z * len).exp() / (4.0 * PI * len), max_relative = 1e-13);
        assert!(a.max_asymmetry() < 1e-14);
        assert_eq!(a.delta_coeff, 0.0);
        assert!(a_real(z, [0.0; 3]).is_err());

        let far = a_real(30.0, [1.0, 0.0, 0.0]).unwrap();
        let bound = (-30.0f64).exp() * 900.0 / (2.0 * PI);
        assert!(max_abs(&far.m) < bound);
    }

    #[test]
    fn g_real_shares_regular_part() {
        let (z, r) = (1.7, [0.2, 0.1, -0.4]);
        let g = g_real(z, r).unwrap();
        let a = a_real(z, r).unwrap();
        assert_eq!(g.m, a.m);
        assert_eq!(g.delta_coeff, 1.0 / 3.0);
        // ζr = 1
        let g = g_real(2.0, [0.5, 0.0, 0.0]).unwrap();
        assert_relative_eq!(g.trace(), 2.0 * 4.0 * (-1.0f64).exp() / (4.0 * PI * 0.5), max_relative = 1e-14);
    }

    #[test]
    fn pair_trace_matches_matrix_product() {
        for &(z, r) in &[(0.0, 1.0), (0.3, 2.0), (2.0, 0.7), (10.0, 0.05)] {
            let v = [r * 0.6, -r * 0.8, 0.0];
            let a = a_real(z, v).unwrap();
            let b = a_real(z, [-v[0], -v[1], -v[2]]).unwrap();
            let p = mat_mul(&a.m, &b.m);
            let tr = p[0][0] + p[1][1] + p[2][2];
            assert_relative_eq!(a_pair_trace(z, r), tr, max_relative = 1e-13);
        }
    }

    // Radial Fourier transform of tr A(r) = 2ζ² e^{−ζr}/(4πr) reproduces
    // tr A(q) = 2ζ²/(ζ² + q²).
    #[test]
    fn fourier_consistency_of_trace() {
        let cfg = QuadratureConfig::default().with_abs_tol(0.0).with_rel_tol(1e-11);
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let z = 0.2 + 3.0 * next();
            let q = 0.05 + 3.0 * next();
            let integrand = |r: f64| {
                let sinc = (q * r).sin() / (q * r);
                4.0 * PI * r * r * sinc * 2.0 * z * z * (-z * r).exp() / (4.0 * PI * r)
            };
            let v = integrate_semi_infinite(integrand, 0.0, &cfg).unwrap().value;
            let expect = a_fourier(z, [0.0, q, 0.0]).unwrap().trace();
            assert_relative_eq!(v, expect, max_relative = 1e-8);
        }
    }

    fn rotation(ax: f64, ay: f64, az: f64) -> Mat3<f64> {
        let rx = [[1.0, 0.0, 0.0], [0.0, ax.cos(), -ax.sin()], [0.0, ax.sin(), ax.cos()]];
        let ry = [[ay.cos(), 0.0, ay.sin()], [0.0, 1.0, 0.0], [-ay.sin(), 0.0, ay.cos()]];
        let rz = [[az.cos(), -az.sin(), 0.0], [az.sin(), az.cos(), 0.0], [0.0, 0.0, 1.0]];
        mat_mul(&rz, &mat_mul(&ry, &rx))
    }

    proptest! {
        #[test]
        fn decomposition_identity(z in 0.01f64..10.0, qx in -10.0f64..10.0, qy in -10.0f64..10.0, qz in -10.0f64..10.0) {
            let q = [qx, qy, qz];
            let k = k0_inv_fourier(z, q).unwrap();
            let a = a_fourier(z, q).unwrap();
            let mut rebuilt = a.m;
            for i in 0..3 {
                for j in 0..3 {
                    rebuilt[i][j] = (3.0 * a.m[i][j] + if i == j { 1.0 } else { 0.0 }) / (3.0 * z * z);
                }
            }
            let scale = max_abs(&k.m);
            prop_assert!(max_abs(&sub(&rebuilt, &k.m)) <= 1e-12 * scale);
        }

        #[test]
        fn rotation_covariance(z in 0.05f64..5.0, x in -2.0f64..2.0, y in -2.0f64..2.0, w in 0.1f64..2.0,
                               ax in 0.0f64..6.3, ay in 0.0f64..6.3, az in 0.0f64..6.3) {
            let r = [x, y, w];
            let rot = rotation(ax, ay, az);
            let rr = [
                rot[0][0] * r[0] + rot[0][1] * r[1] + rot[0][2] * r[2],
                rot[1][0] * r[0] + rot[1][1] * r[1] + rot[1][2] * r[2],
                rot[2][0] * r[0] + rot[2][1] * r[1] + rot[2][2] * r[2],
            ];
            let lhs = a_real(z, rr).unwrap().m;
            let rhs = mat_mul(&rot, &mat_mul(&a_real(z, r).unwrap().m, &transpose(&rot)));
            let scale = max_abs(&lhs).max(1e-300);
            prop_assert!(max_abs(&sub(&lhs, &rhs)) <= 1e-12 * scale);
        }

        #[test]
        fn kernels_are_symmetric(z in 0.01f64..5.0, x in -2.0f64..2.0, y in -2.0f64..2.0, w in 0.1f64..2.0) {
            prop_assert!(a_real(z, [x, y, w]).unwrap().max_asymmetry() < 1e-14 * max_abs(&a_real(z, [x, y, w]).unwrap().m).max(1.0));
            prop_assert!(a_fourier(z, [x, y, w]).unwrap().max_asymmetry() < 1e-14);
            prop_assert!(k0_inv_fourier(z, [x, y, w]).unwrap().max_asymmetry() < 1e-14 / (z * z));
        }
    }
}
