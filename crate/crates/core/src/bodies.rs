//! Compact dielectric bodies: low orders of the many-body expansion for
//! spheres, Casimir-Polder asymptotics and the cutoff-dependent volume term.
//!
//! The interaction energy at order n is
//!
//! ```text
//! E_n = ∫₀^∞ dζ/2π · (−1)^{n−1}/n · Σ_mixed ∫ d³r₁…d³r_n tr[A(r₁−r₂)β(r₂) ⋯ A(r_n−r₁)β(r₁)]
//! ```
//!
//! where "mixed" keeps only assignments of r₁…r_n touching at least two
//! distinct bodies, so self-energies drop out.

use rayon::prelude::*;

use crate::dielectric::DielectricModel;
use crate::error::{Error, Result};
use crate::kernels::{a_pair_trace, a_real, Mat3, Vec3};
use crate::numerics::{gauss_legendre, integrate_semi_infinite_adaptive, require_converged, QuadratureConfig};
use crate::scalar::{from_usize, lit, Real};

pub const DEFAULT_RESOLUTION: usize = 8;

/// Largest number of Chebyshev nodes used to tabulate a pair kernel.
const MAX_CHEBYSHEV_NODES: usize = 729;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereBody<T> {
    pub center: Vec3<T>,
    pub radius: T,
    pub model: DielectricModel<T>,
}

impl<T: Real> SphereBody<T> {
    pub fn new(center: Vec3<T>, radius: T, model: DielectricModel<T>) -> Result<Self> {
        let body = SphereBody { center, radius, model };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > T::zero()) || !self.radius.is_finite() {
            return Err(Error::domain(format!("sphere radius must be finite and > 0, got {}", self.radius)));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("sphere center must be finite"));
        }
        self.model.validate()
    }

    pub fn volume(&self) -> T {
        lit::<T>(4.0) / lit(3.0) * T::PI() * self.radius.powi(3)
    }

    pub fn distance_to(&self, other: &SphereBody<T>) -> T {
        distance(&self.center, &other.center)
    }

    /// Product Gauss-Legendre rule over the ball: `res` nodes each in r
    /// (weight r²), cos θ and φ.
    pub fn quadrature_nodes(&self, res: usize) -> Result<Vec<(Vec3<T>, T)>> {
        if res == 0 {
            return Err(Error::domain("grid resolution must be >= 1"));
        }
        let radial = gauss_legendre(res, T::zero(), self.radius)?;
        let polar = gauss_legendre(res, -T::one(), T::one())?;
        let azimuth = gauss_legendre(res, T::zero(), T::PI() + T::PI())?;
        let mut nodes = Vec::with_capacity(res * res * res);
        for &(r, wr) in &radial {
            for &(ct, wc) in &polar {
                let st = (T::one() - ct * ct).max(T::zero()).sqrt();
                for &(phi, wp) in &azimuth {
                    let p = [
                        self.center[0] + r * st * phi.cos(),
                        self.center[1] + r * st * phi.sin(),
                        self.center[2] + r * ct,
                    ];
                    nodes.push((p, wr * r * r * wc * wp));
                }
            }
        }
        Ok(nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyAssembly<T> {
    bodies: Vec<SphereBody<T>>,
    resolution: usize,
}

impl<T: Real> BodyAssembly<T> {
    pub fn new(bodies: Vec<SphereBody<T>>, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::domain("grid resolution must be >= 1"));
        }
        for b in &bodies {
            b.validate()?;
        }
        for (i, a) in bodies.iter().enumerate() {
            for (j, b) in bodies.iter().enumerate().skip(i + 1) {
                if !(a.distance_to(b) > a.radius + b.radius) {
                    return Err(Error::domain(format!("spheres {i} and {j} overlap")));
                }
            }
        }
        Ok(BodyAssembly { bodies, resolution })
    }

    pub fn bodies(&self) -> &[SphereBody<T>] {
        &self.bodies
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self::new(self.bodies.clone(), resolution)
    }

    fn min_center_distance(&self) -> Option<T> {
        let mut best: Option<T> = None;
        for (i, a) in self.bodies.iter().enumerate() {
            for b in &self.bodies[i + 1..] {
                let d = a.distance_to(b);
                best = Some(best.map_or(d, |x| x.min(d)));
            }
        }
        best
    }

    /// Parses lines of `x,y,z,radius,model`; blank lines and `#` comments
    /// are skipped.
    pub fn parse_config(text: &str, resolution: usize) -> Result<Self> {
        let mut bodies = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.splitn(5, ',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::input(format!("line {}: expected x,y,z,radius,model", lineno + 1)));
            }
            let num = |s: &str| -> Result<T> {
                s.parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| Error::input(format!("line {}: bad number '{s}'", lineno + 1)))
            };
            let center = [num(fields[0])?, num(fields[1])?, num(fields[2])?];
            let model: DielectricModel<T> = fields[4]
                .parse()
                .map_err(|e: Error| Error::input(format!("line {}: {e}", lineno + 1)))?;
            bodies.push(SphereBody::new(center, num(fields[3])?, model)?);
        }
        Self::new(bodies, resolution)
    }
}

fn distance<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// α(iζ) = v β(iζ) / 4π.
pub fn polarizability<T: Real>(model: &DielectricModel<T>, volume: T, zeta: T) -> Result<T> {
    if !(volume > T::zero()) || !volume.is_finite() {
        return Err(Error::domain(format!("volume must be finite and > 0, got {volume}")));
    }
    Ok(volume * model.cm_parameter(zeta)? / (lit::<T>(4.0) * T::PI()))
}

/// Retarded two-body Casimir-Polder energy
/// `−(1/πR⁶) ∫dζ α₁α₂ e^{−2x}(3 + 6x + 5x² + 2x³ + x⁴)`, x = ζR.
pub fn casimir_polder_energy<T, A1, A2>(alpha1: A1, alpha2: A2, separation: T, cfg: &QuadratureConfig<T>) -> Result<T>
where
    T: Real,
    A1: Fn(T) -> T,
    A2: Fn(T) -> T,
{
    if !(separation > T::zero()) || !separation.is_finite() {
        return Err(Error::domain(format!("separation must be finite and > 0, got {separation}")));
    }
    let r = separation;
    let res = require_converged(integrate_semi_infinite_adaptive(
        |x: T| {
            let zeta = x / r;
            let poly = (((x + lit(2.0)) * x + lit(5.0)) * x + lit(6.0)) * x + lit(3.0);
            alpha1(zeta) * alpha2(zeta) * (-(x + x)).exp() * poly
        },
        T::zero(),
        lit(0.5),
        cfg,
    )?)?;
    Ok(-res.value / (T::PI() * r.powi(7)))
}

/// ∫₀^∞ ln ε(iζ) dζ; finite only when ε → 1 at high frequency.
pub fn log_permittivity_integral<T: Real>(model: &DielectricModel<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    model.validate()?;
    let scale = match *model {
        DielectricModel::Vacuum => return Ok(T::zero()),
        DielectricModel::Constant { eps } if eps == T::one() => return Ok(T::zero()),
        DielectricModel::Constant { .. } => {
            return Err(Error::domain("ln eps is not integrable for a frequency-independent permittivity"))
        }
        DielectricModel::Oscillator { omega_p, omega_0, gamma } => {
            (omega_0 * omega_0 + omega_p * omega_p).sqrt().max(gamma)
        }
    };
    let res = require_converged(integrate_semi_infinite_adaptive(
        |z: T| model.contrast_unchecked(z).ln_1p(),
        T::zero(),
        scale,
        cfg,
    )?)?;
    Ok(res.value)
}

/// Cutoff-dependent volume term `(V/a³) ∫dζ/2π ln ε(iζ)`.
pub fn singular_volume_energy<T: Real>(
    model: &DielectricModel<T>,
    volume: T,
    cutoff: T,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    if !(volume > T::zero()) || !(cutoff > T::zero()) {
        return Err(Error::domain("volume and cutoff must be > 0"));
    }
    let integral = log_permittivity_integral(model, cfg)?;
    Ok(volume / cutoff.powi(3) * integral / (T::PI() + T::PI()))
}

/// Mixed-assignment order-n interaction energy, n ∈ {2, 3}.
pub fn order_n_interaction<T: Real>(assembly: &BodyAssembly<T>, n: usize, cfg: &QuadratureConfig<T>) -> Result<T> {
    cfg.validate()?;
    match n {
        2 => order_two(assembly, cfg),
        3 => order_three(assembly, cfg),
        _ => Err(Error::domain(format!("only orders 2 and 3 are supported, got {n}"))),
    }
}

/// r⁶-scaled pair kernel `∫dζ β_a β_b tr[A A](ζ, r) r⁶`, smooth and bounded
/// as r → 0.
fn scaled_pair_kernel<T: Real>(
    m1: &DielectricModel<T>,
    m2: &DielectricModel<T>,
    r: T,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    let r6 = r.powi(6);
    let res = require_converged(integrate_semi_infinite_adaptive(
        |zeta: T| m1.cm_unchecked(zeta) * m2.cm_unchecked(zeta) * a_pair_trace(zeta, r) * r6,
        T::zero(),
        T::one() / (r + r),
        &QuadratureConfig { abs_tol: T::zero(), ..*cfg },
    )?)?;
    Ok(res.value)
}

/// Barycentric Chebyshev interpolant on [lo, hi].
struct Chebyshev<T> {
    lo: T,
    hi: T,
    nodes: Vec<T>,
    values: Vec<T>,
    weights: Vec<T>,
}

fn chebyshev_points<T: Real>(n: usize) -> Vec<(T, T)> {
    (0..n)
        .map(|k| {
            let theta = T::PI() * (from_usize::<T>(k) + lit(0.5)) / from_usize(n);
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            (theta.cos(), sign * theta.sin())
        })
        .collect()
}

impl<T: Real> Chebyshev<T> {
    /// Triples the node count until the new nodes agree with the previous
    /// interpolant to `rel_tol`.
    fn fit<F: Fn(T) -> Result<T>>(f: F, lo: T, hi: T, rel_tol: T) -> Result<Self> {
        let map = |x: T| lo + (hi - lo) * (x + T::one()) * lit(0.5);
        let build = |n: usize| -> Result<Self> {
            let pts = chebyshev_points::<T>(n);
            let nodes: Vec<T> = pts.iter().map(|&(x, _)| map(x)).collect();
            let values = nodes.iter().map(|&x| f(x)).collect::<Result<Vec<T>>>()?;
            Ok(Chebyshev { lo, hi, nodes, values, weights: pts.into_iter().map(|(_, w)| w).collect() })
        };
        let mut n = 9;
        let mut current = build(n)?;
        while n < MAX_CHEBYSHEV_NODES {
            n *= 3;
            let next = build(n)?;
            let scale = next.values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            let worst = next
                .nodes
                .iter()
                .zip(&next.values)
                .fold(T::zero(), |a, (&x, &v)| a.max((current.eval(x) - v).abs()));
            current = next;
            if worst <= rel_tol * scale {
                return Ok(current);
            }
        }
        Err(Error::NonConvergence { estimate: f64::NAN, error: f64::NAN, evaluations: n })
    }

    fn eval(&self, x: T) -> T {
        let x = x.max(self.lo).min(self.hi);
        let mut num = T::zero();
        let mut den = T::zero();
        for ((&xk, &fk), &wk) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let d = x - xk;
            if d == T::zero() {
                return fk;
            }
            let t = wk / d;
            num = num + t * fk;
            den = den + t;
        }
        num / den
    }
}

/// −∫dζ/2π Σ_{a<b} Σ_ij w_i w_j β_a β_b tr[A(r_ij)²], accumulated per body pair
/// with the ζ-integral tabulated over the pair's distance range.
fn order_two<T: Real>(assembly: &BodyAssembly<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    let grids = assembly
        .bodies
        .iter()
        .map(|b| b.quadrature_nodes(assembly.resolution))
        .collect::<Result<Vec<_>>>()?;
    let mut total = T::zero();
    for (a, ba) in assembly.bodies.iter().enumerate() {
        for (b, bb) in assembly.bodies.iter().enumerate().skip(a + 1) {
            if ba.model.is_vacuum() || bb.model.is_vacuum() {
                continue;
            }
            let d = ba.distance_to(bb);
            let lo = d - ba.radius - bb.radius;
            let hi = d + ba.radius + bb.radius;
            // Table values must be quieter than the fit tolerance.
            let inner = QuadratureConfig { rel_tol: (cfg.rel_tol * lit(1e-2)).max(T::epsilon() * lit(64.0)), ..*cfg };
            let table = Chebyshev::fit(
                |r| scaled_pair_kernel(&ba.model, &bb.model, r, &inner),
                lo,
                hi,
                cfg.rel_tol,
            )?;
            let rows: Vec<Result<T>> = grids[a]
                .par_iter()
                .map(|&(pi, wi)| {
                    let mut row = T::zero();
                    for &(pj, wj) in &grids[b] {
                        let r = distance(&pi, &pj);
                        if !(r > T::zero()) {
                            return Err(Error::domain("pair kernel evaluated at zero separation"));
                        }
                        row = row + wj * table.eval(r) / r.powi(6);
                    }
                    Ok(wi * row)
                })
                .collect();
            for row in rows {
                total = total + row?;
            }
        }
    }
    Ok(-total / (T::PI() + T::PI()))
}

struct Node<T> {
    pos: Vec3<T>,
    weight: T,
    body: usize,
}

/// tr[(XB)³] restricted to mixed assignments at frequency ζ, where X holds
/// A(r_i − r_j) for i ≠ j and B = diag(β w).
pub fn order_three_density<T: Real>(assembly: &BodyAssembly<T>, zeta: T) -> Result<T> {
    let mut nodes = Vec::new();
    for (k, b) in assembly.bodies.iter().enumerate() {
        for (pos, weight) in b.quadrature_nodes(assembly.resolution)? {
            nodes.push(Node { pos, weight, body: k });
        }
    }
    let betas: Vec<T> = assembly.bodies.iter().map(|b| b.model.cm_unchecked(zeta)).collect();
    let n = nodes.len();
    let dim = 3 * n;
    // Row-major dense XB.
    let rows: Vec<Result<Vec<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut block_row = vec![T::zero(); 3 * dim];
            for (j, nj) in nodes.iter().enumerate() {
                if i == j {
                    continue;
                }
                let r = [
                    nodes[i].pos[0] - nj.pos[0],
                    nodes[i].pos[1] - nj.pos[1],
                    nodes[i].pos[2] - nj.pos[2],
                ];
                let a: Mat3<T> = a_real(zeta, r)?.m;
                let s = betas[nj.body] * nj.weight;
                for (p, row) in a.iter().enumerate() {
                    for (q, &v) in row.iter().enumerate() {
                        block_row[p * dim + 3 * j + q] = v * s;
                    }
                }
            }
            Ok(block_row)
        })
        .collect();
    let mut m = Vec::with_capacity(dim * dim);
    for r in rows {
        m.extend(r?);
    }
    let full = trace_cubed(&m, dim, &(0..dim).collect::<Vec<_>>());
    let mut pure = T::zero();
    for k in 0..assembly.bodies.len() {
        let idx: Vec<usize> = nodes
            .iter()
            .enumerate()
            .filter(|(_, nd)| nd.body == k)
            .flat_map(|(i, _)| [3 * i, 3 * i + 1, 3 * i + 2])
            .collect();
        pure = pure + trace_cubed(&m, dim, &idx);
    }
    Ok(full - pure)
}

/// tr(M³) of the principal submatrix of `m` (row-major, `dim` wide) on `idx`.
fn trace_cubed<T: Real>(m: &[T], dim: usize, idx: &[usize]) -> T {
    let rows: Vec<T> = idx
        .par_iter()
        .map(|&i| {
            let mut acc = T::zero();
            for &j in idx {
                let mij = m[i * dim + j];
                if mij == T::zero() {
                    continue;
                }
                let mut sq = T::zero();
                for &k in idx {
                    sq = sq + m[j * dim + k] * m[k * dim + i];
                }
                acc = acc + mij * sq;
            }
            acc
        })
        .collect();
    rows.into_iter().fold(T::zero(), |a, x| a + x)
}

fn order_three<T: Real>(assembly: &BodyAssembly<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    let Some(dmin) = assembly.min_center_distance() else {
        return Ok(T::zero());
    };
    if assembly.bodies.iter().filter(|b| !b.model.is_vacuum()).count() < 2 {
        return Ok(T::zero());
    }
    let failure = std::cell::RefCell::new(None);
    let res = integrate_semi_infinite_adaptive(
        |zeta: T| match order_three_density(assembly, zeta) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::zero()
            }
        },
        T::zero(),
        T::one() / (dmin + dmin),
        &QuadratureConfig { abs_tol: T::zero(), ..*cfg },
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let res = require_converged(res?)?;
    Ok(res.value / (lit::<T>(3.0) * (T::PI() + T::PI())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn pair_kernel_where_gauss_and_kronrod_agree_by_accident() {
        // At this distance the 21-point panel [0.75, 1] of the mapped
        // integral has Gauss and Kronrod sums agreeing 30x below their error.
        let m = DielectricModel::oscillator(1.0, 0.0).unwrap();
        let r = 9.272653955421974;
        let cfg = QuadratureConfig::default().with_rel_tol(1e-11);
        let got = scaled_pair_kernel(&m, &m, r, &cfg).unwrap();
        let s = 1.0 / (2.0 * r);
        let rule = crate::numerics::gauss_legendre::<f64>(40, 0.0, 1.0).unwrap();
        let mut want = 0.0;
        for p in 0..200 {
            let (a, h) = (p as f64 / 200.0, 1.0 / 200.0);
            for &(t, w) in &rule {
                let t = a + h * t;
                let z = s * t / (1.0 - t);
                let jac = s / ((1.0 - t) * (1.0 - t));
                want += w * h * jac * m.cm_unchecked(z).powi(2) * crate::kernels::a_pair_trace(z, r) * r.powi(6);
            }
        }
        assert_relative_eq!(got, want, max_relative = 1e-10);
    }

    fn osc(w0: f64) -> DielectricModel<f64> {
        DielectricModel::oscillator(w0, 0.0).unwrap()
    }

    fn cfg() -> QuadratureConfig<f64> {
        QuadratureConfig::default().with_rel_tol(1e-9)
    }

    fn pair(r: f64, res: usize) -> BodyAssembly<f64> {
        BodyAssembly::new(
            vec![
                SphereBody::new([0.0, 0.0, 0.0], 1.0, osc(1.0)).unwrap(),
                SphereBody::new([0.0, 0.0, r], 1.0, osc(1.0)).unwrap(),
            ],
            res,
        )
        .unwrap()
    }

    #[test]
    fn grid_integrates_ball_volume_and_moments() {
        let s = SphereBody::new([1.0, -2.0, 0.5], 1.5, osc(1.0)).unwrap();
        let nodes = s.quadrature_nodes(6).unwrap();
        let vol: f64 = nodes.iter().map(|n| n.1).sum();
        assert_relative_eq!(vol, s.volume(), max_relative = 1e-12);
        // ∫ |r − c|² = 4π a⁵ / 5
        let second: f64 = nodes
            .iter()
            .map(|(p, w)| w * ((p[0] - 1.0).powi(2) + (p[1] + 2.0).powi(2) + (p[2] - 0.5).powi(2)))
            .sum();
        assert_relative_eq!(second, 4.0 * PI * 1.5f64.powi(5) / 5.0, max_relative = 1e-12);
    }

    #[test]
    fn assembly_validation() {
        let a = SphereBody::new([0.0; 3], 1.0, osc(1.0)).unwrap();
        let b = SphereBody::new([0.0, 0.0, 1.5], 1.0, osc(1.0)).unwrap();
        assert!(BodyAssembly::new(vec![a, b], 4).is_err());
        assert!(BodyAssembly::new(vec![a], 0).is_err());
        assert!(SphereBody::new([0.0; 3], 0.0, osc(1.0)).is_err());
        assert!(order_n_interaction(&pair(5.0, 2), 4, &cfg()).is_err());
    }

    #[test]
    fn single_body_has_no_interaction() {
        let one = BodyAssembly::new(vec![SphereBody::new([0.0; 3], 1.0, osc(1.0)).unwrap()], 3).unwrap();
        assert_eq!(order_n_interaction(&one, 2, &cfg()).unwrap(), 0.0);
        assert_eq!(order_n_interaction(&one, 3, &cfg()).unwrap(), 0.0);
        assert_eq!(order_three_density(&one, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn config_parsing() {
        let text = "# two spheres\n0,0,0,1,oscillator:omega0=1\n\n0,0,25,1,constant:eps=3\n";
        let asm = BodyAssembly::<f64>::parse_config(text, 4).unwrap();
        assert_eq!(asm.bodies().len(), 2);
        assert_eq!(asm.bodies()[1].center, [0.0, 0.0, 25.0]);
        assert_eq!(asm.bodies()[1].model, DielectricModel::constant(3.0).unwrap());
        assert!(BodyAssembly::<f64>::parse_config("0,0,0,1", 4).is_err());
        assert!(BodyAssembly::<f64>::parse_config("0,0,x,1,vacuum", 4).is_err());
    }

    #[test]
    fn polarizability_examples() {
        let big = DielectricModel::constant(1e12).unwrap();
        let a = 1.3;
        let v = 4.0 * PI * a * a * a / 3.0;
        assert_relative_eq!(polarizability(&big, v, 0.0).unwrap(), a * a * a, max_relative = 1e-10);
        assert_eq!(polarizability(&DielectricModel::Vacuum, v, 0.0).unwrap(), 0.0);
        let two = DielectricModel::constant(2.0).unwrap();
        assert_relative_eq!(polarizability(&two, 4.0 * PI, 0.3).unwrap(), 0.75, max_relative = 1e-15);
        assert!(polarizability(&two, 0.0, 0.3).is_err());
    }

    #[test]
    fn casimir_polder_constant_alphas() {
        let (a1, a2, r) = (0.7, 1.9, 6.0);
        let e = casimir_polder_energy(|_| a1, |_| a2, r, &cfg()).unwrap();
        assert_relative_eq!(e, -23.0 * a1 * a2 / (4.0 * PI * r.powi(7)), max_relative = 1e-6);
        let e2 = casimir_polder_energy(|_| a1, |_| a2, 2.0 * r, &cfg()).unwrap();
        assert_relative_eq!(e2 / e, 2f64.powi(-7), max_relative = 1e-9);
        assert!(casimir_polder_energy(|_| a1, |_| a2, 0.0, &cfg()).is_err());
    }

    #[test]
    fn casimir_polder_polynomial_moment() {
        // ∫ e^{−2x} xⁿ dx = n!/2^{n+1}, termwise.
        let coeffs = [3.0, 6.0, 5.0, 2.0, 1.0];
        let mut fact = 1.0;
        let mut termwise = 0.0;
        for (n, c) in coeffs.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            termwise += c * fact / 2f64.powi(n as i32 + 1);
        }
        assert_relative_eq!(termwise, 23.0 / 4.0, max_relative = 1e-15);
        // E_CP at R = 1 with α = 1 is −(1/π)·∫...
        let e = casimir_polder_energy(|_| 1.0, |_| 1.0, 1.0, &cfg()).unwrap();
        assert_relative_eq!(-e * PI, termwise, max_relative = 1e-9);
    }

    #[test]
    fn log_permittivity_closed_form() {
        let v = log_permittivity_integral(&osc(1.0), &cfg()).unwrap();
        assert_relative_eq!(v, PI * (2f64.sqrt() - 1.0), max_relative = 1e-9);
        assert_eq!(log_permittivity_integral(&DielectricModel::<f64>::Vacuum, &cfg()).unwrap(), 0.0);
        assert!(log_permittivity_integral(&DielectricModel::constant(2.0).unwrap(), &cfg()).is_err());
    }

    #[test]
    fn singular_term_scaling() {
        let m = osc(1.0);
        let base = singular_volume_energy(&m, 1.0, 1.0, &cfg()).unwrap();
        assert_relative_eq!(base, (2f64.sqrt() - 1.0) / 2.0, max_relative = 1e-9);
        assert_relative_eq!(singular_volume_energy(&m, 3.0, 1.0, &cfg()).unwrap(), 3.0 * base, max_relative = 1e-14);
        assert_relative_eq!(singular_volume_energy(&m, 1.0, 2.0, &cfg()).unwrap(), base / 8.0, max_relative = 1e-14);
        assert_eq!(singular_volume_energy(&DielectricModel::Vacuum, 1.0, 1.0, &cfg()).unwrap(), 0.0);
        assert!(singular_volume_energy(&m, 1.0, 0.0, &cfg()).is_err());
    }

    #[test]
    fn chebyshev_table_matches_direct_kernel() {
        let m = osc(1.0);
        let c = cfg();
        let table = Chebyshev::fit(|r| scaled_pair_kernel(&m, &m, r, &c), 3.0, 7.0, 1e-9).unwrap();
        for &r in &[3.0, 3.3, 4.71, 5.5, 6.99] {
            let direct = scaled_pair_kernel(&m, &m, r, &c).unwrap();
            assert_relative_eq!(table.eval(r), direct, max_relative = 1e-8);
        }
    }

    // Direct node-pair sum with the ζ-integral done per pair, at a coarse grid.
    #[test]
    fn order_two_matches_direct_pair_sum() {
        let asm = pair(4.0, 3);
        let c = cfg();
        let e = order_n_interaction(&asm, 2, &c).unwrap();
        let g0 = asm.bodies()[0].quadrature_nodes(3).unwrap();
        let g1 = asm.bodies()[1].quadrature_nodes(3).unwrap();
        let m = osc(1.0);
        let mut direct = 0.0;
        for (p, w) in &g0 {
            for (q, v) in &g1 {
                let r = distance(p, q);
                let k = crate::numerics::integrate_semi_infinite(
                    |z: f64| m.cm_parameter(z).unwrap().powi(2) * a_pair_trace(z, r),
                    0.0,
                    &c,
                )
                .unwrap()
                .value;
                direct += w * v * k;
            }
        }
        assert_relative_eq!(e, -direct / (2.0 * PI), max_relative = 1e-7);
    }

    #[test]
    fn order_two_is_attractive_and_decays() {
        let c = QuadratureConfig::default().with_rel_tol(1e-7);
        let mut last = f64::NEG_INFINITY;
        for &r in &[2.5, 4.0, 8.0, 16.0] {
            let e = order_n_interaction(&pair(r, 4), 2, &c).unwrap();
            assert!(e < 0.0);
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn order_two_approaches_casimir_polder() {
        let r = 25.0;
        let asm = pair(r, DEFAULT_RESOLUTION);
        let e2 = order_n_interaction(&asm, 2, &cfg()).unwrap();
        let m = osc(1.0);
        let v = asm.bodies()[0].volume();
        let cp = casimir_polder_energy(
            |z| polarizability(&m, v, z).unwrap(),
            |z| polarizability(&m, v, z).unwrap(),
            r,
            &cfg(),
        )
        .unwrap();
        assert!((e2 / cp - 1.0).abs() < 0.02, "ratio {}", e2 / cp);
    }

    #[test]
    fn order_two_grid_convergence() {
        let c = QuadratureConfig::default().with_rel_tol(1e-8);
        let coarse = order_n_interaction(&pair(10.0, 8), 2, &c).unwrap();
        let fine = order_n_interaction(&pair(10.0, 16), 2, &c).unwrap();
        assert!(((fine - coarse) / fine).abs() < 0.005);
    }

    fn triangle(order: [usize; 3]) -> BodyAssembly<f64> {
        let side = 6.0;
        let verts = [[0.0, 0.0, 0.0], [side, 0.0, 0.0], [side / 2.0, side * 3f64.sqrt() / 2.0, 0.0]];
        let bodies = order.iter().map(|&k| SphereBody::new(verts[k], 1.0, osc(1.0)).unwrap()).collect();
        BodyAssembly::new(bodies, 2).unwrap()
    }

    // Brute-force triple loop over node assignments with at least two bodies.
    #[test]
    fn order_three_density_matches_triple_loop() {
        let asm = triangle([0, 1, 2]);
        let zeta = 0.4;
        let mut nodes = Vec::new();
        for (k, b) in asm.bodies().iter().enumerate() {
            for (p, w) in b.quadrature_nodes(2).unwrap() {
                nodes.push((p, w * b.model.cm_parameter(zeta).unwrap(), k));
            }
        }
        let kernel = |i: usize, j: usize| {
            let (p, q) = (nodes[i].0, nodes[j].0);
            a_real(zeta, [p[0] - q[0], p[1] - q[1], p[2] - q[2]]).unwrap().m
        };
        let mut direct = 0.0;
        for i in 0..nodes.len() {
            for j in 0..nodes.len() {
                for k in 0..nodes.len() {
                    if i == j || j == k || k == i {
                        continue;
                    }
                    let (bi, bj, bk) = (nodes[i].2, nodes[j].2, nodes[k].2);
                    if bi == bj && bj == bk {
                        continue;
                    }
                    let prod = crate::kernels::mat_mul(&crate::kernels::mat_mul(&kernel(i, j), &kernel(j, k)), &kernel(k, i));
                    let tr = prod[0][0] + prod[1][1] + prod[2][2];
                    direct += tr * nodes[i].1 * nodes[j].1 * nodes[k].1;
                }
            }
        }
        let fast = order_three_density(&asm, zeta).unwrap();
        assert_relative_eq!(fast, direct, max_relative = 1e-11);
    }

    #[test]
    fn order_three_vertex_permutations() {
        let c = QuadratureConfig::default().with_rel_tol(1e-8);
        let base = order_n_interaction(&triangle([0, 1, 2]), 3, &c).unwrap();
        assert!(base.is_finite() && base != 0.0);
        for perm in [[1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0]] {
            let e = order_n_interaction(&triangle(perm), 3, &c).unwrap();
            assert_relative_eq!(e, base, max_relative = 1e-10);
        }
    }

    #[test]
    fn coincident_nodes_are_rejected() {
        assert!(a_real(0.5, [0.0; 3]).is_err());
    }
}
