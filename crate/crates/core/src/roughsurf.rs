//! Second-order energy of two half-spaces with arbitrary periodic boundary
//! profiles h₁(x) (lower body) and h₂(x) (upper body, displaced by H).
//!
//! At this order the energy is a double area integral of a two-point kernel:
//!
//! ```text
//! E₂ = −1/(128π³) ∫dζ ζ⁴ β₁β₂ ∬ d²x d²x′ W(ζ|x − x′|, ζ[H + h₂(x) − h₁(x′)])
//! ```
//!
//! The x′ integral of W at fixed gap is (2π/ζ²) ℒ(ζ·gap), so the energy is
//! split into a local term Σ_x δA ℰ₂(H + h₂(x) − h₁(x)) and a pair
//! correction that only involves the variation of h₁ around each x. The
//! correction vanishes identically when either profile is flat.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::dielectric::DielectricModel;
use crate::error::{Error, Result};
use crate::numerics::{exp_integral_e, gamma_zero, gauss_legendre, integrate_semi_infinite_adaptive, require_converged, QuadratureConfig};
use crate::scalar::{from_usize, lit, Real};

/// Kernel arguments with 2√(y² + h²) beyond this are dropped.
pub const KERNEL_CUTOFF: f64 = 40.0;
/// Upper limit on rings of periodic images in the pair correction.
pub const MAX_IMAGE_RINGS: usize = 64;
/// Floor on the relative accuracy of the correction-kernel table.
const TABLE_TOL_FLOOR: f64 = 1e-6;
const MAX_TABLE_NODES: usize = 257;

#[derive(Debug, Clone, PartialEq)]
pub enum HeightProfile<T> {
    Flat { offset: T },
    Sinusoid { amplitude: T, wavevector: [T; 2], phase: T },
    /// Square, periodic N×N samples with the given spacing; `samples[i][j]`
    /// sits at ((j + ½)·spacing, (i + ½)·spacing).
    Grid { samples: Vec<Vec<T>>, spacing: T },
}

impl<T: Real> HeightProfile<T> {
    pub fn flat() -> Self {
        HeightProfile::Flat { offset: T::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HeightProfile::Flat { offset } => finite(*offset, "offset"),
            HeightProfile::Sinusoid { amplitude, wavevector, phase } => {
                finite(*amplitude, "amplitude")?;
                finite(*phase, "phase")?;
                finite(wavevector[0], "wavevector")?;
                finite(wavevector[1], "wavevector")
            }
            HeightProfile::Grid { samples, spacing } => {
                let n = samples.len();
                if n < 4 {
                    return Err(Error::domain(format!("height grid must be at least 4x4, got {n} rows")));
                }
                if samples.iter().any(|row| row.len() != n) {
                    return Err(Error::domain("height grid must be square"));
                }
                if samples.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::domain("height grid contains non-finite values"));
                }
                if !(*spacing > T::zero()) || !spacing.is_finite() {
                    return Err(Error::domain("grid spacing must be finite and > 0"));
                }
                Ok(())
            }
        }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            HeightProfile::Flat { .. } => true,
            HeightProfile::Sinusoid { amplitude, wavevector, .. } => {
                *amplitude == T::zero() || (wavevector[0] == T::zero() && wavevector[1] == T::zero())
            }
            HeightProfile::Grid { samples, .. } => {
                let first = samples[0][0];
                samples.iter().flatten().all(|&v| v == first)
            }
        }
    }

    fn at(&self, x: T, y: T, i: usize, j: usize) -> T {
        match self {
            HeightProfile::Flat { offset } => *offset,
            HeightProfile::Sinusoid { amplitude, wavevector, phase } => {
                *amplitude * (wavevector[0] * x + wavevector[1] * y + *phase).cos()
            }
            HeightProfile::Grid { samples, .. } => samples[i][j],
        }
    }

    fn grid_geometry(&self) -> Option<(usize, T)> {
        match self {
            HeightProfile::Grid { samples, spacing } => Some((samples.len(), *spacing)),
            _ => None,
        }
    }

    /// Reads N rows of N comma-separated heights preceded by a
    /// `# spacing=<value>` header line.
    pub fn parse_grid_csv(text: &str) -> Result<Self> {
        let mut spacing = None;
        let mut samples = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((key, val)) = rest.split_once('=') {
                    if key.trim() == "spacing" {
                        spacing = Some(parse_num::<T>(val, lineno)?);
                    }
                }
                continue;
            }
            let row = line.split(',').map(|v| parse_num::<T>(v, lineno)).collect::<Result<Vec<T>>>()?;
            samples.push(row);
        }
        let spacing = spacing.ok_or_else(|| Error::input("height grid is missing the '# spacing=' header"))?;
        let profile = HeightProfile::Grid { samples, spacing };
        profile.validate().map_err(|e| Error::input(e.to_string()))?;
        Ok(profile)
    }

    fn shifted(&self, by: T) -> Self {
        match self {
            HeightProfile::Flat { offset } => HeightProfile::Flat { offset: *offset + by },
            // Sinusoids carry no offset; callers reject them.
            HeightProfile::Sinusoid { .. } => self.clone(),
            HeightProfile::Grid { samples, spacing } => HeightProfile::Grid {
                samples: samples.iter().map(|r| r.iter().map(|&v| v + by).collect()).collect(),
                spacing: *spacing,
            },
        }
    }

    /// The profile reflected through z = 0.
    pub fn negated(&self) -> Self {
        match self {
            HeightProfile::Flat { offset } => HeightProfile::Flat { offset: -*offset },
            HeightProfile::Sinusoid { amplitude, wavevector, phase } => {
                HeightProfile::Sinusoid { amplitude: -*amplitude, wavevector: *wavevector, phase: *phase }
            }
            HeightProfile::Grid { samples, spacing } => HeightProfile::Grid {
                samples: samples.iter().map(|r| r.iter().map(|&v| -v).collect()).collect(),
                spacing: *spacing,
            },
        }
    }
}

fn parse_num<T: Real>(s: &str, lineno: usize) -> Result<T> {
    s.trim()
        .parse::<T>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::input(format!("line {}: bad number '{}'", lineno + 1, s.trim())))
}

fn finite<T: Real>(v: T, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite")))
    }
}

impl<T: Real> fmt::Display for HeightProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeightProfile::Flat { offset } => write!(f, "flat(offset={offset})"),
            HeightProfile::Sinusoid { amplitude, wavevector, phase } => write!(
                f,
                "sinusoid(amplitude={amplitude}, k=({}, {}), phase={phase})",
                wavevector[0], wavevector[1]
            ),
            HeightProfile::Grid { samples, spacing } => write!(f, "grid({}x{}, spacing={spacing})", samples.len(), samples.len()),
        }
    }
}

/// Two rough half-spaces over one square periodic cell.
///
/// Analytic profiles are sampled at `samples × samples` cell midpoints;
/// a grid profile fixes both the sampling and the cell side.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughPair<T> {
    pub model1: DielectricModel<T>,
    pub model2: DielectricModel<T>,
    pub separation: T,
    pub h1: HeightProfile<T>,
    pub h2: HeightProfile<T>,
    pub cell_side: T,
    pub samples: usize,
}

/// Breakdown of a second-order rough-surface energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughEnergy<T> {
    /// Energy per cell.
    pub energy: T,
    /// Σ_x δA ℰ₂(local gap).
    pub local: T,
    pub correction: T,
    /// Estimated magnitude of the neglected image rings.
    pub tail_bound: T,
    pub rings: usize,
}

impl<T: Real> RoughPair<T> {
    pub fn new(
        model1: DielectricModel<T>,
        model2: DielectricModel<T>,
        separation: T,
        h1: HeightProfile<T>,
        h2: HeightProfile<T>,
        cell_side: T,
        samples: usize,
    ) -> Result<Self> {
        let mut pair = RoughPair { model1, model2, separation, h1, h2, cell_side, samples };
        if let Some((n, spacing)) = pair.h1.grid_geometry().or(pair.h2.grid_geometry()) {
            pair.samples = n;
            pair.cell_side = from_usize::<T>(n) * spacing;
        }
        pair.validate()?;
        Ok(pair)
    }

    pub fn cell_area(&self) -> T {
        self.cell_side * self.cell_side
    }

    fn spacing(&self) -> T {
        self.cell_side / from_usize(self.samples)
    }

    pub fn validate(&self) -> Result<()> {
        self.model1.validate()?;
        self.model2.validate()?;
        self.h1.validate()?;
        self.h2.validate()?;
        if !(self.separation > T::zero()) || !self.separation.is_finite() {
            return Err(Error::domain("separation must be finite and > 0"));
        }
        if !(self.cell_side > T::zero()) || !self.cell_side.is_finite() || self.samples == 0 {
            return Err(Error::domain("cell side must be > 0 with at least one sample"));
        }
        for h in [&self.h1, &self.h2] {
            if let Some((n, spacing)) = h.grid_geometry() {
                let side = from_usize::<T>(n) * spacing;
                if n != self.samples || (side - self.cell_side).abs() > lit::<T>(1e-12) * side {
                    return Err(Error::domain("height grids must share size and spacing"));
                }
            }
            if let HeightProfile::Sinusoid { wavevector, .. } = h {
                for &k in wavevector {
                    let turns = k * self.cell_side / (T::PI() + T::PI());
                    if (turns - turns.round()).abs() > lit(1e-9) {
                        return Err(Error::domain("sinusoid is not periodic on the cell"));
                    }
                }
            }
        }
        let (h1, h2) = (self.heights(&self.h1), self.heights(&self.h2));
        let top = h1.iter().fold(T::neg_infinity(), |a, &v| a.max(v));
        let bottom = h2.iter().fold(T::infinity(), |a, &v| a.min(v));
        if !(self.separation + bottom - top > T::zero()) {
            return Err(Error::domain("surfaces touch or interpenetrate"));
        }
        Ok(())
    }

    /// Midpoint sample positions of the cell, row-major.
    fn positions(&self) -> Vec<(T, T, usize, usize)> {
        let dx = self.spacing();
        let half = lit::<T>(0.5);
        let mut out = Vec::with_capacity(self.samples * self.samples);
        for i in 0..self.samples {
            for j in 0..self.samples {
                out.push(((from_usize::<T>(j) + half) * dx, (from_usize::<T>(i) + half) * dx, i, j));
            }
        }
        out
    }

    fn heights(&self, h: &HeightProfile<T>) -> Vec<T> {
        self.positions().into_iter().map(|(x, y, i, j)| h.at(x, y, i, j)).collect()
    }

    /// Same geometry with both bodies exchanged and reflected through z = 0.
    pub fn swapped(&self) -> Self {
        RoughPair {
            model1: self.model2,
            model2: self.model1,
            separation: self.separation,
            h1: self.h2.negated(),
            h2: self.h1.negated(),
            cell_side: self.cell_side,
            samples: self.samples,
        }
    }

    /// Moves the upper body's reference plane up by `d` and its profile
    /// down by `d`, leaving the geometry unchanged.
    pub fn with_offset(&self, d: T) -> Result<Self> {
        if let HeightProfile::Sinusoid { .. } = self.h2 {
            return Err(Error::domain("offsets are applied to flat or grid profiles"));
        }
        let mut out = self.clone();
        out.separation = self.separation + d;
        out.h2 = self.h2.shifted(-d);
        out.validate()?;
        Ok(out)
    }
}

/// Kernel W(y, h) of the pair-additive second-order energy, for
/// dimensionless transverse distance y ≥ 0 and gap h > 0.
pub fn w_kernel<T: Real>(y: T, h: T, cfg: &QuadratureConfig<T>) -> Result<T> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::domain(format!("gap must be finite and > 0, got {h}")));
    }
    let y = y.abs();
    let y2 = y * y;
    let h2 = h * h;
    let rho = (y2 + h2).sqrt();
    if rho + rho > lit(700.0) {
        return Ok(T::zero());
    }
    let head = lit::<T>(8.0) * gamma_zero(rho + rho)?;
    // The exponential varies on the scale h²s ~ 1 + 2y.
    let scale = ((T::one() + y + y) / h2).max(T::one());
    let tail = require_converged(integrate_semi_infinite_adaptive(
        |s: T| w_tail_integrand(y2, h2, s),
        T::one(),
        scale,
        &QuadratureConfig { abs_tol: cfg.rel_tol * head.abs() * lit(1e-3), ..*cfg },
    )?)?;
    Ok(head + tail.value)
}

fn w_tail_integrand<T: Real>(y2: T, h2: T, s: T) -> T {
    let q = y2 + h2 * s;
    let sq = q.sqrt();
    let bracket = lit::<T>(3.0) / (q * q) + lit::<T>(6.0) / (q * sq) + lit::<T>(4.0) * (T::one() - h2 * s) / q;
    (-(sq + sq)).exp() * bracket / (s * s.sqrt())
}

/// W for a transverse 2-vector; depends only on its length.
pub fn w_kernel_vec<T: Real>(y: [T; 2], h: T, cfg: &QuadratureConfig<T>) -> Result<T> {
    w_kernel(y[0].hypot(y[1]), h, cfg)
}

/// ℒ(u) = 4(u² − 1)E₁(2u) + e^{−2u}(1 + 2u + u² − 2u³)/u².
///
/// For u ≥ 1 the equivalent 2E₃(2u) − 4E₁(2u) + e^{−2u}(2/u + 1/u²) is
/// used, which avoids the cancellation of the polynomial terms.
pub fn l_function<T: Real>(u: T) -> Result<T> {
    if !(u > T::zero()) || !u.is_finite() {
        return Err(Error::domain(format!("argument must be finite and > 0, got {u}")));
    }
    let z = u + u;
    let e1 = exp_integral_e(1, z)?;
    let decay = (-z).exp();
    if u < T::one() {
        let poly = T::one() + z + u * u - z * u * u;
        Ok(lit::<T>(4.0) * (u * u - T::one()) * e1 + decay * poly / (u * u))
    } else {
        let e3 = exp_integral_e(3, z)?;
        Ok(e3 + e3 - lit::<T>(4.0) * e1 + decay * (lit::<T>(2.0) / u + T::one() / (u * u)))
    }
}

/// Flat-surface second-order energy per area,
/// ℰ₂(H) = −1/(64π²) ∫dζ ζ² ℒ(ζH) β₁(iζ)β₂(iζ).
pub fn energy_flat_reference<T: Real>(
    model1: &DielectricModel<T>,
    model2: &DielectricModel<T>,
    separation: T,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    model1.validate()?;
    model2.validate()?;
    cfg.validate()?;
    if !(separation > T::zero()) || !separation.is_finite() {
        return Err(Error::domain("separation must be finite and > 0"));
    }
    if model1.is_vacuum() || model2.is_vacuum() {
        return Ok(T::zero());
    }
    let h = separation;
    let failure = std::cell::RefCell::new(None);
    // x = ζH; x²ℒ(x) → 1 as x → 0.
    let res = integrate_semi_infinite_adaptive(
        |x: T| {
            if x == T::zero() {
                let b = model1.cm_unchecked(T::zero()) * model2.cm_unchecked(T::zero());
                return b;
            }
            let zeta = x / h;
            match l_function(x) {
                Ok(l) => x * x * l * model1.cm_unchecked(zeta) * model2.cm_unchecked(zeta),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    T::zero()
                }
            }
        },
        T::zero(),
        h.min(T::one()),
        cfg,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let res = require_converged(res?)?;
    Ok(-res.value / (lit::<T>(64.0 * PI * PI) * h * h * h))
}

/// Uniform-grid piecewise-cubic interpolant on [x0, x1] × [y0, y1]; each
/// axis uses the four nearest nodes, one-sided at the edges.
struct LocalCubic<T> {
    x0: T,
    y0: T,
    dx: T,
    dy: T,
    nx: usize,
    ny: usize,
    values: Vec<T>,
}

/// Stencil start and Lagrange weights for coordinate `v` on a uniform axis.
fn cubic_stencil<T: Real>(v: T, v0: T, dv: T, n: usize) -> (usize, [T; 4]) {
    let s = ((v - v0) / dv).max(T::zero()).min(from_usize(n - 1));
    let cell = s.floor().to_usize().unwrap_or(0).min(n - 2);
    let start = cell.saturating_sub(1).min(n - 4);
    let t = s - from_usize(start);
    let mut w = [T::one(); 4];
    for (k, wk) in w.iter_mut().enumerate() {
        for m in 0..4 {
            if m != k {
                *wk = *wk * (t - from_usize(m)) / (lit::<T>(k as f64) - lit(m as f64));
            }
        }
    }
    (start, w)
}

impl<T: Real> LocalCubic<T> {
    fn new(x: (T, T), y: (T, T), nx: usize, ny: usize, values: Vec<T>) -> Self {
        LocalCubic {
            x0: x.0,
            y0: y.0,
            dx: (x.1 - x.0) / from_usize(nx - 1),
            dy: (y.1 - y.0) / from_usize(ny - 1),
            nx,
            ny,
            values,
        }
    }

    fn eval(&self, x: T, y: T) -> T {
        let (i0, wx) = cubic_stencil(x, self.x0, self.dx, self.nx);
        let (j0, wy) = cubic_stencil(y, self.y0, self.dy, self.ny);
        let mut acc = T::zero();
        for (a, &wa) in wx.iter().enumerate() {
            let row = &self.values[(i0 + a) * self.ny + j0..(i0 + a) * self.ny + j0 + 4];
            let mut r = T::zero();
            for (b, &wb) in wy.iter().enumerate() {
                r = r + wb * row[b];
            }
            acc = acc + wa * r;
        }
        acc
    }
}

/// Frequency-integrated pair kernel K(d, g) = ∫dζ ζ⁴ β₁β₂ W(ζd, ζg), stored
/// as ρ⁵K over (ln ρ, θ) with ρ = √(d² + g²), θ = atan2(g, d).
///
/// With t = ζρ, ρ⁵K = ∫dt t⁴ W(t cos θ, t sin θ) β₁β₂(t/ρ); the W factor is
/// sampled once per θ on a fixed composite Gauss-Legendre rule in t.
struct PairKernelTable<T> {
    table: LocalCubic<T>,
}

/// Reference evaluation of ρ⁵K by nested adaptive quadrature.
#[cfg(test)]
fn scaled_pair_kernel<T: Real>(
    m1: &DielectricModel<T>,
    m2: &DielectricModel<T>,
    rho: T,
    theta: T,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    let (c, s) = (theta.cos(), theta.sin());
    let cutoff = lit::<T>(KERNEL_CUTOFF * 0.5);
    let failure = std::cell::RefCell::new(None);
    let res = integrate_semi_infinite_adaptive(
        |t: T| {
            if t == T::zero() || t > cutoff {
                return T::zero();
            }
            let zeta = t / rho;
            match w_kernel(t * c, t * s, cfg) {
                Ok(w) => t.powi(4) * w * m1.cm_unchecked(zeta) * m2.cm_unchecked(zeta),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    T::zero()
                }
            }
        },
        T::zero(),
        T::one(),
        &QuadratureConfig { abs_tol: T::zero(), ..*cfg },
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(require_converged(res?)?.value)
}

/// Composite Gauss-Legendre nodes on [0, KERNEL_CUTOFF/2] with dyadic panels
/// refined towards t = 0 down to `t_min`.
fn t_rule<T: Real>(t_min: T) -> Result<Vec<(T, T)>> {
    let top = lit::<T>(KERNEL_CUTOFF * 0.5);
    let mut edges = vec![top];
    let mut e = lit::<T>(16.0);
    while e > t_min {
        edges.push(e);
        e = e * lit(0.5);
    }
    edges.push(T::zero());
    edges.reverse();
    let mut rule = Vec::new();
    for w in edges.windows(2) {
        rule.extend(gauss_legendre(16, w[0], w[1])?);
    }
    Ok(rule)
}

impl<T: Real> PairKernelTable<T> {
    fn build(
        m1: &DielectricModel<T>,
        m2: &DielectricModel<T>,
        rho: (T, T),
        theta_min: T,
        cfg: &QuadratureConfig<T>,
    ) -> Result<Self> {
        let inner = cfg.with_rel_tol(cfg.rel_tol.min(lit(1e-9)));
        let x = (rho.0.ln(), rho.1.ln().max(rho.0.ln() + lit(1e-3)));
        let y = (theta_min.min(lit(PI / 2.0 - 1e-3)), lit(PI / 2.0));
        // β varies on t ~ ρ ω₀; resolve well below the smallest such scale.
        let omega = [m1, m2].iter().map(|m| resonance(m)).fold(T::one(), |a: T, b| a.min(b));
        let rule = t_rule(rho.0 * omega * lit(1e-3))?;
        let tol = cfg.rel_tol.max(lit(TABLE_TOL_FLOOR));

        let column = |theta: T| -> Result<Vec<T>> {
            let (c, s) = (theta.cos(), theta.sin());
            rule.iter().map(|&(t, w)| Ok(w * t.powi(4) * w_kernel(t * c, t * s, &inner)?)).collect()
        };
        let build = |n: usize, cache: &mut Vec<(T, Vec<T>)>| -> Result<LocalCubic<T>> {
            let dy = (y.1 - y.0) / from_usize(n - 1);
            let thetas: Vec<T> = (0..n).map(|j| y.0 + dy * from_usize(j)).collect();
            let missing: Vec<T> = thetas.iter().copied().filter(|th| !cache.iter().any(|(c, _)| c == th)).collect();
            let fresh = missing.par_iter().map(|&th| column(th).map(|v| (th, v))).collect::<Result<Vec<_>>>()?;
            cache.extend(fresh);
            let cols: Vec<&Vec<T>> = thetas
                .iter()
                .map(|th| &cache.iter().find(|(c, _)| c == th).expect("cached column").1)
                .collect();
            let dx = (x.1 - x.0) / from_usize(n - 1);
            let mut values = vec![T::zero(); n * n];
            for i in 0..n {
                let r = (x.0 + dx * from_usize(i)).exp();
                let betas: Vec<T> = rule.iter().map(|&(t, _)| m1.cm_unchecked(t / r) * m2.cm_unchecked(t / r)).collect();
                for (j, col) in cols.iter().enumerate() {
                    values[i * n + j] = col.iter().zip(&betas).fold(T::zero(), |a, (&v, &b)| a + v * b);
                }
            }
            Ok(LocalCubic::new(x, y, n, n, values))
        };

        let mut cache = Vec::new();
        let mut n = 9;
        let mut table = build(n, &mut cache)?;
        loop {
            let finer = 2 * n - 1;
            let next = build(finer, &mut cache)?;
            let scale = next.values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            let mut worst = T::zero();
            for k in 0..finer * finer {
                let (i, j) = (k / finer, k % finer);
                if i % 2 == 0 && j % 2 == 0 {
                    continue;
                }
                let px = x.0 + next.dx * from_usize(i);
                let py = y.0 + next.dy * from_usize(j);
                worst = worst.max((table.eval(px, py) - next.values[k]).abs());
            }
            table = next;
            n = finer;
            if worst <= tol * scale {
                return Ok(PairKernelTable { table });
            }
            if n >= MAX_TABLE_NODES {
                return Err(Error::NonConvergence {
                    estimate: f64::NAN,
                    error: (worst / scale).to_f64().unwrap_or(f64::NAN),
                    evaluations: n * n,
                });
            }
        }
    }

    fn eval(&self, d: T, g: T) -> T {
        let rho = d.hypot(g);
        let theta = g.atan2(d);
        self.table.eval(rho.ln(), theta) / rho.powi(5)
    }
}

/// Frequency scale on which β(iζ) changes.
fn resonance<T: Real>(m: &DielectricModel<T>) -> T {
    match *m {
        DielectricModel::Oscillator { omega_p, omega_0, gamma } => omega_0.max(gamma).min(omega_p).max(lit(1e-6)),
        _ => T::one(),
    }
}

/// Energy per cell of the rough pair, with its local/correction breakdown.
pub fn energy_second_order_detailed<T: Real>(pair: &RoughPair<T>, cfg: &QuadratureConfig<T>) -> Result<RoughEnergy<T>> {
    pair.validate()?;
    cfg.validate()?;
    let zero = RoughEnergy { energy: T::zero(), local: T::zero(), correction: T::zero(), tail_bound: T::zero(), rings: 0 };
    if pair.model1.is_vacuum() || pair.model2.is_vacuum() {
        return Ok(zero);
    }
    let da = pair.spacing() * pair.spacing();
    let h1 = pair.heights(&pair.h1);
    let h2 = pair.heights(&pair.h2);
    let gaps: Vec<T> = h1.iter().zip(&h2).map(|(&a, &b)| pair.separation + b - a).collect();

    // Local term: distinct gaps are few for symmetric profiles.
    let mut sorted = gaps.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite gaps"));
    sorted.dedup();
    let flat_values = sorted
        .par_iter()
        .map(|&g| energy_flat_reference(&pair.model1, &pair.model2, g, cfg))
        .collect::<Result<Vec<T>>>()?;
    let mut local = T::zero();
    for &g in &gaps {
        let k = sorted.binary_search_by(|v| v.partial_cmp(&g).expect("finite")).expect("gap present");
        local = local + flat_values[k];
    }
    local = local * da;

    if pair.h1.is_flat() || pair.h2.is_flat() {
        return Ok(RoughEnergy { energy: local, local, correction: T::zero(), tail_bound: T::zero(), rings: 0 });
    }

    let (correction, tail_bound, rings) = pair_correction(pair, &h1, &h2, &gaps, local, cfg)?;
    Ok(RoughEnergy { energy: local + correction, local, correction, tail_bound, rings })
}

/// Second-order energy per cell.
pub fn energy_second_order<T: Real>(pair: &RoughPair<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    Ok(energy_second_order_detailed(pair, cfg)?.energy)
}

fn pair_correction<T: Real>(
    pair: &RoughPair<T>,
    h1: &[T],
    h2: &[T],
    gaps: &[T],
    local: T,
    cfg: &QuadratureConfig<T>,
) -> Result<(T, T, usize)> {
    let pos = pair.positions();
    let side = pair.cell_side;
    let da = pair.spacing() * pair.spacing();
    let max_of = |v: &[T]| v.iter().fold(T::neg_infinity(), |a, &x| a.max(x));
    let min_of = |v: &[T]| v.iter().fold(T::infinity(), |a, &x| a.min(x));
    let g_min = pair.separation + min_of(h2) - max_of(h1);
    let g_max = pair.separation + max_of(h2) - min_of(h1);
    let rings_cap = MAX_IMAGE_RINGS;
    let rho_max = (from_usize::<T>(rings_cap + 1) * side * lit(2f64.sqrt())).hypot(g_max);
    let theta_min = g_min.atan2(rho_max);
    let table = PairKernelTable::build(&pair.model1, &pair.model2, (g_min, rho_max), theta_min, cfg)?;

    let ring_sum = |k: usize| -> T {
        let k = k as isize;
        let mut images = Vec::new();
        for a in -k..=k {
            for b in -k..=k {
                if a.abs().max(b.abs()) == k {
                    images.push((lit::<T>(a as f64) * side, lit::<T>(b as f64) * side));
                }
            }
        }
        let rows: Vec<T> = (0..pos.len())
            .into_par_iter()
            .map(|i| {
                let (xi, yi, _, _) = pos[i];
                let g0 = gaps[i];
                let mut acc = T::zero();
                for &(ox, oy) in &images {
                    for (j, &(xj, yj, _, _)) in pos.iter().enumerate() {
                        let d = (xi - xj - ox).hypot(yi - yj - oy);
                        if d == T::zero() {
                            continue;
                        }
                        let g = pair.separation + h2[i] - h1[j];
                        acc = acc + table.eval(d, g) - table.eval(d, g0);
                    }
                }
                acc
            })
            .collect();
        rows.into_iter().fold(T::zero(), |a, x| a + x)
    };

    let pref = -da * da / lit::<T>(128.0 * PI * PI * PI);
    let mut total = T::zero();
    for k in 0..=rings_cap {
        let shell = ring_sum(k) * pref;
        total = total + shell;
        // Shells fall off like k⁻⁴; the remaining tail is about k/3 shells.
        let tail = shell.abs() * from_usize::<T>(k) / lit(3.0);
        if k >= 2 && tail <= cfg.rel_tol * (local + total).abs().max(lit::<T>(1e-300)) {
            return Ok((total, tail, k));
        }
    }
    Err(Error::NonConvergence {
        estimate: total.to_f64().unwrap_or(f64::NAN),
        error: f64::NAN,
        evaluations: rings_cap,
    })
}
