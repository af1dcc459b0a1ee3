//! Globally adaptive Gauss-Kronrod (10/21) quadrature for scalar- and
//! jet-valued integrands on finite and semi-infinite intervals.

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::scalar::{lit, Real};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_111_458_810,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], .., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// A component of an integral whose magnitude is below this fraction of its
/// L1 norm is treated as cancelled; its tolerance is then taken relative to
/// the L1 norm so adaptivity does not stall on a near-zero coefficient.
const CANCELLATION_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        QuadratureConfig { rel_tol: lit(1e-9), abs_tol: lit(1e-14), max_subdivisions: 2000 }
    }
}

impl<T: Real> QuadratureConfig<T> {
    pub fn new(rel_tol: T, abs_tol: T, max_subdivisions: usize) -> Result<Self> {
        let cfg = QuadratureConfig { rel_tol, abs_tol, max_subdivisions };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero()) || !(self.abs_tol >= T::zero()) || self.max_subdivisions == 0 {
            return Err(Error::domain("quadrature config needs rel_tol > 0, abs_tol >= 0, max_subdivisions >= 1"));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: T) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// Values an integrand may return: a fixed-length vector of real components.
pub trait QuadValue<T: Real>: Copy {
    fn components(&self) -> usize;
    fn component(&self, k: usize) -> T;
    fn zeroed(&self) -> Self;
    /// `self += w * x`
    fn axpy(&mut self, w: T, x: &Self);
}

impl<T: Real> QuadValue<T> for T {
    fn components(&self) -> usize {
        1
    }
    fn component(&self, _k: usize) -> T {
        *self
    }
    fn zeroed(&self) -> Self {
        T::zero()
    }
    fn axpy(&mut self, w: T, x: &Self) {
        *self = *self + w * *x;
    }
}

impl<T: Real> QuadValue<T> for Jet<T> {
    fn components(&self) -> usize {
        self.order() + 1
    }
    fn component(&self, k: usize) -> T {
        self.coeff(k)
    }
    fn zeroed(&self) -> Self {
        self.scale(T::zero())
    }
    fn axpy(&mut self, w: T, x: &Self) {
        *self = *self + x.scale(w);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult<T, V> {
    pub value: V,
    /// Largest per-component error estimate.
    pub err_estimate: T,
    pub component_errors: Vec<T>,
    /// Per-component ∫|f|, the scale the relative tolerance refers to when a
    /// component cancels.
    pub component_l1: Vec<T>,
    pub evaluations: usize,
    /// Whether each component met its tolerance.
    pub component_converged: Vec<bool>,
}

impl<T: Real, V> QuadResult<T, V> {
    pub fn converged(&self) -> bool {
        self.component_converged.iter().all(|&c| c)
    }
}

struct Segment<T, V> {
    a: T,
    b: T,
    value: V,
    err: Vec<T>,
    l1: Vec<T>,
}

fn gk21<T, V, F>(f: &mut F, a: T, b: T) -> Result<Segment<T, V>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let half = (b - a) * lit(0.5);
    let center = (a + b) * lit(0.5);
    let eval = |f: &mut F, x: T| -> Result<V> {
        let v = f(x);
        for k in 0..v.components() {
            if !v.component(k).is_finite() {
                return Err(Error::domain(format!("integrand is not finite at x = {x}")));
            }
        }
        Ok(v)
    };

    let fc = eval(f, center)?;
    let n = fc.components();
    let mut fv: Vec<(V, V)> = Vec::with_capacity(10);
    for &x in &XGK[..10] {
        let dx = half * lit(x);
        fv.push((eval(f, center - dx)?, eval(f, center + dx)?));
    }

    let mut kronrod = fc.zeroed();
    let mut gauss = fc.zeroed();
    kronrod.axpy(lit(WGK[10]), &fc);
    for (j, (lo, hi)) in fv.iter().enumerate() {
        kronrod.axpy(lit(WGK[j]), lo);
        kronrod.axpy(lit(WGK[j]), hi);
        if j % 2 == 1 {
            gauss.axpy(lit(WG[j / 2]), lo);
            gauss.axpy(lit(WG[j / 2]), hi);
        }
    }

    let abs_half = half.abs();
    let mut err = Vec::with_capacity(n);
    let mut l1 = Vec::with_capacity(n);
    for k in 0..n {
        let mean = kronrod.component(k) * lit(0.5);
        let mut resabs = lit::<T>(WGK[10]) * fc.component(k).abs();
        let mut resasc = lit::<T>(WGK[10]) * (fc.component(k) - mean).abs();
        for (j, (lo, hi)) in fv.iter().enumerate() {
            let w: T = lit(WGK[j]);
            resabs = resabs + w * (lo.component(k).abs() + hi.component(k).abs());
            resasc = resasc + w * ((lo.component(k) - mean).abs() + (hi.component(k) - mean).abs());
        }
        resabs = resabs * abs_half;
        resasc = resasc * abs_half;
        let mut e = ((kronrod.component(k) - gauss.component(k)) * half).abs();
        if resasc != T::zero() && e != T::zero() {
            let scale = (lit::<T>(200.0) * e / resasc).powf(lit(1.5));
            e = if scale < T::one() { resasc * scale } else { resasc };
        }
        let roundoff = lit::<T>(50.0) * T::epsilon() * resabs;
        if roundoff > e {
            e = roundoff;
        }
        err.push(e);
        l1.push(resabs);
    }
    let mut value = fc.zeroed();
    value.axpy(half, &kronrod);
    Ok(Segment { a, b, value, err, l1 })
}

fn tolerance<T: Real>(cfg: &QuadratureConfig<T>, value: T, l1: T) -> T {
    let scale = value.abs().max(l1 * lit(CANCELLATION_FLOOR));
    cfg.abs_tol.max(cfg.rel_tol * scale)
}

/// Core adaptive driver. Always returns the best estimate; convergence is
/// reported per component.
pub fn integrate_adaptive<T, V, F>(mut f: F, a: T, b: T, cfg: &QuadratureConfig<T>) -> Result<QuadResult<T, V>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration limits must be finite; use integrate_semi_infinite"));
    }
    let first = gk21(&mut f, a, b)?;
    let n = first.err.len();
    let mut evaluations = 21;
    let mut segments = vec![first];
    let mut frozen = vec![false];

    loop {
        let mut value = segments[0].value.zeroed();
        let mut err = vec![T::zero(); n];
        let mut l1 = vec![T::zero(); n];
        for s in &segments {
            value.axpy(T::one(), &s.value);
            for k in 0..n {
                err[k] = err[k] + s.err[k];
                l1[k] = l1[k] + s.l1[k];
            }
        }
        let tols: Vec<T> = (0..n).map(|k| tolerance(cfg, value.component(k), l1[k])).collect();
        let ok: Vec<bool> = (0..n).map(|k| err[k] <= tols[k]).collect();

        let finish = |ok: Vec<bool>| QuadResult {
            value,
            err_estimate: err.iter().copied().fold(T::zero(), T::max),
            component_errors: err.clone(),
            component_l1: l1.clone(),
            evaluations,
            component_converged: ok,
        };

        if (segments.len() > 1 && ok.iter().all(|&c| c)) || segments.len() >= cfg.max_subdivisions {
            return Ok(finish(ok));
        }

        // Refine the segment contributing most to the worst component.
        let worst = (0..n)
            .max_by(|&i, &j| {
                let ri = err[i] / tols[i].max(T::min_positive_value());
                let rj = err[j] / tols[j].max(T::min_positive_value());
                ri.partial_cmp(&rj).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let target = segments
            .iter()
            .enumerate()
            .filter(|(i, _)| !frozen[*i])
            .max_by(|(_, x), (_, y)| x.err[worst].partial_cmp(&y.err[worst]).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i);
        let Some(idx) = target else {
            return Ok(finish(ok));
        };

        let s = segments.swap_remove(idx);
        frozen.swap_remove(idx);
        let mid = (s.a + s.b) * lit(0.5);
        let width = (s.b - s.a).abs();
        let resolvable = width > lit::<T>(100.0) * T::epsilon() * s.a.abs().max(s.b.abs()).max(T::min_positive_value());
        if !resolvable || !(mid > s.a.min(s.b) && mid < s.a.max(s.b)) {
            segments.push(s);
            frozen.push(true);
            continue;
        }
        let mut left = gk21(&mut f, s.a, mid)?;
        let mut right = gk21(&mut f, mid, s.b)?;
        evaluations += 42;
        // Gauss and Kronrod can agree by accident; the parent's measured
        // error bounds what the children may claim.
        for k in 0..n {
            let diff = (s.value.component(k) - left.value.component(k) - right.value.component(k)).abs() * lit(0.5);
            left.err[k] = left.err[k].max(diff);
            right.err[k] = right.err[k].max(diff);
        }
        segments.push(left);
        segments.push(right);
        frozen.push(false);
        frozen.push(false);
    }
}

/// Turns an unconverged result into [`Error::NonConvergence`].
pub fn require_converged<T: Real, V: QuadValue<T>>(r: QuadResult<T, V>) -> Result<QuadResult<T, V>> {
    if r.converged() {
        Ok(r)
    } else {
        let worst = (0..r.component_errors.len())
            .filter(|&k| !r.component_converged[k])
            .max_by(|&i, &j| {
                r.component_errors[i]
                    .partial_cmp(&r.component_errors[j])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        Err(Error::NonConvergence {
            estimate: r.value.component(worst).to_f64().unwrap_or(f64::NAN),
            error: r.component_errors[worst].to_f64().unwrap_or(f64::NAN),
            evaluations: r.evaluations,
        })
    }
}

/// ∫_a^b f(x) dx for scalar f.
pub fn integrate<T, F>(f: F, a: T, b: T, cfg: &QuadratureConfig<T>) -> Result<QuadResult<T, T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    require_converged(integrate_adaptive(f, a, b, cfg)?)
}

/// Coefficient-wise ∫_a^b of a jet-valued integrand on a shared mesh.
pub fn integrate_jet<T, F>(f: F, a: T, b: T, cfg: &QuadratureConfig<T>) -> Result<QuadResult<T, Jet<T>>>
where
    T: Real,
    F: FnMut(T) -> Jet<T>,
{
    require_converged(integrate_adaptive(f, a, b, cfg)?)
}

/// Maps ∫_a^∞ f(x) dx onto t ∈ [0, 1) with x = a + scale·t/(1 − t).
pub fn semi_infinite<T, V, F>(mut f: F, a: T, scale: T) -> impl FnMut(T) -> V
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    move |t: T| {
        let one_minus = T::one() - t;
        let x = a + scale * t / one_minus;
        let jac = scale / (one_minus * one_minus);
        let fx = f(x);
        let mut out = fx.zeroed();
        out.axpy(jac, &fx);
        out
    }
}

/// ∫_a^∞ f(x) dx with the map x = a + scale·t/(1 − t).
pub fn integrate_semi_infinite_adaptive<T, V, F>(
    f: F,
    a: T,
    scale: T,
    cfg: &QuadratureConfig<T>,
) -> Result<QuadResult<T, V>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    if !(scale > T::zero()) || !a.is_finite() {
        return Err(Error::domain("semi-infinite map needs finite a and scale > 0"));
    }
    integrate_adaptive(semi_infinite(f, a, scale), T::zero(), T::one(), cfg)
}

/// ∫_a^∞ f(x) dx for scalar f, with x = a + t/(1 − t).
pub fn integrate_semi_infinite<T, F>(f: F, a: T, cfg: &QuadratureConfig<T>) -> Result<QuadResult<T, T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    require_converged(integrate_semi_infinite_adaptive(f, a, T::one(), cfg)?)
}

/// Gauss-Legendre nodes and weights on [a, b].
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> Result<Vec<(T, T)>> {
    if n == 0 {
        return Err(Error::domain("Gauss-Legendre rule needs at least one node"));
    }
    let mut out = Vec::with_capacity(n);
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    for i in 0..n {
        // Newton iteration on P_n in f64, seeded by the Tricomi estimate.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid + half * lit(x), half * lit(w)));
    }
    Ok(out)
}
