//! Two parallel half-spaces: exact Lifshitz energy per unit area, its
//! order-by-order expansion in a formal contrast amplitude λ, the
//! finite-temperature Matsubara sum, and a convergence classifier for the
//! resulting partial sums.
//!
//! With x = ζH the zero-temperature energy per area is
//!
//! ```text
//! ℰ = 1/(4π² H³) ∫₀^∞ dx x² ∫₁^∞ dp p { ln[1 − r₁ᵀᴱ r₂ᵀᴱ e^{−2px}] + ln[1 − r₁ᵀᴹ r₂ᵀᴹ e^{−2px}] }
//! ```
//!
//! with s = √(ε − 1 + p²), rᵀᴱ = (s − p)/(s + p) and rᵀᴹ = (s − pε)/(s + pε).
//! The reflection coefficients are evaluated in the cancellation-free forms
//! rᵀᴱ = δ/(s + p)² and rᵀᴹ = δ(1 − p²(2 + δ))/(s + p(1 + δ))², δ = ε − 1.

use std::cell::{Cell, RefCell};
use std::fmt;
use std::str::FromStr;

use crate::dielectric::{contrast_from_cm, DielectricModel};
use crate::error::{Error, Result};
use crate::jets::{Amplitude, Jet, MAX_ORDER};
use crate::numerics::{integrate_semi_infinite_adaptive, QuadResult, QuadValue, QuadratureConfig};
use crate::scalar::{from_usize, lit, Real};

/// Inner (p) integrals run this much tighter than the outer tolerance.
const INNER_TOL_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarSystem<T> {
    pub model1: DielectricModel<T>,
    pub model2: DielectricModel<T>,
    /// Gap width H in units of c/ω_p.
    pub separation: T,
}

impl<T: Real> PlanarSystem<T> {
    pub fn new(model1: DielectricModel<T>, model2: DielectricModel<T>, separation: T) -> Result<Self> {
        let sys = PlanarSystem { model1, model2, separation };
        sys.validate()?;
        Ok(sys)
    }

    pub fn identical(model: DielectricModel<T>, separation: T) -> Result<Self> {
        Self::new(model, model, separation)
    }

    pub fn validate(&self) -> Result<()> {
        self.model1.validate()?;
        self.model2.validate()?;
        if !(self.separation > T::zero()) || !self.separation.is_finite() {
            return Err(Error::domain(format!("separation must be finite and > 0, got {}", self.separation)));
        }
        Ok(())
    }

    fn trivially_zero(&self) -> bool {
        self.model1.is_vacuum() || self.model2.is_vacuum()
    }

    /// Scale of the outer x = ζH map.
    fn x_scale(&self) -> T {
        self.separation.min(T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesScheme {
    /// ε = 1 + λ δε
    RawContrast,
    /// ε = 1 + λβ / (1 − λβ/3), β the Clausius-Mossotti parameter
    ClausiusMossotti,
}

impl fmt::Display for SeriesScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesScheme::RawContrast => "raw",
            SeriesScheme::ClausiusMossotti => "cm",
        })
    }
}

impl FromStr for SeriesScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" | "contrast" => Ok(SeriesScheme::RawContrast),
            "cm" | "clausius-mossotti" => Ok(SeriesScheme::ClausiusMossotti),
            other => Err(Error::input(format!("unknown series scheme '{other}' (expected raw|cm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Converging,
    Diverging,
    Marginal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converging => "converging",
            Verdict::Diverging => "diverging",
            Verdict::Marginal => "marginal",
        })
    }
}

/// Per-order energies and partial sums of the contrast expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult<T> {
    pub scheme: SeriesScheme,
    pub separation: T,
    pub max_order: usize,
    /// `per_order[k]` is the coefficient of λ^k; entries 0 and 1 are zero.
    pub per_order: Vec<T>,
    pub order_valid: Vec<bool>,
    /// `partial_sums[n] = Σ_{k ≤ n} per_order[k]`.
    pub partial_sums: Vec<T>,
    /// A partial sum is valid when every order it includes is.
    pub sum_valid: Vec<bool>,
    pub exact: T,
    /// `partial_sums[n] / exact`.
    pub ratios: Vec<T>,
    pub verdict: Option<Verdict>,
}

impl<T: Real> SeriesResult<T> {
    pub fn partial_sum(&self, n: usize) -> Option<T> {
        self.partial_sums.get(n).copied()
    }

    pub fn ratio(&self, n: usize) -> Option<T> {
        self.ratios.get(n).copied()
    }

    pub fn all_valid(&self) -> bool {
        self.order_valid.iter().all(|&v| v)
    }
}

/// ln[1 − X_TE] + ln[1 − X_TM] for contrasts `d1`, `d2` (each ε − 1).
fn log_integrand<T: Real, A: Amplitude<T>>(d1: A, d2: A, p: T, x: T) -> A {
    let p2 = p * p;
    let one = d1.lift(T::one());
    let two = d1.lift(lit(2.0));
    let damp = (-(p + p) * x).exp();
    let reflect = |d: A| {
        let s = (d + d.lift(p2)).sqrt();
        let te_den = s + d.lift(p);
        let te = d / (te_den * te_den);
        let tm_den = s + (one + d).scale(p);
        let tm = d * (one - (two + d).scale(p2)) / (tm_den * tm_den);
        (te, tm)
    };
    let (te1, tm1) = reflect(d1);
    let (te2, tm2) = reflect(d2);
    (-(te1 * te2).scale(damp)).ln_1p() + (-(tm1 * tm2).scale(damp)).ln_1p()
}

fn amplitude_contrast<T: Real>(model: &DielectricModel<T>, zeta: T, scheme: Option<SeriesScheme>, order: usize) -> Jet<T> {
    let lam = Jet::variable(order, T::zero()).expect("order validated");
    match scheme {
        None | Some(SeriesScheme::RawContrast) => lam.scale(model.contrast_unchecked(zeta)),
        Some(SeriesScheme::ClausiusMossotti) => {
            let beta = model.cm_unchecked(zeta);
            let num = lam.scale(beta);
            num / lam.scale(-beta / lit(3.0)).add_scalar(T::one())
        }
    }
}

/// Flags carried out of the nested quadrature.
struct InnerState<T> {
    failed: RefCell<Vec<bool>>,
    /// Components that have been non-zero at least once.
    live: RefCell<Vec<bool>>,
    error: RefCell<Option<Error>>,
    evaluations: Cell<usize>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real> InnerState<T> {
    fn new(components: usize) -> Self {
        InnerState {
            failed: RefCell::new(vec![false; components]),
            live: RefCell::new(vec![false; components]),
            error: RefCell::new(None),
            evaluations: Cell::new(0),
            _marker: std::marker::PhantomData,
        }
    }

    fn record<V: QuadValue<T>>(&self, r: Result<QuadResult<T, V>>, nan: V) -> V {
        match r {
            Ok(res) => {
                self.evaluations.set(self.evaluations.get() + res.evaluations);
                let mut failed = self.failed.borrow_mut();
                let mut live = self.live.borrow_mut();
                for (k, ok) in res.component_converged.iter().enumerate() {
                    if !ok {
                        failed[k] = true;
                    }
                    if res.value.component(k) != T::zero() {
                        live[k] = true;
                    }
                }
                res.value
            }
            Err(e) => {
                self.error.borrow_mut().get_or_insert(e);
                nan
            }
        }
    }
}

impl<T> InnerState<T> {
    /// True once no component can still converge, so further inner
    /// integrals are wasted work.
    fn exhausted(&self) -> bool {
        if self.error.borrow().is_some() {
            return true;
        }
        let failed = self.failed.borrow();
        let live = self.live.borrow();
        failed.iter().any(|&f| f) && failed.iter().zip(live.iter()).all(|(&f, &l)| f || !l)
    }
}

fn inner_cfg<T: Real>(cfg: &QuadratureConfig<T>) -> QuadratureConfig<T> {
    QuadratureConfig { rel_tol: cfg.rel_tol * lit(INNER_TOL_FACTOR), abs_tol: T::zero(), ..*cfg }
}

/// ∫₁^∞ dp p Φ(x, p) for the contrasts built by `contrasts(ζ)`.
fn p_integral<T, V, C, E>(x: T, cfg: &QuadratureConfig<T>, contrasts: &C, eval: &E) -> Result<QuadResult<T, V>>
where
    T: Real,
    V: QuadValue<T>,
    C: Fn(T) -> (V, V),
    E: Fn(V, V, T, T) -> V,
{
    let (d1, d2) = contrasts(x);
    let scale = (T::one() / (x + x)).max(lit(1e-3));
    integrate_semi_infinite_adaptive(|p: T| {
        let v = eval(d1, d2, p, x);
        let mut out = v.zeroed();
        out.axpy(p, &v);
        out
    }, T::one(), scale, &inner_cfg(cfg))
}

/// Exact Lifshitz energy per unit area at zero temperature (≤ 0).
pub fn lifshitz_exact_per_area<T: Real>(sys: &PlanarSystem<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    sys.validate()?;
    cfg.validate()?;
    if sys.trivially_zero() {
        return Ok(T::zero());
    }
    let h = sys.separation;
    let state = InnerState::<T>::new(1);
    let contrasts = |x: T| {
        let zeta = x / h;
        (sys.model1.contrast_unchecked(zeta), sys.model2.contrast_unchecked(zeta))
    };
    let eval = |d1: T, d2: T, p: T, x: T| log_integrand(d1, d2, p, x);
    let outer = integrate_semi_infinite_adaptive(
        |x: T| {
            if x == T::zero() || state.exhausted() {
                return T::zero();
            }
            let inner = state.record(p_integral(x, cfg, &contrasts, &eval), T::nan());
            x * x * inner
        },
        T::zero(),
        sys.x_scale(),
        cfg,
    );
    if let Some(e) = state.error.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    if !outer.converged() || state.failed.borrow()[0] {
        return Err(Error::NonConvergence {
            estimate: outer.value.to_f64().unwrap_or(f64::NAN),
            error: outer.err_estimate.to_f64().unwrap_or(f64::NAN),
            evaluations: outer.evaluations + state.evaluations.get(),
        });
    }
    Ok(outer.value / (lit::<T>(4.0) * T::PI() * T::PI() * h * h * h))
}

/// Order-by-order energies for ε_a(λ) substituted into the exact integrand,
/// with partial sums at λ = 1 compared against the exact result.
pub fn perturbative_orders<T: Real>(
    sys: &PlanarSystem<T>,
    scheme: SeriesScheme,
    max_order: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<SeriesResult<T>> {
    let exact = lifshitz_exact_per_area(sys, cfg)?;
    series_with_exact(sys, scheme, max_order, exact, cfg)
}

/// Same as [`perturbative_orders`] with a precomputed exact energy.
pub fn series_with_exact<T: Real>(
    sys: &PlanarSystem<T>,
    scheme: SeriesScheme,
    max_order: usize,
    exact: T,
    cfg: &QuadratureConfig<T>,
) -> Result<SeriesResult<T>> {
    sys.validate()?;
    cfg.validate()?;
    if max_order < 2 || max_order % 2 != 0 || max_order > MAX_ORDER {
        return Err(Error::domain(format!("series order must be even and in 2..={MAX_ORDER}, got {max_order}")));
    }
    let n = max_order + 1;
    let (per_order, order_valid) = if sys.trivially_zero() {
        (vec![T::zero(); n], vec![true; n])
    } else {
        expand_orders(sys, scheme, max_order, cfg)?
    };

    let mut partial_sums = Vec::with_capacity(n);
    let mut sum_valid = Vec::with_capacity(n);
    let mut acc = T::zero();
    let mut ok = true;
    for k in 0..n {
        acc = acc + per_order[k];
        ok &= order_valid[k];
        partial_sums.push(acc);
        sum_valid.push(ok);
    }
    let ratios = partial_sums
        .iter()
        .map(|&s| if exact != T::zero() { s / exact } else { T::nan() })
        .collect();
    let mut res = SeriesResult {
        scheme,
        separation: sys.separation,
        max_order,
        per_order,
        order_valid,
        partial_sums,
        sum_valid,
        exact,
        ratios,
        verdict: None,
    };
    if max_order >= 8 {
        res.verdict = Some(classify_convergence(&res)?);
    }
    Ok(res)
}

fn expand_orders<T: Real>(
    sys: &PlanarSystem<T>,
    scheme: SeriesScheme,
    max_order: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<(Vec<T>, Vec<bool>)> {
    let h = sys.separation;
    let n = max_order + 1;
    let state = InnerState::<T>::new(n);
    let contrasts = |x: T| {
        let zeta = x / h;
        (
            amplitude_contrast(&sys.model1, zeta, Some(scheme), max_order),
            amplitude_contrast(&sys.model2, zeta, Some(scheme), max_order),
        )
    };
    let eval = |d1: Jet<T>, d2: Jet<T>, p: T, x: T| log_integrand(d1, d2, p, x);
    let zero = Jet::zero(max_order)?;
    let nan = zero.lift(T::nan());
    let outer = integrate_semi_infinite_adaptive(
        |x: T| {
            if x == T::zero() || state.exhausted() {
                return zero;
            }
            let inner = state.record(p_integral(x, cfg, &contrasts, &eval), nan);
            inner.scale(x * x)
        },
        T::zero(),
        sys.x_scale(),
        cfg,
    );
    if let Some(e) = state.error.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    let norm = T::one() / (lit::<T>(4.0) * T::PI() * T::PI() * h * h * h);
    let failed = state.failed.into_inner();
    let mut per_order = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for k in 0..n {
        // Orders 0 and 1 vanish identically: the reflection coefficients are O(λ).
        if k < 2 {
            per_order.push(T::zero());
            valid.push(true);
        } else {
            per_order.push(outer.value.coeff(k) * norm);
            valid.push(outer.component_converged[k] && !failed[k]);
        }
    }
    Ok((per_order, valid))
}

/// Classifies the increments |S₄−S₂|, |S₆−S₄|, |S₈−S₆|.
pub fn classify_convergence<T: Real>(res: &SeriesResult<T>) -> Result<Verdict> {
    if res.partial_sums.len() < 9 {
        return Err(Error::domain("convergence classification needs partial sums through order 8"));
    }
    let s = |n: usize| res.partial_sums[n];
    Ok(classify_increments([(s(4) - s(2)).abs(), (s(6) - s(4)).abs(), (s(8) - s(6)).abs()]))
}

/// Strictly shrinking increments converge, strictly growing ones diverge.
pub fn classify_increments<T: Real>(inc: [T; 3]) -> Verdict {
    if inc[2] < inc[1] && inc[1] < inc[0] {
        Verdict::Converging
    } else if inc[2] > inc[1] && inc[1] > inc[0] {
        Verdict::Diverging
    } else {
        Verdict::Marginal
    }
}

/// ζ-integrand of the zero-temperature energy, g(ζ) with ℰ = ∫₀^∞ g(ζ) dζ.
pub fn energy_density_at_frequency<T: Real>(sys: &PlanarSystem<T>, zeta: T, cfg: &QuadratureConfig<T>) -> Result<T> {
    sys.validate()?;
    if !(zeta >= T::zero()) {
        return Err(Error::domain("imaginary frequency must be >= 0"));
    }
    if sys.trivially_zero() {
        return Ok(T::zero());
    }
    let h = sys.separation;
    let norm = T::one() / (lit::<T>(4.0) * T::PI() * T::PI() * h * h);
    if zeta == T::zero() {
        return Ok(static_term(sys, cfg)? * norm);
    }
    let x = zeta * h;
    let contrasts = |x: T| {
        let z = x / h;
        (sys.model1.contrast_unchecked(z), sys.model2.contrast_unchecked(z))
    };
    let eval = |d1: T, d2: T, p: T, x: T| log_integrand(d1, d2, p, x);
    let r = p_integral(x, cfg, &contrasts, &eval)?;
    if !r.converged() {
        return Err(Error::NonConvergence {
            estimate: r.value.to_f64().unwrap_or(f64::NAN),
            error: r.err_estimate.to_f64().unwrap_or(f64::NAN),
            evaluations: r.evaluations,
        });
    }
    Ok(x * x * r.value * norm)
}

/// lim_{ζ→0} of 4π²H²·g(ζ): ∫₀^∞ dκ κ ln(1 − Δ₁Δ₂ e^{−2κ}) with
/// Δ = (ε(0) − 1)/(ε(0) + 1); only the TM mode survives.
fn static_term<T: Real>(sys: &PlanarSystem<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    let delta = |m: &DielectricModel<T>| -> Result<T> {
        let e = m.permittivity(T::zero())?;
        Ok((e - T::one()) / (e + T::one()))
    };
    let prod = delta(&sys.model1)? * delta(&sys.model2)?;
    if prod == T::zero() {
        return Ok(T::zero());
    }
    let r = integrate_semi_infinite_adaptive(
        |k: T| k * (-prod * (-(k + k)).exp()).ln_1p(),
        T::zero(),
        lit(0.5),
        &inner_cfg(cfg),
    )?;
    if !r.converged() {
        return Err(Error::NonConvergence {
            estimate: r.value.to_f64().unwrap_or(f64::NAN),
            error: r.err_estimate.to_f64().unwrap_or(f64::NAN),
            evaluations: r.evaluations,
        });
    }
    Ok(r.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatsubaraResult<T> {
    pub free_energy: T,
    /// Contribution of the s = 0 term including its ½ weight.
    pub zero_frequency_contribution: T,
    /// Highest Matsubara index summed.
    pub terms: usize,
}

/// Free energy per area at temperature `k_b_t` (units ħω_p):
/// 2π k_BT Σ'_s g(ζ_s), ζ_s = 2π s k_BT, with the s = 0 term halved.
pub fn matsubara_free_energy_per_area<T: Real>(
    sys: &PlanarSystem<T>,
    k_b_t: T,
    s_max: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<MatsubaraResult<T>> {
    matsubara_weighted(sys, k_b_t, s_max, cfg, lit(0.5))
}

pub(crate) fn matsubara_weighted<T: Real>(
    sys: &PlanarSystem<T>,
    k_b_t: T,
    s_max: usize,
    cfg: &QuadratureConfig<T>,
    zero_weight: T,
) -> Result<MatsubaraResult<T>> {
    sys.validate()?;
    cfg.validate()?;
    if !(k_b_t > T::zero()) || !k_b_t.is_finite() {
        return Err(Error::domain(format!("temperature must be finite and > 0, got {k_b_t}")));
    }
    if s_max == 0 {
        return Err(Error::domain("s_max must be >= 1"));
    }
    let step = (T::PI() + T::PI()) * k_b_t;
    if sys.trivially_zero() {
        return Ok(MatsubaraResult { free_energy: T::zero(), zero_frequency_contribution: T::zero(), terms: 0 });
    }
    let zero = step * zero_weight * energy_density_at_frequency(sys, T::zero(), cfg)?;
    let mut sum = T::zero();
    let mut quiet = 0;
    for s in 1..=s_max {
        let term = step * energy_density_at_frequency(sys, step * from_usize(s), cfg)?;
        sum = sum + term;
        // Tail of an s^{-3} (or faster) decaying sequence is below term·s/2.
        let total = (sum + zero).abs();
        if term.abs() * from_usize::<T>(s) * lit(0.5) <= cfg.rel_tol * total || term == T::zero() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(MatsubaraResult { free_energy: zero + sum, zero_frequency_contribution: zero, terms: s });
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NonConvergence {
        estimate: (zero + sum).to_f64().unwrap_or(f64::NAN),
        error: f64::NAN,
        evaluations: s_max,
    })
}

/// Contrast jets for a scheme, exposed for diagnostics: ε(λ) − 1 at ζ.
pub fn contrast_jet<T: Real>(model: &DielectricModel<T>, zeta: T, scheme: SeriesScheme, order: usize) -> Result<Jet<T>> {
    model.validate()?;
    if !(zeta >= T::zero()) {
        return Err(Error::domain("imaginary frequency must be >= 0"));
    }
    Jet::<T>::zero(order)?;
    Ok(amplitude_contrast(model, zeta, Some(scheme), order))
}

/// β expressed back as a contrast: the CM substitution evaluated at λ = 1.
pub fn cm_resummed_contrast<T: Real>(beta: T) -> T {
    contrast_from_cm(beta)
}
