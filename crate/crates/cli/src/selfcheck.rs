//! Fast built-in checks of the library against independent references.

use std::f64::consts::{E, PI};
use std::time::Instant;

use lifshitz::bodies::{casimir_polder_energy, log_permittivity_integral, order_n_interaction, polarizability};
use lifshitz::bodies::{BodyAssembly, SphereBody};
use lifshitz::kernels::{a_fourier, k0_inv_fourier};
use lifshitz::numerics::{exp_integral_e, gamma_zero, gauss_legendre, integrate_semi_infinite};
use lifshitz::planar::{
    classify_increments, lifshitz_exact_per_area, matsubara_free_energy_per_area, perturbative_orders, PlanarSystem,
    SeriesResult, SeriesScheme, Verdict,
};
use lifshitz::roughsurf::{energy_flat_reference, energy_second_order, l_function, HeightProfile, RoughPair};
use lifshitz::{plasma_wavelength, DielectricModel, Error, Jet, QuadratureConfig, Result};

use crate::output::{Cell, Table};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Outcome of one check: computed value, reference and allowed relative error.
struct Comparison {
    value: f64,
    reference: f64,
    tol: f64,
}

impl Comparison {
    fn rel(value: f64, reference: f64, tol: f64) -> Self {
        Comparison { value, reference, tol }
    }

    fn error(&self) -> f64 {
        if self.reference == 0.0 {
            self.value.abs()
        } else {
            (self.value - self.reference).abs() / self.reference.abs()
        }
    }

    fn passes(&self) -> bool {
        self.error() <= self.tol
    }
}

type Check = (&'static str, fn(&QuadratureConfig<f64>) -> Result<Comparison>);

fn osc(w0: f64) -> DielectricModel<f64> {
    DielectricModel::Oscillator { omega_p: 1.0, omega_0: w0, gamma: 0.0 }
}

/// E₁(1) = −γ − Σ_{k≥1} (−1)^k / (k·k!)
fn e1_one_series() -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 1..30 {
        fact *= k as f64;
        sum += (-1f64).powi(k) / (k as f64 * fact);
    }
    -EULER_GAMMA - sum
}

fn e1_at_one(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    Ok(Comparison::rel(exp_integral_e(1, 1.0)?, e1_one_series(), 1e-13))
}

fn en_recurrence(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    let z = 2.5;
    let e3 = exp_integral_e(3, z)?;
    let e2 = exp_integral_e(2, z)?;
    Ok(Comparison::rel(e3, ((-z).exp() - z * e2) / 2.0, 1e-13))
}

fn gamma_zero_is_e1(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    Ok(Comparison::rel(gamma_zero(0.7)?, exp_integral_e(1, 0.7)?, 1e-14))
}

fn semi_infinite_lorentzian(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let r = integrate_semi_infinite(|x: f64| 1.0 / (1.0 + x * x), 0.0, cfg)?;
    if !r.converged() {
        return Err(Error::NonConvergence { estimate: r.value, error: r.err_estimate, evaluations: r.evaluations });
    }
    Ok(Comparison::rel(r.value, PI / 2.0, 1e-8))
}

fn gauss_legendre_exactness(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    let v: f64 = gauss_legendre::<f64>(5, 0.0, 1.0)?.iter().map(|&(x, w)| w * x.powi(9)).sum();
    Ok(Comparison::rel(v, 0.1, 1e-14))
}

fn static_contrast(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    Ok(Comparison::rel(osc(0.8).contrast(0.0)?, 1.0 / 0.64, 1e-14))
}

fn static_cm(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    Ok(Comparison::rel(osc(0.8).cm_parameter(0.0)?, 3.0 / (3.0 * 0.64 + 1.0), 1e-14))
}

fn jet_exp_log(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    let coeffs: Vec<f64> = (0..=12).map(|k| if k == 0 { 1.3 } else { (k as f64 * 1.7).sin() }).collect();
    let j = Jet::from_coeffs(&coeffs)?;
    let back = j.try_ln()?.try_exp()?;
    let worst = (0..=12).map(|k| (back.coeff(k) - j.coeff(k)).abs()).fold(0.0, f64::max);
    Ok(Comparison::rel(worst, 0.0, 1e-10))
}

fn jet_sqrt_square(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    let coeffs: Vec<f64> = (0..=12).map(|k| if k == 0 { 0.9 } else { (k as f64 * 0.37).cos() }).collect();
    let j = Jet::from_coeffs(&coeffs)?;
    let r = j.try_sqrt()?;
    let sq = r.try_mul(&r)?;
    let worst = (0..=12).map(|k| (sq.coeff(k) - j.coeff(k)).abs()).fold(0.0, f64::max);
    Ok(Comparison::rel(worst, 0.0, 1e-10))
}

fn kernel_decomposition(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    let mut worst = 0.0f64;
    for (z, q) in [(0.3f64, [1.0f64, -2.0, 0.5]), (2.0, [0.1, 0.0, 0.0]), (1.0, [3.0, 4.0, -1.0])] {
        let k = k0_inv_fourier(z, q)?.m;
        let a = a_fourier(z, q)?.m;
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((k[i][j] - (3.0 * a[i][j] + id) / (3.0 * z * z)).abs() / k[0][0].abs());
            }
        }
    }
    Ok(Comparison::rel(worst, 0.0, 1e-12))
}

fn a_trace(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    let (z, q) = (0.7, [0.4, 1.1, -0.3]);
    let q2: f64 = q.iter().map(|v| v * v).sum();
    Ok(Comparison::rel(a_fourier(z, q)?.trace(), 2.0 * z * z / (z * z + q2), 1e-14))
}

fn vacuum_planar(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let sys = PlanarSystem::new(DielectricModel::Vacuum, osc(1.0), 1.0)?;
    Ok(Comparison::rel(lifshitz_exact_per_area(&sys, cfg)?, 0.0, 0.0))
}

fn valid_series(res: SeriesResult<f64>) -> Result<SeriesResult<f64>> {
    if res.all_valid() {
        Ok(res)
    } else {
        Err(Error::NonConvergence { estimate: f64::NAN, error: f64::NAN, evaluations: 0 })
    }
}

fn low_orders_vanish(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let sys = PlanarSystem::identical(osc(1.0), 2.0)?;
    let res = valid_series(perturbative_orders(&sys, SeriesScheme::RawContrast, 2, cfg)?)?;
    Ok(Comparison::rel(res.per_order[0].abs() + res.per_order[1].abs(), 0.0, 0.0))
}

fn cm_order_two(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let h = plasma_wavelength::<f64>();
    let sys = PlanarSystem::identical(osc(0.8), h)?;
    let res = valid_series(perturbative_orders(&sys, SeriesScheme::ClausiusMossotti, 2, cfg)?)?;
    Ok(Comparison::rel(res.per_order[2], energy_flat_reference(&osc(0.8), &osc(0.8), h, cfg)?, 1e-5))
}

fn classifier(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    let ok = classify_increments([1.0, 0.1, 0.01]) == Verdict::Converging
        && classify_increments([0.01, 0.1, 1.0]) == Verdict::Diverging
        && classify_increments([0.1, 0.2, 0.15]) == Verdict::Marginal;
    Ok(Comparison::rel(if ok { 1.0 } else { 0.0 }, 1.0, 0.0))
}

fn matsubara_low_t(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let sys = PlanarSystem::identical(osc(1.0), plasma_wavelength())?;
    let f = matsubara_free_energy_per_area(&sys, 1e-3, 1_000_000, cfg)?;
    Ok(Comparison::rel(f.free_energy, lifshitz_exact_per_area(&sys, cfg)?, 1e-2))
}

fn casimir_polder(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let r = 10.0;
    let e = casimir_polder_energy(|_| 1.0, |_| 1.0, r, cfg)?;
    Ok(Comparison::rel(e, -23.0 / (4.0 * PI * r.powi(7)), 1e-6))
}

fn two_spheres(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let m = osc(1.0);
    let a = SphereBody::new([0.0; 3], 1.0, m)?;
    let b = SphereBody::new([0.0, 0.0, 25.0], 1.0, m)?;
    let v = a.volume();
    let e2 = order_n_interaction(&BodyAssembly::new(vec![a, b], 8)?, 2, cfg)?;
    let alpha = |z: f64| polarizability(&m, v, z).unwrap_or(f64::NAN);
    Ok(Comparison::rel(e2, casimir_polder_energy(alpha, alpha, 25.0, cfg)?, 0.02))
}

fn volume_term(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    Ok(Comparison::rel(log_permittivity_integral(&osc(1.0), cfg)?, PI * (2f64.sqrt() - 1.0), 1e-8))
}

fn l_at_one(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    Ok(Comparison::rel(l_function(1.0)?, 2.0 / (E * E), 1e-12))
}

fn l_small_u(_: &QuadratureConfig<f64>) -> Result<Comparison> {
    let u: f64 = 1e-4;
    Ok(Comparison::rel(u * u * l_function(u)?, 1.0, 1e-3))
}

fn rough_flat_limit(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let (m1, m2) = (osc(1.0), osc(0.8));
    let pair = RoughPair::new(m1, m2, 1.5, HeightProfile::flat(), HeightProfile::flat(), 4.0, 8)?;
    Ok(Comparison::rel(energy_second_order(&pair, cfg)?, 16.0 * energy_flat_reference(&m1, &m2, 1.5, cfg)?, 1e-3))
}

fn rough_offset(cfg: &QuadratureConfig<f64>) -> Result<Comparison> {
    let n = 8;
    let spacing = 0.5;
    let samples: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| 0.1 * (2.0 * PI * (i + 2 * j) as f64 / n as f64).cos()).collect()).collect();
    let h2 = HeightProfile::Grid { samples, spacing };
    let pair = RoughPair::new(osc(1.0), osc(1.0), 1.2, HeightProfile::flat(), h2, 4.0, n)?;
    let shifted = pair.with_offset(0.3)?;
    Ok(Comparison::rel(energy_second_order(&shifted, cfg)?, energy_second_order(&pair, cfg)?, 1e-10))
}

const CHECKS: &[Check] = &[
    ("special.e1_at_one", e1_at_one),
    ("special.en_recurrence", en_recurrence),
    ("special.gamma_zero_is_e1", gamma_zero_is_e1),
    ("numerics.semi_infinite_lorentzian", semi_infinite_lorentzian),
    ("numerics.gauss_legendre_exactness", gauss_legendre_exactness),
    ("dielectric.static_contrast", static_contrast),
    ("dielectric.static_cm", static_cm),
    ("jets.exp_log_round_trip", jet_exp_log),
    ("jets.sqrt_square_round_trip", jet_sqrt_square),
    ("kernels.decomposition", kernel_decomposition),
    ("kernels.a_trace", a_trace),
    ("planar.vacuum", vacuum_planar),
    ("planar.low_orders_vanish", low_orders_vanish),
    ("planar.cm_order_two_vs_reference", cm_order_two),
    ("planar.classifier", classifier),
    ("planar.matsubara_low_temperature", matsubara_low_t),
    ("bodies.casimir_polder_constant", casimir_polder),
    ("bodies.two_spheres_vs_casimir_polder", two_spheres),
    ("bodies.volume_term", volume_term),
    ("roughsurf.l_at_one", l_at_one),
    ("roughsurf.l_small_argument", l_small_u),
    ("roughsurf.flat_limit", rough_flat_limit),
    ("roughsurf.offset_invariance", rough_offset),
];

/// Runs all checks; the exit code is 0 iff every check passes, 3 if any
/// check could not converge and none failed outright, 1 otherwise.
pub fn run(cfg: &QuadratureConfig<f64>) -> (Table, i32) {
    let mut table = Table::new(
        ["check", "value", "reference", "rel_error", "tolerance", "status"].map(String::from).to_vec(),
    );
    let (mut failed, mut nonconverged) = (false, false);
    for &(name, check) in CHECKS {
        let start = Instant::now();
        let result = check(cfg);
        eprintln!("{name}: {:.3} s", start.elapsed().as_secs_f64());
        let mut row: Vec<Cell> = vec![name.into()];
        let status = match &result {
            Ok(c) => {
                row.extend([c.value.into(), c.reference.into(), c.error().into(), c.tol.into()]);
                if c.passes() { "pass" } else { "fail" }
            }
            Err(e) => {
                eprintln!("{name}: {e}");
                row.extend((0..4).map(|_| Cell::Missing));
                match e {
                    Error::NonConvergence { .. } => "nonconvergence",
                    _ => "error",
                }
            }
        };
        failed |= status == "fail" || status == "error";
        nonconverged |= status == "nonconvergence";
        row.push(status.into());
        table.push(row);
    }
    let code = if failed {
        1
    } else if nonconverged {
        3
    } else {
        0
    };
    (table, code)
}
