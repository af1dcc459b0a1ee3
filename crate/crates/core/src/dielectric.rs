//! Permittivity models on the imaginary frequency axis.
//!
//! Units: ħ = c = 1, frequencies measured in units of the plasma frequency
//! ω_p and lengths in units of c/ω_p (so the plasma wavelength is 2π).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Imaginary frequency ζ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Frequency<T>(T);

impl<T: Real> Frequency<T> {
    pub fn new(zeta: T) -> Result<Self> {
        if zeta >= T::zero() && zeta.is_finite() {
            Ok(Frequency(zeta))
        } else {
            Err(Error::domain(format!("imaginary frequency must be finite and >= 0, got {zeta}")))
        }
    }

    pub fn get(self) -> T {
        self.0
    }
}

/// Frequency-dependent permittivity ε(iζ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DielectricModel<T> {
    /// Single Lorentz oscillator, ε = 1 + ω_p² / (ω_0² + γζ + ζ²).
    Oscillator { omega_p: T, omega_0: T, gamma: T },
    /// Frequency-independent permittivity. Not a physical model at high
    /// frequency; used for the perfect-conductor limit.
    Constant { eps: T },
    Vacuum,
}

impl<T: Real> DielectricModel<T> {
    /// Oscillator with ω_p = 1 (the internal frequency unit).
    pub fn oscillator(omega_0: T, gamma: T) -> Result<Self> {
        Self::oscillator_with_plasma(T::one(), omega_0, gamma)
    }

    pub fn oscillator_with_plasma(omega_p: T, omega_0: T, gamma: T) -> Result<Self> {
        let model = DielectricModel::Oscillator { omega_p, omega_0, gamma };
        model.validate()?;
        Ok(model)
    }

    pub fn constant(eps: T) -> Result<Self> {
        let model = DielectricModel::Constant { eps };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DielectricModel::Oscillator { omega_p, omega_0, gamma } => {
                if !(omega_p > T::zero() && omega_p.is_finite()) {
                    return Err(Error::domain(format!("plasma frequency must be > 0, got {omega_p}")));
                }
                if !(omega_0 >= T::zero() && gamma >= T::zero()) {
                    return Err(Error::domain("resonance and dissipation must be >= 0"));
                }
                if omega_0 == T::zero() && gamma == T::zero() {
                    return Err(Error::domain(
                        "oscillator with omega0 = gamma = 0 has no static permittivity",
                    ));
                }
                Ok(())
            }
            DielectricModel::Constant { eps } => {
                if eps >= T::one() && eps.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("constant permittivity must be finite and >= 1, got {eps}")))
                }
            }
            DielectricModel::Vacuum => Ok(()),
        }
    }

    pub fn is_vacuum(&self) -> bool {
        match *self {
            DielectricModel::Vacuum => true,
            DielectricModel::Constant { eps } => eps == T::one(),
            DielectricModel::Oscillator { .. } => false,
        }
    }

    /// ε(iζ).
    pub fn permittivity(&self, zeta: T) -> Result<T> {
        Ok(T::one() + self.contrast(zeta)?)
    }

    /// Dielectric contrast δε = ε(iζ) − 1.
    pub fn contrast(&self, zeta: T) -> Result<T> {
        let zeta = Frequency::new(zeta)?.get();
        self.validate()?;
        Ok(match *self {
            DielectricModel::Oscillator { omega_p, omega_0, gamma } => {
                omega_p * omega_p / (omega_0 * omega_0 + gamma * zeta + zeta * zeta)
            }
            DielectricModel::Constant { eps } => eps - T::one(),
            DielectricModel::Vacuum => T::zero(),
        })
    }

    /// Clausius-Mossotti parameter β = 3(ε − 1)/(ε + 2), in [0, 3).
    pub fn cm_parameter(&self, zeta: T) -> Result<T> {
        let d = self.contrast(zeta)?;
        Ok(cm_from_contrast(d))
    }

    /// Infallible contrast for a model that has already been validated and a
    /// frequency known to be admissible. Used in quadrature inner loops.
    pub(crate) fn contrast_unchecked(&self, zeta: T) -> T {
        match *self {
            DielectricModel::Oscillator { omega_p, omega_0, gamma } => {
                omega_p * omega_p / (omega_0 * omega_0 + gamma * zeta + zeta * zeta)
            }
            DielectricModel::Constant { eps } => eps - T::one(),
            DielectricModel::Vacuum => T::zero(),
        }
    }

    pub(crate) fn cm_unchecked(&self, zeta: T) -> T {
        cm_from_contrast(self.contrast_unchecked(zeta))
    }
}

/// β = δε / (1 + δε/3).
pub fn cm_from_contrast<T: Real>(contrast: T) -> T {
    let three = lit::<T>(3.0);
    three * contrast / (three + contrast)
}

/// Inverse map δε = β / (1 − β/3).
pub fn contrast_from_cm<T: Real>(beta: T) -> T {
    beta / (T::one() - beta / lit(3.0))
}

impl<T: Real> fmt::Display for DielectricModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DielectricModel::Oscillator { omega_p, omega_0, gamma } => {
                write!(f, "oscillator:omega0={}", *omega_0 / *omega_p)?;
                if *gamma != T::zero() {
                    write!(f, ",gamma={}", *gamma / *omega_p)?;
                }
                Ok(())
            }
            DielectricModel::Constant { eps } => write!(f, "constant:eps={eps}"),
            DielectricModel::Vacuum => write!(f, "vacuum"),
        }
    }
}

/// Parses `oscillator:omega0=<x>[,gamma=<g>]`, `constant:eps=<x>` or
/// `vacuum`. Oscillator parameters are ratios to ω_p.
impl<T: Real> FromStr for DielectricModel<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k.trim(), p.trim()),
            None => (s, ""),
        };
        let mut omega0 = None;
        let mut gamma = None;
        let mut eps = None;
        for kv in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::input(format!("expected key=value in model spec, got '{kv}'")))?;
            let value: T = value
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("cannot parse number '{value}' in model spec")))?;
            match key.trim() {
                "omega0" | "omega_0" | "w0" => omega0 = Some(value),
                "gamma" => gamma = Some(value),
                "eps" => eps = Some(value),
                other => return Err(Error::input(format!("unknown model parameter '{other}'"))),
            }
        }
        match kind {
            "oscillator" | "osc" => {
                let omega0 =
                    omega0.ok_or_else(|| Error::input("oscillator model needs omega0=<x>"))?;
                if eps.is_some() {
                    return Err(Error::input("eps is not an oscillator parameter"));
                }
                DielectricModel::oscillator(omega0, gamma.unwrap_or_else(T::zero))
            }
            "constant" | "const" => {
                if omega0.is_some() || gamma.is_some() {
                    return Err(Error::input("constant model takes only eps=<x>"));
                }
                DielectricModel::constant(eps.ok_or_else(|| Error::input("constant model needs eps=<x>"))?)
            }
            "vacuum" if params.is_empty() => Ok(DielectricModel::Vacuum),
            _ => Err(Error::input(format!("unrecognised model spec '{s}'"))),
        }
    }
}
