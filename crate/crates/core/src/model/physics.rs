//! Scalar physics primitives: electrode occupations, level densities and
//! the Marcus proton-transfer rates.

use std::f64::consts::PI;

use super::params::{MarcusDenominator, SwitchParams, BOLTZMANN_EV};
use crate::error::{ensure_finite, DmsError, Result};

/// Which electrode occupation `f±(E)(v) = 1/(1 + exp((E ± v/2)/kB·T))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lead {
    /// `f₊`, shifted by `+v/2`.
    Plus,
    /// `f₋`, shifted by `−v/2`.
    Minus,
}

impl Lead {
    fn shift(self, v: f64) -> f64 {
        match self {
            Lead::Plus => 0.5 * v,
            Lead::Minus => -0.5 * v,
        }
    }
}

/// Direction of a proton-transfer rate: `+` feeds k₀₁, `−` feeds k₁₀.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Bridge-charge channel `s` of a Marcus rate.
///
/// `One` is weighted by the empty-bridge probability `1 − ⟨b_n⟩`, `Zero` by `⟨b_n⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Zero,
    One,
}

/// Logistic `1/(1 + e^x)`, evaluated without overflow for large |x|.
#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Occupation with a precomputed thermal energy; no validation.
#[inline]
pub(crate) fn fermi_kt(e: f64, v: f64, lead: Lead, kt: f64) -> f64 {
    logistic((e + lead.shift(v)) / kt)
}

/// Electrode occupation `f±(E)(v)` at temperature `temperature` (K).
pub fn fermi(e: f64, v: f64, lead: Lead, temperature: f64) -> Result<f64> {
    ensure_finite(e, "fermi")?;
    ensure_finite(v, "fermi")?;
    ensure_finite(temperature, "fermi")?;
    if temperature <= 0.0 {
        return Err(DmsError::InvalidParameter {
            name: "T",
            reason: format!("{temperature} must be > 0"),
        });
    }
    Ok(fermi_kt(e, v, lead, BOLTZMANN_EV * temperature))
}

#[inline]
pub(crate) fn lorentzian(e: f64, center: f64, width: f64) -> f64 {
    let d = e - center;
    let h = 0.5 * width;
    (width / (2.0 * PI)) / (d * d + h * h)
}

/// Lorentzian level density `(w/2π)/((E − c)² + (w/2)²)`, 1/eV.
pub fn lorentzian_dos(e: f64, center: f64, width: f64) -> Result<f64> {
    ensure_finite(e, "lorentzian_dos")?;
    ensure_finite(center, "lorentzian_dos")?;
    if !(width > 0.0 && width.is_finite()) {
        return Err(DmsError::InvalidParameter {
            name: "width",
            reason: format!("{width} must be finite and > 0"),
        });
    }
    Ok(lorentzian(e, center, width))
}

/// Lorentzian probability mass on `(-∞, x]`.
pub(crate) fn lorentzian_cdf(x: f64, center: f64, width: f64) -> f64 {
    let z = 2.0 * (x - center) / width;
    if z < 0.0 {
        // arctan form loses digits deep in the lower tail
        (1.0 / PI) * (1.0 / -z).atan()
    } else {
        0.5 + z.atan() / PI
    }
}

/// Lorentzian probability mass on `[x, ∞)`.
pub(crate) fn lorentzian_sf(x: f64, center: f64, width: f64) -> f64 {
    lorentzian_cdf(2.0 * center - x, center, width)
}

/// Normal density used to broaden the bridge level.
pub fn gaussian_density(e: f64, mean: f64, sd: f64) -> f64 {
    let z = (e - mean) / sd;
    (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sd)
}

/// Marcus proton-transfer rate `R_{PT,±s}(v)` in 1/s.
pub fn marcus_rate(v: f64, direction: Direction, channel: Channel, p: &SwitchParams) -> Result<f64> {
    ensure_finite(v, "marcus_rate")?;
    p.validate()?;
    Ok(marcus_rate_unchecked(v, direction, channel, p))
}

#[inline]
pub(crate) fn marcus_rate_unchecked(v: f64, direction: Direction, channel: Channel, p: &SwitchParams) -> f64 {
    let kt = p.kt();
    let prefactor = 0.5 * p.gamma * (PI * kt / p.lambda).sqrt();
    let (offset, coupling) = match channel {
        Channel::One => (v - p.e_pt, p.gamma),
        Channel::Zero => (v - p.e_pt - p.chi, p.kappa * p.gamma),
    };
    let shifted = match direction {
        Direction::Forward => offset + p.lambda,
        Direction::Backward => offset - p.lambda,
    };
    let scale = match p.marcus_denominator {
        MarcusDenominator::AsPrinted => coupling,
        MarcusDenominator::ConventionalLambda => p.lambda,
    };
    prefactor * (-(shifted * shifted) / (4.0 * kt * scale)).exp()
}
