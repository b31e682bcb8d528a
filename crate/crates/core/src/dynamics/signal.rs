//! Bias inputs `V_t` with a declared compact range.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DmsError, Result};
use crate::model::DomainBounds;

/// Shape of a bias signal. Piecewise kinds hold their first value before the
/// first sample and their last value after the last one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalKind {
    Constant {
        value: f64,
    },
    /// `V_t = samples[k]` for `t0 + k·ts <= t < t0 + (k+1)·ts`.
    PiecewiseConstant {
        #[serde(default)]
        t0: f64,
        ts: f64,
        samples: Vec<f64>,
    },
    /// Consecutive holds of `values[i]` for `durations[i]` seconds from `t0`.
    Segments {
        #[serde(default)]
        t0: f64,
        durations: Vec<f64>,
        values: Vec<f64>,
    },
    /// `offset + amplitude·cos(2π·frequency·t + phase)`.
    Sinusoid {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `offset + scale·inner(t)`.
    Affine {
        offset: f64,
        scale: f64,
        inner: Box<SignalKind>,
    },
}

impl SignalKind {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DmsError::InvalidSignal(m));
        match self {
            SignalKind::Constant { value } => {
                if !value.is_finite() {
                    return bad("constant value is not finite".into());
                }
            }
            SignalKind::PiecewiseConstant { t0, ts, samples } => {
                if !(ts.is_finite() && *ts > 0.0) || !t0.is_finite() {
                    return bad(format!("sample period {ts} must be finite and > 0"));
                }
                if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
                    return bad("samples must be non-empty and finite".into());
                }
            }
            SignalKind::Segments { t0, durations, values } => {
                if durations.len() != values.len() || values.is_empty() {
                    return bad("segments need one duration per value".into());
                }
                if !t0.is_finite() || durations.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                    return bad("segment durations must be finite and > 0".into());
                }
                if values.iter().any(|x| !x.is_finite()) {
                    return bad("segment values must be finite".into());
                }
            }
            SignalKind::Sinusoid { offset, amplitude, frequency, phase } => {
                if ![offset, amplitude, frequency, phase].iter().all(|x| x.is_finite()) || *frequency < 0.0 {
                    return bad("sinusoid needs finite parameters and frequency >= 0".into());
                }
            }
            SignalKind::Affine { offset, scale, inner } => {
                if !(offset.is_finite() && scale.is_finite()) {
                    return bad("affine offset and scale must be finite".into());
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            SignalKind::Constant { value } => *value,
            SignalKind::PiecewiseConstant { t0, ts, samples } => {
                let k = ((t - t0) / ts).floor();
                let k = if k < 0.0 { 0 } else { (k as usize).min(samples.len() - 1) };
                samples[k]
            }
            SignalKind::Segments { t0, durations, values } => {
                let mut edge = *t0;
                for (d, v) in durations.iter().zip(values) {
                    edge += d;
                    if t < edge {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
            SignalKind::Sinusoid { offset, amplitude, frequency, phase } => {
                offset + amplitude * (2.0 * PI * frequency * t + phase).cos()
            }
            SignalKind::Affine { offset, scale, inner } => offset + scale * inner.value(t),
        }
    }

    /// Exact range `[min, max]` of the signal over all time.
    pub fn range(&self) -> (f64, f64) {
        let span = |xs: &[f64]| xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        match self {
            SignalKind::Constant { value } => (*value, *value),
            SignalKind::PiecewiseConstant { samples, .. } => span(samples),
            SignalKind::Segments { values, .. } => span(values),
            SignalKind::Sinusoid { offset, amplitude, frequency, .. } => {
                if *frequency == 0.0 {
                    let v = self.value(0.0);
                    (v, v)
                } else {
                    (offset - amplitude.abs(), offset + amplitude.abs())
                }
            }
            SignalKind::Affine { offset, scale, inner } => {
                if *scale == 0.0 {
                    return (*offset, *offset);
                }
                let (lo, hi) = inner.range();
                let (a, b) = (offset + scale * lo, offset + scale * hi);
                (a.min(b), a.max(b))
            }
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        match self {
            SignalKind::Constant { .. } | SignalKind::PiecewiseConstant { .. } | SignalKind::Segments { .. } => true,
            SignalKind::Sinusoid { frequency, amplitude, .. } => *frequency == 0.0 || *amplitude == 0.0,
            SignalKind::Affine { scale, inner, .. } => *scale == 0.0 || inner.is_piecewise_constant(),
        }
    }

    /// Switch times of a piecewise-constant signal strictly inside `(t0, t1)`, ascending.
    pub fn switch_times(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            SignalKind::PiecewiseConstant { t0: s0, ts, samples } => {
                let n = samples.len();
                let first = (((t0 - s0) / ts).floor() as i64 + 1).max(1);
                let last = (((t1 - s0) / ts).ceil() as i64 - 1).min(n as i64 - 1);
                for k in first..=last {
                    let t = s0 + ts * k as f64;
                    if t > t0 && t < t1 {
                        out.push(t);
                    }
                }
            }
            SignalKind::Segments { t0: s0, durations, .. } => {
                let mut edge = *s0;
                for d in &durations[..durations.len() - 1] {
                    edge += d;
                    if edge > t0 && edge < t1 {
                        out.push(edge);
                    }
                }
            }
            SignalKind::Affine { scale, inner, .. } if *scale != 0.0 => out = inner.switch_times(t0, t1),
            _ => {}
        }
        out
    }

    /// Characteristic time scale of a smooth signal (its period), if any.
    pub fn time_scale(&self) -> Option<f64> {
        match self {
            SignalKind::Sinusoid { frequency, .. } if *frequency > 0.0 => Some(1.0 / frequency),
            SignalKind::Affine { inner, .. } => inner.time_scale(),
            _ => None,
        }
    }
}

/// A validated bias signal together with the compact domain it stays in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalDocument", into = "SignalDocument")]
pub struct BiasSignal {
    kind: SignalKind,
    domain: DomainBounds,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalDocument {
    shape: SignalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainBounds>,
}

impl TryFrom<SignalDocument> for BiasSignal {
    type Error = DmsError;
    fn try_from(d: SignalDocument) -> Result<Self> {
        match d.domain {
            Some(dom) => BiasSignal::new(d.shape, dom),
            None => BiasSignal::with_natural_domain(d.shape),
        }
    }
}

impl From<BiasSignal> for SignalDocument {
    fn from(s: BiasSignal) -> Self {
        SignalDocument { shape: s.kind, domain: Some(s.domain) }
    }
}

impl BiasSignal {
    /// Rejects signals whose range leaves `domain`.
    pub fn new(kind: SignalKind, domain: DomainBounds) -> Result<Self> {
        kind.validate()?;
        let (lo, hi) = kind.range();
        if !domain.contains(lo) || !domain.contains(hi) {
            return Err(DmsError::InvalidSignal(format!(
                "range [{lo}, {hi}] leaves the domain [{}, {}]",
                domain.lo(),
                domain.hi()
            )));
        }
        Ok(BiasSignal { kind, domain })
    }

    /// Uses the exact range of the signal as its domain.
    pub fn with_natural_domain(kind: SignalKind) -> Result<Self> {
        kind.validate()?;
        let (lo, hi) = kind.range();
        let domain = DomainBounds::new(lo, hi)?;
        BiasSignal::new(kind, domain)
    }

    pub fn constant(v: f64) -> Result<Self> {
        Self::with_natural_domain(SignalKind::Constant { value: v })
    }

    pub fn sinusoid(offset: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        Self::with_natural_domain(SignalKind::Sinusoid { offset, amplitude, frequency, phase: 0.0 })
    }

    pub fn piecewise(t0: f64, ts: f64, samples: Vec<f64>, domain: DomainBounds) -> Result<Self> {
        Self::new(SignalKind::PiecewiseConstant { t0, ts, samples }, domain)
    }

    pub fn segments(t0: f64, durations: Vec<f64>, values: Vec<f64>, domain: DomainBounds) -> Result<Self> {
        Self::new(SignalKind::Segments { t0, durations, values }, domain)
    }

    /// `offset + scale·self`, with the domain mapped by interval arithmetic.
    pub fn affine(&self, offset: f64, scale: f64) -> Result<Self> {
        let (a, b) = (offset + scale * self.domain.lo(), offset + scale * self.domain.hi());
        let domain = DomainBounds::new(a.min(b), a.max(b))?;
        BiasSignal::new(
            SignalKind::Affine { offset, scale, inner: Box::new(self.kind.clone()) },
            domain,
        )
    }

    pub fn kind(&self) -> &SignalKind {
        &self.kind
    }

    pub fn domain(&self) -> DomainBounds {
        self.domain
    }

    pub fn value(&self, t: f64) -> f64 {
        self.kind.value(t)
    }

    pub fn range(&self) -> (f64, f64) {
        self.kind.range()
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.kind.is_piecewise_constant()
    }

    pub fn switch_times(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.kind.switch_times(t0, t1)
    }

    pub fn time_scale(&self) -> Option<f64> {
        self.kind.time_scale()
    }

    /// Samples of a [`SignalKind::PiecewiseConstant`] signal with their period and start.
    pub fn samples(&self) -> Option<(f64, f64, &[f64])> {
        match &self.kind {
            SignalKind::PiecewiseConstant { t0, ts, samples } => Some((*t0, *ts, samples)),
            _ => None,
        }
    }
}
