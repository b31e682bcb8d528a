//! Signal descriptions accepted in configs, including sample files and
//! seeded random sample sequences.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use dms_core::dynamics::{BiasSignal, SignalKind};
use dms_core::io::{parse_float, CsvTable};
use dms_core::DomainBounds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    Constant {
        value: f64,
    },
    PiecewiseConstant {
        #[serde(default)]
        t0: f64,
        ts: f64,
        samples: Vec<f64>,
    },
    Segments {
        #[serde(default)]
        t0: f64,
        durations: Vec<f64>,
        values: Vec<f64>,
    },
    Sinusoid {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Affine {
        offset: f64,
        scale: f64,
        inner: Box<Shape>,
    },
    /// Samples from a CSV file with a `V` column; `Ts` (and optionally `t0`)
    /// come from `# key=value` header comments.
    SampleFile {
        path: PathBuf,
    },
    /// `n` samples drawn uniformly from `[lo, hi]`.
    RandomPiecewise {
        #[serde(default)]
        t0: f64,
        ts: f64,
        n: usize,
        lo: f64,
        hi: f64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub shape: Shape,
    /// Declared domain; the signal's own range when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainBounds>,
}

/// Validated signal; relative sample-file paths resolve against `base`.
pub fn generate_signal(spec: &SignalSpec, base: &Path) -> Result<BiasSignal> {
    let kind = resolve(&spec.shape, base)?;
    let signal = match spec.domain {
        Some(d) => BiasSignal::new(kind, d)?,
        None => BiasSignal::with_natural_domain(kind)?,
    };
    Ok(signal)
}

fn resolve(shape: &Shape, base: &Path) -> Result<SignalKind> {
    Ok(match shape {
        Shape::Constant { value } => SignalKind::Constant { value: *value },
        Shape::PiecewiseConstant { t0, ts, samples } => {
            SignalKind::PiecewiseConstant { t0: *t0, ts: *ts, samples: samples.clone() }
        }
        Shape::Segments { t0, durations, values } => {
            SignalKind::Segments { t0: *t0, durations: durations.clone(), values: values.clone() }
        }
        Shape::Sinusoid { offset, amplitude, frequency, phase } => {
            SignalKind::Sinusoid { offset: *offset, amplitude: *amplitude, frequency: *frequency, phase: *phase }
        }
        Shape::Affine { offset, scale, inner } => {
            SignalKind::Affine { offset: *offset, scale: *scale, inner: Box::new(resolve(inner, base)?) }
        }
        Shape::SampleFile { path } => {
            let path = if path.is_absolute() { path.clone() } else { base.join(path) };
            read_samples(&path)?
        }
        Shape::RandomPiecewise { t0, ts, n, lo, hi, seed } => {
            if !(lo <= hi) {
                bail!("random-piecewise: lo {lo} exceeds hi {hi}");
            }
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let samples = (0..*n).map(|_| if lo == hi { *lo } else { rng.random_range(*lo..*hi) }).collect();
            SignalKind::PiecewiseConstant { t0: *t0, ts: *ts, samples }
        }
    })
}

fn read_samples(path: &Path) -> Result<SignalKind> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table = CsvTable::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let samples = table.column("V").ok_or_else(|| anyhow!("{}: no `V` column", path.display()))?;
    let header_value = |key: &str| -> Result<Option<f64>> {
        for c in &table.comments {
            if let Some((k, v)) = c.split_once('=') {
                if k.trim() == key {
                    return Ok(Some(parse_float(v)?));
                }
            }
        }
        Ok(None)
    };
    let ts = header_value("Ts")?.ok_or_else(|| anyhow!("{}: missing `# Ts=` header", path.display()))?;
    let t0 = header_value("t0")?.unwrap_or(0.0);
    Ok(SignalKind::PiecewiseConstant { t0, ts, samples })
}
