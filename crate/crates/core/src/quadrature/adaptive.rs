use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{IntegralResult, QuadratureSpec};
use crate::error::{DmsError, Result};
use crate::model::physics::{lorentzian, lorentzian_cdf, lorentzian_sf};

// Kronrod 15-point abscissae; odd indices are the embedded Gauss 7-point nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integrand that behaves like a multiple of a Lorentzian outside the window.
///
/// Outside `[center − W, center + W]` the integrand is taken to be
/// `below·L(E)` on the left and `above·L(E)` on the right, where `L` is the
/// normalized Lorentzian of the given centre and width. The missing tail mass
/// is added analytically; the mismatch between that model and the integrand at
/// the window edges goes into the error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzianTails {
    pub center: f64,
    pub width: f64,
    pub below: f64,
    pub above: f64,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(DmsError::NonFiniteNode { node: x })
        }
    };
    let fc = eval(centr)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    for j in 0..7 {
        let dx = hlgth * XGK[j];
        let f1 = eval(centr - dx)?;
        let f2 = eval(centr + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * hlgth;
    let resabs = resabs * hlgth.abs();
    let resasc = resasc * hlgth.abs();
    let mut error = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel { a, b, value, error })
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[a, b]`.
///
/// The interval is first cut at every breakpoint inside `(a, b)`; the panel
/// with the largest error estimate is then bisected until the summed estimate
/// meets `max(abs_tol, rel_tol·|value|)`.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<IntegralResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(DmsError::NonFinite("integrate_interval"));
    }
    if a == b {
        return Ok(IntegralResult::default());
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in edges.windows(2) {
        heap.push(gk15(&f, w[0], w[1])?);
        evaluations += 15;
    }
    let mut splits = 0;
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Ok(IntegralResult {
                value: sign * value,
                error_estimate: error,
                evaluations,
                stderr: 0.0,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if splits >= max_subdivisions || !(mid > worst.a && mid < worst.b) {
            return Err(DmsError::NoConvergence {
                value: sign * value,
                error,
                subdivisions: splits,
            });
        }
        heap.push(gk15(&f, worst.a, mid)?);
        heap.push(gk15(&f, mid, worst.b)?);
        evaluations += 30;
        splits += 1;
    }
}

/// Integral of `f` over the real line, truncated to the window
/// `[center − W, center + W]` with `W = spec.window_halfwidth`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, center: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    integrate_line_with(f, center, spec, &[], None)
}

/// [`integrate_line`] with extra breakpoints and an optional Lorentzian tail model.
pub fn integrate_line_with<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    spec: &QuadratureSpec,
    breakpoints: &[f64],
    tails: Option<LorentzianTails>,
) -> Result<IntegralResult> {
    spec.validate()?;
    if !center.is_finite() {
        return Err(DmsError::NonFinite("integrate_line"));
    }
    let a = center - spec.window_halfwidth;
    let b = center + spec.window_halfwidth;
    let mut inner = integrate_interval(&f, a, b, breakpoints, spec.abs_tol, spec.rel_tol, spec.max_subdivisions)?;
    if let Some(t) = tails {
        if !(t.width > 0.0 && t.width.is_finite()) {
            return Err(DmsError::InvalidParameter {
                name: "width",
                reason: format!("tail width {} must be > 0", t.width),
            });
        }
        let mass_lo = lorentzian_cdf(a, t.center, t.width);
        let mass_hi = lorentzian_sf(b, t.center, t.width);
        inner.value += t.below * mass_lo + t.above * mass_hi;
        let mismatch_lo = (f(a) / lorentzian(a, t.center, t.width) - t.below).abs();
        let mismatch_hi = (f(b) / lorentzian(b, t.center, t.width) - t.above).abs();
        let residual = mismatch_lo * mass_lo + mismatch_hi * mass_hi;
        if residual.is_finite() {
            inner.error_estimate += residual;
        }
        inner.evaluations += 2;
    }
    Ok(inner)
}
