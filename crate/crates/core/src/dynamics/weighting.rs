//! Weighting functions on the past, weighted sup-norms, and the
//! admissibility integrals and sums that make the fading-memory bounds finite.

use serde::{Deserialize, Serialize};

use super::signal::BiasSignal;
use crate::error::{DmsError, Result};
use crate::quadrature::integrate_interval;

/// Shape shared by continuous weightings `w(τ)`, `τ <= 0`, and discrete
/// weightings `w̃_k`, `k <= 0`; evaluated at `s = |τ|` or `s = |k|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightShape {
    /// `max{1, s}·e^{−rate·s}`, divided by its supremum so the weight stays in (0, 1].
    PolyExp { rate: f64 },
    /// `e^{−rate·s}`.
    Exponential { rate: f64 },
    /// `(1 + s)^{−power}`.
    Power { power: f64 },
    /// A constant weight; never decays, so it is always rejected.
    Constant { value: f64 },
}

impl WeightShape {
    /// `ln(1/w)` at `s >= 0`, computed without forming tiny weights.
    pub fn log_inverse(&self, s: f64) -> f64 {
        match *self {
            WeightShape::PolyExp { rate } => rate * s - s.max(1.0).ln() + poly_exp_log_sup(rate),
            WeightShape::Exponential { rate } => rate * s,
            WeightShape::Power { power } => power * (1.0 + s).ln(),
            WeightShape::Constant { value } => -value.ln(),
        }
    }

    pub fn at(&self, s: f64) -> f64 {
        (-self.log_inverse(s)).exp()
    }

    /// Supremum over `s ∈ [lo, hi]` (`hi` may be infinite).
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = self.at(lo).max(if hi.is_finite() { self.at(hi) } else { 0.0 });
        if let WeightShape::PolyExp { rate } = *self {
            for c in [1.0, 1.0 / rate] {
                if c > lo && c < hi {
                    best = best.max(self.at(c));
                }
            }
        }
        if let WeightShape::Constant { value } = *self {
            best = value;
        }
        best
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightShape::PolyExp { rate } | WeightShape::Exponential { rate } => rate.is_finite() && rate > 0.0,
            WeightShape::Power { power } => power.is_finite() && power > 0.0,
            WeightShape::Constant { value } => value.is_finite() && value > 0.0 && value <= 1.0,
        };
        if !ok {
            return Err(DmsError::InvalidWeighting(format!("bad parameters in {self:?}")));
        }
        // probe: values in (0, 1] near the origin, in [0, 1] everywhere, and decaying
        for j in 0..=12 {
            let s = if j == 0 { 0.0 } else { 10f64.powi(j) };
            let w = self.at(s);
            if !(0.0..=1.0 + 1e-12).contains(&w) || (s <= 1.0 && w <= 0.0) {
                return Err(DmsError::InvalidWeighting(format!("{self:?} takes value {w} at |τ| = {s}")));
            }
        }
        let far = self.at(1e12);
        if far > 1e-6 {
            return Err(DmsError::InvalidWeighting(format!(
                "{self:?} does not decay to zero in the remote past (w = {far} at |τ| = 1e12)"
            )));
        }
        Ok(())
    }
}

// ln of sup_{s>=0} max{1,s}e^{-rate·s}
fn poly_exp_log_sup(rate: f64) -> f64 {
    if rate >= (-1.0_f64).exp() {
        0.0
    } else {
        -rate.ln() - 1.0
    }
}

/// Continuous-time weighting `w(τ)` on `τ <= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightShape", into = "WeightShape")]
pub struct WeightingFunction(WeightShape);

impl TryFrom<WeightShape> for WeightingFunction {
    type Error = DmsError;
    fn try_from(s: WeightShape) -> Result<Self> {
        WeightingFunction::new(s)
    }
}

impl From<WeightingFunction> for WeightShape {
    fn from(w: WeightingFunction) -> Self {
        w.0
    }
}

impl WeightingFunction {
    pub fn new(shape: WeightShape) -> Result<Self> {
        shape.validate()?;
        Ok(WeightingFunction(shape))
    }

    /// `max{1, |τ|}·e^{−a|τ|}` normalized to supremum 1.
    pub fn poly_exp(a: f64) -> Result<Self> {
        Self::new(WeightShape::PolyExp { rate: a })
    }

    pub fn shape(&self) -> WeightShape {
        self.0
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.0.at(tau.abs())
    }

    /// `‖V − V'‖_w = sup_{τ <= 0} w(τ)|V_τ − V'_τ|`.
    ///
    /// Exact for piecewise-constant signals that hold their oldest value
    /// before `−horizon`; smooth signals are sampled with spacing `horizon/2·10⁵`.
    pub fn distance(&self, a: &BiasSignal, b: &BiasSignal, horizon: f64) -> f64 {
        if a.is_piecewise_constant() && b.is_piecewise_constant() {
            let mut edges = vec![-horizon];
            edges.extend(a.switch_times(-horizon, 0.0));
            edges.extend(b.switch_times(-horizon, 0.0));
            edges.push(0.0);
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            let mut sup = 0.0_f64;
            for w in edges.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                let d = (a.value(mid) - b.value(mid)).abs();
                if d > 0.0 {
                    sup = sup.max(d * self.0.sup_on(-w[1], -w[0]));
                }
            }
            let before = -horizon - 1.0;
            let d = (a.value(before) - b.value(before)).abs();
            if d > 0.0 {
                sup = sup.max(d * self.0.sup_on(horizon, f64::INFINITY));
            }
            sup
        } else {
            let n = 200_000;
            (0..=n)
                .map(|i| {
                    let t = -horizon * i as f64 / n as f64;
                    self.eval(t) * (a.value(t) - b.value(t)).abs()
                })
                .fold(0.0, f64::max)
        }
    }
}

/// Discrete-time weighting `w̃_k` on `k <= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightShape", into = "WeightShape")]
pub struct WeightingSequence(WeightShape);

impl TryFrom<WeightShape> for WeightingSequence {
    type Error = DmsError;
    fn try_from(s: WeightShape) -> Result<Self> {
        WeightingSequence::new(s)
    }
}

impl From<WeightingSequence> for WeightShape {
    fn from(w: WeightingSequence) -> Self {
        w.0
    }
}

impl WeightingSequence {
    pub fn new(shape: WeightShape) -> Result<Self> {
        shape.validate()?;
        Ok(WeightingSequence(shape))
    }

    /// `max{1, |k|}·e^{−a·Ts·|k|}`, normalized to supremum 1.
    pub fn poly_exp(a: f64, ts: f64) -> Result<Self> {
        Self::new(WeightShape::PolyExp { rate: a * ts })
    }

    pub fn shape(&self) -> WeightShape {
        self.0
    }

    pub fn eval(&self, k: i64) -> f64 {
        self.0.at(k.unsigned_abs() as f64)
    }

    /// `sup_k w̃_k |a_k − b_k|` for sequences given oldest first and ending at `k = 0`.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.distance_ending_at(a, b, 0)
    }

    /// As [`Self::distance`] with the newest entries at index `newest <= 0`.
    /// Only the overlapping most recent entries are compared.
    pub fn distance_ending_at(&self, a: &[f64], b: &[f64], newest: i64) -> f64 {
        let n = a.len().min(b.len());
        (0..n)
            .map(|i| {
                let k = newest - (n - 1 - i) as i64;
                self.eval(k) * (a[a.len() - n + i] - b[b.len() - n + i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Outcome of summing a positive series with a geometric tail certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeriesVerdict {
    Finite { value: f64, tail_bound: f64, terms: u64 },
    Divergent { index: u64 },
}

impl SeriesVerdict {
    pub fn value(&self) -> Option<f64> {
        match self {
            SeriesVerdict::Finite { value, .. } => Some(*value),
            SeriesVerdict::Divergent { .. } => None,
        }
    }
}

const MAX_BLOCKS: u64 = 200_000;
const GROWTH_RUN: usize = 32;

/// Sums `Σ_{j>=0} block(j)` of positive blocks.
///
/// Stops once the geometric tail `b_j·r/(1 − r)` (with `r` the largest of the
/// last few block ratios) falls below `1e-13` of the running sum. A run of
/// non-decreasing blocks, a non-finite block, or exhaustion of the block
/// budget yields a divergence verdict carrying the first offending index.
fn sum_blocks<F: FnMut(u64) -> Result<f64>>(mut block: F, block_len: u64) -> Result<SeriesVerdict> {
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let mut ratios: Vec<f64> = Vec::new();
    let mut growth_start: Option<u64> = None;
    let mut growth_len = 0;
    for j in 0..MAX_BLOCKS {
        let b = block(j)?;
        if !b.is_finite() {
            return Ok(SeriesVerdict::Divergent { index: j * block_len });
        }
        sum += b;
        if j > 0 && prev > 0.0 {
            let r = b / prev;
            if r >= 1.0 - 1e-12 {
                growth_start.get_or_insert(j);
                growth_len += 1;
                if growth_len >= GROWTH_RUN {
                    return Ok(SeriesVerdict::Divergent { index: growth_start.unwrap() * block_len });
                }
            } else {
                growth_start = None;
                growth_len = 0;
            }
            ratios.push(r);
            if ratios.len() > 8 {
                ratios.remove(0);
            }
            let r_max = ratios.iter().cloned().fold(0.0, f64::max);
            if ratios.len() == 8 && r_max < 1.0 {
                let tail = b * r_max / (1.0 - r_max);
                if tail <= 1e-13 * sum || (b == 0.0 && sum > 0.0) {
                    return Ok(SeriesVerdict::Finite { value: sum, tail_bound: tail, terms: (j + 1) * block_len });
                }
            }
        }
        prev = b;
    }
    Ok(SeriesVerdict::Divergent { index: MAX_BLOCKS * block_len })
}

/// `∫_{−∞}^0 e^{ντ}/w(τ) dτ`.
pub fn ct_admissibility(w: &WeightingFunction, nu: f64) -> Result<SeriesVerdict> {
    check_nu(nu)?;
    let len = 1.0 / nu;
    let shape = w.shape();
    let integrand = |s: f64| (shape.log_inverse(s) - nu * s).exp();
    sum_blocks(
        |j| {
            let (lo, hi) = (len * j as f64, len * (j + 1) as f64);
            let breaks = [1.0, 1.0 / nu];
            match integrate_interval(integrand, lo, hi, &breaks, 1e-300, 1e-12, 10_000) {
                Ok(r) => Ok(r.value),
                Err(DmsError::NonFiniteNode { .. }) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        },
        1,
    )
}

/// The two sums `(c1, c2)` of the discrete-time fading-memory bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtAdmissibility {
    pub c1: SeriesVerdict,
    pub c2: SeriesVerdict,
}

impl DtAdmissibility {
    pub fn admissible(&self) -> bool {
        self.c1.value().is_some() && self.c2.value().is_some()
    }
}

/// `c1 = Σ_{k<=−1} |k|e^{−(|k|−1)νTs}/min_{k<=l<=0} w̃_l` and
/// `c2 = Σ_{k<=0} e^{−|k|νTs}/w̃_{k−1}`.
pub fn dt_admissibility(w: &WeightingSequence, nu: f64, ts: f64) -> Result<DtAdmissibility> {
    check_nu(nu)?;
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(DmsError::InvalidParameter { name: "Ts", reason: format!("{ts} must be > 0") });
    }
    let shape = w.shape();
    let rate = nu * ts;
    let block = ((1.0 / rate).ceil() as u64).clamp(1, 1 << 20);

    // running max of ln(1/w̃_l) over 0 <= |l| <= n equals -ln min w̃
    let mut max_log_inv = shape.log_inverse(0.0);
    let mut next = 1u64;
    let c1 = sum_blocks(
        |j| {
            let mut s = 0.0;
            for n in j * block + 1..=(j + 1) * block {
                while next <= n {
                    max_log_inv = max_log_inv.max(shape.log_inverse(next as f64));
                    next += 1;
                }
                s += ((n as f64).ln() - (n as f64 - 1.0) * rate + max_log_inv).exp();
            }
            Ok(s)
        },
        block,
    )?;
    let c2 = sum_blocks(
        |j| {
            let mut s = 0.0;
            for n in j * block..(j + 1) * block {
                s += (shape.log_inverse(n as f64 + 1.0) - n as f64 * rate).exp();
            }
            Ok(s)
        },
        block,
    )?;
    Ok(DtAdmissibility { c1, c2 })
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(DmsError::InvalidParameter { name: "nu", reason: format!("{nu} must be > 0") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DomainBounds;

    #[test]
    fn poly_exp_is_normalized_to_one() {
        for a in [1e-5, 0.01, 0.2, 0.5, 2.0] {
            let w = WeightingFunction::poly_exp(a).unwrap();
            let peak = if a < (-1.0_f64).exp() { 1.0 / a } else { 0.0 };
            assert!((w.eval(-peak) - 1.0).abs() < 1e-12, "{a}");
            assert!(w.eval(-peak * 1.3 - 0.1) < 1.0);
        }
        let s = WeightingSequence::poly_exp(0.05, 0.5).unwrap();
        assert!((0..200).all(|k| s.eval(-k) <= 1.0 + 1e-15));
    }

    #[test]
    fn non_decaying_weights_are_rejected() {
        assert!(WeightingFunction::new(WeightShape::Constant { value: 1.0 }).is_err());
        assert!(WeightingSequence::new(WeightShape::Constant { value: 0.5 }).is_err());
        assert!(WeightingFunction::new(WeightShape::Power { power: 0.1 }).is_err());
        assert!(WeightingFunction::new(WeightShape::Exponential { rate: -1.0 }).is_err());
        assert!(WeightingFunction::new(WeightShape::Power { power: 2.0 }).is_ok());
    }

    #[test]
    fn ct_integral_matches_closed_form() {
        // w = e^{-a s}: ∫ e^{-(ν-a)s} ds = 1/(ν - a)
        let (nu, a) = (0.3, 0.1);
        let w = WeightingFunction::new(WeightShape::Exponential { rate: a }).unwrap();
        let v = ct_admissibility(&w, nu).unwrap().value().unwrap();
        assert!((v - 1.0 / (nu - a)).abs() < 1e-9 * v, "{v}");
    }

    #[test]
    fn ct_fast_weight_diverges() {
        let nu = 0.3;
        let w = WeightingFunction::new(WeightShape::Exponential { rate: 2.0 * nu }).unwrap();
        assert!(matches!(ct_admissibility(&w, nu).unwrap(), SeriesVerdict::Divergent { .. }));
    }

    #[test]
    fn dt_sums_for_exponential_weight() {
        // w̃ = e^{-ρ|k|}, x = e^{-νTs}, y = e^{ρ}: c2 = y/(1 - x·y),
        // c1 = Σ_{n>=1} n x^{n-1} y^n = y/(1 - x·y)²
        let (nu, ts, rho) = (0.2, 0.5, 0.04);
        let w = WeightingSequence::new(WeightShape::Exponential { rate: rho }).unwrap();
        let r = dt_admissibility(&w, nu, ts).unwrap();
        let (x, y) = ((-nu * ts).exp(), rho.exp());
        let c2 = y / (1.0 - x * y);
        let c1 = y / (1.0 - x * y).powi(2);
        assert!((r.c2.value().unwrap() - c2).abs() < 1e-10 * c2);
        assert!((r.c1.value().unwrap() - c1).abs() < 1e-10 * c1);
    }

    #[test]
    fn dt_poly_exp_admissible_below_nu_only() {
        let (nu, ts) = (0.1, 0.5);
        let ok = dt_admissibility(&WeightingSequence::poly_exp(nu / 2.0, ts).unwrap(), nu, ts).unwrap();
        assert!(ok.admissible());
        let bad = dt_admissibility(&WeightingSequence::poly_exp(nu, ts).unwrap(), nu, ts).unwrap();
        assert!(matches!(bad.c1, SeriesVerdict::Divergent { .. }));
        let bad = dt_admissibility(&WeightingSequence::poly_exp(2.0 * nu, ts).unwrap(), nu, ts).unwrap();
        assert!(!bad.admissible());
    }

    #[test]
    fn piecewise_distance_is_exact() {
        let d = DomainBounds::new(-2.0, 2.0).unwrap();
        let a = BiasSignal::segments(-10.0, vec![5.0, 5.0], vec![1.0, 0.0], d).unwrap();
        let b = BiasSignal::constant(0.0).unwrap();
        let w = WeightingFunction::new(WeightShape::Exponential { rate: 0.1 }).unwrap();
        // differs by 1 on (−∞, −5]: sup w there is e^{-0.5}
        assert!((w.distance(&a, &b, 10.0) - (-0.5_f64).exp()).abs() < 1e-15);
        assert_eq!(w.distance(&a, &a, 10.0), 0.0);
    }
}
