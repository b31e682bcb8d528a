//! Fading-memory functionals and the filters they induce, in discrete and
//! continuous time.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::propagate::{hold_map, propagate_with, PropagateOptions, SwitchState, Trajectory};
use super::signal::BiasSignal;
use crate::error::{DmsError, Result};
use crate::io::{fmt_float, CsvTable};
use crate::model::{contraction_rate, DomainBounds, RateModel, RateSet, CONTRACTION_GUARD};

/// How a finite history is extended into the past when it is shorter than
/// the truncation depth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    /// Refuse to evaluate.
    #[default]
    Error,
    /// Repeat the oldest sample.
    HoldOldest,
    /// Repeat a fixed bias.
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingOptions {
    /// Truncation tolerance: the neglected past contributes at most `tol`.
    pub tol: f64,
    pub padding: Padding,
    /// Contraction rate used for the truncation bound. When absent it is the
    /// smallest `K` over the history (discrete) or over the signal domain
    /// (continuous).
    pub nu: Option<f64>,
    pub propagate: PropagateOptions,
}

impl Default for FadingOptions {
    fn default() -> Self {
        FadingOptions { tol: 1e-10, padding: Padding::Error, nu: None, propagate: PropagateOptions::default() }
    }
}

impl FadingOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(DmsError::InvalidParameter { name: "tol", reason: format!("{} must lie in (0, 1)", self.tol) });
        }
        if let Some(nu) = self.nu {
            if !(nu > CONTRACTION_GUARD && nu.is_finite()) {
                return Err(DmsError::DegenerateContraction { k: nu, guard: CONTRACTION_GUARD });
            }
        }
        if let Padding::Constant(c) = self.padding {
            if !c.is_finite() {
                return Err(DmsError::NonFinite("padding value"));
            }
        }
        Ok(())
    }
}

/// Smallest `L` with `e^{−ν·Ts·L} < tol`.
pub fn truncation_depth(nu: f64, ts: f64, tol: f64) -> Result<usize> {
    if !(nu > CONTRACTION_GUARD && nu.is_finite()) {
        return Err(DmsError::DegenerateContraction { k: nu, guard: CONTRACTION_GUARD });
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(DmsError::InvalidParameter { name: "Ts", reason: format!("{ts} must be finite and > 0") });
    }
    let l = ((1.0 / tol).ln() / (nu * ts)).floor() + 1.0;
    if l > 1e12 {
        return Err(DmsError::InvalidParameter { name: "tol", reason: format!("truncation depth {l:e} is impractical") });
    }
    Ok(l as usize)
}

/// Continuous-time horizon `T_h = ln(1/tol)/ν`.
pub fn truncation_horizon(nu: f64, tol: f64) -> Result<f64> {
    if !(nu > CONTRACTION_GUARD && nu.is_finite()) {
        return Err(DmsError::DegenerateContraction { k: nu, guard: CONTRACTION_GUARD });
    }
    Ok((1.0 / tol).ln() / nu)
}

// One-period hold maps of each distinct sample value.
struct StepCache {
    ts: f64,
    maps: HashMap<u64, (RateSet, f64, f64)>,
}

impl StepCache {
    fn build<M: RateModel>(values: impl Iterator<Item = f64>, ts: f64, model: &M) -> Result<Self> {
        let mut distinct: Vec<f64> = values.collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let maps = distinct
            .par_iter()
            .map(|&v| {
                if !v.is_finite() {
                    return Err(DmsError::NonFinite("history sample"));
                }
                let r = model.rates(v)?;
                let (phi, g) = hold_map(&r, ts);
                Ok((v.to_bits(), (r, phi, g)))
            })
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(StepCache { ts, maps })
    }

    fn get(&self, v: f64) -> (RateSet, f64, f64) {
        self.maps[&v.to_bits()]
    }

    fn min_k(&self) -> f64 {
        self.maps.values().map(|m| m.0.k).fold(f64::INFINITY, f64::min)
    }

    // Value after `m` steps at constant `v` starting from zero.
    fn padded_start(&self, v: f64, m: usize) -> Result<f64> {
        if m == 0 {
            return Ok(0.0);
        }
        let (r, _, _) = self.get(v);
        if !(r.k > CONTRACTION_GUARD) {
            return Err(DmsError::DegenerateContraction { k: r.k, guard: CONTRACTION_GUARD });
        }
        Ok(r.k01 / r.k * -(-r.k * self.ts * m as f64).exp_m1())
    }
}

fn pad_value(padding: Padding, oldest: f64) -> Option<f64> {
    match padding {
        Padding::Error => None,
        Padding::HoldOldest => Some(oldest),
        Padding::Constant(c) => Some(c),
    }
}

fn resolve_nu(opts: &FadingOptions, cache: &StepCache) -> Result<f64> {
    let nu = opts.nu.unwrap_or_else(|| cache.min_k());
    if !(nu > CONTRACTION_GUARD) {
        return Err(DmsError::DegenerateContraction { k: nu, guard: CONTRACTION_GUARD });
    }
    Ok(nu)
}

// P̃ at the end of `window` (oldest first), started from zero `depth` steps back.
fn truncated_value(window: &[f64], depth: usize, pad: Option<f64>, cache: &StepCache) -> Result<f64> {
    let used = &window[window.len().saturating_sub(depth)..];
    let missing = depth - used.len();
    let mut p = match (missing, pad) {
        (0, _) => 0.0,
        (_, Some(c)) => cache.padded_start(c, missing)?,
        (_, None) => return Err(DmsError::HistoryTooShort { len: window.len(), depth }),
    };
    for &v in used {
        let (_, phi, g) = cache.get(v);
        p = phi * p + g;
    }
    Ok(p)
}

/// `F(Ṽ) = Σ_{k<=−1} (Π_{k<l<=−1} Φ̃_l)·G(Ṽ_k)`, the limit of `P̃_0` from the
/// remote past, truncated at [`truncation_depth`].
///
/// `history` lists `Ṽ_k` oldest first and ends at `k = −1`.
pub fn dt_fading_functional<M: RateModel>(history: &[f64], ts: f64, model: &M, opts: &FadingOptions) -> Result<f64> {
    opts.check()?;
    let pad = match opts.padding {
        Padding::Error => None,
        Padding::HoldOldest => Some(*history.first().ok_or(DmsError::HistoryTooShort { len: 0, depth: 1 })?),
        Padding::Constant(c) => Some(c),
    };
    let cache = StepCache::build(history.iter().copied().chain(pad), ts, model)?;
    let nu = resolve_nu(opts, &cache)?;
    let depth = truncation_depth(nu, ts, opts.tol)?;
    truncated_value(history, depth, pad, &cache)
}

/// Output of a discrete-time filter.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutput {
    pub k: Vec<i64>,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub y: Vec<f64>,
    pub depth: usize,
    pub nu: f64,
}

impl FilterOutput {
    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["k", "t", "V_k", "Y_k"]);
        t.comments.push(format!("depth={} nu={}", self.depth, fmt_float(self.nu)));
        for i in 0..self.k.len() {
            t.rows.push(vec![self.k[i] as f64, self.t[i], self.v[i], self.y[i]]);
        }
        t
    }
}

/// `Ỹ_k = F(history of Ṽ strictly before k)` for each `k` in `k_range`, where
/// `k` indexes the samples of a piecewise-constant signal.
///
/// Each output is an independent truncated evaluation, so `Ỹ_k` reads only
/// `Ṽ_j` with `j < k` and is unaffected by samples older than the depth.
pub fn dt_filter<M: RateModel>(
    signal: &BiasSignal,
    k_range: RangeInclusive<i64>,
    model: &M,
    opts: &FadingOptions,
) -> Result<FilterOutput> {
    opts.check()?;
    let (t0, ts, samples) = signal
        .samples()
        .ok_or_else(|| DmsError::InvalidSignal("discrete filtering needs a piecewise-constant sampled signal".into()))?;
    let n = samples.len() as i64;
    if *k_range.start() < 0 || *k_range.end() > n || k_range.is_empty() {
        return Err(DmsError::InvalidParameter {
            name: "k_range",
            reason: format!("{:?} must lie within 0..={n}", k_range),
        });
    }
    let pad = pad_value(opts.padding, samples[0]);
    let cache = StepCache::build(samples.iter().copied().chain(pad), ts, model)?;
    let nu = resolve_nu(opts, &cache)?;
    let depth = truncation_depth(nu, ts, opts.tol)?;
    let ks: Vec<i64> = k_range.collect();
    let y = ks
        .par_iter()
        .map(|&k| truncated_value(&samples[..k as usize], depth, pad, &cache))
        .collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = ks.iter().map(|&k| t0 + ts * k as f64).collect();
    let v = ks.iter().map(|&k| samples[(k as usize).min(samples.len() - 1)]).collect();
    Ok(FilterOutput { k: ks, t, v, y, depth, nu })
}

fn ct_nu<M: RateModel>(signal: &BiasSignal, model: &M, opts: &FadingOptions) -> Result<f64> {
    match opts.nu {
        Some(nu) => Ok(nu),
        None => {
            let d = signal.domain();
            let nu = if d.width() == 0.0 {
                model.rates(d.lo())?.k
            } else {
                contraction_rate(DomainBounds::new(d.lo(), d.hi())?, model)?.nu
            };
            if !(nu > CONTRACTION_GUARD) {
                return Err(DmsError::DegenerateContraction { k: nu, guard: CONTRACTION_GUARD });
            }
            Ok(nu)
        }
    }
}

/// `F(V) = ∫_{−∞}^0 Φ_{0,τ}·k01(V_τ) dτ`, evaluated as the solution at time 0
/// started from `P = 0` at `−T_h`.
pub fn ct_fading_functional<M: RateModel>(signal: &BiasSignal, model: &M, opts: &FadingOptions) -> Result<f64> {
    let out = ct_filter(signal, &[0.0], model, opts)?;
    Ok(out.p_ab[0])
}

/// `Y_t = F(V shifted to end at t)` at each of the ascending `times`.
///
/// All outputs share one trajectory started from `P = 0` a horizon before the
/// first time; later outputs only gain accuracy from the longer past.
pub fn ct_filter<M: RateModel>(signal: &BiasSignal, times: &[f64], model: &M, opts: &FadingOptions) -> Result<Trajectory> {
    opts.check()?;
    let first = *times.first().ok_or(DmsError::InvalidParameter { name: "times", reason: "empty".into() })?;
    let nu = ct_nu(signal, model, opts)?;
    let start = first - truncation_horizon(nu, opts.tol)?;
    let mut grid = Vec::with_capacity(times.len() + 1);
    grid.push(start);
    grid.extend_from_slice(times);
    let mut traj = propagate_with(SwitchState::new(start, 0.0)?, signal, &grid, &opts.propagate, model)?;
    traj.times.remove(0);
    traj.p_ab.remove(0);
    traj.v.remove(0);
    Ok(traj)
}
