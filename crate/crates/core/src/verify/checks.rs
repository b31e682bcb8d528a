use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::rk::rk_oracle;
use super::{check_rng, random_past_segments, random_segments, segment_parts, CheckReport, CheckRng, Swapped, Verdict};
use crate::dynamics::{
    ct_admissibility, ct_fading_functional, dt_admissibility, dt_step, hold_map, log_transition, propagate_with,
    BiasSignal, FadingOptions, PropagateOptions, SeriesVerdict, SwitchState, WeightShape, WeightingFunction,
    WeightingSequence,
};
use crate::error::{DmsError, Result};
use crate::model::rates::minimize_on;
use crate::model::{
    contraction_rate, rate_derivatives, Contraction, DomainBounds, RateModel, Sensitivity,
    SEARCH_GRID,
};

const POSITIVITY_SLACK: f64 = 1e-12;
const DECAY_SLACK: f64 = 1e-9;

fn verdict(pass: bool) -> Verdict {
    if pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn report(name: &str, margin: f64, worst_case: String, seed: u64, config: serde_json::Value) -> CheckReport {
    CheckReport {
        check_name: name.to_string(),
        verdict: verdict(margin >= 0.0),
        worst_case,
        margin,
        seed,
        config,
    }
}

// Segment edges plus `interior` evenly spaced points inside each segment.
fn sample_times(signal: &BiasSignal, interior: usize) -> Vec<f64> {
    let (t0, durations, _) = segment_parts(signal).expect("segments signal");
    let mut times = vec![t0];
    let mut t = t0;
    for &d in durations {
        for j in 1..=interior {
            times.push(t + d * j as f64 / (interior + 1) as f64);
        }
        t += d;
        times.push(t);
    }
    times.dedup();
    times
}

struct Extremes {
    min: f64,
    min_at: f64,
    max: f64,
    max_at: f64,
}

fn extremes(times: &[f64], p: &[f64]) -> Extremes {
    let mut e = Extremes { min: f64::INFINITY, min_at: f64::NAN, max: f64::NEG_INFINITY, max_at: f64::NAN };
    for (&t, &x) in times.iter().zip(p) {
        if !(x >= e.min) {
            e.min = x;
            e.min_at = t;
        }
        if !(x <= e.max) {
            e.max = x;
            e.max_at = t;
        }
    }
    e
}

fn bounds_check<M: RateModel>(
    name: &str,
    upper: bool,
    model: &M,
    domain: DomainBounds,
    nu: f64,
    n_signals: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut rng = check_rng(seed, name);
    let signals = (0..n_signals)
        .map(|_| random_segments(&mut rng, domain, nu, 0.0, 50))
        .collect::<Result<Vec<_>>>()?;
    let starts = [0.0, 0.5, 1.0];
    let swapped = Swapped(model);
    let opts = PropagateOptions::default();
    let results = signals
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let times = sample_times(s, 4);
            let mut worst = (f64::INFINITY, String::new());
            for &p0 in &starts {
                let on = propagate_with(SwitchState::new(0.0, p0)?, s, &times, &opts, model)?;
                let off = propagate_with(SwitchState::new(0.0, 1.0 - p0)?, s, &times, &opts, &swapped)?;
                for (label, traj) in [("P_AB", &on), ("P_ABbar", &off)] {
                    let e = extremes(&traj.times, &traj.p_ab);
                    let low = (e.min + POSITIVITY_SLACK) / POSITIVITY_SLACK;
                    if low < worst.0 {
                        worst = (low, format!("signal {i}, P0={p0}: min {label} = {:e} at t = {:e}", e.min, e.min_at));
                    }
                    if upper {
                        let high = (1.0 + POSITIVITY_SLACK - e.max) / POSITIVITY_SLACK;
                        if high < worst.0 {
                            worst = (high, format!("signal {i}, P0={p0}: max {label} = {:e} at t = {:e}", e.max, e.max_at));
                        }
                    }
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let (margin, worst) = results.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or((0.0, String::new()));
    let config = json!({
        "domain": domain, "nu": nu, "n_signals": n_signals, "initial_states": starts, "slack": POSITIVITY_SLACK,
    });
    Ok(report(name, margin, worst, seed, config))
}

/// Both populations stay non-negative along random piecewise-constant signals.
/// `nu` sets the segment time scale.
pub fn check_lemma1_positivity<M: RateModel>(
    model: &M,
    domain: DomainBounds,
    nu: f64,
    n_signals: usize,
    seed: u64,
) -> Result<CheckReport> {
    bounds_check("lemma1_positivity", false, model, domain, nu, n_signals, seed)
}

/// Both populations stay within `[0, 1]` along random piecewise-constant signals.
pub fn check_cor1_bounds<M: RateModel>(
    model: &M,
    domain: DomainBounds,
    nu: f64,
    n_signals: usize,
    seed: u64,
) -> Result<CheckReport> {
    bounds_check("cor1_bounds", true, model, domain, nu, n_signals, seed)
}

/// `Φ_{t,t0} <= e^{−ν(t−t0)}` with the claimed `contraction.nu`, and equality
/// under the constant bias at `contraction.argmin`.
pub fn check_lemma2_decay<M: RateModel>(
    model: &M,
    domain: DomainBounds,
    contraction: Contraction,
    n_signals: usize,
    seed: u64,
) -> Result<CheckReport> {
    let name = "lemma2_decay";
    let nu = contraction.nu;
    let mut rng = check_rng(seed, name);
    let mut signals = vec![
        BiasSignal::new(crate::dynamics::SignalKind::Constant { value: contraction.argmin }, domain)?,
        BiasSignal::new(crate::dynamics::SignalKind::Constant { value: domain.lo() }, domain)?,
        BiasSignal::new(crate::dynamics::SignalKind::Constant { value: domain.hi() }, domain)?,
    ];
    for _ in 0..n_signals {
        signals.push(random_segments(&mut rng, domain, nu, 0.0, 50)?);
    }
    let pairs: Vec<Vec<(f64, f64)>> = signals
        .iter()
        .map(|s| {
            let span = match segment_parts(s) {
                Some((_, d, _)) => d.iter().sum::<f64>(),
                None => 10.0 / nu,
            };
            let mut p = vec![(0.0, span), (0.0, 1.0 / nu)];
            for _ in 0..20 {
                let a = rng.uniform(-0.1 * span, 1.1 * span);
                let b = rng.uniform(-0.1 * span, 1.1 * span);
                if a != b {
                    p.push((a.min(b), a.max(b)));
                }
            }
            p
        })
        .collect();
    let excess = signals
        .par_iter()
        .zip(&pairs)
        .map(|(s, pairs)| {
            let mut worst = (f64::NEG_INFINITY, (0.0, 0.0));
            for &(t0, t) in pairs {
                let e = log_transition(t, t0, s, model)? + nu * (t - t0);
                if e > worst.0 {
                    worst = (e, (t0, t));
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let bound = DECAY_SLACK.ln_1p();
    let (i, &(e, (t0, t))) = excess
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("non-empty");
    // the argmin constant signal (index 0) must attain the bound
    let tight = excess[0].0.exp_m1().abs();
    let margin = ((bound - e) / bound).min((1e-6 - tight) / 1e-6);
    let worst = format!(
        "signal {i}: Φ·e^(ν(t−t0)) = {:.12} on [{t0:e}, {t:e}]; at argmin v = {} the ratio is 1 {:+e}",
        e.exp(),
        contraction.argmin,
        excess[0].0.exp_m1()
    );
    let config = json!({ "domain": domain, "nu": nu, "argmin": contraction.argmin, "n_signals": n_signals, "slack": DECAY_SLACK });
    Ok(report(name, margin, worst, seed, config))
}

/// Constant-bias propagation from `P0 ∈ {0, 1}` reaches `P*` within `tol`
/// after `horizon_multiple/K(v)`, confirmed by the Runge–Kutta oracle.
pub fn check_cor2_steady_state<M: RateModel>(
    model: &M,
    v_grid: &[f64],
    horizon_multiple: f64,
    tol: f64,
    rk_tol: f64,
) -> Result<CheckReport> {
    let name = "cor2_steady_state";
    // agreement demanded between the exact solution and the oracle
    let rk_agreement = 1e3 * rk_tol;
    let rows = v_grid
        .par_iter()
        .map(|&v| {
            let r = model.rates(v)?;
            let p_star = r.steady_state()?;
            let t = horizon_multiple / r.k;
            let sig = BiasSignal::constant(v)?;
            let mut out = Vec::new();
            for p0 in [0.0, 1.0] {
                let init = SwitchState::new(0.0, p0)?;
                let exact = propagate_with(init, &sig, &[0.0, t], &PropagateOptions::default(), model)?.p_ab[1];
                let rk = rk_oracle(init, &sig, &[0.0, t], rk_tol, model)?.p_ab[1];
                out.push((v, p0, (exact - p_star).abs(), (rk - exact).abs()));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = rows.into_iter().flatten().collect();
    let worst_dev = rows.iter().max_by(|a, b| a.2.total_cmp(&b.2)).copied().unwrap_or_default();
    let worst_rk = rows.iter().max_by(|a, b| a.3.total_cmp(&b.3)).copied().unwrap_or_default();
    let margin = ((tol - worst_dev.2) / tol).min((rk_agreement - worst_rk.3) / rk_agreement);
    let worst = format!(
        "v = {}, P0 = {}: |P_end − P*| = {:e}; worst oracle disagreement {:e} at v = {}",
        worst_dev.0, worst_dev.1, worst_dev.2, worst_rk.3, worst_rk.0
    );
    let config = json!({
        "v_grid": v_grid, "horizon_multiple": horizon_multiple, "tol": tol, "rk_tol": rk_tol, "rk_agreement": rk_agreement,
    });
    Ok(report(name, margin, worst, 0, config))
}

/// `F(V)` for a segments signal ending at 0 that holds its first value forever
/// before its start: the state there is the steady state of that value.
pub fn held_ct_functional<M: RateModel>(signal: &BiasSignal, model: &M) -> Result<f64> {
    let (t0, _, values) =
        segment_parts(signal).ok_or_else(|| DmsError::InvalidSignal("expected a segments signal".into()))?;
    let p0 = model.rates(values[0])?.steady_state()?;
    if t0 >= 0.0 {
        return Ok(p0);
    }
    let tr = propagate_with(SwitchState::new(t0, p0.clamp(0.0, 1.0))?, signal, &[t0, 0.0], &PropagateOptions::default(), model)?;
    Ok(tr.p_ab[1])
}

/// `M = (g1 + g2/ν)·∫_{−∞}^0 e^{ντ}/w(τ) dτ`.
pub fn ct_lipschitz_constant(nu: f64, sens: &Sensitivity, w: &WeightingFunction) -> Result<(f64, SeriesVerdict)> {
    let integral = ct_admissibility(w, nu)?;
    let m = integral.value().map_or(f64::INFINITY, |i| (sens.g1 + sens.g2 / nu) * i);
    Ok((m, integral))
}

fn with_prefix(signal: &BiasSignal, durations: &[f64], values: &[f64]) -> Result<BiasSignal> {
    let (t0, d, v) = segment_parts(signal).expect("segments signal");
    let pre: f64 = durations.iter().sum();
    let mut dd = durations.to_vec();
    dd.extend_from_slice(d);
    let mut vv = values.to_vec();
    vv.extend_from_slice(v);
    BiasSignal::segments(t0 - pre, dd, vv, signal.domain())
}

fn compressed_past(rng: &mut CheckRng, domain: DomainBounds, nu: f64, span: f64) -> Result<BiasSignal> {
    let s = random_past_segments(rng, domain, nu, 50)?;
    let (_, d, v) = segment_parts(&s).expect("segments signal");
    let total: f64 = d.iter().sum();
    let f = (span / total).min(1.0);
    let d: Vec<f64> = d.iter().map(|x| x * f).collect();
    BiasSignal::segments(-d.iter().sum::<f64>(), d, v.to_vec(), domain)
}

/// `|F(V) − F(V')| <= bound_scale·M·‖V − V'‖_w` over random pairs, with `w` the
/// normalized `max{1,|τ|}e^{−a|τ|}`, `a = weight_fraction·ν`.
///
/// Also checks that pairs agreeing on the truncation horizon `T_h` give
/// outputs within `tol`, and that the truncated evaluation is within `tol` of
/// the exact one. `bound_scale` is 1 except in fault-injection runs.
#[allow(clippy::too_many_arguments)]
pub fn check_thm1_lipschitz<M: RateModel>(
    model: &M,
    domain: DomainBounds,
    contraction: Contraction,
    sens: &Sensitivity,
    weight_fraction: f64,
    n_pairs: usize,
    seed: u64,
    tol: f64,
    bound_scale: f64,
) -> Result<CheckReport> {
    let name = "thm1_lipschitz";
    let nu = contraction.nu;
    let w = WeightingFunction::poly_exp(weight_fraction * nu)?;
    let (m, integral) = ct_lipschitz_constant(nu, sens, &w)?;
    let m = m * bound_scale;
    let mut rng = check_rng(seed, name);
    let mut pairs = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let a = random_past_segments(&mut rng, domain, nu, 50)?;
        let b = match i {
            0 => a.clone(),
            _ if i % 2 == 1 => random_past_segments(&mut rng, domain, nu, 50)?,
            _ => {
                let (t0, d, v) = segment_parts(&a).expect("segments signal");
                let mut v = v.to_vec();
                let j = rng.int(0, v.len() - 1);
                v[j] = rng.uniform(domain.lo(), domain.hi());
                BiasSignal::segments(t0, d.to_vec(), v, domain)?
            }
        };
        pairs.push((a, b));
    }
    let horizon = crate::dynamics::truncation_horizon(nu, tol)?;
    let mut deep = Vec::new();
    for _ in 0..n_pairs.div_ceil(10) {
        let a = compressed_past(&mut rng, domain, nu, 0.5 * horizon)?;
        let (t0, _, v) = segment_parts(&a).expect("segments signal");
        let b = with_prefix(&a, &[1.0 / nu, horizon + t0], &[rng.uniform(domain.lo(), domain.hi()), v[0]])?;
        deep.push((a, b));
    }

    let ratios = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let df = (held_ct_functional(a, model)? - held_ct_functional(b, model)?).abs();
            let span = |s: &BiasSignal| -segment_parts(s).expect("segments signal").0;
            let dist = w.distance(a, b, span(a).max(span(b)));
            let ratio = if dist == 0.0 {
                if df == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                df / (m * dist)
            };
            Ok((ratio, i, df, dist))
        })
        .collect::<Result<Vec<_>>>()?;
    let opts = FadingOptions { tol, nu: Some(nu), ..Default::default() };
    let deep_errs = deep
        .par_iter()
        .map(|(a, b)| {
            let fa = held_ct_functional(a, model)?;
            let far = (fa - held_ct_functional(b, model)?).abs();
            let trunc = (ct_fading_functional(a, model, &opts)? - fa).abs();
            Ok((far, trunc))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = ratios.iter().max_by(|a, b| a.0.total_cmp(&b.0)).copied().unwrap_or((0.0, 0, 0.0, 0.0));
    let far = deep_errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let trunc = deep_errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let margin = (1.0 - worst.0).min((tol - far) / tol).min((tol - trunc) / tol);
    let worst_case = format!(
        "pair {}: |ΔF| = {:e}, M·‖ΔV‖_w = {:e} (ratio {:e}); beyond-horizon |ΔF| ≤ {:e}; truncation error ≤ {:e}",
        worst.1,
        worst.2,
        m * worst.3,
        worst.0,
        far,
        trunc
    );
    let config = json!({
        "domain": domain, "nu": nu, "g1": sens.g1, "g2": sens.g2, "weighting": w.shape(), "integral": integral,
        "M": m, "n_pairs": n_pairs, "tol": tol, "horizon": horizon, "bound_scale": bound_scale,
    });
    Ok(report(name, margin, worst_case, seed, config))
}

/// Constants of the discrete-time fading-memory bound over a domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtConstants {
    pub nu: f64,
    pub ts: f64,
    /// `max |d/dv e^{A(v)Ts}|`.
    pub m_phi: f64,
    /// `max |G'(v)|`.
    pub m_gain: f64,
    pub max_gain: f64,
    pub c1: SeriesVerdict,
    pub c2: SeriesVerdict,
    /// `M·c1·max G + M'·c2` when both sums are finite.
    pub lipschitz: Option<f64>,
}

pub fn dt_lipschitz_constants<M: RateModel>(
    model: &M,
    domain: DomainBounds,
    nu: f64,
    ts: f64,
    w: &WeightingSequence,
) -> Result<DtConstants> {
    let phi_slope = |v: f64| -> Result<f64> {
        let r = model.rates(v)?;
        let (_, da) = rate_derivatives(model, v)?;
        Ok(ts * (r.a * ts).exp() * da)
    };
    let gain_slope = |v: f64| -> Result<f64> {
        let r = model.rates(v)?;
        let (dk01, da) = rate_derivatives(model, v)?;
        let x = r.k * ts;
        let frac = -(-x).exp_m1() / r.k;
        let dfrac_dk = (ts * (-x).exp() * r.k + (-x).exp_m1()) / (r.k * r.k);
        Ok(dk01 * frac - r.k01 * dfrac_dk * da)
    };
    let (_, m_phi) = minimize_on(|v| Ok(-phi_slope(v)?.abs()), domain, SEARCH_GRID)?;
    let (_, m_gain) = minimize_on(|v| Ok(-gain_slope(v)?.abs()), domain, SEARCH_GRID)?;
    let (_, max_gain) = minimize_on(|v| Ok(-hold_map(&model.rates(v)?, ts).1), domain, SEARCH_GRID)?;
    let adm = dt_admissibility(w, nu, ts)?;
    let (m_phi, m_gain, max_gain) = (-m_phi, -m_gain, -max_gain);
    let lipschitz = match (adm.c1.value(), adm.c2.value()) {
        (Some(c1), Some(c2)) => Some(m_phi * c1 * max_gain + m_gain * c2),
        _ => None,
    };
    Ok(DtConstants { nu, ts, m_phi, m_gain, max_gain, c1: adm.c1, c2: adm.c2, lipschitz })
}

/// `F(Ṽ)` for a history (oldest first, newest at `k = −1`) that repeats its
/// oldest value forever into the past.
pub fn held_dt_functional<M: RateModel>(history: &[f64], ts: f64, model: &M) -> Result<f64> {
    let first = *history.first().ok_or(DmsError::HistoryTooShort { len: 0, depth: 1 })?;
    let mut p = model.rates(first)?.steady_state()?;
    for &v in history {
        p = dt_step(p.clamp(0.0, 1.0), v, ts, model)?;
    }
    Ok(p)
}

/// Discrete-time convergence `|ΔP_k| <= |ΔP_0|·e^{−νTs·k}` under random
/// sample sequences, finiteness of `c1`, `c2` for the polynomial-exponential
/// weighting with `a = weight_fraction·ν`, divergence for `e^{−2νTs|k|}`, and
/// the resulting Lipschitz bound on random history pairs.
#[allow(clippy::too_many_arguments)]
pub fn check_thm2_convergence<M: RateModel>(
    model: &M,
    domain: DomainBounds,
    contraction: Contraction,
    ts: f64,
    weight_fraction: f64,
    n_histories: usize,
    seed: u64,
) -> Result<CheckReport> {
    let name = "thm2_convergence";
    let nu = contraction.nu;
    let rate = nu * ts;
    let len = ((15.0 / rate).ceil() as usize).clamp(2, 400);
    let mut rng = check_rng(seed, name);
    let mut seqs = vec![vec![contraction.argmin; len]];
    let mut starts = vec![(0.0, 1.0)];
    for _ in 0..n_histories {
        seqs.push((0..len).map(|_| rng.uniform(domain.lo(), domain.hi())).collect());
        let (a, b) = (rng.unit(), rng.unit());
        starts.push((a, b));
    }
    let excess = seqs
        .par_iter()
        .zip(&starts)
        .enumerate()
        .map(|(i, (seq, &(a, b)))| {
            let mut worst = (f64::NEG_INFINITY, i, 0usize);
            for (p1_0, p2_0) in [(0.0, 1.0), (a, b)] {
                let d0 = (p2_0 - p1_0).abs();
                if d0 == 0.0 {
                    continue;
                }
                let (mut p1, mut p2) = (p1_0, p2_0);
                for (k, &v) in seq.iter().enumerate() {
                    let (phi, g) = hold_map(&model.rates(v)?, ts);
                    p1 = phi * p1 + g;
                    p2 = phi * p2 + g;
                    let e = ((p2 - p1).abs() / d0).ln() + rate * (k + 1) as f64;
                    if e > worst.0 {
                        worst = (e, i, k + 1);
                    }
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let conv = excess.iter().max_by(|a, b| a.0.total_cmp(&b.0)).copied().expect("non-empty");
    let bound = DECAY_SLACK.ln_1p();
    let conv_margin = (bound - conv.0) / bound;

    let w = WeightingSequence::poly_exp(weight_fraction * nu, ts)?;
    let consts = dt_lipschitz_constants(model, domain, nu, ts, &w)?;
    let fast = WeightingSequence::new(WeightShape::Exponential { rate: 2.0 * rate })?;
    let fast_adm = dt_admissibility(&fast, nu, ts)?;
    let adm_ok = consts.lipschitz.is_some() && !fast_adm.admissible();

    let hist_len = len.min(200);
    let mut pairs = Vec::new();
    for i in 0..n_histories {
        let a: Vec<f64> = (0..hist_len).map(|_| rng.uniform(domain.lo(), domain.hi())).collect();
        let mut b = a.clone();
        if i % 2 == 0 {
            let j = rng.int(0, hist_len - 1);
            b[j] = rng.uniform(domain.lo(), domain.hi());
        } else {
            b = (0..hist_len).map(|_| rng.uniform(domain.lo(), domain.hi())).collect();
        }
        pairs.push((a, b));
    }
    let lip = consts.lipschitz.unwrap_or(f64::NAN);
    let ratios = pairs
        .par_iter()
        .map(|(a, b)| {
            let df = (held_dt_functional(a, ts, model)? - held_dt_functional(b, ts, model)?).abs();
            let held = (a[0] - b[0]).abs() * w.shape().sup_on((a.len() + 1) as f64, f64::INFINITY);
            let dist = w.distance_ending_at(a, b, -1).max(held);
            Ok(if dist == 0.0 { 0.0 } else { df / (lip * dist) })
        })
        .collect::<Result<Vec<f64>>>()?;
    let lip_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let lip_margin = if lip_ratio.is_nan() { -1.0 } else { 1.0 - lip_ratio };
    let margin = conv_margin.min(lip_margin).min(if adm_ok { 1.0 } else { -1.0 });
    let worst_case = format!(
        "sequence {} step {}: |ΔP_k|/(|ΔP_0|e^(−νTs·k)) = {:.12}; c1 = {:?}, c2 = {:?}; e^(−2νTs|k|) admissible: {}; \
         worst |ΔF|/(L·‖ΔṼ‖) = {:e}",
        conv.1,
        conv.2,
        conv.0.exp(),
        consts.c1.value(),
        consts.c2.value(),
        fast_adm.admissible(),
        lip_ratio
    );
    let config = json!({
        "domain": domain, "nu": nu, "ts": ts, "sequence_length": len, "n_histories": n_histories,
        "weighting": w.shape(), "constants": consts, "fast_weighting": fast.shape(), "fast_verdict": fast_adm,
        "slack": DECAY_SLACK,
    });
    Ok(report(name, margin, worst_case, seed, config))
}

/// Sinusoid battery `offset + amplitude·cos(2πf·t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicityOptions {
    pub offset: f64,
    pub amplitude: f64,
    pub frequencies: Vec<f64>,
    /// Transient length in units of `1/ν`.
    pub transient_multiple: f64,
    pub threshold: f64,
    pub samples_per_period: usize,
}

impl Default for PeriodicityOptions {
    fn default() -> Self {
        PeriodicityOptions {
            offset: 1.0,
            amplitude: 0.5,
            frequencies: vec![0.01, 0.05, 0.1, 0.2],
            transient_multiple: 5.0,
            threshold: 1e-4,
            samples_per_period: 400,
        }
    }
}

fn shifted_mismatch(p: &[f64], shift: usize, count: usize) -> f64 {
    (0..=count).map(|i| (p[i + shift] - p[i]).abs()).fold(0.0, f64::max)
}

/// After a transient of `transient_multiple/ν`, the response is periodic with
/// the input period to `threshold`, and is not periodic with half of it.
///
/// The transient is crossed with the exact one-period affine map
/// `P ↦ Φ_T·P + G_T` raised to the required power.
pub fn check_periodicity<M: RateModel>(model: &M, opts: &PeriodicityOptions) -> Result<CheckReport> {
    let name = "periodicity";
    let mut rows = Vec::new();
    for &f in &opts.frequencies {
        let sig = BiasSignal::sinusoid(opts.offset, opts.amplitude, f)?;
        let nu = contraction_rate(sig.domain(), model)?.nu;
        let period = 1.0 / f;
        let n = (opts.transient_multiple / (nu * period)).ceil();
        let log_phi = log_transition(period, 0.0, &sig, model)?;
        let g = propagate_with(SwitchState::new(0.0, 0.0)?, &sig, &[0.0, period], &PropagateOptions::default(), model)?
            .p_ab[1];
        let p_n = g * (n * log_phi).exp_m1() / log_phi.exp_m1();
        let m = opts.samples_per_period;
        let t0 = n * period;
        let times: Vec<f64> = (0..=2 * m).map(|i| t0 + period * i as f64 / m as f64).collect();
        let tr = propagate_with(SwitchState::new(t0, p_n.clamp(0.0, 1.0))?, &sig, &times, &PropagateOptions::default(), model)?;
        let cycle = shifted_mismatch(&tr.p_ab, m, m);
        let half = if m % 2 == 0 { shifted_mismatch(&tr.p_ab, m / 2, m) } else { f64::NAN };
        let swing = extremes(&tr.times, &tr.p_ab);
        rows.push((f, nu, n, cycle, half, swing.max - swing.min));
    }
    let mut margin = f64::INFINITY;
    let mut worst = String::new();
    for &(f, _, n, cycle, half, swing) in &rows {
        let cm = (opts.threshold - cycle) / opts.threshold;
        // a response that moves must not repeat at half the input period
        let hm = if swing > opts.threshold { (half - opts.threshold) / opts.threshold } else { f64::INFINITY };
        let m = cm.min(hm);
        if m < margin {
            margin = m;
            worst = format!(
                "f = {f} Hz after {n} periods: cycle mismatch {cycle:e}, half-period mismatch {half:e}, swing {swing:e}"
            );
        }
    }
    let config = json!({ "options": opts, "per_frequency": rows.iter().map(|r| json!({
        "f": r.0, "nu": r.1, "transient_periods": r.2, "cycle_mismatch": r.3, "half_period_mismatch": r.4, "swing": r.5,
    })).collect::<Vec<_>>() });
    Ok(report(name, margin.min(f64::MAX), worst, 0, config))
}

/// Exact propagation and the Runge–Kutta oracle agree to `tol` over
/// `periods` input periods of each sinusoid, starting from `P = 0`.
pub fn check_zoh_vs_rk<M: RateModel>(
    model: &M,
    opts: &PeriodicityOptions,
    periods: f64,
    tol: f64,
    rk_tol: f64,
) -> Result<CheckReport> {
    let name = "zoh_vs_rk";
    let rows = opts
        .frequencies
        .par_iter()
        .map(|&f| {
            let sig = BiasSignal::sinusoid(opts.offset, opts.amplitude, f)?;
            let n = (periods * opts.samples_per_period as f64).ceil() as usize;
            let t_end = periods / f;
            let times: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
            let init = SwitchState::new(0.0, 0.0)?;
            let exact = propagate_with(init, &sig, &times, &PropagateOptions::default(), model)?;
            let rk = rk_oracle(init, &sig, &times, rk_tol, model)?;
            Ok((f, exact.sup_distance(&rk)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (f, d) = rows.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or_default();
    let config = json!({ "options": opts, "periods": periods, "tol": tol, "rk_tol": rk_tol, "sup_distance": rows });
    Ok(report(name, (tol - d) / tol, format!("f = {f} Hz: sup |P_exact − P_rk| = {d:e}"), 0, config))
}

/// `dt_step` agrees with the Runge–Kutta oracle over one sample period on
/// random `(P, v, Ts)`, `Ts` log-uniform in `[0.01, 100]` s.
pub fn check_dt_step_vs_rk<M: RateModel>(
    model: &M,
    domain: DomainBounds,
    n: usize,
    seed: u64,
    tol: f64,
    rk_tol: f64,
) -> Result<CheckReport> {
    let name = "dt_step_vs_rk";
    let mut rng = check_rng(seed, name);
    let cases: Vec<(f64, f64, f64)> =
        (0..n).map(|_| (rng.unit(), rng.uniform(domain.lo(), domain.hi()), rng.log_uniform(0.01, 100.0))).collect();
    let rows = cases
        .par_iter()
        .map(|&(p, v, ts)| {
            let step = dt_step(p, v, ts, model)?;
            let rk = rk_oracle(SwitchState::new(0.0, p)?, &BiasSignal::constant(v)?, &[0.0, ts], rk_tol, model)?;
            Ok(((step - rk.p_ab[1]).abs(), p, v, ts))
        })
        .collect::<Result<Vec<_>>>()?;
    let w = rows.iter().copied().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or_default();
    let config = json!({ "domain": domain, "n": n, "tol": tol, "rk_tol": rk_tol });
    Ok(report(
        name,
        (tol - w.0) / tol,
        format!("P = {}, v = {}, Ts = {}: |Δ| = {:e}", w.1, w.2, w.3, w.0),
        seed,
        config,
    ))
}
