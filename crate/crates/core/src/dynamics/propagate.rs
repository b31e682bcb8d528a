//! Exact propagation of the switching probability.

use serde::{Deserialize, Serialize};

use super::signal::BiasSignal;
use crate::error::{DmsError, Result};
use crate::io::CsvTable;
use crate::model::{RateModel, RateSet, CONTRACTION_GUARD};
use crate::quadrature::integrate_interval;
use crate::transport::{check_probability, CurrentTable};

/// Probability of the non-protonated (on) state at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchState {
    pub t: f64,
    pub p_ab: f64,
}

impl SwitchState {
    pub fn new(t: f64, p_ab: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(DmsError::NonFinite("switch state time"));
        }
        check_probability(p_ab)?;
        Ok(SwitchState { t, p_ab })
    }

    pub fn p_abbar(&self) -> f64 {
        1.0 - self.p_ab
    }
}

/// Sampled solution of the rate equation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub p_ab: Vec<f64>,
    pub v: Vec<f64>,
    pub i_avg: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<SwitchState> {
        Some(SwitchState { t: *self.times.last()?, p_ab: *self.p_ab.last()? })
    }

    /// Fills `i_avg` from a cached current table.
    pub fn attach_currents(&mut self, table: &CurrentTable) -> Result<()> {
        let i = self
            .v
            .iter()
            .zip(&self.p_ab)
            .map(|(&v, &p)| table.average_current(v, p.clamp(0.0, 1.0)))
            .collect::<Result<Vec<f64>>>()?;
        self.i_avg = Some(i);
        Ok(())
    }

    /// Columns `t, P_AB, P_ABbar, V` and `I_avg` when present.
    pub fn to_table(&self) -> CsvTable {
        let mut header = vec!["t", "P_AB", "P_ABbar", "V"];
        if self.i_avg.is_some() {
            header.push("I_avg");
        }
        let mut table = CsvTable::new(header);
        for i in 0..self.len() {
            let mut row = vec![self.times[i], self.p_ab[i], 1.0 - self.p_ab[i], self.v[i]];
            if let Some(cur) = &self.i_avg {
                row.push(cur[i]);
            }
            table.rows.push(row);
        }
        table
    }

    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.times != other.times {
            return Err(DmsError::InvalidParameter {
                name: "trajectory",
                reason: "time grids differ".into(),
            });
        }
        Ok(self.p_ab.iter().zip(&other.p_ab).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// `(Φ, G)` of one zero-order-hold step of length `dt` under fixed rates:
/// `P ← Φ·P + G` with `Φ = e^{−K·dt}`, `G = (k01/K)·(1 − e^{−K·dt})`.
///
/// Not guarded against `K <= 0`, so broken rate models still propagate.
pub fn hold_map(r: &RateSet, dt: f64) -> (f64, f64) {
    let x = -r.k * dt;
    let phi = x.exp();
    let g = if r.k.abs() * dt < 1e-300 {
        r.k01 * dt
    } else {
        r.k01 * (-x.exp_m1()) / r.k
    };
    (phi, g)
}

/// Steady-state probability `k01/(k01 + k10)` under constant bias.
pub fn steady_state<M: RateModel>(v: f64, model: &M) -> Result<f64> {
    model.rates(v)?.steady_state()
}

fn guarded(r: RateSet) -> Result<RateSet> {
    if !(r.k > CONTRACTION_GUARD) {
        return Err(DmsError::DegenerateContraction { k: r.k, guard: CONTRACTION_GUARD });
    }
    Ok(r)
}

fn check_period(ts: f64) -> Result<f64> {
    if ts.is_finite() && ts > 0.0 {
        Ok(ts)
    } else {
        Err(DmsError::InvalidParameter { name: "Ts", reason: format!("{ts} must be finite and > 0") })
    }
}

/// Gain `G(v) = −(k01/A)(1 − e^{A·Ts})` of one sample period.
pub fn dt_gain<M: RateModel>(v: f64, ts: f64, model: &M) -> Result<f64> {
    let r = guarded(model.rates(v)?)?;
    Ok(hold_map(&r, check_period(ts)?).1)
}

/// One exact sample-period step `e^{A·Ts}·P + G`.
pub fn dt_step<M: RateModel>(p_ab: f64, v: f64, ts: f64, model: &M) -> Result<f64> {
    check_probability(p_ab)?;
    let r = guarded(model.rates(v)?)?;
    let (phi, g) = hold_map(&r, check_period(ts)?);
    Ok(phi * p_ab + g)
}

/// Transition function `Φ_{t,τ} = exp ∫_τ^t A(V_s) ds`.
pub fn transition<M: RateModel>(t: f64, tau: f64, signal: &BiasSignal, model: &M) -> Result<f64> {
    Ok(log_transition(t, tau, signal, model)?.exp())
}

/// `∫_τ^t A(V_s) ds`; an exact sum for piecewise-constant signals.
pub fn log_transition<M: RateModel>(t: f64, tau: f64, signal: &BiasSignal, model: &M) -> Result<f64> {
    if !(t.is_finite() && tau.is_finite()) {
        return Err(DmsError::NonFinite("transition"));
    }
    if t < tau {
        return Err(DmsError::TimeOrder { t, tau });
    }
    if t == tau {
        return Ok(0.0);
    }
    if signal.is_piecewise_constant() {
        let mut edges = vec![tau];
        edges.extend(signal.switch_times(tau, t));
        edges.push(t);
        let mut sum = 0.0;
        for w in edges.windows(2) {
            let r = model.rates(signal.value(0.5 * (w[0] + w[1])))?;
            sum += r.a * (w[1] - w[0]);
        }
        return Ok(sum);
    }
    let failure = std::cell::Cell::new(None);
    let a = |s: f64| match model.rates(signal.value(s)) {
        Ok(r) => r.a,
        Err(e) => {
            failure.set(Some(e));
            f64::NAN
        }
    };
    let breaks = match signal.time_scale() {
        Some(period) if (t - tau) / period < 1e5 => {
            let half = 0.5 * period;
            let first = (tau / half).ceil() as i64;
            let last = (t / half).floor() as i64;
            (first..=last).map(|k| k as f64 * half).collect()
        }
        _ => Vec::new(),
    };
    let r = integrate_interval(a, tau, t, &breaks, 1e-13, 1e-13, 100_000);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(r?.value)
}

/// Controls of [`propagate_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagateOptions {
    /// Sup-norm agreement required between successive substep halvings.
    pub refine_tol: f64,
    pub max_halvings: usize,
    /// First substep width for smooth signals; defaults to a twentieth of the
    /// signal's period, capped at the output spacing.
    pub initial_substep: Option<f64>,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { refine_tol: 1e-8, max_halvings: 18, initial_substep: None }
    }
}

/// Uniform output grid from `t0` to `t_end` inclusive.
pub fn output_grid(t0: f64, t_end: f64, output_dt: f64) -> Result<Vec<f64>> {
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(DmsError::TimeOrder { t: t_end, tau: t0 });
    }
    if !(output_dt > 0.0 && output_dt.is_finite()) {
        return Err(DmsError::InvalidParameter {
            name: "output_dt",
            reason: format!("{output_dt} must be finite and > 0"),
        });
    }
    let n = ((t_end - t0) / output_dt - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..n).map(|i| t0 + output_dt * i as f64).collect();
    times.push(t_end);
    Ok(times)
}

/// Solution of the rate equation sampled every `output_dt` (default: 1000 intervals).
pub fn propagate<M: RateModel>(
    initial: SwitchState,
    signal: &BiasSignal,
    t_end: f64,
    output_dt: Option<f64>,
    model: &M,
) -> Result<Trajectory> {
    let dt = output_dt.unwrap_or((t_end - initial.t) / 1000.0);
    let times = output_grid(initial.t, t_end, dt)?;
    propagate_with(initial, signal, &times, &PropagateOptions::default(), model)
}

/// Solution sampled at `times` (ascending, starting at `initial.t`).
///
/// Piecewise-constant signals advance exactly across every switch. Smooth
/// signals are held at their midpoint value on substeps, and the substep is
/// halved until two successive Richardson-extrapolated solutions agree to
/// `opts.refine_tol`.
pub fn propagate_with<M: RateModel>(
    initial: SwitchState,
    signal: &BiasSignal,
    times: &[f64],
    opts: &PropagateOptions,
    model: &M,
) -> Result<Trajectory> {
    check_probability(initial.p_ab)?;
    if times.first() != Some(&initial.t) {
        return Err(DmsError::InvalidParameter {
            name: "times",
            reason: "output grid must start at the initial time".into(),
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(DmsError::InvalidParameter { name: "times", reason: "must be finite and strictly ascending".into() });
    }
    let v: Vec<f64> = times.iter().map(|&t| signal.value(t)).collect();
    let p_ab = if signal.is_piecewise_constant() {
        exact_piecewise(initial.p_ab, signal, times, model)?
    } else {
        refined_smooth(initial.p_ab, signal, times, opts, model)?
    };
    Ok(Trajectory { times: times.to_vec(), p_ab, v, i_avg: None })
}

fn exact_piecewise<M: RateModel>(p0: f64, signal: &BiasSignal, times: &[f64], model: &M) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    out.push(p0);
    let mut p = p0;
    let mut cached: Option<RateSet> = None;
    for w in times.windows(2) {
        let mut edges = vec![w[0]];
        edges.extend(signal.switch_times(w[0], w[1]));
        edges.push(w[1]);
        for seg in edges.windows(2) {
            let v = signal.value(0.5 * (seg[0] + seg[1]));
            let r = match cached {
                Some(r) if r.v == v => r,
                _ => {
                    let r = model.rates(v)?;
                    cached = Some(r);
                    r
                }
            };
            let (phi, g) = hold_map(&r, seg[1] - seg[0]);
            p = phi * p + g;
        }
        out.push(p);
    }
    Ok(out)
}

fn midpoint_pass<M: RateModel>(p0: f64, signal: &BiasSignal, times: &[f64], counts: &[usize], model: &M) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    out.push(p0);
    let mut p = p0;
    for (w, &n) in times.windows(2).zip(counts) {
        let step = (w[1] - w[0]) / n as f64;
        for j in 0..n {
            let mid = w[0] + step * (j as f64 + 0.5);
            let (phi, g) = hold_map(&model.rates(signal.value(mid))?, step);
            p = phi * p + g;
        }
        out.push(p);
    }
    Ok(out)
}

fn refined_smooth<M: RateModel>(
    p0: f64,
    signal: &BiasSignal,
    times: &[f64],
    opts: &PropagateOptions,
    model: &M,
) -> Result<Vec<f64>> {
    let spacing = times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let h = opts
        .initial_substep
        .unwrap_or_else(|| signal.time_scale().map_or(spacing, |p| p / 20.0))
        .min(spacing);
    // substeps per output interval, doubled on every pass so each grid nests in the next
    let mut counts: Vec<usize> = times.windows(2).map(|w| ((w[1] - w[0]) / h).ceil().max(1.0) as usize).collect();
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let mut coarse = midpoint_pass(p0, signal, times, &counts, model)?;
    let mut previous: Option<Vec<f64>> = None;
    let mut achieved = f64::INFINITY;
    for _ in 0..opts.max_halvings {
        counts.iter_mut().for_each(|n| *n *= 2);
        let fine = midpoint_pass(p0, signal, times, &counts, model)?;
        // the midpoint hold is symmetric, so its error has an even expansion in h
        let extrapolated: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| f + (f - c) / 3.0).collect();
        achieved = match &previous {
            Some(prev) => sup(prev, &extrapolated).min(sup(&coarse, &fine)),
            None => sup(&coarse, &fine),
        };
        if achieved < opts.refine_tol {
            return Ok(extrapolated);
        }
        previous = Some(extrapolated);
        coarse = fine;
    }
    Err(DmsError::RefinementFailed { achieved, target: opts.refine_tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConstantRates, DomainBounds, FnRates, SwitchModel};

    #[test]
    fn hold_map_limits() {
        let r = RateSet::new(0.0, 0.3, 0.7);
        let (phi, g) = hold_map(&r, 0.0);
        assert_eq!((phi, g), (1.0, 0.0));
        let (phi, g) = hold_map(&r, 1e6);
        assert_eq!(phi, 0.0);
        assert!((g - 0.3).abs() < 1e-15);
        let (_, g) = hold_map(&RateSet::new(0.0, 0.2, 0.0), 1e-3);
        assert!((g + (-0.2e-3_f64).exp_m1()).abs() < 1e-14 * g);
        let (phi, g) = hold_map(&RateSet::new(0.0, 0.0, 0.0), 2.0);
        assert_eq!((phi, g), (1.0, 0.0));
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let m = SwitchModel::table1();
        for &v in &[-2.0, 0.5, 1.0, 1.65] {
            let ps = steady_state(v, &m).unwrap();
            let next = dt_step(ps, v, 0.37, &m).unwrap();
            assert!((next - ps).abs() < 1e-15);
        }
    }

    #[test]
    fn gain_limits() {
        let m = SwitchModel::table1();
        let r = m.rates(1.0).unwrap();
        for &ts in &[1e-6, 1e-4, 1e-2] {
            let g = dt_gain(1.0, ts, &m).unwrap();
            assert!((g - r.k01 * ts).abs() <= r.k * r.k01 * ts * ts);
        }
        let g = dt_gain(1.0, 1e6, &m).unwrap();
        assert!((g - r.k01 / r.k).abs() < 1e-15);
        assert!(dt_gain(1.0, 0.0, &m).is_err());
        assert!(dt_step(1.2, 1.0, 1.0, &m).is_err());
        assert!(dt_gain(0.0, 1.0, &ConstantRates { k01: 0.0, k10: 0.0 }).is_err());
    }

    #[test]
    fn constant_bias_matches_closed_form() {
        let m = SwitchModel::table1();
        let v = 1.0;
        let r = m.rates(v).unwrap();
        let ps = r.k01 / r.k;
        let sig = BiasSignal::constant(v).unwrap();
        for p0 in [0.0, 1.0] {
            let tr = propagate(SwitchState::new(0.0, p0).unwrap(), &sig, 50.0, Some(0.5), &m).unwrap();
            for (t, p) in tr.times.iter().zip(&tr.p_ab) {
                let exact = ps + (p0 - ps) * (r.a * t).exp();
                assert!((p - exact).abs() < 1e-14, "{t}");
            }
        }
        let tr = propagate(SwitchState::new(0.0, ps).unwrap(), &sig, 50.0, None, &m).unwrap();
        assert!(tr.p_ab.iter().all(|p| (p - ps).abs() < 1e-12));
        assert_eq!(tr.len(), 1001);
    }

    #[test]
    fn transition_constant_and_identity() {
        let m = SwitchModel::table1();
        let sig = BiasSignal::constant(0.5).unwrap();
        assert_eq!(transition(3.0, 3.0, &sig, &m).unwrap(), 1.0);
        let a = m.rates(0.5).unwrap().a;
        assert!((transition(4.0, 1.0, &sig, &m).unwrap() - (3.0 * a).exp()).abs() < 1e-15);
        assert!(matches!(transition(1.0, 2.0, &sig, &m), Err(DmsError::TimeOrder { .. })));
    }

    #[test]
    fn smooth_transition_matches_quadrature_of_known_rates() {
        // K(v) = 1 + v² under v = cos(t): ∫_0^T K = T + T/2 + sin(2T)/4
        let m = FnRates(|v: f64| Ok(RateSet::new(v, 0.5, 0.5 + v * v)));
        let sig = BiasSignal::sinusoid(0.0, 1.0, 1.0 / (2.0 * std::f64::consts::PI)).unwrap();
        let t: f64 = 7.3;
        let exact = -(1.5 * t + (2.0 * t).sin() / 4.0);
        assert!((log_transition(t, 0.0, &sig, &m).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn smooth_propagation_refines() {
        let m = FnRates(|v: f64| Ok(RateSet::new(v, 0.5 + 0.25 * v, 0.5 - 0.25 * v)));
        let sig = BiasSignal::sinusoid(0.0, 1.0, 0.1).unwrap();
        let tr = propagate(SwitchState::new(0.0, 0.0).unwrap(), &sig, 10.0, Some(0.5), &m).unwrap();
        // P' = k01 − P with k01 = 0.5 + 0.25cos(ωt):
        let w = 2.0 * std::f64::consts::PI * 0.1;
        let exact = |t: f64| {
            0.5 * (1.0 - (-t).exp()) + 0.25 * ((t * w).cos() + w * (t * w).sin() - (-t).exp()) / (1.0 + w * w)
        };
        for (t, p) in tr.times.iter().zip(&tr.p_ab) {
            assert!((p - exact(*t)).abs() < 1e-8, "{t}: {p} vs {}", exact(*t));
        }
    }

    #[test]
    fn piecewise_signal_is_exact_across_switches() {
        let m = SwitchModel::table1();
        let d = DomainBounds::new(-2.0, 2.0).unwrap();
        let sig = BiasSignal::piecewise(0.0, 0.7, vec![1.0, -0.5, 0.3], d).unwrap();
        let tr = propagate(SwitchState::new(0.0, 0.2).unwrap(), &sig, 2.1, Some(1.0), &m).unwrap();
        let mut p = 0.2;
        for v in [1.0, -0.5, 0.3] {
            p = dt_step(p, v, 0.7, &m).unwrap();
        }
        assert!((tr.p_ab.last().unwrap() - p).abs() < 1e-15);
        assert_eq!(tr.times, vec![0.0, 1.0, 2.0, 2.1]);
    }
}
