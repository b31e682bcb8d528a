//! Adaptive Dormand–Prince 5(4) integration of the raw rate equation
//! `dP/dt = k01(V_t) − K(V_t)·P`, evaluating rates afresh at every stage.

use crate::dynamics::{BiasSignal, SwitchState, Trajectory};
use crate::error::{DmsError, Result};
use crate::model::RateModel;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 50_000_000;

fn rhs<M: RateModel>(t: f64, p: f64, signal: &BiasSignal, model: &M) -> Result<f64> {
    let r = model.rates(signal.value(t))?;
    Ok(r.k01 - (r.k01 + r.k10) * p)
}

/// Solution sampled at `times` (ascending, starting at `initial.t`), with
/// absolute and relative local tolerance `rk_tol`.
///
/// Steps never straddle a switch of a piecewise-constant signal; the stage
/// evaluations inside a step use the value held on that step.
pub fn rk_oracle<M: RateModel>(
    initial: SwitchState,
    signal: &BiasSignal,
    times: &[f64],
    rk_tol: f64,
    model: &M,
) -> Result<Trajectory> {
    if times.first() != Some(&initial.t) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DmsError::InvalidParameter { name: "times", reason: "must ascend from the initial time".into() });
    }
    if !(rk_tol > 0.0) {
        return Err(DmsError::InvalidParameter { name: "rk_tol", reason: format!("{rk_tol} must be > 0") });
    }
    let t_end = *times.last().unwrap();
    let mut stops: Vec<f64> = times.to_vec();
    if signal.is_piecewise_constant() {
        stops.extend(signal.switch_times(initial.t, t_end));
        stops.sort_by(f64::total_cmp);
        stops.dedup();
    }
    let mut out = vec![initial.p_ab];
    let mut t = initial.t;
    let mut p = initial.p_ab;
    let mut h = f64::NAN;
    let mut steps = 0;
    let mut next_output = 1;
    for &stop in &stops[1..] {
        // rates inside [t, stop] come from the midpoint value when the signal is piecewise
        let held = signal.is_piecewise_constant().then(|| signal.value(0.5 * (t + stop)));
        let f = |s: f64, y: f64| -> Result<f64> {
            match held {
                Some(v) => {
                    let r = model.rates(v)?;
                    Ok(r.k01 - (r.k01 + r.k10) * y)
                }
                None => rhs(s, y, signal, model),
            }
        };
        if h.is_nan() {
            // f(t, 0) − f(t, 1) = K(V_t)
            let k = (f(t, 0.0)? - f(t, 1.0)?).abs();
            h = (stop - t).min(0.1 * rk_tol.powf(0.2) / k.max(1e-300));
        }
        while t < stop {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(DmsError::NoConvergence { value: p, error: f64::NAN, subdivisions: steps });
            }
            let last = h >= stop - t;
            let hh = if last { stop - t } else { h };
            let mut k = [0.0; 7];
            for i in 0..7 {
                let y = p + hh * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
                k[i] = f(t + C[i] * hh, y)?;
            }
            let y5 = p + hh * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
            let y4 = p + hh * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
            let scale = rk_tol * (1.0 + p.abs().max(y5.abs()));
            let err = (y5 - y4).abs() / scale;
            if !err.is_finite() {
                return Err(DmsError::NonFinite("runge-kutta step"));
            }
            if err <= 1.0 {
                t = if last { stop } else { t + hh };
                p = y5;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) || factor < 1.0 {
                h = hh * factor;
            }
        }
        if next_output < times.len() && stop == times[next_output] {
            out.push(p);
            next_output += 1;
        }
    }
    let v = times.iter().map(|&t| signal.value(t)).collect();
    Ok(Trajectory { times: times.to_vec(), p_ab: out, v, i_avg: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConstantRates, FnRates, RateSet};

    #[test]
    fn constant_bias_matches_closed_form() {
        let m = ConstantRates { k01: 0.3, k10: 0.5 };
        let sig = BiasSignal::constant(0.0).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let tr = rk_oracle(SwitchState::new(0.0, 1.0).unwrap(), &sig, &times, 1e-12, &m).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.p_ab) {
            let exact = 0.375 + 0.625 * (-0.8 * t).exp();
            assert!((p - exact).abs() < 1e-11, "{t}: {p} vs {exact}");
        }
    }

    #[test]
    fn zero_length_returns_initial_state() {
        let m = ConstantRates { k01: 0.3, k10: 0.5 };
        let sig = BiasSignal::constant(0.0).unwrap();
        let tr = rk_oracle(SwitchState::new(2.0, 0.25).unwrap(), &sig, &[2.0], 1e-10, &m).unwrap();
        assert_eq!(tr.p_ab, vec![0.25]);
    }

    #[test]
    fn smooth_signal_matches_analytic_solution() {
        // K ≡ 1 so P_t = e^{-t}·∫_0^t e^s k01(s) ds with k01 = 0.5 + 0.25 cos(s)
        let m = FnRates(|v: f64| Ok(RateSet::new(v, 0.5 + 0.25 * v, 0.5 - 0.25 * v)));
        let sig = BiasSignal::sinusoid(0.0, 1.0, 1.0 / (2.0 * std::f64::consts::PI)).unwrap();
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let tr = rk_oracle(SwitchState::new(0.0, 0.0).unwrap(), &sig, &times, 1e-11, &m).unwrap();
        for (&t, p) in tr.times.iter().zip(&tr.p_ab) {
            let exact = 0.5 * (1.0 - (-t).exp()) + 0.125 * (t.cos() + t.sin() - (-t).exp());
            assert!((p - exact).abs() < 1e-9, "{t}");
        }
    }
}
