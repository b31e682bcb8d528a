//! Acceptance gate. Every test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test --test acceptance -- --nocapture` to see them.

use std::time::Instant;

use dms_core::dynamics::steady_state;
use dms_core::model::{contraction_rate, sensitivity};
use dms_core::transport::{bridge_population, state_current_result};
use dms_core::verify::{
    check_cor1_bounds, check_cor2_steady_state, check_dt_step_vs_rk, check_lemma1_positivity, check_lemma2_decay,
    check_periodicity, check_thm1_lipschitz, check_thm2_convergence, check_zoh_vs_rk, CheckReport, PeriodicityOptions,
};
use dms_core::{DomainBounds, MolecularState, QuadratureSpec, SwitchModel, SwitchParams};

const SEED: u64 = 0;

fn domain() -> DomainBounds {
    DomainBounds::new(-2.0, 2.0).unwrap()
}

fn verdict(id: &str, what: &str, ok: bool, detail: String) {
    println!("[{}] {id} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{id} {what}: {detail}");
}

fn reports(id: &str, what: &str, reports: &[CheckReport], extra: Option<(bool, String)>) {
    let mut ok = reports.iter().all(CheckReport::passed);
    let mut detail: Vec<String> = reports.iter().map(CheckReport::summary).collect();
    if let Some((extra_ok, d)) = extra {
        ok &= extra_ok;
        detail.push(d);
    }
    verdict(id, what, ok, detail.join("; "));
}

fn fig1_sweep() -> Vec<f64> {
    DomainBounds::new(-2.5, 2.5).unwrap().grid(51)
}

#[test]
fn criterion_01_positivity_and_bounds() {
    let m = SwitchModel::table1();
    let nu = contraction_rate(domain(), &m).unwrap().nu;
    let start = Instant::now();
    let lemma1 = check_lemma1_positivity(&m, domain(), nu, 100, SEED).unwrap();
    let cor1 = check_cor1_bounds(&m, domain(), nu, 100, SEED).unwrap();
    let secs = start.elapsed().as_secs_f64();
    reports("#1", "positivity and unit bounds", &[lemma1, cor1], Some((secs < 30.0, format!("runtime {secs:.1} s"))));
}

#[test]
fn criterion_02_bridge_population_bounds() {
    let p = SwitchParams::table1();
    let q = QuadratureSpec::default();
    let (mut lo, mut hi, mut protonated) = (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64);
    for v in domain().grid(401) {
        for state in MolecularState::BOTH {
            let b = bridge_population(v, state, &p, &q).unwrap();
            lo = lo.min(b);
            hi = hi.max(b);
            if state == MolecularState::Protonated {
                protonated = protonated.max(b);
            }
        }
    }
    let ok = lo >= 0.0 && hi <= 1.0 + 1e-9 && protonated <= 0.05;
    verdict("#2", "bridge populations", ok, format!("range [{lo:.3e}, {hi:.6}], protonated max {protonated:.4}"));
}

#[test]
fn criterion_03_transition_decay() {
    let m = SwitchModel::table1();
    let c = contraction_rate(domain(), &m).unwrap();
    let r = check_lemma2_decay(&m, domain(), c, 100, SEED).unwrap();
    reports("#3", "transition decay bound", &[r], None);
}

#[test]
fn criterion_04_steady_state() {
    let m = SwitchModel::table1();
    let r = check_cor2_steady_state(&m, &domain().grid(51), 10.0, 1e-6, 1e-10).unwrap();
    reports("#4", "steady state after 10/K", &[r], None);
}

#[test]
fn criterion_05_exact_propagation_vs_runge_kutta() {
    let m = SwitchModel::table1();
    let zoh = check_zoh_vs_rk(&m, &PeriodicityOptions::default(), 3.0, 1e-6, 1e-10).unwrap();
    let dt = check_dt_step_vs_rk(&m, domain(), 100, SEED, 1e-9, 1e-12).unwrap();
    reports("#5", "exact propagation vs Runge-Kutta", &[zoh, dt], None);
}

#[test]
fn criterion_06_continuous_lipschitz() {
    let m = SwitchModel::table1();
    let c = contraction_rate(domain(), &m).unwrap();
    let s = sensitivity(domain(), &m).unwrap();
    let r = check_thm1_lipschitz(&m, domain(), c, &s, 0.5, 200, SEED, 1e-10, 1.0).unwrap();
    reports("#6", "continuous-time Lipschitz bound", &[r], None);
}

#[test]
fn criterion_07_discrete_convergence() {
    let m = SwitchModel::table1();
    let c = contraction_rate(domain(), &m).unwrap();
    let r = check_thm2_convergence(&m, domain(), c, 0.05 / c.nu, 0.5, 100, SEED).unwrap();
    reports("#7", "discrete-time convergence and admissibility", &[r], None);
}

#[test]
fn criterion_08_periodic_response() {
    let m = SwitchModel::table1();
    let r = check_periodicity(&m, &PeriodicityOptions::default()).unwrap();
    reports("#8", "periodic response", &[r], None);
}

#[test]
fn criterion_09_monte_carlo_vs_deterministic() {
    let p = SwitchParams::table1();
    let det = QuadratureSpec::default();
    let mc = QuadratureSpec::monte_carlo(500, SEED);
    let mut worst = 0.0_f64;
    for v in fig1_sweep() {
        for state in MolecularState::BOTH {
            let d = state_current_result(v, state, &p, &det).unwrap().value;
            let r = state_current_result(v, state, &p, &mc).unwrap();
            let z = if r.stderr > 0.0 { (r.value - d).abs() / r.stderr } else if r.value == d { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
        }
    }
    let big = QuadratureSpec::monte_carlo(8000, SEED);
    let ratios: Vec<f64> = [-1.5, 1.5, 2.5]
        .iter()
        .map(|&v| {
            let s = |q: &QuadratureSpec| state_current_result(v, MolecularState::NonProtonated, &p, q).unwrap().stderr;
            s(&mc) / s(&big)
        })
        .collect();
    let ok = worst <= 4.0 && ratios.iter().all(|r| (3.0..=5.0).contains(r));
    verdict("#9", "Monte Carlo vs deterministic currents", ok, format!("worst |Δ|/stderr {worst:.2}, stderr ratios {ratios:.2?}"));
}

#[test]
fn criterion_10a_steady_state_extremes() {
    let m = SwitchModel::table1();
    let low = steady_state(-2.0, &m).unwrap();
    let high = steady_state(2.0, &m).unwrap();
    verdict("#10a", "steady state at ±2 V", low >= 0.95 && high <= 0.05, format!("P*(-2) = {low:.4}, P*(+2) = {high:.4}"));
}

#[test]
fn criterion_10b_protonated_current_negligible() {
    let p = SwitchParams::table1();
    let q = QuadratureSpec::default();
    let (mut ab, mut abbar) = (0.0_f64, 0.0_f64);
    for v in fig1_sweep() {
        ab = ab.max(state_current_result(v, MolecularState::NonProtonated, &p, &q).unwrap().value.abs());
        abbar = abbar.max(state_current_result(v, MolecularState::Protonated, &p, &q).unwrap().value.abs());
    }
    let ratio = abbar / ab;
    verdict("#10b", "protonated current", ratio <= 0.02, format!("max|I_ABbar|/max|I_AB| = {ratio:.4}"));
}
