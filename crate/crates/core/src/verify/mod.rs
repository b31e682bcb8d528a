//! Executable checks of the model's positivity, convergence, steady-state,
//! fading-memory and periodicity guarantees, each with a machine-readable
//! report, plus an independent Runge–Kutta oracle and fault-injection doubles.

mod checks;
mod rk;
mod suite;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dynamics::BiasSignal;
use crate::error::Result;
use crate::model::{DomainBounds, RateModel, RateSet};

pub use checks::{
    check_cor1_bounds, check_cor2_steady_state, check_dt_step_vs_rk, check_lemma1_positivity, check_lemma2_decay,
    check_periodicity, check_thm1_lipschitz, check_thm2_convergence, check_zoh_vs_rk, dt_lipschitz_constants,
    ct_lipschitz_constant, held_ct_functional, held_dt_functional, DtConstants, PeriodicityOptions,
};
pub use rk::rk_oracle;
pub use suite::{run_suite, SuiteConfig, SuiteReport, CHECK_NAMES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of one check. `margin` is the normalized slack of the tightest
/// instance: non-negative exactly when the check passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub verdict: Verdict,
    pub worst_case: String,
    pub margin: f64,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// One human-readable line.
    pub fn summary(&self) -> String {
        let v = if self.passed() { "PASS" } else { "FAIL" };
        format!("[{v}] {} margin={:.3e} worst: {}", self.check_name, self.margin, self.worst_case)
    }
}

/// Deterministic stream for one check: the seed selects the key, the check
/// name selects the stream.
pub fn check_rng(seed: u64, check_name: &str) -> CheckRng {
    // FNV-1a
    let tag = check_name.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    CheckRng(rng)
}

pub struct CheckRng(ChaCha20Rng);

impl CheckRng {
    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (lo.ln() + (hi.ln() - lo.ln()) * self.unit()).exp()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + ((hi - lo + 1) as f64 * self.unit()) as usize
    }
}

/// Random piecewise-constant signal starting at `t0`: 1 to `max_segments`
/// segments, levels uniform in `domain`, durations log-uniform in
/// `[0.1/ν, 10/ν]`.
pub fn random_segments(rng: &mut CheckRng, domain: DomainBounds, nu: f64, t0: f64, max_segments: usize) -> Result<BiasSignal> {
    let n = rng.int(1, max_segments.max(1));
    let durations: Vec<f64> = (0..n).map(|_| rng.log_uniform(0.1 / nu, 10.0 / nu)).collect();
    let values: Vec<f64> = (0..n).map(|_| rng.uniform(domain.lo(), domain.hi())).collect();
    BiasSignal::segments(t0, durations, values, domain)
}

/// As [`random_segments`] but ending at time 0, for signals on the past.
pub fn random_past_segments(rng: &mut CheckRng, domain: DomainBounds, nu: f64, max_segments: usize) -> Result<BiasSignal> {
    let s = random_segments(rng, domain, nu, 0.0, max_segments)?;
    shift_to_end_at_zero(&s)
}

pub(crate) fn segment_parts(s: &BiasSignal) -> Option<(f64, &[f64], &[f64])> {
    match s.kind() {
        crate::dynamics::SignalKind::Segments { t0, durations, values } => Some((*t0, durations, values)),
        _ => None,
    }
}

fn shift_to_end_at_zero(s: &BiasSignal) -> Result<BiasSignal> {
    let (_, d, v) = segment_parts(s).expect("segments signal");
    let span: f64 = d.iter().sum();
    BiasSignal::segments(-span, d.to_vec(), v.to_vec(), s.domain())
}

/// Deliberate corruptions of a rate model, used to show each check can fail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    NegateK01,
    NegateK10,
    /// Multiply both rates by a factor.
    ScaleRates(f64),
}

pub struct FaultyRates<M> {
    pub inner: M,
    pub fault: Fault,
}

impl<M: RateModel> RateModel for FaultyRates<M> {
    fn rates(&self, v: f64) -> Result<RateSet> {
        let r = self.inner.rates(v)?;
        Ok(match self.fault {
            Fault::NegateK01 => RateSet::new(v, -r.k01, r.k10),
            Fault::NegateK10 => RateSet::new(v, r.k01, -r.k10),
            Fault::ScaleRates(f) => RateSet::new(v, f * r.k01, f * r.k10),
        })
    }
}

/// The same dynamics seen from the protonated state: `k01` and `k10` exchanged,
/// so the solution is `P^ĀB`.
pub struct Swapped<M>(pub M);

impl<M: RateModel> RateModel for Swapped<M> {
    fn rates(&self, v: f64) -> Result<RateSet> {
        let r = self.0.rates(v)?;
        Ok(RateSet::new(v, r.k10, r.k01))
    }
}
