use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::checks::*;
use super::{CheckReport, Verdict};
use crate::error::{DmsError, Result};
use crate::model::{contraction_rate, sensitivity, Contraction, DomainBounds, RateModel, Sensitivity};

/// Every check the suite knows, in report order.
pub const CHECK_NAMES: [&str; 9] = [
    "lemma1_positivity",
    "cor1_bounds",
    "lemma2_decay",
    "cor2_steady_state",
    "thm1_lipschitz",
    "thm2_convergence",
    "periodicity",
    "zoh_vs_rk",
    "dt_step_vs_rk",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub domain: DomainBounds,
    pub seed: u64,
    /// Subset of [`CHECK_NAMES`] to run; all when absent.
    pub checks: Option<Vec<String>>,
    pub n_signals: usize,
    pub n_pairs: usize,
    pub n_histories: usize,
    /// Weighting decay rate as a fraction of `ν`.
    pub weight_fraction: f64,
    /// Sample period for the discrete-time checks; `ts_nu_fraction/ν` when absent.
    pub ts: Option<f64>,
    pub ts_nu_fraction: f64,
    pub steady_grid_points: usize,
    pub horizon_multiple: f64,
    pub steady_tol: f64,
    pub rk_tol: f64,
    pub fading_tol: f64,
    pub periodicity: PeriodicityOptions,
    pub zoh_periods: f64,
    pub zoh_tol: f64,
    pub dt_step_cases: usize,
    pub dt_step_tol: f64,
    pub dt_step_rk_tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            domain: DomainBounds::new(-2.0, 2.0).expect("valid"),
            seed: 0,
            checks: None,
            n_signals: 100,
            n_pairs: 200,
            n_histories: 100,
            weight_fraction: 0.5,
            ts: None,
            ts_nu_fraction: 0.05,
            steady_grid_points: 51,
            horizon_multiple: 10.0,
            steady_tol: 1e-6,
            rk_tol: 1e-10,
            fading_tol: 1e-10,
            periodicity: PeriodicityOptions::default(),
            zoh_periods: 3.0,
            zoh_tol: 1e-6,
            dt_step_cases: 100,
            dt_step_tol: 1e-9,
            dt_step_rk_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub all_passed: bool,
    pub contraction: Contraction,
    pub sensitivity: Sensitivity,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the selected checks concurrently. A check that errors is reported as
/// a failure carrying the error.
pub fn run_suite<M: RateModel>(model: &M, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let names: Vec<&str> = match &cfg.checks {
        None => CHECK_NAMES.to_vec(),
        Some(list) => {
            for n in list {
                if !CHECK_NAMES.contains(&n.as_str()) {
                    return Err(DmsError::InvalidParameter { name: "checks", reason: format!("unknown check {n:?}") });
                }
            }
            CHECK_NAMES.iter().copied().filter(|c| list.iter().any(|n| n == c)).collect()
        }
    };
    let d = cfg.domain;
    let contraction = contraction_rate(d, model)?;
    let sens = sensitivity(d, model)?;
    let ts = cfg.ts.unwrap_or(cfg.ts_nu_fraction / contraction.nu);
    let checks: Vec<CheckReport> = names
        .par_iter()
        .map(|&name| {
            let r = match name {
                "lemma1_positivity" => check_lemma1_positivity(model, d, contraction.nu, cfg.n_signals, cfg.seed),
                "cor1_bounds" => check_cor1_bounds(model, d, contraction.nu, cfg.n_signals, cfg.seed),
                "lemma2_decay" => check_lemma2_decay(model, d, contraction, cfg.n_signals, cfg.seed),
                "cor2_steady_state" => check_cor2_steady_state(
                    model,
                    &d.grid(cfg.steady_grid_points),
                    cfg.horizon_multiple,
                    cfg.steady_tol,
                    cfg.rk_tol,
                ),
                "thm1_lipschitz" => check_thm1_lipschitz(
                    model,
                    d,
                    contraction,
                    &sens,
                    cfg.weight_fraction,
                    cfg.n_pairs,
                    cfg.seed,
                    cfg.fading_tol,
                    1.0,
                ),
                "thm2_convergence" => {
                    check_thm2_convergence(model, d, contraction, ts, cfg.weight_fraction, cfg.n_histories, cfg.seed)
                }
                "periodicity" => check_periodicity(model, &cfg.periodicity),
                "zoh_vs_rk" => check_zoh_vs_rk(model, &cfg.periodicity, cfg.zoh_periods, cfg.zoh_tol, cfg.rk_tol),
                "dt_step_vs_rk" => {
                    check_dt_step_vs_rk(model, d, cfg.dt_step_cases, cfg.seed, cfg.dt_step_tol, cfg.dt_step_rk_tol)
                }
                _ => unreachable!("validated above"),
            };
            r.unwrap_or_else(|e| CheckReport {
                check_name: name.to_string(),
                verdict: Verdict::Fail,
                worst_case: format!("error: {e}"),
                margin: f64::NEG_INFINITY,
                seed: cfg.seed,
                config: json!(null),
            })
        })
        .collect();
    let all_passed = checks.iter().all(CheckReport::passed);
    Ok(SuiteReport { all_passed, contraction, sensitivity: sens, checks })
}
