//! Numerical integration engines used by the transport integrals.
//!
//! * [`integrate_line`]: adaptive Gauss–Kronrod on a window around a peak,
//!   with an optional analytic correction for Lorentzian tails.
//! * [`gauss_expectation`]: expectation over a normal variable, either by
//!   Gauss–Hermite quadrature or by seeded Monte Carlo.
//! * [`seeded_normal_stream`]: the reproducible normal deviates behind the
//!   Monte Carlo route.

mod adaptive;
mod hermite;
mod normal;

use serde::{Deserialize, Serialize};

use crate::error::{DmsError, Result};

pub use adaptive::{integrate_interval, integrate_line, integrate_line_with, LorentzianTails};
pub use hermite::GaussHermite;
pub use normal::{seeded_normal_stream, tagged_normal_stream, uniform_to_normal};

/// How Gaussian expectations are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    AdaptiveDeterministic,
    MonteCarlo,
}

/// Integration settings shared by every transport quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Half-width of the truncated energy window, eV.
    pub window_halfwidth: f64,
    pub gh_nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            method: Method::AdaptiveDeterministic,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            window_halfwidth: 10.0,
            gh_nodes: 64,
            mc_samples: 500,
            seed: 0,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        QuadratureSpec {
            method: Method::MonteCarlo,
            mc_samples: samples,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(DmsError::InvalidParameter { name, reason });
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return bad("abs_tol", format!("{} must be > 0", self.abs_tol));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad("rel_tol", format!("{} must be > 0", self.rel_tol));
        }
        if !(self.window_halfwidth > 0.0 && self.window_halfwidth.is_finite()) {
            return bad("window_halfwidth", format!("{} must be > 0", self.window_halfwidth));
        }
        if self.gh_nodes < 2 {
            return bad("gh_nodes", format!("{} must be >= 2", self.gh_nodes));
        }
        if self.mc_samples < 1 {
            return bad("mc_samples", "must be >= 1".into());
        }
        if self.max_subdivisions < 1 {
            return bad("max_subdivisions", "must be >= 1".into());
        }
        Ok(())
    }
}

/// Outcome of one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// Monte Carlo standard error; zero for deterministic rules.
    pub stderr: f64,
}

/// Expectation of `g(E')` for `E' ~ Normal(mean, sd²)`.
///
/// Deterministic specs use Gauss–Hermite with `spec.gh_nodes` nodes; Monte
/// Carlo specs average `spec.mc_samples` draws from the stream `(spec.seed, tag)`.
pub fn gauss_expectation<G>(g: G, mean: f64, sd: f64, spec: &QuadratureSpec, tag: u64) -> Result<IntegralResult>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    expectation_with_errors(|x| g(x).map(|v| (v, 0.0)), mean, sd, spec, tag)
}

/// As [`gauss_expectation`], for integrands that carry their own error estimate.
pub(crate) fn expectation_with_errors<G>(
    g: G,
    mean: f64,
    sd: f64,
    spec: &QuadratureSpec,
    tag: u64,
) -> Result<IntegralResult>
where
    G: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    spec.validate()?;
    if !(sd > 0.0 && sd.is_finite()) || !mean.is_finite() {
        return Err(DmsError::InvalidParameter {
            name: "sd",
            reason: format!("normal(mean={mean}, sd={sd}) needs finite mean and sd > 0"),
        });
    }
    let eval = |x: f64| -> Result<(f64, f64)> {
        let (v, e) = g(x)?;
        if v.is_finite() {
            Ok((v, e))
        } else {
            Err(DmsError::NonFiniteNode { node: x })
        }
    };
    match spec.method {
        Method::AdaptiveDeterministic => {
            let rule = GaussHermite::new(spec.gh_nodes);
            let scale = std::f64::consts::SQRT_2 * sd;
            let norm = std::f64::consts::PI.sqrt();
            let mut value = 0.0;
            let mut error = 0.0;
            for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                let (v, e) = eval(mean + scale * x)?;
                value += w * v;
                error += w * e;
            }
            Ok(IntegralResult {
                value: value / norm,
                error_estimate: error / norm,
                evaluations: rule.len(),
                stderr: 0.0,
            })
        }
        Method::MonteCarlo => {
            let n = spec.mc_samples;
            let draws = tagged_normal_stream(spec.seed, tag, n);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut err = 0.0;
            let mut values = Vec::with_capacity(n);
            for z in draws {
                let (v, e) = eval(mean + sd * z)?;
                values.push(v);
                sum += v;
                err += e;
            }
            let m = sum / n as f64;
            for v in &values {
                sum_sq += (v - m) * (v - m);
            }
            let stderr = if n > 1 {
                (sum_sq / (n - 1) as f64).sqrt() / (n as f64).sqrt()
            } else {
                0.0
            };
            Ok(IntegralResult {
                value: m,
                error_estimate: stderr + err / n as f64,
                evaluations: n,
                stderr,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_expectation_is_exact_for_both_methods() {
        let det = gauss_expectation(|_| Ok(1.0), 0.66, 0.01, &QuadratureSpec::default(), 0).unwrap();
        assert!((det.value - 1.0).abs() < 1e-14);
        let mc = gauss_expectation(|_| Ok(1.0), 0.66, 0.01, &QuadratureSpec::monte_carlo(500, 3), 0).unwrap();
        assert_eq!(mc.value, 1.0);
        assert_eq!(mc.stderr, 0.0);
    }

    #[test]
    fn first_and_second_moments() {
        let (mean, sd) = (0.66, 0.01);
        for n in [2, 3, 10, 64] {
            let spec = QuadratureSpec { gh_nodes: n, ..Default::default() };
            let m1 = gauss_expectation(Ok, mean, sd, &spec, 0).unwrap();
            assert!((m1.value - mean).abs() < 1e-14, "n={n}");
            let m2 = gauss_expectation(|x| Ok((x - mean) * (x - mean)), mean, sd, &spec, 0).unwrap();
            assert!((m2.value - sd * sd).abs() < 1e-16, "n={n}: {}", m2.value);
        }
        let mc = gauss_expectation(|x| Ok((x - mean) * (x - mean)), mean, sd, &QuadratureSpec::monte_carlo(500, 11), 0)
            .unwrap();
        assert!((mc.value - sd * sd).abs() <= 3.0 * mc.stderr, "{mc:?}");
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let err = gauss_expectation(|x| Ok(if x > 0.0 { f64::NAN } else { 0.0 }), 0.0, 1.0, &QuadratureSpec::default(), 0)
            .unwrap_err();
        match err {
            DmsError::NonFiniteNode { node } => assert!(node > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(QuadratureSpec { gh_nodes: 1, ..Default::default() }.validate().is_err());
        assert!(QuadratureSpec { mc_samples: 0, ..Default::default() }.validate().is_err());
        assert!(QuadratureSpec { abs_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(QuadratureSpec { window_halfwidth: -1.0, ..Default::default() }.validate().is_err());
        assert!(gauss_expectation(|_| Ok(1.0), 0.0, 0.0, &QuadratureSpec::default(), 0).is_err());
    }

    #[test]
    fn spec_json_defaults_and_unknown_keys() {
        let s: QuadratureSpec = serde_json::from_str(r#"{"method": "monte-carlo", "seed": 7}"#).unwrap();
        assert_eq!(s.method, Method::MonteCarlo);
        assert_eq!(s.mc_samples, 500);
        assert_eq!(s.gh_nodes, 64);
        assert!(serde_json::from_str::<QuadratureSpec>(r#"{"gh_node": 3}"#).is_err());
    }
}
