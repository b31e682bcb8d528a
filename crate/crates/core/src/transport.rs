//! Bias-dependent transport quantities: bridge populations, state currents,
//! the probability-weighted junction current, and cached I–V tables.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DmsError, Result};
use crate::interp::Pchip;
use crate::io::{fmt_float, parse_float};
use crate::model::params::{MolecularState, SwitchParams};
use crate::model::physics::{fermi_kt, lorentzian, Lead};
use crate::quadrature::{
    expectation_with_errors, integrate_line_with, IntegralResult, LorentzianTails, Method, QuadratureSpec,
};

/// Average bridge occupation of both states at one bias.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgePopulation {
    pub v: f64,
    pub b_ab: f64,
    pub b_abbar: f64,
}

/// `⟨b_n⟩(v)` of one state, in `[0, 1]`.
pub fn bridge_population(v: f64, state: MolecularState, p: &SwitchParams, spec: &QuadratureSpec) -> Result<f64> {
    Ok(bridge_population_result(v, state, p, spec)?.value)
}

/// [`bridge_population`] with its quadrature error estimate.
pub fn bridge_population_result(
    v: f64,
    state: MolecularState,
    p: &SwitchParams,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    if !v.is_finite() {
        return Err(DmsError::NonFinite("bridge_population"));
    }
    p.validate()?;
    let kt = p.kt();
    let width = p.level_width(state);
    let wl = p.gamma_l(state) / width;
    let wr = p.gamma_r(state) / width;
    let center = p.shifted_level(p.level(state), v);
    let integrand = |e: f64| {
        (wl * fermi_kt(e, v, Lead::Plus, kt) + wr * fermi_kt(e, v, Lead::Minus, kt)) * lorentzian(e, center, width)
    };
    // both occupations saturate at 1 far below the window and at 0 far above
    let tails = LorentzianTails { center, width, below: 1.0, above: 0.0 };
    let breaks = [center, -0.5 * v, 0.5 * v, center - width, center + width];
    let mut r = integrate_line_with(integrand, center, spec, &breaks, Some(tails))?;
    let slack = spec.abs_tol.max(r.error_estimate);
    if r.value < -slack || r.value > 1.0 + slack {
        return Err(DmsError::PopulationOutOfRange { value: r.value });
    }
    r.value = r.value.clamp(0.0, 1.0);
    Ok(r)
}

pub fn bridge_populations(v: f64, p: &SwitchParams, spec: &QuadratureSpec) -> Result<BridgePopulation> {
    Ok(BridgePopulation {
        v,
        b_ab: bridge_population(v, MolecularState::NonProtonated, p, spec)?,
        b_abbar: bridge_population(v, MolecularState::Protonated, p, spec)?,
    })
}

// SplitMix64 finalizer; turns (bias, state) into a Monte Carlo stream id.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Monte Carlo stream tag of a state current at bias `v`.
///
/// Depends only on the bias and the state, so parallel sweeps draw the same
/// samples regardless of evaluation order.
pub fn current_tag(v: f64, state: MolecularState) -> u64 {
    let s = match state {
        MolecularState::NonProtonated => 0,
        MolecularState::Protonated => 1,
    };
    mix(v.to_bits() ^ mix(s))
}

/// Inner energy integral `∫ D_{E'}(E)(v)·(f₋ − f₊) dE` for a level at `e_level`.
pub fn transmission_window(
    v: f64,
    e_level: f64,
    state: MolecularState,
    p: &SwitchParams,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let kt = p.kt();
    let width = p.level_width(state);
    let center = p.shifted_level(e_level, v);
    let integrand =
        |e: f64| lorentzian(e, center, width) * (fermi_kt(e, v, Lead::Minus, kt) - fermi_kt(e, v, Lead::Plus, kt));
    let breaks = [center, -0.5 * v, 0.5 * v, center - width, center + width];
    integrate_line_with(integrand, center, spec, &breaks, None)
}

/// State current `I(v)` in A, with error estimate and Monte Carlo standard error.
pub fn state_current_result(
    v: f64,
    state: MolecularState,
    p: &SwitchParams,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    if !v.is_finite() {
        return Err(DmsError::NonFinite("state_current"));
    }
    p.validate()?;
    let inner = |e_level: f64| {
        let r = transmission_window(v, e_level, state, p, spec)?;
        Ok((r.value, r.error_estimate))
    };
    let tag = current_tag(v, state);
    let r = expectation_with_errors(inner, p.level(state), p.level_spread(state), spec, tag)?;
    let scale = p.current_prefactor() * p.coupling(state);
    Ok(IntegralResult {
        value: scale * r.value,
        error_estimate: scale * r.error_estimate,
        evaluations: r.evaluations,
        stderr: scale * r.stderr,
    })
}

pub fn state_current(v: f64, state: MolecularState, p: &SwitchParams, spec: &QuadratureSpec) -> Result<f64> {
    Ok(state_current_result(v, state, p, spec)?.value)
}

/// Junction current `I^AB·P + I^ĀB·(1 − P)` in A.
pub fn average_current(v: f64, p_ab: f64, p: &SwitchParams, spec: &QuadratureSpec) -> Result<f64> {
    check_probability(p_ab)?;
    let i_ab = state_current(v, MolecularState::NonProtonated, p, spec)?;
    let i_abbar = state_current(v, MolecularState::Protonated, p, spec)?;
    Ok(mix_currents(i_ab, i_abbar, p_ab))
}

pub(crate) fn check_probability(p_ab: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p_ab) {
        Ok(p_ab)
    } else {
        Err(DmsError::ProbabilityOutOfRange(p_ab))
    }
}

fn mix_currents(i_ab: f64, i_abbar: f64, p_ab: f64) -> f64 {
    i_ab * p_ab + i_abbar * (1.0 - p_ab)
}

/// State currents cached on a bias grid with monotone cubic interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentTable {
    ab: Pchip,
    abbar: Pchip,
    build_spec: QuadratureSpec,
}

impl CurrentTable {
    pub fn from_values(v_grid: Vec<f64>, i_ab: Vec<f64>, i_abbar: Vec<f64>, build_spec: QuadratureSpec) -> Result<Self> {
        Ok(CurrentTable {
            ab: Pchip::new(v_grid.clone(), i_ab)?,
            abbar: Pchip::new(v_grid, i_abbar)?,
            build_spec,
        })
    }

    pub fn v_grid(&self) -> &[f64] {
        self.ab.nodes()
    }

    pub fn i_ab(&self) -> &[f64] {
        self.ab.values()
    }

    pub fn i_abbar(&self) -> &[f64] {
        self.abbar.values()
    }

    pub fn build_spec(&self) -> &QuadratureSpec {
        &self.build_spec
    }

    /// Interpolated `(I^AB, I^ĀB)`; no extrapolation beyond the grid.
    pub fn lookup(&self, v: f64) -> Result<(f64, f64)> {
        Ok((self.ab.eval(v)?, self.abbar.eval(v)?))
    }

    pub fn average_current(&self, v: f64, p_ab: f64) -> Result<f64> {
        check_probability(p_ab)?;
        let (a, b) = self.lookup(v)?;
        Ok(mix_currents(a, b, p_ab))
    }

    /// CSV text: a `# build_spec=` comment, the header `v,I_AB,I_ABbar`, then one row per node.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# build_spec={}\nv,I_AB,I_ABbar\n",
            serde_json::to_string(&self.build_spec).expect("spec serializes")
        );
        for ((v, a), b) in self.v_grid().iter().zip(self.i_ab()).zip(self.i_abbar()) {
            out.push_str(&format!("{},{},{}\n", fmt_float(*v), fmt_float(*a), fmt_float(*b)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut spec = None;
        let mut header_seen = false;
        let (mut v, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(json) = rest.trim().strip_prefix("build_spec=") {
                    spec = Some(serde_json::from_str(json)?);
                }
                continue;
            }
            if !header_seen {
                if line != "v,I_AB,I_ABbar" {
                    return Err(DmsError::Parse(format!("unexpected header `{line}`")));
                }
                header_seen = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(DmsError::Parse(format!("expected 3 columns in `{line}`")));
            }
            v.push(parse_float(cols[0])?);
            a.push(parse_float(cols[1])?);
            b.push(parse_float(cols[2])?);
        }
        let spec = spec.ok_or_else(|| DmsError::Parse("missing `# build_spec=` line".into()))?;
        CurrentTable::from_values(v, a, b, spec)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Evaluates both state currents at every node, in parallel.
pub fn build_current_table(v_grid: &[f64], p: &SwitchParams, spec: &QuadratureSpec) -> Result<CurrentTable> {
    let rows: Vec<(f64, f64)> = v_grid
        .par_iter()
        .map(|&v| {
            Ok((
                state_current(v, MolecularState::NonProtonated, p, spec)?,
                state_current(v, MolecularState::Protonated, p, spec)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (i_ab, i_abbar) = rows.into_iter().unzip();
    CurrentTable::from_values(v_grid.to_vec(), i_ab, i_abbar, spec.clone())
}

/// Largest relative deviation of the table from direct evaluation at the
/// midpoints between nodes. The denominator is floored at `floor·max|I|` so
/// nodes near a zero crossing do not dominate.
pub fn table_midpoint_error(table: &CurrentTable, p: &SwitchParams, floor: f64) -> Result<f64> {
    let grid = table.v_grid();
    let scale_ab = table.i_ab().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let scale_abbar = table.i_abbar().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let spec = table.build_spec();
    let worst = grid
        .par_windows(2)
        .map(|w| {
            let v = 0.5 * (w[0] + w[1]);
            let (a, b) = table.lookup(v)?;
            let da = state_current(v, MolecularState::NonProtonated, p, spec)?;
            let db = state_current(v, MolecularState::Protonated, p, spec)?;
            let ea = (a - da).abs() / da.abs().max(floor * scale_ab).max(f64::MIN_POSITIVE);
            let eb = (b - db).abs() / db.abs().max(floor * scale_abbar).max(f64::MIN_POSITIVE);
            Ok(ea.max(eb))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Spec with Monte Carlo replaced by the deterministic route.
pub fn deterministic(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        method: Method::AdaptiveDeterministic,
        ..spec.clone()
    }
}
