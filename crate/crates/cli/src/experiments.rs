use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dms_core::dynamics::{
    dt_filter, propagate, propagate_with, BiasSignal, FadingOptions, Padding, PropagateOptions, SwitchState, Trajectory,
};
use dms_core::io::{fmt_float, CsvTable};
use dms_core::model::{contraction_rate, RateModel, RateSet, RateTable};
use dms_core::transport::{bridge_populations, build_current_table, state_current_result};
use dms_core::verify::{run_suite, SuiteConfig, SuiteReport};
use dms_core::{DomainBounds, MolecularState, SwitchModel};

use crate::config::Common;
use crate::signal::{generate_signal, Shape, SignalSpec};

/// One file produced by a run.
pub enum Artifact {
    Csv { name: String, table: CsvTable },
    Json { name: String, text: String },
}

impl Artifact {
    pub fn name(&self) -> &str {
        match self {
            Artifact::Csv { name, .. } | Artifact::Json { name, .. } => name,
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Artifact::Csv { table, .. } => table.rows.len(),
            Artifact::Json { .. } => 1,
        }
    }
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// False when a verification run found a failing check.
    pub success: bool,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Outcome { artifacts, success: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub v_min: f64,
    pub v_max: f64,
    pub points: usize,
    /// Explicit biases; overrides the uniform grid when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_grid: Option<Vec<f64>>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { v_min: -2.5, v_max: 2.5, points: 251, v_grid: None }
    }
}

impl Grid {
    fn values(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.v_grid {
            if v.is_empty() || v.windows(2).any(|w| !(w[1] > w[0])) {
                bail!("grid.v_grid must be non-empty and strictly ascending");
            }
            return Ok(v.clone());
        }
        if self.points < 1 || (self.points == 1) != (self.v_min == self.v_max) {
            bail!("grid.points must be >= 2 for a non-degenerate range");
        }
        Ok(DomainBounds::new(self.v_min, self.v_max).context("grid")?.grid(self.points))
    }
}

/// Physical rates, either evaluated directly or with bridge populations
/// splined from a bias grid.
pub enum Model {
    Direct(SwitchModel),
    Table(RateTable),
}

impl Model {
    fn new(common: &Common, table_nodes: usize, domain: DomainBounds) -> Result<Self> {
        let direct = SwitchModel::new(common.params.clone(), common.quadrature.clone())?;
        if table_nodes == 0 || domain.width() == 0.0 {
            return Ok(Model::Direct(direct));
        }
        Ok(Model::Table(RateTable::build(&direct, domain, table_nodes)?))
    }
}

impl RateModel for Model {
    fn rates(&self, v: f64) -> dms_core::Result<RateSet> {
        match self {
            Model::Direct(m) => m.rates(v),
            Model::Table(m) => m.rates(v),
        }
    }
}

fn state_currents(v: f64, common: &Common) -> Result<(f64, f64)> {
    let ab = state_current_result(v, MolecularState::NonProtonated, &common.params, &common.quadrature)?;
    let abbar = state_current_result(v, MolecularState::Protonated, &common.params, &common.quadrature)?;
    Ok((ab.value, abbar.value))
}

// ---------------------------------------------------------------- iv-sweep

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IvSweep {
    pub grid: Grid,
}

pub fn iv_sweep(common: &Common, cfg: &IvSweep) -> Result<Outcome> {
    let grid = cfg.grid.values()?;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&v| {
            let ab = state_current_result(v, MolecularState::NonProtonated, &common.params, &common.quadrature)?;
            let abbar = state_current_result(v, MolecularState::Protonated, &common.params, &common.quadrature)?;
            Ok(vec![v, ab.value, abbar.value, ab.stderr, abbar.stderr])
        })
        .collect::<Result<_>>()?;
    let mut table = CsvTable::new(["v", "I_AB", "I_ABbar", "stderr_AB", "stderr_ABbar"]);
    table.rows = rows;
    Ok(Outcome::ok(vec![Artifact::Csv { name: "iv_sweep.csv".into(), table }]))
}

// ---------------------------------------------------------------- bridge-pop

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgePop {
    pub grid: Grid,
}

impl Default for BridgePop {
    fn default() -> Self {
        BridgePop { grid: Grid { v_min: -2.0, v_max: 2.0, points: 401, v_grid: None } }
    }
}

pub fn bridge_pop(common: &Common, cfg: &BridgePop) -> Result<Outcome> {
    let grid = cfg.grid.values()?;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&v| {
            let b = bridge_populations(v, &common.params, &common.quadrature)?;
            Ok(vec![v, b.b_ab, b.b_abbar])
        })
        .collect::<Result<_>>()?;
    let mut table = CsvTable::new(["v", "b_AB", "b_ABbar"]);
    table.rows = rows;
    Ok(Outcome::ok(vec![Artifact::Csv { name: "bridge_pop.csv".into(), table }]))
}

// ---------------------------------------------------------------- steady-state

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyState {
    pub grid: Grid,
    /// Adds the `I_star` column.
    pub currents: bool,
}

impl Default for SteadyState {
    fn default() -> Self {
        SteadyState { grid: Grid::default(), currents: true }
    }
}

pub fn steady_state(common: &Common, cfg: &SteadyState) -> Result<Outcome> {
    let grid = cfg.grid.values()?;
    let model = SwitchModel::new(common.params.clone(), common.quadrature.clone())?;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&v| {
            let p = model.rates(v)?.steady_state()?;
            let mut row = vec![v, p, 1.0 - p];
            if cfg.currents {
                let (ab, abbar) = state_currents(v, common)?;
                row.push(ab * p + abbar * (1.0 - p));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut header = vec!["v", "P_star_AB", "P_star_ABbar"];
    if cfg.currents {
        header.push("I_star");
    }
    let mut table = CsvTable::new(header);
    table.rows = rows;
    Ok(Outcome::ok(vec![Artifact::Csv { name: "steady_state.csv".into(), table }]))
}

// ---------------------------------------------------------------- step-response

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepResponse {
    pub biases: Vec<f64>,
    pub p0: f64,
    /// Shared end time; `10/ν` over the listed biases when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub output_points: usize,
    pub currents: bool,
}

impl Default for StepResponse {
    fn default() -> Self {
        StepResponse {
            biases: vec![-2.0, -0.8, -0.6, -0.55, 0.5, 1.0, 1.65, 2.0],
            p0: 0.5,
            t_end: None,
            output_points: 1000,
            currents: true,
        }
    }
}

pub fn step_response(common: &Common, cfg: &StepResponse) -> Result<Outcome> {
    if cfg.biases.is_empty() || cfg.output_points < 1 {
        bail!("step-response needs at least one bias and one output point");
    }
    let model = SwitchModel::new(common.params.clone(), common.quadrature.clone())?;
    let rates: Vec<RateSet> = cfg.biases.par_iter().map(|&v| model.rates(v)).collect::<dms_core::Result<_>>()?;
    let nu = rates.iter().map(|r| r.k).fold(f64::INFINITY, f64::min);
    let t_end = cfg.t_end.unwrap_or(10.0 / nu);
    let artifacts = cfg
        .biases
        .par_iter()
        .map(|&v| {
            let signal = BiasSignal::constant(v)?;
            let mut tr = propagate(SwitchState::new(0.0, cfg.p0)?, &signal, t_end, Some(t_end / cfg.output_points as f64), &model)?;
            if cfg.currents {
                let (ab, abbar) = state_currents(v, common)?;
                tr.i_avg = Some(tr.p_ab.iter().map(|p| ab * p + abbar * (1.0 - p)).collect());
            }
            let mut table = tr.to_table();
            table.comments.push(format!("v={} t_end={}", fmt_float(v), fmt_float(t_end)));
            Ok(Artifact::Csv { name: format!("step_v{}.csv", fmt_float(v)), table })
        })
        .collect::<Result<_>>()?;
    Ok(Outcome::ok(artifacts))
}

// ---------------------------------------------------------------- sine-response

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SineResponse {
    pub offset: f64,
    pub amplitude: f64,
    pub frequencies: Vec<f64>,
    pub p0: f64,
    /// Transient length in units of `1/ν` over the signal's range.
    pub transient_multiple: f64,
    /// Input periods recorded densely after the transient.
    pub periods: f64,
    /// Overrides `transient + periods/f`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Uniform samples over the whole run.
    pub output_points: usize,
    /// Extra samples per period over the final `periods` periods.
    pub samples_per_period: usize,
    pub currents: bool,
    /// Bias nodes of the current table behind `I_avg`.
    pub current_table_nodes: usize,
    /// Bias nodes of the bridge-population spline; 0 evaluates rates directly.
    pub rate_table_nodes: usize,
    pub propagate: PropagateOptions,
}

impl Default for SineResponse {
    fn default() -> Self {
        SineResponse {
            offset: 1.0,
            amplitude: 0.5,
            frequencies: vec![0.01, 0.05, 0.1, 0.2],
            p0: 0.0,
            transient_multiple: 5.0,
            periods: 3.0,
            t_end: None,
            output_points: 2001,
            samples_per_period: 100,
            currents: true,
            current_table_nodes: 201,
            rate_table_nodes: 401,
            propagate: PropagateOptions::default(),
        }
    }
}

pub fn sine_response(common: &Common, cfg: &SineResponse) -> Result<Outcome> {
    if cfg.frequencies.is_empty() || cfg.output_points < 2 {
        bail!("sine-response needs at least one frequency and two output points");
    }
    let probe = BiasSignal::sinusoid(cfg.offset, cfg.amplitude, cfg.frequencies[0])?;
    let domain = probe.domain();
    let model = Model::new(common, cfg.rate_table_nodes, domain)?;
    let nu = contraction_rate(domain, &model)?.nu;
    let currents = if cfg.currents {
        let nodes = if domain.width() == 0.0 { vec![domain.lo() - 1e-9, domain.hi() + 1e-9] } else { domain.grid(cfg.current_table_nodes.max(2)) };
        Some(build_current_table(&nodes, &common.params, &common.quadrature)?)
    } else {
        None
    };
    let mut artifacts = Vec::new();
    for &f in &cfg.frequencies {
        let signal = BiasSignal::sinusoid(cfg.offset, cfg.amplitude, f)?;
        let t_end = cfg.t_end.unwrap_or(cfg.transient_multiple / nu + cfg.periods / f);
        let mut times: Vec<f64> = (0..cfg.output_points).map(|i| t_end * i as f64 / (cfg.output_points - 1) as f64).collect();
        let dense = (cfg.periods * cfg.samples_per_period as f64).round() as usize;
        let t_tail = (t_end - cfg.periods / f).max(0.0);
        times.extend((0..dense).map(|i| t_tail + (t_end - t_tail) * i as f64 / dense as f64));
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut tr: Trajectory = propagate_with(SwitchState::new(0.0, cfg.p0)?, &signal, &times, &cfg.propagate, &model)?;
        if let Some(table) = &currents {
            tr.attach_currents(table)?;
        }
        let mut table = tr.to_table();
        table.comments.push(format!("f={} nu={} t_end={}", fmt_float(f), fmt_float(nu), fmt_float(t_end)));
        artifacts.push(Artifact::Csv { name: format!("sine_f{}.csv", fmt_float(f)), table });
    }
    Ok(Outcome::ok(artifacts))
}

// ---------------------------------------------------------------- dt-filter

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DtFilter {
    pub signal: SignalSpec,
    /// Inclusive output indices; every index from the first sample to one
    /// past the last when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_range: Option<[i64; 2]>,
    pub fading: FadingOptions,
    pub rate_table_nodes: usize,
}

impl Default for DtFilter {
    fn default() -> Self {
        DtFilter {
            signal: SignalSpec {
                shape: Shape::RandomPiecewise { t0: 0.0, ts: 100.0, n: 300, lo: 0.5, hi: 1.5, seed: 1 },
                domain: None,
            },
            k_range: None,
            fading: FadingOptions { padding: Padding::HoldOldest, ..Default::default() },
            rate_table_nodes: 0,
        }
    }
}

pub fn dt_filter_run(common: &Common, cfg: &DtFilter, base: &Path) -> Result<Outcome> {
    let signal = generate_signal(&cfg.signal, base)?;
    let (t0, ts, samples) = signal.samples().context("dt-filter needs a piecewise-constant signal")?;
    let k0 = (t0 / ts).round() as i64;
    let [lo, hi] = cfg.k_range.unwrap_or([k0, k0 + samples.len() as i64]);
    let model = Model::new(common, cfg.rate_table_nodes, signal.domain())?;
    let out = dt_filter(&signal, lo..=hi, &model, &cfg.fading)?;
    Ok(Outcome::ok(vec![Artifact::Csv { name: "dt_filter.csv".into(), table: out.to_table() }]))
}

// ---------------------------------------------------------------- verify

pub fn verify(common: &Common, cfg: &SuiteConfig) -> Result<Outcome> {
    let model = SwitchModel::new(common.params.clone(), common.quadrature.clone())?;
    let report: SuiteReport = run_suite(&model, cfg)?;
    for c in &report.checks {
        println!("{}", c.summary());
    }
    Ok(Outcome {
        success: report.all_passed,
        artifacts: vec![Artifact::Json { name: "verify_report.json".into(), text: report.to_json() }],
    })
}
