//! Composite switching rates and the bound constants derived from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::DomainBounds;
use super::params::{MolecularState, SwitchParams};
use super::physics::{marcus_rate_unchecked, Channel, Direction};
use crate::error::{DmsError, Result};
use crate::interp::NaturalSpline;
use crate::quadrature::QuadratureSpec;
use crate::transport::bridge_population;

/// Smallest contraction rate accepted before bounds are declared degenerate, 1/s.
pub const CONTRACTION_GUARD: f64 = 1e-12;

/// Switching rates at one bias, 1/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub v: f64,
    pub k01: f64,
    pub k10: f64,
    pub a: f64,
    pub k: f64,
}

impl RateSet {
    pub fn new(v: f64, k01: f64, k10: f64) -> Self {
        let k = k01 + k10;
        RateSet { v, k01, k10, a: -k, k }
    }

    /// Sign and consistency invariants. Not enforced by [`RateSet::new`], so
    /// deliberately broken rate models can still be expressed.
    pub fn check(&self) -> Result<()> {
        let finite = [self.v, self.k01, self.k10, self.a, self.k].iter().all(|x| x.is_finite());
        if !finite {
            return Err(DmsError::NonFinite("rate set"));
        }
        if self.k01 < 0.0 || self.k10 < 0.0 {
            return Err(DmsError::InvalidParameter {
                name: "rates",
                reason: format!("negative rate at v = {}: k01 = {}, k10 = {}", self.v, self.k01, self.k10),
            });
        }
        if self.a != -self.k || self.k != self.k01 + self.k10 {
            return Err(DmsError::InvalidParameter {
                name: "rates",
                reason: "A must equal -(k01 + k10)".into(),
            });
        }
        Ok(())
    }

    /// Steady-state probability `k01/K`.
    pub fn steady_state(&self) -> Result<f64> {
        if !(self.k > CONTRACTION_GUARD) {
            return Err(DmsError::DegenerateContraction { k: self.k, guard: CONTRACTION_GUARD });
        }
        Ok(self.k01 / self.k)
    }
}

/// Anything that maps a bias to switching rates.
pub trait RateModel: Sync {
    fn rates(&self, v: f64) -> Result<RateSet>;
}

impl<M: RateModel + ?Sized> RateModel for &M {
    fn rates(&self, v: f64) -> Result<RateSet> {
        (**self).rates(v)
    }
}

/// Rate model backed by a closure; used for synthetic and fault-injected rates.
pub struct FnRates<F>(pub F);

impl<F: Fn(f64) -> Result<RateSet> + Sync> RateModel for FnRates<F> {
    fn rates(&self, v: f64) -> Result<RateSet> {
        (self.0)(v)
    }
}

/// Bias-independent rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantRates {
    pub k01: f64,
    pub k10: f64,
}

impl RateModel for ConstantRates {
    fn rates(&self, v: f64) -> Result<RateSet> {
        Ok(RateSet::new(v, self.k01, self.k10))
    }
}

/// Rates from Marcus theory weighted by the bridge populations.
pub fn rates_from_populations(v: f64, b_ab: f64, b_abbar: f64, p: &SwitchParams) -> RateSet {
    let r = |d, c| marcus_rate_unchecked(v, d, c, p);
    let k01 = (1.0 - b_ab) * r(Direction::Forward, Channel::One) + b_ab * r(Direction::Forward, Channel::Zero);
    let k10 = (1.0 - b_abbar) * r(Direction::Backward, Channel::One) + b_abbar * r(Direction::Backward, Channel::Zero);
    RateSet::new(v, k01, k10)
}

/// `(k01, k10, A, K)` at bias `v`, with the bridge populations computed by quadrature.
pub fn rate_set(v: f64, p: &SwitchParams, q: &QuadratureSpec) -> Result<RateSet> {
    if !v.is_finite() {
        return Err(DmsError::NonFinite("rate_set"));
    }
    let b_ab = bridge_population(v, MolecularState::NonProtonated, p, q)?;
    let b_abbar = bridge_population(v, MolecularState::Protonated, p, q)?;
    Ok(rates_from_populations(v, b_ab, b_abbar, p))
}

/// The physical model, evaluated directly at every call.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SwitchModel {
    pub params: SwitchParams,
    pub spec: QuadratureSpec,
}

impl SwitchModel {
    pub fn new(params: SwitchParams, spec: QuadratureSpec) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        Ok(SwitchModel { params, spec })
    }

    pub fn table1() -> Self {
        SwitchModel::default()
    }
}

impl RateModel for SwitchModel {
    fn rates(&self, v: f64) -> Result<RateSet> {
        rate_set(v, &self.params, &self.spec)
    }
}

/// Rates with the bridge populations interpolated from a fine bias grid.
///
/// The Marcus factors are still evaluated exactly. Used for long
/// trajectories where direct quadrature at every substep would dominate.
#[derive(Clone, Debug)]
pub struct RateTable {
    params: SwitchParams,
    domain: DomainBounds,
    b_ab: NaturalSpline,
    b_abbar: NaturalSpline,
}

impl RateTable {
    pub fn build(model: &SwitchModel, domain: DomainBounds, nodes: usize) -> Result<Self> {
        if nodes < 2 || domain.width() <= 0.0 {
            return Err(DmsError::InvalidParameter {
                name: "rate table",
                reason: "needs a non-degenerate domain and at least 2 nodes".into(),
            });
        }
        let grid = domain.grid(nodes);
        let pops: Vec<(f64, f64)> = grid
            .par_iter()
            .map(|&v| {
                Ok((
                    bridge_population(v, MolecularState::NonProtonated, &model.params, &model.spec)?,
                    bridge_population(v, MolecularState::Protonated, &model.params, &model.spec)?,
                ))
            })
            .collect::<Result<_>>()?;
        let (ab, abbar): (Vec<f64>, Vec<f64>) = pops.into_iter().unzip();
        Ok(RateTable {
            params: model.params.clone(),
            domain,
            b_ab: NaturalSpline::new(grid.clone(), ab)?,
            b_abbar: NaturalSpline::new(grid, abbar)?,
        })
    }

    pub fn domain(&self) -> DomainBounds {
        self.domain
    }
}

impl RateModel for RateTable {
    fn rates(&self, v: f64) -> Result<RateSet> {
        let b_ab = self.b_ab.eval(v)?.clamp(0.0, 1.0);
        let b_abbar = self.b_abbar.eval(v)?.clamp(0.0, 1.0);
        Ok(rates_from_populations(v, b_ab, b_abbar, &self.params))
    }
}

/// Minimum of `K` over a domain and where it is attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub nu: f64,
    pub argmin: f64,
}

/// Default grid size for extremal searches over a domain.
pub const SEARCH_GRID: usize = 2001;

fn golden_min<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..80 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Grid search with golden-section refinement of the best bracket.
pub(crate) fn minimize_on<F>(f: F, domain: DomainBounds, n: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if domain.width() == 0.0 {
        let v = domain.lo();
        return Ok((v, f(v)?));
    }
    let grid = domain.grid(n.max(3));
    let values: Vec<f64> = grid.par_iter().map(|&v| f(v)).collect::<Result<_>>()?;
    let (i, &best) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (x, fx) = golden_min(&f, lo, hi)?;
    Ok(if fx < best { (x, fx) } else { (grid[i], best) })
}

/// `ν = min_D K(v)` for an arbitrary rate model.
pub fn contraction_rate<M: RateModel>(domain: DomainBounds, model: &M) -> Result<Contraction> {
    contraction_rate_with(domain, model, SEARCH_GRID)
}

pub fn contraction_rate_with<M: RateModel>(domain: DomainBounds, model: &M, grid: usize) -> Result<Contraction> {
    let (argmin, nu) = minimize_on(|v| Ok(model.rates(v)?.k), domain, grid)?;
    if !(nu > CONTRACTION_GUARD) {
        return Err(DmsError::DegenerateContraction { k: nu, guard: CONTRACTION_GUARD });
    }
    Ok(Contraction { nu, argmin })
}

/// `ν` of the physical model over `domain`.
pub fn contraction_rate_nu(domain: DomainBounds, p: &SwitchParams, q: &QuadratureSpec) -> Result<f64> {
    Ok(contraction_rate(domain, &SwitchModel::new(p.clone(), q.clone())?)?.nu)
}

/// Sensitivity constants `g1 = max|k01'|`, `g2 = max|A'|` over a domain, 1/(s·V).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub g1: f64,
    pub g1_at: f64,
    pub g2: f64,
    pub g2_at: f64,
}

/// Finite-difference step for rate derivatives, V.
pub const DIFF_STEP: f64 = 1e-4;

/// Central-difference derivatives `(k01', A')` at `v`, halving the step while
/// successive estimates disagree by more than 1%.
pub fn rate_derivatives<M: RateModel>(model: &M, v: f64) -> Result<(f64, f64)> {
    let central = |h: f64| -> Result<(f64, f64)> {
        let up = model.rates(v + h)?;
        let dn = model.rates(v - h)?;
        Ok(((up.k01 - dn.k01) / (2.0 * h), (up.a - dn.a) / (2.0 * h)))
    };
    let mut h = DIFF_STEP;
    let mut prev = central(h)?;
    for _ in 0..4 {
        h *= 0.5;
        let next = central(h)?;
        let close = |x: f64, y: f64| (x - y).abs() <= 0.01 * y.abs().max(1e-300) || (x - y).abs() < 1e-14;
        if close(prev.0, next.0) && close(prev.1, next.1) {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

pub fn sensitivity<M: RateModel>(domain: DomainBounds, model: &M) -> Result<Sensitivity> {
    sensitivity_with(domain, model, SEARCH_GRID)
}

pub fn sensitivity_with<M: RateModel>(domain: DomainBounds, model: &M, grid: usize) -> Result<Sensitivity> {
    let (g1_at, g1) = minimize_on(|v| Ok(-rate_derivatives(model, v)?.0.abs()), domain, grid)?;
    let (g2_at, g2) = minimize_on(|v| Ok(-rate_derivatives(model, v)?.1.abs()), domain, grid)?;
    Ok(Sensitivity { g1: -g1, g1_at, g2: -g2, g2_at })
}

/// `(g1, g2)` of the physical model over `domain`.
pub fn sensitivity_bounds(domain: DomainBounds, p: &SwitchParams, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let s = sensitivity(domain, &SwitchModel::new(p.clone(), q.clone())?)?;
    Ok((s.g1, s.g2))
}
