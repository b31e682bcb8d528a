//! Device parameters and fixed physical constants.
//!
//! Energies are stored in eV, the proton-transfer coupling `gamma` in 1/s.
//! The JSON document uses the row names of the published parameter table;
//! `Gamma_AB`, `gamma_L` and `gamma_R` are given in meV there and converted
//! on load.

use serde::{Deserialize, Serialize};

use crate::error::{DmsError, Result};

/// Boltzmann constant, eV/K.
pub const BOLTZMANN_EV: f64 = 8.6173e-5;
/// Reduced Planck constant, eV·s.
pub const HBAR_EV_S: f64 = 6.5821e-16;
/// Elementary charge, C.
pub const ELECTRON_CHARGE: f64 = 1.60217663e-19;

/// Default junction temperature, K.
pub const ROOM_TEMPERATURE: f64 = 298.15;

const MEV: f64 = 1e-3;

/// Which energy scale divides the squared driving offset in the Marcus exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarcusDenominator {
    /// `4·kB·T·γ_s`, the literal printed form (dimensionally inconsistent).
    AsPrinted,
    /// `4·kB·T·λ`, the standard Marcus form.
    #[default]
    ConventionalLambda,
}

/// Redox/protonation state of the molecular bridge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MolecularState {
    /// Non-protonated (AB), the conducting on-state.
    #[serde(rename = "AB")]
    NonProtonated,
    /// Protonated (ĀB), the off-state.
    #[serde(rename = "ABbar")]
    Protonated,
}

impl MolecularState {
    pub const BOTH: [MolecularState; 2] = [MolecularState::NonProtonated, MolecularState::Protonated];

    pub fn label(self) -> &'static str {
        match self {
            MolecularState::NonProtonated => "AB",
            MolecularState::Protonated => "ABbar",
        }
    }
}

/// All device parameters of the switch model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsDocument", into = "ParamsDocument")]
pub struct SwitchParams {
    /// Left-lead tunneling rate in the AB state, eV.
    pub gamma_l_ab: f64,
    /// Right-lead tunneling rate in the AB state, eV.
    pub gamma_r_ab: f64,
    pub kappa: f64,
    /// Level shift between the two states, eV.
    pub chi: f64,
    /// Bridge level in the AB state, eV.
    pub e_ab: f64,
    /// Proton-transfer energy, eV.
    pub e_pt: f64,
    /// Reorganization energy, eV.
    pub lambda: f64,
    /// Molecule-surroundings coupling, 1/s.
    pub gamma: f64,
    pub eta: f64,
    /// Width of the Gaussian level distribution, eV.
    pub sigma: f64,
    pub n_molecules: u32,
    /// Junction temperature, K.
    pub temperature: f64,
    /// Current-magnitude coupling Γ^AB, eV.
    pub coupling_ab: f64,
    pub marcus_denominator: MarcusDenominator,
}

impl Default for SwitchParams {
    fn default() -> Self {
        Self::table1()
    }
}

impl SwitchParams {
    /// The published device parameters at room temperature.
    pub fn table1() -> Self {
        SwitchParams {
            gamma_l_ab: 4.0 * MEV,
            gamma_r_ab: 100.25 * MEV,
            kappa: 5.44,
            chi: 2.1,
            e_ab: 0.66,
            e_pt: -0.513,
            lambda: 1.0,
            gamma: 5.74,
            eta: 0.6,
            sigma: 0.01,
            n_molecules: 150,
            temperature: ROOM_TEMPERATURE,
            coupling_ab: 0.01 * MEV,
            marcus_denominator: MarcusDenominator::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(name: &'static str, value: f64, ok: bool, reason: &str) -> Result<()> {
            if !value.is_finite() {
                return Err(DmsError::InvalidParameter {
                    name,
                    reason: format!("{value} is not finite"),
                });
            }
            if ok {
                Ok(())
            } else {
                Err(DmsError::InvalidParameter {
                    name,
                    reason: format!("{value} violates {reason}"),
                })
            }
        }
        check("gamma_L", self.gamma_l_ab, self.gamma_l_ab >= 0.0, ">= 0")?;
        check("gamma_R", self.gamma_r_ab, self.gamma_r_ab >= 0.0, ">= 0")?;
        let width = self.gamma_l_ab + self.gamma_r_ab;
        check("gamma_L + gamma_R", width, width > 0.0, "> 0")?;
        check("kappa", self.kappa, self.kappa > 0.0, "> 0")?;
        check("chi", self.chi, true, "")?;
        check("E_AB", self.e_ab, true, "")?;
        check("E_PT", self.e_pt, true, "")?;
        check("lambda", self.lambda, self.lambda > 0.0, "> 0")?;
        check("gamma", self.gamma, self.gamma > 0.0, "> 0")?;
        check("eta", self.eta, (0.0..=1.0).contains(&self.eta), "0 <= eta <= 1")?;
        check("sigma", self.sigma, self.sigma > 0.0, "> 0")?;
        check("T", self.temperature, self.temperature > 0.0, "> 0")?;
        check("Gamma_AB", self.coupling_ab, self.coupling_ab >= 0.0, ">= 0")?;
        if self.n_molecules == 0 {
            return Err(DmsError::InvalidParameter {
                name: "N",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Thermal energy kB·T in eV.
    pub fn kt(&self) -> f64 {
        BOLTZMANN_EV * self.temperature
    }

    fn state_scale(&self, state: MolecularState) -> f64 {
        match state {
            MolecularState::NonProtonated => 1.0,
            MolecularState::Protonated => self.kappa,
        }
    }

    pub fn gamma_l(&self, state: MolecularState) -> f64 {
        self.state_scale(state) * self.gamma_l_ab
    }

    pub fn gamma_r(&self, state: MolecularState) -> f64 {
        self.state_scale(state) * self.gamma_r_ab
    }

    /// Total level width γ_L + γ_R of a state, eV.
    pub fn level_width(&self, state: MolecularState) -> f64 {
        self.gamma_l(state) + self.gamma_r(state)
    }

    /// Mean bridge level of a state, eV.
    pub fn level(&self, state: MolecularState) -> f64 {
        match state {
            MolecularState::NonProtonated => self.e_ab,
            MolecularState::Protonated => self.e_ab + self.chi,
        }
    }

    /// Γ of a state, eV.
    pub fn coupling(&self, state: MolecularState) -> f64 {
        self.state_scale(state) * self.coupling_ab
    }

    /// Level-distribution width; one σ is shared by both states.
    pub fn level_spread(&self, _state: MolecularState) -> f64 {
        self.sigma
    }

    /// Lorentzian centre for level `e_level` under bias `v`.
    pub fn shifted_level(&self, e_level: f64, v: f64) -> f64 {
        e_level + (self.eta - 0.5) * v
    }

    /// Prefactor N·q/(2πħ) of the state currents, A/eV.
    pub fn current_prefactor(&self) -> f64 {
        self.n_molecules as f64 * ELECTRON_CHARGE / (2.0 * std::f64::consts::PI * HBAR_EV_S)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter document is always serializable")
    }
}

/// On-disk form of [`SwitchParams`]; keys follow the parameter table rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsDocument {
    #[serde(rename = "Gamma_AB")]
    pub coupling_ab_mev: f64,
    pub sigma: f64,
    pub eta: f64,
    #[serde(rename = "E_AB")]
    pub e_ab: f64,
    #[serde(rename = "E_PT")]
    pub e_pt: f64,
    pub kappa: f64,
    pub chi: f64,
    pub lambda: f64,
    pub gamma: f64,
    #[serde(rename = "gamma_L")]
    pub gamma_l_mev: f64,
    #[serde(rename = "gamma_R")]
    pub gamma_r_mev: f64,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub marcus_denominator: MarcusDenominator,
}

impl Default for ParamsDocument {
    fn default() -> Self {
        SwitchParams::table1().into()
    }
}

impl From<SwitchParams> for ParamsDocument {
    fn from(p: SwitchParams) -> Self {
        ParamsDocument {
            coupling_ab_mev: p.coupling_ab / MEV,
            sigma: p.sigma,
            eta: p.eta,
            e_ab: p.e_ab,
            e_pt: p.e_pt,
            kappa: p.kappa,
            chi: p.chi,
            lambda: p.lambda,
            gamma: p.gamma,
            gamma_l_mev: p.gamma_l_ab / MEV,
            gamma_r_mev: p.gamma_r_ab / MEV,
            n: p.n_molecules,
            temperature: p.temperature,
            marcus_denominator: p.marcus_denominator,
        }
    }
}

impl TryFrom<ParamsDocument> for SwitchParams {
    type Error = DmsError;

    fn try_from(d: ParamsDocument) -> Result<Self> {
        let p = SwitchParams {
            gamma_l_ab: d.gamma_l_mev * MEV,
            gamma_r_ab: d.gamma_r_mev * MEV,
            kappa: d.kappa,
            chi: d.chi,
            e_ab: d.e_ab,
            e_pt: d.e_pt,
            lambda: d.lambda,
            gamma: d.gamma,
            eta: d.eta,
            sigma: d.sigma,
            n_molecules: d.n,
            temperature: d.temperature,
            coupling_ab: d.coupling_ab_mev * MEV,
            marcus_denominator: d.marcus_denominator,
        };
        p.validate()?;
        Ok(p)
    }
}
