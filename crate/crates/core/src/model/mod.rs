//! Device parameters, scalar physics and the composite switching rates.

pub mod domain;
pub mod params;
pub mod physics;
pub mod rates;

pub use domain::DomainBounds;
pub use params::{
    MarcusDenominator, MolecularState, ParamsDocument, SwitchParams, BOLTZMANN_EV, ELECTRON_CHARGE, HBAR_EV_S,
    ROOM_TEMPERATURE,
};
pub use physics::{fermi, gaussian_density, lorentzian_dos, marcus_rate, Channel, Direction, Lead};
pub use rates::{
    contraction_rate, contraction_rate_nu, contraction_rate_with, rate_derivatives, rate_set, rates_from_populations,
    sensitivity, sensitivity_bounds, sensitivity_with, ConstantRates, Contraction, FnRates, RateModel, RateSet,
    RateTable, Sensitivity, SwitchModel, CONTRACTION_GUARD, DIFF_STEP, SEARCH_GRID,
};
