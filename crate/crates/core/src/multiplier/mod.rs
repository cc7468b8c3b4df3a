//! Fourier-side experiments: cutoffs, the oscillatory multiplier and its
//! decomposition, symbol conditions and Bernstein checks.

mod bernstein;
mod cutoffs;
mod integral;
mod symbol;

pub use bernstein::{bernstein_check, bernstein_report, BernsteinReport};
pub use cutoffs::{build_cutoffs, chi0, chi1, default_kappa, default_psi_radius, plateau, ramp, CutoffSet, Psi1};
pub use integral::{
    cone_decay_profile, decomposition_weights, multiplier_value, oscillatory_integral, partition_defect,
    phase_derivative_check, DecompositionWeights, PhaseReport, DOUBLING_TOL, ROUNDING_FLOOR,
};
pub use symbol::{
    parallelepiped_volume, verify_symbol_conditions, verify_symbol_conditions_with, SymbolOptions, SymbolReport,
    MAX_FD_ORDER,
};
