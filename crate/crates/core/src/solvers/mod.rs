//! Deterministic solution routes: Crank-Nicolson for the classical and
//! time-dependent problems, implicit L1 for the distributed-order problem,
//! subordination through the inverse density table, and Mittag-Leffler
//! eigen-expansion.

mod field;
mod spectral;
mod stepping;
mod subordination;
mod symbol;

pub use field::{DensityField, FIELD_MAGIC};
pub use spectral::{decompose, solve_spectral, SpectralDecomposition, SpectralOptions, MAX_BIORTHOGONALITY_DEFECT};
pub use stepping::{
    delta_initial, solve_classical, solve_classical_at, solve_fractional_direct, solve_time_dependent,
    solve_time_dependent_at, stationary_density, StepOptions,
};
pub use subordination::{
    apply_g, power_weights, semigroup_defect, solve_subordination, subordinate, verify_time_changed_equation,
    ResidualOptions, ResidualReport, Subordinated, DEFAULT_TAU_STEP, MAX_TAIL_MASS,
};
pub use symbol::{ellipticity_check, neg_symbol_real};

#[cfg(test)]
mod tests;
