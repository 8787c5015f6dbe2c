//! Quenched ensembles across levels, compared against reference solutions,
//! with the martingale, energy-functional and Γ-energy checks.

mod config;
mod report;
mod study;

pub use config::{StudyConfig, Tolerances, KNOWN_KEYS, MIN_LEVELS, MIN_SEEDS, TOLERANCE_KEYS};
pub use report::{
    emit_report, read_report, CriterionRow, DeviationRow, EnergyRow, EnergySupRow, GammaRow,
    MartingaleRow, Runtime, StudyReport,
};
pub use study::{
    convergence_study, deviation_section, energy_functional_check, energy_section, gamma_section,
    limit_operator, log_log_slope, martingale_check, martingale_section, preflight, prepare_level, reference_solution,
    run_ensembles, run_level, Ensemble, Level, SeedOutcome, Stat,
};
