//! Two-level quantum dynamics under projective occupation measurements, and
//! the temporal Bell inequalities built from its two-time correlators.
//!
//! - [`dynamics`]: states, Rabi propagation, collapse, measured trajectories.
//! - [`correlators`]: `K`, `A_ε`, `K_ε` in closed form, plus a phase-averaged
//!   trajectory oracle that checks them.
//! - [`inequalities`]: `ΔK` combinations, maximal violations, `ε*`.
//! - [`sweep`]: table generators behind the `tbell` binary, [`cli`] its
//!   argument handling.

pub mod correlators;
pub mod dynamics;
pub mod error;
pub mod inequalities;
pub mod optimize;
pub mod sweep;
pub mod cli;

pub use correlators::{
    k_analytic, k_oracle, k_selective_analytic, selection_factor, CorrelationRequest,
    QuadratureConfig, QuadratureScheme, SelectedEnsemble, SelectionPolicy,
};
pub use dynamics::{
    born_probability, collapse, expectation_q, initial_state, measured_trajectory, propagate,
    trajectory_product, DynamicsParams, InitialPhase, MeasurementRecord, Outcome, TwoLevelState,
};
pub use error::{Error, Result};
pub use inequalities::{
    delta_k, delta_k_stationary, epsilon_threshold, jaynes_cummings_frequency, maximize_violation,
    InequalitySpec, Preset, SearchConfig, SolveConfig, ViolationReport,
};
