//! Data-generating processes and Monte Carlo experiments.

pub mod dgp;
pub mod experiment;
pub mod matrix_garch;
pub mod presets;
pub mod sampling;

pub use dgp::{dgp_sample, Dgp, DgpSpec, Innovation, BURN_IN, DEFAULT_GRID_POINTS};
pub use experiment::{
    run_experiment, ExperimentConfig, KernelPair, Procedure, RejectionRecord, RejectionRow,
    RejectionTable, StatisticKind,
};
pub use presets::{preset, PRESET_NAMES};
pub use sampling::{brownian_path, mvn_sample, mvt_sample, sigma_factor, sigma_matrix};
