//! Kernel-based tests of serial independence for time series taking values
//! in metric spaces: vectors, matrices and curves on a grid.
//!
//! The statistic is the AutoHSIC, the Hilbert-Schmidt independence criterion
//! between X_t and X_{t-m}, estimated by U-centred Gram matrices. Critical
//! values come from a wild bootstrap for raw series, or from a refitting
//! residual bootstrap when testing the innovations of a fitted model.
//!
//! ```
//! use autohsic::{wild_bootstrap_test, BootstrapConfig, KernelSpec, ObjectSeries};
//!
//! let x: Vec<f64> = (0..60).map(|t| ((t * 37 % 11) as f64).sin()).collect();
//! let series = ObjectSeries::scalar(x).unwrap();
//! let gk = KernelSpec::gaussian();
//! let report = wild_bootstrap_test(&series, gk, gk, 3, &BootstrapConfig::new(199, 0.05, 7)).unwrap();
//! assert_eq!(report.per_lag.len(), 3);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod diagnostics;
pub mod error;
pub mod garch;
pub mod kernel;
pub mod optim;
pub mod rng;
pub mod simulation;
pub mod space;
pub mod statistics;
pub mod ustat;
pub mod verify;

pub use bootstrap::{
    bootstrap_statistic_once, draw_weights, wild_bootstrap_test, BootstrapConfig, Decision,
    TestReport, WeightFamily,
};
pub use diagnostics::{
    residual_bootstrap_test, standardize_residuals, CausalModel, DiagnosticReport,
};
pub use error::{Error, Result};
pub use garch::{garch11_filter, garch11_qmle, garch11_residuals, Garch11, Garch11Params};
pub use kernel::{eval_kernel, gram_matrix, median_bandwidth, Bandwidth, KernelSpec, ResolvedKernel};
pub use space::{ObjectSeries, Space};
pub use statistics::{auto_hsic, portmanteau, u_center, CenteredGramPair, LagStatistic, PortmanteauStatistic};
pub use ustat::{auto_hsic_ustat_oracle, h_kernel};
