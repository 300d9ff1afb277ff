//! Estimation of conditional stochastic discount factors in
//! overparameterized nonlinear factor spaces: sparse (minimum-l1, basis
//! pursuit) versus dense (minimum-l2, ridgeless) interpolating pricing
//! kernels, with a rolling out-of-sample backtest, a metrics suite, and an
//! executable verification harness for the underlying identities.

pub mod backtest;
pub mod error;
pub mod factors;
pub mod features;
pub mod linalg;
pub mod metrics;
pub mod panel;
pub mod seed;
pub mod solvers;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
pub use factors::FactorMatrix;
pub use features::{FeatureDraw, FeatureSpec};
pub use panel::{CharacteristicPanel, MonthSlice, PlantedKernelSpec};
pub use solvers::{Method, SdfSolution, SolverOptions};
