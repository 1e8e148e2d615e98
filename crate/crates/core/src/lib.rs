//! Frequency-domain structure learning for stationary multivariate time series.
//!
//! The crate recovers the *summary DAG* of a (real or complex) time series:
//!
//! 1. [`spectral`] turns a series into Fourier coefficients and a stack of
//!    smoothed sample spectral density matrices.
//! 2. [`ordering`] picks a topological ordering per frequency by repeatedly
//!    selecting the node with minimum conditional variance, then takes the
//!    consensus ordering.
//! 3. [`admm`] fits the sparse Cholesky factor of the inverse spectrum shared
//!    across frequencies (FreDom), and [`exfredom`] learns the graph without an
//!    ordering by continuous acyclicity-constrained optimization (ExFreDom).
//!
//! Supporting modules provide simulation ([`simgen`]), graph metrics
//! ([`metrics`]), tuning ([`select`]), a time-domain baseline ([`baseline`]),
//! file formats ([`io`]) and the experiment harness ([`experiment`]).

pub mod admm;
pub mod baseline;
pub mod dag;
pub mod error;
pub mod exfredom;
pub mod experiment;
pub mod io;
pub mod lbfgs;
pub mod linalg;
pub mod metrics;
pub mod ordering;
pub mod pipeline;
pub mod rng;
pub mod select;
pub mod simgen;
pub mod spectral;

pub use dag::SummaryDag;
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, RMatrix, C64};
pub use ordering::{OrderMatrix, TopologicalOrder};
pub use spectral::{FourierStack, SpectralStack, TimeSeriesMatrix};
