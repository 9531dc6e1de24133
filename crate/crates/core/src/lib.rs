//! Quantum Fisher information and optimal Gaussian probes for estimating a
//! single parameter of a passive mode transformation `exp(-iλĜ)`.
//!
//! The crate is layered bottom-up: [`matkernel`] (dense linear algebra),
//! [`gaussian`] (state representations), [`generator`] (mode-transformation
//! generators), [`metrology`] (QFI, resources, bounds), [`optimal`] (probe
//! constructors), [`measurement`] (homodyne and counting Fisher information),
//! [`focksim`] (truncated Fock-space oracle) and [`scenarios`] (time,
//! frequency, displacement and tilt estimation).

pub mod error;
pub mod focksim;
pub mod gaussian;
pub mod generator;
pub mod matkernel;
pub mod measurement;
pub mod metrology;
pub mod optimal;
pub mod scenarios;

pub use error::{Error, Result};
pub use gaussian::{CovarianceForm, DisentangledForm, GaussianPureState};
pub use generator::{DiscretizationGrid, Generator, HgParams, ShiftDomain};
pub use matkernel::{CMat, CVec, RVec};
pub use metrology::{QfiReport, ResourceTriple};
