//! Parametric model order reduction by rational interpolation along
//! parameter-dependent frequency curves.
//!
//! The projection bases are power series in the parameters whose
//! coefficients come from a sequence of shifted linear solves. Products with
//! the system matrices are formed once offline, so evaluating the reduced
//! model at a new parameter only touches `r x r` matrices.

pub mod error;
pub mod examples;
pub mod interp;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rom;
pub mod series;
pub mod solver;
pub mod verify;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{ParseError, PmorError, Result};
pub use interp::InterpolationData;
pub use model::ParametricLTI;
pub use rom::{build_offline, RomBundle};
pub use series::{MatrixSeries, MultiIndex, ParamBox};
pub use solver::{compute_basis, BasisSeries, SolverConfig, StopReason};
