//! A laboratory for the obstacle-type free boundary problem
//! `-Δu = f χ{u > 0}, u >= 0` with rough `L^q` sources.
//!
//! The crate computes the nonnegative energy minimizer on uniform grids and
//! measures what the theory predicts about it: growth and nondegeneracy
//! exponents at free boundary points, Weiss-type energy ladders and blow-up
//! limits. [`experiment`] drives everything from a TOML configuration.

pub mod analysis;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod par;
pub mod solver;
pub mod source;

pub use error::{Error, Regime, Result};
pub use geometry::{BoundaryData, DomainSpec, Grid, Point, ScalarField};
pub use solver::{solve, Method, SolveOptions, SolveReport};
pub use source::{SourceKind, SourceTerm};
