//! Gaussian multi-bubble clusters.
//!
//! The crate evaluates the model simplicial clusters on the simplex tangent
//! space `E = {x in R^q : sum x = 0}`, their measure map `psi` and the model
//! isoperimetric profile with its analytic gradient and Hessian, flat
//! polyhedral clusters obtained by pulling back a model cluster through a
//! linear map, the first/second variation algebra of those clusters, a
//! penalty-method perimeter minimizer and the homology of the incidence
//! complex of a cluster.
//!
//! Cell indices are zero-based throughout the Rust API.

pub mod cli;
pub mod error;
pub mod gauss;
pub mod homology;
mod lp;
pub mod optimizer;
pub mod profile;
pub mod pullback;
pub mod simplex;

pub use error::{Error, Result};
pub use gauss::{McSpec, QuadratureSpec};
pub use simplex::{EOperator, InterfaceAreaTable, MeasureVector, SimplexShift};
