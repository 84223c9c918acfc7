//! Numerical laboratory for the Parisi functional of mixed p-spin models.
//!
//! The crate is organised around the objects that appear when the Parisi
//! formula is checked at desk scale:
//!
//! - [`model`]: the mixture `ξ(x) = Σ β_p² x^p` and its derivatives.
//! - [`parisi`]: the finite-level recursion `X_l` and the functional `𝒫ₖ`.
//! - [`optimizer`]: constrained minimisation of `𝒫ₖ` over `m⃗`, `q⃗` and `k`.
//! - [`rpc`]: truncated Ruelle probability cascades and their Gaussian fields.
//! - [`simulator`]: disorder sampling, exact enumeration and Gibbs sampling.
//! - [`bounds`]: Guerra interpolation and the Aizenman–Sims–Starr increment.
//! - [`diagnostics`]: Ghirlanda–Guerra, ultrametricity and positivity checks.

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod overlap;
pub mod parisi;
pub mod quadrature;
pub mod rpc;
pub mod seed;
pub mod simulator;
pub mod stats;
mod walsh;

pub use error::{Error, Result};
pub use model::MixtureSpec;
pub use overlap::OverlapArray;
pub use parisi::RsbParams;
pub use quadrature::QuadratureGrid;
pub use stats::Estimate;
