//! Symmetric exclusion process in inhomogeneous (divergence-form) media.
//!
//! The crate is organised the way a hydrodynamic-limit study is run:
//!
//! - [`environment`] builds the finite weighted graphs (torus lattices, random
//!   conductances, percolation clusters, one-dimensional Stieltjes measures,
//!   Sierpinski gasket approximations) together with their scaling `a_n`.
//! - [`operator`] assembles the discrete generator `L_n`, its Dirichlet form,
//!   resolvent solves and the resolvent-corrected test functions.
//! - [`dynamics`] simulates the exclusion process by kinetic Monte Carlo and
//!   extracts empirical-measure and martingale time series.
//! - [`hydro`] produces reference solutions of `∂_t u = L u` and effective
//!   coefficients.
//! - [`harness`] runs quenched ensembles across levels and compares particles
//!   against the reference solutions.
//! - [`cli`] is the dispatcher behind the `hydrolim` binary.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cli;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod harness;
pub mod hydro;
pub mod linalg;
pub mod operator;
pub mod rng;
pub mod testfn;

pub use error::{Error, Result};
