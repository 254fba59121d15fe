//! Safety-potential driven fault injection for a small simulated driving stack.
//!
//! The crate couples a kinematic vehicle simulator and a modular ADS pipeline with
//! a fault-injection engine and a three-slice linear-Gaussian dynamic Bayesian
//! network that predicts which (scene, fault) pairs push the vehicle into an
//! unsafe state.

pub mod ads;
pub mod bayes;
pub mod campaign;
pub mod error;
pub mod exec;
pub mod fault;
pub mod geometry;
pub mod kinematics;
pub mod safety;
pub mod scenario;
pub mod util;

pub use error::{Error, Result};
