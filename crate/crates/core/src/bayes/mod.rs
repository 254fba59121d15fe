//! Temporal Bayesian network over ADS variables: training, inference and critical-fault mining.

pub mod em;
pub mod gibbs;
pub mod mining;
pub mod net;
pub mod tbn;
pub mod topology;

pub use gibbs::{GibbsConfig, GibbsPlan, Posterior};
pub use net::{Cpd, Dag, LinearGaussianNet};
pub use tbn::{Dataset, TemporalNet};
pub use topology::Topology;
