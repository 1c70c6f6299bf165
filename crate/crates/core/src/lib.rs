//! Decentralized dynamic-state estimation over time-varying networks.
//!
//! Agents run information filters on a shared linear plant and reach agreement
//! with their neighbors in two ways at once: covariance intersection for
//! priors whose correlation is unknown, and Metropolis-Hastings averaging for
//! fresh, independent measurement information. The crate also carries the
//! atmospheric-dispersion plant, the network models, the evaluation metrics,
//! and the scenario runner used to compare the hybrid estimator against pure
//! covariance intersection and a centralized filter.

pub mod consensus_mhmc;
pub mod error;
pub mod experiment;
pub mod field_model;
pub mod fusion_ci;
pub mod gaussian;
pub mod hybrid_filter;
pub mod info_filter;
pub mod linalg;
pub mod metrics;
pub mod network;

pub use error::{Error, Result};
pub use gaussian::{GaussianInfo, GaussianMoments};
