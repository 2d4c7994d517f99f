//! Differentially private correlation clustering on complete signed graphs,
//! with a non-private reference procedure, a cost oracle, a simulated
//! massively parallel variant, instance generators and an empirical privacy
//! auditor.

pub mod audit;
pub mod clustering;
pub mod cost;
pub mod dp;
pub mod error;
pub mod experiments;
pub mod gen;
pub mod graph;
pub mod mpc;
pub mod noise;
pub mod params;
pub mod refcc;
mod sparsify;

pub use clustering::Clustering;
pub use error::{Error, Result};
pub use graph::SignedGraph;
pub use params::{DeriveInput, PrivacyParams};
