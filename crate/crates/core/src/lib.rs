//! Exact diagonalization, closed forms and tensor-network tools for the
//! frustration-free line of the ℤ₃ parafermion chain.

pub mod algebra;
pub mod analytics;
pub mod dmrg;
pub mod domainwall;
pub mod edgemode;
pub mod eigen;
pub mod error;
pub mod groundstate;
pub mod model;
pub mod operators;
pub mod sparse;
pub mod spectra;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
