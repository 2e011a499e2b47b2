use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid charge {0}: must be 0, 1 or 2")]
    InvalidCharge(u8),
    #[error("site {site} outside 1..={sites}")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("parafermion index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("bond {bond} outside 1..={max}")]
    BondOutOfRange { bond: usize, max: usize },
    #[error("{sites} sites exceed the dimension cap of {cap} basis states")]
    DimensionCap { sites: usize, cap: usize },
    #[error("basis mismatch: {left} vs {right}")]
    BasisMismatch { left: String, right: String },
    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("operator does not conserve charge (off-sector weight {residual:.3e})")]
    NotChargeConserving { residual: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("need {needed} levels per sector, found {available}")]
    InsufficientLevels { needed: usize, available: usize },
    #[error("operator string annihilates the state")]
    ZeroVector,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
