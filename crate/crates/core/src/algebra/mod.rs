//! Exact ℚ(ω) arithmetic and occupation-basis bookkeeping.

mod basis;
mod cyclotomic;
mod scalar;

pub use basis::{
    check_charge, enumerate_sector, full_dim, occupation, site_weight, total_number, FockState,
    SectorBasis, LOCAL_DIM,
};
pub use cyclotomic::Cyclotomic;
pub use scalar::{omega, omega_pow, Scalar};

/// Exact product in ℚ(ω).
pub fn cyc_mul(x: &Cyclotomic, y: &Cyclotomic) -> Cyclotomic {
    x * y
}
