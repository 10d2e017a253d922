//! Linear-algebra kernels: sparse helpers, banded LU, dense pencils, expm.

pub mod banded;
pub mod eig;
pub mod expm;
pub mod sparse;

pub use banded::BandedLu;
pub use eig::C64;
