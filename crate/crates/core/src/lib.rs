//! Discrete Dirichlet-to-Neumann operators for second-order elliptic
//! operators with advection on 2D polygonal domains.
//!
//! The pipeline is mesh -> coefficients -> P1 assembly -> Schur complement
//! onto the boundary -> spectra and boundary semigroups. See the `book/`
//! directory for a narrative guide.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod coefficients;
pub mod dtn;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod mtx;
pub mod quadrature;
pub mod semigroup;
pub mod spectral;
pub mod sweep;

pub use assembly::{assemble, assemble_with, AssembledSystem, AssemblyOptions, BoundaryMass};
pub use coefficients::{check_conditions, preset, CoefficientSet, ConditionMargins};
pub use dtn::DtnOperator;
pub use error::{Error, Result};
pub use mesh::{generate, refine, Mesh, Shape};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/mesh.md")]
    pub struct Meshes;
    #[doc = include_str!("../../../book/src/coefficients.md")]
    pub struct Coefficients;
    #[doc = include_str!("../../../book/src/assembly.md")]
    pub struct Assembly;
    #[doc = include_str!("../../../book/src/dtn.md")]
    pub struct BoundaryOperator;
    #[doc = include_str!("../../../book/src/spectra.md")]
    pub struct Spectra;
    #[doc = include_str!("../../../book/src/semigroups.md")]
    pub struct Semigroups;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct CommandLine;
}
