//! Fiberwise analysis of shift-invariant spaces and shift-preserving operators
//! on finite abelian groups.
//!
//! The group is a product of cyclic groups `Z_n1 x ... x Z_nr`. A sublattice is
//! selected by divisors `d_i | n_i`; signals are analyzed through the fiberization
//! map, which turns translation by lattice elements into modulation on a fundamental
//! domain and turns lattice-commuting operators into independent small matrices,
//! one per fundamental-domain point. On top of that sit range functions (per-point
//! subspaces), frame bounds, spectral decompositions, and the symmetrized variants
//! under a finite group of torus automorphisms (crystal presets p1/p2/pm/p4/p4m).
//!
//! All computations are dense and exact to floating-point roundoff; tolerances for
//! rank cuts and eigenvalue clustering are explicit everywhere (see [`tol`]).

pub mod ds;
pub mod fiber;
pub mod group;
pub mod linalg;
pub mod par;
pub mod sis;
pub mod spectral;
pub mod spop;
pub mod symmetry;
pub mod tol;

pub use fiber::{defiberize, fiberize, FiberedSignal};
pub use group::{build_group_spec, GroupSpec, LatticeSequence, Signal};
pub use linalg::{CMat, CVec, EigDecomp, OrthoBasis};
pub use sis::{RangeFunction, SISpace};
pub use spectral::{DeltaEigenpair, Diagonalization, EigenLabeling, Region};
pub use spop::{RangeOperator, SPOperator};
pub use symmetry::{build_action, preset_action, AutomorphismAction};

use num_complex::Complex64;

/// Errors surfaced by construction and verification routines.
///
/// Mathematical check *failures* (a verdict that something is false) are not
/// errors; they are reported in result structs. Errors mean the input violates
/// a precondition or an internal consistency bound.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("axis {axis}: divisor {divisor} does not divide modulus {modulus}")]
    NonDivisible { axis: usize, modulus: i64, divisor: i64 },
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not normal: commutator residual {residual:.3e} exceeds {tol:.3e}")]
    NotNormal { residual: f64, tol: f64 },
    #[error("operator does not commute with lattice translations: residual {residual:.3e}")]
    NotShiftPreserving { residual: f64 },
    #[error("operator leaks out of the invariant space: leakage {leakage:.3e}")]
    NotInvariant { leakage: f64 },
    #[error("space has no nonzero fiber; frame bounds are undefined")]
    ZeroSpace,
    #[error("region boundary passes within {dist:.3e} of eigenvalue {re}{im:+}i")]
    BoundaryCollision { re: f64, im: f64, dist: f64 },
    #[error("invalid automorphism generator: {reason}")]
    InvalidGenerator { reason: String },
    #[error("symmetry group order exceeds cap of {cap}")]
    GroupTooLarge { cap: usize },
    #[error("space is not invariant under the symmetry action: defect {defect:.3e}")]
    NotGammaInvariant { defect: f64 },
    #[error("operator does not commute with the symmetry action: defect {defect:.3e}")]
    NotGammaPreserving { defect: f64 },
    #[error("internal consistency failure in {what}: residual {residual:.3e}")]
    Inconsistent { what: &'static str, residual: f64 },
    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn boundary(eig: Complex64, dist: f64) -> Self {
        Error::BoundaryCollision { re: eig.re, im: eig.im, dist }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
