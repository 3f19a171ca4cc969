//! Default tolerances.
//!
//! Two knobs are semantic and user-facing: `EPS_RANK` decides numerical rank
//! (relative singular-value cutoff) and `EPS_EIG` decides when two eigenvalues
//! are the same (absolute, on matrices scaled by `1 + ||A||`). The remaining
//! constants are residual acceptance thresholds for self-checks; residuals are
//! always reported next to the threshold they were judged against.

/// Relative singular-value cutoff for numerical rank.
pub const EPS_RANK: f64 = 1e-9;

/// Eigenvalue clustering / equality tolerance (absolute after scaling by `1 + ||A||`).
pub const EPS_EIG: f64 = 1e-8;

/// Forward/inverse transform round-trips and exact phase identities.
pub const ROUNDTRIP: f64 = 1e-12;

/// Basis orthonormality: `max |B*B - I|`.
pub const ORTHONORMALITY: f64 = 1e-10;

/// Unitarity of eigenvector matrices: `max |U*U - I|`.
pub const UNITARITY: f64 = 1e-9;

/// Eigendecomposition reconstruction, relative to `1 + ||A||`.
pub const RECONSTRUCTION: f64 = 1e-8;

/// Lattice-commutation residual, relative to `1 + ||L||`.
pub const SHIFT_COMMUTATOR: f64 = 1e-10;

/// Off-diagonal block mass of a fibered operator, relative to `1 + ||L||`.
pub const OFF_DIAGONAL: f64 = 1e-10;

/// Leakage of an operator image out of its invariant space, relative to `1 + ||L||`.
pub const INVARIANCE: f64 = 1e-9;

/// Membership distance for "is this signal in the space", relative to `1 + ||f||`.
pub const MEMBERSHIP: f64 = 1e-9;

/// Per-fiber boolean property decisions (normal, self-adjoint, isometry, ...).
pub const FIBER_PROPERTY: f64 = 1e-9;

/// Orthogonality between eigenspace fibers.
pub const ORTHOGONALITY: f64 = 1e-9;

/// Agreement between the fiber form and the dense form of one operator.
pub const DENSE_AGREEMENT: f64 = 1e-10;

/// Symmetry covariance of a range function along the action.
pub const GAMMA_COVARIANCE: f64 = 1e-9;

/// Conjugation identity for symmetry-commuting operators.
pub const GAMMA_CONJUGATION: f64 = 1e-10;

/// Dual-side test of lattice-sequence symmetry.
pub const SEQUENCE_SYMMETRY: f64 = 1e-12;

/// Cap on the order of a symmetry group.
pub const GROUP_ORDER_CAP: usize = 64;
