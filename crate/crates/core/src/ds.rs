//! Frames of operator orbits.
//!
//! Given a normal matrix `A` and vectors `f_1 .. f_I`, decide whether the
//! orbit system `{A^n f_i : n = 0, 1, 2, ...}` is a frame, and compute its
//! frame bounds. The iterate index starts at zero, so the vectors themselves
//! belong to the system. The criterion is spectral: every eigenvalue must be
//! a strict contraction, and the eigenspace projections of the vectors must
//! span each eigenspace (which forces every eigenspace dimension to be at
//! most `I`).

use num_complex::Complex64;

use crate::linalg::{
    adjoint, cluster_eigenvalues, hermitian_eig, normal_eig, orthonormal_range, CMat, CVec,
};
use crate::{tol, Error, Result};

/// Per-eigenvalue facts feeding the verdict.
#[derive(Debug, Clone)]
pub struct DsEigenSummary {
    pub value: Complex64,
    pub dim: usize,
    /// `|value| < 1`.
    pub contractive: bool,
    /// The projected vectors span the eigenspace.
    pub spanned: bool,
}

/// Outcome of the orbit-frame check.
#[derive(Debug, Clone)]
pub struct DsReport {
    pub verdict: bool,
    pub eigen: Vec<DsEigenSummary>,
    /// Frame bounds of the full infinite system, from the closed-form frame
    /// operator; present when every eigenvalue is a strict contraction (the
    /// geometric series converges), `None` otherwise.
    pub bounds: Option<(f64, f64)>,
    /// Frame bounds of the truncated system `n < n_max`.
    pub truncated: (f64, f64),
    pub n_max: usize,
}

/// Run the orbit-frame check. `n_max` is the truncation depth for the finite
/// comparison system and defaults to the matrix dimension (enough iterates to
/// reach every Krylov direction).
///
/// The infinite-system frame operator has the closed form
/// `S = sum_{c, c'} P_c F P_{c'} / (1 - v_c conj(v_{c'}))` over eigenvalue
/// clusters, where `F = sum_i f_i f_i*`; its extreme eigenvalues are the
/// frame bounds. The truncated operator accumulates `A^n F A*^n` directly.
pub fn ds_triple_check(
    a: &CMat,
    vectors: &[CVec],
    n_max: Option<usize>,
    eps_eig: f64,
) -> Result<DsReport> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    for f in vectors {
        if f.len() != n {
            return Err(Error::LengthMismatch { what: "orbit vector", expected: n, got: f.len() });
        }
    }
    let n_max = n_max.unwrap_or(n).max(n);

    let eig = normal_eig(a, eps_eig)?;
    let clusters = cluster_eigenvalues(&eig.values, eps_eig);

    // Eigenprojectors and the per-cluster span test.
    let mut projectors = Vec::with_capacity(clusters.len());
    let mut eigen = Vec::with_capacity(clusters.len());
    for c in &clusters {
        let mut p = CMat::zeros((n, n));
        for &j in &c.members {
            let col = eig.vectors.column(j);
            for r in 0..n {
                for s in 0..n {
                    p[(r, s)] += col[r] * col[s].conj();
                }
            }
        }
        let projected = CMat::from_shape_fn((n, vectors.len()), |(r, i)| {
            (0..n).map(|s| p[(r, s)] * vectors[i][s]).sum()
        });
        let rank = orthonormal_range(&projected, tol::EPS_RANK).rank();
        eigen.push(DsEigenSummary {
            value: c.value,
            dim: c.members.len(),
            contractive: c.value.norm() < 1.0,
            spanned: rank == c.members.len(),
        });
        projectors.push(p);
    }

    let verdict = eigen.iter().all(|e| e.contractive && e.spanned);

    let f_mat = CMat::from_shape_fn((n, vectors.len()), |(r, i)| vectors[i][r]);
    let big_f = f_mat.dot(&adjoint(&f_mat));

    let bounds = if eigen.iter().all(|e| e.contractive) {
        let mut s = CMat::zeros((n, n));
        for (ci, pc) in projectors.iter().enumerate() {
            for (cj, pcj) in projectors.iter().enumerate() {
                let denom = Complex64::new(1.0, 0.0)
                    - clusters[ci].value * clusters[cj].value.conj();
                let term = pc.dot(&big_f).dot(pcj).mapv(|z| z / denom);
                s = s + term;
            }
        }
        let vals = hermitian_eig(&s).0;
        Some((*vals.last().expect("n >= 1"), vals[0]))
    } else {
        None
    };

    // Truncated system: accumulate A^n F A*^n for n < n_max.
    let mut st = CMat::zeros((n, n));
    let mut g = big_f.clone();
    let aa = adjoint(a);
    for _ in 0..n_max {
        st += &g;
        g = a.dot(&g).dot(&aa);
    }
    let tvals = hermitian_eig(&st).0;
    let truncated = (*tvals.last().expect("n >= 1"), tvals[0]);

    Ok(DsReport { verdict, eigen, bounds, truncated, n_max })
}
