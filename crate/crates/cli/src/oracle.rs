//! Dense brute-force oracles at desk scale: every fiberwise quantity the
//! library computes has an independent check here that works directly on
//! full matrices over the group — no Fourier fibers, no block structure.
//! Commands attach these comparisons as report checks, and the acceptance
//! suite leans on them throughout.

use std::sync::Arc;

use num_complex::Complex64;
use sisdiag::fiber::{defiberize, fiberize, FiberedSignal};
use sisdiag::group::{GroupSpec, Signal};
use sisdiag::linalg::{
    adjoint, frame_extremes, general_eigenvalues, hermitian_eig, jacobi_svd, normal_eig,
};
use sisdiag::sis::SISpace;
use sisdiag::spop::SPOperator;
use sisdiag::{CMat, CVec, Error, Region};

use crate::error::CliError;

/// Group size beyond which dense oracles are refused.
pub const DENSE_CAP: usize = 4096;

pub fn check_dense_scale(spec: &GroupSpec) -> Result<(), CliError> {
    if spec.size() > DENSE_CAP {
        return Err(CliError::input(format!(
            "dense oracle limit: group size {} exceeds {DENSE_CAP}",
            spec.size()
        )));
    }
    Ok(())
}

/// All lattice translates of all generators, as columns (translate-major per
/// generator). This is the synthesis matrix of the generated space.
pub fn translate_columns(spec: &Arc<GroupSpec>, generators: &[Signal]) -> CMat {
    let n = spec.size();
    let l = spec.lattice_size();
    let mut cols = CMat::zeros((n, generators.len() * l));
    for (gi, g) in generators.iter().enumerate() {
        for t in 0..l {
            let shifted = sisdiag::group::translate(spec, g, &spec.lattice_point(t))
                .expect("lattice point has rank coordinates");
            for x in 0..n {
                cols[(x, gi * l + t)] = shifted.values[x];
            }
        }
    }
    cols
}

/// Least-squares projection onto the span of the translate system, via the
/// pseudoinverse of the Gram matrix.
pub fn gram_projection(spec: &Arc<GroupSpec>, generators: &[Signal], f: &Signal) -> Signal {
    let a = translate_columns(spec, generators);
    let ah = adjoint(&a);
    let gram = ah.dot(&a);
    let rhs = ah.dot(&f.values);
    let (vals, vecs) = hermitian_eig(&gram);
    let vmax = vals.first().copied().unwrap_or(0.0).max(0.0);
    let cut = 1e-9 * vmax.max(1e-300);
    // x = G^+ rhs in the eigenbasis.
    let mut x = CVec::zeros(gram.ncols());
    for (j, &v) in vals.iter().enumerate() {
        if v > cut {
            let col = vecs.column(j);
            let coef: Complex64 = col.iter().zip(rhs.iter()).map(|(b, r)| b.conj() * r).sum();
            let scaled = coef / Complex64::new(v, 0.0);
            for (i, b) in col.iter().enumerate() {
                x[i] += scaled * b;
            }
        }
    }
    Signal { values: a.dot(&x) }
}

/// Frame operator of the translate system, `A A*`.
pub fn dense_frame_operator(spec: &Arc<GroupSpec>, generators: &[Signal]) -> CMat {
    let a = translate_columns(spec, generators);
    a.dot(&adjoint(&a))
}

/// Extreme nonzero eigenvalues of the dense frame operator.
pub fn dense_frame_extremes(spec: &Arc<GroupSpec>, generators: &[Signal], eps_rank: f64) -> (f64, f64) {
    let a = translate_columns(spec, generators);
    let (lo, hi, _) = frame_extremes(&a, eps_rank);
    (lo, hi)
}

/// Largest inner product between translates of two *different* generators.
/// Zero exactly when the generated spaces are mutually orthogonal; involves
/// no rank decisions.
pub fn translate_cross_inner(spec: &Arc<GroupSpec>, generators: &[Signal]) -> f64 {
    let l = spec.lattice_size();
    let a = translate_columns(spec, generators);
    let gram = adjoint(&a).dot(&a);
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            if i / l != j / l {
                worst = worst.max(gram[(i, j)].norm());
            }
        }
    }
    worst
}

/// Support of each generator over the domain: fiber norm above half the
/// Parseval level `1/sqrt(|lattice|)`, which cleanly separates live fibers
/// from roundtrip noise.
pub fn support_masks(spec: &Arc<GroupSpec>, generators: &[Signal]) -> Result<Vec<Vec<bool>>, Error> {
    let thresh = 0.5 / (spec.lattice_size() as f64).sqrt();
    generators
        .iter()
        .map(|g| {
            let fib = fiberize(spec, g)?;
            Ok((0..spec.n_omega())
                .map(|w| fib.fibers[w].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() > thresh)
                .collect())
        })
        .collect()
}

/// Orthonormal ambient basis of a space: each fiber basis vector, placed at
/// its domain point and defiberized. Columns are ordered domain-point-major.
/// Orthonormality is inherited from the unitarity of fiberization.
pub fn ambient_basis(space: &SISpace) -> CMat {
    let spec = space.spec();
    let n = spec.size();
    let mut cols = CMat::zeros((n, space.dim_total()));
    let mut next = 0usize;
    for w in 0..spec.n_omega() {
        let basis = &space.range.bases[w].basis;
        for j in 0..basis.ncols() {
            let mut fibers = vec![CVec::zeros(spec.fiber_dim()); spec.n_omega()];
            fibers[w] = basis.column(j).to_owned();
            let f = defiberize(&FiberedSignal::from_fibers(spec, fibers).expect("shaped fibers"))
                .expect("defiberize total");
            for x in 0..n {
                cols[(x, next)] = f.values[x];
            }
            next += 1;
        }
    }
    cols
}

/// Compression `B* M B` of a dense operator to an orthonormal column system.
pub fn restricted_matrix(dense: &CMat, basis: &CMat) -> CMat {
    adjoint(basis).dot(dense).dot(basis)
}

/// Spectrum of the dense matrix restricted to the operator's domain,
/// computed without fiber structure. Falls back to the general eigensolver
/// when the restriction fails the normality gate.
pub fn dense_restricted_spectrum(op: &SPOperator, eps_eig: f64) -> Result<Vec<Complex64>, Error> {
    let basis = ambient_basis(op.space());
    let m = restricted_matrix(&op.dense_matrix(), &basis);
    match normal_eig(&m, eps_eig) {
        Ok(e) => Ok(e.values),
        Err(Error::NotNormal { .. }) => general_eigenvalues(&m),
        Err(e) => Err(e),
    }
}

/// Hausdorff distance between two finite nonempty complex sets; infinity if
/// exactly one is empty, zero if both are.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let side = |xs: &[Complex64], ys: &[Complex64]| -> f64 {
        xs.iter()
            .map(|x| ys.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0f64, f64::max)
    };
    side(a, b).max(side(b, a))
}

/// Dense orthogonal projector onto the numerical null space of `m`.
pub fn dense_null_projector(m: &CMat, eps_rank: f64) -> CMat {
    let svd = jacobi_svd(m);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let cut = eps_rank * smax.max(1e-300);
    let rank = svd.sigma.iter().take_while(|&&s| s > cut).count();
    let nul = svd.v.slice(ndarray::s![.., rank..]).to_owned();
    nul.dot(&adjoint(&nul))
}

/// Dense orthogonal projector onto the numerical column space of `m`.
pub fn dense_range_projector(m: &CMat, eps_rank: f64) -> CMat {
    let svd = jacobi_svd(m);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let cut = eps_rank * smax.max(1e-300);
    let rank = svd.sigma.iter().take_while(|&&s| s > cut).count();
    let rng = svd.u.slice(ndarray::s![.., ..rank]).to_owned();
    rng.dot(&adjoint(&rng))
}

/// Dense spectral projector of the restriction to the domain, pushed back to
/// the ambient group: eigenvectors of `B* M B` with eigenvalue inside the
/// region, assembled as `B P B*`.
pub fn dense_spectral_projector(
    op: &SPOperator,
    region: &Region,
    eps_eig: f64,
) -> Result<CMat, Error> {
    let basis = ambient_basis(op.space());
    let m = restricted_matrix(&op.dense_matrix(), &basis);
    let eig = normal_eig(&m, eps_eig)?;
    let k = m.ncols();
    let mut p = CMat::zeros((k, k));
    for (j, &v) in eig.values.iter().enumerate() {
        if region.contains(v) {
            let col = eig.vectors.column(j);
            for a in 0..k {
                for b in 0..k {
                    p[(a, b)] += col[a] * col[b].conj();
                }
            }
        }
    }
    Ok(basis.dot(&p).dot(&adjoint(&basis)))
}

/// Dense fiberization matrix: column `x` is the fiber family of the point
/// mass at `x`, flattened domain-point-major. Unitary by construction.
pub fn fiberization_matrix(spec: &Arc<GroupSpec>) -> CMat {
    let n = spec.size();
    let d = spec.fiber_dim();
    let mut t = CMat::zeros((n, n));
    for x in 0..n {
        let fib = fiberize(spec, &Signal::delta(spec, &spec.group_point(x))).expect("total map");
        for w in 0..spec.n_omega() {
            for u in 0..d {
                t[(w * d + u, x)] = fib.fibers[w][u];
            }
        }
    }
    t
}
