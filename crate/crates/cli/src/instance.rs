//! Deterministic random instances: spaces with prescribed or random fiber
//! dimensions, normal lattice-commuting operators on them, and normal
//! symmetry-commuting operators built by propagating stabilizer-commuting
//! blocks from orbit representatives.
//!
//! Determinism contract: one seeded generator drives each construction
//! sequentially, so a fixed seed reproduces the instance bit-for-bit within
//! this implementation regardless of the parallelism setting.

use std::sync::Arc;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sisdiag::group::{GroupSpec, Signal};
use sisdiag::linalg::{adjoint, cluster_eigenvalues, hermitian_eig, orthonormal_range};
use sisdiag::sis::{from_range, RangeFunction, SISpace};
use sisdiag::spop::{from_range_operator, SPOperator};
use sisdiag::symmetry::{propagate_fibers, AutomorphismAction};
use sisdiag::{tol, CMat, CVec};

use crate::error::CliError;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_cvec(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_iter((0..n).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)))
}

pub fn random_cmat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_shape_fn((rows, cols), |_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

pub fn random_signal(spec: &GroupSpec, rng: &mut ChaCha8Rng) -> Signal {
    Signal { values: random_cvec(spec.size(), rng) }
}

/// Random unitary: orthonormalized random square matrix (full rank almost
/// surely; redrawn on the measure-zero failure).
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    loop {
        let b = orthonormal_range(&random_cmat(n, n, rng), tol::EPS_RANK);
        if b.rank() == n {
            return b.basis;
        }
    }
}

/// Eigenvalue grid `(j + ik)/8`, `|j|,|k| <= 5`: exactly representable,
/// pairwise separated by 1/8, and strictly inside the unit disc.
pub fn grid_eigenvalue(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-5i32..=5) as f64 / 8.0, rng.gen_range(-5i32..=5) as f64 / 8.0)
}

pub fn distinct_grid_eigenvalues(count: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    assert!(count <= 121, "grid has 121 points");
    let mut out: Vec<Complex64> = Vec::with_capacity(count);
    while out.len() < count {
        let z = grid_eigenvalue(rng);
        if out.iter().all(|u| (u - z).norm() > 1e-9) {
            out.push(z);
        }
    }
    out
}

/// Random fiber dimensions, each in `0..=D`, never all zero.
pub fn random_dims(spec: &GroupSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let dims: Vec<usize> =
            (0..spec.n_omega()).map(|_| rng.gen_range(0..=spec.fiber_dim())).collect();
        if dims.iter().any(|&d| d > 0) {
            return dims;
        }
    }
}

/// Random range function with the given fiber dimensions.
pub fn random_range_function(
    spec: &Arc<GroupSpec>,
    dims: &[usize],
    rng: &mut ChaCha8Rng,
) -> RangeFunction {
    let d = spec.fiber_dim();
    let bases = dims
        .iter()
        .map(|&k| loop {
            let b = orthonormal_range(&random_cmat(d, k, rng), tol::EPS_RANK);
            if b.rank() == k {
                break b;
            }
        })
        .collect();
    RangeFunction::new(spec, bases).expect("dimensions agree by construction")
}

/// Random lattice-invariant space; generators are synthesized from the range,
/// so its lattice translates form a Parseval frame.
pub fn random_sis(spec: &Arc<GroupSpec>, dims: Option<&[usize]>, rng: &mut ChaCha8Rng) -> SISpace {
    let dims = match dims {
        Some(d) => d.to_vec(),
        None => random_dims(spec, rng),
    };
    from_range(random_range_function(spec, &dims, rng))
}

/// Random normal matrix with grid eigenvalues (repeats allowed, so genuine
/// multiplicities occur).
pub fn random_normal_block(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
    let q = random_unitary(dim, rng);
    let mut d = CMat::zeros((dim, dim));
    for i in 0..dim {
        d[(i, i)] = grid_eigenvalue(rng);
    }
    q.dot(&d).dot(&adjoint(&q))
}

/// Random normal contraction with distinct eigenvalues.
pub fn random_contraction(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
    let q = random_unitary(dim, rng);
    let evs = distinct_grid_eigenvalues(dim, rng);
    let mut d = CMat::zeros((dim, dim));
    for i in 0..dim {
        d[(i, i)] = evs[i];
    }
    q.dot(&d).dot(&adjoint(&q))
}

/// Random normal lattice-commuting operator on the given space (or on a
/// fresh random one).
pub fn random_normal_sp(
    spec: &Arc<GroupSpec>,
    space: Option<SISpace>,
    rng: &mut ChaCha8Rng,
) -> SPOperator {
    let space = space.unwrap_or_else(|| random_sis(spec, None, rng));
    let mats: Vec<CMat> = space.dims().iter().map(|&n| random_normal_block(n, rng)).collect();
    from_range_operator(&space, mats).expect("blocks sized to the space")
}

/// Random block at an orbit representative commuting with its stabilizer's
/// fiber permutations: a random Hermitian is averaged over the stabilizer,
/// then each of its eigenspaces is reassigned a distinct grid eigenvalue.
pub fn stabilizer_commuting_block(
    action: &AutomorphismAction,
    rho: usize,
    rng: &mut ChaCha8Rng,
) -> CMat {
    let d = action.spec().fiber_dim();
    let h = random_cmat(d, d, rng);
    let h = &h + &adjoint(&h);
    let stab = action.stabilizer(rho);
    let mut avg = CMat::zeros((d, d));
    for &s in &stab {
        let tab = action.pi_table(rho, s);
        let mut tinv = vec![0usize; d];
        for u in 0..d {
            tinv[tab[u]] = u;
        }
        for u in 0..d {
            for u2 in 0..d {
                avg[(u, u2)] += h[(tinv[u], tinv[u2])];
            }
        }
    }
    let avg = avg.mapv(|z| z / c(stab.len() as f64, 0.0));
    let (vals, vecs) = hermitian_eig(&avg);
    let clusters =
        cluster_eigenvalues(&vals.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>(), 1e-8);
    let evs = distinct_grid_eigenvalues(clusters.len(), rng);
    let mut out = CMat::zeros((d, d));
    for (cl, &ev) in clusters.iter().zip(&evs) {
        for &j in &cl.members {
            let col = vecs.column(j);
            for p in 0..d {
                for q in 0..d {
                    out[(p, q)] += ev * col[p] * col[q].conj();
                }
            }
        }
    }
    out
}

/// Random normal operator commuting with the whole action: draw one
/// stabilizer-commuting block per orbit representative and propagate along
/// the orbits. Domain is the full space.
pub fn random_gamma_operator(
    action: &AutomorphismAction,
    rng: &mut ChaCha8Rng,
) -> SPOperator {
    let reps: Vec<(usize, CMat)> = action
        .transversal()
        .into_iter()
        .map(|rho| (rho, stabilizer_commuting_block(action, rho, rng)))
        .collect();
    let blocks = propagate_fibers(action, &reps).expect("transversal covers every orbit once");
    let full = SISpace::full(action.spec());
    from_range_operator(&full, blocks).expect("full-space blocks")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Sis,
    NormalSp,
    NormalGamma,
}

pub enum Instance {
    Space(SISpace),
    Operator(SPOperator),
}

/// Seeded dispatch over the three instance kinds; `NormalGamma` requires an
/// action.
pub fn random_instance(
    spec: &Arc<GroupSpec>,
    action: Option<&AutomorphismAction>,
    kind: Kind,
    seed: u64,
) -> Result<Instance, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        Kind::Sis => Ok(Instance::Space(random_sis(spec, None, &mut rng))),
        Kind::NormalSp => Ok(Instance::Operator(random_normal_sp(spec, None, &mut rng))),
        Kind::NormalGamma => {
            let action = action.ok_or_else(|| {
                CliError::input("random symmetry-commuting instance requires an action".into())
            })?;
            Ok(Instance::Operator(random_gamma_operator(action, &mut rng)))
        }
    }
}
