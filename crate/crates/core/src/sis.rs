//! Lattice-invariant spaces and their range functions.
//!
//! A space that is invariant under lattice translations is determined by one
//! subspace of `C^D` per fundamental-domain point (its range function); the
//! space's fibers are exactly those subspaces, and every structural question
//! (membership, projection, frame bounds, decompositions) reduces to
//! per-point linear algebra on them.

use std::sync::Arc;

use num_complex::Complex64;

use crate::fiber::{defiberize, fiberize, FiberedSignal};
use crate::group::{GroupSpec, Signal};
use crate::linalg::{adjoint, frame_extremes, identity, max_abs_diff, orthonormal_range, CMat, CVec, OrthoBasis};
use crate::par;
use crate::{tol, Error, Result};

/// One orthonormal basis per fundamental-domain point.
#[derive(Debug, Clone)]
pub struct RangeFunction {
    spec: Arc<GroupSpec>,
    pub bases: Vec<OrthoBasis>,
}

impl RangeFunction {
    pub fn new(spec: &Arc<GroupSpec>, bases: Vec<OrthoBasis>) -> Result<Self> {
        if bases.len() != spec.n_omega() {
            return Err(Error::LengthMismatch {
                what: "range function",
                expected: spec.n_omega(),
                got: bases.len(),
            });
        }
        for b in &bases {
            if b.dim() != spec.fiber_dim() {
                return Err(Error::LengthMismatch {
                    what: "fiber basis rows",
                    expected: spec.fiber_dim(),
                    got: b.dim(),
                });
            }
        }
        Ok(RangeFunction { spec: Arc::clone(spec), bases })
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    /// Per-point dimensions.
    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.rank()).collect()
    }

    /// Total dimension of the underlying space.
    pub fn dim_total(&self) -> usize {
        self.bases.iter().map(|b| b.rank()).sum()
    }

    /// Points where the fiber is nonzero.
    pub fn spectrum(&self) -> Vec<usize> {
        (0..self.bases.len()).filter(|&w| self.bases[w].rank() > 0).collect()
    }

    /// Largest residual of `max |B*B - I|` over all points.
    pub fn orthonormality_residual(&self) -> f64 {
        par::max_indexed(self.bases.len(), |w| self.bases[w].orthonormality_residual())
    }
}

/// A lattice-invariant space: range function plus generating signals.
#[derive(Debug, Clone)]
pub struct SISpace {
    spec: Arc<GroupSpec>,
    pub range: RangeFunction,
    pub generators: Vec<Signal>,
}

impl SISpace {
    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn dims(&self) -> Vec<usize> {
        self.range.dims()
    }

    pub fn dim_total(&self) -> usize {
        self.range.dim_total()
    }

    pub fn spectrum(&self) -> Vec<usize> {
        self.range.spectrum()
    }

    /// Whole ambient space: every fiber is all of `C^D`. The synthesized
    /// generators are scaled point masses on a transversal of the lattice.
    pub fn full(spec: &Arc<GroupSpec>) -> Self {
        let d = spec.fiber_dim();
        let bases = (0..spec.n_omega())
            .map(|_| OrthoBasis {
                basis: identity(d),
                singular_values: vec![1.0; d],
                eps_rank: tol::EPS_RANK,
            })
            .collect();
        let range = RangeFunction::new(spec, bases).expect("full range is well formed");
        from_range(range)
    }

    /// Space with every fiber zero.
    pub fn zero(spec: &Arc<GroupSpec>) -> Self {
        let d = spec.fiber_dim();
        let bases = (0..spec.n_omega())
            .map(|_| OrthoBasis {
                basis: CMat::zeros((d, 0)),
                singular_values: vec![],
                eps_rank: tol::EPS_RANK,
            })
            .collect();
        let range = RangeFunction::new(spec, bases).expect("zero range is well formed");
        SISpace { spec: Arc::clone(spec), range, generators: vec![] }
    }
}

/// Fiber matrices of a family of signals: one `D x count` matrix per point.
pub fn fiber_matrices(spec: &Arc<GroupSpec>, signals: &[Signal]) -> Result<Vec<CMat>> {
    let mut fibs = Vec::with_capacity(signals.len());
    for s in signals {
        fibs.push(fiberize(spec, s)?);
    }
    let d = spec.fiber_dim();
    Ok(par::map_indexed(spec.n_omega(), |w| {
        let mut m = CMat::zeros((d, fibs.len()));
        for (j, f) in fibs.iter().enumerate() {
            for u in 0..d {
                m[(u, j)] = f.fibers[w][u];
            }
        }
        m
    }))
}

/// Build the invariant space generated by `generators`: per-point orthonormal
/// ranges of the generator fibers, with numerical rank cut `eps_rank`.
pub fn range_from_generators(
    spec: &Arc<GroupSpec>,
    generators: &[Signal],
    eps_rank: f64,
) -> Result<SISpace> {
    let mats = fiber_matrices(spec, generators)?;
    let bases = par::map_indexed(spec.n_omega(), |w| orthonormal_range(&mats[w], eps_rank));
    let range = RangeFunction::new(spec, bases)?;
    Ok(SISpace { spec: Arc::clone(spec), range, generators: generators.to_vec() })
}

/// Wrap a range function as a space, synthesizing one generator per basis
/// slot: generator `i` defiberizes the `i`-th basis column, scaled by
/// `|L|^{-1/2}`, wherever the fiber has at least `i + 1` dimensions. The
/// lattice translates of these generators form a Parseval frame of the space.
pub fn from_range(range: RangeFunction) -> SISpace {
    let spec = Arc::clone(range.spec());
    let max_dim = range.dims().into_iter().max().unwrap_or(0);
    let scale = Complex64::new(1.0 / (spec.lattice_size() as f64).sqrt(), 0.0);
    let d = spec.fiber_dim();
    let mut generators = Vec::with_capacity(max_dim);
    for i in 0..max_dim {
        let fibers: Vec<CVec> = (0..spec.n_omega())
            .map(|w| {
                let b = &range.bases[w];
                if b.rank() > i {
                    CVec::from_iter((0..d).map(|u| b.basis[(u, i)] * scale))
                } else {
                    CVec::zeros(d)
                }
            })
            .collect();
        let fib = FiberedSignal::from_fibers(&spec, fibers).expect("shapes fixed by construction");
        generators.push(defiberize(&fib).expect("defiberize of well-formed fibers"));
    }
    SISpace { spec, range, generators }
}

/// Orthogonal projection of `f` onto the space; returns the projection and
/// the distance `||f - Pf||`.
pub fn project(space: &SISpace, f: &Signal) -> Result<(Signal, f64)> {
    let spec = space.spec();
    let fib = fiberize(spec, f)?;
    let proj_fibers = par::map_indexed(spec.n_omega(), |w| {
        let b = &space.range.bases[w].basis;
        let coeffs = adjoint(b).dot(&fib.fibers[w]);
        b.dot(&coeffs)
    });
    let mut dist_sq = 0.0f64;
    for w in 0..spec.n_omega() {
        dist_sq += fib.fibers[w]
            .iter()
            .zip(proj_fibers[w].iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>();
    }
    let proj = defiberize(&FiberedSignal::from_fibers(spec, proj_fibers)?)?;
    Ok((proj, dist_sq.sqrt()))
}

/// Membership at the default tolerance: `dist <= 1e-9 * (1 + ||f||)`.
pub fn contains(space: &SISpace, f: &Signal) -> Result<bool> {
    let (_, dist) = project(space, f)?;
    Ok(dist <= tol::MEMBERSHIP * (1.0 + f.norm()))
}

/// Orthogonal complement: per-point orthogonal complements of the fibers,
/// with generators synthesized as in [`from_range`].
pub fn complement_range(space: &SISpace) -> SISpace {
    let spec = space.spec();
    let d = spec.fiber_dim();
    let bases = par::map_indexed(spec.n_omega(), |w| {
        let b = &space.range.bases[w];
        // Kernel of B*: exactly the orthogonal complement of the span. The
        // singular values of B* are 0 or 1, so any mid-range cutoff works.
        let comp = crate::linalg::kernel_basis(&adjoint(&b.basis), 0.5);
        debug_assert_eq!(comp.ncols(), d - b.rank());
        OrthoBasis { basis: comp, singular_values: vec![1.0; d - b.rank()], eps_rank: b.eps_rank }
    });
    let range = RangeFunction::new(spec, bases).expect("complement shapes are valid");
    from_range(range)
}

/// Frame bounds of the lattice-translate system of `generators` over the space
/// they generate: `|L|` times the extreme nonzero per-point frame eigenvalues.
/// Errors with [`Error::ZeroSpace`] when every fiber is zero.
pub fn frame_bounds(spec: &Arc<GroupSpec>, generators: &[Signal], eps_rank: f64) -> Result<(f64, f64)> {
    let mats = fiber_matrices(spec, generators)?;
    let extremes = par::map_indexed(spec.n_omega(), |w| frame_extremes(&mats[w], eps_rank));
    let scale = spec.lattice_size() as f64;
    let mut lower = f64::INFINITY;
    let mut upper = 0.0f64;
    let mut nonzero = false;
    for &(lo, hi, rank) in &extremes {
        if rank > 0 {
            nonzero = true;
            lower = lower.min(lo);
            upper = upper.max(hi);
        }
    }
    if !nonzero {
        return Err(Error::ZeroSpace);
    }
    Ok((scale * lower, scale * upper))
}

/// Partition of the fundamental domain by fiber dimension: entry `n` lists the
/// points whose fiber is `n`-dimensional, `n = 0 ..= D`.
pub fn strata(space: &SISpace) -> Vec<Vec<usize>> {
    let d = space.spec().fiber_dim();
    let mut out = vec![Vec::new(); d + 1];
    for (w, n) in space.dims().into_iter().enumerate() {
        out[n].push(w);
    }
    out
}

/// Principal decomposition: generators whose lattice translates form a
/// Parseval frame of the space, with nested spectra. Generator `i` lives on
/// the points with fiber dimension at least `i + 1`; a zero space yields an
/// empty list.
pub fn principal_decomposition(space: &SISpace) -> Vec<Signal> {
    from_range(space.range.clone()).generators
}

/// `max |P_V(omega) + P_Vperp(omega) - I|` over all points; diagnostic.
pub fn complement_projector_residual(space: &SISpace, comp: &SISpace) -> f64 {
    let d = space.spec().fiber_dim();
    par::max_indexed(space.spec().n_omega(), |w| {
        let p = space.range.bases[w].projector() + comp.range.bases[w].projector();
        max_abs_diff(&p, &identity(d))
    })
}
