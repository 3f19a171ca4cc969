//! Fiberization: the unitary rearrangement of the DFT that turns lattice
//! translation into scalar modulation.
//!
//! For each fundamental-domain point `omega` the fiber collects the DFT values
//! on the annihilator coset `omega + A`, in the fixed annihilator enumeration:
//! `T[f](omega)[u] = fhat(omega + l_u)`. The map is an isometry onto
//! `|Omega|` copies of `C^D` and satisfies
//! `T[T_k f](omega) = e^{-2 pi i <omega, k>} T[f](omega)` for lattice `k`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::group::{dft, idft, GroupSpec, Signal};
use crate::linalg::CVec;
use crate::{Error, Result};

/// A signal in fiber coordinates: one length-`D` vector per fundamental-domain point.
#[derive(Debug, Clone)]
pub struct FiberedSignal {
    spec: Arc<GroupSpec>,
    pub fibers: Vec<CVec>,
}

impl FiberedSignal {
    pub fn zeros(spec: &Arc<GroupSpec>) -> Self {
        FiberedSignal {
            spec: Arc::clone(spec),
            fibers: vec![CVec::zeros(spec.fiber_dim()); spec.n_omega()],
        }
    }

    pub fn from_fibers(spec: &Arc<GroupSpec>, fibers: Vec<CVec>) -> Result<Self> {
        if fibers.len() != spec.n_omega() {
            return Err(Error::LengthMismatch {
                what: "fiber count",
                expected: spec.n_omega(),
                got: fibers.len(),
            });
        }
        for f in &fibers {
            if f.len() != spec.fiber_dim() {
                return Err(Error::LengthMismatch {
                    what: "fiber length",
                    expected: spec.fiber_dim(),
                    got: f.len(),
                });
            }
        }
        Ok(FiberedSignal { spec: Arc::clone(spec), fibers })
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn norm(&self) -> f64 {
        self.fibers
            .iter()
            .map(|f| f.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Fiberize a signal: unitary DFT followed by the coset rearrangement.
pub fn fiberize(spec: &Arc<GroupSpec>, f: &Signal) -> Result<FiberedSignal> {
    let fhat = dft(spec, f)?;
    let d = spec.fiber_dim();
    let fibers = crate::par::map_indexed(spec.n_omega(), |w| {
        CVec::from_iter((0..d).map(|u| fhat[spec.fiber_group_index(w, u)]))
    });
    Ok(FiberedSignal { spec: Arc::clone(spec), fibers })
}

/// Inverse of [`fiberize`].
pub fn defiberize(fib: &FiberedSignal) -> Result<Signal> {
    let spec = &fib.spec;
    if fib.fibers.len() != spec.n_omega() {
        return Err(Error::LengthMismatch {
            what: "fiber count",
            expected: spec.n_omega(),
            got: fib.fibers.len(),
        });
    }
    let mut fhat = CVec::zeros(spec.size());
    for w in 0..spec.n_omega() {
        let fiber = &fib.fibers[w];
        if fiber.len() != spec.fiber_dim() {
            return Err(Error::LengthMismatch {
                what: "fiber length",
                expected: spec.fiber_dim(),
                got: fiber.len(),
            });
        }
        for u in 0..spec.fiber_dim() {
            fhat[spec.fiber_group_index(w, u)] = fiber[u];
        }
    }
    idft(spec, &fhat)
}

/// The modulation factor `e^{-2 pi i <omega, k>}` produced by translating by
/// the lattice point `k`; constant across the fiber.
pub fn modulation_phase(spec: &GroupSpec, omega_idx: usize, k: &[i64]) -> Complex64 {
    let omega = spec.omega_point(omega_idx);
    spec.character(&omega, k)
}
