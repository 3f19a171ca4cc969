//! Dense complex linear algebra kernels.
//!
//! Everything is built from two Jacobi iterations: a two-sided cyclic Jacobi
//! for Hermitian eigenproblems and a one-sided (Hestenes) Jacobi for singular
//! values. Normal matrices are diagonalized by splitting into the commuting
//! Hermitian pair `H = (A + A*)/2`, `K = (A - A*)/(2i)`: diagonalize `H`, then
//! rediagonalize `K` inside each eigenvalue cluster of `H`. Matrices here are
//! small (fiber dimension times fiber dimension), so cubic sweeps are cheap.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CVec = Array1<Complex64>;
pub type CMat = Array2<Complex64>;

/// Rotation threshold for Jacobi sweeps, relative to the matrix scale.
const JACOBI_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 64;

pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn identity(n: usize) -> CMat {
    CMat::eye(n)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let svd = jacobi_svd(a);
    svd.sigma.first().copied().unwrap_or(0.0)
}

/// The 2x2 unitary that diagonalizes a Hermitian block with entries
/// `[[app, b], [conj(b), aqq]]`; returns `(c, s, phase)` for the factorization
/// `V = [[c, s], [-s*e^{-i phi}, c*e^{-i phi}]]` with `b = |b| e^{i phi}`.
fn jacobi_rotation(app: f64, aqq: f64, b: Complex64) -> (f64, f64, Complex64) {
    let absb = b.norm();
    let phase = if absb > 0.0 { b / absb } else { Complex64::new(1.0, 0.0) };
    let tau = (aqq - app) / (2.0 * absb);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, phase)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi.
///
/// Returns eigenvalues sorted descending and the matching unitary `U` with
/// `A = U diag(vals) U*`. Only the Hermitian part of the input is consulted.
pub fn hermitian_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    if n == 0 {
        return (vec![], CMat::zeros((0, 0)));
    }
    let mut h = a.clone();
    // Hermitize to protect against roundoff-asymmetric input.
    for p in 0..n {
        h[(p, p)] = Complex64::new(h[(p, p)].re, 0.0);
        for q in (p + 1)..n {
            let avg = (h[(p, q)] + h[(q, p)].conj()) * 0.5;
            h[(p, q)] = avg;
            h[(q, p)] = avg.conj();
        }
    }
    let mut u = identity(n);
    let scale = frobenius(&h).max(1e-300);
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let b = h[(p, q)];
                if b.norm() <= JACOBI_EPS * scale {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(h[(p, p)].re, h[(q, q)].re, b);
                let pc = phase.conj();
                // Columns: A <- A V.
                for k in 0..n {
                    let hp = h[(k, p)];
                    let hq = h[(k, q)];
                    h[(k, p)] = hp * c - hq * pc * s;
                    h[(k, q)] = hp * s + hq * pc * c;
                }
                // Rows: A <- V* A.
                for k in 0..n {
                    let hp = h[(p, k)];
                    let hq = h[(q, k)];
                    h[(p, k)] = hp * c - hq * phase * s;
                    h[(q, k)] = hp * s + hq * phase * c;
                }
                h[(p, q)] = Complex64::default();
                h[(q, p)] = Complex64::default();
                h[(p, p)] = Complex64::new(h[(p, p)].re, 0.0);
                h[(q, q)] = Complex64::new(h[(q, q)].re, 0.0);
                for k in 0..n {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    u[(k, p)] = up * c - uq * pc * s;
                    u[(k, q)] = up * s + uq * pc * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| h[(j, j)].re.total_cmp(&h[(i, i)].re));
    let vals: Vec<f64> = order.iter().map(|&i| h[(i, i)].re).collect();
    let u = u.select(Axis(1), &order);
    (vals, u)
}

/// Singular value decomposition `A = U diag(sigma) V*` by one-sided Jacobi.
pub struct Svd {
    /// Left singular vectors for `sigma > 0` columns; zero columns otherwise.
    pub u: CMat,
    /// All `ncols` singular values, descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors, columns aligned with `sigma`.
    pub v: CMat,
}

/// One-sided Jacobi on the columns of `a`. Works for any shape, including
/// zero columns; singular values come out sorted descending.
pub fn jacobi_svd(a: &CMat) -> Svd {
    let (m, n) = a.dim();
    if n == 0 {
        return Svd { u: CMat::zeros((m, 0)), sigma: vec![], v: CMat::zeros((0, 0)) };
    }
    let mut w = a.clone();
    let mut v = identity(n);
    let scale = frobenius(&w).max(1e-300);
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = Complex64::default();
                for k in 0..m {
                    let wp = w[(k, p)];
                    let wq = w[(k, q)];
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                if apq.norm() <= JACOBI_EPS * scale * scale {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(app, aqq, apq);
                let pc = phase.conj();
                for k in 0..m {
                    let wp = w[(k, p)];
                    let wq = w[(k, q)];
                    w[(k, p)] = wp * c - wq * pc * s;
                    w[(k, q)] = wp * s + wq * pc * c;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp * c - vq * pc * s;
                    v[(k, q)] = vp * s + vq * pc * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut norms: Vec<f64> = (0..n)
        .map(|j| w.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let w = w.select(Axis(1), &order);
    let v = v.select(Axis(1), &order);
    norms.sort_by(|x, y| y.total_cmp(x));
    let mut u = CMat::zeros((m, n));
    for j in 0..n {
        if norms[j] > 0.0 {
            let inv = 1.0 / norms[j];
            for k in 0..m {
                u[(k, j)] = w[(k, j)] * inv;
            }
        }
    }
    Svd { u, sigma: norms, v }
}

/// Orthonormal basis of a span, with the numerical rank that produced it.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    /// `dim x rank`, orthonormal columns ordered by decreasing singular value.
    pub basis: CMat,
    /// The singular values retained by the rank cut.
    pub singular_values: Vec<f64>,
    /// Relative cutoff that was applied.
    pub eps_rank: f64,
}

impl OrthoBasis {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthogonal projector `B B*` onto the span.
    pub fn projector(&self) -> CMat {
        self.basis.dot(&adjoint(&self.basis))
    }

    /// `max |B*B - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = adjoint(&self.basis).dot(&self.basis);
        max_abs_diff(&g, &identity(self.rank()))
    }
}

/// Rotate each column so its largest entry is real positive; deterministic.
fn normalize_phases(b: &mut CMat) {
    for mut col in b.axis_iter_mut(Axis(1)) {
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for (i, z) in col.iter().enumerate() {
            let mag = z.norm();
            if mag > best_mag + 1e-14 {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag > 0.0 {
            let rot = col[best].conj() / best_mag;
            for z in col.iter_mut() {
                *z *= rot;
            }
        }
    }
}

fn first_significant_index(col: &CVec, floor: f64) -> usize {
    col.iter().position(|z| z.norm() > floor).unwrap_or(col.len())
}

/// Orthonormal basis of the column span of `vectors` (`dim x count`).
///
/// Rank is the number of singular values above `eps_rank` times the largest;
/// an empty or all-zero family yields rank 0. Columns are ordered by
/// decreasing singular value, ties broken by first significant coordinate.
pub fn orthonormal_range(vectors: &CMat, eps_rank: f64) -> OrthoBasis {
    let dim = vectors.nrows();
    let svd = jacobi_svd(vectors);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let rank = if smax <= 0.0 {
        0
    } else {
        svd.sigma.iter().take_while(|&&s| s > eps_rank * smax).count()
    };
    let mut basis = svd.u.slice(ndarray::s![.., ..rank]).to_owned();
    normalize_phases(&mut basis);
    let mut kept: Vec<(f64, usize)> = (0..rank).map(|j| (svd.sigma[j], j)).collect();
    // Stable order: decreasing singular value, then first significant coordinate.
    let floor = 1e-12;
    kept.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            let ca = first_significant_index(&basis.column(a.1).to_owned(), floor);
            let cb = first_significant_index(&basis.column(b.1).to_owned(), floor);
            ca.cmp(&cb)
        })
    });
    let order: Vec<usize> = kept.iter().map(|&(_, j)| j).collect();
    let basis = basis.select(Axis(1), &order);
    let singular_values = kept.iter().map(|&(s, _)| s).collect();
    let _ = dim;
    OrthoBasis { basis, singular_values, eps_rank }
}

/// Extreme nonzero eigenvalues of the frame operator `sum_j v_j v_j*` of the
/// column family, together with its rank: `(lower, upper, rank)`.
///
/// The frame operator eigenvalues are the squared singular values of the
/// family, so this shares the rank cut with [`orthonormal_range`]. A family
/// with no nonzero vector returns `(0, 0, 0)`.
pub fn frame_extremes(vectors: &CMat, eps_rank: f64) -> (f64, f64, usize) {
    let svd = jacobi_svd(vectors);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return (0.0, 0.0, 0);
    }
    let kept: Vec<f64> = svd.sigma.iter().copied().take_while(|&s| s > eps_rank * smax).collect();
    let lower = kept.last().copied().unwrap_or(0.0);
    (lower * lower, smax * smax, kept.len())
}

/// Orthonormal basis of the numerical kernel of `a`: right singular vectors
/// whose singular value is at most `eps_abs` (absolute; callers scale it).
pub fn kernel_basis(a: &CMat, eps_abs: f64) -> CMat {
    let n = a.ncols();
    let svd = jacobi_svd(a);
    let start = svd.sigma.iter().take_while(|&&s| s > eps_abs).count();
    let mut basis = svd.v.slice(ndarray::s![.., start..n]).to_owned();
    normalize_phases(&mut basis);
    basis
}

/// Eigendecomposition of a normal matrix.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    /// Eigenvalues with multiplicity, sorted by (Re, Im) lexicographic descending.
    pub values: Vec<Complex64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: CMat,
    /// `max |U*U - I|`.
    pub unitary_residual: f64,
    /// `max |A - U diag U*|`.
    pub recon_residual: f64,
}

impl EigDecomp {
    /// Rebuild `U diag(values) U*`.
    pub fn reconstruct(&self) -> CMat {
        let n = self.values.len();
        let mut d = CMat::zeros((n, n));
        for (j, &v) in self.values.iter().enumerate() {
            d[(j, j)] = v;
        }
        self.vectors.dot(&d).dot(&adjoint(&self.vectors))
    }
}

/// Eigendecomposition of a normal matrix via the commuting Hermitian pair.
///
/// `eps_eig` drives both the normality gate (`max |AA* - A*A|` against
/// `eps_eig * (1 + ||A||^2)`) and the clustering of the Hermitian-part
/// eigenvalues inside which the skew part is rediagonalized.
pub fn normal_eig(a: &CMat, eps_eig: f64) -> Result<EigDecomp> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    if n == 0 {
        return Ok(EigDecomp {
            values: vec![],
            vectors: CMat::zeros((0, 0)),
            unitary_residual: 0.0,
            recon_residual: 0.0,
        });
    }
    let astar = adjoint(a);
    let comm = a.dot(&astar) - astar.dot(a);
    let norm_f = frobenius(a);
    let normality = max_abs(&comm);
    let gate = eps_eig * (1.0 + norm_f * norm_f);
    if normality > gate {
        return Err(Error::NotNormal { residual: normality, tol: gate });
    }

    let half = Complex64::new(0.5, 0.0);
    let halfi = Complex64::new(0.0, -0.5); // 1/(2i)
    let h = (a + &astar).mapv(|z| z * half);
    let k = (a - &astar).mapv(|z| z * halfi);

    let (hvals, mut u) = hermitian_eig(&h);
    // Cluster the (descending) H-eigenvalues, then rediagonalize K per cluster.
    let delta = eps_eig * (1.0 + norm_f);
    let mut start = 0usize;
    while start < n {
        let mut end = start + 1;
        while end < n && hvals[end] > hvals[end - 1] - delta {
            end += 1;
        }
        if end - start > 1 {
            let uc = u.slice(ndarray::s![.., start..end]).to_owned();
            let kc = adjoint(&uc).dot(&k).dot(&uc);
            let (_, w) = hermitian_eig(&kc);
            let refined = uc.dot(&w);
            u.slice_mut(ndarray::s![.., start..end]).assign(&refined);
        }
        start = end;
    }

    // Rayleigh quotients with the refined vectors, then the canonical order.
    let au = a.dot(&u);
    let mut pairs: Vec<(Complex64, usize)> = (0..n)
        .map(|j| {
            let mut q = Complex64::default();
            for i in 0..n {
                q += u[(i, j)].conj() * au[(i, j)];
            }
            (q, j)
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.0.re.total_cmp(&a.0.re).then_with(|| b.0.im.total_cmp(&a.0.im))
    });
    let order: Vec<usize> = pairs.iter().map(|&(_, j)| j).collect();
    let vectors = u.select(Axis(1), &order);
    let values: Vec<Complex64> = pairs.iter().map(|&(v, _)| v).collect();

    let gram = adjoint(&vectors).dot(&vectors);
    let unitary_residual = max_abs_diff(&gram, &identity(n));
    let decomp = EigDecomp { values, vectors, unitary_residual, recon_residual: 0.0 };
    let recon_residual = max_abs_diff(&decomp.reconstruct(), a);
    let decomp = EigDecomp { recon_residual, ..decomp };
    let bound = 100.0 * crate::tol::RECONSTRUCTION * (1.0 + norm_f);
    if recon_residual > bound {
        return Err(Error::Inconsistent { what: "normal_eig reconstruction", residual: recon_residual });
    }
    Ok(decomp)
}

/// One eigenvalue cluster: the representative value and member column indices.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub value: Complex64,
    pub members: Vec<usize>,
}

/// Greedy clustering of eigenvalues: each value joins the first cluster whose
/// mean is within `eps`, else opens a new one. Input order is preserved, so
/// values sorted by [`normal_eig`] yield clusters in that same order.
pub fn cluster_eigenvalues(values: &[Complex64], eps: f64) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for (j, &v) in values.iter().enumerate() {
        match clusters.iter_mut().find(|c| (c.value - v).norm() <= eps) {
            Some(c) => {
                let m = c.members.len() as f64;
                c.value = (c.value * m + v) / (m + 1.0);
                c.members.push(j);
            }
            None => clusters.push(Cluster { value: v, members: vec![j] }),
        }
    }
    clusters
}

/// Eigenvalues of a general (possibly non-normal) small matrix via the
/// characteristic polynomial and Durand-Kerner iteration. Only used on the
/// advisory paths where normality fails; accuracy degrades with size, so the
/// dimension is capped.
pub fn general_eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    if n == 0 {
        return Ok(vec![]);
    }
    if n > 24 {
        return Err(Error::InvalidInput(
            "general eigenvalue fallback is limited to matrices of size 24".into(),
        ));
    }
    let scale = max_abs(a).max(1.0);
    let b = a.mapv(|z| z / scale);
    // Faddeev-LeVerrier: coefficients of lambda^n + c1 lambda^{n-1} + ... + cn.
    let mut coeffs = vec![Complex64::default(); n + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    let mut m = b.clone();
    for k in 1..=n {
        let trace: Complex64 = (0..n).map(|i| m[(i, i)]).sum();
        let c = -trace / k as f64;
        coeffs[k] = c;
        if k < n {
            let mut shifted = m.clone();
            for i in 0..n {
                shifted[(i, i)] += c;
            }
            m = b.dot(&shifted);
        }
    }
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::default();
        for &c in &coeffs {
            acc = acc * z + c;
        }
        acc
    };
    // Durand-Kerner from the standard staggered start.
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|j| seed.powu(j as u32 + 1)).collect();
    for _ in 0..400 {
        let mut moved = 0.0f64;
        for j in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for k in 0..n {
                if k != j {
                    denom *= roots[j] - roots[k];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let step = eval(roots[j]) / denom;
            roots[j] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    let mut roots: Vec<Complex64> = roots.into_iter().map(|z| z * scale).collect();
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then_with(|| b.im.total_cmp(&a.im)));
    Ok(roots)
}
