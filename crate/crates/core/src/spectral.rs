//! Spectra, spectral projectors, eigenvalue labeling, and diagonalization of
//! lattice-commuting operators, all computed fiberwise.
//!
//! The spectrum of such an operator is the union of its per-point spectra.
//! For a normal operator the per-point eigenvalues can be organized into
//! finitely many label functions over the fundamental domain, pairwise
//! distinct at every point; the inverse lattice Fourier transforms of those
//! labels are the sequences whose multiplier operators diagonalize the
//! original operator over the lattice.

use num_complex::Complex64;

use crate::group::{inverse_lattice_fourier, lattice_fourier, LatticeSequence};
use crate::linalg::{
    adjoint, cluster_eigenvalues, general_eigenvalues, kernel_basis, max_abs, max_abs_diff,
    normal_eig, spectral_norm, CMat, CVec, Cluster, EigDecomp, OrthoBasis,
};
use crate::sis::{from_range, RangeFunction, SISpace};
use crate::spop::{assemble_dense, from_range_operator, SPOperator};
use crate::{par, tol, Error, Result};

/// Finite spectrum with per-value provenance: which fundamental-domain points
/// contribute each value.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    pub provenance: Vec<Vec<usize>>,
    /// Set when some fiber failed the normality gate; the values are then the
    /// union of numerically computed eigenvalues without the spectral-equality
    /// guarantee.
    pub non_normal_caveat: bool,
}

/// Closed region of the complex plane for spectral projections.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Disc { center: Complex64, radius: f64 },
    Rect { re_min: f64, re_max: f64, im_min: f64, im_max: f64 },
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::Disc { center, radius } => (z - center).norm() <= radius,
            Region::Rect { re_min, re_max, im_min, im_max } => {
                z.re >= re_min && z.re <= re_max && z.im >= im_min && z.im <= im_max
            }
        }
    }

    /// Distance from `z` to the region's boundary curve.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        match *self {
            Region::Disc { center, radius } => ((z - center).norm() - radius).abs(),
            Region::Rect { re_min, re_max, im_min, im_max } => {
                let dx = if z.re < re_min {
                    re_min - z.re
                } else if z.re > re_max {
                    z.re - re_max
                } else {
                    0.0
                };
                let dy = if z.im < im_min {
                    im_min - z.im
                } else if z.im > im_max {
                    z.im - im_max
                } else {
                    0.0
                };
                if dx > 0.0 || dy > 0.0 {
                    (dx * dx + dy * dy).sqrt()
                } else {
                    (z.re - re_min)
                        .min(re_max - z.re)
                        .min(z.im - im_min)
                        .min(im_max - z.im)
                }
            }
        }
    }
}

/// Eigenvalue label functions over the fundamental domain.
///
/// `labels[j]` is the `j`-th function; slots beyond a point's eigenvalue
/// count are padded with the real value `z0 + (j + 1)`, which lies strictly
/// outside every fiber's spectral disc, so padded values never acquire
/// kernel. `real[j][w]` distinguishes actual eigenvalues from padding;
/// `kept[j]` records whether function `j` is an eigenvalue somewhere.
#[derive(Debug, Clone)]
pub struct EigenLabeling {
    pub labels: Vec<CVec>,
    pub real: Vec<Vec<bool>>,
    pub kept: Vec<bool>,
    pub z0: f64,
}

/// A lattice sequence that is an eigenvalue of an operator: the multiplier
/// equation `L f = Lambda_a f` has the nonzero solution space `space`.
#[derive(Debug, Clone)]
pub struct DeltaEigenpair {
    pub a: LatticeSequence,
    pub a_hat: CVec,
    pub space: SISpace,
}

/// Orthogonal eigenspace decomposition `V = sum of V_{a_j}` together with the
/// residuals of its defining identities.
#[derive(Debug, Clone)]
pub struct Diagonalization {
    pub pairs: Vec<DeltaEigenpair>,
    pub recon_residual: f64,
    pub orth_residual: f64,
}

/// Per-point eigenstructure of a normal operator: one decomposition and one
/// ordered eigenvalue clustering per fundamental-domain point.
pub(crate) struct FiberEigen {
    pub(crate) eig: EigDecomp,
    pub(crate) clusters: Vec<Cluster>,
}

pub(crate) fn fiber_eigendata(op: &SPOperator, eps_eig: f64) -> Result<Vec<FiberEigen>> {
    let n = op.blocks().len();
    par::map_indexed(n, |w| -> Result<FiberEigen> {
        let eig = normal_eig(&op.blocks()[w], eps_eig)?;
        let mut clusters = cluster_eigenvalues(&eig.values, eps_eig);
        clusters.sort_by(|a, b| (b.value.re, b.value.im).partial_cmp(&(a.value.re, a.value.im)).unwrap());
        Ok(FiberEigen { eig, clusters })
    })
    .into_iter()
    .collect()
}

/// Union of the per-point spectra, deduplicated within `eps_eig`, sorted by
/// (Re, Im) descending. Non-normal fibers fall back to characteristic-
/// polynomial roots and set the caveat flag.
pub fn operator_spectrum(op: &SPOperator, eps_eig: f64) -> Result<Spectrum> {
    let n = op.blocks().len();
    let per_point: Vec<Result<(Vec<Complex64>, bool)>> = par::map_indexed(n, |w| {
        let m = &op.blocks()[w];
        match normal_eig(m, eps_eig) {
            Ok(e) => Ok((e.values, false)),
            Err(Error::NotNormal { .. }) => Ok((general_eigenvalues(m)?, true)),
            Err(e) => Err(e),
        }
    });
    let mut pooled: Vec<Complex64> = Vec::new();
    let mut owners: Vec<usize> = Vec::new();
    let mut caveat = false;
    for (w, r) in per_point.into_iter().enumerate() {
        let (vals, non_normal) = r?;
        caveat |= non_normal;
        for v in vals {
            pooled.push(v);
            owners.push(w);
        }
    }
    let mut clusters = cluster_eigenvalues(&pooled, eps_eig);
    clusters.sort_by(|a, b| (b.value.re, b.value.im).partial_cmp(&(a.value.re, a.value.im)).unwrap());
    let mut values = Vec::with_capacity(clusters.len());
    let mut provenance = Vec::with_capacity(clusters.len());
    for c in clusters {
        values.push(c.value);
        let mut ws: Vec<usize> = c.members.iter().map(|&i| owners[i]).collect();
        ws.sort_unstable();
        ws.dedup();
        provenance.push(ws);
    }
    Ok(Spectrum { values, provenance, non_normal_caveat: caveat })
}

/// Spectral projector of a normal operator onto `region`: per point, the sum
/// of the eigenprojectors whose eigenvalue lies inside. Every computed
/// eigenvalue must stay at least `eps_eig` away from the region boundary.
pub fn spectral_projector(op: &SPOperator, region: &Region, eps_eig: f64) -> Result<SPOperator> {
    let data = fiber_eigendata(op, eps_eig)?;
    for fe in &data {
        for c in &fe.clusters {
            let dist = region.boundary_distance(c.value);
            if dist < eps_eig {
                return Err(Error::boundary(c.value, dist));
            }
        }
    }
    let mats: Vec<CMat> = data
        .iter()
        .map(|fe| {
            let nw = fe.eig.vectors.nrows();
            let mut p = CMat::zeros((nw, nw));
            for c in &fe.clusters {
                if !region.contains(c.value) {
                    continue;
                }
                for &j in &c.members {
                    let col = fe.eig.vectors.column(j);
                    for r in 0..nw {
                        for s in 0..nw {
                            p[(r, s)] += col[r] * col[s].conj();
                        }
                    }
                }
            }
            p
        })
        .collect();
    from_range_operator(op.space(), mats)
}

pub(crate) fn labeling_from(data: &[FiberEigen], norm: f64) -> EigenLabeling {
    let n = data.len();
    let jmax = data.iter().map(|fe| fe.clusters.len()).max().unwrap_or(0);
    let z0 = norm.ceil() + 1.0;
    let mut labels = Vec::with_capacity(jmax);
    let mut real = Vec::with_capacity(jmax);
    let mut kept = Vec::with_capacity(jmax);
    for j in 0..jmax {
        let mut lab = CVec::zeros(n);
        let mut re = vec![false; n];
        for (w, fe) in data.iter().enumerate() {
            if j < fe.clusters.len() {
                lab[w] = fe.clusters[j].value;
                re[w] = true;
            } else {
                lab[w] = Complex64::new(z0 + (j + 1) as f64, 0.0);
            }
        }
        kept.push(re.iter().any(|&b| b));
        labels.push(lab);
        real.push(re);
    }
    EigenLabeling { labels, real, kept, z0 }
}

/// Organize the per-point eigenvalues of a normal operator into label
/// functions, pairwise distinct at every point, padding the unused slots of
/// each point with values beyond its spectral radius.
pub fn label_eigenvalues(op: &SPOperator, eps_eig: f64) -> Result<EigenLabeling> {
    let data = fiber_eigendata(op, eps_eig)?;
    Ok(labeling_from(&data, op.norm()))
}

/// Solution space of `L f = Lambda_a f`, assembled from per-point numerical
/// kernels of `O(w) - a_hat(w) I`. Returns `None` when every kernel is zero
/// (the sequence is not an eigenvalue). A nonzero kernel at `w` certifies
/// that `a_hat(w)` is a point eigenvalue of `O(w)` to within the kernel
/// tolerance, which realizes the membership condition on the solution
/// space's spectrum.
pub fn delta_eigenspace(
    op: &SPOperator,
    a: &LatticeSequence,
    eps_eig: f64,
) -> Result<Option<DeltaEigenpair>> {
    let spec = op.spec();
    let a_hat = lattice_fourier(spec, a)?;
    let bases: Vec<OrthoBasis> = par::map_indexed(spec.n_omega(), |w| {
        let m = op.blocks()[w].clone();
        let nw = m.nrows();
        let shifted = &m - &(crate::linalg::identity(nw).mapv(|z| z * a_hat[w]));
        let cut = eps_eig * (1.0 + spectral_norm(&m) + a_hat[w].norm());
        let k = kernel_basis(&shifted, cut);
        let b = &op.space().range.bases[w].basis;
        let amb = b.dot(&k);
        let rank = amb.ncols();
        OrthoBasis { basis: amb, singular_values: vec![1.0; rank], eps_rank: tol::EPS_RANK }
    });
    if bases.iter().all(|b| b.rank() == 0) {
        return Ok(None);
    }
    let range = RangeFunction::new(spec, bases)?;
    Ok(Some(DeltaEigenpair { a: a.clone(), a_hat, space: from_range(range) }))
}

/// Diagonalize a normal operator over the lattice: label the per-point
/// eigenvalues, pull each label back to a lattice sequence, and collect the
/// corresponding eigenspaces. The eigenspace dimensions sum to the domain
/// dimension exactly (the per-point clusters partition each fiber basis);
/// pairwise orthogonality and the dense reconstruction
/// `L = sum_j Lambda_{a_j} P_j` are verified and their residuals stored.
pub fn delta_diagonalize(op: &SPOperator, eps_eig: f64) -> Result<Diagonalization> {
    let spec = op.spec();
    let data = fiber_eigendata(op, eps_eig)?;
    let labeling = labeling_from(&data, op.norm());
    let mut seqs = Vec::with_capacity(labeling.labels.len());
    for lab in &labeling.labels {
        seqs.push(inverse_lattice_fourier(spec, lab)?);
    }
    assemble_from_labels(op, &data, &labeling.labels, seqs, eps_eig)
}

/// Shared eigenspace-assembly engine: given the per-point eigendata and one
/// label function per slot, match every eigenvalue cluster to its nearest
/// label, build the per-label eigenspaces, and verify the decomposition
/// (exact dimension count, orthogonality, dense reconstruction).
pub(crate) fn assemble_from_labels(
    op: &SPOperator,
    data: &[FiberEigen],
    labels: &[CVec],
    seqs: Vec<LatticeSequence>,
    eps_eig: f64,
) -> Result<Diagonalization> {
    let spec = op.spec();
    let d = spec.fiber_dim();
    let jmax = labels.len();
    let match_tol = 1e3 * eps_eig * (1.0 + op.norm());

    // members[j][w]: eigenvector column indices assigned to label j at w.
    let mut members: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); data.len()]; jmax];
    for (w, fe) in data.iter().enumerate() {
        for c in &fe.clusters {
            let (best, dist) = (0..jmax)
                .map(|j| (j, (labels[j][w] - c.value).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least one label when clusters exist");
            if dist > match_tol {
                return Err(Error::Inconsistent {
                    what: "eigenvalue-to-label matching",
                    residual: dist,
                });
            }
            members[best][w].extend_from_slice(&c.members);
        }
    }

    let mut pairs = Vec::with_capacity(jmax);
    for (j, seq) in seqs.into_iter().enumerate() {
        let bases: Vec<OrthoBasis> = (0..data.len())
            .map(|w| {
                let cols = &members[j][w];
                let b = &op.space().range.bases[w].basis;
                let mut amb = CMat::zeros((d, cols.len()));
                for (i, &cidx) in cols.iter().enumerate() {
                    let v = b.dot(&data[w].eig.vectors.column(cidx).to_owned());
                    for u in 0..d {
                        amb[(u, i)] = v[u];
                    }
                }
                OrthoBasis {
                    basis: amb,
                    singular_values: vec![1.0; cols.len()],
                    eps_rank: tol::EPS_RANK,
                }
            })
            .collect();
        let range = RangeFunction::new(spec, bases)?;
        pairs.push(DeltaEigenpair { a: seq, a_hat: labels[j].clone(), space: from_range(range) });
    }

    let total: usize = pairs.iter().map(|p| p.space.dim_total()).sum();
    if total != op.space().dim_total() {
        return Err(Error::Inconsistent {
            what: "eigenspace dimension count",
            residual: (total as f64 - op.space().dim_total() as f64).abs(),
        });
    }

    let mut orth = 0.0f64;
    for w in 0..spec.n_omega() {
        for i in 0..pairs.len() {
            for j in (i + 1)..pairs.len() {
                let bi = &pairs[i].space.range.bases[w].basis;
                let bj = &pairs[j].space.range.bases[w].basis;
                if bi.ncols() == 0 || bj.ncols() == 0 {
                    continue;
                }
                orth = orth.max(max_abs(&adjoint(bi).dot(bj)));
            }
        }
    }

    let blocks: Vec<CMat> = (0..spec.n_omega())
        .map(|w| {
            let mut r = CMat::zeros((d, d));
            for p in pairs.iter() {
                let b = &p.space.range.bases[w].basis;
                if b.ncols() == 0 {
                    continue;
                }
                let proj = b.dot(&adjoint(b));
                r = r + proj.mapv(|z| z * p.a_hat[w]);
            }
            r
        })
        .collect();
    let recon = assemble_dense(spec, &blocks);
    let dense = op.dense_matrix();
    let recon_residual = max_abs_diff(&recon, &dense);
    let bound = tol::RECONSTRUCTION * (1.0 + max_abs(&dense));
    if recon_residual > bound {
        return Err(Error::Inconsistent {
            what: "diagonalization reconstruction",
            residual: recon_residual,
        });
    }
    if orth > tol::ORTHOGONALITY {
        return Err(Error::Inconsistent { what: "eigenspace orthogonality", residual: orth });
    }

    Ok(Diagonalization { pairs, recon_residual, orth_residual: orth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_group_spec, GroupSpec};
    use crate::linalg::{hermitian_eig, identity, orthonormal_range};
    use crate::sis::SISpace;
    use crate::spop::{dense_translate, to_range_operator};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
        let one_way = |xs: &[Complex64], ys: &[Complex64]| {
            xs.iter()
                .map(|x| ys.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        one_way(a, b).max(one_way(b, a))
    }

    fn t2_operator() -> (Arc<GroupSpec>, SPOperator) {
        let spec = build_group_spec(&[8], &[2]).unwrap();
        let v = SISpace::full(&spec);
        let op = to_range_operator(&dense_translate(&spec, &[2]), &v).unwrap();
        (spec, op)
    }

    fn random_space(spec: &Arc<GroupSpec>, max_dim: usize, rng: &mut ChaCha8Rng) -> SISpace {
        let d = spec.fiber_dim();
        let bases: Vec<OrthoBasis> = (0..spec.n_omega())
            .map(|_| {
                let n = rng.gen_range(0..=max_dim.min(d));
                let g =
                    CMat::from_shape_fn((d, n), |_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
                orthonormal_range(&g, tol::EPS_RANK)
            })
            .collect();
        from_range(RangeFunction::new(spec, bases).unwrap())
    }

    fn random_normal_op(v: &SISpace, rng: &mut ChaCha8Rng) -> SPOperator {
        let mats: Vec<CMat> = v
            .dims()
            .iter()
            .map(|&nw| {
                let g = CMat::from_shape_fn((nw, nw), |_| {
                    c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                });
                let q = orthonormal_range(&g, 1e-13).basis;
                let mut m = CMat::zeros((nw, nw));
                for j in 0..nw {
                    let ev = c(
                        rng.gen_range(-5i32..=5) as f64 / 8.0,
                        rng.gen_range(-5i32..=5) as f64 / 8.0,
                    );
                    let col = q.column(j).to_owned();
                    for p in 0..nw {
                        for qq in 0..nw {
                            m[(p, qq)] += ev * col[p] * col[qq].conj();
                        }
                    }
                }
                m
            })
            .collect();
        from_range_operator(v, mats).unwrap()
    }

    #[test]
    fn spectrum_of_translation_is_four_roots_of_unity() {
        let (_, op) = t2_operator();
        let sp = operator_spectrum(&op, tol::EPS_EIG).unwrap();
        assert!(!sp.non_normal_caveat);
        let expect = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(-1.0, 0.0)];
        assert_eq!(sp.values.len(), 4);
        assert!(hausdorff(&sp.values, &expect) <= 1e-12);
        // Each point contributes exactly one root: 1 from 0, -i from 1, ...
        for (val, ws) in sp.values.iter().zip(&sp.provenance) {
            assert_eq!(ws.len(), 1);
            let w = ws[0] as f64;
            let expected = c(0.0, -std::f64::consts::PI * w / 2.0).exp();
            assert!((val - expected).norm() <= 1e-12);
        }

        // Identity: single value 1 contributed by every point.
        let spec = build_group_spec(&[8], &[2]).unwrap();
        let v = SISpace::full(&spec);
        let id = to_range_operator(&identity(8), &v).unwrap();
        let sp = operator_spectrum(&id, tol::EPS_EIG).unwrap();
        assert_eq!(sp.values.len(), 1);
        assert!((sp.values[0] - c(1.0, 0.0)).norm() <= 1e-12);
        assert_eq!(sp.provenance[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn spectrum_matches_dense_eigenvalues_for_random_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let spec = build_group_spec(&[12], &[3]).unwrap();
        let v = SISpace::full(&spec);
        let op = random_normal_op(&v, &mut rng);
        let sp = operator_spectrum(&op, tol::EPS_EIG).unwrap();
        assert!(!sp.non_normal_caveat);
        let dense = op.dense_matrix();
        let eig = normal_eig(&dense, tol::EPS_EIG).unwrap();
        let clusters = cluster_eigenvalues(&eig.values, tol::EPS_EIG);
        let dense_vals: Vec<Complex64> = clusters.into_iter().map(|cl| cl.value).collect();
        assert!(hausdorff(&sp.values, &dense_vals) <= 1e-8);
    }

    #[test]
    fn spectrum_flags_non_normal_fibers() {
        let spec = build_group_spec(&[8], &[2]).unwrap();
        let v = SISpace::full(&spec);
        let mats: Vec<CMat> = (0..4)
            .map(|_| CMat::from_shape_fn((2, 2), |(i, j)| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) }))
            .collect();
        let op = from_range_operator(&v, mats).unwrap();
        let sp = operator_spectrum(&op, tol::EPS_EIG).unwrap();
        assert!(sp.non_normal_caveat);
        assert_eq!(sp.values.len(), 1);
        assert!(sp.values[0].norm() <= 1e-7);
    }

    #[test]
    fn region_membership_and_boundary_distance() {
        let disc = Region::Disc { center: c(1.0, 0.0), radius: 0.5 };
        assert!(disc.contains(c(1.2, 0.1)));
        assert!(!disc.contains(c(0.0, 0.0)));
        assert!((disc.boundary_distance(c(1.0, 0.0)) - 0.5).abs() <= 1e-15);
        assert!((disc.boundary_distance(c(2.0, 0.0)) - 0.5).abs() <= 1e-15);

        let rect = Region::Rect { re_min: 0.0, re_max: 2.0, im_min: -1.0, im_max: 1.0 };
        assert!(rect.contains(c(1.0, 0.0)));
        assert!(!rect.contains(c(3.0, 0.0)));
        assert!((rect.boundary_distance(c(1.0, 0.0)) - 1.0).abs() <= 1e-15);
        assert!((rect.boundary_distance(c(0.25, 0.0)) - 0.25).abs() <= 1e-15);
        assert!((rect.boundary_distance(c(3.0, 2.0)) - 2f64.sqrt()).abs() <= 1e-15);
    }

    #[test]
    fn projector_onto_translation_eigenvalue_one() {
        let (spec, op) = t2_operator();
        let region = Region::Disc { center: c(1.0, 0.0), radius: 0.1 };
        let p = spectral_projector(&op, &region, tol::EPS_EIG).unwrap();

        // Rank 2, supported on the point 0 only.
        let dims: Vec<usize> = p.blocks().iter().map(|m| {
            let e = hermitian_eig(m).0;
            e.into_iter().filter(|&x| x > 0.5).count()
        }).collect();
        assert_eq!(dims, vec![2, 0, 0, 0]);

        // Dense oracle: spectral projector of the dense translation matrix.
        let dense = dense_translate(&spec, &[2]);
        let eig = normal_eig(&dense, tol::EPS_EIG).unwrap();
        let mut oracle = CMat::zeros((8, 8));
        for (j, val) in eig.values.iter().enumerate() {
            if region.contains(*val) {
                let col = eig.vectors.column(j).to_owned();
                for r in 0..8 {
                    for s in 0..8 {
                        oracle[(r, s)] += col[r] * col[s].conj();
                    }
                }
            }
        }
        assert!(max_abs_diff(p.dense.as_ref().unwrap(), &oracle) <= 1e-9);

        // Projector identities and commutation.
        let pd = p.dense.as_ref().unwrap();
        assert!(max_abs_diff(&pd.dot(pd), pd) <= 1e-9);
        assert!(max_abs_diff(&adjoint(pd), pd) <= 1e-9);
        assert!(max_abs_diff(&pd.dot(&dense), &dense.dot(pd)) <= 1e-9);
    }

    #[test]
    fn projector_total_and_empty_regions() {
        let (_, op) = t2_operator();
        let all = Region::Disc { center: c(0.0, 0.0), radius: 10.0 };
        let p = spectral_projector(&op, &all, tol::EPS_EIG).unwrap();
        assert!(max_abs_diff(p.dense.as_ref().unwrap(), &identity(8)) <= 1e-9);

        let none = Region::Disc { center: c(5.0, 0.0), radius: 0.5 };
        let p = spectral_projector(&op, &none, tol::EPS_EIG).unwrap();
        assert!(max_abs(p.dense.as_ref().unwrap()) <= 1e-12);
    }

    #[test]
    fn projector_rejects_boundary_collisions_and_non_normal() {
        let (_, op) = t2_operator();
        // All four eigenvalues sit exactly on the unit circle.
        let unit = Region::Disc { center: c(0.0, 0.0), radius: 1.0 };
        assert!(matches!(
            spectral_projector(&op, &unit, tol::EPS_EIG),
            Err(Error::BoundaryCollision { .. })
        ));

        let spec = build_group_spec(&[8], &[2]).unwrap();
        let v = SISpace::full(&spec);
        let mats: Vec<CMat> = (0..4)
            .map(|_| CMat::from_shape_fn((2, 2), |(i, j)| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) }))
            .collect();
        let nn = from_range_operator(&v, mats).unwrap();
        let any = Region::Disc { center: c(0.0, 0.0), radius: 3.0 };
        assert!(matches!(spectral_projector(&nn, &any, tol::EPS_EIG), Err(Error::NotNormal { .. })));
    }

    #[test]
    fn labeling_of_scalar_fibers_has_no_padding() {
        let (_, op) = t2_operator();
        let lab = label_eigenvalues(&op, tol::EPS_EIG).unwrap();
        assert_eq!(lab.labels.len(), 1);
        assert!(lab.kept[0]);
        for w in 0..4 {
            assert!(lab.real[0][w]);
            let expect = c(0.0, -std::f64::consts::PI * w as f64 / 2.0).exp();
            assert!((lab.labels[0][w] - expect).norm() <= 1e-12);
        }
    }

    #[test]
    fn labeling_pads_points_with_fewer_eigenvalues() {
        // Two eigenvalues on points {0, 1}, one (doubled) on {2, 3}; norm 1/2
        // so the padding base is ceil(1/2) + 1 = 2 and slot 2 pads with 4.
        let spec = build_group_spec(&[8], &[2]).unwrap();
        let v = SISpace::full(&spec);
        let mats: Vec<CMat> = (0..4)
            .map(|w| {
                let lo = if w < 2 { -0.5 } else { 0.5 };
                CMat::from_shape_fn((2, 2), |(i, j)| {
                    if i != j {
                        c(0.0, 0.0)
                    } else if i == 0 {
                        c(0.5, 0.0)
                    } else {
                        c(lo, 0.0)
                    }
                })
            })
            .collect();
        let op = from_range_operator(&v, mats).unwrap();
        let lab = label_eigenvalues(&op, tol::EPS_EIG).unwrap();
        assert_eq!(lab.labels.len(), 2);
        assert_eq!(lab.z0, 2.0);
        assert!(lab.kept[0] && lab.kept[1]);
        for w in 0..2 {
            assert!(lab.real[1][w]);
            assert!((lab.labels[1][w] - c(-0.5, 0.0)).norm() <= 1e-12);
        }
        for w in 2..4 {
            assert!(!lab.real[1][w]);
            assert!((lab.labels[1][w] - c(4.0, 0.0)).norm() <= 1e-15);
        }
        // Pointwise distinctness, exactly.
        for w in 0..4 {
            assert!(lab.labels[0][w] != lab.labels[1][w]);
        }

        // Zero operator: one label, identically zero.
        let zmats: Vec<CMat> = (0..4).map(|_| CMat::zeros((2, 2))).collect();
        let zop = from_range_operator(&v, zmats).unwrap();
        let zlab = label_eigenvalues(&zop, tol::EPS_EIG).unwrap();
        assert_eq!(zlab.labels.len(), 1);
        assert!(zlab.labels[0].iter().all(|z| z.norm() <= 1e-15));
    }

    #[test]
    fn eigenspace_of_translation_sequences() {
        let (spec, op) = t2_operator();

        // The defining sequence itself: everything is an eigenvector.
        let a = LatticeSequence::delta(&spec, &[2]);
        let pair = delta_eigenspace(&op, &a, tol::EPS_EIG).unwrap().unwrap();
        assert_eq!(pair.space.dim_total(), 8);

        // Constant symbol 1: solutions of T_2 f = f are supported on point 0.
        let a0 = LatticeSequence::delta(&spec, &[0]);
        let pair = delta_eigenspace(&op, &a0, tol::EPS_EIG).unwrap().unwrap();
        assert_eq!(pair.space.dims(), vec![2, 0, 0, 0]);
        // Dense oracle: kernel of T_2 - I has dimension 2 (period-2 signals).
        let dense = dense_translate(&spec, &[2]);
        let k = kernel_basis(&(&dense - &identity(8)), 1e-10);
        assert_eq!(k.ncols(), 2);

        // Constant symbol 5: off the spectrum entirely.
        let mut a5 = LatticeSequence::zeros(&spec);
        a5.values[0] = c(5.0, 0.0);
        assert!(delta_eigenspace(&op, &a5, tol::EPS_EIG).unwrap().is_none());
    }

    #[test]
    fn diagonalize_translation_recovers_point_mass() {
        let (spec, op) = t2_operator();
        let diag = delta_diagonalize(&op, tol::EPS_EIG).unwrap();
        assert_eq!(diag.pairs.len(), 1);
        assert!(diag.recon_residual <= 1e-12);
        assert_eq!(diag.pairs[0].space.dim_total(), 8);
        // The recovered sequence is the point mass at the lattice point 2.
        let a = &diag.pairs[0].a;
        let expect = LatticeSequence::delta(&spec, &[2]);
        for (x, y) in a.values.iter().zip(expect.values.iter()) {
            assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn diagonalize_projector_splits_into_zero_and_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let spec = build_group_spec(&[8], &[2]).unwrap();
        let full = SISpace::full(&spec);
        let sub = random_space(&spec, 1, &mut rng);
        let mats: Vec<CMat> = (0..4).map(|w| sub.range.bases[w].projector()).collect();
        let p = from_range_operator(&full, mats).unwrap();
        let diag = delta_diagonalize(&p, tol::EPS_EIG).unwrap();
        let total: usize = diag.pairs.iter().map(|pr| pr.space.dim_total()).sum();
        assert_eq!(total, 8);
        for pr in &diag.pairs {
            for w in 0..4 {
                let v = pr.a_hat[w];
                let is_padding = v.re > 1.5;
                assert!(
                    is_padding || v.norm() <= 1e-9 || (v - c(1.0, 0.0)).norm() <= 1e-9,
                    "unexpected label {v}"
                );
            }
        }
    }

    #[test]
    fn diagonalize_random_normal_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let spec = build_group_spec(&[12], &[3]).unwrap();
        let v = random_space(&spec, 3, &mut rng);
        let op = random_normal_op(&v, &mut rng);
        let diag = delta_diagonalize(&op, tol::EPS_EIG).unwrap();
        let total: usize = diag.pairs.iter().map(|p| p.space.dim_total()).sum();
        assert_eq!(total, v.dim_total());
        assert!(diag.orth_residual <= 1e-9);
        assert!(diag.recon_residual <= 1e-8 * (1.0 + max_abs(&op.dense_matrix())));

        // Every per-point eigenvalue is covered by some kept label.
        let lab = label_eigenvalues(&op, tol::EPS_EIG).unwrap();
        for w in 0..spec.n_omega() {
            let eig = normal_eig(&op.blocks()[w], tol::EPS_EIG).unwrap();
            for val in &eig.values {
                let near = lab
                    .labels
                    .iter()
                    .zip(&lab.kept)
                    .filter(|(_, &k)| k)
                    .any(|(l, _)| (l[w] - val).norm() <= 10.0 * tol::EPS_EIG);
                assert!(near, "eigenvalue {val} at point {w} not covered");
            }
        }
    }

    #[test]
    fn diagonalize_rejects_non_normal() {
        let spec = build_group_spec(&[8], &[2]).unwrap();
        let v = SISpace::full(&spec);
        let mats: Vec<CMat> = (0..4)
            .map(|_| CMat::from_shape_fn((2, 2), |(i, j)| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) }))
            .collect();
        let op = from_range_operator(&v, mats).unwrap();
        assert!(matches!(delta_diagonalize(&op, tol::EPS_EIG), Err(Error::NotNormal { .. })));
    }
}
