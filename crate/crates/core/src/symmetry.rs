//! Point-symmetry groups on top of the lattice: integer matrix actions that
//! preserve the group and the lattice, their dual and quotient actions, the
//! induced fiber permutations, and symmetry-aware invariance, preservation,
//! and diagonalization.
//!
//! An element `g` acts on points by `x -> g x (mod n_i per row)`. Its dual
//! `g*` acts on frequencies by the weighted transpose `(g*)_{ji} =
//! g_{ij} n_j / n_i`, so that the pairing satisfies `<g* xi, x> = <xi, g x>`.
//! The dual action descends to the fundamental domain as `g# w = q(g* w)`
//! with offset `nu = q(g* w) - g* w` lying in the annihilator; reading fibers
//! along `g*` gives, per domain point, an exact permutation `pi^w(g)` of the
//! annihilator coordinates, satisfying the cocycle identity
//! `pi^w(g1 g2) = pi^w(g1) pi^{g1# w}(g2)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::fiber::FiberedSignal;
use crate::group::{inverse_lattice_fourier, lattice_fourier, GroupSpec, LatticeSequence, Signal};
use crate::linalg::{
    general_eigenvalues, max_abs, normal_eig, spectral_norm, CMat, CVec,
};
use crate::sis::{range_from_generators, SISpace};
use crate::spectral::{assemble_from_labels, fiber_eigendata, labeling_from, Diagonalization};
use crate::spop::SPOperator;
use crate::{tol, Error, Result};

/// A finite group of lattice-preserving automorphisms with all derived
/// tables: multiplication, inverses, duals, the quotient action and its
/// annihilator offsets, fiber permutations, orbits, and a selector.
#[derive(Debug, Clone)]
pub struct AutomorphismAction {
    spec: Arc<GroupSpec>,
    /// Row-major r x r integer matrices, entries reduced mod the row modulus.
    /// Element 0 is the identity.
    elements: Vec<Vec<i64>>,
    mul_table: Vec<Vec<usize>>,
    inv_table: Vec<usize>,
    /// Dual matrices, same storage; row `j` is reduced mod `n_j`.
    duals: Vec<Vec<i64>>,
    /// `sharp[g][w]` = index of `g# w`.
    sharp_table: Vec<Vec<usize>>,
    /// `nu[g][w]` = annihilator index of `q(g* w) - g* w`.
    nu_table: Vec<Vec<usize>>,
    /// `pi[g][w][u]` = source coordinate read into slot `u` by `pi^w(g)`.
    pi_tables: Vec<Vec<Vec<usize>>>,
    orbits: Vec<Vec<usize>>,
    selector_table: Vec<usize>,
}

fn mat_apply(mat: &[i64], r: usize, x: &[i64], moduli: &[i64]) -> Vec<i64> {
    (0..r)
        .map(|i| {
            let s: i64 = (0..r).map(|j| mat[i * r + j] * x[j]).sum();
            s.rem_euclid(moduli[i])
        })
        .collect()
}

fn mat_mul(a: &[i64], b: &[i64], r: usize, moduli: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; r * r];
    for i in 0..r {
        for j in 0..r {
            let s: i64 = (0..r).map(|k| a[i * r + k] * b[k * r + j]).sum();
            out[i * r + j] = s.rem_euclid(moduli[i]);
        }
    }
    out
}

fn canonical(mat: &[i64], r: usize, moduli: &[i64]) -> Vec<i64> {
    let mut out = mat.to_vec();
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = out[i * r + j].rem_euclid(moduli[i]);
        }
    }
    out
}

impl AutomorphismAction {
    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    /// Number of group elements.
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Index of the identity element.
    pub fn identity(&self) -> usize {
        0
    }

    pub fn element(&self, g: usize) -> &[i64] {
        &self.elements[g]
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mul_table[g][h]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inv_table[g]
    }

    /// Act on a point: `g x` mod moduli.
    pub fn apply(&self, g: usize, x: &[i64]) -> Vec<i64> {
        mat_apply(&self.elements[g], self.spec.rank(), x, self.spec.moduli())
    }

    /// Dual action on a frequency: `g* xi` mod moduli.
    pub fn apply_dual(&self, g: usize, xi: &[i64]) -> Vec<i64> {
        mat_apply(&self.duals[g], self.spec.rank(), xi, self.spec.moduli())
    }

    /// Quotient action on the fundamental domain.
    pub fn sharp(&self, g: usize, w: usize) -> usize {
        self.sharp_table[g][w]
    }

    /// Annihilator offset of `g* w`, as an index.
    pub fn nu_index(&self, g: usize, w: usize) -> usize {
        self.nu_table[g][w]
    }

    /// Annihilator offset of `g* w`, as a point.
    pub fn nu_point(&self, g: usize, w: usize) -> Vec<i64> {
        self.spec.annihilator_point(self.nu_table[g][w])
    }

    /// Fiber permutation at `(w, g)`: slot `u` of the output reads slot
    /// `table[u]` of the input fiber (which lives at `g# w`).
    pub fn pi_table(&self, w: usize, g: usize) -> &[usize] {
        &self.pi_tables[g][w]
    }

    /// The fiber permutation as a 0/1 matrix.
    pub fn pi_matrix(&self, w: usize, g: usize) -> CMat {
        let d = self.spec.fiber_dim();
        let mut m = CMat::zeros((d, d));
        for u in 0..d {
            m[(u, self.pi_tables[g][w][u])] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Orbit partition of the fundamental domain under the quotient action.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    /// Smallest domain index in the orbit of `w`.
    pub fn selector(&self, w: usize) -> usize {
        self.selector_table[w]
    }

    /// Sorted orbit representatives.
    pub fn transversal(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.orbits.iter().map(|o| o[0]).collect();
        t.sort_unstable();
        t
    }

    /// Elements fixing `w` under the quotient action.
    pub fn stabilizer(&self, w: usize) -> Vec<usize> {
        (0..self.order()).filter(|&g| self.sharp_table[g][w] == w).collect()
    }
}

fn validate_generator(spec: &GroupSpec, mat: &[i64]) -> Result<()> {
    let r = spec.rank();
    if mat.len() != r * r {
        return Err(Error::InvalidGenerator { reason: "matrix is not rank x rank".into() });
    }
    // Well-definedness on mixed moduli: entry (i, j) must send multiples of
    // n_j to multiples of n_i, i.e. n_i divides g_ij * n_j.
    for i in 0..r {
        for j in 0..r {
            if (mat[i * r + j] * spec.moduli()[j]).rem_euclid(spec.moduli()[i]) != 0 {
                return Err(Error::InvalidGenerator {
                    reason: format!(
                        "entry ({i}, {j}) is not well defined modulo the moduli"
                    ),
                });
            }
        }
    }
    // Bijectivity on the whole group.
    let mut seen = vec![false; spec.size()];
    for idx in 0..spec.size() {
        let y = mat_apply(mat, r, &spec.group_point(idx), spec.moduli());
        let yi = spec.group_index(&y);
        if seen[yi] {
            return Err(Error::InvalidGenerator { reason: "matrix is not invertible".into() });
        }
        seen[yi] = true;
    }
    // Lattice preservation: images of the lattice basis stay in the lattice.
    for j in 0..r {
        let mut e = vec![0i64; r];
        e[j] = spec.divisors()[j];
        let y = mat_apply(mat, r, &e, spec.moduli());
        for i in 0..r {
            if y[i].rem_euclid(spec.divisors()[i]) != 0 {
                return Err(Error::InvalidGenerator {
                    reason: "matrix does not preserve the lattice".into(),
                });
            }
        }
    }
    Ok(())
}

/// Build the action generated by integer matrices: validate each generator
/// (well-defined, invertible, lattice-preserving), close under products (the
/// group order is capped), and populate every derived table.
pub fn build_action(spec: &Arc<GroupSpec>, generators: &[Vec<i64>]) -> Result<AutomorphismAction> {
    let r = spec.rank();
    let moduli = spec.moduli().to_vec();
    let mut id = vec![0i64; r * r];
    for i in 0..r {
        id[i * r + i] = 1;
    }

    let mut gens = Vec::with_capacity(generators.len());
    for m in generators {
        validate_generator(spec, m)?;
        gens.push(canonical(m, r, &moduli));
    }

    // Closure by right multiplication with generators (words in generators);
    // inverses appear automatically in a finite group.
    let mut elements: Vec<Vec<i64>> = vec![id.clone()];
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    index.insert(id, 0);
    let mut queue = vec![0usize];
    while let Some(gi) = queue.pop() {
        let g = elements[gi].clone();
        for h in &gens {
            let p = mat_mul(&g, h, r, &moduli);
            if !index.contains_key(&p) {
                if elements.len() >= tol::GROUP_ORDER_CAP {
                    return Err(Error::GroupTooLarge { cap: tol::GROUP_ORDER_CAP });
                }
                index.insert(p.clone(), elements.len());
                queue.push(elements.len());
                elements.push(p);
            }
        }
    }

    let n_el = elements.len();
    let mut mul_table = vec![vec![0usize; n_el]; n_el];
    for g in 0..n_el {
        for h in 0..n_el {
            let p = mat_mul(&elements[g], &elements[h], r, &moduli);
            mul_table[g][h] = *index.get(&p).expect("closure is complete");
        }
    }
    let inv_table: Vec<usize> = (0..n_el)
        .map(|g| (0..n_el).find(|&h| mul_table[g][h] == 0).expect("finite group"))
        .collect();

    // Duals: weighted transposes, reduced per target row.
    let duals: Vec<Vec<i64>> = elements
        .iter()
        .map(|m| {
            let mut d = vec![0i64; r * r];
            for j in 0..r {
                for i in 0..r {
                    let w = m[i * r + j] * moduli[j] / moduli[i];
                    d[j * r + i] = w.rem_euclid(moduli[j]);
                }
            }
            d
        })
        .collect();

    // Quotient action and annihilator offsets.
    let n_omega = spec.n_omega();
    let mut sharp_table = vec![vec![0usize; n_omega]; n_el];
    let mut nu_table = vec![vec![0usize; n_omega]; n_el];
    for g in 0..n_el {
        for w in 0..n_omega {
            let omega = spec.omega_point(w);
            let gw = mat_apply(&duals[g], r, &omega, &moduli);
            let q: Vec<i64> = gw.iter().zip(spec.quotients()).map(|(&x, &m)| x.rem_euclid(m)).collect();
            sharp_table[g][w] = spec.omega_index(&q);
            let nu: Vec<i64> = q
                .iter()
                .zip(gw.iter())
                .zip(moduli.iter())
                .map(|((&qi, &xi), &ni)| (qi - xi).rem_euclid(ni))
                .collect();
            nu_table[g][w] = spec.annihilator_index(&nu);
        }
    }
    for g in 0..n_el {
        let bij: std::collections::HashSet<usize> = sharp_table[g].iter().copied().collect();
        if bij.len() != n_omega {
            return Err(Error::InvalidGenerator {
                reason: "quotient action is not a bijection".into(),
            });
        }
    }

    // Fiber permutations: slot u reads g* l_u - nu.
    let d_dim = spec.fiber_dim();
    let mut pi_tables = vec![vec![vec![0usize; d_dim]; n_omega]; n_el];
    for g in 0..n_el {
        for w in 0..n_omega {
            let nu = spec.annihilator_point(nu_table[g][w]);
            for u in 0..d_dim {
                let l = spec.annihilator_point(u);
                let gl = mat_apply(&duals[g], r, &l, &moduli);
                let src: Vec<i64> = gl
                    .iter()
                    .zip(nu.iter())
                    .zip(moduli.iter())
                    .map(|((&a, &b), &ni)| (a - b).rem_euclid(ni))
                    .collect();
                pi_tables[g][w][u] = spec.annihilator_index(&src);
            }
            debug_assert!({
                let mut seen = vec![false; d_dim];
                pi_tables[g][w].iter().all(|&u| !std::mem::replace(&mut seen[u], true))
            });
        }
    }

    // Orbits under the quotient action; selector = least index per orbit.
    let mut orbit_of = vec![usize::MAX; n_omega];
    let mut orbits = Vec::new();
    for w in 0..n_omega {
        if orbit_of[w] != usize::MAX {
            continue;
        }
        let mut members: Vec<usize> = (0..n_el).map(|g| sharp_table[g][w]).collect();
        members.sort_unstable();
        members.dedup();
        for &m in &members {
            orbit_of[m] = orbits.len();
        }
        orbits.push(members);
    }
    let selector_table: Vec<usize> = (0..n_omega).map(|w| orbits[orbit_of[w]][0]).collect();

    Ok(AutomorphismAction {
        spec: Arc::clone(spec),
        elements,
        mul_table,
        inv_table,
        duals,
        sharp_table,
        nu_table,
        pi_tables,
        orbits,
        selector_table,
    })
}

/// Named planar symmetry groups. `p1` works in any rank; the others need
/// rank 2, and the quarter-turn groups additionally need equal moduli and
/// equal divisors on both axes.
pub fn preset_action(spec: &Arc<GroupSpec>, name: &str) -> Result<AutomorphismAction> {
    let r = spec.rank();
    let need_rank2 = |name: &str| -> Result<()> {
        if r != 2 {
            return Err(Error::InvalidInput(format!("preset {name} requires rank 2")));
        }
        Ok(())
    };
    let gens: Vec<Vec<i64>> = match name {
        "p1" => vec![],
        "p2" => {
            let mut m = vec![0i64; r * r];
            for i in 0..r {
                m[i * r + i] = -1;
            }
            vec![m]
        }
        "pm" => {
            need_rank2(name)?;
            vec![vec![1, 0, 0, -1]]
        }
        "p4" | "p4m" => {
            need_rank2(name)?;
            if spec.moduli()[0] != spec.moduli()[1] || spec.divisors()[0] != spec.divisors()[1] {
                return Err(Error::InvalidInput(format!(
                    "preset {name} requires equal moduli and equal divisors"
                )));
            }
            let rot = vec![0, -1, 1, 0];
            if name == "p4" {
                vec![rot]
            } else {
                vec![rot, vec![1, 0, 0, -1]]
            }
        }
        other => return Err(Error::InvalidInput(format!("unknown preset {other}"))),
    };
    build_action(spec, &gens)
}

/// Samples permuted by the inverse action: `(R_g f)(x) = f(g^{-1} x)`.
pub fn rotate_signal(action: &AutomorphismAction, g: usize, f: &Signal) -> Signal {
    let spec = action.spec();
    let gi = action.inverse(g);
    let mut out = CVec::zeros(spec.size());
    for x in 0..spec.size() {
        let src = action.apply(gi, &spec.group_point(x));
        out[x] = f.values[spec.group_index(&src)];
    }
    Signal { values: out }
}

/// Dense permutation matrix of [`rotate_signal`].
pub fn dense_rotation(action: &AutomorphismAction, g: usize) -> CMat {
    let spec = action.spec();
    let n = spec.size();
    let gi = action.inverse(g);
    let mut m = CMat::zeros((n, n));
    for x in 0..n {
        let src = action.apply(gi, &spec.group_point(x));
        m[(x, spec.group_index(&src))] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Apply the fiber permutation at one domain point.
pub fn pi_apply(action: &AutomorphismAction, w: usize, g: usize, v: &CVec) -> CVec {
    let tab = action.pi_table(w, g);
    CVec::from_iter(tab.iter().map(|&u| v[u]))
}

/// The fibered form of [`rotate_signal`]: output fiber at `w` is the
/// permuted input fiber at `g# w`.
pub fn big_pi_apply(action: &AutomorphismAction, g: usize, f: &FiberedSignal) -> FiberedSignal {
    let spec = action.spec();
    let fibers: Vec<CVec> = (0..spec.n_omega())
        .map(|w| pi_apply(action, w, g, &f.fibers[action.sharp(g, w)]))
        .collect();
    FiberedSignal::from_fibers(spec, fibers).expect("permutation preserves shapes")
}

/// Smallest symmetric invariant space containing the generators: close the
/// generator set under the whole group, then span.
pub fn gamma_closure(
    action: &AutomorphismAction,
    generators: &[Signal],
    eps_rank: f64,
) -> Result<SISpace> {
    let mut all = Vec::with_capacity(generators.len() * action.order());
    for f in generators {
        for g in 0..action.order() {
            all.push(rotate_signal(action, g, f));
        }
    }
    range_from_generators(action.spec(), &all, eps_rank)
}

/// Covariance report for a space: how far its fibers are from satisfying
/// `J(w) = pi^w(g) J(g# w)` for every pair, measured in operator norm on
/// the fiber projectors.
#[derive(Debug, Clone)]
pub struct CovarianceReport {
    pub defect: f64,
    pub pass: bool,
}

/// Check symmetry-invariance of a lattice-invariant space via its fibers.
pub fn check_gamma_invariant(action: &AutomorphismAction, v: &SISpace) -> CovarianceReport {
    let spec = action.spec();
    let d = spec.fiber_dim();
    let projectors: Vec<CMat> = (0..spec.n_omega()).map(|w| v.range.bases[w].projector()).collect();
    let mut defect = 0.0f64;
    for g in 0..action.order() {
        for w in 0..spec.n_omega() {
            let tab = action.pi_table(w, g);
            let target = &projectors[action.sharp(g, w)];
            let mut diff = CMat::zeros((d, d));
            for u in 0..d {
                for u2 in 0..d {
                    diff[(u, u2)] = projectors[w][(u, u2)] - target[(tab[u], tab[u2])];
                }
            }
            defect = defect.max(spectral_norm(&diff));
        }
    }
    CovarianceReport { defect, pass: defect <= tol::GAMMA_COVARIANCE }
}

/// Preservation report for an operator under the symmetry group.
#[derive(Debug, Clone)]
pub struct PreservationReport {
    /// Worst entry defect of `O(g# w) = pi^{g# w}(g^{-1}) O(w) pi^w(g)` in
    /// ambient fiber coordinates.
    pub conjugation_defect: f64,
    /// Worst entry of the dense commutators with the sample rotations.
    pub commutator_defect: f64,
    /// Worst mismatch between eigenvalue multisets along orbits.
    pub spectra_defect: f64,
    pub pass: bool,
}

fn eigenvalue_multiset(m: &CMat, eps_eig: f64) -> Result<Vec<Complex64>> {
    match normal_eig(m, eps_eig) {
        Ok(e) => Ok(e.values),
        Err(Error::NotNormal { .. }) => general_eigenvalues(m),
        Err(e) => Err(e),
    }
}

fn multiset_defect(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut rem: Vec<Complex64> = b.to_vec();
    let mut worst = 0.0f64;
    for x in a {
        let (i, d) = rem
            .iter()
            .enumerate()
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        worst = worst.max(d);
        rem.remove(i);
    }
    worst
}

/// Check that an operator commutes with the whole symmetry group: fiber
/// conjugation identity, dense commutators with the sample rotations, and
/// constancy of the eigenvalue multisets along orbits. The domain must be
/// symmetry-invariant.
pub fn check_gamma_preserving(
    action: &AutomorphismAction,
    op: &SPOperator,
    eps_eig: f64,
) -> Result<PreservationReport> {
    let inv = check_gamma_invariant(action, op.space());
    if !inv.pass {
        return Err(Error::NotGammaInvariant { defect: inv.defect });
    }
    let spec = action.spec();
    let d = spec.fiber_dim();
    let ambient: Vec<CMat> = (0..spec.n_omega()).map(|w| op.ambient_block(w)).collect();

    // O(g# w) entries against the doubly-permuted O(w) entries: conjugating
    // by the permutation pair reindexes both axes by the inverse table.
    let mut conj = 0.0f64;
    for g in 0..action.order() {
        for w in 0..spec.n_omega() {
            let tab = action.pi_table(w, g);
            let mut tinv = vec![0usize; d];
            for u in 0..d {
                tinv[tab[u]] = u;
            }
            let target = &ambient[action.sharp(g, w)];
            let src = &ambient[w];
            for u in 0..d {
                for u2 in 0..d {
                    conj = conj.max((target[(u, u2)] - src[(tinv[u], tinv[u2])]).norm());
                }
            }
        }
    }

    let dense = op.dense_matrix();
    let mut comm = 0.0f64;
    for g in 0..action.order() {
        let rg = dense_rotation(action, g);
        let lr = dense.dot(&rg);
        let rl = rg.dot(&dense);
        comm = comm.max(crate::linalg::max_abs_diff(&lr, &rl));
    }

    let mut spectra = 0.0f64;
    for orbit in action.orbits() {
        let base = eigenvalue_multiset(&op.blocks()[orbit[0]], eps_eig)?;
        for &w in &orbit[1..] {
            let other = eigenvalue_multiset(&op.blocks()[w], eps_eig)?;
            spectra = spectra.max(multiset_defect(&base, &other));
        }
    }

    let scale = 1.0 + max_abs(&dense);
    let pass = conj <= tol::GAMMA_CONJUGATION * scale
        && comm <= tol::GAMMA_COVARIANCE * scale
        && spectra <= eps_eig;
    Ok(PreservationReport {
        conjugation_defect: conj,
        commutator_defect: comm,
        spectra_defect: spectra,
        pass,
    })
}

/// Symmetry report for a lattice sequence: exact-entry invariance under the
/// pulled-back action, and the worst defect of the equivalent dual statement
/// (the lattice Fourier transform is constant along quotient orbits).
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub exact: bool,
    pub dual_defect: f64,
    pub pass: bool,
}

/// Test `a(g^{-1} s) = a(s)` for all group elements, both by exact entry
/// comparison and through the dual form `a_hat(g# w) = a_hat(w)`.
pub fn sequence_symmetry(action: &AutomorphismAction, a: &LatticeSequence) -> Result<SymmetryReport> {
    let spec = action.spec();
    let mut exact = true;
    'outer: for g in 0..action.order() {
        let gi = action.inverse(g);
        for t in 0..spec.lattice_size() {
            let src = action.apply(gi, &spec.lattice_point(t));
            if a.values[spec.lattice_index(&src)] != a.values[t] {
                exact = false;
                break 'outer;
            }
        }
    }
    let a_hat = lattice_fourier(spec, a)?;
    let mut dual = 0.0f64;
    for g in 0..action.order() {
        for w in 0..spec.n_omega() {
            dual = dual.max((a_hat[action.sharp(g, w)] - a_hat[w]).norm());
        }
    }
    Ok(SymmetryReport { exact, dual_defect: dual, pass: exact && dual <= tol::SEQUENCE_SYMMETRY })
}

/// Group-average of a lattice sequence. Computed orbit by orbit (mean of the
/// members, in index order, written to every member), so the result is
/// invariant by exact entry equality, not merely numerically.
pub fn symmetrize(action: &AutomorphismAction, a: &LatticeSequence) -> Result<LatticeSequence> {
    let spec = action.spec();
    if a.values.len() != spec.lattice_size() {
        return Err(Error::LengthMismatch {
            what: "lattice sequence",
            expected: spec.lattice_size(),
            got: a.values.len(),
        });
    }
    let mut out = CVec::zeros(spec.lattice_size());
    let mut seen = vec![false; spec.lattice_size()];
    for t in 0..spec.lattice_size() {
        if seen[t] {
            continue;
        }
        let point = spec.lattice_point(t);
        let mut orbit: Vec<usize> = (0..action.order())
            .map(|g| spec.lattice_index(&action.apply(g, &point)))
            .collect();
        orbit.sort_unstable();
        orbit.dedup();
        let mean = orbit.iter().map(|&s| a.values[s]).sum::<Complex64>()
            / Complex64::new(orbit.len() as f64, 0.0);
        for &s in &orbit {
            out[s] = mean;
            seen[s] = true;
        }
    }
    Ok(LatticeSequence { values: out })
}

/// Extend ambient fiber blocks from orbit representatives to the whole
/// domain by the conjugation identity; points reached by several elements
/// receive the average of the conjugates (identical when the representative
/// block commutes with its stabilizer's fiber permutations).
pub fn propagate_fibers(
    action: &AutomorphismAction,
    reps: &[(usize, CMat)],
) -> Result<Vec<CMat>> {
    let spec = action.spec();
    let d = spec.fiber_dim();
    let mut covered = vec![false; action.orbits().len()];
    let orbit_of = |w: usize| -> usize {
        action.orbits().iter().position(|o| o.contains(&w)).expect("orbits partition")
    };
    let mut out = vec![CMat::zeros((d, d)); spec.n_omega()];
    let mut counts = vec![0usize; spec.n_omega()];
    for (rho, block) in reps {
        let rho = *rho;
        if action.selector(rho) != rho {
            return Err(Error::InvalidInput(format!(
                "point {rho} is not an orbit representative"
            )));
        }
        if block.dim() != (d, d) {
            return Err(Error::LengthMismatch { what: "fiber block", expected: d * d, got: block.len() });
        }
        let oid = orbit_of(rho);
        if covered[oid] {
            return Err(Error::InvalidInput(format!("orbit of {rho} given twice")));
        }
        covered[oid] = true;
        for g in 0..action.order() {
            let target = action.sharp(g, rho);
            let tab = action.pi_table(rho, g);
            let mut tinv = vec![0usize; d];
            for u in 0..d {
                tinv[tab[u]] = u;
            }
            for u in 0..d {
                for u2 in 0..d {
                    out[target][(u, u2)] += block[(tinv[u], tinv[u2])];
                }
            }
            counts[target] += 1;
        }
    }
    if !covered.iter().all(|&c| c) {
        return Err(Error::InvalidInput("not every orbit has a representative".into()));
    }
    for w in 0..spec.n_omega() {
        let k = Complex64::new(counts[w] as f64, 0.0);
        out[w] = out[w].mapv(|z| z / k);
    }
    Ok(out)
}

/// Diagonalize a normal, symmetry-preserving operator with symmetric
/// sequences: label the eigenvalues, replace each label by its value at the
/// orbit representative (so stored label values are exactly constant along
/// orbits), and pull the labels back to group-averaged lattice sequences.
/// Eigenspaces, accounting, and reconstruction follow the lattice
/// diagonalization engine; every returned sequence passes
/// [`sequence_symmetry`] exactly and every eigenspace is symmetry-invariant.
pub fn gamma_diagonalize(
    action: &AutomorphismAction,
    op: &SPOperator,
    eps_eig: f64,
) -> Result<Diagonalization> {
    let report = check_gamma_preserving(action, op, eps_eig)?;
    if !report.pass {
        let defect = report
            .conjugation_defect
            .max(report.commutator_defect)
            .max(report.spectra_defect);
        return Err(Error::NotGammaPreserving { defect });
    }
    let spec = action.spec();
    let data = fiber_eigendata(op, eps_eig)?;
    let labeling = labeling_from(&data, op.norm());

    let mut labels = Vec::with_capacity(labeling.labels.len());
    let mut seqs = Vec::with_capacity(labeling.labels.len());
    for lab in &labeling.labels {
        let pulled = CVec::from_iter((0..spec.n_omega()).map(|w| lab[action.selector(w)]));
        let raw = inverse_lattice_fourier(spec, &pulled)?;
        seqs.push(symmetrize(action, &raw)?);
        labels.push(pulled);
    }
    assemble_from_labels(op, &data, &labels, seqs, eps_eig)
}
