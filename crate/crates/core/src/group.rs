//! The ambient group, its sublattice, and the transforms between them.
//!
//! The group is `G = Z_n1 x ... x Z_nr`. Divisors `d_i | n_i` select the
//! sublattice `L = {x : d_i | x_i}` of size `prod(m_i)`, `m_i = n_i / d_i`.
//! On the dual side (identified with `G` again) the annihilator of `L` is
//! `A = {l : m_i | l_i}`, of size `D = prod(d_i)`; every dual point splits
//! uniquely as `xi = omega + l` with `omega` in the fundamental domain
//! `0 <= omega_i < m_i`.
//!
//! Enumerations are row-major over coordinates (first axis most significant),
//! fixed once here; every per-fiber matrix in the crate is written in these
//! coordinates.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::linalg::CVec;
use crate::{Error, Result};

/// Point of the group (or its dual), one coordinate per axis.
pub type Point = Vec<i64>;

/// Group shape, index maps, and cached FFT plans.
#[derive(Clone)]
pub struct GroupSpec {
    moduli: Vec<i64>,
    divisors: Vec<i64>,
    quotients: Vec<i64>,
    size: usize,
    lattice_size: usize,
    fiber_dim: usize,
    g_strides: Vec<usize>,
    q_strides: Vec<usize>,
    a_strides: Vec<usize>,
    /// `fiber_table[omega * D + u]` = group index of `omega + l_u`.
    fiber_table: Vec<usize>,
    fw: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    lat_fw: Vec<Arc<dyn Fft<f64>>>,
    lat_inv: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupSpec")
            .field("moduli", &self.moduli)
            .field("divisors", &self.divisors)
            .finish()
    }
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        self.moduli == other.moduli && self.divisors == other.divisors
    }
}
impl Eq for GroupSpec {}

fn strides(dims: &[i64]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1] as usize;
    }
    s
}

/// Build a [`GroupSpec`] from per-axis moduli and lattice divisors.
pub fn build_group_spec(moduli: &[i64], divisors: &[i64]) -> Result<Arc<GroupSpec>> {
    if moduli.is_empty() {
        return Err(Error::InvalidInput("group needs at least one axis".into()));
    }
    if moduli.len() != divisors.len() {
        return Err(Error::LengthMismatch {
            what: "divisors",
            expected: moduli.len(),
            got: divisors.len(),
        });
    }
    for (i, (&n, &d)) in moduli.iter().zip(divisors).enumerate() {
        if n < 1 || d < 1 {
            return Err(Error::InvalidInput(format!(
                "axis {i}: modulus and divisor must be positive, got {n} and {d}"
            )));
        }
        if n % d != 0 {
            return Err(Error::NonDivisible { axis: i, modulus: n, divisor: d });
        }
    }
    let quotients: Vec<i64> = moduli.iter().zip(divisors).map(|(n, d)| n / d).collect();
    let size = moduli.iter().product::<i64>() as usize;
    let lattice_size = quotients.iter().product::<i64>() as usize;
    let fiber_dim = divisors.iter().product::<i64>() as usize;

    let mut planner = FftPlanner::<f64>::new();
    let mut plan = |len: i64, forward: bool| {
        if forward {
            planner.plan_fft_forward(len as usize)
        } else {
            planner.plan_fft_inverse(len as usize)
        }
    };
    let fw = moduli.iter().map(|&n| plan(n, true)).collect();
    let inv = moduli.iter().map(|&n| plan(n, false)).collect();
    let lat_fw = quotients.iter().map(|&m| plan(m, true)).collect();
    let lat_inv = quotients.iter().map(|&m| plan(m, false)).collect();

    let mut spec = GroupSpec {
        moduli: moduli.to_vec(),
        divisors: divisors.to_vec(),
        quotients,
        size,
        lattice_size,
        fiber_dim,
        g_strides: strides(moduli),
        q_strides: vec![],
        a_strides: vec![],
        fiber_table: vec![],
        fw,
        inv,
        lat_fw,
        lat_inv,
    };
    spec.q_strides = strides(&spec.quotients);
    spec.a_strides = strides(&spec.divisors);

    let mut table = Vec::with_capacity(lattice_size * fiber_dim);
    for w in 0..lattice_size {
        let omega = spec.omega_point(w);
        for u in 0..fiber_dim {
            let l = spec.annihilator_point(u);
            let xi: Point = omega.iter().zip(&l).map(|(a, b)| a + b).collect();
            table.push(spec.group_index(&xi));
        }
    }
    spec.fiber_table = table;
    Ok(Arc::new(spec))
}

impl GroupSpec {
    pub fn rank(&self) -> usize {
        self.moduli.len()
    }
    pub fn moduli(&self) -> &[i64] {
        &self.moduli
    }
    pub fn divisors(&self) -> &[i64] {
        &self.divisors
    }
    /// Per-axis `m_i = n_i / d_i`; also the fundamental-domain box shape.
    pub fn quotients(&self) -> &[i64] {
        &self.quotients
    }
    /// `|G|`.
    pub fn size(&self) -> usize {
        self.size
    }
    /// `|L|`, also the number of fundamental-domain points.
    pub fn lattice_size(&self) -> usize {
        self.lattice_size
    }
    /// `D = |A|`, the length of each fiber.
    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }
    /// Number of fundamental-domain points (equals [`Self::lattice_size`]).
    pub fn n_omega(&self) -> usize {
        self.lattice_size
    }
    pub(crate) fn fiber_group_index(&self, omega: usize, u: usize) -> usize {
        self.fiber_table[omega * self.fiber_dim + u]
    }

    fn reduce(&self, x: i64, axis: usize) -> i64 {
        x.rem_euclid(self.moduli[axis])
    }

    /// Flat index of a group point; coordinates are reduced mod `n_i` first.
    pub fn group_index(&self, x: &[i64]) -> usize {
        debug_assert_eq!(x.len(), self.rank());
        x.iter()
            .enumerate()
            .map(|(i, &c)| self.reduce(c, i) as usize * self.g_strides[i])
            .sum()
    }

    pub fn group_point(&self, mut idx: usize) -> Point {
        let mut p = vec![0i64; self.rank()];
        for i in 0..self.rank() {
            p[i] = (idx / self.g_strides[i]) as i64;
            idx %= self.g_strides[i];
        }
        p
    }

    /// Index of a fundamental-domain point (`0 <= omega_i < m_i`).
    pub fn omega_index(&self, omega: &[i64]) -> usize {
        debug_assert!(omega.iter().zip(&self.quotients).all(|(&c, &m)| 0 <= c && c < m));
        omega
            .iter()
            .enumerate()
            .map(|(i, &c)| c as usize * self.q_strides[i])
            .sum()
    }

    pub fn omega_point(&self, mut idx: usize) -> Point {
        let mut p = vec![0i64; self.rank()];
        for i in 0..self.rank() {
            p[i] = (idx / self.q_strides[i]) as i64;
            idx %= self.q_strides[i];
        }
        p
    }

    /// Enumerated lattice point: index `t` maps to coordinates `d_i * t_i`.
    pub fn lattice_point(&self, mut idx: usize) -> Point {
        let mut p = vec![0i64; self.rank()];
        for i in 0..self.rank() {
            p[i] = (idx / self.q_strides[i]) as i64 * self.divisors[i];
            idx %= self.q_strides[i];
        }
        p
    }

    /// Index of a lattice point; errors are programming bugs, so this asserts.
    pub fn lattice_index(&self, s: &[i64]) -> usize {
        s.iter()
            .enumerate()
            .map(|(i, &c)| {
                let c = self.reduce(c, i);
                debug_assert_eq!(c % self.divisors[i], 0, "not a lattice point");
                (c / self.divisors[i]) as usize * self.q_strides[i]
            })
            .sum()
    }

    /// Enumerated annihilator point: index `u` maps to coordinates `m_i * u_i`.
    pub fn annihilator_point(&self, mut idx: usize) -> Point {
        let mut p = vec![0i64; self.rank()];
        for i in 0..self.rank() {
            p[i] = (idx / self.a_strides[i]) as i64 * self.quotients[i];
            idx %= self.a_strides[i];
        }
        p
    }

    pub fn annihilator_index(&self, l: &[i64]) -> usize {
        l.iter()
            .enumerate()
            .map(|(i, &c)| {
                let c = self.reduce(c, i);
                debug_assert_eq!(c % self.quotients[i], 0, "not an annihilator point");
                (c / self.quotients[i]) as usize * self.a_strides[i]
            })
            .sum()
    }

    /// Split a dual point as `xi = omega + l`: returns (omega index, annihilator index).
    pub fn decompose_dual(&self, xi: &[i64]) -> (usize, usize) {
        let mut w = 0usize;
        let mut u = 0usize;
        for i in 0..self.rank() {
            let c = self.reduce(xi[i], i);
            let (m, d) = (self.quotients[i], self.divisors[i]);
            let _ = d;
            w += (c % m) as usize * self.q_strides[i];
            u += (c / m) as usize * self.a_strides[i];
        }
        (w, u)
    }

    /// Reduce a dual point into the fundamental domain, coordinatewise mod `m_i`.
    pub fn to_fundamental(&self, xi: &[i64]) -> Point {
        xi.iter()
            .enumerate()
            .map(|(i, &c)| self.reduce(c, i) % self.quotients[i])
            .collect()
    }

    pub fn add(&self, a: &[i64], b: &[i64]) -> Point {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&x, &y))| self.reduce(x + y, i))
            .collect()
    }

    pub fn sub(&self, a: &[i64], b: &[i64]) -> Point {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&x, &y))| self.reduce(x - y, i))
            .collect()
    }

    pub fn neg(&self, a: &[i64]) -> Point {
        a.iter().enumerate().map(|(i, &x)| self.reduce(-x, i)).collect()
    }

    /// Duality pairing in turns: `sum_i xi_i x_i / n_i mod 1`, in `[0, 1)`.
    pub fn phase_turns(&self, xi: &[i64], x: &[i64]) -> f64 {
        let mut turns = 0.0f64;
        for i in 0..self.rank() {
            let n = self.moduli[i];
            let t = (xi[i].rem_euclid(n) * x[i].rem_euclid(n)).rem_euclid(n);
            turns += t as f64 / n as f64;
        }
        turns.fract()
    }

    /// `exp(-2 pi i * phase_turns(xi, x))`, the analysis kernel of the DFT.
    pub fn character(&self, xi: &[i64], x: &[i64]) -> Complex64 {
        Complex64::from_polar(1.0, -std::f64::consts::TAU * self.phase_turns(xi, x))
    }
}

/// A complex-valued function on the group, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub values: CVec,
}

impl Signal {
    pub fn zeros(spec: &GroupSpec) -> Self {
        Signal { values: CVec::zeros(spec.size()) }
    }

    /// Point mass at `x`.
    pub fn delta(spec: &GroupSpec, x: &[i64]) -> Self {
        let mut s = Self::zeros(spec);
        s.values[spec.group_index(x)] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_values(spec: &GroupSpec, values: CVec) -> Result<Self> {
        if values.len() != spec.size() {
            return Err(Error::LengthMismatch {
                what: "signal",
                expected: spec.size(),
                got: values.len(),
            });
        }
        Ok(Signal { values })
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A complex-valued function on the lattice, indexed by the lattice enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSequence {
    pub values: CVec,
}

impl LatticeSequence {
    pub fn zeros(spec: &GroupSpec) -> Self {
        LatticeSequence { values: CVec::zeros(spec.lattice_size()) }
    }

    /// Point mass at the lattice point `s` (coordinates must be multiples of `d_i`).
    pub fn delta(spec: &GroupSpec, s: &[i64]) -> Self {
        let mut a = Self::zeros(spec);
        a.values[spec.lattice_index(s)] = Complex64::new(1.0, 0.0);
        a
    }

    pub fn from_values(spec: &GroupSpec, values: CVec) -> Result<Self> {
        if values.len() != spec.lattice_size() {
            return Err(Error::LengthMismatch {
                what: "lattice sequence",
                expected: spec.lattice_size(),
                got: values.len(),
            });
        }
        Ok(LatticeSequence { values })
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// In-place FFT along every axis of a row-major array with the given dims.
fn fft_axes(data: &mut [Complex64], dims: &[usize], plans: &[Arc<dyn Fft<f64>>]) {
    let total = data.len();
    let strides = {
        let mut s = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    };
    let mut line: Vec<Complex64> = Vec::new();
    for axis in 0..dims.len() {
        let len = dims[axis];
        if len == 1 {
            continue;
        }
        let stride = strides[axis];
        let block = stride * len;
        line.resize(len, Complex64::default());
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let start = outer + inner;
                for (t, v) in line.iter_mut().enumerate() {
                    *v = data[start + t * stride];
                }
                plans[axis].process(&mut line);
                for (t, v) in line.iter().enumerate() {
                    data[start + t * stride] = *v;
                }
            }
        }
    }
}

/// Unitary DFT: `fhat(xi) = |G|^{-1/2} sum_x f(x) e^{-2 pi i <xi, x>}`.
pub fn dft(spec: &GroupSpec, f: &Signal) -> Result<CVec> {
    if f.values.len() != spec.size() {
        return Err(Error::LengthMismatch {
            what: "signal",
            expected: spec.size(),
            got: f.values.len(),
        });
    }
    let mut data = f.values.to_vec();
    let dims: Vec<usize> = spec.moduli().iter().map(|&n| n as usize).collect();
    fft_axes(&mut data, &dims, &spec.fw);
    let scale = 1.0 / (spec.size() as f64).sqrt();
    Ok(CVec::from_iter(data.into_iter().map(|z| z * scale)))
}

/// Inverse of [`dft`]; also unitary.
pub fn idft(spec: &GroupSpec, fhat: &CVec) -> Result<Signal> {
    if fhat.len() != spec.size() {
        return Err(Error::LengthMismatch {
            what: "spectrum",
            expected: spec.size(),
            got: fhat.len(),
        });
    }
    let mut data = fhat.to_vec();
    let dims: Vec<usize> = spec.moduli().iter().map(|&n| n as usize).collect();
    fft_axes(&mut data, &dims, &spec.inv);
    let scale = 1.0 / (spec.size() as f64).sqrt();
    Ok(Signal { values: CVec::from_iter(data.into_iter().map(|z| z * scale)) })
}

/// Translation `(T_k f)(x) = f(x - k)`; `k` is any group point.
pub fn translate(spec: &GroupSpec, f: &Signal, k: &[i64]) -> Result<Signal> {
    if f.values.len() != spec.size() {
        return Err(Error::LengthMismatch {
            what: "signal",
            expected: spec.size(),
            got: f.values.len(),
        });
    }
    let mut out = CVec::zeros(spec.size());
    for idx in 0..spec.size() {
        let x = spec.group_point(idx);
        let src = spec.group_index(&spec.sub(&x, k));
        out[idx] = f.values[src];
    }
    Ok(Signal { values: out })
}

/// Lattice Fourier transform, unnormalized analysis:
/// `ahat(omega) = sum_s a(s) e^{-2 pi i <omega, s>}`, one value per
/// fundamental-domain point. Satisfies `sum_w |ahat|^2 = |L| * sum_s |a|^2`.
pub fn lattice_fourier(spec: &GroupSpec, a: &LatticeSequence) -> Result<CVec> {
    if a.values.len() != spec.lattice_size() {
        return Err(Error::LengthMismatch {
            what: "lattice sequence",
            expected: spec.lattice_size(),
            got: a.values.len(),
        });
    }
    // <omega, s> = sum_i omega_i d_i t_i / n_i = sum_i omega_i t_i / m_i,
    // so this is the plain unnormalized DFT on the quotient box.
    let mut data = a.values.to_vec();
    let dims: Vec<usize> = spec.quotients().iter().map(|&m| m as usize).collect();
    fft_axes(&mut data, &dims, &spec.lat_fw);
    Ok(CVec::from_iter(data))
}

/// Inverse of [`lattice_fourier`]: `a = |L|^{-1} *` (unnormalized synthesis).
pub fn inverse_lattice_fourier(spec: &GroupSpec, ahat: &CVec) -> Result<LatticeSequence> {
    if ahat.len() != spec.lattice_size() {
        return Err(Error::LengthMismatch {
            what: "lattice spectrum",
            expected: spec.lattice_size(),
            got: ahat.len(),
        });
    }
    let mut data = ahat.to_vec();
    let dims: Vec<usize> = spec.quotients().iter().map(|&m| m as usize).collect();
    fft_axes(&mut data, &dims, &spec.lat_inv);
    let scale = 1.0 / spec.lattice_size() as f64;
    Ok(LatticeSequence { values: CVec::from_iter(data.into_iter().map(|z| z * scale)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_signal(spec: &GroupSpec, rng: &mut ChaCha8Rng) -> Signal {
        let values = CVec::from_iter(
            (0..spec.size()).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)),
        );
        Signal { values }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(build_group_spec(&[], &[]).is_err());
        assert!(build_group_spec(&[8], &[3]).is_err());
        assert!(build_group_spec(&[8, 8], &[2]).is_err());
        assert!(build_group_spec(&[0], &[1]).is_err());
    }

    #[test]
    fn enumerations_on_8_2() {
        let spec = build_group_spec(&[8], &[2]).unwrap();
        assert_eq!(spec.size(), 8);
        assert_eq!(spec.lattice_size(), 4);
        assert_eq!(spec.fiber_dim(), 2);
        let lattice: Vec<Point> = (0..4).map(|t| spec.lattice_point(t)).collect();
        assert_eq!(lattice, vec![vec![0], vec![2], vec![4], vec![6]]);
        let ann: Vec<Point> = (0..2).map(|u| spec.annihilator_point(u)).collect();
        assert_eq!(ann, vec![vec![0], vec![4]]);
        let omegas: Vec<Point> = (0..4).map(|w| spec.omega_point(w)).collect();
        assert_eq!(omegas, vec![vec![0], vec![1], vec![2], vec![3]]);
        // xi = 6 splits as omega = 2, l = 4.
        assert_eq!(spec.decompose_dual(&[6]), (2, 1));
    }

    #[test]
    fn enumerations_on_8x8_2x2() {
        let spec = build_group_spec(&[8, 8], &[2, 2]).unwrap();
        assert_eq!(spec.size(), 64);
        assert_eq!(spec.lattice_size(), 16);
        assert_eq!(spec.fiber_dim(), 4);
        // Row-major: the fundamental-domain index of (1, 0) is 4 when m = (4, 4).
        assert_eq!(spec.omega_index(&[1, 0]), 4);
        assert_eq!(spec.omega_point(1), vec![0, 1]);
        let (w, u) = spec.decompose_dual(&[5, 6]);
        assert_eq!(spec.omega_point(w), vec![1, 2]);
        assert_eq!(spec.annihilator_point(u), vec![4, 4]);
    }

    #[test]
    fn dft_is_unitary_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (moduli, divisors) in [
            (vec![8i64], vec![2i64]),
            (vec![12], vec![3]),
            (vec![6, 10], vec![2, 5]),
            (vec![4, 3, 2], vec![2, 1, 1]),
        ] {
            let spec = build_group_spec(&moduli, &divisors).unwrap();
            for _ in 0..10 {
                let f = random_signal(&spec, &mut rng);
                let fhat = dft(&spec, &f).unwrap();
                let back = idft(&spec, &fhat).unwrap();
                let fhat_norm = fhat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert!((fhat_norm - f.norm()).abs() <= 1e-12 * (1.0 + f.norm()));
                let diff = (&back.values - &f.values)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                assert!(diff <= 1e-12, "round-trip error {diff}");
            }
        }
    }

    #[test]
    fn dft_matches_direct_sum() {
        let spec = build_group_spec(&[6, 4], &[2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_signal(&spec, &mut rng);
        let fhat = dft(&spec, &f).unwrap();
        let scale = 1.0 / (spec.size() as f64).sqrt();
        for xi_idx in 0..spec.size() {
            let xi = spec.group_point(xi_idx);
            let mut acc = Complex64::default();
            for x_idx in 0..spec.size() {
                let x = spec.group_point(x_idx);
                acc += f.values[x_idx] * spec.character(&xi, &x);
            }
            acc *= scale;
            assert!((acc - fhat[xi_idx]).norm() <= 1e-12);
        }
    }

    #[test]
    fn dft_of_delta_is_flat_character() {
        let spec = build_group_spec(&[8], &[2]).unwrap();
        let f = Signal::delta(&spec, &[1]);
        let fhat = dft(&spec, &f).unwrap();
        let scale = 1.0 / 8f64.sqrt();
        for xi in 0..8 {
            let expect = Complex64::from_polar(scale, -std::f64::consts::TAU * xi as f64 / 8.0);
            assert!((fhat[xi] - expect).norm() <= 1e-12);
        }
    }

    #[test]
    fn translation_composes_and_diagonalizes() {
        let spec = build_group_spec(&[6, 10], &[2, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_signal(&spec, &mut rng);
        let k1 = vec![1i64, 7];
        let k2 = vec![5i64, 4];
        let lhs = translate(&spec, &translate(&spec, &f, &k1).unwrap(), &k2).unwrap();
        let rhs = translate(&spec, &f, &spec.add(&k1, &k2)).unwrap();
        let diff = (&lhs.values - &rhs.values).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff == 0.0, "translation composition must be exact");

        // Fourier side: translation multiplies by the character.
        let fhat = dft(&spec, &f).unwrap();
        let that = dft(&spec, &translate(&spec, &f, &k1).unwrap()).unwrap();
        for xi_idx in 0..spec.size() {
            let xi = spec.group_point(xi_idx);
            let expect = fhat[xi_idx] * spec.character(&xi, &k1);
            assert!((that[xi_idx] - expect).norm() <= 1e-12);
        }
    }

    #[test]
    fn lattice_fourier_parseval_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (moduli, divisors) in [(vec![8i64], vec![2i64]), (vec![8, 8], vec![2, 2]), (vec![12], vec![12])] {
            let spec = build_group_spec(&moduli, &divisors).unwrap();
            let a = LatticeSequence {
                values: CVec::from_iter(
                    (0..spec.lattice_size())
                        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)),
                ),
            };
            let ahat = lattice_fourier(&spec, &a).unwrap();
            let lhs = ahat.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let rhs = spec.lattice_size() as f64 * a.values.iter().map(|z| z.norm_sqr()).sum::<f64>();
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
            let back = inverse_lattice_fourier(&spec, &ahat).unwrap();
            let diff = (&back.values - &a.values).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff <= 1e-12);
        }
    }

    #[test]
    fn lattice_fourier_matches_direct_sum() {
        let spec = build_group_spec(&[8, 8], &[2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = LatticeSequence {
            values: CVec::from_iter(
                (0..spec.lattice_size())
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)),
            ),
        };
        let ahat = lattice_fourier(&spec, &a).unwrap();
        for w in 0..spec.n_omega() {
            let omega = spec.omega_point(w);
            let mut acc = Complex64::default();
            for t in 0..spec.lattice_size() {
                let s = spec.lattice_point(t);
                acc += a.values[t] * spec.character(&omega, &s);
            }
            assert!((acc - ahat[w]).norm() <= 1e-12);
        }
    }

    #[test]
    fn lattice_delta_has_flat_transform() {
        // ahat of a point mass at 0 is identically 1.
        let spec = build_group_spec(&[8], &[2]).unwrap();
        let a = LatticeSequence::delta(&spec, &[0]);
        let ahat = lattice_fourier(&spec, &a).unwrap();
        for w in 0..4 {
            assert!((ahat[w] - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        }
    }
}
