//! End-to-end flows through the public API only: group -> space -> operator
//! -> spectral decomposition, the symmetrized variants, and the documented
//! error paths.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sisdiag::ds::ds_triple_check;
use sisdiag::fiber::{defiberize, fiberize};
use sisdiag::group::translate;
use sisdiag::linalg::{identity, max_abs_diff};
use sisdiag::sis::{frame_bounds, project, range_from_generators, SISpace};
use sisdiag::spectral::{delta_diagonalize, operator_spectrum, spectral_projector, Region};
use sisdiag::spop::{dense_convolution, dense_modulation, lambda_op, to_range_operator};
use sisdiag::symmetry::{
    check_gamma_invariant, check_gamma_preserving, gamma_closure, gamma_diagonalize,
    preset_action, sequence_symmetry,
};
use sisdiag::{build_group_spec, tol, CVec, Error, LatticeSequence, Signal};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_signal(spec: &sisdiag::GroupSpec, rng: &mut ChaCha8Rng) -> Signal {
    let values =
        CVec::from_iter((0..spec.size()).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
    Signal::from_values(spec, values).unwrap()
}

fn sig_dist(a: &Signal, b: &Signal) -> f64 {
    a.values.iter().zip(b.values.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn fiberization_roundtrip_and_translation() {
    let spec = build_group_spec(&[12], &[3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_signal(&spec, &mut rng);
    let fib = fiberize(&spec, &f).unwrap();
    assert!((fib.norm() - f.norm()).abs() <= tol::ROUNDTRIP);
    let back = defiberize(&fib).unwrap();
    assert!(sig_dist(&back, &f) <= tol::ROUNDTRIP);

    // Translating by a lattice element only re-phases the fibers, so the
    // projection onto a generated space commutes with the shift.
    let space = range_from_generators(&spec, &[random_signal(&spec, &mut rng)], tol::EPS_RANK)
        .unwrap();
    let k = [3i64];
    let (p, _) = project(&space, &f).unwrap();
    let shifted_p = translate(&spec, &p, &k).unwrap();
    let (p_shifted, _) = project(&space, &translate(&spec, &f, &k).unwrap()).unwrap();
    assert!(sig_dist(&shifted_p, &p_shifted) <= 1e-12);
}

#[test]
fn projection_is_idempotent() {
    let spec = build_group_spec(&[8, 4], &[2, 2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gens = vec![random_signal(&spec, &mut rng), random_signal(&spec, &mut rng)];
    let space = range_from_generators(&spec, &gens, tol::EPS_RANK).unwrap();
    let f = random_signal(&spec, &mut rng);
    let (p, dist) = project(&space, &f).unwrap();
    assert!(dist > 0.1, "a random signal is not already in a proper subspace");
    let (pp, dist2) = project(&space, &p).unwrap();
    assert!(dist2 <= 1e-12);
    assert!(sig_dist(&pp, &p) <= 1e-12);

    // Members project to themselves; the generators are members.
    for g in &gens {
        let (pg, d) = project(&space, g).unwrap();
        assert!(d <= 1e-12);
        assert!(sig_dist(&pg, g) <= 1e-12);
    }
}

#[test]
fn convolution_operator_pipeline() {
    let spec = build_group_spec(&[12], &[3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // A lattice convolution on the full space has the dense circulant form.
    let mut seq_values = CVec::zeros(spec.lattice_size());
    seq_values[spec.lattice_index(&[3])] = c(1.0, 0.0);
    seq_values[spec.lattice_index(&[9])] = c(1.0, 0.0);
    let a = LatticeSequence::from_values(&spec, seq_values).unwrap();
    let full = SISpace::full(&spec);
    let op = lambda_op(&a, &full).unwrap();
    let dense = dense_convolution(&spec, &a);
    assert!(max_abs_diff(&op.dense_matrix(), &dense) <= 1e-12);

    // The same dense matrix compresses to a generated subspace, and the
    // compression agrees with project-then-apply.
    let space = range_from_generators(&spec, &[random_signal(&spec, &mut rng)], tol::EPS_RANK)
        .unwrap();
    let comp = to_range_operator(&dense, &space).unwrap();
    let f = random_signal(&spec, &mut rng);
    let (pf, _) = project(&space, &f).unwrap();
    let applied = comp.apply(&pf).unwrap();
    let direct_values = dense.dot(&pf.values);
    let direct = Signal::from_values(&spec, direct_values).unwrap();
    let (direct_in, leak) = project(&space, &direct).unwrap();
    assert!(leak <= 1e-9, "convolution keeps the space invariant");
    assert!(sig_dist(&applied, &direct_in) <= 1e-9);

    // Diagonalization reconstructs and the recovered labels are the symbol.
    let diag = delta_diagonalize(&op, tol::EPS_EIG).unwrap();
    assert!(diag.recon_residual <= 1e-10);
    assert!(diag.orth_residual <= 1e-12);
    let sp = operator_spectrum(&op, tol::EPS_EIG).unwrap();
    assert!(!sp.values.is_empty());
    assert!(!sp.non_normal_caveat);
}

#[test]
fn spectral_projector_covers_and_vanishes() {
    let spec = build_group_spec(&[12], &[3]).unwrap();
    let mut seq_values = CVec::zeros(spec.lattice_size());
    seq_values[spec.lattice_index(&[3])] = c(0.5, 0.0);
    let a = LatticeSequence::from_values(&spec, seq_values).unwrap();
    let op = lambda_op(&a, &SISpace::full(&spec)).unwrap();
    let n = spec.size();

    // A region containing the whole spectrum yields the identity...
    let everything = Region::Disc { center: c(0.0, 0.0), radius: 10.0 };
    let e = spectral_projector(&op, &everything, tol::EPS_EIG).unwrap();
    assert!(max_abs_diff(&e.dense_matrix(), &identity(n)) <= 1e-12);

    // ...and a region far from it yields zero.
    let nothing = Region::Disc { center: c(50.0, 0.0), radius: 1.0 };
    let z = spectral_projector(&op, &nothing, tol::EPS_EIG).unwrap();
    assert!(max_abs_diff(&z.dense_matrix(), &(identity(n) * c(0.0, 0.0))) <= 1e-12);
}

#[test]
fn symmetry_pipeline() {
    let spec = build_group_spec(&[8, 8], &[2, 2]).unwrap();
    let action = preset_action(&spec, "p4").unwrap();

    // Closures are invariant even when the seed signal is not.
    let seed = Signal::delta(&spec, &[1, 0]);
    let closed = gamma_closure(&action, &[seed], tol::EPS_RANK).unwrap();
    assert!(check_gamma_invariant(&action, &closed).pass);

    // The four-fold symmetrized shift commutes with the action and
    // diagonalizes with orbit-constant labels.
    let mut values = CVec::zeros(spec.lattice_size());
    for point in [[2i64, 0], [6, 0], [0, 2], [0, 6]] {
        values[spec.lattice_index(&point)] = c(1.0, 0.0);
    }
    let a = LatticeSequence::from_values(&spec, values).unwrap();
    assert!(sequence_symmetry(&action, &a).unwrap().exact);
    let op = lambda_op(&a, &SISpace::full(&spec)).unwrap();
    let rep = check_gamma_preserving(&action, &op, tol::EPS_EIG).unwrap();
    assert!(rep.pass, "conjugation defect {}", rep.conjugation_defect);
    let diag = gamma_diagonalize(&action, &op, tol::EPS_EIG).unwrap();
    assert!(diag.recon_residual <= 1e-10);
    for pair in &diag.pairs {
        for g in 0..action.order() {
            for w in 0..spec.n_omega() {
                assert_eq!(pair.a_hat[w], pair.a_hat[action.sharp(g, w)]);
            }
        }
    }

    // A one-sided shift is rejected by the sequence test.
    let single = LatticeSequence::delta(&spec, &[2, 0]);
    let sym = sequence_symmetry(&action, &single).unwrap();
    assert!(!sym.exact && sym.dual_defect > 0.0);
}

#[test]
fn iterate_frame_hand_cases() {
    let f = CVec::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
    let strict = sisdiag::CMat::from_shape_fn((2, 2), |(i, j)| {
        if i == j {
            c(if i == 0 { 0.5 } else { 0.25 }, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let rep = ds_triple_check(&strict, std::slice::from_ref(&f), None, tol::EPS_EIG).unwrap();
    assert!(rep.verdict);
    assert!(rep.bounds.is_some());

    let unimodular = sisdiag::CMat::from_shape_fn((2, 2), |(i, j)| {
        if i == j {
            c(if i == 0 { 1.0 } else { 0.5 }, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let rep = ds_triple_check(&unimodular, std::slice::from_ref(&f), None, tol::EPS_EIG).unwrap();
    assert!(!rep.verdict);
    assert!(rep.bounds.is_none());
}

#[test]
fn error_paths_are_typed() {
    assert!(matches!(
        build_group_spec(&[8], &[3]),
        Err(Error::NonDivisible { axis: 0, modulus: 8, divisor: 3 })
    ));

    let spec = build_group_spec(&[8], &[2]).unwrap();
    let zero = Signal::from_values(&spec, CVec::zeros(spec.size())).unwrap();
    assert!(matches!(frame_bounds(&spec, &[zero], tol::EPS_RANK), Err(Error::ZeroSpace)));

    // Modulation by a character that is nontrivial on the lattice is not
    // shift-preserving, so compression refuses it.
    let m = dense_modulation(&spec, &[1]);
    let space = SISpace::full(&spec);
    assert!(matches!(
        to_range_operator(&m, &space),
        Err(Error::NotShiftPreserving { .. })
    ));
}
