//! Command dispatch: construct the configured objects (group, action,
//! signals, space, operator), run the requested computation, and assemble a
//! report whose checks carry every measured residual next to its tolerance.
//!
//! Exit-code contract: input problems surface as errors (exit 2); failed
//! mathematical checks surface as `pass: false` rows (exit 1); a clean run
//! exits 0.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sisdiag::ds::ds_triple_check;
use sisdiag::fiber::{defiberize, fiberize};
use sisdiag::group::{translate, GroupSpec, LatticeSequence, Signal};
use sisdiag::linalg::{adjoint, max_abs, max_abs_diff, spectral_norm};
use sisdiag::sis::{
    frame_bounds, principal_decomposition, project, range_from_generators, strata, SISpace,
};
use sisdiag::spectral::{
    delta_diagonalize, label_eigenvalues, operator_spectrum, spectral_projector, Diagonalization,
};
use sisdiag::spop::{
    assemble_dense, check_shift_preserving, dense_convolution, dense_modulation,
    fiber_property_report, lambda_op, to_range_operator, SPOperator,
};
use sisdiag::symmetry::{
    check_gamma_invariant, check_gamma_preserving, gamma_closure, gamma_diagonalize,
    sequence_symmetry, AutomorphismAction,
};
use sisdiag::{tol, CMat, CVec, Error as CoreError, Region};

use crate::config::{
    build_configured_action, Config, DimSpec, GeneratorConfig, OperatorConfig,
};
use crate::error::CliError;
use crate::instance;
use crate::oracle;
use crate::report::{cvec_json, digest, Check, Report};

/// Command-line overrides that beat the config file.
#[derive(Debug, Default, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub eps_eig: Option<f64>,
    pub eps_rank: Option<f64>,
}

/// Resolved tolerances: CLI overrides, then config, then library defaults.
#[derive(Debug, Clone, Copy)]
struct Tols {
    eps_rank: f64,
    eps_eig: f64,
    reconstruction: f64,
    orthogonality: f64,
    membership: f64,
    covariance: f64,
    conjugation: f64,
    sequence_symmetry: f64,
    oracle: f64,
}

fn resolve_tols(cfg: &Config, opts: &RunOptions) -> Tols {
    let t = &cfg.tolerances;
    Tols {
        eps_rank: opts.eps_rank.or(t.eps_rank).unwrap_or(tol::EPS_RANK),
        eps_eig: opts.eps_eig.or(t.eps_eig).unwrap_or(tol::EPS_EIG),
        reconstruction: t.reconstruction.unwrap_or(tol::RECONSTRUCTION),
        orthogonality: t.orthogonality.unwrap_or(tol::ORTHOGONALITY),
        membership: t.membership.unwrap_or(tol::MEMBERSHIP),
        covariance: t.covariance.unwrap_or(tol::GAMMA_COVARIANCE),
        conjugation: t.conjugation.unwrap_or(tol::GAMMA_CONJUGATION),
        sequence_symmetry: t.sequence_symmetry.unwrap_or(tol::SEQUENCE_SYMMETRY),
        oracle: t.oracle.unwrap_or(1e-8),
    }
}

struct Ctx<'a> {
    cfg: &'a Config,
    spec: Arc<GroupSpec>,
    action: Option<AutomorphismAction>,
    rng: ChaCha8Rng,
    tols: Tols,
    base_dir: Option<&'a Path>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pairs_to_cvec(values: &[[f64; 2]]) -> CVec {
    CVec::from_iter(values.iter().map(|v| c(v[0], v[1])))
}

/// Run one command against a validated config. `raw_bytes` are the exact
/// config file bytes (digested into the report).
pub fn run(
    cfg: &Config,
    raw_bytes: &[u8],
    command: &str,
    opts: &RunOptions,
    base_dir: Option<&Path>,
) -> Result<Report, CliError> {
    let started = Instant::now();
    if let Some(named) = &cfg.command {
        if named != command {
            return Err(CliError::input(format!(
                "config names command {named:?} but {command:?} was invoked"
            )));
        }
    }
    let spec = sisdiag::build_group_spec(&cfg.group.moduli, &cfg.group.divisors)
        .map_err(|e| CliError::input(format!("group: {e}")))?;
    let action = match &cfg.action {
        Some(a) => Some(build_configured_action(&spec, a)?),
        None => None,
    };
    let seed = opts.seed.or(cfg.seed).unwrap_or(0);
    let mut ctx = Ctx {
        cfg,
        spec,
        action,
        rng: ChaCha8Rng::seed_from_u64(seed),
        tols: resolve_tols(cfg, opts),
        base_dir,
    };

    let (checks, payload) = dispatch(&mut ctx, command)?;
    Ok(Report {
        command: command.to_string(),
        config_digest: digest(raw_bytes),
        seed,
        checks,
        payload,
        wall_clock_ms: started.elapsed().as_millis() as u64,
    })
}

fn dispatch(ctx: &mut Ctx, command: &str) -> Result<(Vec<Check>, Value), CliError> {
    match command {
        "fiberize" => cmd_fiberize(ctx),
        "range" => cmd_range(ctx),
        "frame-bounds" => cmd_frame_bounds(ctx),
        "strata" => cmd_strata(ctx),
        "principal" => cmd_principal(ctx),
        "check-sp" => cmd_check_sp(ctx),
        "range-operator" => cmd_range_operator(ctx),
        "spectrum" => cmd_spectrum(ctx),
        "spectral-projector" => cmd_spectral_projector(ctx),
        "label-eigen" => cmd_label_eigen(ctx),
        "diagonalize" => cmd_diagonalize(ctx),
        "ds-check" => cmd_ds_check(ctx),
        "gamma-check" => cmd_gamma_check(ctx),
        "gamma-diagonalize" => cmd_gamma_diagonalize(ctx),
        "verify" => cmd_verify(ctx),
        other => Err(CliError::input(format!("unknown command {other:?}"))),
    }
}

// ---------------------------------------------------------------- builders

/// Materialize the configured generator signals.
fn generator_signals(ctx: &mut Ctx) -> Result<Vec<Signal>, CliError> {
    let mut out = Vec::new();
    for g in &ctx.cfg.generators {
        match g {
            GeneratorConfig::Delta { point } => out.push(Signal::delta(&ctx.spec, point)),
            GeneratorConfig::Explicit { values } => {
                let v = pairs_to_cvec(values);
                out.push(
                    Signal::from_values(&ctx.spec, v).map_err(|e| CliError::input(e.to_string()))?,
                );
            }
            GeneratorConfig::Random { dims } => {
                let dims = match dims {
                    DimSpec::Uniform(d) => vec![*d; ctx.spec.n_omega()],
                    DimSpec::PerOmega(v) => v.clone(),
                };
                let space = instance::random_sis(&ctx.spec, Some(&dims), &mut ctx.rng);
                out.extend(space.generators.iter().cloned());
            }
        }
    }
    Ok(out)
}

/// The configured space: span of the generators, or the full space when none
/// are given. With `symmetric` set and an action present, the generator set
/// is closed under the action first, so the result is symmetry-invariant.
fn build_space(ctx: &mut Ctx, symmetric: bool) -> Result<SISpace, CliError> {
    let signals = generator_signals(ctx)?;
    if signals.is_empty() {
        return Ok(SISpace::full(&ctx.spec));
    }
    if symmetric {
        if let Some(action) = &ctx.action {
            return Ok(gamma_closure(action, &signals, ctx.tols.eps_rank)?);
        }
    }
    Ok(range_from_generators(&ctx.spec, &signals, ctx.tols.eps_rank)?)
}

fn require_operator(ctx: &Ctx) -> Result<OperatorConfig, CliError> {
    ctx.cfg
        .operator
        .clone()
        .ok_or_else(|| CliError::input("this command requires an operator".into()))
}

/// Dense matrix of the configured operator, for commutation checks.
fn dense_source(ctx: &mut Ctx) -> Result<CMat, CliError> {
    match require_operator(ctx)? {
        OperatorConfig::LatticeConvolution { sequence } => {
            let a = LatticeSequence::from_values(&ctx.spec, pairs_to_cvec(&sequence))
                .map_err(|e| CliError::input(e.to_string()))?;
            Ok(dense_convolution(&ctx.spec, &a))
        }
        OperatorConfig::DenseFile { path } => {
            load_dense_matrix(&crate::config::resolve_path(&path, ctx.base_dir), ctx.spec.size())
        }
        OperatorConfig::RandomNormal | OperatorConfig::RandomGamma => {
            Ok(build_operator(ctx, false)?.dense_matrix())
        }
    }
}

/// The configured operator as a fibered object on the configured space.
fn build_operator(ctx: &mut Ctx, symmetric: bool) -> Result<SPOperator, CliError> {
    match require_operator(ctx)? {
        OperatorConfig::LatticeConvolution { sequence } => {
            let space = build_space(ctx, symmetric)?;
            let a = LatticeSequence::from_values(&ctx.spec, pairs_to_cvec(&sequence))
                .map_err(|e| CliError::input(e.to_string()))?;
            Ok(lambda_op(&a, &space)?)
        }
        OperatorConfig::DenseFile { path } => {
            let space = build_space(ctx, symmetric)?;
            let dense =
                load_dense_matrix(&crate::config::resolve_path(&path, ctx.base_dir), ctx.spec.size())?;
            Ok(to_range_operator(&dense, &space)?)
        }
        OperatorConfig::RandomNormal => {
            let space = if ctx.cfg.generators.is_empty() {
                None
            } else {
                Some(build_space(ctx, symmetric)?)
            };
            Ok(instance::random_normal_sp(&ctx.spec, space, &mut ctx.rng))
        }
        OperatorConfig::RandomGamma => {
            let action = ctx
                .action
                .as_ref()
                .ok_or_else(|| CliError::input("random_gamma requires an action".into()))?;
            Ok(instance::random_gamma_operator(action, &mut ctx.rng))
        }
    }
}

/// Load a dense complex matrix: `.json` nested rows of `[re, im]`, or `.csv`
/// rows with interleaved re,im columns.
fn load_dense_matrix(path: &Path, expected: usize) -> Result<CMat, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let rows: Vec<Vec<Complex64>> = if ext.eq_ignore_ascii_case("csv") {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            if nums.len() % 2 != 0 {
                return Err(CliError::input(format!(
                    "{}: odd column count; expected interleaved re,im",
                    path.display()
                )));
            }
            rows.push(nums.chunks(2).map(|p| c(p[0], p[1])).collect());
        }
        rows
    } else {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let parsed: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        parsed
            .into_iter()
            .map(|row| row.into_iter().map(|p| c(p[0], p[1])).collect())
            .collect()
    };
    let n = rows.len();
    if n != expected || rows.iter().any(|r| r.len() != expected) {
        return Err(CliError::input(format!(
            "{}: expected a {expected}x{expected} matrix",
            path.display()
        )));
    }
    let mut m = CMat::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        for (j, &z) in row.iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

// ---------------------------------------------------------------- commands

fn cmd_fiberize(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let signals = generator_signals(ctx)?;
    if signals.is_empty() {
        return Err(CliError::input("fiberize needs at least one generator".into()));
    }
    let spec = ctx.spec.clone();
    let mut isometry = 0.0f64;
    let mut roundtrip = 0.0f64;
    let mut intertwine = 0.0f64;
    let mut fibers_json = Vec::new();
    for f in &signals {
        let fib = fiberize(&spec, f)?;
        isometry = isometry.max((fib.norm() - f.norm()).abs());
        let back = defiberize(&fib)?;
        let diff: f64 =
            f.values.iter().zip(back.values.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        roundtrip = roundtrip.max(diff);
        // Lattice translation acts on each fiber by a scalar character phase.
        for i in 0..spec.rank() {
            let mut k = vec![0i64; spec.rank()];
            k[i] = spec.divisors()[i];
            let shifted = fiberize(&spec, &translate(&spec, f, &k)?)?;
            for w in 0..spec.n_omega() {
                let phase = spec.character(&spec.omega_point(w), &k);
                for u in 0..spec.fiber_dim() {
                    intertwine =
                        intertwine.max((shifted.fibers[w][u] - phase * fib.fibers[w][u]).norm());
                }
            }
        }
        fibers_json.push(Value::Array((0..spec.n_omega()).map(|w| cvec_json(&fib.fibers[w])).collect()));
    }
    let checks = vec![
        Check::measured("isometry", isometry, tol::ROUNDTRIP),
        Check::measured("roundtrip", roundtrip, tol::ROUNDTRIP),
        Check::measured("translation-intertwining", intertwine, tol::ROUNDTRIP),
    ];
    let payload = json!({
        "n_omega": spec.n_omega(),
        "fiber_dim": spec.fiber_dim(),
        "fibers": fibers_json,
    });
    Ok((checks, payload))
}

fn cmd_range(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let signals = generator_signals(ctx)?;
    if signals.is_empty() {
        return Err(CliError::input("range needs at least one generator".into()));
    }
    let space = range_from_generators(&ctx.spec, &signals, ctx.tols.eps_rank)?;
    let mut membership = 0.0f64;
    for f in &signals {
        let (_, dist) = project(&space, f)?;
        membership = membership.max(dist / (1.0 + f.norm()));
    }
    let checks = vec![
        Check::measured("orthonormality", space.range.orthonormality_residual(), tol::ORTHONORMALITY),
        Check::measured("generator-membership", membership, ctx.tols.membership),
    ];
    let payload = json!({
        "dims": space.dims(),
        "dim_total": space.dim_total(),
        "support": space.spectrum(),
    });
    Ok((checks, payload))
}

fn cmd_frame_bounds(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let signals = generator_signals(ctx)?;
    if signals.is_empty() {
        return Err(CliError::input("frame-bounds needs at least one generator".into()));
    }
    let (lo, hi) = frame_bounds(&ctx.spec, &signals, ctx.tols.eps_rank)?;
    oracle::check_dense_scale(&ctx.spec)?;
    let (dlo, dhi) = oracle::dense_frame_extremes(&ctx.spec, &signals, ctx.tols.eps_rank);
    let rel = ((lo - dlo).abs() / dlo.max(1.0)).max((hi - dhi).abs() / dhi.max(1.0));
    let checks = vec![Check::measured("dense-frame-agreement", rel, ctx.tols.oracle)];
    let payload = json!({
        "lower": lo,
        "upper": hi,
        "dense_lower": dlo,
        "dense_upper": dhi,
    });
    Ok((checks, payload))
}

fn cmd_strata(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let space = build_space(ctx, false)?;
    let parts = strata(&space);
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let checks = vec![Check::exact("strata-partition", total == ctx.spec.n_omega())];
    let payload = json!({
        "by_dimension": parts,
        "dims": space.dims(),
    });
    Ok((checks, payload))
}

fn cmd_principal(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let space = build_space(ctx, false)?;
    let gens = principal_decomposition(&space);
    oracle::check_dense_scale(&ctx.spec)?;

    // The whole translate family of the principal generators is a Parseval
    // frame of the space: its dense frame operator is the ambient projector.
    let frame = oracle::dense_frame_operator(&ctx.spec, &gens);
    let basis = oracle::ambient_basis(&space);
    let parseval = max_abs_diff(&frame, &basis.dot(&adjoint(&basis)));

    // The principal spaces are mutually orthogonal: every translate of one
    // generator is orthogonal to every translate of another.
    let orth = oracle::translate_cross_inner(&ctx.spec, &gens);

    // Nested supports: generator i lives exactly where the fiber dimension
    // is above i, so each support contains the next.
    let masks = oracle::support_masks(&ctx.spec, &gens)?;
    let nested = masks
        .windows(2)
        .all(|pair| pair[0].iter().zip(pair[1].iter()).all(|(&a, &b)| a || !b));
    let mask_total: usize = masks.iter().flatten().filter(|&&m| m).count();

    // Parseval again through the frame-bound route: bounds exactly (1, 1).
    let bound_dev = if gens.is_empty() {
        0.0
    } else {
        let (lo, hi) = frame_bounds(&ctx.spec, &gens, ctx.tols.eps_rank)?;
        (lo - 1.0).abs().max((hi - 1.0).abs())
    };

    let checks = vec![
        Check::measured("principal-parseval", parseval, ctx.tols.oracle),
        Check::measured("principal-orthogonality", orth, ctx.tols.orthogonality),
        Check::exact("principal-nesting", nested),
        Check::exact("principal-dimension-sum", mask_total == space.dim_total()),
        Check::measured("principal-frame-bounds", bound_dev, ctx.tols.oracle),
    ];
    let payload = json!({
        "count": gens.len(),
        "supports": masks
            .iter()
            .map(|m| m.iter().enumerate().filter(|(_, &s)| s).map(|(w, _)| w).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    });
    Ok((checks, payload))
}

fn cmd_check_sp(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let dense = dense_source(ctx)?;
    let rep = check_shift_preserving(&ctx.spec, &dense)?;
    let checks = vec![Check::measured("shift-commutation", rep.residual, rep.threshold)];
    let payload = json!({
        "residual": rep.residual,
        "threshold": rep.threshold,
    });
    Ok((checks, payload))
}

fn cmd_range_operator(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let op = match build_operator(ctx, false) {
        Ok(op) => op,
        // Commutation and invariance failures are the mathematical answer of
        // this command, not input problems.
        Err(CliError::Math(msg, residual)) => {
            let checks = vec![Check {
                name: "operator-is-shift-preserving".into(),
                pass: false,
                residual,
                tolerance: None,
            }];
            return Ok((checks, json!({ "error": msg })));
        }
        Err(e) => return Err(e),
    };
    let agreement = op.dense_agreement_residual()?;
    let scale = 1.0 + max_abs(&op.dense_matrix());
    let checks = vec![
        Check::measured("dense-agreement", agreement, tol::DENSE_AGREEMENT * scale),
    ];
    let blocks_json: Vec<Value> = op.blocks().iter().map(crate::report::cmat_json).collect();
    let payload = json!({
        "dims": op.space().dims(),
        "blocks": blocks_json,
        "norm": op.norm(),
    });
    Ok((checks, payload))
}

fn cmd_spectrum(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let op = build_operator(ctx, false)?;
    let sp = operator_spectrum(&op, ctx.tols.eps_eig)?;
    oracle::check_dense_scale(&ctx.spec)?;
    let dense = oracle::dense_restricted_spectrum(&op, ctx.tols.eps_eig)?;
    let haus = oracle::hausdorff(&sp.values, &dense);
    let checks = vec![Check::measured("dense-spectrum-hausdorff", haus, ctx.tols.oracle)];
    let payload = json!({
        "values": sp.values.iter().map(|&z| crate::report::complex_json(z)).collect::<Vec<_>>(),
        "provenance": sp.provenance,
        "non_normal_caveat": sp.non_normal_caveat,
    });
    Ok((checks, payload))
}

fn cmd_spectral_projector(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let region = ctx
        .cfg
        .region
        .as_ref()
        .ok_or_else(|| CliError::input("spectral-projector requires a region".into()))?
        .to_region();
    let op = build_operator(ctx, false)?;
    let proj = spectral_projector(&op, &region, ctx.tols.eps_eig)?;
    let e = proj.dense_matrix();
    let l = op.dense_matrix();
    let idem = max_abs_diff(&e.dot(&e), &e);
    let selfadj = max_abs_diff(&adjoint(&e), &e);
    let commute = max_abs_diff(&e.dot(&l), &l.dot(&e));
    let sp = check_shift_preserving(&ctx.spec, &e)?;
    oracle::check_dense_scale(&ctx.spec)?;
    let dense_proj = oracle::dense_spectral_projector(&op, &region, ctx.tols.eps_eig)?;
    let agree = max_abs_diff(&e, &dense_proj);
    // Blocks of a projector have integral trace; count ranks from them.
    let dims: Vec<usize> = proj
        .blocks()
        .iter()
        .map(|b| {
            let tr: f64 = (0..b.nrows()).map(|i| b[(i, i)].re).sum();
            tr.round().max(0.0) as usize
        })
        .collect();
    let total: usize = dims.iter().sum();
    let checks = vec![
        Check::measured("idempotent", idem, tol::OFF_DIAGONAL),
        Check::measured("self-adjoint", selfadj, tol::OFF_DIAGONAL),
        Check::measured("commutes-with-operator", commute, tol::OFF_DIAGONAL),
        Check::measured("shift-commutation", sp.residual, sp.threshold),
        Check::measured("dense-projector-agreement", agree, ctx.tols.oracle),
    ];
    let payload = json!({
        "rank": total,
        "fiber_ranks": dims,
    });
    Ok((checks, payload))
}

fn cmd_label_eigen(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let op = build_operator(ctx, false)?;
    let lab = label_eigenvalues(&op, ctx.tols.eps_eig)?;
    // Distinctness: no two label functions agree everywhere.
    let mut distinct = true;
    for i in 0..lab.labels.len() {
        for j in i + 1..lab.labels.len() {
            if lab.labels[i] == lab.labels[j] {
                distinct = false;
            }
        }
    }
    // Labeled values marked real are eigenvalues of their block: the block
    // minus the label is singular there.
    let mut eigen_residual = 0.0f64;
    for (j, label) in lab.labels.iter().enumerate() {
        for w in 0..ctx.spec.n_omega() {
            if lab.real[j][w] {
                let b = &op.blocks()[w];
                let mut shifted = b.clone();
                for i in 0..shifted.nrows() {
                    shifted[(i, i)] -= label[w];
                }
                let svd = sisdiag::linalg::jacobi_svd(&shifted);
                let smin = svd.sigma.last().copied().unwrap_or(0.0);
                eigen_residual = eigen_residual.max(smin);
            }
        }
    }
    let scale = 1.0 + op.norm();
    let checks = vec![
        Check::exact("labels-distinct", distinct),
        Check::measured("labels-are-eigenvalues", eigen_residual, ctx.tols.eps_eig * scale),
    ];
    let payload = json!({
        "count": lab.labels.len(),
        "z0": lab.z0,
        "labels": lab.labels.iter().map(cvec_json).collect::<Vec<_>>(),
        "real": lab.real,
        "kept": lab.kept,
    });
    Ok((checks, payload))
}

fn diagonalization_payload(diag: &Diagonalization) -> Value {
    json!({
        "pairs": diag.pairs.iter().map(|p| json!({
            "sequence": cvec_json(&p.a.values),
            "symbol": cvec_json(&p.a_hat),
            "dims": p.space.dims(),
            "dim_total": p.space.dim_total(),
        })).collect::<Vec<_>>(),
        "reconstruction_residual": diag.recon_residual,
        "orthogonality_residual": diag.orth_residual,
    })
}

fn cmd_diagonalize(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let op = build_operator(ctx, false)?;
    let diag = delta_diagonalize(&op, ctx.tols.eps_eig)?;
    let scale = 1.0 + max_abs(&op.dense_matrix());
    let total: usize = diag.pairs.iter().map(|p| p.space.dim_total()).sum();
    let checks = vec![
        Check::measured("reconstruction", diag.recon_residual, ctx.tols.reconstruction * scale),
        Check::measured("eigenspace-orthogonality", diag.orth_residual, ctx.tols.orthogonality),
        Check::exact("dimension-accounting", total == op.space().dim_total()),
    ];
    Ok((checks, diagonalization_payload(&diag)))
}

fn cmd_ds_check(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let ds = ctx.cfg.ds.clone().unwrap_or(crate::config::DsConfig {
        matrix: None,
        vectors: None,
        family: None,
        n_max: None,
    });
    let explicit_vectors: Option<Vec<CVec>> =
        ds.vectors.as_ref().map(|vs| vs.iter().map(|v| pairs_to_cvec(v)).collect());

    if let Some(rows) = &ds.matrix {
        let n = rows.len();
        let mut a = CMat::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                a[(i, j)] = c(p[0], p[1]);
            }
        }
        let vectors = match explicit_vectors {
            Some(v) => v,
            None => {
                let k = ds.family.unwrap_or(1);
                (0..k).map(|_| instance::random_cvec(n, &mut ctx.rng)).collect()
            }
        };
        let rep = ds_triple_check(&a, &vectors, ds.n_max, ctx.tols.eps_eig)?;
        let checks = vec![Check::exact("iterate-frame-verdict", rep.verdict)];
        let payload = ds_payload(&rep);
        return Ok((checks, payload));
    }

    // Fiber mode: run the criterion on every fiber block of the operator.
    let op = build_operator(ctx, false)?;
    let mut all = true;
    let mut fibers = Vec::new();
    for w in 0..ctx.spec.n_omega() {
        let b = &op.blocks()[w];
        let n = b.nrows();
        if n == 0 {
            fibers.push(json!({ "empty": true }));
            continue;
        }
        let vectors: Vec<CVec> = match &explicit_vectors {
            Some(v) => v.clone(),
            None => {
                let k = ds.family.unwrap_or(n);
                (0..k).map(|_| instance::random_cvec(n, &mut ctx.rng)).collect()
            }
        };
        let rep = ds_triple_check(b, &vectors, ds.n_max, ctx.tols.eps_eig)?;
        all &= rep.verdict;
        fibers.push(ds_payload(&rep));
    }
    let checks = vec![Check::exact("iterate-frame-all-fibers", all)];
    Ok((checks, json!({ "fibers": fibers })))
}

fn ds_payload(rep: &sisdiag::ds::DsReport) -> Value {
    json!({
        "verdict": rep.verdict,
        "eigen": rep.eigen.iter().map(|e| json!({
            "value": crate::report::complex_json(e.value),
            "dim": e.dim,
            "contractive": e.contractive,
            "spanned": e.spanned,
        })).collect::<Vec<_>>(),
        "bounds": rep.bounds.map(|(a, b)| json!([a, b])),
        "truncated": [rep.truncated.0, rep.truncated.1],
        "n_max": rep.n_max,
    })
}

fn cmd_gamma_check(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let action = ctx
        .action
        .clone()
        .ok_or_else(|| CliError::input("gamma-check requires an action".into()))?;

    if ctx.cfg.operator.is_none() {
        // Space-only question: is the configured span symmetry-invariant?
        let signals = generator_signals(ctx)?;
        if signals.is_empty() {
            return Err(CliError::input("gamma-check needs an operator or generators".into()));
        }
        let space = range_from_generators(&ctx.spec, &signals, ctx.tols.eps_rank)?;
        let rep = check_gamma_invariant(&action, &space);
        let checks = vec![Check::measured("covariance", rep.defect, ctx.tols.covariance)];
        return Ok((checks, json!({ "defect": rep.defect, "dims": space.dims() })));
    }

    let op = build_operator(ctx, true)?;
    let mut checks = Vec::new();
    let mut payload = serde_json::Map::new();
    match check_gamma_preserving(&action, &op, ctx.tols.eps_eig) {
        Ok(rep) => {
            let scale = 1.0 + max_abs(&op.dense_matrix());
            checks.push(Check::measured(
                "fiber-conjugation",
                rep.conjugation_defect,
                ctx.tols.conjugation * scale,
            ));
            checks.push(Check::measured(
                "dense-commutation",
                rep.commutator_defect,
                ctx.tols.covariance * scale,
            ));
            checks.push(Check::measured("orbit-spectra", rep.spectra_defect, ctx.tols.eps_eig));
            payload.insert("conjugation_defect".into(), json!(rep.conjugation_defect));
            payload.insert("commutator_defect".into(), json!(rep.commutator_defect));
            payload.insert("spectra_defect".into(), json!(rep.spectra_defect));
        }
        Err(CoreError::NotGammaInvariant { defect }) => {
            checks.push(Check {
                name: "domain-invariance".into(),
                pass: false,
                residual: Some(defect),
                tolerance: Some(ctx.tols.covariance),
            });
            payload.insert("invariance_defect".into(), json!(defect));
        }
        Err(e) => return Err(e.into()),
    }
    // A convolution operator is symmetry-commuting exactly when its sequence
    // is; report that equivalent view too.
    if let Some(OperatorConfig::LatticeConvolution { sequence }) = &ctx.cfg.operator {
        let a = LatticeSequence::from_values(&ctx.spec, pairs_to_cvec(sequence))
            .map_err(|e| CliError::input(e.to_string()))?;
        let sym = sequence_symmetry(&action, &a)?;
        checks.push(Check::exact("sequence-symmetry-exact", sym.exact));
        checks.push(Check::measured(
            "sequence-symmetry-dual",
            sym.dual_defect,
            ctx.tols.sequence_symmetry,
        ));
    }
    Ok((checks, Value::Object(payload)))
}

fn cmd_gamma_diagonalize(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    let action = ctx
        .action
        .clone()
        .ok_or_else(|| CliError::input("gamma-diagonalize requires an action".into()))?;
    let op = build_operator(ctx, true)?;
    let diag = match gamma_diagonalize(&action, &op, ctx.tols.eps_eig) {
        Ok(d) => d,
        Err(CoreError::NotGammaPreserving { defect }) => {
            let checks = vec![Check {
                name: "operator-commutes-with-action".into(),
                pass: false,
                residual: Some(defect),
                tolerance: None,
            }];
            return Ok((checks, json!({ "defect": defect })));
        }
        Err(CoreError::NotGammaInvariant { defect }) => {
            let checks = vec![Check {
                name: "domain-invariance".into(),
                pass: false,
                residual: Some(defect),
                tolerance: Some(ctx.tols.covariance),
            }];
            return Ok((checks, json!({ "defect": defect })));
        }
        Err(e) => return Err(e.into()),
    };
    let scale = 1.0 + max_abs(&op.dense_matrix());
    let total: usize = diag.pairs.iter().map(|p| p.space.dim_total()).sum();
    let mut orbit_constant = true;
    let mut seq_exact = true;
    let mut eigenspace_defect = 0.0f64;
    for pair in &diag.pairs {
        for g in 0..action.order() {
            for w in 0..ctx.spec.n_omega() {
                if pair.a_hat[w] != pair.a_hat[action.sharp(g, w)] {
                    orbit_constant = false;
                }
            }
        }
        let sym = sequence_symmetry(&action, &pair.a)?;
        seq_exact &= sym.exact && sym.dual_defect <= ctx.tols.sequence_symmetry;
        if pair.space.dim_total() > 0 {
            eigenspace_defect = eigenspace_defect.max(check_gamma_invariant(&action, &pair.space).defect);
        }
    }
    let checks = vec![
        Check::measured("reconstruction", diag.recon_residual, ctx.tols.reconstruction * scale),
        Check::measured("eigenspace-orthogonality", diag.orth_residual, ctx.tols.orthogonality),
        Check::exact("dimension-accounting", total == op.space().dim_total()),
        Check::exact("symbols-orbit-constant", orbit_constant),
        Check::exact("sequences-symmetric", seq_exact),
        Check::measured("eigenspace-covariance", eigenspace_defect, ctx.tols.covariance),
    ];
    Ok((checks, diagonalization_payload(&diag)))
}

// ---------------------------------------------------------------- verify

/// Property battery over the configured group (and action, when present):
/// seeded random instances of every object, each validated against a dense
/// oracle or an exact identity.
fn cmd_verify(ctx: &mut Ctx) -> Result<(Vec<Check>, Value), CliError> {
    oracle::check_dense_scale(&ctx.spec)?;
    let spec = ctx.spec.clone();
    let tols = ctx.tols;
    let mut checks = Vec::new();

    // Fiberization: unitarity and the translation phase identity.
    {
        let mut isometry = 0.0f64;
        let mut roundtrip = 0.0f64;
        let mut intertwine = 0.0f64;
        for _ in 0..25 {
            let f = instance::random_signal(&spec, &mut ctx.rng);
            let fib = fiberize(&spec, &f)?;
            isometry = isometry.max((fib.norm() - f.norm()).abs());
            let back = defiberize(&fib)?;
            roundtrip = roundtrip.max(
                f.values.iter().zip(back.values.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
            );
            for i in 0..spec.rank() {
                let mut k = vec![0i64; spec.rank()];
                k[i] = spec.divisors()[i];
                let shifted = fiberize(&spec, &translate(&spec, &f, &k)?)?;
                for w in 0..spec.n_omega() {
                    let phase = spec.character(&spec.omega_point(w), &k);
                    for u in 0..spec.fiber_dim() {
                        intertwine = intertwine
                            .max((shifted.fibers[w][u] - phase * fib.fibers[w][u]).norm());
                    }
                }
            }
        }
        checks.push(Check::measured("fiberization-isometry", isometry, tol::ROUNDTRIP));
        checks.push(Check::measured("fiberization-roundtrip", roundtrip, tol::ROUNDTRIP));
        checks.push(Check::measured("translation-intertwining", intertwine, tol::ROUNDTRIP));
    }

    // Projection vs dense least squares on a random space.
    {
        let space = instance::random_sis(&spec, None, &mut ctx.rng);
        let mut diff = 0.0f64;
        for _ in 0..10 {
            let f = instance::random_signal(&spec, &mut ctx.rng);
            let (p, _) = project(&space, &f)?;
            let dense = oracle::gram_projection(&spec, &space.generators, &f);
            diff = diff.max(
                p.values.iter().zip(dense.values.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
            );
        }
        checks.push(Check::measured("projection-dense-agreement", diff, 1e-9));
    }

    // Frame bounds vs dense frame-operator extremes.
    {
        let mut rel = 0.0f64;
        for _ in 0..5 {
            let gens: Vec<Signal> =
                (0..2).map(|_| instance::random_signal(&spec, &mut ctx.rng)).collect();
            let (lo, hi) = frame_bounds(&spec, &gens, tols.eps_rank)?;
            let (dlo, dhi) = oracle::dense_frame_extremes(&spec, &gens, tols.eps_rank);
            rel = rel.max((lo - dlo).abs() / dlo.max(1.0)).max((hi - dhi).abs() / dhi.max(1.0));
        }
        checks.push(Check::measured("frame-bounds-dense-agreement", rel, tols.oracle));
    }

    // Principal decomposition of a random space.
    {
        let space = instance::random_sis(&spec, None, &mut ctx.rng);
        let gens = principal_decomposition(&space);
        let frame = oracle::dense_frame_operator(&spec, &gens);
        let basis = oracle::ambient_basis(&space);
        let parseval = max_abs_diff(&frame, &basis.dot(&adjoint(&basis)));
        let orth = oracle::translate_cross_inner(&spec, &gens);
        let masks = oracle::support_masks(&spec, &gens)?;
        let nested = masks
            .windows(2)
            .all(|pair| pair[0].iter().zip(pair[1].iter()).all(|(&a, &b)| a || !b));
        checks.push(Check::measured("principal-parseval", parseval, tols.oracle));
        checks.push(Check::measured("principal-orthogonality", orth, tols.orthogonality));
        checks.push(Check::exact("principal-nesting", nested));
    }

    // Normal operators: norm identity, fiber reports, spectrum, projector,
    // diagonalization.
    {
        let mut norm_rel = 0.0f64;
        let mut haus = 0.0f64;
        let mut recon = 0.0f64;
        let mut orth = 0.0f64;
        let mut dims_ok = true;
        for _ in 0..5 {
            let op = instance::random_normal_sp(&spec, None, &mut ctx.rng);
            let dense = op.dense_matrix();
            let dense_norm = spectral_norm(&dense);
            norm_rel = norm_rel.max((op.norm() - dense_norm).abs() / dense_norm.max(1.0));

            let sp = operator_spectrum(&op, tols.eps_eig)?;
            let dsp = oracle::dense_restricted_spectrum(&op, tols.eps_eig)?;
            haus = haus.max(oracle::hausdorff(&sp.values, &dsp));

            let diag = delta_diagonalize(&op, tols.eps_eig)?;
            let scale = 1.0 + max_abs(&dense);
            recon = recon.max(diag.recon_residual / scale);
            orth = orth.max(diag.orth_residual);
            let total: usize = diag.pairs.iter().map(|p| p.space.dim_total()).sum();
            dims_ok &= total == op.space().dim_total();
        }
        checks.push(Check::measured("norm-identity", norm_rel, tols.oracle));
        checks.push(Check::measured("spectrum-hausdorff", haus, tols.oracle));
        checks.push(Check::measured("diagonalization-reconstruction", recon, tols.reconstruction));
        checks.push(Check::measured("diagonalization-orthogonality", orth, tols.orthogonality));
        checks.push(Check::exact("diagonalization-dimensions", dims_ok));
    }

    // Fiber property report vs dense projectors, for one instance.
    {
        let op = instance::random_normal_sp(&spec, None, &mut ctx.rng);
        let rep = fiber_property_report(&op)?;
        let dense = op.dense_matrix();
        // Null space of the dense matrix = orthogonal complement of the
        // domain plus the kernel within it.
        let kernel_blocks: Vec<CMat> =
            rep.kernel.bases.iter().map(|b| b.projector()).collect();
        let kernel_dense = assemble_dense(&spec, &kernel_blocks);
        let basis = oracle::ambient_basis(op.space());
        let domain_proj = basis.dot(&adjoint(&basis));
        let null_all = oracle::dense_null_projector(&dense, tols.eps_rank);
        let id = sisdiag::linalg::identity(spec.size());
        let complement = &id - &domain_proj;
        let kernel_diff = max_abs_diff(&kernel_dense, &(&null_all - &complement));
        let image_blocks: Vec<CMat> = rep.image.bases.iter().map(|b| b.projector()).collect();
        let image_dense = assemble_dense(&spec, &image_blocks);
        let image_diff =
            max_abs_diff(&image_dense, &oracle::dense_range_projector(&dense, tols.eps_rank));
        let adjoint_diff = max_abs_diff(&rep.adjoint.dense_matrix(), &adjoint(&dense));
        checks.push(Check::measured("kernel-dense-agreement", kernel_diff, 1e-9));
        checks.push(Check::measured("image-dense-agreement", image_diff, 1e-9));
        checks.push(Check::measured("adjoint-dense-agreement", adjoint_diff, 1e-9));
        checks.push(Check::exact("normality-detected", rep.normal));
    }

    // Spectral projector around one well-separated spectral value.
    {
        let op = instance::random_normal_sp(&spec, None, &mut ctx.rng);
        let sp = operator_spectrum(&op, tols.eps_eig)?;
        if let Some(&center) = sp.values.first() {
            let gap = sp
                .values
                .iter()
                .filter(|&&z| (z - center).norm() > 1e-9)
                .map(|&z| (z - center).norm())
                .fold(f64::INFINITY, f64::min);
            let radius = if gap.is_finite() { gap / 2.0 } else { 0.5 };
            let region = Region::Disc { center, radius };
            let proj = spectral_projector(&op, &region, tols.eps_eig)?;
            let e = proj.dense_matrix();
            let l = op.dense_matrix();
            let laws = max_abs_diff(&e.dot(&e), &e)
                .max(max_abs_diff(&adjoint(&e), &e))
                .max(max_abs_diff(&e.dot(&l), &l.dot(&e)));
            let dense_proj = oracle::dense_spectral_projector(&op, &region, tols.eps_eig)?;
            checks.push(Check::measured("spectral-projector-laws", laws, tol::OFF_DIAGONAL));
            checks.push(Check::measured(
                "spectral-projector-dense-agreement",
                max_abs_diff(&e, &dense_proj),
                tols.oracle,
            ));
        }
    }

    // Iterate-frame criterion on the fibers of a contractive normal operator.
    {
        let full = SISpace::full(&spec);
        let op = instance::random_normal_sp(&spec, Some(full), &mut ctx.rng);
        let mut all = true;
        for w in 0..spec.n_omega() {
            let b = &op.blocks()[w];
            if b.nrows() == 0 {
                continue;
            }
            let vectors: Vec<CVec> =
                (0..b.nrows()).map(|_| instance::random_cvec(b.nrows(), &mut ctx.rng)).collect();
            let rep = ds_triple_check(b, &vectors, None, tols.eps_eig)?;
            all &= rep.verdict;
        }
        checks.push(Check::exact("iterate-frame-fibers", all));
    }

    // Negative control: a modulation by a character nontrivial on the
    // lattice must fail the commutation check.
    if let Some(xi) = nontrivial_character(&spec) {
        let dense = dense_modulation(&spec, &xi);
        let rep = check_shift_preserving(&spec, &dense)?;
        checks.push(Check::expected_defect("modulation-fails-commutation", rep.residual));
    }

    // Symmetry battery, when an action is configured.
    if let Some(action) = ctx.action.clone() {
        // Cocycle identity, exactly, on every pair and point.
        let mut cocycle = true;
        for g1 in 0..action.order() {
            for g2 in 0..action.order() {
                let g12 = action.mul(g1, g2);
                for w in 0..spec.n_omega() {
                    let t1 = action.pi_table(w, g1);
                    let t2 = action.pi_table(action.sharp(g1, w), g2);
                    let direct = action.pi_table(w, g12);
                    for u in 0..spec.fiber_dim() {
                        if direct[u] != t2[t1[u]] {
                            cocycle = false;
                        }
                    }
                }
            }
        }
        checks.push(Check::exact("cocycle-identity", cocycle));

        // Closures are symmetry-invariant.
        let f = instance::random_signal(&spec, &mut ctx.rng);
        let closed = gamma_closure(&action, &[f], tols.eps_rank)?;
        let inv = check_gamma_invariant(&action, &closed);
        checks.push(Check::measured("closure-covariance", inv.defect, tols.covariance));

        // Propagated operators commute with the action.
        let op = instance::random_gamma_operator(&action, &mut ctx.rng);
        let rep = check_gamma_preserving(&action, &op, tols.eps_eig)?;
        let scale = 1.0 + max_abs(&op.dense_matrix());
        checks.push(Check::measured(
            "propagation-conjugation",
            rep.conjugation_defect,
            tols.conjugation * scale,
        ));
        checks.push(Check::measured("orbit-spectra", rep.spectra_defect, tols.eps_eig));

        // Symmetric diagonalization postconditions.
        let diag = gamma_diagonalize(&action, &op, tols.eps_eig)?;
        let mut orbit_constant = true;
        let mut seq_ok = true;
        let mut cov = 0.0f64;
        for pair in &diag.pairs {
            for g in 0..action.order() {
                for w in 0..spec.n_omega() {
                    if pair.a_hat[w] != pair.a_hat[action.sharp(g, w)] {
                        orbit_constant = false;
                    }
                }
            }
            seq_ok &= sequence_symmetry(&action, &pair.a)?.exact;
            if pair.space.dim_total() > 0 {
                cov = cov.max(check_gamma_invariant(&action, &pair.space).defect);
            }
        }
        checks.push(Check::measured(
            "gamma-reconstruction",
            diag.recon_residual,
            tols.reconstruction * scale,
        ));
        checks.push(Check::exact("gamma-symbols-orbit-constant", orbit_constant));
        checks.push(Check::exact("gamma-sequences-symmetric", seq_ok));
        checks.push(Check::measured("gamma-eigenspace-covariance", cov, tols.covariance));

        // Negative control: a point mass on a moved lattice point is not
        // symmetric.
        if let Some(t) = moved_lattice_point(&action) {
            let a = LatticeSequence::delta(&spec, &spec.lattice_point(t));
            let sym = sequence_symmetry(&action, &a)?;
            checks.push(Check::expected_defect(
                "asymmetric-sequence-detected",
                if sym.exact { 0.0 } else { sym.dual_defect.max(f64::MIN_POSITIVE) },
            ));
        }
    }

    let passed = checks.iter().filter(|c| c.pass).count();
    let payload = json!({
        "checks_total": checks.len(),
        "checks_passed": passed,
        "group_size": spec.size(),
        "action_order": ctx.action.as_ref().map(|a| a.order()),
    });
    Ok((checks, payload))
}

/// A frequency outside the annihilator, if the lattice is nontrivial.
fn nontrivial_character(spec: &GroupSpec) -> Option<Vec<i64>> {
    (0..spec.rank()).find_map(|i| {
        if spec.moduli()[i] / spec.divisors()[i] > 1 {
            let mut xi = vec![0i64; spec.rank()];
            xi[i] = 1;
            Some(xi)
        } else {
            None
        }
    })
}

/// A lattice point whose orbit under the action is not a fixed point.
fn moved_lattice_point(action: &AutomorphismAction) -> Option<usize> {
    let spec = action.spec();
    (0..spec.lattice_size()).find(|&t| {
        let p = spec.lattice_point(t);
        (0..action.order()).any(|g| spec.lattice_index(&action.apply(g, &p)) != t)
    })
}
