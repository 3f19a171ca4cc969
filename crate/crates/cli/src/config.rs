//! JSON run configuration: group geometry, optional point-symmetry action,
//! generator signals, an operator source, tolerance overrides, and a seed.
//! Unknown keys are rejected everywhere; semantic validation happens at load
//! time so every downstream construction starts from a checked description.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sisdiag::group::GroupSpec;
use sisdiag::symmetry::{build_action, preset_action, AutomorphismAction};
use sisdiag::{build_group_spec, Region};

use crate::error::CliError;

pub const COMMANDS: [&str; 15] = [
    "fiberize",
    "range",
    "frame-bounds",
    "strata",
    "principal",
    "check-sp",
    "range-operator",
    "spectrum",
    "spectral-projector",
    "label-eigen",
    "diagonalize",
    "ds-check",
    "gamma-check",
    "gamma-diagonalize",
    "verify",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub group: GroupConfig,
    #[serde(default)]
    pub action: Option<ActionConfig>,
    #[serde(default)]
    pub generators: Vec<GeneratorConfig>,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    /// Optional command echo; when present it must match the invoked command.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub ds: Option<DsConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub moduli: Vec<i64>,
    pub divisors: Vec<i64>,
}

/// Exactly one source: a named preset or explicit generator matrices
/// (row-major nested rows).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub generators: Option<Vec<Vec<Vec<i64>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    /// Point mass at a group point.
    Delta { point: Vec<i64> },
    /// Full sample vector, group enumeration order, `[re, im]` pairs.
    Explicit { values: Vec<[f64; 2]> },
    /// Seeded random space with prescribed fiber dimensions: one value used
    /// everywhere, or one per domain point.
    Random { dims: DimSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Uniform(usize),
    PerOmega(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    /// Convolution by a lattice sequence, lattice enumeration order.
    LatticeConvolution { sequence: Vec<[f64; 2]> },
    /// Dense matrix from a file: `.json` (nested `[re, im]` rows) or `.csv`
    /// (interleaved re,im columns).
    DenseFile { path: String },
    /// Seeded random normal lattice-commuting operator on a random space.
    RandomNormal,
    /// Seeded random normal operator commuting with the configured action.
    RandomGamma,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionConfig {
    Disc { center: [f64; 2], radius: f64 },
    Rect { re_min: f64, re_max: f64, im_min: f64, im_max: f64 },
}

impl RegionConfig {
    pub fn to_region(&self) -> Region {
        match *self {
            RegionConfig::Disc { center, radius } => Region::Disc {
                center: num_complex::Complex64::new(center[0], center[1]),
                radius,
            },
            RegionConfig::Rect { re_min, re_max, im_min, im_max } => {
                Region::Rect { re_min, re_max, im_min, im_max }
            }
        }
    }
}

/// Input for the iterate-frame criterion: an explicit matrix, or (when
/// absent) the fiber blocks of the configured operator; explicit vectors, or
/// a seeded random family of the given size.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsConfig {
    #[serde(default)]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub vectors: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub family: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
}

/// Tolerance overrides; anything left unset falls back to the library
/// defaults. `oracle` bounds the dense brute-force comparisons.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub eps_rank: Option<f64>,
    pub eps_eig: Option<f64>,
    pub reconstruction: Option<f64>,
    pub orthogonality: Option<f64>,
    pub membership: Option<f64>,
    pub covariance: Option<f64>,
    pub conjugation: Option<f64>,
    pub sequence_symmetry: Option<f64>,
    pub oracle: Option<f64>,
}

/// Read and fully validate a config file. Returns the parsed config together
/// with the raw bytes (digested into reports).
pub fn load_config(path: &Path) -> Result<(Config, Vec<u8>), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let cfg: Config = serde_json::from_slice(&bytes).map_err(|e| {
        CliError::input(format!("{} at line {} column {}", e, e.line(), e.column()))
    })?;
    validate(&cfg, path.parent())?;
    Ok((cfg, bytes))
}

/// Semantic validation: the group spec builds, the action builds from exactly
/// one source, dimensions and file references are sound, and names are known.
pub fn validate(cfg: &Config, base_dir: Option<&Path>) -> Result<(), CliError> {
    let spec = build_group_spec(&cfg.group.moduli, &cfg.group.divisors)
        .map_err(|e| CliError::input(format!("group: {e}")))?;

    if let Some(action) = &cfg.action {
        build_configured_action(&spec, action)?;
    }

    for (i, g) in cfg.generators.iter().enumerate() {
        match g {
            GeneratorConfig::Delta { point } => {
                if point.len() != spec.rank() {
                    return Err(CliError::input(format!(
                        "generator {i}: point has {} coordinates, group rank is {}",
                        point.len(),
                        spec.rank()
                    )));
                }
            }
            GeneratorConfig::Explicit { values } => {
                if values.len() != spec.size() {
                    return Err(CliError::input(format!(
                        "generator {i}: {} samples, group size is {}",
                        values.len(),
                        spec.size()
                    )));
                }
            }
            GeneratorConfig::Random { dims } => {
                let ok = match dims {
                    DimSpec::Uniform(d) => *d <= spec.fiber_dim(),
                    DimSpec::PerOmega(v) => {
                        v.len() == spec.n_omega() && v.iter().all(|&d| d <= spec.fiber_dim())
                    }
                };
                if !ok {
                    return Err(CliError::input(format!(
                        "generator {i}: dims must be at most {} (one value or {} values)",
                        spec.fiber_dim(),
                        spec.n_omega()
                    )));
                }
            }
        }
    }

    match &cfg.operator {
        Some(OperatorConfig::LatticeConvolution { sequence }) => {
            if sequence.len() != spec.lattice_size() {
                return Err(CliError::input(format!(
                    "operator sequence has {} entries, lattice size is {}",
                    sequence.len(),
                    spec.lattice_size()
                )));
            }
        }
        Some(OperatorConfig::DenseFile { path }) => {
            let resolved = resolve_path(path, base_dir);
            if !resolved.exists() {
                return Err(CliError::input(format!(
                    "operator file {} does not exist",
                    resolved.display()
                )));
            }
        }
        Some(OperatorConfig::RandomGamma) => {
            if cfg.action.is_none() {
                return Err(CliError::input(
                    "operator kind random_gamma requires an action".into(),
                ));
            }
        }
        Some(OperatorConfig::RandomNormal) | None => {}
    }

    if let Some(cmd) = &cfg.command {
        if !COMMANDS.contains(&cmd.as_str()) {
            return Err(CliError::input(format!("unknown command {cmd:?}")));
        }
    }

    if let Some(RegionConfig::Disc { radius, .. }) = &cfg.region {
        if *radius <= 0.0 {
            return Err(CliError::input("region radius must be positive".into()));
        }
    }
    if let Some(RegionConfig::Rect { re_min, re_max, im_min, im_max }) = &cfg.region {
        if re_min > re_max || im_min > im_max {
            return Err(CliError::input("region rectangle is empty".into()));
        }
    }

    if let Some(ds) = &cfg.ds {
        if let Some(m) = &ds.matrix {
            let n = m.len();
            if n == 0 || m.iter().any(|row| row.len() != n) {
                return Err(CliError::input("ds matrix must be square and nonempty".into()));
            }
            if let Some(vs) = &ds.vectors {
                if vs.iter().any(|v| v.len() != n) {
                    return Err(CliError::input("ds vectors must match the matrix dimension".into()));
                }
            }
        }
        if ds.vectors.is_some() && ds.family.is_some() {
            return Err(CliError::input("ds: give explicit vectors or a family size, not both".into()));
        }
    }

    for (name, v) in [
        ("eps_rank", cfg.tolerances.eps_rank),
        ("eps_eig", cfg.tolerances.eps_eig),
        ("reconstruction", cfg.tolerances.reconstruction),
        ("orthogonality", cfg.tolerances.orthogonality),
        ("membership", cfg.tolerances.membership),
        ("covariance", cfg.tolerances.covariance),
        ("conjugation", cfg.tolerances.conjugation),
        ("sequence_symmetry", cfg.tolerances.sequence_symmetry),
        ("oracle", cfg.tolerances.oracle),
    ] {
        if let Some(x) = v {
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::input(format!("tolerance {name} must be positive and finite")));
            }
        }
    }

    Ok(())
}

/// Build the action described by the config (already-validated exclusivity is
/// re-checked here so the function stands alone).
pub fn build_configured_action(
    spec: &Arc<GroupSpec>,
    action: &ActionConfig,
) -> Result<AutomorphismAction, CliError> {
    match (&action.preset, &action.generators) {
        (Some(_), Some(_)) | (None, None) => {
            Err(CliError::input("exactly one action source: preset or generators".into()))
        }
        (Some(name), None) => {
            preset_action(spec, name).map_err(|e| CliError::input(format!("action: {e}")))
        }
        (None, Some(mats)) => {
            let r = spec.rank();
            let mut flat = Vec::with_capacity(mats.len());
            for (i, m) in mats.iter().enumerate() {
                if m.len() != r || m.iter().any(|row| row.len() != r) {
                    return Err(CliError::input(format!(
                        "action generator {i} is not a {r}x{r} matrix"
                    )));
                }
                flat.push(m.iter().flatten().copied().collect::<Vec<i64>>());
            }
            build_action(spec, &flat).map_err(|e| CliError::input(format!("action: {e}")))
        }
    }
}

/// Paths in configs resolve relative to the config file's directory.
pub fn resolve_path(path: &str, base_dir: Option<&Path>) -> std::path::PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.unwrap_or_else(|| Path::new(".")).join(p)
    }
}
