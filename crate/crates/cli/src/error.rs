//! Error classification for the exit-code contract: input problems (bad
//! config, unreadable files, invalid regions) exit 2; mathematical check
//! failures are reported in-band and exit 1; success exits 0.

use std::fmt;

use sisdiag::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Configuration, IO, or validation problem. Exit 2.
    Input(String),
    /// A mathematical precondition failed outside a check-style command;
    /// carries the residual when one exists. Exit 1.
    Math(String, Option<f64>),
}

impl CliError {
    pub fn input(msg: String) -> Self {
        CliError::Input(msg)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Math(..) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Math(m, Some(r)) => write!(f, "check failed: {m} (defect {r:.3e})"),
            CliError::Math(m, None) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// The defect carried by a mathematical failure, when the variant has one.
fn core_residual(e: &CoreError) -> Option<f64> {
    match e {
        CoreError::NotNormal { residual, .. } => Some(*residual),
        CoreError::NotShiftPreserving { residual } => Some(*residual),
        CoreError::NotInvariant { leakage } => Some(*leakage),
        CoreError::NotGammaInvariant { defect } => Some(*defect),
        CoreError::NotGammaPreserving { defect } => Some(*defect),
        CoreError::Inconsistent { residual, .. } => Some(*residual),
        _ => None,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NotNormal { .. }
            | CoreError::NotShiftPreserving { .. }
            | CoreError::NotInvariant { .. }
            | CoreError::NotGammaInvariant { .. }
            | CoreError::NotGammaPreserving { .. }
            | CoreError::Inconsistent { .. } => {
                let r = core_residual(&e);
                CliError::Math(e.to_string(), r)
            }
            other => CliError::Input(other.to_string()),
        }
    }
}
