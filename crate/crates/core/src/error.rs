use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad grouping of errors, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input files or configuration.
    Parse,
    /// A physical or numerical precondition does not hold.
    Precondition,
    /// The inversion itself failed (noise, step size, unidentifiable quantity).
    Estimation,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cavity dimension {0}: must be at least 2")]
    InvalidDimension(usize),

    #[error("invalid qubit preparation k={0}: must be 1, 2 or 3")]
    InvalidPreparation(usize),

    #[error("truncation at dimension {dim} leaves tail mass {tail:.3e} (threshold {threshold:.1e})")]
    TruncationInsufficient { dim: usize, tail: f64, threshold: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("detuning is zero; the dispersive description requires a != omega")]
    DetuningZero,

    #[error("joint cavity dimension {requested} exceeds the cap of {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("invalid noise spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("grid does not contain the nodes needed by the {stencil} stencil: {message}")]
    GridIncompatible { stencil: &'static str, message: String },

    #[error("invalid step size {0}: must be positive and finite")]
    InvalidStep(f64),

    #[error("negative radicand {0:.3e} in coupling estimate (noise or step size too large)")]
    NegativeRadicand(f64),

    #[error("coupling {g:.3e} is below the identifiability threshold {g_min:.3e}")]
    CouplingTooSmall { g: f64, g_min: f64 },

    #[error("omega is unidentifiable: the quadrature-mean derivatives are below {threshold:.1e} (zero-mean cavity state)")]
    OmegaUnidentifiable { threshold: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Parse { .. } | Schema(_) | Config(_) | InvalidSpec(_) => ErrorClass::Parse,
            InvalidDimension(_)
            | InvalidPreparation(_)
            | TruncationInsufficient { .. }
            | InvalidState(_)
            | Shape(_)
            | InvalidHamiltonian(_)
            | DetuningZero
            | Capacity { .. }
            | GridIncompatible { .. }
            | InvalidStep(_) => ErrorClass::Precondition,
            NegativeRadicand(_) | CouplingTooSmall { .. } | OmegaUnidentifiable { .. } => {
                ErrorClass::Estimation
            }
            Io { .. } => ErrorClass::Io,
        }
    }

    /// Short stable identifier, used in reports and sweep output.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            InvalidDimension(_) => "invalid-dimension",
            InvalidPreparation(_) => "invalid-preparation",
            TruncationInsufficient { .. } => "truncation-insufficient",
            InvalidState(_) => "invalid-state",
            Shape(_) => "shape",
            InvalidHamiltonian(_) => "invalid-hamiltonian",
            DetuningZero => "detuning-zero",
            Capacity { .. } => "capacity",
            InvalidSpec(_) => "invalid-spec",
            Config(_) => "config",
            Parse { .. } => "parse",
            Schema(_) => "schema",
            GridIncompatible { .. } => "grid-incompatible",
            InvalidStep(_) => "invalid-step",
            NegativeRadicand(_) => "negative-radicand",
            CouplingTooSmall { .. } => "coupling-too-small",
            OmegaUnidentifiable { .. } => "omega-unidentifiable",
            Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
