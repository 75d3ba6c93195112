use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("matrix is not normal (residual {residual:.3e})")]
    NotNormal { residual: f64 },

    #[error("matrix is not traceless hermitian (hermiticity {hermiticity:.3e}, trace {trace:.3e})")]
    NotTracelessHermitian { hermiticity: f64, trace: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("logarithm outside principal domain: {0}")]
    LogDomain(String),

    #[error("commutator input too far from identity: {distance:.3e} > {max:.3e}")]
    CommutatorDomain { distance: f64, max: f64 },

    #[error("commutator basis change failed: off-diagonal residual {0:.3e}")]
    CommutatorBasis(f64),

    #[error("gate set error: {0}")]
    GateSet(String),

    #[error("gate '{name}' is not unitary (residual {residual:.3e})")]
    GateNotUnitary { name: String, residual: f64 },

    #[error("mixed alphabets in composition")]
    MixedAlphabets,

    #[error("word/value mismatch: {0}")]
    WordMismatch(String),

    #[error("net entry cap {0} exceeded")]
    NetCapExceeded(usize),

    #[error("net is empty")]
    EmptyNet,

    #[error("net fingerprint mismatch")]
    FingerprintMismatch,

    #[error("corrupt net file: {0}")]
    CorruptNet(String),

    #[error("net entry {index} inconsistent with its word (residual {residual:.3e})")]
    NetEntryInconsistent { index: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("gate set is not inverse-closed: no dagger for gate '{0}'")]
    NotInverseClosed(String),

    #[error("gate set lacks irrep element {0}")]
    MissingIrrepElement(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
