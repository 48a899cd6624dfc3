use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fock cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),

    #[error("cutoff mismatch: n_max={left} vs n_max={right}")]
    CutoffMismatch { left: usize, right: usize },

    #[error("basis index out of range: n={n} exceeds n_max={n_max}")]
    PhotonNumberOutOfRange { n: usize, n_max: usize },

    #[error("field truncation discards probability {tail:.3e} beyond n_max={n_max} (limit 1e-10)")]
    InadequateCutoff { tail: f64, n_max: usize },

    #[error("thermal field has no pure-state representation")]
    ThermalNotPure,

    #[error("population {population:.3e} on |upper, n_max⟩ of mode {mode} would leave the truncated space")]
    CutoffOverflow { mode: u8, population: f64 },

    #[error("state is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("subsystem {keep} is not contained in {from}")]
    InvalidSubsystem { keep: String, from: String },

    #[error("observable `{0}` is not Hermitian")]
    NonHermitianObservable(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("observable `{observable}` does not act on subsystem {subsystem}")]
    ObservableSubsystem { observable: String, subsystem: String },

    #[error("probability {0} deviates from [0, 1] by more than 1e-10")]
    ProbabilityOutOfRange(f64),

    #[error("{0} is defined for pure field preparations only")]
    MixedPreparation(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical contract violated: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
