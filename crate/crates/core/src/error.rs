use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rotation axis not normalized: |n| = {norm}")]
    AxisNotNormalized { norm: f64 },
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix is not special unitary: |det - 1| = {deviation:.3e}")]
    NotSpecialUnitary { deviation: f64 },
    #[error("empty list of unitaries")]
    EmptyList,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("energy mismatch between planes: ratio {ratio:.4}")]
    EnergyMismatch { ratio: f64 },
    #[error("non-periodic leakage: {fraction:.3} of the far-field weight is off-order")]
    NonPeriodicLeakage { fraction: f64 },
    #[error("spectrum not normalized: sum = {sum}")]
    NotNormalized { sum: f64 },
    #[error("every pixel is singular (sin E below threshold); field cannot be reconstructed")]
    AllPixelsSingular,
    #[error("physicality repair needs {fraction:.3} of pixels filled, over budget {budget:.3}")]
    RepairBudgetExceeded { fraction: f64, budget: f64 },
    #[error("no candidate to sift")]
    EmptyCandidateList,
    #[error("measurement set incomplete: {0}")]
    IncompleteMeasurements(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
