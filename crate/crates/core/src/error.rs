use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("panel needs at least {min} time points, got {got}")]
    TooFewTimePoints { got: usize, min: usize },
    #[error("panel has no series")]
    NoSeries,
    #[error("duplicate series name `{0}`")]
    DuplicateSeries(String),
    #[error("non-finite value at time point {row}, series `{series}`")]
    NonFinite { row: usize, series: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("series `{series}` assigned to both `{first}` and `{second}`")]
    NotDisjoint { series: String, first: String, second: String },
    #[error("set `{0}` has no members")]
    EmptySet(String),
    #[error("unknown set label `{0}`")]
    UnknownLabel(String),
    #[error("partition references series `{0}` that is not in the panel")]
    UnknownSeries(String),
    #[error(
        "{q} conditioning columns leave no residual degrees of freedom with {rows} aligned rows; \
         use fewer conditioning series or a longer panel"
    )]
    RankDeficient { q: usize, rows: usize },
    #[error("conditioning covariance is numerically singular (zero-variance columns: {columns:?})")]
    SingularConditioning { columns: Vec<usize> },
    #[error("{0} is numerically zero after partialing out the conditioning set")]
    DegenerateSet(&'static str),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("matrix has no eigenvalue above the pseudo-inverse threshold")]
    ZeroMatrix,
    #[error("block length {block} is invalid for {rows} rows: {reason}")]
    BlockLength { block: usize, rows: usize, reason: &'static str },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{failed} of {total} bootstrap replicates failed (last error: {last})")]
    TooManyFailures { failed: usize, total: usize, last: String },
    #[error("regressor matrix is rank deficient")]
    SingularRegressors,
    #[error("coefficient covariance block is singular")]
    SingularWald,
    #[error("duplicate result for edge {from} -> {to}")]
    DuplicateEdge { from: String, to: String },
    #[error("coefficient {coefficient} gives an unstable system (spectral radius {radius})")]
    Unstable { coefficient: f64, radius: f64 },
}

impl Error {
    /// Numerical failures as opposed to invalid inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::SingularConditioning { .. }
                | Error::DegenerateSet(_)
                | Error::Asymmetric(_)
                | Error::ZeroMatrix
                | Error::TooManyFailures { .. }
                | Error::SingularRegressors
                | Error::SingularWald
        )
    }
}
