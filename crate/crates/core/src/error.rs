use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("degenerate missingness: Pr(R=1) = {0}")]
    DegenerateMissingness(f64),

    /// The point is not in the image of the forward map; importance weight is zero.
    #[error("outside the image of the reparameterization: {0}")]
    OutOfImage(String),

    #[error("non-finite jacobian entry in column {column}")]
    NonFiniteJacobian { column: usize },

    #[error("near-singular jacobian: log|det| = {log_abs_det}")]
    SingularJacobian { log_abs_det: f64 },

    #[error("no draw in target support ({n_draws} draws, all weights zero)")]
    NoSupport { n_draws: usize },

    #[error("constant column `{0}`")]
    ConstantColumn(String),

    #[error("too few draws: {0}")]
    TooFewDraws(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoSupport { .. } => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::KindMismatch { .. } => "kind_mismatch",
            Error::DegenerateMissingness(_) => "degenerate_missingness",
            Error::OutOfImage(_) => "out_of_image",
            Error::NonFiniteJacobian { .. } => "non_finite_jacobian",
            Error::SingularJacobian { .. } => "singular_jacobian",
            Error::NoSupport { .. } => "no_support",
            Error::ConstantColumn(_) => "constant_column",
            Error::TooFewDraws(_) => "too_few_draws",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
