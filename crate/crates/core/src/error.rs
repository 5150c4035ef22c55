use thiserror::Error;

pub type Result<T> = std::result::Result<T, SgplError>;

#[derive(Debug, Error)]
pub enum SgplError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no cell reaches n_min_per_cell = {n_min}; lower resolution or n_min")]
    NoCandidateCells { n_min: usize },

    #[error("parameter outside its domain: {0}")]
    Domain(String),

    #[error("degenerate regressor configuration: alpha1 - 2*lambda*alpha5 = {denominator:e}")]
    DegenerateRegressor { denominator: f64 },

    #[error("degenerate residual variance: sigma2 update = {sigma2:e}")]
    DegenerateVariance { sigma2: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("dense ML oracle is capped at N = {cap}, got N = {n}; use SG-PL alone or subsample")]
    OracleCap { n: usize, cap: usize },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SgplError {
    /// Process exit code: 1 for input/config problems, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            SgplError::Domain(_)
            | SgplError::DegenerateRegressor { .. }
            | SgplError::DegenerateVariance { .. }
            | SgplError::Singular(_)
            | SgplError::Internal(_) => 2,
            _ => 1,
        }
    }

    pub fn is_numerical(&self) -> bool {
        self.exit_code() == 2
    }
}
