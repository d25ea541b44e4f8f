use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The config file parsed but a field is missing, mistyped or unknown.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("point ({i}, {theta}) lies outside the source support (0, {i_max}] x [0, pi]")]
    OutsideSupport { i: f64, theta: f64, i_max: f64 },

    /// Dyadic refinement did not settle within the allowed number of doublings.
    #[error("quadrature did not converge: last estimates {previous:e} and {last:e} (tolerance {tolerance:e})")]
    QuadratureNonConvergence {
        previous: f64,
        last: f64,
        tolerance: f64,
    },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    EigenNonConvergence { sweeps: usize, residual: f64 },

    /// A linear program ended without an optimal solution.
    #[error("linear program `{name}` is {status}")]
    LpStatus { name: String, status: String },

    #[error("missing interval statistics for {0}")]
    MissingStats(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
