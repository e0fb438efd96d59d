use thiserror::Error;

/// Errors raised by the numerical routines and the experiment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("hypothesis error: {0}")]
    Hypothesis(String),
    #[error("degenerate competitor: {0}")]
    Degenerate(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Domain(_) => "domain",
            Error::Geometry(_) => "geometry",
            Error::Quadrature(_) => "quadrature",
            Error::Infeasible(_) => "infeasible",
            Error::Fit(_) => "fit",
            Error::Hypothesis(_) => "hypothesis",
            Error::Degenerate(_) => "degenerate",
            Error::NotFound(_) => "not-found",
            Error::Validation(_) => "validation",
            Error::NonConvergence(_) => "non-convergence",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_) => 2,
            Error::Geometry(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
