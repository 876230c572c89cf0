use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter point: {0}")]
    InvalidParam(String),

    #[error("parameter {theta:?} lies outside the domain of model `{model}`")]
    OutOfDomain { model: String, theta: Vec<f64> },

    #[error("Fisher information is singular or not positive definite")]
    SingularInformation,

    #[error("observed Hessian is singular")]
    SingularHessian,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid model construction: {0}")]
    InvalidModel(String),

    #[error("model `{0}` does not provide analytic cumulants")]
    NoAnalyticCumulants(String),

    #[error("no closed-form bias-reduction prior for model `{0}`: it declares none of one-dimensional, condition (C), constant Fisher information")]
    UnsupportedClosedForm(String),

    #[error("prior gradient field is not integrable (antisymmetric residual {residual:e} > {tolerance:e})")]
    NonIntegrable { residual: f64, tolerance: f64 },

    #[error("maximum likelihood point is not stationary (gradient norm {0:e})")]
    NotStationary(f64),

    #[error("MCMC coordinate {coordinate} accepted no proposals (step size {step:e}, {proposals} proposals)")]
    ZeroAcceptance {
        coordinate: usize,
        step: f64,
        proposals: usize,
    },

    #[error("step-size tuning failed after {rounds} rounds (acceptance rates {rates:?})")]
    TuningFailed { rounds: usize, rates: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("every replicate was excluded ({0} replicates)")]
    AllExcluded(usize),

    #[error("no exact posterior mean for model `{model}` under prior `{prior}`")]
    NoClosedPosterior { model: String, prior: String },

    #[error("unknown {what} `{name}` (valid: {valid})")]
    UnknownName {
        what: &'static str,
        name: String,
        valid: String,
    },

    #[error("maximum likelihood estimation failed: {0}")]
    MleFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the caller's input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::UnknownName { .. }
                | Error::Config(_)
                | Error::InvalidParam(_)
                | Error::InvalidData(_)
                | Error::InvalidModel(_)
                | Error::DimensionMismatch { .. }
                | Error::OutOfDomain { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
