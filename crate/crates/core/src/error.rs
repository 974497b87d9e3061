use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid mark law: {0}")]
    InvalidLaw(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Threshold outside the admissible range `c > max{0, mu * vol(B)}`.
    #[error("threshold c must satisfy c > max{{0, mu*vol(B)}} = {bound}; got c = {c}")]
    ThresholdTooSmall { c: f64, bound: f64 },

    #[error("theta = {theta} lies outside the domain of the moment generating function")]
    Domain { theta: f64 },

    #[error("no tilt attains mean {target}: the moment generating function blows up first")]
    Unattainable { target: f64 },

    #[error("point at radius {radius} lies outside the simulated truncation radius {truncation}")]
    Truncation { radius: f64, truncation: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
}

impl ScanError {
    /// True for errors caused by bad user input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ScanError::InvalidKernel(_)
                | ScanError::InvalidLaw(_)
                | ScanError::InvalidArgument(_)
                | ScanError::ThresholdTooSmall { .. }
                | ScanError::Domain { .. }
                | ScanError::Unattainable { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, ScanError>;

#[allow(dead_code)]
pub(crate) fn invalid(msg: impl Into<String>) -> ScanError {
    ScanError::InvalidArgument(msg.into())
}
