use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter, covariance or problem definition failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The least-squares sample matrix of a zero-order estimator does not have full rank.
    #[error(
        "singular regression: {samples} samples span rank {rank} of {required} perturbed \
         directions; increase the sample count"
    )]
    SingularRegression {
        samples: usize,
        rank: usize,
        required: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadratic program failed: {0}")]
    QpFailure(String),

    /// A simulation or optimization left its numerically stable regime.
    #[error("diverged: {0}")]
    Diverged(String),
}
