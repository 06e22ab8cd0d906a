use crate::baselines::LassoFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("input contains NaN or infinite values")]
    NonFiniteInput,

    #[error("column {0} has zero variance")]
    ZeroVarianceColumn(usize),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not enough observations: {n} rows for {required} required")]
    InsufficientData { n: usize, required: usize },

    #[error("standard error of the indirect effect is zero while the effect is not")]
    DegenerateSe,

    #[error("lasso did not converge within {} iterations", .0.n_iterations)]
    NotConverged(Box<LassoFit>),

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("sample size {n} too small for dimension {dim}")]
    SampleTooSmall { n: usize, dim: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no results to score")]
    EmptyResults,
}

impl Error {
    /// True for failures caused by the numbers themselves rather than by
    /// how the call was set up.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteInput
                | Error::ZeroVarianceColumn(_)
                | Error::RankDeficient
                | Error::DegenerateSe
                | Error::NotConverged(_)
                | Error::NotPsd { .. }
        )
    }
}
