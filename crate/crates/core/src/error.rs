use thiserror::Error;

/// Crate-wide error type.
///
/// Numerical payloads (residuals, last iterates) are widened to `f64` so the
/// error stays independent of the scalar type used for the computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid wavelet basis: {0}")]
    InvalidBasis(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("labels must contain both classes 0 and 1")]
    SingleClass,

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        last_omega: Vec<f64>,
        last_intercept: f64,
    },

    #[error("singular system in {0}")]
    Singular(&'static str),

    #[error("rank deficient reduction: {achieved} of {requested} components extracted")]
    RankDeficient { achieved: usize, requested: usize },

    #[error("soft threshold annihilated the loading of component {component}; lower tau")]
    SparsityTooStrong { component: usize },

    #[error("separation detected (|gamma| reached {max_abs:e}); use a smaller q or a larger tau")]
    Separation { max_abs: f64 },

    #[error("cannot stratify {k} folds: class {class} has only {count} members")]
    Stratification { k: usize, class: u8, count: usize },

    #[error("AICc undefined: n = {n} <= k_eff + 1 = {}", k_eff + 1)]
    UndefinedCriterion { n: usize, k_eff: usize },

    #[error("model selection failed: every grid point failed to fit")]
    SelectionFailed,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: unsupported model format_version {found} (expected {expected})")]
    ModelVersion {
        path: String,
        found: i64,
        expected: i64,
    },

    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

impl Error {
    /// True for failures of an iterative numerical method rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Singular(_)
                | Error::Separation { .. }
                | Error::SelectionFailed
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
