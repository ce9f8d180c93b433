use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix is not Hermitian (max entrywise asymmetry {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid signal ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "R matrix violates the consistency conditions \
         (|tr_2 R - I| = {trailing_residual:.3e}, |tr_1 (rho x I)R - rho| = {leading_residual:.3e})"
    )]
    InconsistentR {
        trailing_residual: f64,
        leading_residual: f64,
    },

    #[error("{what} budget exceeded: need {required}, limit {limit}")]
    BudgetExceeded {
        what: &'static str,
        required: usize,
        limit: usize,
    },

    #[error("block density Pi_{n} is not positive: eigenvalue {eigenvalue:.6e}")]
    PositivityViolation { n: usize, eigenvalue: f64 },

    #[error("invalid POM: {0}")]
    InvalidPom(String),

    #[error("POM is not projective; typical subspaces need orthogonal projections")]
    NonProjectivePom,

    #[error("word has zero probability; empirical entropy is undefined")]
    ZeroProbability,

    #[error("measure has a negative cylinder probability {0:.6e}")]
    NegativeProbability(f64),

    #[error("matrix is singular (smallest eigenvalue {min_eigenvalue:.3e})")]
    Singular { min_eigenvalue: f64 },

    #[error("observable support escapes the window: {0}")]
    SupportEscape(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn mismatch(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
