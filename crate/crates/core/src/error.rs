use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: field `{field}` {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("failed to read config file {path}: {source}")]
    ConfigIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse config file {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("cannot project the zero matrix onto the power sphere")]
    ZeroProjection,

    #[error("matrix contains non-finite entries ({context})")]
    NonFinite { context: &'static str },

    #[error("matrix is not Hermitian: ‖A − Aᴴ‖_F = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("infeasible {what}: {detail}")]
    Infeasible { what: &'static str, detail: String },

    #[error("operation requires a single user, got K = {0}")]
    NotSingleUser(usize),
}

impl Error {
    pub(crate) fn dims(
        context: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: format!("{}×{}", expected.0, expected.1),
            actual: format!("{}×{}", actual.0, actual.1),
        }
    }
}
