use std::path::PathBuf;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] isac_core::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 infeasible, 4 solver failure, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::ThreadPool(_) => 2,
            AppError::Core(e) if e.is_config() => 2,
            AppError::Core(e) => match e.root() {
                isac_core::Error::InvalidArgument(_) => 2,
                _ if e.is_infeasible() => 3,
                _ => 4,
            },
            AppError::Io { .. } => 5,
        }
    }
}
