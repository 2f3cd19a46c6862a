use thiserror::Error;

/// Errors raised anywhere in the solver stack.
///
/// Each variant maps onto one CLI exit code, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("positive-speed assumption violated: min V = {g_min:.6e} <= 0")]
    Assumption { g_min: f64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Grid(_) | Error::Fit(_) | Error::Io(_) => 2,
            Error::Assumption { .. } => 3,
            Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
