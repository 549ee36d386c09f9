use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("out of window: {what} needs index {needed}, window is [{lo}, {hi}]")]
    OutOfWindow {
        what: &'static str,
        needed: i64,
        lo: i64,
        hi: i64,
    },

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("no convergence after depth {depth}: last increment {last_increment:e}")]
    Convergence { depth: usize, last_increment: f64 },

    #[error("branch jump at curve point {index}: argument step {step:.3} rad, refine the curve")]
    Branch { index: usize, step: f64 },

    #[error("radius check failed for derivative {order}: {a:e} vs {b:e}")]
    Radius { order: usize, a: f64, b: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("order error: {0}")]
    Order(String),

    #[error("numerical sanity: {0}")]
    Sanity(String),

    #[error("operator pipeline: {0}")]
    Pipeline(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
