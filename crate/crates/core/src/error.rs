use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient resolution: grid spacing {actual} exceeds the required {required}")]
    Resolution { required: f64, actual: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("initial datum outside the admissible set: realized M = {realized:e} exceeds bound {bound:e}")]
    Admissibility { realized: f64, bound: f64 },

    #[error("numerical blow-up at t = {t}")]
    BlowUp { t: f64 },

    #[error("degenerate decomposition: soliton support is empty")]
    Degenerate,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("misaligned series: {0}")]
    Alignment(String),

    #[error("observer failed: {0}")]
    Observer(String),
}

pub type Result<T> = std::result::Result<T, Error>;
