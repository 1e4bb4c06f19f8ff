use thiserror::Error;

use crate::rk::IntegrationTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported order/dimension: d = {dim}, m = {order}")]
    Unsupported { dim: usize, order: usize },

    #[error("point outside the reference simplex (barycentric coordinate {coordinate:e})")]
    OutsideReference { coordinate: f64 },

    #[error("degenerate element {element}: |det F'| = {det:e}")]
    DegenerateElement { element: usize, det: f64 },

    #[error("invalid mesh structure: {0}")]
    Structure(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh spec: {0}")]
    InvalidSpec(String),

    #[error("(M1) violated by the {policy} surrogate: {detail}")]
    M1Violated { policy: String, detail: String },

    #[error("diffusion tensor not SPD in element {element} at sample point {point}")]
    DiffusionNotSpd { element: usize, point: usize },

    #[error("no Dirichlet degrees of freedom (meas of the Dirichlet boundary must be positive)")]
    NoDirichlet,

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("nonpositive diagonal entry {value:e} at index {index}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (estimate {estimate:e}, residual {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("{check} violated: margin {margin:e}")]
    InequalityViolated {
        check: String,
        margin: f64,
        witness: Vec<f64>,
    },

    #[error("bound source `{0}` is not available in the report")]
    MissingBound(String),

    #[error("blow-up detected at step {step}")]
    BlowUp { step: usize, trace: Box<IntegrationTrace> },

    #[error("L2 growth certificate violated at step {step}: ratio {ratio} > {bound}")]
    CertificateViolated { step: usize, ratio: f64, bound: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
