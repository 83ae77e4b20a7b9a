use thiserror::Error;

/// Errors raised by the solvers and operators.
///
/// Times and magnitudes are carried as `f64` regardless of the scalar type
/// the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} is invalid: need an even number of points, at least 8")]
    InvalidGrid(usize),

    #[error("field has {got} values but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("field contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("derivative order {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedOrder(u32),

    #[error("integrand has mean {mean:e}, above the tolerance {tol:e}; its antiderivative is not periodic")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("dimension parameter n = {n} is not supported here: {reason}")]
    DimensionUnsupported { n: f64, reason: &'static str },

    #[error("solution blew up at t = {t}: sup |u_x| = {max_abs_dxu:e}")]
    BlowUp { t: f64, max_abs_dxu: f64 },

    #[error("flow map lost the diffeomorphism property at t = {t}: min gamma_x = {min_jacobian:e}")]
    FlowDegenerate { t: f64, min_jacobian: f64 },

    #[error("two-phase state collapsed at t = {t}: centre fraction {center:e}, outer fraction {outer:e}")]
    PhaseCollapse { t: f64, center: f64, outer: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
