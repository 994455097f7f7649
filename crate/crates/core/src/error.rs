use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("ultraspherical argument xi = {xi} is outside [-1, 1] or not finite")]
    ArgumentOutOfRange { xi: f64 },
    #[error("boundary dimension n = {0} must be at least 2")]
    InvalidDimension(usize),
    #[error("kernel order m = {0} must be at least 1")]
    InvalidOrder(usize),
    #[error("component index j = {j} is outside 1..={dim}")]
    ComponentOutOfRange { j: usize, dim: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point has a non-finite coordinate")]
    NonFinite,
    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,
    #[error("singular part undefined for equal radii |x - x0| = |v - x0| = {0}")]
    EqualRadii(f64),
    #[error("singular part undefined with an argument at the shift point")]
    ZeroRadius,
}
