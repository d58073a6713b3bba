use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("only dimensions 1 and 2 are supported, got {0}")]
    UnsupportedDimension(usize),

    #[error("degenerate bounds on axis {axis}: [{lo}, {hi}]")]
    DegenerateBounds { axis: usize, lo: f64, hi: f64 },

    #[error("axis {axis} has {cells} cells, at least 2 are required")]
    TooFewCells { axis: usize, cells: usize },

    #[error("shape mismatch: expected {expected} entries, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("kernel is {kernel}-dimensional but the domain is {domain}-dimensional")]
    DimensionMismatch { kernel: usize, domain: usize },

    #[error(
        "grid too coarse: cell size h = {h} exceeds kernel reach gamma*sigma = {reach}; \
         use at least {min_cells:?} cells"
    )]
    GridTooCoarse { h: f64, reach: f64, min_cells: Vec<usize> },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid expression `{expr}`: {reason}")]
    Expression { expr: String, reason: String },

    #[error("test function varies in time but provides no time derivative")]
    MissingTimeDerivative,

    #[error("iterate left the positive cone at t = {t}: min {min} against max {max}")]
    NegativityBreach { t: f64, min: f64, max: f64 },

    #[error("power iteration did not converge after {iters} iterations (last radius estimates {previous}, {last})")]
    NoConvergence { iters: usize, previous: f64, last: f64 },

    #[error("problem size {n} exceeds the dense cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("test function is not strictly positive: value {value} at t = {t}, point {index}")]
    NonpositiveTestFunction { t: f64, index: usize, value: f64 },

    #[error("kernel is not symmetric with respect to each component")]
    KernelNotSymmetric,

    #[error("reference limit not available: {0}")]
    IncompatibleLimit(String),

    #[error("principal spectrum point {0} is not negative")]
    EigenvalueNotNegative(f64),

    #[error(
        "no cutoff width produced a positive witness; finest delta {finest_delta}, \
         worst value {worst_value} at t = {t}, point {index}"
    )]
    ConstructionFailed { finest_delta: f64, worst_value: f64, t: f64, index: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
