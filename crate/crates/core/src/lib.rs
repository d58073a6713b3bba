//! Principal spectral theory of time-periodic nonlocal dispersal operators
//!
//! ```text
//! L[u] = -u_t + (D/σ^k) ∫_Ω J_σ(x-y) (u(y) - u(x)) dy + a(t,x) u
//! ```
//!
//! on bounded intervals and rectangles. The principal spectrum point `λ₁`
//! is computed from the Perron root of the period map, `λ₁ = -ln r / T`,
//! and checked against dense oracles, Collatz–Wielandt bounds, the
//! small/large dispersal limits and the maximum-principle equivalences.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which the documented tolerances assume.

// `!(x > 0)` is the NaN-rejecting form used by every validator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod coefficient;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod kernel;
pub mod maxprinciple;
pub mod operator;
pub mod scalar;
pub mod spectral;

pub use coefficient::{time_average, Coefficient, CoefficientForm, Table};
pub use error::{Error, Result};
pub use expr::Expr;
pub use geometry::{build_domain, integrate};
pub use kernel::{build_kernel_matrix, eval_kernel, KernelFamily};
pub use operator::{apply_l, assemble_generator, lambda_star, Boundary, SpaceTimeFunction};
pub use scalar::Real;
pub use spectral::{Direction, EvolutionConfig};

pub type Domain = geometry::Domain<f64>;
pub type Kernel = kernel::Kernel<f64>;
pub type KernelMatrix = kernel::KernelMatrix<f64>;
pub type CoefficientStats = coefficient::CoefficientStats<f64>;
pub type OperatorSpec = operator::OperatorSpec<f64>;
pub type EigenResult = spectral::EigenResult<f64>;
pub type SweepResult = asymptotics::SweepResult<f64>;
pub type MpVerdict = maxprinciple::MpVerdict<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Domain = crate::geometry::Domain<f32>;
    pub type Kernel = crate::kernel::Kernel<f32>;
    pub type KernelMatrix = crate::kernel::KernelMatrix<f32>;
    pub type OperatorSpec = crate::operator::OperatorSpec<f32>;
    pub type EigenResult = crate::spectral::EigenResult<f32>;
}
