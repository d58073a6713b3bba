//! Principal spectrum point through the monodromy map, eigenfunctions,
//! dense oracles, test-pair certificates and the Poincaré constant.

mod certify;
mod evolve;
mod oracle;
mod poincare;
mod power;

use serde::{Deserialize, Serialize};

pub use certify::{certify_test_pair, collatz_wielandt_bounds, Direction, TestPairVerdict};
pub use evolve::{diagonal_bound, evolve, steps_per_period, Integrator, MIN_STEPS};
pub use oracle::{dense_oracle, AUTONOMOUS_CAP, PERIODIC_CAP};
pub use poincare::{poincare_constant, FormChecker, POINCARE_CAP};
pub use power::{principal_spectrum_point, EigenResult, PeriodicEigenfunction, PRINCIPAL_MARGIN};

/// Time discretisation and power-iteration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Starting steps per period; `None` starts from [`MIN_STEPS`]. Always
    /// doubled until `(T/m) max|A_ii| <= 0.5`.
    pub steps_per_period: Option<usize>,
    pub power_tol: f64,
    pub max_power_iters: usize,
    pub positivity_tol: f64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            steps_per_period: None,
            power_tol: 1e-10,
            max_power_iters: 10_000,
            positivity_tol: 1e-12,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        use crate::error::Error;
        if self.steps_per_period == Some(0) {
            return Err(Error::InvalidParameter { name: "steps_per_period", reason: "must be positive".into() });
        }
        if !(self.power_tol > 0.0 && self.power_tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "power_tol",
                reason: format!("must lie in (0, 1), got {}", self.power_tol),
            });
        }
        if self.max_power_iters == 0 {
            return Err(Error::InvalidParameter { name: "max_power_iters", reason: "must be positive".into() });
        }
        if !(self.positivity_tol >= 0.0 && self.positivity_tol.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "positivity_tol",
                reason: format!("must be nonnegative, got {}", self.positivity_tol),
            });
        }
        Ok(())
    }
}
