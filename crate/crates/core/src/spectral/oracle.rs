//! Dense eigensolves used to cross-check the power iteration.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{assemble_generator, OperatorSpec};
use crate::scalar::Real;

use super::evolve::{steps_per_period, Integrator};
use super::EvolutionConfig;

/// Largest grid handled by the dense autonomous oracle.
pub const AUTONOMOUS_CAP: usize = 200;
/// Largest grid handled by the explicit monodromy oracle.
pub const PERIODIC_CAP: usize = 60;

/// `λ₁` from a dense eigensolve, computed in `f64`.
///
/// Time-independent `a`: `-max Re μ` over the eigenvalues of `A`.
/// Otherwise: `-ln ρ(M) / T` with the monodromy matrix `M` assembled column
/// by column with the same integrator as the power iteration.
pub fn dense_oracle<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig) -> Result<f64> {
    let n = spec.len();
    if spec.coeff().is_autonomous() {
        if n > AUTONOMOUS_CAP {
            return Err(Error::TooLarge { n, cap: AUTONOMOUS_CAP });
        }
        let dense = assemble_generator(spec, T::zero()).to_dense();
        let a = DMatrix::from_fn(n, n, |i, j| dense[i][j].to_f64_lossy());
        let top = a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        return Ok(-top);
    }
    if n > PERIODIC_CAP {
        return Err(Error::TooLarge { n, cap: PERIODIC_CAP });
    }
    let steps = steps_per_period(spec, cfg);
    let mut integ = Integrator::new(spec, steps);
    let mut monodromy = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for col in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[col] = T::one();
        integ.period_map(&mut e, None)?;
        for (row, v) in e.iter().enumerate() {
            monodromy[(row, col)] = v.to_f64_lossy();
        }
    }
    let rho = monodromy.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(-rho.ln() / spec.period().to_f64_lossy())
}
