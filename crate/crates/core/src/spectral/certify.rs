//! One-sided eigenvalue bounds from positive test functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{apply_l, OperatorSpec, SpaceTimeFunction};
use crate::scalar::Real;

/// Sign tolerance for test-pair certificates.
pub const CERTIFY_SLACK: f64 = 1e-10;

/// Which inequality a test pair `(λ, φ)` is claimed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `(L + λ)[φ] <= 0`, giving `λ <= λ₁`.
    Subsolution,
    /// `(L + λ)[φ] >= 0`, giving `λ >= λ₁`.
    Supersolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestPairVerdict {
    pub holds: bool,
    /// Largest value of `(L + λ)[φ]` for a subsolution, smallest for a
    /// supersolution.
    pub worst_residual: f64,
    pub t: f64,
    pub index: usize,
}

fn sample_times<T: Real>(spec: &OperatorSpec<T>, mt: usize) -> Result<Vec<T>> {
    if mt == 0 {
        return Err(Error::InvalidParameter { name: "mt_samples", reason: "need at least one time sample".into() });
    }
    let period = spec.period();
    Ok((0..mt).map(|j| period * T::from_usize_lossy(j) / T::from_usize_lossy(mt)).collect())
}

/// `(φ(t), L[φ](t))` at one sample, rejecting nonpositive `φ`.
fn sample<T: Real>(spec: &OperatorSpec<T>, phi: &dyn SpaceTimeFunction<T>, t: T) -> Result<(Vec<T>, Vec<T>)> {
    let value = phi.value(t);
    if let Some((index, &v)) = value.iter().enumerate().find(|(_, v)| !(**v > T::zero())) {
        return Err(Error::NonpositiveTestFunction { t: t.to_f64_lossy(), index, value: v.to_f64_lossy() });
    }
    let l = apply_l(spec, phi, t)?;
    Ok((value, l))
}

/// `(min, max)` of `-L[φ]/φ` over `mt` uniform times per period and all
/// grid points; these bracket `λ₁` for every positive `φ`.
pub fn collatz_wielandt_bounds<T: Real>(
    spec: &OperatorSpec<T>,
    phi: &dyn SpaceTimeFunction<T>,
    mt: usize,
) -> Result<(T, T)> {
    let mut lower = T::infinity();
    let mut upper = T::neg_infinity();
    for t in sample_times(spec, mt)? {
        let (value, l) = sample(spec, phi, t)?;
        for (&p, &li) in value.iter().zip(&l) {
            let ratio = -li / p;
            lower = lower.min(ratio);
            upper = upper.max(ratio);
        }
    }
    Ok((lower, upper))
}

/// Check the sign of `(L + λ)[φ]` at every sample, within [`CERTIFY_SLACK`].
pub fn certify_test_pair<T: Real>(
    spec: &OperatorSpec<T>,
    lambda: T,
    phi: &dyn SpaceTimeFunction<T>,
    direction: Direction,
    mt: usize,
) -> Result<TestPairVerdict> {
    let mut worst: Option<(T, T, usize)> = None;
    for t in sample_times(spec, mt)? {
        let (value, l) = sample(spec, phi, t)?;
        for (index, (&p, &li)) in value.iter().zip(&l).enumerate() {
            let r = li + lambda * p;
            let worse = match (direction, worst) {
                (_, None) => true,
                (Direction::Subsolution, Some((w, _, _))) => r > w,
                (Direction::Supersolution, Some((w, _, _))) => r < w,
            };
            if worse {
                worst = Some((r, t, index));
            }
        }
    }
    let (r, t, index) = worst.expect("at least one sample");
    let r = r.to_f64_lossy();
    let holds = match direction {
        Direction::Subsolution => r <= CERTIFY_SLACK,
        Direction::Supersolution => r >= -CERTIFY_SLACK,
    };
    Ok(TestPairVerdict { holds, worst_residual: r, t: t.to_f64_lossy(), index })
}
