//! Maximum-principle verdicts: `L` satisfies the strong maximum principle
//! iff `λ₁ >= 0`, and has a strict positive super-solution iff `λ₁ > 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{apply_l, OperatorSpec, SpaceTimeFunction};
use crate::scalar::{max_of, min_of, Real};
use crate::spectral::{principal_spectrum_point, EigenResult, EvolutionConfig};

/// Half-width of the band around `λ₁ = 0` where no decision is drawn.
pub const DEAD_BAND: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate<T> {
    /// The principal eigenfunction, with `max L[φ] = -λ₁ max φ <= 0`.
    SuperSolution { worst_residual: T, min_value: T },
    /// `u = ηφ` with `L[u] > 0`, so `-u` is a strict super-solution that is
    /// not positive.
    Counterexample(Counterexample<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpVerdict<T> {
    pub lambda1: T,
    pub strong_mp: bool,
    pub strict_mp: bool,
    /// `|λ₁| <= DEAD_BAND`: reported, but inconclusive at this resolution.
    pub inconclusive: bool,
    pub certificate: Certificate<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample<T> {
    /// Width of the boundary ramp of the cutoff `η = clamp(dist/δ, 0, 1)`.
    pub delta: T,
    /// `min L[ηφ]` over the sampled times and all grid points.
    pub min_lu: T,
    /// `min ηφ`, attained in the boundary layer.
    pub min_value: T,
    /// Cutoff values per grid point.
    #[serde(skip)]
    pub eta: Vec<T>,
    /// `ηφ` at the period nodes of the eigenfunction.
    #[serde(skip)]
    pub snapshots: Vec<Vec<T>>,
}

/// `η(x) φ(t, x)` for a fixed cutoff `η` and any `φ`.
pub struct CutoffProduct<'a, T> {
    pub eta: &'a [T],
    pub inner: &'a dyn SpaceTimeFunction<T>,
}

impl<T: Real> SpaceTimeFunction<T> for CutoffProduct<'_, T> {
    fn value(&self, t: T) -> Vec<T> {
        self.inner.value(t).iter().zip(self.eta).map(|(&p, &e)| e * p).collect()
    }

    fn time_derivative(&self, t: T) -> Option<Vec<T>> {
        Some(self.inner.time_derivative(t)?.iter().zip(self.eta).map(|(&p, &e)| e * p).collect())
    }
}

/// Strong and strict maximum-principle verdicts with a certificate.
pub fn mp_verdict<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig) -> Result<MpVerdict<T>> {
    let eig = principal_spectrum_point(spec, cfg)?;
    verdict_from(spec, &eig)
}

/// As [`mp_verdict`], reusing a computed eigenpair.
pub fn verdict_from<T: Real>(spec: &OperatorSpec<T>, eig: &EigenResult<T>) -> Result<MpVerdict<T>> {
    let band = T::lit(DEAD_BAND);
    let lambda1 = eig.lambda1;
    let strong_mp = lambda1 >= -band;
    let certificate = if strong_mp {
        let phi = eig.eigenfunction(spec);
        let mut worst = T::neg_infinity();
        for &t in node_times(eig) {
            worst = worst.max(max_of(&apply_l(spec, &phi, t)?));
        }
        Certificate::SuperSolution { worst_residual: worst, min_value: eig.min_value() }
    } else {
        Certificate::Counterexample(counterexample_from(spec, eig)?)
    };
    Ok(MpVerdict { lambda1, strong_mp, strict_mp: lambda1 > band, inconclusive: lambda1.abs() <= band, certificate })
}

/// Sample times: every period node except the duplicate endpoint, or the
/// first node alone when the eigenfunction does not move.
fn node_times<T: Real>(eig: &EigenResult<T>) -> &[T] {
    let all = &eig.times[..eig.times.len() - 1];
    if eig.snapshots.iter().all(|s| s == &eig.snapshots[0]) {
        &all[..1]
    } else {
        all
    }
}

/// Build `u = ηφ` with `L[u] > 0` everywhere when `λ₁ < 0`.
///
/// The ramp width runs through `δ = h 2^j`, from the largest value below
/// the inradius down to `h`; the first width giving `min L[ηφ] > 0` wins.
pub fn build_counterexample<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig) -> Result<Counterexample<T>> {
    let eig = principal_spectrum_point(spec, cfg)?;
    counterexample_from(spec, &eig)
}

pub fn counterexample_from<T: Real>(spec: &OperatorSpec<T>, eig: &EigenResult<T>) -> Result<Counterexample<T>> {
    let lambda1 = eig.lambda1;
    if lambda1 >= -T::lit(DEAD_BAND) {
        return Err(Error::EigenvalueNotNegative(lambda1.to_f64_lossy()));
    }
    let domain = spec.domain();
    let h = domain.h();
    let inradius = domain.inradius();
    let mut widths = vec![h];
    while widths.last().copied().unwrap_or(h) * T::lit(2.0) < inradius {
        let next = widths[widths.len() - 1] * T::lit(2.0);
        widths.push(next);
    }
    widths.reverse();

    let times = node_times(eig);
    let snaps = &eig.snapshots[..times.len()];
    // dispersal(φ) per sample time, shared by every width
    let disp_phi: Vec<Vec<T>> = snaps.iter().map(|p| spec.dispersal_apply(p)).collect();
    let dist: Vec<T> = (0..domain.len()).map(|i| domain.distance_to_boundary(i)).collect();

    let mut finest = None;
    for &delta in &widths {
        let eta: Vec<T> = dist.iter().map(|&d| (d / delta).min(T::one()).max(T::zero())).collect();
        // L[ηφ] = dispersal(ηφ) - η dispersal(φ) - λ₁ ηφ, from φ_t = (A + λ₁) φ
        let mut worst = (T::infinity(), 0usize, 0usize);
        for (j, (phi, dphi)) in snaps.iter().zip(&disp_phi).enumerate() {
            let u: Vec<T> = phi.iter().zip(&eta).map(|(&p, &e)| e * p).collect();
            let du = spec.dispersal_apply(&u);
            for i in 0..u.len() {
                let l = du[i] - eta[i] * dphi[i] - lambda1 * u[i];
                if l < worst.0 {
                    worst = (l, j, i);
                }
            }
        }
        if worst.0 > T::zero() {
            let snapshots: Vec<Vec<T>> =
                eig.snapshots.iter().map(|p| p.iter().zip(&eta).map(|(&p, &e)| e * p).collect()).collect();
            let min_value = snapshots.iter().map(|s| min_of(s)).fold(T::infinity(), T::min);
            return Ok(Counterexample { delta, min_lu: worst.0, min_value, eta, snapshots });
        }
        finest = Some((delta, worst));
    }
    let (delta, (value, j, index)) = finest.expect("at least one width");
    Err(Error::ConstructionFailed {
        finest_delta: delta.to_f64_lossy(),
        worst_value: value.to_f64_lossy(),
        t: times[j].to_f64_lossy(),
        index,
    })
}

/// What a super-solution implies about `λ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Implication {
    /// Positive `φ` with `L[φ] <= 0`: `λ₁ >= 0`.
    Nonnegative,
    /// Nonnegative `φ` with `L[φ] < 0`: `λ₁ > 0`.
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupersolutionRecord<T> {
    /// `max L[φ]` over the samples.
    pub max_residual: T,
    pub min_phi: T,
    pub lambda1: T,
    pub implication: Option<Implication>,
    /// False only when an implication contradicts the computed `λ₁`.
    pub consistent: bool,
}

/// Sign check of `L[φ]` on `mt` uniform times, compared with `λ₁`.
pub fn check_supersolution<T: Real>(
    spec: &OperatorSpec<T>,
    phi: &dyn SpaceTimeFunction<T>,
    strict: bool,
    mt: usize,
    cfg: &EvolutionConfig,
) -> Result<SupersolutionRecord<T>> {
    if mt == 0 {
        return Err(Error::InvalidParameter { name: "mt_samples", reason: "need at least one time sample".into() });
    }
    let period = spec.period();
    let mut max_residual = T::neg_infinity();
    let mut min_phi = T::infinity();
    for j in 0..mt {
        let t = period * T::from_usize_lossy(j) / T::from_usize_lossy(mt);
        max_residual = max_residual.max(max_of(&apply_l(spec, phi, t)?));
        min_phi = min_phi.min(min_of(&phi.value(t)));
    }
    let lambda1 = principal_spectrum_point(spec, cfg)?.lambda1;
    let band = T::lit(DEAD_BAND);
    let implication = if strict && max_residual < T::zero() && min_phi >= T::zero() {
        Some(Implication::Positive)
    } else if !strict && max_residual <= T::zero() && min_phi > T::zero() {
        Some(Implication::Nonnegative)
    } else {
        None
    };
    let consistent = match implication {
        Some(Implication::Positive) => lambda1 > -band,
        Some(Implication::Nonnegative) => lambda1 >= -band,
        None => true,
    };
    Ok(SupersolutionRecord { max_residual, min_phi, lambda1, implication, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Coefficient;
    use crate::geometry::build_domain;
    use crate::kernel::{Kernel, KernelFamily};
    use crate::operator::{Boundary, Stationary};
    use crate::spectral::{certify_test_pair, Direction};

    fn spec(coeff: Coefficient) -> OperatorSpec<f64> {
        let domain = build_domain(1, &[(0.0, 1.0)], &[20]).unwrap();
        let kernel = Kernel::new(KernelFamily::Epanechnikov1d, 1.0).unwrap();
        OperatorSpec::new(domain, kernel, coeff, 1.0, 1.0, 0.0, Boundary::Neumann).unwrap()
    }

    #[test]
    fn negative_coefficient_gives_strict_principle() {
        let v = mp_verdict(&spec(Coefficient::constant(-1.0)), &EvolutionConfig::default()).unwrap();
        assert!((v.lambda1 - 1.0).abs() < 1e-8);
        assert!(v.strong_mp && v.strict_mp && !v.inconclusive);
        match v.certificate {
            Certificate::SuperSolution { worst_residual, .. } => assert!((worst_residual + 1.0).abs() < 1e-8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_coefficient_is_the_knife_edge() {
        let v = mp_verdict(&spec(Coefficient::constant(0.0)), &EvolutionConfig::default()).unwrap();
        assert!(v.strong_mp && !v.strict_mp && v.inconclusive);
    }

    #[test]
    fn positive_coefficient_gives_counterexample() {
        let s = spec(Coefficient::constant(1.0));
        let v = mp_verdict(&s, &EvolutionConfig::default()).unwrap();
        assert!(!v.strong_mp && !v.strict_mp);
        let Certificate::Counterexample(c) = v.certificate else { panic!("expected a counterexample") };
        assert!(c.min_lu > 0.0 && c.delta >= s.domain().h());
        // independent check through the operator applied to ηφ
        let ones = Stationary::ones(20);
        let u = CutoffProduct { eta: &c.eta, inner: &ones };
        let cert = certify_test_pair(&s, 0.0, &u, Direction::Supersolution, 4).unwrap();
        assert!(cert.holds && cert.worst_residual > 0.0);
        assert!((cert.worst_residual - c.min_lu).abs() < 1e-12);
    }

    #[test]
    fn counterexample_needs_negative_eigenvalue() {
        let s = spec(Coefficient::constant(-1.0));
        assert!(matches!(build_counterexample(&s, &EvolutionConfig::default()), Err(Error::EigenvalueNotNegative(_))));
    }

    #[test]
    fn supersolution_checks() {
        let cfg = EvolutionConfig::default();
        let s = spec(Coefficient::constant(-1.0));
        let r = check_supersolution(&s, &Stationary::ones(20), true, 4, &cfg).unwrap();
        assert!((r.max_residual + 1.0).abs() < 1e-14);
        assert_eq!(r.implication, Some(Implication::Positive));
        assert!(r.consistent);

        let s = spec(Coefficient::space_only("x - 0.2").unwrap());
        let r = check_supersolution(&s, &Stationary::ones(20), false, 4, &cfg).unwrap();
        assert!(r.max_residual > 0.0 && r.implication.is_none() && r.consistent);
    }
}
