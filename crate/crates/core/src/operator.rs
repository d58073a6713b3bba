//! The periodic-parabolic nonlocal operator
//! `L[u] = -u_t + (D/σ^k) ∫_Ω J_σ(x-y)(u(y)-u(x)) dy + a(t,x) u`
//! and its Dirichlet companion, discretised on a [`Domain`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficient::{time_average, Coefficient, CoefficientStats};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kernel::{Kernel, KernelMatrix};
use crate::scalar::{min_of, Real};

/// Time nodes used for the cached coefficient statistics.
pub const STATS_TIME_NODES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Dispersal stays inside Ω: `K - diag(d)`.
    #[default]
    Neumann,
    /// Mass leaving Ω is lost: `K - I`.
    Dirichlet,
}

/// Full parameterisation of one operator. The kernel matrix and the
/// coefficient statistics are computed once and shared by clones.
#[derive(Debug, Clone)]
pub struct OperatorSpec<T: Real> {
    domain: Domain<T>,
    kernel: Kernel<T>,
    coeff: Coefficient,
    dispersal: T,
    sigma: T,
    k: T,
    boundary: Boundary,
    matrix: Arc<KernelMatrix<T>>,
    stats: Arc<CoefficientStats<T>>,
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be positive and finite, got {v}") })
    }
}

fn check_exponent<T: Real>(k: T) -> Result<()> {
    if k >= T::zero() && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "k", reason: format!("must be nonnegative and finite, got {k}") })
    }
}

impl<T: Real> OperatorSpec<T> {
    pub fn new(
        domain: Domain<T>,
        kernel: Kernel<T>,
        coeff: Coefficient,
        dispersal: T,
        sigma: T,
        k: T,
        boundary: Boundary,
    ) -> Result<Self> {
        check_positive("D", dispersal)?;
        check_positive("sigma", sigma)?;
        check_exponent(k)?;
        let matrix = Arc::new(KernelMatrix::assemble(&domain, &kernel, sigma)?);
        let stats = Arc::new(time_average(&coeff, &domain, STATS_TIME_NODES)?);
        Ok(OperatorSpec { domain, kernel, coeff, dispersal, sigma, k, boundary, matrix, stats })
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn coeff(&self) -> &Coefficient {
        &self.coeff
    }

    pub fn dispersal(&self) -> T {
        self.dispersal
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn period(&self) -> T {
        T::lit(self.coeff.period())
    }

    pub fn matrix(&self) -> &KernelMatrix<T> {
        &self.matrix
    }

    pub fn stats(&self) -> &CoefficientStats<T> {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// Effective dispersal coefficient `D / σ^k`.
    pub fn rate(&self) -> T {
        self.dispersal / self.sigma.powf(self.k)
    }

    /// Per-point loss rate on the diagonal of the dispersal part:
    /// `rate * d_i` (Neumann) or `rate` (Dirichlet).
    pub fn loss(&self) -> Vec<T> {
        let c = self.rate();
        match self.boundary {
            Boundary::Neumann => self.matrix.degree().iter().map(|&d| c * d).collect(),
            Boundary::Dirichlet => vec![c; self.len()],
        }
    }

    pub fn with_dispersal(&self, dispersal: T) -> Result<Self> {
        check_positive("D", dispersal)?;
        Ok(OperatorSpec { dispersal, ..self.clone() })
    }

    pub fn with_exponent(&self, k: T) -> Result<Self> {
        check_exponent(k)?;
        Ok(OperatorSpec { k, ..self.clone() })
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        OperatorSpec { boundary, ..self.clone() }
    }

    pub fn with_coeff(&self, coeff: Coefficient) -> Result<Self> {
        let stats = Arc::new(time_average(&coeff, &self.domain, STATS_TIME_NODES)?);
        Ok(OperatorSpec { coeff, stats, ..self.clone() })
    }

    /// Same operator with `a` replaced by `a + s`.
    pub fn shifted(&self, s: T) -> Result<Self> {
        self.with_coeff(self.coeff.shifted(s.to_f64_lossy()))
    }

    pub fn with_sigma(&self, sigma: T) -> Result<Self> {
        OperatorSpec::new(
            self.domain.clone(),
            self.kernel,
            self.coeff.clone(),
            self.dispersal,
            sigma,
            self.k,
            self.boundary,
        )
    }

    pub fn with_domain(&self, domain: Domain<T>) -> Result<Self> {
        OperatorSpec::new(domain, self.kernel, self.coeff.clone(), self.dispersal, self.sigma, self.k, self.boundary)
    }

    /// `out = rate * (K v - loss ∘ v)`, the dispersal part alone.
    pub fn dispersal_into(&self, v: &[T], out: &mut [T]) {
        self.matrix.apply_into(v, out);
        let c = self.rate();
        match self.boundary {
            Boundary::Neumann => {
                for ((o, &vi), &d) in out.iter_mut().zip(v).zip(self.matrix.degree()) {
                    *o = c * (*o - d * vi);
                }
            }
            Boundary::Dirichlet => {
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o = c * (*o - vi);
                }
            }
        }
    }

    pub fn dispersal_apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.len()];
        self.dispersal_into(v, &mut out);
        out
    }

    /// `a(t, ·)` on the grid.
    pub fn coefficient_at(&self, t: T) -> Vec<T> {
        self.coeff.values(t, &self.domain)
    }
}

/// The generator `A(t)` frozen at one time.
#[derive(Debug, Clone)]
pub struct GeneratorSlice<T: Real> {
    spec: OperatorSpec<T>,
    t: T,
    a: Vec<T>,
}

pub fn assemble_generator<T: Real>(spec: &OperatorSpec<T>, t: T) -> GeneratorSlice<T> {
    GeneratorSlice { spec: spec.clone(), t, a: spec.coefficient_at(t) }
}

impl<T: Real> GeneratorSlice<T> {
    pub fn time(&self) -> T {
        self.t
    }

    pub fn coefficient(&self) -> &[T] {
        &self.a
    }

    pub fn diagonal(&self) -> Vec<T> {
        let c = self.spec.rate();
        self.spec
            .loss()
            .iter()
            .zip(self.spec.matrix().diagonal())
            .zip(&self.a)
            .map(|((&l, &kd), &a)| c * kd - l + a)
            .collect()
    }

    pub fn apply_into(&self, v: &[T], out: &mut [T]) {
        self.spec.dispersal_into(v, out);
        for ((o, &vi), &a) in out.iter_mut().zip(v).zip(&self.a) {
            *o += a * vi;
        }
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); v.len()];
        self.apply_into(v, &mut out);
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let c = self.spec.rate();
        let mut dense = self.spec.matrix().to_dense();
        let loss = self.spec.loss();
        for (i, row) in dense.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v *= c;
            }
            row[i] += self.a[i] - loss[i];
        }
        dense
    }
}

/// A function of `(t, x)` sampled on the grid, optionally with an exact
/// time derivative.
pub trait SpaceTimeFunction<T: Real>: Send + Sync {
    fn value(&self, t: T) -> Vec<T>;

    /// `None` when the derivative is unknown; stationary functions return zeros.
    fn time_derivative(&self, t: T) -> Option<Vec<T>>;
}

/// `φ(t, x) = v(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary<T>(pub Vec<T>);

impl<T: Real> Stationary<T> {
    pub fn ones(n: usize) -> Self {
        Stationary(vec![T::one(); n])
    }
}

impl<T: Real> SpaceTimeFunction<T> for Stationary<T> {
    fn value(&self, _t: T) -> Vec<T> {
        self.0.clone()
    }

    fn time_derivative(&self, _t: T) -> Option<Vec<T>> {
        Some(vec![T::zero(); self.0.len()])
    }
}

/// `φ(t, x_i) = base_i (1 + amp_i sin(2π t / T + phase_i))`, positive when
/// every `amp_i < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulated<T> {
    pub base: Vec<T>,
    pub amplitude: Vec<T>,
    pub phase: Vec<T>,
    pub period: T,
}

impl<T: Real> SpaceTimeFunction<T> for Modulated<T> {
    fn value(&self, t: T) -> Vec<T> {
        let w = T::TAU() / self.period;
        (0..self.base.len())
            .map(|i| self.base[i] * (T::one() + self.amplitude[i] * (w * t + self.phase[i]).sin()))
            .collect()
    }

    fn time_derivative(&self, t: T) -> Option<Vec<T>> {
        let w = T::TAU() / self.period;
        Some(
            (0..self.base.len())
                .map(|i| self.base[i] * self.amplitude[i] * w * (w * t + self.phase[i]).cos())
                .collect(),
        )
    }
}

/// Five-point Gauss–Legendre nodes and weights on `[-1, 1]`.
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Positive periodic solution of `φ_t = (a(t,x) - a_T(x)) φ`, `φ(0) = 1`:
/// `φ(t,x) = exp(∫_0^t (a(s,x) - a_T(x)) ds)`.
#[derive(Debug, Clone)]
pub struct OdeProfile<T: Real> {
    coeff: Coefficient,
    domain: Domain<T>,
    time_avg: Vec<T>,
    panels_per_period: usize,
}

impl<T: Real> OdeProfile<T> {
    pub fn new(spec: &OperatorSpec<T>) -> Self {
        OdeProfile {
            coeff: spec.coeff().clone(),
            domain: spec.domain().clone(),
            time_avg: spec.stats().time_avg.clone(),
            panels_per_period: 32,
        }
    }

    fn exponent(&self, t: f64) -> Vec<f64> {
        let period = self.coeff.period();
        let n = self.domain.len();
        let mut acc = vec![0.0; n];
        if t == 0.0 {
            return acc;
        }
        let panels = ((t.abs() / period) * self.panels_per_period as f64).ceil().max(1.0) as usize;
        let width = t / panels as f64;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * width;
            for &(node, weight) in &GL5 {
                let s = mid + 0.5 * width * node;
                for (i, slot) in acc.iter_mut().enumerate() {
                    let a = self.coeff.eval(s, i, &self.point_f64(i));
                    *slot += 0.5 * width * weight * a;
                }
            }
        }
        for (slot, avg) in acc.iter_mut().zip(&self.time_avg) {
            *slot -= t * avg.to_f64_lossy();
        }
        acc
    }

    fn point_f64(&self, i: usize) -> [f64; 2] {
        let p = self.domain.point(i);
        [p[0].to_f64_lossy(), p.get(1).map_or(0.0, |v| v.to_f64_lossy())]
    }
}

impl<T: Real> SpaceTimeFunction<T> for OdeProfile<T> {
    fn value(&self, t: T) -> Vec<T> {
        self.exponent(t.to_f64_lossy()).into_iter().map(|e| T::lit(e.exp())).collect()
    }

    fn time_derivative(&self, t: T) -> Option<Vec<T>> {
        let a = self.coeff.values(t, &self.domain);
        let phi = self.value(t);
        Some(phi.iter().zip(&a).zip(&self.time_avg).map(|((&p, &ai), &avg)| (ai - avg) * p).collect())
    }
}

/// `L[φ](t, ·)`: `-φ_t + A(t) φ`.
pub fn apply_l<T: Real>(spec: &OperatorSpec<T>, phi: &dyn SpaceTimeFunction<T>, t: T) -> Result<Vec<T>> {
    let dphi = phi.time_derivative(t).ok_or(Error::MissingTimeDerivative)?;
    let value = phi.value(t);
    if value.len() != spec.len() {
        return Err(Error::ShapeMismatch { expected: spec.len(), found: value.len() });
    }
    let mut out = assemble_generator(spec, t).apply(&value);
    for (o, d) in out.iter_mut().zip(dphi) {
        *o -= d;
    }
    Ok(out)
}

/// `λ* = min_i (loss_i - a_T(x_i))`, with `loss_i = (D/σ^k) d_i` in the
/// Neumann case.
pub fn lambda_star<T: Real>(spec: &OperatorSpec<T>) -> T {
    let gaps: Vec<T> = spec.loss().iter().zip(&spec.stats().time_avg).map(|(&l, &a)| l - a).collect();
    min_of(&gaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_domain;
    use crate::kernel::KernelFamily;
    use proptest::prelude::*;

    fn spec_1d(n: usize, coeff: Coefficient, d: f64, sigma: f64, boundary: Boundary) -> OperatorSpec<f64> {
        let domain = build_domain(1, &[(0.0, 1.0)], &[n]).unwrap();
        let kernel = Kernel::new(KernelFamily::Epanechnikov1d, 1.0).unwrap();
        OperatorSpec::new(domain, kernel, coeff, d, sigma, 0.0, boundary).unwrap()
    }

    #[test]
    fn neumann_annihilates_constants() {
        let spec = spec_1d(40, Coefficient::constant(0.0), 1.3, 0.3, Boundary::Neumann);
        let g = assemble_generator(&spec, 0.2);
        assert!(g.apply(&vec![1.0; 40]).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn dirichlet_loses_mass_near_boundary() {
        let spec = spec_1d(100, Coefficient::constant(0.0), 1.0, 0.1, Boundary::Dirichlet);
        let out = assemble_generator(&spec, 0.0).apply(&vec![1.0; 100]);
        // x = 0.495 is 0.395 from the boundary, well beyond the reach 0.1
        // (the residual is the O(h²) quadrature error of the degree)
        assert!(out[49].abs() < 5e-3, "{}", out[49]);
        // x = 0.005: half the mass is lost, d ≈ 1/2 + O(h)
        let oracle = -(1.0 - (0.5 + 0.75 * (0.05 - 0.05f64.powi(3) / 3.0)));
        assert!((out[0] - oracle).abs() < 2e-2, "{} vs {oracle}", out[0]);
        assert!(out[..5].iter().all(|&v| v < -0.05));
    }

    #[test]
    fn dense_matches_apply() {
        let coeff = Coefficient::separable("cos(pi*x)", "sin(2*pi*t)", 1.0).unwrap();
        let spec = spec_1d(12, coeff, 0.7, 0.4, Boundary::Neumann);
        let g = assemble_generator(&spec, 0.3);
        let dense = g.to_dense();
        let v: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin() + 2.0).collect();
        let direct = g.apply(&v);
        for (row, d) in dense.iter().zip(&direct) {
            let s: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((s - d).abs() < 1e-13);
        }
        for (i, (row, diag)) in dense.iter().zip(g.diagonal()).enumerate() {
            assert!((row[i] - diag).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_test_function() {
        let spec = spec_1d(20, Coefficient::constant(1.7), 2.0, 1.0, Boundary::Neumann);
        let l = apply_l(&spec, &Stationary::ones(20), 0.4).unwrap();
        assert!(l.iter().all(|v| (v - 1.7).abs() < 1e-14));
    }

    struct NoDerivative;
    impl SpaceTimeFunction<f64> for NoDerivative {
        fn value(&self, t: f64) -> Vec<f64> {
            vec![1.0 + t; 20]
        }
        fn time_derivative(&self, _t: f64) -> Option<Vec<f64>> {
            None
        }
    }

    #[test]
    fn missing_derivative() {
        let spec = spec_1d(20, Coefficient::constant(1.0), 1.0, 1.0, Boundary::Neumann);
        assert_eq!(apply_l(&spec, &NoDerivative, 0.0), Err(Error::MissingTimeDerivative));
    }

    #[test]
    fn ode_profile_solves_its_ode() {
        let coeff = Coefficient::separable("cos(pi*x)", "sin(2*pi*t)", 1.0).unwrap();
        let spec = spec_1d(20, coeff, 1e-8, 1.0, Boundary::Neumann);
        let phi = OdeProfile::new(&spec);
        // exact: exp((1 - cos 2πt)/(2π)), independent of x
        for &t in &[0.0, 0.13, 0.5, 0.9, 1.0, 1.37] {
            let exact = ((1.0 - (std::f64::consts::TAU * t).cos()) / std::f64::consts::TAU).exp();
            for v in phi.value(t) {
                assert!((v - exact).abs() < 1e-12, "{t}: {v} vs {exact}");
            }
        }
        // with D → 0, -L[φ]/φ → -a_T
        let l = apply_l(&spec, &phi, 0.3).unwrap();
        let p = phi.value(0.3);
        for i in 0..20 {
            let ratio = -l[i] / p[i];
            assert!((ratio + spec.stats().time_avg[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn lambda_star_values() {
        let spec = spec_1d(200, Coefficient::constant(0.0), 1.0, 1.0, Boundary::Neumann);
        let ls = lambda_star(&spec);
        // boundary degree ∫_0^{1-h/2} (3/4)(1-y²) dy ≈ 1/2
        assert!((ls - 0.5).abs() < 5e-3, "{ls}");
        let shifted = spec.shifted(0.8).unwrap();
        assert!((lambda_star(&shifted) - (ls - 0.8)).abs() < 1e-14);
        let tiny =
            spec.with_dispersal(1e-8).unwrap().with_coeff(Coefficient::space_only("cos(pi*x)").unwrap()).unwrap();
        let max_at = tiny.stats().max_time_avg;
        assert!((lambda_star(&tiny) + max_at).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_parameters() {
        let domain = build_domain(1, &[(0.0, 1.0)], &[20]).unwrap();
        let kernel = Kernel::new(KernelFamily::Tent1d, 1.0).unwrap();
        let c = Coefficient::constant(1.0);
        let mk =
            |d: f64, s: f64, k: f64| OperatorSpec::new(domain.clone(), kernel, c.clone(), d, s, k, Boundary::Neumann);
        assert!(matches!(mk(0.0, 1.0, 0.0), Err(Error::InvalidParameter { name: "D", .. })));
        assert!(matches!(mk(1.0, -1.0, 0.0), Err(Error::InvalidParameter { name: "sigma", .. })));
        assert!(matches!(mk(1.0, 1.0, -0.5), Err(Error::InvalidParameter { name: "k", .. })));
        assert!(matches!(mk(1.0, 0.01, 0.0), Err(Error::GridTooCoarse { .. })));
    }

    proptest! {
        #[test]
        fn generator_is_metzler(n in 8usize..30, d in 0.01f64..10.0, sigma in 0.3f64..3.0, t in 0.0f64..1.0, dirichlet: bool) {
            let coeff = Coefficient::separable("3*x - 1", "cos(2*pi*t)", 1.0).unwrap();
            let b = if dirichlet { Boundary::Dirichlet } else { Boundary::Neumann };
            let spec = spec_1d(n, coeff, d, sigma, b);
            let dense = assemble_generator(&spec, t).to_dense();
            for (i, row) in dense.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if i != j {
                        prop_assert!(v >= 0.0);
                    }
                }
            }
            // A·1 = a - rate·(1 - d) for Dirichlet, so A·1 ≤ a up to the
            // quadrature overshoot of d above 1
            let ones = vec![1.0; n];
            let a = spec.coefficient_at(t);
            let out = assemble_generator(&spec, t).apply(&ones);
            let c = spec.rate();
            for ((o, ai), di) in out.iter().zip(&a).zip(spec.matrix().degree()) {
                prop_assert!(*di <= 1.0 + 0.05);
                let slack = if dirichlet { c * (di - 1.0).max(0.0) } else { 0.0 };
                prop_assert!(*o <= ai + slack + 1e-12);
            }
        }
    }
}
