//! Classical fourth-order Runge–Kutta for `u' = A(t) u` on a uniform
//! period grid.

use crate::error::{Error, Result};
use crate::operator::OperatorSpec;
use crate::scalar::{max_abs, min_of, Real};

use super::EvolutionConfig;

/// Smallest number of steps per period ever used.
pub const MIN_STEPS: usize = 128;

/// Upper bound on cached coefficient entries (half-step slices times points).
const CACHE_LIMIT: usize = 1 << 25;

/// Bound on `max_t max_i |A_ii(t)|` from the cached coefficient extrema.
pub fn diagonal_bound<T: Real>(spec: &OperatorSpec<T>) -> T {
    let c = spec.rate();
    let a_max = spec.stats().sup.abs().max(spec.stats().inf.abs());
    let disp =
        spec.loss().iter().zip(spec.matrix().diagonal()).map(|(&l, &kd)| (c * kd - l).abs()).fold(T::zero(), T::max);
    disp + a_max
}

/// Steps per period: the configured count (or [`MIN_STEPS`]), doubled until
/// `(T/m) max|A_ii| <= 0.5`.
pub fn steps_per_period<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig) -> usize {
    let mut m = cfg.steps_per_period.unwrap_or(MIN_STEPS).max(1);
    let bound = diagonal_bound(spec).to_f64_lossy();
    let period = spec.period().to_f64_lossy();
    while period / m as f64 * bound > 0.5 {
        m *= 2;
    }
    m
}

/// `a` at the half-step nodes `k dt/2`, `k = 0..2m`, or a single slice
/// when `a` does not depend on time. Empty when too large to cache.
#[derive(Debug, Clone)]
struct Slices<T> {
    cache: Vec<Vec<T>>,
    autonomous: bool,
    half: T,
    nodes: i64,
}

impl<T: Real> Slices<T> {
    fn new(spec: &OperatorSpec<T>, steps: usize, dt: T) -> Self {
        let n = spec.len();
        let autonomous = spec.coeff().is_autonomous();
        let half = dt / T::lit(2.0);
        let cache = if autonomous {
            vec![spec.coefficient_at(T::zero())]
        } else if 2 * steps * n <= CACHE_LIMIT {
            (0..2 * steps).map(|k| spec.coefficient_at(half * T::from_usize_lossy(k))).collect()
        } else {
            Vec::new()
        };
        Slices { cache, autonomous, half, nodes: 2 * steps as i64 }
    }

    fn fill(&self, spec: &OperatorSpec<T>, t: T, out: &mut [T]) {
        if self.autonomous {
            out.copy_from_slice(&self.cache[0]);
            return;
        }
        if !self.cache.is_empty() {
            let k = (t / self.half).round();
            if (t - k * self.half).abs() <= T::lit(1e-9) * self.half {
                let idx = k.to_i64().unwrap_or(0).rem_euclid(self.nodes) as usize;
                out.copy_from_slice(&self.cache[idx]);
                return;
            }
        }
        spec.coeff().values_into(t, spec.domain(), out);
    }
}

/// `out = (A(t) + shift) v`.
fn rhs<T: Real>(spec: &OperatorSpec<T>, slices: &Slices<T>, shift: T, t: T, v: &[T], a_buf: &mut [T], out: &mut [T]) {
    slices.fill(spec, t, a_buf);
    spec.dispersal_into(v, out);
    for ((o, &vi), &a) in out.iter_mut().zip(v).zip(a_buf.iter()) {
        *o += (a + shift) * vi;
    }
}

/// A period-grid integrator for one operator.
#[derive(Debug, Clone)]
pub struct Integrator<'a, T: Real> {
    spec: &'a OperatorSpec<T>,
    steps: usize,
    dt: T,
    slices: Slices<T>,
    shift: T,
    work: [Vec<T>; 4],
}

impl<'a, T: Real> Integrator<'a, T> {
    pub fn new(spec: &'a OperatorSpec<T>, steps: usize) -> Self {
        let dt = spec.period() / T::from_usize_lossy(steps);
        let n = spec.len();
        Integrator {
            spec,
            steps,
            dt,
            slices: Slices::new(spec, steps, dt),
            shift: T::zero(),
            work: std::array::from_fn(|_| vec![T::zero(); n]),
        }
    }

    /// Same integrator without the coefficient cache, for short one-off runs.
    pub fn uncached(spec: &'a OperatorSpec<T>, steps: usize) -> Self {
        let dt = spec.period() / T::from_usize_lossy(steps);
        let n = spec.len();
        let autonomous = spec.coeff().is_autonomous();
        let slices = Slices {
            cache: if autonomous { vec![spec.coefficient_at(T::zero())] } else { Vec::new() },
            autonomous,
            half: dt / T::lit(2.0),
            nodes: 2 * steps as i64,
        };
        Integrator { spec, steps, dt, slices, shift: T::zero(), work: std::array::from_fn(|_| vec![T::zero(); n]) }
    }

    /// Integrate `u' = (A(t) + s) u` instead; used for eigenfunctions.
    pub fn with_shift(mut self, s: T) -> Self {
        self.shift = s;
        self
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn spec(&self) -> &OperatorSpec<T> {
        self.spec
    }

    /// One RK4 step of size `h` from time `t`.
    pub fn step(&mut self, u: &mut [T], t: T, h: T) {
        let Integrator { spec, slices, shift, work, .. } = self;
        let [k, acc, stage, a_buf] = work;
        let half = h / T::lit(2.0);
        let two = T::lit(2.0);

        rhs(spec, slices, *shift, t, u, a_buf, k);
        for i in 0..u.len() {
            acc[i] = k[i];
            stage[i] = u[i] + half * k[i];
        }
        rhs(spec, slices, *shift, t + half, stage, a_buf, k);
        for i in 0..u.len() {
            acc[i] += two * k[i];
            stage[i] = u[i] + half * k[i];
        }
        rhs(spec, slices, *shift, t + half, stage, a_buf, k);
        for i in 0..u.len() {
            acc[i] += two * k[i];
            stage[i] = u[i] + h * k[i];
        }
        rhs(spec, slices, *shift, t + h, stage, a_buf, k);
        let sixth = h / T::lit(6.0);
        for i in 0..u.len() {
            u[i] += sixth * (acc[i] + k[i]);
        }
    }

    /// Advance `u` by `count` grid steps starting at grid node `start`.
    /// With `check = Some(tol)` every iterate must stay above `-tol * max|u|`.
    pub fn advance(&mut self, u: &mut [T], start: usize, count: usize, check: Option<T>) -> Result<()> {
        for j in start..start + count {
            let t = self.dt * T::from_usize_lossy(j);
            self.step(u, t, self.dt);
            if let Some(tol) = check {
                let scale = max_abs(u);
                let low = min_of(u);
                if low < -tol * scale {
                    return Err(Error::NegativityBreach {
                        t: (t + self.dt).to_f64_lossy(),
                        min: low.to_f64_lossy(),
                        max: scale.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `Φ(T, 0) u` in place.
    pub fn period_map(&mut self, u: &mut [T], check: Option<T>) -> Result<()> {
        self.advance(u, 0, self.steps, check)
    }

    /// `Φ(T, 0) u` rescaled to unit max-norm; returns `ln` of the total
    /// growth factor. Rescales inside the period to avoid overflow.
    pub fn period_map_log(&mut self, u: &mut [T], check: Option<T>) -> Result<T> {
        let big = T::max_value().sqrt().sqrt();
        let mut log_growth = T::zero();
        for j in 0..self.steps {
            self.advance(u, j, 1, check)?;
            let scale = max_abs(u);
            if scale > big || scale < T::one() / big {
                log_growth += scale.ln();
                u.iter_mut().for_each(|v| *v /= scale);
            }
        }
        let scale = max_abs(u);
        log_growth += scale.ln();
        u.iter_mut().for_each(|v| *v /= scale);
        Ok(log_growth)
    }

    /// Advance from an arbitrary time `t0` to `t1 >= t0` with steps no
    /// longer than the grid step.
    pub fn advance_between(&mut self, u: &mut [T], t0: T, t1: T, check: Option<T>) -> Result<()> {
        let span = t1 - t0;
        if span <= T::zero() {
            return Ok(());
        }
        let ratio = span / self.dt;
        let start = t0 / self.dt;
        let aligned = (start - start.round()).abs() < T::lit(1e-9) && (ratio - ratio.round()).abs() < T::lit(1e-9);
        if aligned {
            let s = start.round().to_i64().unwrap_or(0);
            let count = ratio.round().to_usize().unwrap_or(0);
            if s >= 0 {
                return self.advance(u, s as usize, count, check);
            }
        }
        let count = ratio.ceil().to_usize().unwrap_or(1).max(1);
        let h = span / T::from_usize_lossy(count);
        for j in 0..count {
            let t = t0 + h * T::from_usize_lossy(j);
            self.step(u, t, h);
            if let Some(tol) = check {
                let scale = max_abs(u);
                let low = min_of(u);
                if low < -tol * scale {
                    return Err(Error::NegativityBreach {
                        t: (t + h).to_f64_lossy(),
                        min: low.to_f64_lossy(),
                        max: scale.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Solution of `u' = A(t) u`, `u(t0) = u0`, at `t1`.
///
/// Uses `m * (t1 - t0) / T` uniform steps. A nonnegative `u0` must stay in
/// the cone; on a breach the step count is doubled once before failing.
pub fn evolve<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig, u0: &[T], t0: T, t1: T) -> Result<Vec<T>> {
    if u0.len() != spec.len() {
        return Err(Error::ShapeMismatch { expected: spec.len(), found: u0.len() });
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter { name: "t1", reason: format!("must not precede t0 ({t1} < {t0})") });
    }
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter { name: "u0", reason: "non-finite entry".into() });
    }
    let check = u0.iter().all(|&v| v >= T::zero()).then(|| T::lit(cfg.positivity_tol));
    let m = steps_per_period(spec, cfg);
    let run = |steps: usize| {
        let mut u = u0.to_vec();
        Integrator::new(spec, steps).advance_between(&mut u, t0, t1, check)?;
        Ok(u)
    };
    match run(m) {
        Err(Error::NegativityBreach { .. }) => run(2 * m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Coefficient;
    use crate::geometry::build_domain;
    use crate::kernel::{Kernel, KernelFamily};
    use crate::operator::Boundary;

    fn spec(coeff: Coefficient, n: usize, d: f64) -> OperatorSpec<f64> {
        let domain = build_domain(1, &[(0.0, 1.0)], &[n]).unwrap();
        let kernel = Kernel::new(KernelFamily::Epanechnikov1d, 1.0).unwrap();
        OperatorSpec::new(domain, kernel, coeff, d, 0.5, 0.0, Boundary::Neumann).unwrap()
    }

    #[test]
    fn constants_are_preserved() {
        let s = spec(Coefficient::constant(0.0), 25, 3.0);
        let u = evolve(&s, &EvolutionConfig::default(), &[1.0; 25], 0.0, 2.5).unwrap();
        assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn scalar_growth() {
        let s = spec(Coefficient::constant(2.0), 10, 1.0);
        let exact = 2.0f64.exp();
        // RK4 local error (2 dt)^5 / 120 summed over m steps
        for (m, tol) in [(64, 2e-8), (128, 1.2e-9), (256, 1e-10)] {
            let cfg = EvolutionConfig { steps_per_period: Some(m), ..Default::default() };
            let u = evolve(&s, &cfg, &[1.0; 10], 0.0, 1.0).unwrap();
            assert!(u.iter().all(|v| (v - exact).abs() < tol * exact), "m = {m}: {}", u[0] / exact - 1.0);
        }
    }

    #[test]
    fn step_rule_doubles() {
        let s = spec(Coefficient::constant(0.0), 20, 1e3);
        let m = steps_per_period(&s, &EvolutionConfig::default());
        assert!(m >= MIN_STEPS && m.is_power_of_two());
        assert!(diagonal_bound(&s) / m as f64 <= 0.5);
        assert!(diagonal_bound(&s) / (m / 2) as f64 > 0.5);
    }

    #[test]
    fn off_grid_times_and_linearity() {
        let c = Coefficient::separable("cos(pi*x)", "sin(2*pi*t)", 1.0).unwrap();
        let s = spec(c, 16, 0.8);
        let cfg = EvolutionConfig::default();
        let u0: Vec<f64> = (0..16).map(|i| 1.0 + (i as f64).sin()).collect();
        let v0: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).cos()).collect();
        let combo: Vec<f64> = u0.iter().zip(&v0).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let (u, v, w) = (
            evolve(&s, &cfg, &u0, 0.13, 0.91).unwrap(),
            evolve(&s, &cfg, &v0, 0.13, 0.91).unwrap(),
            evolve(&s, &cfg, &combo, 0.13, 0.91).unwrap(),
        );
        for i in 0..16 {
            assert!((w[i] - (2.0 * u[i] - 3.0 * v[i])).abs() < 1e-12);
        }
        // splitting the interval at an off-grid time agrees to integrator accuracy
        let mid = evolve(&s, &cfg, &u0, 0.13, 0.5).unwrap();
        let two = evolve(&s, &cfg, &mid, 0.5, 0.91).unwrap();
        for i in 0..16 {
            assert!((two[i] - u[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let s = spec(Coefficient::constant(0.0), 10, 1.0);
        let cfg = EvolutionConfig::default();
        assert!(matches!(evolve(&s, &cfg, &[1.0; 9], 0.0, 1.0), Err(Error::ShapeMismatch { .. })));
        assert!(evolve(&s, &cfg, &[1.0; 10], 1.0, 0.0).is_err());
    }
}
