//! Power iteration on the monodromy map `Φ(T, 0)`.

use crate::error::{Error, Result};
use crate::operator::{assemble_generator, lambda_star, OperatorSpec, SpaceTimeFunction};
use crate::scalar::{max_abs, Real};

use super::evolve::{steps_per_period, Integrator};
use super::EvolutionConfig;

/// `λ₁` counts as the principal eigenvalue when `λ₁ < λ* - PRINCIPAL_MARGIN`.
pub const PRINCIPAL_MARGIN: f64 = 1e-8;

/// Principal spectrum point of the discrete operator with its periodic
/// eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult<T> {
    pub lambda1: T,
    /// Perron root `r` of the discrete monodromy map; `λ₁ = -ln r / T`.
    pub radius: T,
    pub lambda_star: T,
    pub is_principal: bool,
    pub iters: usize,
    pub steps_per_period: usize,
    /// Period nodes `t_j = j T / m`, `j = 0..=m`.
    pub times: Vec<T>,
    /// `φ(t_j, ·)`, normalised so the largest entry over all snapshots is 1.
    pub snapshots: Vec<Vec<T>>,
    /// `max |φ(T) - φ(0)|`
    pub periodicity_residual: T,
    /// `max |A φ + λ₁ φ|`, for time-independent coefficients only.
    pub algebraic_residual: Option<T>,
}

impl<T: Real> EigenResult<T> {
    pub fn min_value(&self) -> T {
        self.snapshots.iter().flatten().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.snapshots.iter().flatten().copied().fold(T::neg_infinity(), T::max)
    }

    /// The eigenfunction as a space–time function with exact time derivative.
    pub fn eigenfunction(&self, spec: &OperatorSpec<T>) -> PeriodicEigenfunction<T> {
        PeriodicEigenfunction {
            spec: spec.clone(),
            lambda1: self.lambda1,
            steps: self.steps_per_period,
            snapshots: self.snapshots.clone(),
        }
    }
}

/// Run the power iteration `v <- Φ(T,0) v / ‖Φ(T,0) v‖_∞` from `v = 1`.
///
/// Stops when successive radius estimates agree to `power_tol` relatively
/// and the normalised iterate moves by at most `power_tol`.
pub fn principal_spectrum_point<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig) -> Result<EigenResult<T>> {
    cfg.validate()?;
    let m = steps_per_period(spec, cfg);
    match solve(spec, cfg, m) {
        Err(Error::NegativityBreach { .. }) => solve(spec, cfg, 2 * m),
        other => other,
    }
}

fn solve<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig, steps: usize) -> Result<EigenResult<T>> {
    let n = spec.len();
    let period = spec.period();
    let tol = T::lit(cfg.power_tol);
    let check = Some(T::lit(cfg.positivity_tol));
    let mut integ = Integrator::new(spec, steps);

    let mut v = vec![T::one(); n];
    let mut w = v.clone();
    let mut prev: Option<T> = None;
    let mut converged = None;
    for iter in 1..=cfg.max_power_iters {
        w.copy_from_slice(&v);
        let log_r = integ.period_map_log(&mut w, check)?;
        let dv = v.iter().zip(&w).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        std::mem::swap(&mut v, &mut w);
        if let Some(p) = prev {
            if (log_r - p).abs() <= tol && dv <= tol {
                converged = Some((iter, log_r));
                break;
            }
        }
        let previous = prev.replace(log_r);
        if iter == cfg.max_power_iters {
            return Err(Error::NoConvergence {
                iters: iter,
                previous: previous.unwrap_or(log_r).exp().to_f64_lossy(),
                last: log_r.exp().to_f64_lossy(),
            });
        }
    }
    let (iters, mut log_r) = converged.expect("loop either converges or returns");
    let autonomous = spec.coeff().is_autonomous();
    if autonomous {
        // The RK4 period map is p(dt A)^m with p the RK4 stability polynomial,
        // so inverting p recovers the exact exponent of e^{AT}.
        let per_step = (log_r / T::from_usize_lossy(steps)).to_f64_lossy();
        log_r = T::lit(invert_rk4_log(per_step) * steps as f64);
    }
    let lambda1 = -log_r / period;

    let mut snapshots = Vec::with_capacity(steps + 1);
    if autonomous {
        snapshots.resize(steps + 1, v.clone());
    } else {
        // φ(t_j) = e^{λ₁ t_j} Φ(t_j, 0) v, integrated directly as φ' = (A + λ₁) φ.
        let mut integ = integ.with_shift(lambda1);
        let mut u = v.clone();
        snapshots.push(u.clone());
        for j in 0..steps {
            integ.advance(&mut u, j, 1, None)?;
            snapshots.push(u.clone());
        }
    }
    let top = snapshots.iter().map(|s| max_abs(s)).fold(T::zero(), T::max);
    for s in &mut snapshots {
        s.iter_mut().for_each(|x| *x /= top);
    }
    let periodicity_residual =
        snapshots[0].iter().zip(&snapshots[steps]).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
    let algebraic_residual = spec.coeff().is_autonomous().then(|| {
        let phi = &snapshots[0];
        let a_phi = assemble_generator(spec, T::zero()).apply(phi);
        a_phi.iter().zip(phi).map(|(&x, &p)| (x + lambda1 * p).abs()).fold(T::zero(), T::max)
    });
    let dt = period / T::from_usize_lossy(steps);
    let lambda_star = lambda_star(spec);
    Ok(EigenResult {
        lambda1,
        radius: log_r.exp(),
        lambda_star,
        is_principal: lambda1 < lambda_star - T::lit(PRINCIPAL_MARGIN),
        iters,
        steps_per_period: steps,
        times: (0..=steps).map(|j| dt * T::from_usize_lossy(j)).collect(),
        snapshots,
        periodicity_residual,
        algebraic_residual,
    })
}

/// Solves `ln p(z) = g` for the RK4 stability polynomial
/// `p(z) = 1 + z + z²/2 + z³/6 + z⁴/24`, on the branch through the origin.
fn invert_rk4_log(g: f64) -> f64 {
    let mut z = g;
    for _ in 0..50 {
        let p = 1.0 + z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)));
        let dp = 1.0 + z * (1.0 + z * (0.5 + z / 6.0));
        let step = (p.ln() - g) * p / dp;
        z -= step;
        if step.abs() <= 1e-16 * (1.0 + z.abs()) {
            break;
        }
    }
    z
}

/// The computed periodic eigenfunction. Between period nodes it is
/// continued by integrating `φ' = (A(t) + λ₁) φ`, so `L[φ] = -λ₁ φ` holds
/// by construction of the time derivative.
#[derive(Debug, Clone)]
pub struct PeriodicEigenfunction<T: Real> {
    spec: OperatorSpec<T>,
    lambda1: T,
    steps: usize,
    snapshots: Vec<Vec<T>>,
}

impl<T: Real> PeriodicEigenfunction<T> {
    pub fn lambda1(&self) -> T {
        self.lambda1
    }

    pub fn snapshots(&self) -> &[Vec<T>] {
        &self.snapshots
    }
}

impl<T: Real> SpaceTimeFunction<T> for PeriodicEigenfunction<T> {
    fn value(&self, t: T) -> Vec<T> {
        let period = self.spec.period();
        let dt = period / T::from_usize_lossy(self.steps);
        let tau = t - (t / period).floor() * period;
        let pos = tau / dt;
        let j = pos.floor().to_usize().unwrap_or(0).min(self.steps);
        let offset = tau - dt * T::from_usize_lossy(j);
        if offset <= T::lit(1e-12) * dt {
            return self.snapshots[j].clone();
        }
        if dt - offset <= T::lit(1e-12) * dt {
            return self.snapshots[(j + 1).min(self.steps)].clone();
        }
        let mut u = self.snapshots[j].clone();
        let mut integ = Integrator::uncached(&self.spec, self.steps).with_shift(self.lambda1);
        let start = dt * T::from_usize_lossy(j);
        let sub = 4;
        let h = offset / T::from_usize_lossy(sub);
        for k in 0..sub {
            integ.step(&mut u, start + h * T::from_usize_lossy(k), h);
        }
        u
    }

    fn time_derivative(&self, t: T) -> Option<Vec<T>> {
        let phi = self.value(t);
        let mut out = assemble_generator(&self.spec, t).apply(&phi);
        for (o, &p) in out.iter_mut().zip(&phi) {
            *o += self.lambda1 * p;
        }
        Some(out)
    }
}
