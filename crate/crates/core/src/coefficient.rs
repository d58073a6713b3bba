//! T-periodic growth rates `a(t, x)` and their time averages.

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::geometry::Domain;
use crate::scalar::{max_of, min_of, Real};

/// Samples of `a` on a uniform time grid covering one closed period.
///
/// `slices[s][i]` is the value at time `s*T/S` and grid point `i`, where
/// `S = slices.len() - 1`; the first and last slices must coincide.
/// Between slices the value is interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    slices: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.len() < 2 {
            return Err(Error::InvalidParameter { name: "tabulated", reason: "need at least two time slices".into() });
        }
        let n = slices[0].len();
        if let Some(bad) = slices.iter().find(|s| s.len() != n) {
            return Err(Error::ShapeMismatch { expected: n, found: bad.len() });
        }
        let (first, last) = (&slices[0], &slices[slices.len() - 1]);
        if first.iter().zip(last).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs())) {
            return Err(Error::InvalidParameter {
                name: "tabulated",
                reason: "first and last time slices must be equal".into(),
            });
        }
        if slices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter { name: "tabulated", reason: "non-finite sample".into() });
        }
        Ok(Table { slices })
    }

    /// Time-independent table.
    pub fn stationary(values: Vec<f64>) -> Result<Self> {
        Table::new(vec![values.clone(), values])
    }

    pub fn points(&self) -> usize {
        self.slices[0].len()
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }

    fn eval(&self, phase: f64, i: usize) -> f64 {
        let s = (self.slices.len() - 1) as f64;
        let tau = phase * s;
        let k = (tau.floor() as usize).min(self.slices.len() - 2);
        let frac = tau - k as f64;
        self.slices[k][i] * (1.0 - frac) + self.slices[k + 1][i] * frac
    }

    fn is_stationary(&self) -> bool {
        self.slices.iter().all(|s| s == &self.slices[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientForm {
    Constant(f64),
    /// `c(t)`
    TimeOnly(Expr),
    /// `b(x)`
    SpaceOnly(Expr),
    /// `b(x) + c(t)`
    Separable {
        space: Expr,
        time: Expr,
    },
    /// `b(x) c(t)`
    Product {
        space: Expr,
        time: Expr,
    },
    Tabulated(Table),
    Sum(Box<CoefficientForm>, Box<CoefficientForm>),
}

impl CoefficientForm {
    fn eval(&self, t: f64, phase: f64, i: usize, x: f64, y: f64) -> f64 {
        match self {
            CoefficientForm::Constant(c) => *c,
            CoefficientForm::TimeOnly(c) => c.eval(t, x, y),
            CoefficientForm::SpaceOnly(b) => b.eval(t, x, y),
            CoefficientForm::Separable { space, time } => space.eval(t, x, y) + time.eval(t, x, y),
            CoefficientForm::Product { space, time } => space.eval(t, x, y) * time.eval(t, x, y),
            CoefficientForm::Tabulated(table) => table.eval(phase, i),
            CoefficientForm::Sum(a, b) => a.eval(t, phase, i, x, y) + b.eval(t, phase, i, x, y),
        }
    }

    fn is_autonomous(&self) -> bool {
        match self {
            CoefficientForm::Constant(_) | CoefficientForm::SpaceOnly(_) => true,
            CoefficientForm::TimeOnly(c) => !c.uses(Var::T),
            CoefficientForm::Separable { time, .. } | CoefficientForm::Product { time, .. } => !time.uses(Var::T),
            CoefficientForm::Tabulated(table) => table.is_stationary(),
            CoefficientForm::Sum(a, b) => a.is_autonomous() && b.is_autonomous(),
        }
    }

    fn is_spatially_flat(&self) -> bool {
        match self {
            CoefficientForm::Constant(_) | CoefficientForm::TimeOnly(_) => true,
            CoefficientForm::SpaceOnly(b) => !b.uses(Var::X) && !b.uses(Var::Y),
            CoefficientForm::Separable { space, .. } => !space.uses(Var::X) && !space.uses(Var::Y),
            CoefficientForm::Product { space, .. } => !space.uses(Var::X) && !space.uses(Var::Y),
            CoefficientForm::Tabulated(table) => table.slices.iter().all(|s| s.iter().all(|v| *v == s[0])),
            CoefficientForm::Sum(a, b) => a.is_spatially_flat() && b.is_spatially_flat(),
        }
    }

    fn table_points(&self) -> Option<usize> {
        match self {
            CoefficientForm::Tabulated(t) => Some(t.points()),
            CoefficientForm::Sum(a, b) => a.table_points().or_else(|| b.table_points()),
            _ => None,
        }
    }

    fn check(&self) -> Result<()> {
        let space_only = |e: &Expr| {
            if e.uses(Var::T) {
                Err(Error::Expression { expr: e.source().into(), reason: "space part must not depend on t".into() })
            } else {
                Ok(())
            }
        };
        let time_only = |e: &Expr| {
            if e.uses(Var::X) || e.uses(Var::Y) {
                Err(Error::Expression { expr: e.source().into(), reason: "time part must not depend on x or y".into() })
            } else {
                Ok(())
            }
        };
        match self {
            CoefficientForm::Constant(c) if !c.is_finite() => {
                Err(Error::InvalidParameter { name: "coefficient", reason: "constant must be finite".into() })
            }
            CoefficientForm::Constant(_) | CoefficientForm::Tabulated(_) => Ok(()),
            CoefficientForm::TimeOnly(c) => time_only(c),
            CoefficientForm::SpaceOnly(b) => space_only(b),
            CoefficientForm::Separable { space, time } | CoefficientForm::Product { space, time } => {
                space_only(space)?;
                time_only(time)
            }
            CoefficientForm::Sum(a, b) => {
                a.check()?;
                b.check()
            }
        }
    }
}

/// A growth rate, periodic in time with period `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    period: f64,
    form: CoefficientForm,
    lipschitz_in_x: bool,
}

impl Coefficient {
    pub fn new(form: CoefficientForm, period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter { name: "period", reason: format!("must be positive, got {period}") });
        }
        form.check()?;
        // Expression forms are smooth; sampled data carries no such guarantee.
        let lipschitz_in_x = form.table_points().is_none();
        Ok(Coefficient { period, form, lipschitz_in_x })
    }

    pub fn constant(c: f64) -> Self {
        Coefficient::new(CoefficientForm::Constant(c), 1.0).expect("finite constant")
    }

    pub fn time_only(c: &str, period: f64) -> Result<Self> {
        Coefficient::new(CoefficientForm::TimeOnly(Expr::parse(c)?), period)
    }

    pub fn space_only(b: &str) -> Result<Self> {
        Coefficient::new(CoefficientForm::SpaceOnly(Expr::parse(b)?), 1.0)
    }

    pub fn separable(b: &str, c: &str, period: f64) -> Result<Self> {
        Coefficient::new(CoefficientForm::Separable { space: Expr::parse(b)?, time: Expr::parse(c)? }, period)
    }

    pub fn product(b: &str, c: &str, period: f64) -> Result<Self> {
        Coefficient::new(CoefficientForm::Product { space: Expr::parse(b)?, time: Expr::parse(c)? }, period)
    }

    pub fn tabulated(table: Table, period: f64) -> Result<Self> {
        Coefficient::new(CoefficientForm::Tabulated(table), period)
    }

    pub fn with_period(mut self, period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter { name: "period", reason: format!("must be positive, got {period}") });
        }
        self.period = period;
        Ok(self)
    }

    pub fn with_lipschitz(mut self, lipschitz: bool) -> Self {
        self.lipschitz_in_x = lipschitz;
        self
    }

    /// `a + other`; both must share the period.
    pub fn plus(&self, other: &Coefficient) -> Result<Self> {
        if (self.period - other.period).abs() > 1e-14 * self.period {
            return Err(Error::InvalidParameter {
                name: "period",
                reason: format!("cannot add coefficients with periods {} and {}", self.period, other.period),
            });
        }
        Ok(Coefficient {
            period: self.period,
            form: CoefficientForm::Sum(Box::new(self.form.clone()), Box::new(other.form.clone())),
            lipschitz_in_x: self.lipschitz_in_x && other.lipschitz_in_x,
        })
    }

    /// `a + s` for a constant shift.
    pub fn shifted(&self, s: f64) -> Self {
        Coefficient {
            period: self.period,
            form: CoefficientForm::Sum(Box::new(self.form.clone()), Box::new(CoefficientForm::Constant(s))),
            lipschitz_in_x: self.lipschitz_in_x,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn form(&self) -> &CoefficientForm {
        &self.form
    }

    pub fn lipschitz_in_x(&self) -> bool {
        self.lipschitz_in_x
    }

    pub fn is_autonomous(&self) -> bool {
        self.form.is_autonomous()
    }

    pub fn is_spatially_flat(&self) -> bool {
        self.form.is_spatially_flat()
    }

    /// Fails when a tabulated part was sampled on a different grid.
    pub fn check_domain<T: Real>(&self, domain: &Domain<T>) -> Result<()> {
        match self.form.table_points() {
            Some(n) if n != domain.len() => Err(Error::ShapeMismatch { expected: domain.len(), found: n }),
            _ => Ok(()),
        }
    }

    /// `a(t, x_i)`.
    pub fn eval<T: Real>(&self, t: T, i: usize, x: &[T]) -> T {
        let t = t.to_f64_lossy();
        let phase = (t / self.period).rem_euclid(1.0);
        let px = x[0].to_f64_lossy();
        let py = x.get(1).map_or(0.0, |v| v.to_f64_lossy());
        T::lit(self.form.eval(t, phase, i, px, py))
    }

    /// `a(t, ·)` on every grid point.
    pub fn values_into<T: Real>(&self, t: T, domain: &Domain<T>, out: &mut [T]) {
        for (i, (o, p)) in out.iter_mut().zip(domain.points()).enumerate() {
            *o = self.eval(t, i, p);
        }
    }

    pub fn values<T: Real>(&self, t: T, domain: &Domain<T>) -> Vec<T> {
        let mut out = vec![T::zero(); domain.len()];
        self.values_into(t, domain, &mut out);
        out
    }
}

/// Time averages and extrema of a coefficient over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientStats<T> {
    /// `a_T(x_i) = (1/T) ∫_0^T a(t, x_i) dt`
    pub time_avg: Vec<T>,
    pub max_time_avg: T,
    pub min_time_avg: T,
    /// `(1/(T|Ω|)) ∫_0^T ∫_Ω a`
    pub spacetime_avg: T,
    pub sup: T,
    pub inf: T,
}

/// Rectangle rule on `mt` uniform nodes `j T / mt`, `j = 0..mt`.
pub fn time_average<T: Real>(coeff: &Coefficient, domain: &Domain<T>, mt: usize) -> Result<CoefficientStats<T>> {
    if mt < 2 {
        return Err(Error::InvalidParameter { name: "mt", reason: format!("need at least 2 time nodes, got {mt}") });
    }
    coeff.check_domain(domain)?;
    let n = domain.len();
    let period = T::lit(coeff.period());
    let nodes = if coeff.is_autonomous() { 1 } else { mt };
    let mut sum = vec![T::zero(); n];
    let mut slice = vec![T::zero(); n];
    let (mut sup, mut inf) = (T::neg_infinity(), T::infinity());
    for j in 0..nodes {
        let t = period * T::from_usize_lossy(j) / T::from_usize_lossy(nodes);
        coeff.values_into(t, domain, &mut slice);
        for (s, &v) in sum.iter_mut().zip(&slice) {
            *s += v;
        }
        sup = sup.max(max_of(&slice));
        inf = inf.min(min_of(&slice));
    }
    let count = T::from_usize_lossy(nodes);
    let time_avg: Vec<T> = sum.into_iter().map(|s| s / count).collect();
    let spacetime_avg = domain.integrate(&time_avg)? / domain.volume();
    Ok(CoefficientStats {
        max_time_avg: max_of(&time_avg),
        min_time_avg: min_of(&time_avg),
        time_avg,
        spacetime_avg,
        sup,
        inf,
    })
}
