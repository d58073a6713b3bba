//! Sweeps in the dispersal rate `D` and range `σ` against the closed-form
//! limits of `λ₁`.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficient::time_average;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::operator::{OperatorSpec, STATS_TIME_NODES};
use crate::scalar::Real;
use crate::spectral::{principal_spectrum_point, EvolutionConfig};

/// Reference limit names, also used as CSV column suffixes.
pub const NEG_MAX_TIME_AVG: &str = "neg_max_aT";
pub const NEG_SPACETIME_AVG: &str = "neg_spacetime_avg";
pub const NEG_SPACE_AVG: &str = "neg_space_avg";

/// Slack for the sandwich `-sup a <= λ₁ <= -inf a`.
pub const SANDWICH_SLACK: f64 = 1e-8;
/// Slack for the upper bound `λ₁ <= -(spacetime average of a)`.
pub const UPPER_BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    DispersalRate,
    DispersalRange,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::DispersalRate => "D",
            SweepParameter::DispersalRange => "sigma",
        }
    }
}

/// The end of the parameter range a limit describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Small,
    Large,
}

/// Gap behaviour toward one end of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTrend {
    /// Gaps strictly decrease as the parameter decreases.
    DecreasingTowardSmall,
    /// Gaps strictly decrease as the parameter increases.
    DecreasingTowardLarge,
    NotMonotone,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceLimit<T> {
    pub name: &'static str,
    pub value: T,
    /// Ends of the range where `λ₁` tends to `value`.
    pub ends: Vec<End>,
    /// `|λ₁ - value|` per sweep point; `None` where the point failed.
    pub gaps: Vec<Option<T>>,
    pub trends: Vec<GapTrend>,
}

impl<T: Real> ReferenceLimit<T> {
    fn new(name: &'static str, value: T, ends: Vec<End>, lambdas: &[Option<T>]) -> Self {
        let gaps: Vec<Option<T>> = lambdas.iter().map(|l| l.map(|l| (l - value).abs())).collect();
        let trends = ends.iter().map(|&end| trend(&gaps, end)).collect();
        ReferenceLimit { name, value, ends, gaps, trends }
    }

    /// True when the gaps shrink monotonically toward `end`.
    pub fn decreasing_toward(&self, end: End) -> bool {
        let wanted = match end {
            End::Small => GapTrend::DecreasingTowardSmall,
            End::Large => GapTrend::DecreasingTowardLarge,
        };
        self.trends.contains(&wanted)
    }
}

fn trend<T: Real>(gaps: &[Option<T>], end: End) -> GapTrend {
    let Some(g) = gaps.iter().copied().collect::<Option<Vec<T>>>() else {
        return GapTrend::NotMonotone;
    };
    match end {
        End::Small if g.windows(2).all(|w| w[0] < w[1]) => GapTrend::DecreasingTowardSmall,
        End::Large if g.windows(2).all(|w| w[0] > w[1]) => GapTrend::DecreasingTowardLarge,
        _ => GapTrend::NotMonotone,
    }
}

/// Outcome at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSample<T> {
    pub lambda1: T,
    pub lambda_star: T,
    pub is_principal: bool,
    pub iters: usize,
    pub steps_per_period: usize,
    pub cells: Vec<usize>,
    /// `-sup a - slack <= λ₁ <= -inf a + slack`
    pub sandwich_holds: bool,
    /// `-(spacetime average) - λ₁` for componentwise-symmetric kernels.
    pub upper_bound_margin: Option<T>,
    /// Seconds; kept out of deterministic outputs.
    #[serde(skip)]
    pub wall_clock: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub parameter: SweepParameter,
    pub values: Vec<T>,
    pub points: Vec<Result<SweepSample<T>>>,
    pub limits: Vec<ReferenceLimit<T>>,
}

impl<T: Real> SweepResult<T> {
    pub fn lambdas(&self) -> Vec<Option<T>> {
        self.points.iter().map(|p| p.as_ref().ok().map(|s| s.lambda1)).collect()
    }

    pub fn limit(&self, name: &str) -> Option<&ReferenceLimit<T>> {
        self.limits.iter().find(|l| l.name == name)
    }
}

fn check_values<T: Real>(name: &'static str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter { name, reason: "empty sweep".into() });
    }
    if values.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidParameter { name, reason: "values must be positive and finite".into() });
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter { name, reason: "values must be strictly ascending".into() });
    }
    Ok(())
}

fn solve_point<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig) -> Result<SweepSample<T>> {
    let start = Instant::now();
    let r = principal_spectrum_point(spec, cfg)?;
    let stats = spec.stats();
    let slack = T::lit(SANDWICH_SLACK);
    let sandwich_holds = -stats.sup - slack <= r.lambda1 && r.lambda1 <= -stats.inf + slack;
    let upper_bound_margin = spec.kernel().componentwise_symmetric().then(|| -stats.spacetime_avg - r.lambda1);
    Ok(SweepSample {
        lambda1: r.lambda1,
        lambda_star: r.lambda_star,
        is_principal: r.is_principal,
        iters: r.iters,
        steps_per_period: r.steps_per_period,
        cells: spec.domain().cells().to_vec(),
        sandwich_holds,
        upper_bound_margin,
        wall_clock: start.elapsed().as_secs_f64(),
    })
}

/// `λ₁` for each `D`, with references `-max a_T` (`D → 0`) and the negative
/// space–time average (`D → ∞`). Points run concurrently; failures are
/// recorded per point.
pub fn sweep_dispersal_rate<T: Real>(
    spec: &OperatorSpec<T>,
    d_values: &[T],
    cfg: &EvolutionConfig,
) -> Result<SweepResult<T>> {
    check_values("D", d_values)?;
    cfg.validate()?;
    let points: Vec<Result<SweepSample<T>>> =
        d_values.par_iter().map(|&d| spec.with_dispersal(d).and_then(|s| solve_point(&s, cfg))).collect();
    let lambdas: Vec<Option<T>> = points.iter().map(|p| p.as_ref().ok().map(|s| s.lambda1)).collect();
    let stats = spec.stats();
    let limits = vec![
        ReferenceLimit::new(NEG_MAX_TIME_AVG, -stats.max_time_avg, vec![End::Small], &lambdas),
        ReferenceLimit::new(NEG_SPACETIME_AVG, -stats.spacetime_avg, vec![End::Large], &lambdas),
    ];
    Ok(SweepResult { parameter: SweepParameter::DispersalRate, values: d_values.to_vec(), points, limits })
}

/// Options for [`sweep_dispersal_range`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeOptions {
    /// Refine the grid per point so that `h <= reach/4`, `reach = support · σ`.
    pub refine: bool,
    /// Insist on the spatial-average reference for `σ → 0`; fails with
    /// `IncompatibleLimit` when it is not established.
    pub require_averaging: bool,
}

impl Default for RangeOptions {
    fn default() -> Self {
        RangeOptions { refine: true, require_averaging: false }
    }
}

fn averaging_obstacle<T: Real>(spec: &OperatorSpec<T>, k: T) -> Option<String> {
    if !(k > T::lit(2.0)) {
        Some(format!("the spatial-average limit needs k > 2, got k = {k}"))
    } else if !spec.coeff().is_autonomous() {
        Some("the spatial-average limit is only established for time-independent a".into())
    } else if spec.domain().dimension() != 2 {
        Some("the spatial-average limit is only established in two dimensions".into())
    } else if !spec.kernel().radial() {
        Some("the spatial-average limit needs a radially symmetric kernel".into())
    } else {
        None
    }
}

/// `λ₁` for each `σ` at exponent `k`.
///
/// References: `-max a_T` as `σ → ∞` for every `k`, and as `σ → 0` when
/// `k = 0` and `a` is Lipschitz in `x`; the negative spatial average as
/// `σ → 0` for `k > 2`, time-independent `a`, radial `J` in two dimensions.
/// Reference values come from the finest grid of the sweep.
pub fn sweep_dispersal_range<T: Real>(
    spec: &OperatorSpec<T>,
    sigma_values: &[T],
    k: T,
    cfg: &EvolutionConfig,
    opts: RangeOptions,
) -> Result<SweepResult<T>> {
    check_values("sigma", sigma_values)?;
    cfg.validate()?;
    let obstacle = averaging_obstacle(spec, k);
    if opts.require_averaging {
        if let Some(reason) = &obstacle {
            return Err(Error::IncompatibleLimit(reason.clone()));
        }
    }
    let base = spec.with_exponent(k)?;
    let support = base.kernel().support_radius();
    let grid_for = |sigma: T| -> Result<Domain<T>> {
        let d = base.domain();
        if !opts.refine {
            return Ok(d.clone());
        }
        let needed = d.cells_for_diameter(support * sigma / T::lit(4.0));
        let cells: Vec<usize> = needed.iter().zip(d.cells()).map(|(&a, &b)| a.max(b)).collect();
        d.with_cells(&cells)
    };
    let build = |sigma: T| -> Result<OperatorSpec<T>> {
        let domain = grid_for(sigma)?;
        OperatorSpec::new(domain, *base.kernel(), base.coeff().clone(), base.dispersal(), sigma, k, base.boundary())
    };
    let points: Vec<Result<SweepSample<T>>> =
        sigma_values.par_iter().map(|&sigma| build(sigma).and_then(|s| solve_point(&s, cfg))).collect();
    let lambdas: Vec<Option<T>> = points.iter().map(|p| p.as_ref().ok().map(|s| s.lambda1)).collect();

    // statistics on the finest grid reached by the sweep
    let stats = time_average(base.coeff(), &grid_for(sigma_values[0])?, STATS_TIME_NODES)?;
    let mut max_ends = vec![End::Large];
    if k == T::zero() && spec.coeff().lipschitz_in_x() {
        max_ends.insert(0, End::Small);
    }
    let mut limits = vec![ReferenceLimit::new(NEG_MAX_TIME_AVG, -stats.max_time_avg, max_ends, &lambdas)];
    if obstacle.is_none() {
        limits.push(ReferenceLimit::new(NEG_SPACE_AVG, -stats.spacetime_avg, vec![End::Small], &lambdas));
    }
    Ok(SweepResult { parameter: SweepParameter::DispersalRange, values: sigma_values.to_vec(), points, limits })
}

/// `-(1/(|Ω|T)) ∫∫ a - λ₁`, nonnegative up to [`UPPER_BOUND_SLACK`] for
/// componentwise-symmetric kernels.
pub fn verify_upper_bound<T: Real>(spec: &OperatorSpec<T>, cfg: &EvolutionConfig) -> Result<T> {
    if !spec.kernel().componentwise_symmetric() {
        return Err(Error::KernelNotSymmetric);
    }
    let r = principal_spectrum_point(spec, cfg)?;
    Ok(-spec.stats().spacetime_avg - r.lambda1)
}
