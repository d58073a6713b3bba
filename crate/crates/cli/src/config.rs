//! Run configuration: parsing, defaults and validation with field paths.

use std::path::{Path, PathBuf};

use nonlocal_spectra::coefficient::{CoefficientForm, Table};
use nonlocal_spectra::expr::{Expr, Var};
use nonlocal_spectra::spectral::Direction;
use nonlocal_spectra::{build_domain, Boundary, Coefficient, EvolutionConfig, Kernel, KernelFamily, OperatorSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: EvolutionConfig,
    #[serde(default)]
    pub command: CommandConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainConfig,
    pub kernel: KernelConfig,
    pub coefficient: CoefficientConfig,
    #[serde(rename = "D")]
    pub dispersal: f64,
    pub sigma: f64,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// `[lo, hi]` per axis.
    pub bounds: Vec<[f64; 2]>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    #[serde(default = "one")]
    pub gamma: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum CoefficientConfig {
    Constant {
        value: f64,
    },
    TimeOnly {
        time: String,
        #[serde(default = "one")]
        period: f64,
    },
    SpaceOnly {
        space: String,
    },
    /// `space(x) + time(t)`
    Separable {
        space: String,
        time: String,
        #[serde(default = "one")]
        period: f64,
    },
    /// `space(x) * time(t)`
    Product {
        space: String,
        time: String,
        #[serde(default = "one")]
        period: f64,
    },
    /// Values per grid point at uniform phases; the last slice repeats the first.
    Tabulated {
        slices: Vec<Vec<f64>>,
        #[serde(default = "one")]
        period: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandConfig {
    /// Subcommand the file is written for; checked against the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Sweep values of `D` (sweep-d) or `σ` (sweep-sigma), strictly ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// sweep-sigma: refine each grid so that `h <= γσ/4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    /// sweep-sigma: fail unless the spatial-average limit is available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub require_averaging: Option<bool>,
    /// certify: candidate value `λ` of the test pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// certify: test function; defaults to the computed eigenfunction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunctionConfig>,
    /// mp-check: check `test_function` as a strict (`L[φ] < 0`) or plain
    /// (`L[φ] <= 0`) super-solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    /// Time samples per period for certify and mp-check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mt_samples: Option<usize>,
    /// poincare: number of seeded random mean-zero functions to check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_checks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum TestFunctionConfig {
    Eigenfunction,
    /// Time-independent `φ(x)` from an expression in `x` (and `y`).
    Expression {
        expr: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), formats: default_formats() }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn invalid(pointer: &str, message: impl Into<String>) -> CliError {
    CliError::ConfigInvalid { pointer: pointer.to_string(), message: message.into() }
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid("", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut pointer: String = e
            .path()
            .iter()
            .filter_map(|seg| match seg {
                serde_path_to_error::Segment::Seq { index } => Some(format!("/{index}")),
                serde_path_to_error::Segment::Map { key } => Some(format!("/{key}")),
                serde_path_to_error::Segment::Enum { variant } => Some(format!("/{variant}")),
                serde_path_to_error::Segment::Unknown => None,
            })
            .collect();
        let message = e.inner().to_string();
        // a missing field is reported at its parent; point at the field itself
        if let Some(rest) = message.strip_prefix("missing field `") {
            if let Some(field) = rest.split('`').next() {
                pointer.push('/');
                pointer.push_str(field);
            }
        }
        invalid(&pointer, message)
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Check every numeric field before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        let dim = p.domain.bounds.len();
        if dim != 1 && dim != 2 {
            return Err(invalid("/problem/domain/bounds", format!("need 1 or 2 axes, got {dim}")));
        }
        if p.domain.cells.len() != dim {
            return Err(invalid("/problem/domain/cells", format!("need {dim} entries, got {}", p.domain.cells.len())));
        }
        for (i, [lo, hi]) in p.domain.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(&format!("/problem/domain/bounds/{i}"), format!("need lo < hi, got [{lo}, {hi}]")));
            }
        }
        for (i, &c) in p.domain.cells.iter().enumerate() {
            if c < 2 {
                return Err(invalid(&format!("/problem/domain/cells/{i}"), format!("need at least 2 cells, got {c}")));
            }
        }
        if p.kernel.family.dimension() != dim {
            return Err(invalid(
                "/problem/kernel/family",
                format!(
                    "{} is {}-dimensional but the domain has {dim} axes",
                    p.kernel.family.name(),
                    p.kernel.family.dimension()
                ),
            ));
        }
        positive("/problem/kernel/gamma", p.kernel.gamma)?;
        positive("/problem/D", p.dispersal)?;
        positive("/problem/sigma", p.sigma)?;
        if !(p.k >= 0.0 && p.k.is_finite()) {
            return Err(invalid("/problem/k", format!("problem.k must be nonnegative, got {}", p.k)));
        }
        self.coefficient()?;
        self.solver.validate().map_err(|e| {
            let field = match &e {
                nonlocal_spectra::Error::InvalidParameter { name, .. } => format!("/solver/{name}"),
                _ => "/solver".into(),
            };
            invalid(&field, e.to_string())
        })?;
        self.validate_command()?;
        if self.output.formats.is_empty() {
            return Err(invalid("/output/formats", "need at least one format"));
        }
        Ok(())
    }

    fn validate_command(&self) -> Result<(), CliError> {
        let c = &self.command;
        if let Some(values) = &c.values {
            if values.is_empty() {
                return Err(invalid("/command/values", "empty sweep"));
            }
            for (i, v) in values.iter().enumerate() {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(invalid(&format!("/command/values/{i}"), format!("must be positive, got {v}")));
                }
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("/command/values", "must be strictly ascending"));
            }
        }
        if let Some(l) = c.lambda {
            if !l.is_finite() {
                return Err(invalid("/command/lambda", "must be finite"));
            }
        }
        if c.mt_samples == Some(0) {
            return Err(invalid("/command/mt_samples", "must be positive"));
        }
        if let Some(TestFunctionConfig::Expression { expr }) = &c.test_function {
            let e = Expr::parse(expr).map_err(|e| invalid("/command/test_function/expr", e.to_string()))?;
            if e.uses(Var::T) {
                return Err(invalid(
                    "/command/test_function/expr",
                    "test functions from expressions must not depend on t",
                ));
            }
        }
        Ok(())
    }

    /// The coefficient described by the problem block.
    pub fn coefficient(&self) -> Result<Coefficient, CliError> {
        let at = "/problem/coefficient";
        let wrap = |field: &str| {
            let pointer = format!("{at}/{field}");
            move |e: nonlocal_spectra::Error| invalid(&pointer, e.to_string())
        };
        match &self.problem.coefficient {
            CoefficientConfig::Constant { value } => {
                if !value.is_finite() {
                    return Err(invalid(&format!("{at}/value"), "must be finite"));
                }
                Ok(Coefficient::constant(*value))
            }
            CoefficientConfig::TimeOnly { time, period } => {
                positive(&format!("{at}/period"), *period)?;
                Coefficient::time_only(time, *period).map_err(wrap("time"))
            }
            CoefficientConfig::SpaceOnly { space } => Coefficient::space_only(space).map_err(wrap("space")),
            CoefficientConfig::Separable { space, time, period } => {
                positive(&format!("{at}/period"), *period)?;
                let s = Expr::parse(space).map_err(wrap("space"))?;
                let t = Expr::parse(time).map_err(wrap("time"))?;
                Coefficient::new(CoefficientForm::Separable { space: s, time: t }, *period).map_err(wrap(""))
            }
            CoefficientConfig::Product { space, time, period } => {
                positive(&format!("{at}/period"), *period)?;
                let s = Expr::parse(space).map_err(wrap("space"))?;
                let t = Expr::parse(time).map_err(wrap("time"))?;
                Coefficient::new(CoefficientForm::Product { space: s, time: t }, *period).map_err(wrap(""))
            }
            CoefficientConfig::Tabulated { slices, period } => {
                positive(&format!("{at}/period"), *period)?;
                let table = Table::new(slices.clone()).map_err(wrap("slices"))?;
                Coefficient::tabulated(table, *period).map_err(wrap("slices"))
            }
        }
    }

    /// Assemble the operator; precondition failures are configuration errors.
    pub fn operator(&self) -> Result<OperatorSpec, CliError> {
        let p = &self.problem;
        let bounds: Vec<(f64, f64)> = p.domain.bounds.iter().map(|b| (b[0], b[1])).collect();
        let domain = build_domain(bounds.len(), &bounds, &p.domain.cells)
            .map_err(|e| invalid("/problem/domain", e.to_string()))?;
        let kernel =
            Kernel::new(p.kernel.family, p.kernel.gamma).map_err(|e| invalid("/problem/kernel", e.to_string()))?;
        let coeff = self.coefficient()?;
        OperatorSpec::new(domain, kernel, coeff, p.dispersal, p.sigma, p.k, p.boundary).map_err(|e| {
            let pointer = match &e {
                nonlocal_spectra::Error::GridTooCoarse { .. } => "/problem/domain/cells",
                nonlocal_spectra::Error::ShapeMismatch { .. } => "/problem/coefficient/slices",
                _ => "/problem",
            };
            invalid(pointer, e.to_string())
        })
    }
}

fn positive(pointer: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        let dotted = pointer.trim_start_matches('/').replace('/', ".");
        Err(invalid(pointer, format!("{dotted} must be positive and finite, got {v}")))
    }
}
