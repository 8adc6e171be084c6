use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::closed_forms::critical_exponent;
use crate::error::{Error, Result};
use crate::grid::{InitialDatum, RadialGrid, SignTag};
use crate::solver::{default_schedule_ratio, geometric_schedule, ProblemSpec, SchemeConfig};

/// Extra per-snapshot columns and reports a run can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    /// `t^{(N/2)(1-1/p)} ||u - I G||_p` for `p = 1, inf`, with `I` the limit mass estimate.
    HeatError,
    /// Rescaled `L^1` distance to the self-similar profile.
    VssError,
    /// `||u - Z_M||_inf` with `M` the plateau of `||u||_inf`.
    ZError,
    /// Empirical constants of the a-priori bounds.
    Monitors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// First output time.
    pub t0: f64,
    /// Ratio of consecutive output times.
    #[serde(default = "default_schedule_ratio")]
    pub ratio: f64,
}

fn default_dimension() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// One run, as read from a TOML file.
///
/// ```toml
/// q = 1.8
/// dimension = 1
/// horizon = 200.0
/// diagnostics = ["heat_error", "monitors"]
///
/// [datum]
/// family = "gaussian"
/// amplitude = 1.0
/// width = 1.0
/// sign = "nonnegative"
///
/// [grid]
/// spacing = 0.1
/// radius = 80.0
///
/// [schedule]
/// t0 = 0.1
///
/// [scheme]
/// time_integrator = "imex"
/// max_dt = 0.05
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub q: f64,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub horizon: f64,
    pub datum: InitialDatum,
    pub grid: GridConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    /// Set to false to drop the gradient term.
    #[serde(default = "default_true")]
    pub hamiltonian: bool,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
    /// Artifact directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        match (self.grid.radius, self.grid.nodes) {
            (Some(r), None) => RadialGrid::with_radius(self.dimension, r, self.grid.spacing),
            (None, Some(m)) => RadialGrid::new(self.dimension, m, self.grid.spacing),
            _ => Err(Error::Config(
                "grid needs exactly one of `radius` and `nodes`".into(),
            )),
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let mut spec = ProblemSpec::new(self.q, self.grid()?, self.datum.clone(), self.horizon);
        spec.hamiltonian = self.hamiltonian;
        spec.validate()?;
        Ok(spec)
    }

    pub fn output_times(&self) -> Result<Vec<f64>> {
        geometric_schedule(self.schedule.t0, self.schedule.ratio, self.horizon)
    }

    pub fn wants(&self, d: Diagnostic) -> bool {
        self.diagnostics.contains(&d)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::Config(format!(
                "dimension must be 1, 2 or 3, got {}",
                self.dimension
            )));
        }
        let spec = self.problem()?;
        spec.initial_field()?;
        self.scheme.validate()?;
        self.output_times()?;
        let qc = critical_exponent(self.dimension);
        if self.wants(Diagnostic::VssError) {
            if !(self.q > 1.0 && self.q < qc) {
                return Err(Error::Config(format!(
                    "vss_error needs q in (1, {qc}), got {}",
                    self.q
                )));
            }
            if self.datum.sign != SignTag::Nonnegative {
                return Err(Error::Config("vss_error needs a nonnegative datum".into()));
            }
        }
        if self.wants(Diagnostic::ZError) {
            if !(self.q < 2.0) {
                return Err(Error::Config(format!(
                    "z_error needs q < 2, got {}",
                    self.q
                )));
            }
            if self.datum.sign != SignTag::Nonpositive {
                return Err(Error::Config("z_error needs a nonpositive datum".into()));
            }
        }
        if self.wants(Diagnostic::Monitors) && !(self.q <= 2.0) {
            return Err(Error::Config(format!(
                "monitors need q <= 2, got {}",
                self.q
            )));
        }
        Ok(())
    }
}
