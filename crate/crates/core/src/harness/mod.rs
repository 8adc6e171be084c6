//! Config-driven runs, artifact writing and the named verification suites.

mod config;
pub mod suites;

pub use config::{Diagnostic, GridConfig, ScenarioConfig, ScheduleConfig};

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::closed_forms::critical_exponent;
use crate::diagnostics::{
    estimate_monitors, gradient_z_error, regime_classify, rescaled_heat_error, rescaled_vss_error,
    z_error, ClassifyOptions, ErrorPoint, MonitorReport, NormSeries, RegimeReport, Verdict,
};
use crate::error::{Error, Result};
use crate::grid::{sample_datum, Field, InitialDatum, RadialGrid, SignTag};
use crate::solver::{
    geometric_schedule, hopf_cole_at, solve, ProblemSpec, SchemeConfig, Snapshot, Trajectory,
};
use crate::vss::{find_vss, ProfileTable};

/// A finished run with everything derived from it.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub spec: ProblemSpec,
    pub trajectory: Trajectory,
    pub series: NormSeries,
    pub report: RegimeReport,
    pub monitors: Option<MonitorReport>,
    /// Extra CSV columns, `None` where undefined (`t = 0`).
    pub columns: Vec<(String, Vec<Option<f64>>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub series: PathBuf,
    pub report: PathBuf,
}

#[derive(Serialize)]
struct Summary<'a> {
    verdict: Verdict,
    contaminated: bool,
    report: &'a RegimeReport,
    monitors: &'a Option<MonitorReport>,
}

impl RunOutput {
    pub fn verdict(&self) -> Verdict {
        self.report.verdict
    }

    /// True when the far field was contaminated before the horizon.
    pub fn contaminated(&self) -> bool {
        self.report.validity.contaminated()
    }

    pub fn report_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&Summary {
            verdict: self.report.verdict,
            contaminated: self.contaminated(),
            report: &self.report,
            monitors: &self.monitors,
        })
        .map_err(|e| Error::Io(format!("json: {e}")))
    }

    /// Writes `series.csv` and `report.json` into `dir`, creating it.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Artifacts> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let series = dir.join("series.csv");
        let file = std::fs::File::create(&series)
            .map_err(|e| Error::Io(format!("{}: {e}", series.display())))?;
        let extra: Vec<(&str, Vec<Option<f64>>)> = self
            .columns
            .iter()
            .map(|(n, c)| (n.as_str(), c.clone()))
            .collect();
        self.series
            .write_csv(std::io::BufWriter::new(file), &extra)?;
        let report = dir.join("report.json");
        std::fs::write(&report, self.report_json()?)
            .map_err(|e| Error::Io(format!("{}: {e}", report.display())))?;
        Ok(Artifacts { series, report })
    }
}

// Spreads values known at `t > 0` over the snapshot rows.
fn column(series: &NormSeries, points: &[(f64, f64)]) -> Vec<Option<f64>> {
    let mut it = points.iter();
    series
        .rows
        .iter()
        .map(|r| {
            if r.t > 0.0 {
                it.next().map(|p| p.1)
            } else {
                None
            }
        })
        .collect()
}

fn pairs(points: &[ErrorPoint], f: impl Fn(&ErrorPoint) -> f64) -> Vec<(f64, f64)> {
    points.iter().map(|e| (e.t, f(e))).collect()
}

fn profile_for(
    q: f64,
    dimension: usize,
    opts: &ClassifyOptions,
) -> Result<Option<Arc<ProfileTable>>> {
    if !(q > 1.0 && q < critical_exponent(dimension)) {
        return Ok(None);
    }
    Ok(Some(match &opts.profile {
        Some(p) if p.dimension == dimension && (p.q - q).abs() < 1e-12 => Arc::clone(p),
        _ => Arc::new(find_vss(q, dimension, opts.profile_tol)?),
    }))
}

/// Classifies an existing trajectory and computes the requested diagnostics.
pub fn analyse(
    spec: &ProblemSpec,
    trajectory: Trajectory,
    diagnostics: &[Diagnostic],
    opts: &ClassifyOptions,
) -> Result<RunOutput> {
    let n = spec.grid.dimension();
    let mut opts = opts.clone();
    if spec.datum.sign == SignTag::Nonnegative {
        opts.profile = profile_for(spec.q, n, &opts)?;
    }
    let report = regime_classify(spec, &trajectory, &opts)?;
    let series = NormSeries::from_trajectory(&trajectory)?;
    let mut columns = Vec::new();

    if diagnostics.contains(&Diagnostic::HeatError) {
        let mass = series.last().mass;
        for (p, label) in [(1.0, "heat_err_1"), (f64::INFINITY, "heat_err_inf")] {
            let pts = rescaled_heat_error(&trajectory, p, mass)?;
            columns.push((
                label.to_string(),
                column(&series, &pairs(&pts, |e| e.value)),
            ));
            if p.is_infinite() {
                columns.push((
                    "heat_grad_err_inf".to_string(),
                    column(&series, &pairs(&pts, |e| e.gradient)),
                ));
            }
        }
    }
    if diagnostics.contains(&Diagnostic::VssError) {
        let profile = opts
            .profile
            .as_ref()
            .ok_or_else(|| Error::Config("vss_error needs q below q_c".into()))?;
        for (p, label) in [(1.0, "vss_err_1"), (f64::INFINITY, "vss_err_inf")] {
            let pts = rescaled_vss_error(&trajectory, p, profile)?;
            columns.push((
                label.to_string(),
                column(&series, &pairs(&pts, |e| e.value)),
            ));
        }
    }
    if diagnostics.contains(&Diagnostic::ZError) {
        let m = series.last().linf;
        match z_error(&trajectory, m) {
            Ok(pts) => {
                columns.push(("z_err".to_string(), column(&series, &pts)));
                if n == 1 {
                    let g = gradient_z_error(&trajectory, m, 1.0)?;
                    columns.push(("grad_z_err_1".to_string(), column(&series, &g)));
                }
            }
            Err(Error::Degenerate(why)) => log::warn!("z_error skipped: {why}"),
            Err(e) => return Err(e),
        }
    }
    let monitors = if diagnostics.contains(&Diagnostic::Monitors) {
        Some(estimate_monitors(&trajectory)?)
    } else {
        None
    };
    Ok(RunOutput {
        spec: spec.clone(),
        trajectory,
        series,
        report,
        monitors,
        columns,
    })
}

/// Runs the solver on `spec` and analyses the result.
pub fn run_spec(
    spec: &ProblemSpec,
    scheme: &SchemeConfig,
    times: &[f64],
    diagnostics: &[Diagnostic],
    opts: &ClassifyOptions,
) -> Result<RunOutput> {
    let trajectory = solve(spec, scheme, times)?;
    analyse(spec, trajectory, diagnostics, opts)
}

/// Runs one configured scenario.
pub fn simulate(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    run_spec(
        &cfg.problem()?,
        &cfg.scheme,
        &cfg.output_times()?,
        &cfg.diagnostics,
        &ClassifyOptions::default(),
    )
}

/// Trajectory of the exact `q = 2`, `N = 1` solution from a nonpositive `u0`.
/// Each snapshot lives on its own grid of `nodes` cells covering
/// `max(R_0, 12 sqrt(t))`, so arbitrarily late times stay resolved.
/// Dissipation is the mass lost so far; the whole line has no boundary.
pub fn hopf_cole_trajectory(u0: &Field, times: &[f64], nodes: usize) -> Result<Trajectory> {
    let r0 = u0.grid().radius();
    let i0 = u0.integral();
    let mut snapshots = vec![Snapshot {
        field: u0.clone(),
        dissipation: 0.0,
        boundary_flux: 0.0,
        steps: 0,
    }];
    for &t in times {
        let elapsed = t - u0.time();
        if !(elapsed > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "output time {t} does not follow the datum time {}",
                u0.time()
            )));
        }
        let radius = r0.max(12.0 * elapsed.sqrt());
        let grid = RadialGrid::new(1, nodes, radius / nodes as f64)?;
        let radii: Vec<f64> = grid.nodes().collect();
        let field = Field::new(grid, hopf_cole_at(u0, 2.0, elapsed, &radii)?, t)?;
        let dissipation = i0 - field.integral();
        snapshots.push(Snapshot {
            field,
            dissipation,
            boundary_flux: 0.0,
            steps: 0,
        });
    }
    Ok(Trajectory {
        q: 2.0,
        hamiltonian: true,
        snapshots,
        tail_violation: None,
    })
}

/// Horizon at which `|u(0, T)|` of the `q = 2` solution has dropped to about
/// `level`, estimated from the conserved mass of `exp(-u) - 1`.
pub fn hopf_cole_horizon(u0: &Field, level: f64) -> f64 {
    let phi = u0.map(|v| (-v).exp_m1());
    let s = phi.integral().abs();
    (s / level).powi(2) / (4.0 * std::f64::consts::PI)
}

/// Classifies `datum` at `q = 2`, `N = 1` from the exact solution, over the
/// three decades ending when the solution has decayed to `1e-2`.
pub fn classify_hopf_cole(datum: &InitialDatum, opts: &ClassifyOptions) -> Result<RegimeReport> {
    if datum.sign != SignTag::Nonpositive {
        return Err(Error::InvalidParameter(
            "the exact q = 2 route needs a nonpositive datum".into(),
        ));
    }
    let reach = datum.support_radius().unwrap_or(match datum.family {
        crate::grid::DatumFamily::Gaussian { width, .. } => 8.0 * width,
        _ => 10.0,
    });
    let grid = RadialGrid::with_radius(1, (reach + 2.0).ceil(), 1.0 / 64.0)?;
    let u0 = sample_datum(datum, &grid)?;
    let horizon = hopf_cole_horizon(&u0, 1e-2).max(100.0);
    let times = geometric_schedule(
        horizon * 1e-3,
        crate::solver::default_schedule_ratio(),
        horizon,
    )?;
    let traj = hopf_cole_trajectory(&u0, &times, 4096)?;
    let spec = ProblemSpec::new(2.0, grid, datum.clone(), horizon);
    regime_classify(&spec, &traj, opts)
}
