//! Measurements on trajectories: norm time series, rescaled distances to the
//! candidate asymptotic profiles, a-priori estimate monitors, power-law fits
//! and the regime classifier.

mod errors;
mod monitors;
mod regime;

pub use errors::{
    gradient_z_error, rescale_field, rescaled_heat_error, rescaled_vss_error, tail_mass, z_error,
    ErrorPoint, RescaleMode, Rescaled,
};
pub use monitors::{
    estimate_monitors, MonitorKind, MonitorReport, MonitorResult, UNILATERAL_SLACK,
};
pub use regime::{
    regime_classify, threshold_scan, ClassifyOptions, Functionals, RegimeCheck, RegimeReport,
    ScanSample, ThresholdScan, ValidityWindow, Verdict,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient_field, laplacian_field, lp_norm, max_hessian_eigenvalue, Field};
use crate::solver::Trajectory;

/// Norms and budget terms of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub grad_l1: f64,
    pub grad_linf: f64,
    /// Signed integral.
    pub mass: f64,
    pub sup_lap: f64,
    pub max_hess_eig: f64,
    pub dissipation: f64,
    pub boundary_flux: f64,
}

impl NormRow {
    pub fn of_field(f: &Field, dissipation: f64, boundary_flux: f64) -> Result<Self> {
        let grad = gradient_field(f);
        Ok(Self {
            t: f.time(),
            l1: lp_norm(f, 1.0)?,
            l2: lp_norm(f, 2.0)?,
            linf: f.max_abs(),
            grad_l1: lp_norm(&grad, 1.0)?,
            grad_linf: grad.max_abs(),
            mass: f.integral(),
            sup_lap: laplacian_field(f).max(),
            max_hess_eig: max_hessian_eigenvalue(f).max(),
            dissipation,
            boundary_flux,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub dimension: usize,
    pub rows: Vec<NormRow>,
}

/// Column names of [`NormSeries::write_csv`].
pub const SERIES_COLUMNS: [&str; 11] = [
    "t",
    "l1",
    "l2",
    "linf",
    "grad_l1",
    "grad_linf",
    "mass",
    "sup_lap",
    "max_hess_eig",
    "dissipation",
    "boundary_flux",
];

impl NormSeries {
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let rows = traj
            .snapshots
            .iter()
            .map(|s| NormRow::of_field(&s.field, s.dissipation, s.boundary_flux))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dimension: traj.initial().field.grid().dimension(),
            rows,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&NormRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn first(&self) -> &NormRow {
        &self.rows[0]
    }

    pub fn last(&self) -> &NormRow {
        self.rows.last().expect("series is never empty")
    }

    /// Worst `|I(t) - I(0) + D(t) - flux(t)|` relative to `max(|I(0)|, D)`.
    pub fn mass_identity_defect(&self) -> f64 {
        let i0 = self.first().mass;
        self.rows
            .iter()
            .map(|r| {
                let scale = i0.abs().max(r.dissipation.abs()).max(f64::MIN_POSITIVE);
                (r.mass - i0 + r.dissipation - r.boundary_flux).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Writes one row per snapshot, with `extra` columns appended; `None`
    /// leaves the cell empty.
    pub fn write_csv<W: std::io::Write>(
        &self,
        out: W,
        extra: &[(&str, Vec<Option<f64>>)],
    ) -> Result<()> {
        for (name, col) in extra {
            if col.len() != self.rows.len() {
                return Err(Error::InvalidParameter(format!(
                    "column {name} has {} entries for {} rows",
                    col.len(),
                    self.rows.len()
                )));
            }
        }
        let io = |e: csv::Error| Error::Io(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = SERIES_COLUMNS
            .iter()
            .copied()
            .chain(extra.iter().map(|(n, _)| *n))
            .collect();
        w.write_record(&header).map_err(io)?;
        for (i, r) in self.rows.iter().enumerate() {
            let rec: Vec<f64> = vec![
                r.t,
                r.l1,
                r.l2,
                r.linf,
                r.grad_l1,
                r.grad_linf,
                r.mass,
                r.sup_lap,
                r.max_hess_eig,
                r.dissipation,
                r.boundary_flux,
            ];
            let cells: Vec<Option<f64>> = rec
                .into_iter()
                .map(Some)
                .chain(extra.iter().map(|(_, c)| c[i]))
                .collect();
            if cells.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { time: r.t });
            }
            w.write_record(
                cells
                    .iter()
                    .map(|v| v.map(|v| format!("{v:e}")).unwrap_or_default()),
            )
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Slope of `ln f` against `ln t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    /// Two standard errors of the slope.
    pub halfwidth: f64,
    pub intercept: f64,
    pub window: (f64, f64),
}

/// Least-squares power law over the samples with `t` in `window`, which must
/// span at least one decade.
pub fn decay_rate_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= lo * 10.0 * (1.0 - 1e-9)) {
        return Err(Error::WindowTooShort(format!(
            "fit window [{lo}, {hi}] spans less than a decade"
        )));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo * (1.0 - 1e-12) && **t <= hi * (1.0 + 1e-12))
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 3 {
        return Err(Error::WindowTooShort(format!(
            "only {} samples in [{lo}, {hi}]",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Degenerate(format!(
            "nonpositive value {v} at t = {t}"
        )));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let halfwidth = if pts.len() > 2 {
        2.0 * (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(PowerFit {
        slope,
        halfwidth,
        intercept,
        window,
    })
}

/// Trend of a series over its last time decade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    /// `f(T) / f(T/10)`.
    pub ratio: f64,
    /// No increase between consecutive samples in `[T/10, T]`.
    pub monotone: bool,
    pub threshold: f64,
    pub pass: bool,
}

// Index of the sample closest to `t` in log scale.
fn nearest_index(times: &[f64], t: f64) -> usize {
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (i, s) in times.iter().enumerate() {
        if *s > 0.0 {
            let d = (s.ln() - t.ln()).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
    }
    best
}

/// "Decreasing towards zero" certificate: monotone over the last decade and
/// `f(T)/f(T/10) <= threshold`.
pub fn last_decade_trend(times: &[f64], values: &[f64], threshold: f64) -> Result<Trend> {
    let end = *times
        .last()
        .ok_or_else(|| Error::WindowTooShort("empty series".into()))?;
    if times
        .first()
        .is_some_and(|t0| *t0 > end / 10.0 * (1.0 + 1e-9))
        || end <= 0.0
    {
        return Err(Error::WindowTooShort(format!(
            "series ending at {end} does not cover a decade"
        )));
    }
    let start = nearest_index(times, end / 10.0);
    let last = times.len() - 1;
    let window = &values[start..=last];
    let monotone = window
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(f64::MIN_POSITIVE));
    let ratio = values[last] / values[start];
    Ok(Trend {
        ratio,
        monotone,
        threshold,
        pass: monotone && ratio <= threshold,
    })
}

/// Limit mass estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IInfty {
    /// `I(T)`.
    pub value: f64,
    /// `I(0) - D(T) + flux(T)`.
    pub cross_check: f64,
    /// `|I(0) - D(T) + flux(T) - I(T)|`.
    pub residual: f64,
    /// `|I(T) - I(T/10)| / |I(T)|`.
    pub relative_change: f64,
    pub saturated: bool,
}

/// Default saturation tolerance for [`i_infty_estimate`].
pub const I_INFTY_SATURATION: f64 = 0.25;

/// `I(T)` as the limit mass, flagged as saturated when its relative change
/// over the last decade is at most `tol`.
pub fn i_infty_estimate(series: &NormSeries, tol: f64) -> Result<IInfty> {
    let times = series.times();
    let end = series.last();
    if times[0] > end.t / 10.0 * (1.0 + 1e-9) {
        return Err(Error::WindowTooShort(
            "I_inf needs a decade of history".into(),
        ));
    }
    let prev = &series.rows[nearest_index(&times, end.t / 10.0)];
    let cross = series.first().mass - end.dissipation + end.boundary_flux;
    let relative_change = if end.mass == 0.0 {
        if prev.mass == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((end.mass - prev.mass) / end.mass).abs()
    };
    Ok(IInfty {
        value: end.mass,
        cross_check: cross,
        residual: (cross - end.mass).abs(),
        relative_change,
        saturated: relative_change <= tol && end.mass != 0.0,
    })
}

/// Plateau of `||u(t)||_inf` for nonpositive runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MInfty {
    pub value: f64,
    /// `(||u(T/10)|| - ||u(T)||) / ||u(T/10)||`.
    pub relative_decrease: f64,
    /// `||u(t)||_inf` never increased.
    pub monotone: bool,
    pub converged: bool,
}

/// Default plateau tolerance: 2% per decade.
pub const M_INFTY_PLATEAU: f64 = 0.02;

pub fn m_infty_estimate(series: &NormSeries, tol: f64) -> Result<MInfty> {
    let times = series.times();
    let end = series.last();
    if times[0] > end.t / 10.0 * (1.0 + 1e-9) {
        return Err(Error::WindowTooShort(
            "M_inf needs a decade of history".into(),
        ));
    }
    let prev = series.rows[nearest_index(&times, end.t / 10.0)].linf;
    let monotone = series
        .rows
        .windows(2)
        .all(|w| w[1].linf <= w[0].linf * (1.0 + 1e-12));
    let relative_decrease = if prev == 0.0 {
        0.0
    } else {
        (prev - end.linf) / prev
    };
    Ok(MInfty {
        value: end.linf,
        relative_decrease,
        monotone,
        converged: end.linf > 0.0 && relative_decrease < tol,
    })
}
