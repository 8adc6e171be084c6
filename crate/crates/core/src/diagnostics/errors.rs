use serde::{Deserialize, Serialize};

use crate::closed_forms::{heat_kernel, z_profile, z_profile_gradient};
use crate::error::{Error, Result};
use crate::grid::{gradient_field, lp_norm, Field};
use crate::solver::Trajectory;
use crate::vss::{w_eval, w_gradient, ProfileTable};

/// Weighted distance of one snapshot to a reference profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub t: f64,
    pub value: f64,
    pub gradient: f64,
}

fn check_p(p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    Ok(if p.is_infinite() { 0.0 } else { 1.0 / p })
}

// ||u - ref||_p and ||u_r - ref_r||_p on the snapshot grid.
fn distances(
    f: &Field,
    p: f64,
    reference: impl Fn(f64) -> f64,
    reference_r: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let diff = Field::new(
        *f.grid(),
        f.grid()
            .nodes()
            .zip(f.values())
            .map(|(r, v)| v - reference(r))
            .collect(),
        f.time(),
    )?;
    let grad = gradient_field(f);
    let gdiff = Field::new(
        *f.grid(),
        f.grid()
            .nodes()
            .zip(grad.values())
            .map(|(r, v)| v - reference_r(r))
            .collect(),
        f.time(),
    )?;
    Ok((lp_norm(&diff, p)?, lp_norm(&gdiff, p)?))
}

/// `t^{(N/2)(1-1/p)} ||u(t) - I G(t)||_p` and the gradient version with an
/// extra `t^{1/2}`, for every snapshot with `t > 0`.
pub fn rescaled_heat_error(traj: &Trajectory, p: f64, i_inf: f64) -> Result<Vec<ErrorPoint>> {
    let inv = check_p(p)?;
    traj.snapshots
        .iter()
        .filter(|s| s.time() > 0.0)
        .map(|s| {
            let t = s.time();
            let n = s.field.grid().dimension();
            let (e, g) = distances(
                &s.field,
                p,
                |r| i_inf * heat_kernel(r, t, n).unwrap_or(0.0),
                |r| -i_inf * r / (2.0 * t) * heat_kernel(r, t, n).unwrap_or(0.0),
            )?;
            let w = t.powf(0.5 * n as f64 * (1.0 - inv));
            Ok(ErrorPoint {
                t,
                value: w * e,
                gradient: w * t.sqrt() * g,
            })
        })
        .collect()
}

/// `t^{(N/2)(1-1/p) + (a-N)/2} ||u(t) - W(t)||_p` and its gradient version
/// with an extra `t^{1/2}`.
pub fn rescaled_vss_error(
    traj: &Trajectory,
    p: f64,
    profile: &ProfileTable,
) -> Result<Vec<ErrorPoint>> {
    let inv = check_p(p)?;
    let n = profile.dimension as f64;
    traj.snapshots
        .iter()
        .filter(|s| s.time() > 0.0)
        .map(|s| {
            let t = s.time();
            if s.field.grid().dimension() != profile.dimension {
                return Err(Error::InvalidParameter("profile dimension mismatch".into()));
            }
            let (e, g) = distances(
                &s.field,
                p,
                |r| w_eval(r, t, profile),
                |r| w_gradient(r, t, profile),
            )?;
            let w = t.powf(0.5 * n * (1.0 - inv) + 0.5 * (profile.a - n));
            Ok(ErrorPoint {
                t,
                value: w * e,
                gradient: w * t.sqrt() * g,
            })
        })
        .collect()
}

fn check_mass(m_inf: f64) -> Result<()> {
    if !(m_inf.is_finite() && m_inf > 1e-12) {
        return Err(Error::Degenerate(format!(
            "M_inf = {m_inf}: no plateau to compare against"
        )));
    }
    Ok(())
}

/// `(t, ||u(t) - Z_M(t)||_inf)` for every snapshot with `t > 0`.
pub fn z_error(traj: &Trajectory, m_inf: f64) -> Result<Vec<(f64, f64)>> {
    check_mass(m_inf)?;
    let q = traj.q;
    traj.snapshots
        .iter()
        .filter(|s| s.time() > 0.0)
        .map(|s| {
            let t = s.time();
            let mut worst = 0.0_f64;
            for (r, v) in s.field.grid().nodes().zip(s.field.values()) {
                worst = worst.max((v - z_profile(r, t, m_inf, q)?).abs());
            }
            Ok((t, worst))
        })
        .collect()
}

/// `(t, t^{(1-1/p)/q} ||u_r(t) - Z_{M,r}(t)||_p)`, one-dimensional runs only.
pub fn gradient_z_error(traj: &Trajectory, m_inf: f64, p: f64) -> Result<Vec<(f64, f64)>> {
    check_mass(m_inf)?;
    let inv = check_p(p)?;
    if p.is_infinite() {
        return Err(Error::InvalidParameter(
            "gradient Z error needs finite p".into(),
        ));
    }
    let q = traj.q;
    traj.snapshots
        .iter()
        .filter(|s| s.time() > 0.0)
        .map(|s| {
            if s.field.grid().dimension() != 1 {
                return Err(Error::InvalidParameter(
                    "gradient Z error is one-dimensional".into(),
                ));
            }
            let t = s.time();
            let grad = gradient_field(&s.field);
            let diff = grad
                .grid()
                .nodes()
                .zip(grad.values())
                .map(|(r, v)| Ok(v - z_profile_gradient(r, t, m_inf, q)?))
                .collect::<Result<Vec<_>>>()?;
            let diff = Field::new(*grad.grid(), diff, t)?;
            Ok((t, t.powf((1.0 - inv) / q) * lp_norm(&diff, p)?))
        })
        .collect()
}

/// `omega_N int_R^{R_grid} |f| r^{N-1} dr` by the trapezoid rule, with the
/// first partial cell interpolated linearly.
pub fn tail_mass(f: &Field, radius: f64) -> Result<f64> {
    let grid = f.grid();
    if !(radius >= 0.0 && radius < grid.radius()) {
        return Err(Error::InvalidParameter(format!(
            "tail radius {radius} must lie in [0, {})",
            grid.radius()
        )));
    }
    let k = grid.dimension() as i32 - 1;
    let g = |r: f64, v: f64| v.abs() * r.powi(k);
    let j = grid.index_at_or_above(radius);
    let v = f.values();
    let mut sum = 0.0;
    if grid.node(j) > radius && j > 0 {
        let left = g(radius, f.interpolate(radius));
        sum += 0.5 * (grid.node(j) - radius) * (left + g(grid.node(j), v[j]));
    }
    let h = grid.spacing();
    for i in j..grid.node_count() {
        sum += 0.5 * h * (g(grid.node(i), v[i]) + g(grid.node(i + 1), v[i + 1]));
    }
    Ok(grid.sphere_area() * sum)
}

/// Rescaling of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RescaleMode {
    /// `u_k(x, t) = k^a u(k x, k^2 t)`.
    Parabolic { k: f64, a: f64 },
    /// `u_lambda(x, t) = u(lambda x, lambda^q t)`.
    Hj { lambda: f64, q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub field: Field,
    /// The source time fell between snapshots.
    pub time_interpolated: bool,
    /// Some nodes map beyond the grid and read zero.
    pub truncated: bool,
}

/// The rescaled solution at time `t`, sampled on the grid of the source
/// snapshots.
pub fn rescale_field(traj: &Trajectory, mode: RescaleMode, t: f64) -> Result<Rescaled> {
    let (factor, amp, source_t) = match mode {
        RescaleMode::Parabolic { k, a } => (k, k.powf(a), k * k * t),
        RescaleMode::Hj { lambda, q } => (lambda, 1.0, lambda.powf(q) * t),
    };
    if !(factor >= 1.0 && factor.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rescaling factor must be >= 1, got {factor}"
        )));
    }
    let times = traj.times();
    let last = *times.last().unwrap_or(&0.0);
    if source_t > last * (1.0 + 1e-12) {
        return Err(Error::BeyondHorizon {
            requested: source_t,
            horizon: last,
        });
    }
    if source_t < times[0] * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "source time {source_t} precedes the trajectory start {}",
            times[0]
        )));
    }
    let tol = 1e-9 * source_t.abs().max(1e-300);
    let (values_at, interpolated): (Box<dyn Fn(f64) -> f64>, bool) = if let Some(s) = traj
        .snapshots
        .iter()
        .find(|s| (s.time() - source_t).abs() <= tol)
    {
        (Box::new(move |r| s.field.interpolate(r)), false)
    } else {
        let i = times
            .iter()
            .position(|x| *x > source_t)
            .unwrap_or(times.len() - 1);
        let (a, b) = (&traj.snapshots[i - 1], &traj.snapshots[i]);
        let w = (source_t - a.time()) / (b.time() - a.time());
        (
            Box::new(move |r| (1.0 - w) * a.field.interpolate(r) + w * b.field.interpolate(r)),
            true,
        )
    };
    let grid = *traj.initial().field.grid();
    let values: Vec<f64> = grid.nodes().map(|r| amp * values_at(factor * r)).collect();
    Ok(Rescaled {
        field: Field::new(grid, values, t)?,
        time_interpolated: interpolated,
        truncated: factor * grid.radius() > grid.radius() * (1.0 + 1e-12),
    })
}
