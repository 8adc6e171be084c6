use serde::{Deserialize, Serialize};

use crate::closed_forms::{
    critical_exponent, decay_exponent_a, gamma_barrier, r_of_u0, tau_from_radius,
};
use crate::error::{Error, Result};
use crate::grid::{gradient_field, hessian_norm, lp_norm, SignTag};
use crate::solver::Trajectory;

use super::{m_infty_estimate, nearest_index, NormSeries, M_INFTY_PLATEAU};

/// Slack of the one-sided bounds, in units of `h` times the natural scale of
/// the bound.
pub const UNILATERAL_SLACK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    /// `f(t) <= C t^{-beta}`: `constant` is the running sup of `f t^beta`.
    Decay,
    /// `f(t) <= bound` at every snapshot: `constant` is the worst excess.
    Unilateral,
    /// `f(t) >= C t^beta` over the last decade: `constant` is the inf.
    Growth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub name: String,
    pub kind: MonitorKind,
    /// Empirical constant at the final time.
    pub constant: f64,
    /// Decay: the constant at `T/10`. Unilateral: the allowed slack.
    /// Growth: the sup over the last decade.
    pub previous: f64,
    pub ratio: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub results: Vec<MonitorResult>,
    /// Monitors that do not apply to this run, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl MonitorReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn get(&self, name: &str) -> Option<&MonitorResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> Vec<&MonitorResult> {
        self.results.iter().filter(|r| !r.pass).collect()
    }
}

// Running sup of `values` over samples with `t >= from`, compared with the
// same sup restricted to `t <= T/10`.
fn decay_monitor(name: &str, times: &[f64], values: &[f64], from: f64) -> Result<MonitorResult> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t > 0.0 && **t >= from)
        .map(|(t, v)| (*t, *v))
        .collect();
    let (first, end) = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => {
            return Err(Error::WindowTooShort(format!(
                "{name}: no samples after t = {from}"
            )))
        }
    };
    if first > end / 10.0 * (1.0 + 1e-9) {
        return Err(Error::WindowTooShort(format!(
            "{name}: window [{first}, {end}] spans less than a decade"
        )));
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let cut = nearest_index(&ts, end / 10.0);
    let sup = |k: usize| {
        pts[..=k]
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let constant = sup(pts.len() - 1);
    let previous = sup(cut);
    let finite = constant.is_finite() && previous.is_finite();
    let ratio = if constant == 0.0 && previous == 0.0 {
        1.0
    } else {
        constant / previous
    };
    let pass = finite && (constant == 0.0 || (0.5..=2.0).contains(&ratio));
    Ok(MonitorResult {
        name: name.to_string(),
        kind: MonitorKind::Decay,
        constant,
        previous,
        ratio,
        pass,
        detail: format!(
            "sup over [{first:.3e}, {end:.3e}] vs sup up to {:.3e}",
            ts[cut]
        ),
    })
}

fn unilateral_monitor(name: &str, excess: f64, slack: f64, detail: String) -> MonitorResult {
    MonitorResult {
        name: name.to_string(),
        kind: MonitorKind::Unilateral,
        constant: excess,
        previous: slack,
        ratio: if slack > 0.0 {
            excess / slack
        } else {
            f64::INFINITY
        },
        pass: excess.is_finite() && excess <= slack,
        detail,
    }
}

/// Empirical constants of the a-priori bounds along `traj`.
///
/// Decay bounds pass when the running sup is finite and changes by at most a
/// factor two over the last decade; one-sided bounds pass when every snapshot
/// respects them up to `UNILATERAL_SLACK * h` times the scale of the bound.
pub fn estimate_monitors(traj: &Trajectory) -> Result<MonitorReport> {
    let q = traj.q;
    if !(q > 1.0 && q <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "monitors need q in (1, 2], got {q}"
        )));
    }
    let series = NormSeries::from_trajectory(traj)?;
    let times = series.times();
    let u0 = &traj.initial().field;
    let grid = *u0.grid();
    let n = grid.dimension();
    let h = grid.spacing();
    let first = series.first();
    let sup0 = first.linf;
    let grad0 = first.grad_linf;
    let d2u0 = hessian_norm(u0).max_abs();
    let pos = |v: f64| v.max(0.0);

    let mut results = Vec::new();
    let mut skipped = Vec::new();

    if sup0 == 0.0 {
        skipped.push(("all".to_string(), "zero datum".to_string()));
        return Ok(MonitorReport { results, skipped });
    }

    let col = |f: &dyn Fn(&super::NormRow) -> f64| series.column(f);
    let grad = col(&|r| r.grad_linf * r.t.powf(1.0 / q) / sup0.powf(1.0 / q));
    results.push(decay_monitor("grad", &times, &grad, 0.0)?);
    if grad0 > 0.0 {
        let lap1 = col(&|r| pos(r.sup_lap) * r.t / grad0.powf(2.0 - q));
        results.push(decay_monitor("lap1", &times, &lap1, 0.0)?);
    }
    let lap2 = col(&|r| pos(r.sup_lap) * r.t.powf(2.0 / q) / sup0.powf((2.0 - q) / q));
    results.push(decay_monitor("lap2", &times, &lap2, 0.0)?);
    let hess2 = col(&|r| pos(r.max_hess_eig) * r.t.powf(2.0 / q) / sup0.powf((2.0 - q) / q));
    results.push(decay_monitor("hess2", &times, &hess2, 0.0)?);

    if grad0 > 0.0 {
        let explicit = 1.0 / (q * (q - 1.0));
        let hess1 = col(&|r| pos(r.max_hess_eig) * r.t / grad0.powf(2.0 - q));
        let mut m = decay_monitor("hess1", &times, &hess1, 0.0)?;
        m.detail = format!("{}; explicit constant {explicit:.4}", m.detail);
        results.push(m);
    }

    let lap0 = first.sup_lap;
    let lap_excess = series
        .rows
        .iter()
        .map(|r| r.sup_lap - lap0)
        .fold(f64::NEG_INFINITY, f64::max);
    results.push(unilateral_monitor(
        "lap3",
        lap_excess,
        UNILATERAL_SLACK * h * d2u0.max(f64::MIN_POSITIVE),
        format!("sup Lap u(0) = {lap0:.4e}"),
    ));
    let hess_excess = series
        .rows
        .iter()
        .map(|r| r.max_hess_eig - d2u0)
        .fold(f64::NEG_INFINITY, f64::max);
    results.push(unilateral_monitor(
        "hess3",
        hess_excess,
        UNILATERAL_SLACK * h * d2u0.max(f64::MIN_POSITIVE),
        format!("||D2 u0||_inf = {d2u0:.4e}"),
    ));

    let sign = if u0.min() >= 0.0 {
        Some(SignTag::Nonnegative)
    } else if u0.max() <= 0.0 {
        Some(SignTag::Nonpositive)
    } else {
        None
    };

    if sign == Some(SignTag::Nonnegative) && q < critical_exponent(n) {
        let a = decay_exponent_a(q)?;
        let tail = r_of_u0(u0, q)?;
        if !tail.bounded {
            skipped.push(("bsup".into(), "R(u0) unbounded on this grid".into()));
        } else {
            let radius = tail.radius;
            let tau = tau_from_radius(radius, q, n);
            let mut excess = f64::NEG_INFINITY;
            let mut scale = 0.0_f64;
            for s in &traj.snapshots {
                for (r, v) in grid.nodes().zip(s.field.values()) {
                    if r > radius {
                        let g = gamma_barrier(r - radius, q)?;
                        excess = excess.max(v - g);
                        scale = scale.max(g.min(sup0));
                    }
                }
            }
            let slope = crate::closed_forms::gamma_q(q)?
                * a
                * (grid.radius() - radius).max(h).powf(-a - 1.0);
            results.push(unilateral_monitor(
                "bsup",
                excess,
                UNILATERAL_SLACK * h * grad0.max(slope),
                format!("R(u0) = {radius:.4e}, barrier scale {scale:.3e}"),
            ));

            let grads: Vec<_> = traj
                .snapshots
                .iter()
                .map(|s| gradient_field(&s.field))
                .collect();
            for (label, p) in [
                ("estgup_1", 1.0),
                ("estgup_2", 2.0),
                ("estgup_inf", f64::INFINITY),
            ] {
                let w = if p.is_infinite() {
                    0.5 * (a + 1.0)
                } else {
                    ((a + 1.0) * p - n as f64) / (2.0 * p)
                };
                let vals = grads
                    .iter()
                    .zip(&times)
                    .map(|(g, t)| Ok(t.powf(w) * lp_norm(g, p)?))
                    .collect::<Result<Vec<_>>>()?;
                match decay_monitor(label, &times, &vals, tau) {
                    Ok(m) => results.push(m),
                    Err(Error::WindowTooShort(why)) => skipped.push((label.into(), why)),
                    Err(e) => return Err(e),
                }
            }
            let bdu = col(&|r| {
                r.t.powf(0.5 * (a - n as f64)) * r.l1
                    + r.t.powf(0.5 * a) * r.linf
                    + r.t.powf(0.5 * (a + 1.0)) * r.grad_linf
            });
            match decay_monitor("bdu", &times, &bdu, tau) {
                Ok(m) => results.push(m),
                Err(Error::WindowTooShort(why)) => skipped.push(("bdu".into(), why)),
                Err(e) => return Err(e),
            }
        }
    } else {
        skipped.push((
            "bsup/estgup/bdu".into(),
            "need a nonnegative datum and q below the critical exponent".into(),
        ));
    }

    if sign == Some(SignTag::Nonpositive) {
        let end = series.last().t;
        let vals: Vec<f64> = series
            .rows
            .iter()
            .filter(|r| r.t >= end / 10.0 * (1.0 - 1e-9) && r.t > 0.0)
            .map(|r| r.l1 * r.t.powf(-(n as f64) / q))
            .collect();
        let plateau = m_infty_estimate(&series, M_INFTY_PLATEAU).map(|m| m.converged);
        if times[0] > end / 10.0 * (1.0 + 1e-9) || vals.len() < 2 {
            skipped.push(("volvic".into(), "run spans less than a decade".into()));
        } else if plateau.ok() != Some(true) {
            skipped.push(("volvic".into(), "no positive M_inf plateau".into()));
        } else {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(0.0, f64::max);
            results.push(MonitorResult {
                name: "volvic".into(),
                kind: MonitorKind::Growth,
                constant: lo,
                previous: hi,
                ratio: hi / lo,
                pass: lo > 0.0 && lo.is_finite() && hi / lo <= 2.0,
                detail: format!(
                    "inf/sup of ||u||_1 t^(-N/q) over [{:.3e}, {end:.3e}]",
                    end / 10.0
                ),
            });
        }
    } else {
        skipped.push(("volvic".into(), "needs a nonpositive datum".into()));
    }

    Ok(MonitorReport { results, skipped })
}
