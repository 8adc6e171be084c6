use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_forms::{critical_exponent, largeness_lhs, smallness_lhs, Largeness};
use crate::error::{Error, Result};
use crate::grid::{sample_datum, InitialDatum, RadialGrid, SignTag};
use crate::solver::{ProblemSpec, TailViolation, Trajectory};
use crate::vss::{find_vss, ProfileTable};

use super::{
    decay_rate_fit, gradient_z_error, i_infty_estimate, last_decade_trend, m_infty_estimate,
    rescaled_heat_error, rescaled_vss_error, z_error, IInfty, MInfty, NormSeries, PowerFit, Trend,
    I_INFTY_SATURATION, M_INFTY_PLATEAU,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Diffusion,
    VssBalance,
    HjDominated,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Diffusion => "DIFFUSION",
            Verdict::VssBalance => "VSS_BALANCE",
            Verdict::HjDominated => "HJ_DOMINATED",
            Verdict::Undecided => "UNDECIDED",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Largest accepted `f(T)/f(T/10)` for a "tends to zero" trend.
    pub trend_threshold: f64,
    pub saturation: f64,
    pub plateau: f64,
    /// Self-similar profile for the VSS comparison; computed on demand.
    pub profile: Option<Arc<ProfileTable>>,
    pub profile_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            trend_threshold: 0.7,
            saturation: I_INFTY_SATURATION,
            plateau: M_INFTY_PLATEAU,
            profile: None,
            profile_tol: 1e-10,
        }
    }
}

/// Part of the run free of boundary contamination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityWindow {
    pub start: f64,
    pub end: f64,
    pub horizon: f64,
    pub tail_violation: Option<TailViolation>,
}

impl ValidityWindow {
    pub fn contaminated(&self) -> bool {
        self.tail_violation.is_some()
    }
}

/// One candidate regime with the evidence it was judged on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub regime: Verdict,
    pub applicable: bool,
    pub holds: bool,
    pub trend: Option<Trend>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub smallness: Option<f64>,
    pub largeness: Option<Largeness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub verdict: Verdict,
    pub q: f64,
    pub dimension: usize,
    pub sign: SignTag,
    pub checks: Vec<RegimeCheck>,
    pub i_infty: Option<IInfty>,
    pub m_infty: Option<MInfty>,
    /// Log-log slopes of `||u||_inf`, `||u||_1` and `||grad u||_inf` over the last decade.
    pub fits: Vec<(String, PowerFit)>,
    pub heat_gradient_trend: Option<Trend>,
    pub gradient_z_trend: Option<Trend>,
    /// Reported for comparison only; the verdict never uses them.
    pub functionals: Functionals,
    pub validity: ValidityWindow,
}

impl RegimeReport {
    pub fn check(&self, regime: Verdict) -> Option<&RegimeCheck> {
        self.checks.iter().find(|c| c.regime == regime)
    }
}

fn undecided(regime: Verdict, note: impl Into<String>) -> RegimeCheck {
    RegimeCheck {
        regime,
        applicable: false,
        holds: false,
        trend: None,
        note: note.into(),
    }
}

fn values(
    points: &[super::ErrorPoint],
    f: impl Fn(&super::ErrorPoint) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    (
        points.iter().map(|e| e.t).collect(),
        points.iter().map(f).collect(),
    )
}

fn datum_sign(spec: &ProblemSpec, traj: &Trajectory) -> SignTag {
    match spec.datum.sign {
        SignTag::General => {
            let u0 = &traj.initial().field;
            if u0.min() >= 0.0 {
                SignTag::Nonnegative
            } else if u0.max() <= 0.0 {
                SignTag::Nonpositive
            } else {
                SignTag::General
            }
        }
        s => s,
    }
}

/// Decides which asymptotic regime the trajectory shows, from trajectory
/// evidence alone. Exactly one holding regime gives the verdict; anything else
/// is [`Verdict::Undecided`].
pub fn regime_classify(
    spec: &ProblemSpec,
    traj: &Trajectory,
    opts: &ClassifyOptions,
) -> Result<RegimeReport> {
    let q = spec.q;
    let n = spec.grid.dimension();
    let series = NormSeries::from_trajectory(traj)?;
    let times = series.times();
    let end = series.last().t;
    let sign = datum_sign(spec, traj);
    let u0 = &traj.initial().field;
    let threshold = opts.trend_threshold;

    let mut fits = Vec::new();
    for (name, col) in [
        ("linf", series.column(|r| r.linf)),
        ("l1", series.column(|r| r.l1)),
        ("grad_linf", series.column(|r| r.grad_linf)),
    ] {
        if let Ok(fit) = decay_rate_fit(&times, &col, (end / 10.0, end)) {
            fits.push((name.to_string(), fit));
        }
    }

    let mut checks = Vec::new();

    let i_infty = i_infty_estimate(&series, opts.saturation).ok();
    let mut heat_gradient_trend = None;
    let diffusion = match i_infty {
        None => undecided(Verdict::Diffusion, "run spans less than a decade"),
        Some(est) => {
            let sign_ok = match sign {
                SignTag::Nonnegative => est.value > 0.0,
                SignTag::Nonpositive => est.value < 0.0,
                SignTag::General => est.value != 0.0,
            };
            if !(est.saturated && sign_ok) {
                RegimeCheck {
                    regime: Verdict::Diffusion,
                    applicable: true,
                    holds: false,
                    trend: None,
                    note: format!(
                        "I(T) = {:.4e} changed by {:.3} over the last decade",
                        est.value, est.relative_change
                    ),
                }
            } else {
                let pts = rescaled_heat_error(traj, f64::INFINITY, est.value)?;
                let (ts, vs) = values(&pts, |e| e.value);
                let trend = last_decade_trend(&ts, &vs, threshold).ok();
                let (_, gs) = values(&pts, |e| e.gradient);
                heat_gradient_trend = last_decade_trend(&ts, &gs, threshold).ok();
                RegimeCheck {
                    regime: Verdict::Diffusion,
                    applicable: true,
                    holds: trend.is_some_and(|t| t.pass),
                    trend,
                    note: format!("I_inf = {:.6e}", est.value),
                }
            }
        }
    };
    checks.push(diffusion);

    let qc = critical_exponent(n);
    let vss = if !(q < qc && q > 1.0) {
        undecided(
            Verdict::VssBalance,
            format!("q = {q} is not below q_c = {qc}"),
        )
    } else if sign != SignTag::Nonnegative {
        undecided(Verdict::VssBalance, "needs a nonnegative datum")
    } else {
        let profile = match &opts.profile {
            Some(p) if p.dimension == n && (p.q - q).abs() < 1e-12 => Arc::clone(p),
            _ => Arc::new(find_vss(q, n, opts.profile_tol)?),
        };
        let pts = rescaled_vss_error(traj, 1.0, &profile)?;
        let (ts, vs) = values(&pts, |e| e.value);
        let trend = last_decade_trend(&ts, &vs, threshold).ok();
        RegimeCheck {
            regime: Verdict::VssBalance,
            applicable: true,
            holds: trend.is_some_and(|t| t.pass),
            trend,
            note: format!("alpha* = {:.6e}", profile.alpha_star),
        }
    };
    checks.push(vss);

    let mut m_infty = None;
    let mut gradient_z_trend = None;
    let hj = if sign != SignTag::Nonpositive {
        undecided(Verdict::HjDominated, "needs a nonpositive datum")
    } else if q >= 2.0 {
        undecided(Verdict::HjDominated, "the Z profile needs q < 2")
    } else {
        match m_infty_estimate(&series, opts.plateau) {
            Err(e) => undecided(Verdict::HjDominated, e.to_string()),
            Ok(m) => {
                m_infty = Some(m);
                if !m.converged {
                    RegimeCheck {
                        regime: Verdict::HjDominated,
                        applicable: true,
                        holds: false,
                        trend: None,
                        note: format!(
                            "no plateau: ||u||_inf = {:.4e} fell by {:.3} over the last decade",
                            m.value, m.relative_decrease
                        ),
                    }
                } else {
                    let pts = z_error(traj, m.value)?;
                    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
                    let vs: Vec<f64> = pts.iter().map(|p| p.1).collect();
                    let trend = last_decade_trend(&ts, &vs, threshold).ok();
                    if n == 1 {
                        let g = gradient_z_error(traj, m.value, 1.0)?;
                        let gv: Vec<f64> = g.iter().map(|p| p.1).collect();
                        gradient_z_trend = last_decade_trend(&ts, &gv, threshold).ok();
                    }
                    RegimeCheck {
                        regime: Verdict::HjDominated,
                        applicable: true,
                        holds: trend.is_some_and(|t| t.pass),
                        trend,
                        note: format!("M_inf = {:.6e}", m.value),
                    }
                }
            }
        }
    };
    checks.push(hj);

    let holding: Vec<Verdict> = checks
        .iter()
        .filter(|c| c.holds)
        .map(|c| c.regime)
        .collect();
    let verdict = match holding.as_slice() {
        [one] => *one,
        _ => Verdict::Undecided,
    };

    let functionals = Functionals {
        smallness: smallness_lhs(u0, q).ok(),
        largeness: largeness_lhs(u0, q).ok(),
    };

    Ok(RegimeReport {
        verdict,
        q,
        dimension: n,
        sign,
        checks,
        i_infty,
        m_infty,
        fits,
        heat_gradient_trend,
        gradient_z_trend,
        functionals,
        validity: ValidityWindow {
            start: times[0],
            end: traj.validity_end().unwrap_or(end),
            horizon: spec.horizon,
            tail_violation: traj.tail_violation,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub amplitude: f64,
    pub verdict: Verdict,
    pub smallness: Option<f64>,
    pub largeness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    /// All classified amplitudes in increasing order.
    pub samples: Vec<ScanSample>,
    /// Largest DIFFUSION amplitude and smallest HJ_DOMINATED amplitude above it.
    pub bracket: Option<(ScanSample, ScanSample)>,
    /// UNDECIDED amplitudes met inside the bracket.
    pub band: Option<(f64, f64)>,
}

impl ThresholdScan {
    pub fn require_bracket(&self) -> Result<&(ScanSample, ScanSample)> {
        self.bracket.as_ref().ok_or_else(|| {
            let seen: Vec<String> = self
                .samples
                .iter()
                .map(|s| format!("{:.3e}: {}", s.amplitude, s.verdict))
                .collect();
            Error::NoBracket(format!(
                "no DIFFUSION/HJ_DOMINATED crossover in [{}]",
                seen.join(", ")
            ))
        })
    }
}

fn sample(
    family: &InitialDatum,
    amplitude: f64,
    q: f64,
    grid: &RadialGrid,
    classify: &(dyn Fn(&InitialDatum) -> Result<Verdict> + Sync),
) -> Result<ScanSample> {
    let base = family.amplitude().filter(|a| *a != 0.0).ok_or_else(|| {
        Error::InvalidParameter("scan family needs a nonzero amplitude parameter".into())
    })?;
    let datum = family.scaled(amplitude / base.abs());
    let u0 = sample_datum(&datum, grid)?;
    Ok(ScanSample {
        amplitude,
        verdict: classify(&datum)?,
        smallness: smallness_lhs(&u0, q).ok(),
        largeness: largeness_lhs(&u0, q)
            .ok()
            .filter(|l| !l.degenerate)
            .map(|l| l.value),
    })
}

fn find_bracket(samples: &[ScanSample]) -> Option<(usize, usize)> {
    let hi = samples
        .iter()
        .position(|s| s.verdict == Verdict::HjDominated)?;
    let lo = samples[..hi]
        .iter()
        .rposition(|s| s.verdict == Verdict::Diffusion)?;
    Some((lo, hi))
}

/// Classifies `family` rescaled to each amplitude of `ladder` (in parallel;
/// amplitudes are magnitudes, the sign tag of `family` is kept),
/// then bisects geometrically between the DIFFUSION and HJ_DOMINATED
/// neighbours until their ratio is below `1 + rel_tol` or `max_bisections`
/// is reached. When UNDECIDED amplitudes separate them, both edges of that
/// band are bisected instead. `grid` is only used for the size functionals.
pub fn threshold_scan(
    family: &InitialDatum,
    q: f64,
    grid: &RadialGrid,
    ladder: &[f64],
    rel_tol: f64,
    max_bisections: usize,
    classify: &(dyn Fn(&InitialDatum) -> Result<Verdict> + Sync),
) -> Result<ThresholdScan> {
    if ladder.is_empty() || ladder.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(
            "ladder needs positive finite amplitudes".into(),
        ));
    }
    let mut samples = ladder
        .par_iter()
        .map(|a| sample(family, *a, q, grid, classify))
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));

    for _ in 0..max_bisections {
        let Some((lo, hi)) = find_bracket(&samples) else {
            break;
        };
        let gaps = if hi == lo + 1 {
            vec![(lo, hi)]
        } else {
            vec![(lo, lo + 1), (hi - 1, hi)]
        };
        let ratio = |(a, b): &(usize, usize)| samples[*b].amplitude / samples[*a].amplitude;
        let Some((a, b)) = gaps
            .into_iter()
            .filter(|g| ratio(g) > 1.0 + rel_tol)
            .max_by(|x, y| ratio(x).total_cmp(&ratio(y)))
        else {
            break;
        };
        let mid = (samples[a].amplitude * samples[b].amplitude).sqrt();
        let s = sample(family, mid, q, grid, classify)?;
        samples.insert(b, s);
    }

    let bracket = find_bracket(&samples);
    let band = bracket.and_then(|(lo, hi)| {
        let inner: Vec<f64> = samples[lo + 1..hi]
            .iter()
            .filter(|s| s.verdict == Verdict::Undecided)
            .map(|s| s.amplitude)
            .collect();
        Some((*inner.first()?, *inner.last()?))
    });
    Ok(ThresholdScan {
        bracket: bracket.map(|(lo, hi)| (samples[lo].clone(), samples[hi].clone())),
        band,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{default_schedule_ratio, geometric_schedule, solve, SchemeConfig};

    fn classify_run(q: f64, datum: InitialDatum, radius: f64, horizon: f64) -> RegimeReport {
        let grid = RadialGrid::with_radius(1, radius, 0.1).unwrap();
        let spec = ProblemSpec::new(q, grid, datum, horizon);
        let times = geometric_schedule(0.1, default_schedule_ratio(), horizon).unwrap();
        let traj = solve(&spec, &SchemeConfig::imex(0.05), &times).unwrap();
        regime_classify(&spec, &traj, &ClassifyOptions::default()).unwrap()
    }

    #[test]
    fn supercritical_nonnegative_run_diffuses() {
        let rep = classify_run(
            1.8,
            InitialDatum::gaussian(1.0, 1.0, SignTag::Nonnegative),
            60.0,
            100.0,
        );
        assert_eq!(rep.verdict, Verdict::Diffusion, "{rep:#?}");
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"DIFFUSION\""));
        assert!(rep.functionals.smallness.is_some());
    }

    #[test]
    fn zero_datum_is_undecided() {
        let rep = classify_run(
            1.8,
            InitialDatum::gaussian(0.0, 1.0, SignTag::Nonnegative),
            20.0,
            10.0,
        );
        assert_eq!(rep.verdict, Verdict::Undecided);
    }

    #[test]
    fn scan_with_a_synthetic_classifier() {
        let family = InitialDatum::smooth_bump(-1.0, 1.0, SignTag::Nonpositive);
        let grid = RadialGrid::with_radius(1, 4.0, 0.05).unwrap();
        let classify = |d: &InitialDatum| {
            let a = d.amplitude().unwrap().abs();
            Ok(if a < 2.5 {
                Verdict::Diffusion
            } else {
                Verdict::HjDominated
            })
        };
        let ladder = [0.1, 1.0, 10.0];
        let scan = threshold_scan(&family, 1.5, &grid, &ladder, 1e-3, 40, &classify).unwrap();
        let (lo, hi) = scan.require_bracket().unwrap();
        assert!(lo.amplitude < 2.5 && hi.amplitude >= 2.5);
        assert!(hi.amplitude / lo.amplitude <= 1.001);
        assert!(scan.band.is_none());
        assert!(lo.largeness.unwrap() < hi.largeness.unwrap());

        let banded = |d: &InitialDatum| {
            let a = d.amplitude().unwrap().abs();
            Ok(if a < 0.5 {
                Verdict::Diffusion
            } else if a < 5.0 {
                Verdict::Undecided
            } else {
                Verdict::HjDominated
            })
        };
        let scan = threshold_scan(&family, 1.5, &grid, &ladder, 0.01, 60, &banded).unwrap();
        let (lo, hi) = scan.require_bracket().unwrap();
        let band = scan.band.unwrap();
        assert!(lo.amplitude < 0.5 && band.0 >= 0.5 && band.0 / lo.amplitude <= 1.01);
        assert!(hi.amplitude >= 5.0 && band.1 < 5.0 && hi.amplitude / band.1 <= 1.01);

        let all_diffusion = |_: &InitialDatum| Ok(Verdict::Diffusion);
        let none = threshold_scan(&family, 1.5, &grid, &ladder, 1e-3, 40, &all_diffusion).unwrap();
        assert!(none.bracket.is_none() && none.require_bracket().is_err());
        assert_eq!(none.samples.len(), 3);
    }
}
