//! Very singular self-similar solution `W(x, t) = t^{-a/2} f(|x| t^{-1/2})`
//! for `1 < q < q_c`, computed by shooting on the profile equation
//!
//! `f'' = -((N-1)/eta + eta/2) f' - (a/2) f + |f'|^q`, `f(0) = alpha`, `f'(0) = 0`.
//!
//! Small and large `alpha` leave the fast-decaying profile on opposite sides:
//! one side crosses zero, the other settles on the slow tail `c eta^{-a}`.
//! Bisection between the two isolates `alpha_star`.

use serde::{Deserialize, Serialize};

use crate::closed_forms::{critical_exponent, decay_exponent_a};
use crate::error::{Error, Result};
use crate::grid::sphere_area;
use crate::ode::{integrate, Control, Tolerance};

/// Default right end of the shooting interval.
pub const DEFAULT_ETA_MAX: f64 = 40.0;
/// Spacing of the recorded profile nodes.
pub const ETA_STEP: f64 = 0.002;
/// Largest tail value `eta^a f` at the end of the table, relative to its peak.
pub const TAIL_GATE: f64 = 1e-3;

const FAST_RATIO: f64 = 0.5;
const SLOW_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    /// `eta^a f -> 0`.
    Fast,
    /// `f ~ c eta^{-a}` with `c > 0`.
    Slow,
    SignChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub q: f64,
    pub dimension: usize,
    pub a: f64,
    /// Uniform nodes `0, d, 2d, ...` up to the end of the trusted range.
    pub eta_nodes: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    pub alpha_star: f64,
    pub decay_class: DecayClass,
    /// `max |g|` over the last dyadic window of `eta` divided by the max over
    /// the window before it, `g = eta^a f`.
    pub window_ratio: f64,
    /// `g(eta_end) / sup g`.
    pub tail_ratio: f64,
}

/// Second derivative of the profile. At `eta = 0` the symmetric limit
/// `(-(a/2) f + |f'|^q) / N` is used.
pub fn vss_ode_rhs(eta: f64, f: f64, fp: f64, q: f64, dimension: usize) -> f64 {
    let a = (2.0 - q) / (q - 1.0);
    let n = dimension as f64;
    let nonlinear = if fp == 0.0 { 0.0 } else { fp.abs().powf(q) };
    if eta == 0.0 {
        return (-0.5 * a * f + nonlinear) / n;
    }
    -((n - 1.0) / eta + 0.5 * eta) * fp - 0.5 * a * f + nonlinear
}

fn check_exponent(q: f64, dimension: usize) -> Result<f64> {
    if !(1..=3).contains(&dimension) {
        return Err(Error::InvalidParameter(format!(
            "N must be 1, 2 or 3, got {dimension}"
        )));
    }
    let qc = critical_exponent(dimension);
    if !(q > 1.0 && q < qc) {
        return Err(Error::InvalidParameter(format!(
            "the very singular solution needs 1 < q < {qc}, got {q}"
        )));
    }
    decay_exponent_a(q)
}

struct Trajectory {
    eta: Vec<f64>,
    f: Vec<f64>,
    fp: Vec<f64>,
    crossed: bool,
}

fn integrate_profile(alpha: f64, q: f64, dimension: usize, eta_max: f64) -> Result<Trajectory> {
    let mut tr = Trajectory {
        eta: Vec::new(),
        f: Vec::new(),
        fp: Vec::new(),
        crossed: false,
    };
    integrate(
        |eta, y: &[f64; 2]| [y[1], vss_ode_rhs(eta, y[0], y[1], q, dimension)],
        0.0,
        [alpha, 0.0],
        eta_max,
        ETA_STEP,
        Tolerance {
            rtol: 1e-12,
            atol: 1e-30 * alpha,
        },
        |eta, y| {
            if y[0] <= 0.0 {
                tr.crossed = true;
                return Control::Stop;
            }
            tr.eta.push(eta);
            tr.f.push(y[0]);
            tr.fp.push(y[1]);
            Control::Continue
        },
    )?;
    Ok(tr)
}

// Ratio of max |eta^a f| over [L/2, L] to the max over [L/4, L/2].
fn window_ratio(eta: &[f64], f: &[f64], a: f64) -> f64 {
    let end = *eta.last().unwrap_or(&0.0);
    let mut last = 0.0_f64;
    let mut prev = 0.0_f64;
    for (e, v) in eta.iter().zip(f) {
        let g = (e.powf(a) * v).abs();
        if *e >= 0.5 * end {
            last = last.max(g);
        } else if *e >= 0.25 * end {
            prev = prev.max(g);
        }
    }
    if prev == 0.0 {
        f64::INFINITY
    } else {
        last / prev
    }
}

fn tail_ratio(eta: &[f64], f: &[f64], a: f64) -> f64 {
    let g: Vec<f64> = eta.iter().zip(f).map(|(e, v)| e.powf(a) * v).collect();
    let peak = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        0.0
    } else {
        g.last().map_or(0.0, |v| v.abs()) / peak
    }
}

fn classify(tr: &Trajectory, a: f64) -> (DecayClass, f64) {
    if tr.crossed {
        return (DecayClass::SignChange, f64::NAN);
    }
    let ratio = window_ratio(&tr.eta, &tr.f, a);
    let class = if ratio < FAST_RATIO {
        DecayClass::Fast
    } else if ratio > SLOW_RATIO {
        DecayClass::Slow
    } else if ratio < 0.5 * (FAST_RATIO + SLOW_RATIO) {
        DecayClass::Fast
    } else {
        DecayClass::Slow
    };
    (class, ratio)
}

/// Integrates one trajectory with `f(0) = alpha` up to `eta_max` (or the first
/// zero of `f`) and classifies its tail. An ambiguous window ratio doubles
/// `eta_max`, at most twice.
pub fn shoot(alpha: f64, q: f64, dimension: usize, eta_max: f64) -> Result<ProfileTable> {
    let a = check_exponent(q, dimension)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(eta_max > 8.0 * ETA_STEP) {
        return Err(Error::InvalidParameter(format!(
            "eta_max too small: {eta_max}"
        )));
    }
    let mut end = eta_max;
    let mut refinements = 0;
    loop {
        let tr = integrate_profile(alpha, q, dimension, end)?;
        let ratio = if tr.crossed {
            f64::NAN
        } else {
            window_ratio(&tr.eta, &tr.f, a)
        };
        let ambiguous = !tr.crossed && ratio >= FAST_RATIO && ratio <= SLOW_RATIO;
        if ambiguous && refinements < 2 {
            refinements += 1;
            end *= 2.0;
            continue;
        }
        if ambiguous {
            log::warn!("tail of alpha = {alpha} still ambiguous at eta = {end} (ratio {ratio:.3})");
        }
        let (decay_class, window) = classify(&tr, a);
        let tail = tail_ratio(&tr.eta, &tr.f, a);
        return Ok(ProfileTable {
            q,
            dimension,
            a,
            eta_nodes: tr.eta,
            f: tr.f,
            f_prime: tr.fp,
            alpha_star: alpha,
            decay_class,
            window_ratio: window,
            tail_ratio: tail,
        });
    }
}

/// Which side of `alpha_star` crosses zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    SignChangeBelow,
    SignChangeAbove,
}

/// Log-spaced probe ladder from `1e-3` to `1e3`.
pub fn probe_ladder() -> Vec<f64> {
    (-12..=12).map(|k| 10f64.powf(k as f64 / 4.0)).collect()
}

/// First adjacent pair on the ladder with one sign-changing and one slowly
/// decaying trajectory.
pub fn bracket_alpha(q: f64, dimension: usize) -> Result<(f64, f64, Orientation)> {
    let ladder = probe_ladder();
    let classes = ladder
        .iter()
        .map(|&al| shoot(al, q, dimension, DEFAULT_ETA_MAX).map(|t| t.decay_class))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..ladder.len() - 1 {
        match (classes[i], classes[i + 1]) {
            (DecayClass::SignChange, DecayClass::Slow) => {
                return Ok((ladder[i], ladder[i + 1], Orientation::SignChangeBelow))
            }
            (DecayClass::Slow, DecayClass::SignChange) => {
                return Ok((ladder[i], ladder[i + 1], Orientation::SignChangeAbove))
            }
            _ => {}
        }
    }
    Err(Error::NoBracket(format!(
        "no sign-change/slow pair for q = {q}, N = {dimension} on alpha in [1e-3, 1e3]: {classes:?}"
    )))
}

/// Locates `alpha_star` to relative width `tol` and returns the fast-decaying
/// profile, truncated where the two bracketing trajectories separate.
pub fn find_vss(q: f64, dimension: usize, tol: f64) -> Result<ProfileTable> {
    let a = check_exponent(q, dimension)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let (mut lo, mut hi, orientation) = bracket_alpha(q, dimension)?;
    let below = match orientation {
        Orientation::SignChangeBelow => DecayClass::SignChange,
        Orientation::SignChangeAbove => DecayClass::Slow,
    };
    while (hi - lo) > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let class =
            integrate_profile(mid, q, dimension, DEFAULT_ETA_MAX).map(|tr| classify(&tr, a).0)?;
        let class = if class == DecayClass::Fast {
            DecayClass::Slow
        } else {
            class
        };
        if class == below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_lo = integrate_profile(lo, q, dimension, DEFAULT_ETA_MAX)?;
    let t_hi = integrate_profile(hi, q, dimension, DEFAULT_ETA_MAX)?;
    let common = t_lo.eta.len().min(t_hi.eta.len());
    let mut cut = common;
    for j in 1..common {
        let (x, y) = (t_lo.f[j], t_hi.f[j]);
        if (x - y).abs() > 1e-3 * x.abs().max(y.abs()) {
            cut = j;
            break;
        }
    }
    let eta_nodes = t_lo.eta[..cut].to_vec();
    let f: Vec<f64> = (0..cut).map(|j| 0.5 * (t_lo.f[j] + t_hi.f[j])).collect();
    let f_prime: Vec<f64> = (0..cut).map(|j| 0.5 * (t_lo.fp[j] + t_hi.fp[j])).collect();
    let window = window_ratio(&eta_nodes, &f, a);
    let tail = tail_ratio(&eta_nodes, &f, a);
    if tail >= TAIL_GATE {
        return Err(Error::Degenerate(format!(
            "profile tail eta^a f is {tail:.3e} of its peak at eta = {:.2}",
            eta_nodes.last().copied().unwrap_or(0.0)
        )));
    }
    log::debug!(
        "q = {q}, N = {dimension}: alpha_star = {}, trusted to eta = {:.3}",
        0.5 * (lo + hi),
        eta_nodes.last().copied().unwrap_or(0.0)
    );
    Ok(ProfileTable {
        q,
        dimension,
        a,
        eta_nodes,
        f,
        f_prime,
        alpha_star: 0.5 * (lo + hi),
        decay_class: DecayClass::Fast,
        window_ratio: window,
        tail_ratio: tail,
    })
}

impl ProfileTable {
    pub fn eta_max(&self) -> f64 {
        self.eta_nodes.last().copied().unwrap_or(0.0)
    }

    fn spacing(&self) -> f64 {
        if self.eta_nodes.len() < 2 {
            ETA_STEP
        } else {
            self.eta_nodes[1] - self.eta_nodes[0]
        }
    }

    // Cubic Hermite value and slope at eta; zero beyond the table.
    fn hermite(&self, eta: f64) -> (f64, f64) {
        let eta = eta.abs();
        let n = self.eta_nodes.len();
        if n < 2 || eta > self.eta_max() {
            return (0.0, 0.0);
        }
        let d = self.spacing();
        let j = ((eta / d).floor() as usize).min(n - 2);
        let s = (eta - self.eta_nodes[j]) / d;
        let (f0, f1) = (self.f[j], self.f[j + 1]);
        let (m0, m1) = (self.f_prime[j] * d, self.f_prime[j + 1] * d);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * m1;
        let slope = ((6.0 * s2 - 6.0 * s) * f0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * f1
            + (3.0 * s2 - 2.0 * s) * m1)
            / d;
        (value, slope)
    }

    /// Profile `f(eta)`.
    pub fn profile(&self, eta: f64) -> f64 {
        self.hermite(eta).0
    }

    /// `omega_N int f^p eta^{N-1}` to the power `1/p`, i.e. `||W(1)||_p`;
    /// `p = inf` gives `alpha_star`.
    pub fn norm_at_one(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        }
        let d = self.spacing();
        let k = self.dimension as i32 - 1;
        let n = self.f.len();
        let sum: f64 = self
            .eta_nodes
            .iter()
            .zip(&self.f)
            .enumerate()
            .map(|(j, (e, v))| {
                let w = if j == 0 || j + 1 == n { 0.5 * d } else { d };
                w * e.powi(k) * v.abs().powf(p)
            })
            .sum();
        (sphere_area(self.dimension) * sum).powf(1.0 / p)
    }
}

/// `W(r, t) = t^{-a/2} f(r t^{-1/2})`, zero beyond the tabulated range.
pub fn w_eval(r: f64, t: f64, profile: &ProfileTable) -> f64 {
    if !(t > 0.0) {
        return f64::NAN;
    }
    t.powf(-0.5 * profile.a) * profile.profile(r / t.sqrt())
}

/// Radial derivative `W_r(r, t) = t^{-(a+1)/2} f'(r t^{-1/2})`.
pub fn w_gradient(r: f64, t: f64, profile: &ProfileTable) -> f64 {
    if !(t > 0.0) {
        return f64::NAN;
    }
    t.powf(-0.5 * (profile.a + 1.0)) * profile.hermite(r / t.sqrt()).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{lp_norm, Field, RadialGrid};
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn profile_13() -> &'static ProfileTable {
        static P: OnceLock<ProfileTable> = OnceLock::new();
        P.get_or_init(|| find_vss(1.3, 1, 1e-13).unwrap())
    }

    #[test]
    fn exponent_balance() {
        for q in [1.05, 1.2, 1.3, 1.45, 1.6, 1.9] {
            let a = decay_exponent_a(q).unwrap();
            assert_relative_eq!(q * (a + 1.0), a + 2.0, max_relative = 1e-14);
        }
        assert_relative_eq!(
            decay_exponent_a(1.3).unwrap(),
            7.0 / 3.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn zero_is_a_solution() {
        for eta in [0.0, 0.5, 3.0] {
            assert_eq!(vss_ode_rhs(eta, 0.0, 0.0, 1.3, 2), 0.0);
        }
    }

    #[test]
    fn origin_regularisation() {
        let a = decay_exponent_a(1.3).unwrap();
        assert_relative_eq!(vss_ode_rhs(0.0, 2.0, 0.0, 1.3, 3), -0.5 * a * 2.0 / 3.0);
    }

    #[test]
    fn rejects_supercritical_exponents() {
        assert!(shoot(1.0, 1.5, 1, 40.0).is_err());
        assert!(find_vss(1.4, 2, 1e-10).is_err());
        assert!(shoot(-1.0, 1.3, 1, 40.0).is_err());
    }

    #[test]
    fn tiny_alpha_stays_small_and_positive() {
        let t = shoot(1e-6, 1.3, 1, 10.0).unwrap();
        for (e, v) in t.eta_nodes.iter().zip(&t.f) {
            if *e > 1.0 {
                break;
            }
            assert!(*v > 0.0 && *v <= 1e-6);
        }
    }

    #[test]
    fn profile_starts_decreasing() {
        for alpha in [0.01, 1.0, 50.0] {
            let t = shoot(alpha, 1.3, 1, 10.0).unwrap();
            assert_eq!(t.f_prime[0], 0.0);
            assert!(t.f_prime[1..20].iter().all(|v| *v < 0.0));
        }
    }

    #[test]
    fn ladder_brackets_alpha_star() {
        for (q, n) in [(1.3, 1), (1.2, 2), (1.2, 3)] {
            let (lo, hi, orientation) = bracket_alpha(q, n).unwrap();
            assert!(lo < hi);
            let below = shoot(lo, q, n, DEFAULT_ETA_MAX).unwrap().decay_class;
            let above = shoot(hi, q, n, DEFAULT_ETA_MAX).unwrap().decay_class;
            assert_ne!(below, above);
            assert_eq!(orientation, Orientation::SignChangeBelow, "q={q} N={n}");
        }
    }

    #[test]
    fn selected_profile_is_fast_positive_decreasing() {
        let p = profile_13();
        assert_eq!(p.decay_class, DecayClass::Fast);
        assert!(p.tail_ratio < TAIL_GATE);
        assert!(p.window_ratio < FAST_RATIO);
        assert!(p.f.iter().all(|v| *v > 0.0));
        assert!(p.f_prime[1..].iter().all(|v| *v < 0.0));
        assert!(p.eta_max() > 6.0);
        assert_relative_eq!(p.f[0], p.alpha_star, max_relative = 1e-12);
    }

    #[test]
    fn w_eval_identities() {
        let p = profile_13();
        for (j, e) in p.eta_nodes.iter().enumerate().step_by(517) {
            assert_relative_eq!(w_eval(*e, 1.0, p), p.f[j], max_relative = 1e-12);
        }
        for t in [0.5, 2.0, 9.0] {
            assert_relative_eq!(
                w_eval(0.0, t, p),
                t.powf(-p.a / 2.0) * p.alpha_star,
                max_relative = 1e-12
            );
        }
        assert_eq!(w_eval(p.eta_max() + 1.0, 1.0, p), 0.0);
    }

    #[test]
    fn self_similar_norms() {
        let p = profile_13();
        let sampled = |t: f64| {
            let g = RadialGrid::with_radius(1, 2.0 * p.eta_max() * t.sqrt() + 1.0, 0.002).unwrap();
            Field::from_fn(g, t, |r| w_eval(r, t, p)).unwrap()
        };
        let (w1, w2, w4) = (sampled(1.0), sampled(2.0), sampled(4.0));
        let n1 = lp_norm(&w1, 1.0).unwrap();
        assert_relative_eq!(n1, p.norm_at_one(1.0), max_relative = 1e-6);
        let a = p.a;
        assert_relative_eq!(
            lp_norm(&w4, 1.0).unwrap(),
            4f64.powf(-(a - 1.0) / 2.0) * n1,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            w4.max_abs() / w1.max_abs(),
            4f64.powf(-a / 2.0),
            max_relative = 1e-12
        );
        for p_exp in [1.0, 2.0, f64::INFINITY] {
            let weight = |t: f64| {
                let inv = if p_exp.is_infinite() {
                    0.0
                } else {
                    1.0 / p_exp
                };
                t.powf(0.5 * (1.0 - inv) + 0.5 * (a - 1.0))
            };
            let c1 = lp_norm(&w1, p_exp).unwrap() * weight(1.0);
            let c2 = lp_norm(&w2, p_exp).unwrap() * weight(2.0);
            let c4 = lp_norm(&w4, p_exp).unwrap() * weight(4.0);
            assert_relative_eq!(c2, c1, max_relative = 1e-5);
            assert_relative_eq!(c4, c1, max_relative = 1e-5);
        }
    }

    // u_t - u_rr + |u_r|^q with central differences of spacing delta.
    fn residual(p: &ProfileTable, delta: f64) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..=6 {
            let r = 0.5 + 0.25 * i as f64;
            for k in 0..=6 {
                let t = 0.5 + 0.25 * k as f64;
                let w = |r: f64, t: f64| w_eval(r, t, p);
                let ut = (w(r, t + delta) - w(r, t - delta)) / (2.0 * delta);
                let ur = (w(r + delta, t) - w(r - delta, t)) / (2.0 * delta);
                let urr = (w(r + delta, t) - 2.0 * w(r, t) + w(r - delta, t)) / (delta * delta);
                worst = worst.max((ut - urr + ur.abs().powf(p.q)).abs());
            }
        }
        worst
    }

    #[test]
    fn profile_solves_the_equation() {
        let p = profile_13();
        let coarse = residual(p, 0.02);
        let fine = residual(p, 0.01);
        let finer = residual(p, 0.005);
        assert!(fine < 0.6 * coarse, "{coarse} -> {fine}");
        assert!(finer < 0.6 * fine, "{fine} -> {finer}");
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let p = profile_13();
        for r in [0.3, 1.0, 2.5] {
            let d = 1e-5;
            let fd = (w_eval(r + d, 1.5, p) - w_eval(r - d, 1.5, p)) / (2.0 * d);
            assert_relative_eq!(w_gradient(r, 1.5, p), fd, max_relative = 1e-6);
        }
    }
}
