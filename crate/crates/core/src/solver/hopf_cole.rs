//! Exact solution at `q = 2`, `N = 1`: with `w = exp(-u)` the equation
//! becomes the heat equation, so `u(t) = -ln(1 + G(t) * (exp(-u0) - 1))`.

use crate::error::{Error, Result};
use crate::grid::Field;

fn check(u0: &Field, q: f64, t: f64) -> Result<()> {
    if u0.grid().dimension() != 1 {
        return Err(Error::InvalidParameter(format!(
            "the Hopf-Cole oracle is one-dimensional, got N = {}",
            u0.grid().dimension()
        )));
    }
    if q != 2.0 {
        return Err(Error::InvalidParameter(format!(
            "the Hopf-Cole oracle needs q = 2, got {q}"
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    if let Some(v) = u0.values().iter().find(|v| **v > 0.0) {
        return Err(Error::SignMismatch(format!(
            "Hopf-Cole datum must be nonpositive, found {v}"
        )));
    }
    Ok(())
}

/// Oracle values at arbitrary radii. The convolution is a trapezoid sum over
/// the nodes of `u0` on its even extension, so a finely sampled `u0` gives an
/// accurate reference at coarse radii.
pub fn hopf_cole_at(u0: &Field, q: f64, t: f64, radii: &[f64]) -> Result<Vec<f64>> {
    check(u0, q, t)?;
    if t == 0.0 {
        return Ok(radii.iter().map(|&r| u0.interpolate(r)).collect());
    }
    let h = u0.grid().spacing();
    let m = u0.grid().node_count();
    // e^{-u0} - 1 >= 0, with trapezoid weights; the node at R is 0 or
    // excluded by the far-field condition.
    let terms: Vec<(f64, f64)> = u0
        .grid()
        .nodes()
        .zip(u0.values())
        .enumerate()
        .filter_map(|(j, (y, &v))| {
            let phi = (-v).exp_m1();
            if phi == 0.0 {
                return None;
            }
            let w = if j == 0 || j == m { 0.5 * h } else { h };
            Some((y, w * phi))
        })
        .collect();
    let norm = (4.0 * std::f64::consts::PI * t).sqrt().recip();
    let inv4t = 0.25 / t;
    Ok(radii
        .iter()
        .map(|&x| {
            let conv: f64 = terms
                .iter()
                .map(|&(y, wphi)| {
                    let k = (-(x - y) * (x - y) * inv4t).exp() + (-(x + y) * (x + y) * inv4t).exp();
                    k * wphi
                })
                .sum();
            -(norm * conv).ln_1p()
        })
        .collect())
}

/// Oracle on the grid of `u0`, at time `u0.time() + t`.
pub fn hopf_cole_exact(u0: &Field, q: f64, t: f64) -> Result<Field> {
    let radii: Vec<f64> = u0.grid().nodes().collect();
    let values = hopf_cole_at(u0, q, t, &radii)?;
    Field::new(*u0.grid(), values, u0.time() + t)
}
