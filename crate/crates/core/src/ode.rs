//! Dormand-Prince 5(4) integrator for small first-order systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights are the last row of A (FSAL); these are fifth minus fourth
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-300,
        }
    }
}

/// What the observer wants after an output node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Adaptive integration of `y' = rhs(x, y)` from `x0` to `x_end`. Steps land
/// exactly on the uniform output nodes `x0 + k dx`, where `observe` is called;
/// returning [`Control::Stop`] ends the integration.
pub fn integrate<const D: usize>(
    rhs: impl Fn(f64, &[f64; D]) -> [f64; D],
    x0: f64,
    y0: [f64; D],
    x_end: f64,
    dx: f64,
    tol: Tolerance,
    mut observe: impl FnMut(f64, &[f64; D]) -> Control,
) -> Result<()> {
    if !(dx > 0.0 && x_end > x0) {
        return Err(Error::Integration(format!(
            "bad range [{x0}, {x_end}] with step {dx}"
        )));
    }
    let mut x = x0;
    let mut y = y0;
    if observe(x, &y) == Control::Stop {
        return Ok(());
    }
    let nodes = ((x_end - x0) / dx).round() as usize;
    let mut h = dx;
    let mut k = [[0.0; D]; 7];
    for node in 1..=nodes {
        let target = x0 + node as f64 * dx;
        let mut rejects = 0;
        while x < target {
            let step = h.min(target - x);
            k[0] = rhs(x, &y);
            for s in 1..7 {
                let mut ys = y;
                for (i, v) in ys.iter_mut().enumerate() {
                    for (j, kj) in k.iter().enumerate().take(s) {
                        *v += step * A[s][j] * kj[i];
                    }
                }
                k[s] = rhs(x + C[s] * step, &ys);
            }
            let mut y_new = y;
            for (i, v) in y_new.iter_mut().enumerate() {
                for (j, kj) in k.iter().enumerate().take(6) {
                    *v += step * A[6][j] * kj[i];
                }
            }
            let mut err = 0.0_f64;
            for i in 0..D {
                let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * step;
                let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !y_new.iter().all(|v| v.is_finite()) {
                err = f64::INFINITY;
            }
            if err <= 1.0 {
                x = if step == target - x { target } else { x + step };
                y = y_new;
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = (step * grow).min(dx);
                rejects = 0;
            } else {
                rejects += 1;
                if rejects > 60 || (!err.is_finite() && step < 1e-14 * dx) {
                    return Err(Error::Integration(format!(
                        "step size underflow at x = {x}"
                    )));
                }
                let shrink = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).max(0.1)
                } else {
                    0.1
                };
                h = step * shrink;
            }
        }
        if observe(x, &y) == Control::Stop {
            return Ok(());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_oscillator() {
        let mut last = [0.0; 2];
        integrate(
            |_x, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            10.0,
            0.5,
            Tolerance {
                rtol: 1e-11,
                atol: 1e-14,
            },
            |x, y| {
                assert!((y[0] - x.sin()).abs() < 1e-9, "{x}");
                last = *y;
                Control::Continue
            },
        )
        .unwrap();
        assert!((last[0] - 10f64.sin()).abs() < 1e-9);

        let mut count = 0;
        integrate(
            |_x, y: &[f64; 1]| [-2.0 * y[0]],
            0.0,
            [1.0],
            3.0,
            0.01,
            Tolerance::default(),
            |x, y| {
                count += 1;
                assert!((y[0] - (-2.0 * x).exp()).abs() < 1e-11 * (-2.0 * x).exp() + 1e-300);
                Control::Continue
            },
        )
        .unwrap();
        assert_eq!(count, 301);
    }

    #[test]
    fn observer_can_stop() {
        let mut seen = 0.0;
        integrate(
            |_x, _y: &[f64; 1]| [1.0],
            0.0,
            [0.0],
            5.0,
            0.1,
            Tolerance::default(),
            |x, y| {
                seen = x;
                if y[0] > 1.05 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )
        .unwrap();
        assert!((seen - 1.1).abs() < 1e-12);
    }
}
