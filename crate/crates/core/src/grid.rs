//! Radial meshes, sampled fields and the discrete calculus shared by every
//! other module.
//!
//! All data are radially symmetric: a function on `R^N` is stored through its
//! profile `u(r)` at the nodes `r_j = j h`, `j = 0..=M`. Integrals carry the
//! radial measure `omega_N r^{N-1} dr`, derivatives are the radial ones and the
//! Laplacian is `u_rr + (N-1)/r u_r` with the symmetric limit `N u_rr(0)` at
//! the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of intervals on a radial grid.
pub const MIN_NODE_COUNT: usize = 16;

/// Uniform radial mesh `r_j = j h`, `j = 0..=M`, for a space dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    dimension: usize,
    node_count: usize,
    spacing: f64,
}

impl RadialGrid {
    pub fn new(dimension: usize, node_count: usize, spacing: f64) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dimension}"
            )));
        }
        if node_count < MIN_NODE_COUNT {
            return Err(Error::InvalidGrid(format!(
                "node count must be at least {MIN_NODE_COUNT}, got {node_count}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        Ok(Self {
            dimension,
            node_count,
            spacing,
        })
    }

    /// Grid of radius `radius` with spacing as close to `spacing` as the
    /// integer node count allows (the radius is kept exact).
    pub fn with_radius(dimension: usize, radius: f64, spacing: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        let m = (radius / spacing).round().max(1.0) as usize;
        Self::new(dimension, m, radius / m as f64)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of intervals `M`; the grid has `M + 1` nodes.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.node_count + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn radius(&self) -> f64 {
        self.node_count as f64 * self.spacing
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.node_count).map(move |j| self.node(j))
    }

    /// Surface area of the unit sphere, `omega_N = 2 pi^{N/2} / Gamma(N/2)`.
    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.dimension)
    }

    /// Composite trapezoid weights for `omega_N int_0^R f(r) r^{N-1} dr`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let omega = self.sphere_area();
        let h = self.spacing;
        let n = self.dimension as i32;
        (0..=self.node_count)
            .map(|j| {
                let end = j == 0 || j == self.node_count;
                let w = if end { 0.5 * h } else { h };
                omega * w * self.node(j).powi(n - 1)
            })
            .collect()
    }

    /// Index of the first node with `r_j >= r`, clamped to the grid.
    pub fn index_at_or_above(&self, r: f64) -> usize {
        if r <= 0.0 {
            return 0;
        }
        ((r / self.spacing - 1e-12).ceil() as usize).min(self.node_count)
    }
}

/// `omega_N` for `N` in `{1, 2, 3}`: `2`, `2 pi`, `4 pi`.
pub fn sphere_area(dimension: usize) -> f64 {
    use std::f64::consts::PI;
    match dimension {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        n => 2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n),
    }
}

// Gamma(n/2) for positive integers n.
fn gamma_half_integer(n: usize) -> f64 {
    let mut g = if n % 2 == 0 {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut k = if n % 2 == 0 { 2 } else { 1 };
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

/// A grid-sampled radial profile at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: RadialGrid,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: RadialGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at node {bad}"
            )));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid field time {time}"
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: RadialGrid, time: f64) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time,
        }
    }

    /// Samples `profile(r)` at every node.
    pub fn from_fn(grid: RadialGrid, time: f64, profile: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(profile).collect();
        Self::new(grid, values, time)
    }

    // Used by operators whose outputs are finite whenever their inputs are.
    pub(crate) fn from_parts(grid: RadialGrid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, time }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(
            self.grid,
            self.values.iter().map(|&v| f(v)).collect(),
            self.time,
        )
    }

    /// Nodewise `self - other`; both fields must live on the same grid.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter(
                "fields live on different grids".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Field::from_parts(self.grid, values, self.time))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Signed integral `omega_N int u r^{N-1} dr`.
    pub fn integral(&self) -> f64 {
        self.grid
            .quadrature_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Linear interpolation of the profile at radius `r`; zero beyond the grid.
    pub fn interpolate(&self, r: f64) -> f64 {
        let r = r.abs();
        let h = self.grid.spacing();
        let x = r / h;
        let j = x.floor() as usize;
        if j >= self.grid.node_count() {
            return if j == self.grid.node_count() && x == j as f64 {
                self.values[j]
            } else {
                0.0
            };
        }
        let s = x - j as f64;
        (1.0 - s) * self.values[j] + s * self.values[j + 1]
    }
}

/// Sign hypothesis attached to an initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignTag {
    Nonnegative,
    Nonpositive,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DatumFamily {
    /// `A exp(-r^2 / sigma^2)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `A (1 - (r/R0)^2)^3` for `r < R0`, zero beyond; `C^2` across `R0`.
    SmoothBump { amplitude: f64, support_radius: f64 },
    /// Nodal values given directly; must match the grid length.
    Tabulated { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDatum {
    #[serde(flatten)]
    pub family: DatumFamily,
    pub sign: SignTag,
}

impl InitialDatum {
    pub fn gaussian(amplitude: f64, width: f64, sign: SignTag) -> Self {
        Self {
            family: DatumFamily::Gaussian { amplitude, width },
            sign,
        }
    }

    pub fn smooth_bump(amplitude: f64, support_radius: f64, sign: SignTag) -> Self {
        Self {
            family: DatumFamily::SmoothBump {
                amplitude,
                support_radius,
            },
            sign,
        }
    }

    pub fn tabulated(values: Vec<f64>, sign: SignTag) -> Self {
        Self {
            family: DatumFamily::Tabulated { values },
            sign,
        }
    }

    /// Same datum with its amplitude multiplied by `factor` (tabulated data
    /// are scaled nodewise).
    pub fn scaled(&self, factor: f64) -> Self {
        let family = match &self.family {
            DatumFamily::Gaussian { amplitude, width } => DatumFamily::Gaussian {
                amplitude: amplitude * factor,
                width: *width,
            },
            DatumFamily::SmoothBump {
                amplitude,
                support_radius,
            } => DatumFamily::SmoothBump {
                amplitude: amplitude * factor,
                support_radius: *support_radius,
            },
            DatumFamily::Tabulated { values } => DatumFamily::Tabulated {
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        Self {
            family,
            sign: self.sign,
        }
    }

    pub fn amplitude(&self) -> Option<f64> {
        match self.family {
            DatumFamily::Gaussian { amplitude, .. } | DatumFamily::SmoothBump { amplitude, .. } => {
                Some(amplitude)
            }
            DatumFamily::Tabulated { .. } => None,
        }
    }

    /// Radius beyond which the datum vanishes, if it is compactly supported.
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            DatumFamily::SmoothBump { support_radius, .. } => Some(support_radius),
            _ => None,
        }
    }
}

/// Samples `datum` on `grid` at time zero, checking its parameters and sign tag.
pub fn sample_datum(datum: &InitialDatum, grid: &RadialGrid) -> Result<Field> {
    let values: Vec<f64> = match &datum.family {
        DatumFamily::Gaussian { amplitude, width } => {
            check_finite(&[("amplitude", *amplitude), ("width", *width)])?;
            if *width <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "gaussian width must be positive, got {width}"
                )));
            }
            grid.nodes()
                .map(|r| amplitude * (-(r / width).powi(2)).exp())
                .collect()
        }
        DatumFamily::SmoothBump {
            amplitude,
            support_radius,
        } => {
            check_finite(&[
                ("amplitude", *amplitude),
                ("support_radius", *support_radius),
            ])?;
            if *support_radius <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "bump support radius must be positive, got {support_radius}"
                )));
            }
            if *support_radius >= grid.radius() {
                return Err(Error::SupportExceedsGrid {
                    support: *support_radius,
                    radius: grid.radius(),
                });
            }
            grid.nodes()
                .map(|r| amplitude * smooth_bump_shape(r / support_radius))
                .collect()
        }
        DatumFamily::Tabulated { values } => {
            if values.len() != grid.len() {
                return Err(Error::InvalidParameter(format!(
                    "tabulated datum has {} values for a grid of {} nodes",
                    values.len(),
                    grid.len()
                )));
            }
            values.clone()
        }
    };
    let field = Field::new(*grid, values, 0.0)?;
    check_sign(&field, datum.sign)?;
    Ok(field)
}

/// `(1 - s^2)^3` on `[0, 1)`, zero beyond.
pub fn smooth_bump_shape(s: f64) -> f64 {
    let s = s.abs();
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(3)
    }
}

fn check_finite(params: &[(&str, f64)]) -> Result<()> {
    for (name, v) in params {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} is not finite ({v})"
            )));
        }
    }
    Ok(())
}

pub fn check_sign(field: &Field, sign: SignTag) -> Result<()> {
    let bad = match sign {
        SignTag::Nonnegative => field.values().iter().position(|&v| v < 0.0),
        SignTag::Nonpositive => field.values().iter().position(|&v| v > 0.0),
        SignTag::General => None,
    };
    match bad {
        Some(j) => Err(Error::SignMismatch(format!(
            "value {} at r = {} contradicts the {:?} tag",
            field.values()[j],
            field.grid().node(j),
            sign
        ))),
        None => Ok(()),
    }
}

/// Radial `L^p` norm; `p = f64::INFINITY` is the nodal maximum.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "L^p exponent must be >= 1, got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let weights = f.grid().quadrature_weights();
    let sum: f64 = weights
        .iter()
        .zip(f.values())
        .map(|(w, v)| w * v.abs().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// Radial derivative `u_r`: centred inside, zero at the origin, second-order
/// one-sided at `r = R`.
pub fn gradient_field(f: &Field) -> Field {
    let u = f.values();
    let m = f.grid().node_count();
    let h = f.grid().spacing();
    let mut g = vec![0.0; m + 1];
    for j in 1..m {
        g[j] = (u[j + 1] - u[j - 1]) / (2.0 * h);
    }
    g[m] = (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * h);
    Field::from_parts(*f.grid(), g, f.time())
}

/// Eigenvalues of the Hessian of a radial function: `u_rr` (radial) and
/// `u_r / r` (tangential, multiplicity `N - 1`). Both equal `u_rr(0)` at the
/// origin.
pub fn hessian_radial_eigenvalues(f: &Field) -> (Field, Field) {
    let u = f.values();
    let grid = f.grid();
    let m = grid.node_count();
    let h2 = grid.spacing() * grid.spacing();
    let mut urr = vec![0.0; m + 1];
    urr[0] = 2.0 * (u[1] - u[0]) / h2;
    for j in 1..m {
        urr[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / h2;
    }
    urr[m] = (2.0 * u[m] - 5.0 * u[m - 1] + 4.0 * u[m - 2] - u[m - 3]) / h2;

    let ur = gradient_field(f);
    let mut tangential = vec![0.0; m + 1];
    tangential[0] = urr[0];
    for j in 1..=m {
        tangential[j] = ur.values()[j] / grid.node(j);
    }
    (
        Field::from_parts(*grid, urr, f.time()),
        Field::from_parts(*grid, tangential, f.time()),
    )
}

/// Radial Laplacian `u_rr + (N-1) u_r / r`, equal to `2N (u_1 - u_0)/h^2` at
/// the origin.
pub fn laplacian_field(f: &Field) -> Field {
    let (urr, tangential) = hessian_radial_eigenvalues(f);
    let k = (f.grid().dimension() - 1) as f64;
    let values = urr
        .values()
        .iter()
        .zip(tangential.values())
        .map(|(a, b)| a + k * b)
        .collect();
    Field::from_parts(*f.grid(), values, f.time())
}

/// Largest Hessian eigenvalue at each node.
pub fn max_hessian_eigenvalue(f: &Field) -> Field {
    let (urr, tangential) = hessian_radial_eigenvalues(f);
    let values = if f.grid().dimension() == 1 {
        urr.values().to_vec()
    } else {
        urr.values()
            .iter()
            .zip(tangential.values())
            .map(|(a, b)| a.max(*b))
            .collect()
    };
    Field::from_parts(*f.grid(), values, f.time())
}

/// Spectral norm of the Hessian at each node.
pub fn hessian_norm(f: &Field) -> Field {
    let (urr, tangential) = hessian_radial_eigenvalues(f);
    let one_d = f.grid().dimension() == 1;
    let values = urr
        .values()
        .iter()
        .zip(tangential.values())
        .map(|(a, b)| if one_d { a.abs() } else { a.abs().max(b.abs()) })
        .collect();
    Field::from_parts(*f.grid(), values, f.time())
}
