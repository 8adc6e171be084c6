//! Monotone finite-difference update for `u_t - Lap u + |grad u|^q = 0` on a
//! radial grid.
//!
//! Diffusion uses the conservative centred radial Laplacian. The gradient
//! term uses the Godunov flux for the convex Hamiltonian `|p|^q`, which has no
//! numerical dissipation at extrema. With `cfl_safety <= 1/2` the explicit
//! update is monotone in every stencil value, so the discrete maximum and
//! comparison principles hold exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, RadialGrid};

/// Godunov numerical Hamiltonian for `H(p) = |p|^q`:
/// `max((p_minus^+)^q, ((-p_plus)^+)^q)` with `p_minus` the backward and
/// `p_plus` the forward difference.
#[inline]
pub fn numerical_hamiltonian(p_minus: f64, p_plus: f64, q: f64) -> f64 {
    let a = p_minus.max(0.0);
    let b = (-p_plus).max(0.0);
    let m = a.max(b);
    if m == 0.0 {
        0.0
    } else if q == 2.0 {
        m * m
    } else {
        m.powf(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeIntegrator {
    ExplicitEuler,
    /// Backward Euler diffusion, forward Euler Hamiltonian.
    Imex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `u(R) = 0`.
    Dirichlet,
    /// Mirror ghost node, `u_r(R) = 0`. Only used to test exact constants.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub cfl_safety: f64,
    pub time_integrator: TimeIntegrator,
    pub boundary: Boundary,
    /// Added to `||grad u||_inf` inside the Hamiltonian CFL bound.
    pub hamiltonian_floor: f64,
    /// Upper bound on the step, on top of the CFL bound. Needed by the IMEX
    /// integrator, whose diffusion part imposes no restriction.
    pub max_dt: Option<f64>,
    /// Warn once `|u(R - h)| > tail_tolerance * ||u||_inf`.
    pub tail_tolerance: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            cfl_safety: 0.45,
            time_integrator: TimeIntegrator::ExplicitEuler,
            boundary: Boundary::Dirichlet,
            hamiltonian_floor: 0.0,
            max_dt: None,
            tail_tolerance: 1e-8,
        }
    }
}

impl SchemeConfig {
    pub fn explicit() -> Self {
        Self::default()
    }

    pub fn imex(max_dt: f64) -> Self {
        Self {
            time_integrator: TimeIntegrator::Imex,
            max_dt: Some(max_dt),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.hamiltonian_floor >= 0.0 && self.hamiltonian_floor.is_finite()) {
            return Err(Error::InvalidParameter(
                "hamiltonian_floor must be >= 0".into(),
            ));
        }
        if let Some(dt) = self.max_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "max_dt must be positive, got {dt}"
                )));
            }
        }
        Ok(())
    }
}

/// Largest one-sided difference quotient, the gradient bound entering the CFL
/// condition.
pub fn max_difference_quotient(values: &[f64], spacing: f64) -> f64 {
    values
        .windows(2)
        .fold(0.0_f64, |m, w| m.max((w[1] - w[0]).abs()))
        / spacing
}

/// Step-size bound for the given state. `q = None` disables the Hamiltonian.
pub fn cfl_bound(grid: &RadialGrid, values: &[f64], q: Option<f64>, cfg: &SchemeConfig) -> f64 {
    let h = grid.spacing();
    let diffusive = h * h / (2.0 * grid.dimension() as f64);
    let hyperbolic = match q {
        Some(q) => {
            let slope = max_difference_quotient(values, h) + cfg.hamiltonian_floor;
            let rate = q * slope.powf(q - 1.0);
            if rate > 0.0 {
                h / rate
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    };
    let bound = match cfg.time_integrator {
        TimeIntegrator::ExplicitEuler => diffusive.min(hyperbolic),
        TimeIntegrator::Imex => hyperbolic,
    };
    cfg.cfl_safety * bound
}

/// What the update adds besides diffusion.
pub(crate) enum SourceTerm<'a> {
    /// `-|grad u|^q` through the Godunov flux.
    Hamiltonian(f64),
    /// Prescribed forcing `+f`, sampled at the step midpoint on the
    /// start-of-step state.
    Forced(&'a dyn super::Forcing),
    None,
}

impl SourceTerm<'_> {
    pub(crate) fn exponent(&self) -> Option<f64> {
        match self {
            SourceTerm::Hamiltonian(q) => Some(*q),
            _ => None,
        }
    }
}

/// Mass bookkeeping for one step: `I(n+1) = I(n) - dissipation + boundary_flux`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepBudget {
    pub dissipation: f64,
    pub boundary_flux: f64,
}

/// Reusable buffers for repeated steps on one grid.
pub(crate) struct Stepper {
    grid: RadialGrid,
    cfg: SchemeConfig,
    weights: Vec<f64>,
    // (1 - k/2j)/h^2 and (1 + k/2j)/h^2 for j >= 1, origin stencil at j = 0
    lower: Vec<f64>,
    upper: Vec<f64>,
    source: Vec<f64>,
    lap: Vec<f64>,
    scratch_c: Vec<f64>,
    scratch_d: Vec<f64>,
}

impl Stepper {
    pub(crate) fn new(grid: RadialGrid, cfg: SchemeConfig) -> Self {
        let n = grid.len();
        let m = grid.node_count();
        let h2 = grid.spacing() * grid.spacing();
        let k = (grid.dimension() - 1) as f64;
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        upper[0] = 2.0 * grid.dimension() as f64 / h2;
        lower[0] = 0.0;
        for j in 1..=m {
            let c = k / (2.0 * j as f64);
            lower[j] = (1.0 - c) / h2;
            upper[j] = (1.0 + c) / h2;
        }
        if cfg.boundary == Boundary::Neumann {
            lower[m] = 2.0 / h2;
            upper[m] = 0.0;
        }
        Self {
            grid,
            cfg,
            weights: grid.quadrature_weights(),
            lower,
            upper,
            source: vec![0.0; n],
            lap: vec![0.0; n],
            scratch_c: vec![0.0; n],
            scratch_d: vec![0.0; n],
        }
    }

    fn last_free(&self) -> usize {
        match self.cfg.boundary {
            Boundary::Dirichlet => self.grid.node_count() - 1,
            Boundary::Neumann => self.grid.node_count(),
        }
    }

    fn laplacian_into(&self, u: &[f64], out: &mut [f64]) {
        let last = self.last_free();
        out[0] = self.upper[0] * (u[1] - u[0]);
        for j in 1..=last {
            let up = if j == self.grid.node_count() {
                0.0
            } else {
                u[j + 1]
            };
            out[j] = self.lower[j] * u[j - 1] + self.upper[j] * up
                - (self.lower[j] + self.upper[j]) * u[j];
        }
        for v in out.iter_mut().skip(last + 1) {
            *v = 0.0;
        }
    }

    // Fills `self.source` with the pointwise rate subtracted from u_t.
    fn source_into(&mut self, u: &[f64], t: f64, term: &SourceTerm<'_>) {
        let last = self.last_free();
        let m = self.grid.node_count();
        let h = self.grid.spacing();
        match term {
            SourceTerm::Hamiltonian(q) => {
                for j in 0..=last {
                    let um = if j == 0 { u[1] } else { u[j - 1] };
                    let up = if j == m { u[m - 1] } else { u[j + 1] };
                    self.source[j] = numerical_hamiltonian((u[j] - um) / h, (up - u[j]) / h, *q);
                }
            }
            SourceTerm::Forced(f) => {
                f.sample(&self.grid, u, t, &mut self.scratch_c);
                for j in 0..=last {
                    self.source[j] = -self.scratch_c[j];
                }
            }
            SourceTerm::None => {
                for v in self.source.iter_mut().take(last + 1) {
                    *v = 0.0;
                }
            }
        }
        for v in self.source.iter_mut().skip(last + 1) {
            *v = 0.0;
        }
    }

    /// Advances `u` in place by `dt`.
    pub(crate) fn advance(
        &mut self,
        u: &mut [f64],
        t: f64,
        dt: f64,
        term: &SourceTerm<'_>,
    ) -> StepBudget {
        self.source_into(u, t + 0.5 * dt, term);
        let last = self.last_free();
        let dissipation = dt
            * self.weights[..=last]
                .iter()
                .zip(&self.source[..=last])
                .map(|(w, s)| w * s)
                .sum::<f64>();
        match self.cfg.time_integrator {
            TimeIntegrator::ExplicitEuler => {
                let mut lap = std::mem::take(&mut self.lap);
                self.laplacian_into(u, &mut lap);
                let flux = dt
                    * self.weights[..=last]
                        .iter()
                        .zip(&lap[..=last])
                        .map(|(w, l)| w * l)
                        .sum::<f64>();
                for j in 0..=last {
                    u[j] += dt * (lap[j] - self.source[j]);
                }
                self.lap = lap;
                if self.cfg.boundary == Boundary::Dirichlet {
                    u[self.grid.node_count()] = 0.0;
                }
                StepBudget {
                    dissipation,
                    boundary_flux: flux,
                }
            }
            TimeIntegrator::Imex => {
                let mass_before: f64 = self.weights.iter().zip(u.iter()).map(|(w, v)| w * v).sum();
                for j in 0..=last {
                    u[j] -= dt * self.source[j];
                }
                if self.cfg.boundary == Boundary::Dirichlet {
                    u[self.grid.node_count()] = 0.0;
                }
                self.implicit_diffusion(u, dt);
                let mass_after: f64 = self.weights.iter().zip(u.iter()).map(|(w, v)| w * v).sum();
                StepBudget {
                    dissipation,
                    boundary_flux: mass_after - mass_before + dissipation,
                }
            }
        }
    }

    // Solves (I - dt L_h) u_new = rhs in place (Thomas algorithm).
    fn implicit_diffusion(&mut self, rhs: &mut [f64], dt: f64) {
        let n = self.grid.len();
        let last = self.last_free();
        let c = &mut self.scratch_c;
        let d = &mut self.scratch_d;
        // row j: -dt*lower[j] x_{j-1} + (1 + dt*(lower+upper)) x_j - dt*upper[j] x_{j+1}
        let diag = |j: usize| -> f64 {
            if j == 0 {
                1.0 + dt * self.upper[0]
            } else {
                1.0 + dt * (self.lower[j] + self.upper[j])
            }
        };
        let sub = |j: usize| -> f64 { -dt * self.lower[j] };
        let sup = |j: usize| -> f64 {
            if j + 1 >= n {
                0.0
            } else {
                -dt * self.upper[j]
            }
        };
        let solve_len = last + 1;
        // Dirichlet: the node M is fixed at zero, so the coupling drops out.
        c[0] = sup(0) / diag(0);
        d[0] = rhs[0] / diag(0);
        for j in 1..solve_len {
            let up = if j + 1 < solve_len { sup(j) } else { 0.0 };
            let denom = diag(j) - sub(j) * c[j - 1];
            c[j] = up / denom;
            d[j] = (rhs[j] - sub(j) * d[j - 1]) / denom;
        }
        rhs[solve_len - 1] = d[solve_len - 1];
        for j in (0..solve_len - 1).rev() {
            rhs[j] = d[j] - c[j] * rhs[j + 1];
        }
        if solve_len < n {
            rhs[n - 1] = 0.0;
        }
    }
}

/// One update of `f` by `dt` for the problem `spec`.
pub fn step(f: &Field, dt: f64, spec: &super::ProblemSpec, cfg: &SchemeConfig) -> Result<Field> {
    cfg.validate()?;
    let q = spec.hamiltonian.then_some(spec.q);
    let bound = cfl_bound(f.grid(), f.values(), q, cfg);
    let bound = cfg.max_dt.map_or(bound, |m| bound.min(m));
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, bound });
    }
    let mut stepper = Stepper::new(*f.grid(), *cfg);
    let mut u = f.values().to_vec();
    let term = match q {
        Some(q) => SourceTerm::Hamiltonian(q),
        None => SourceTerm::None,
    };
    stepper.advance(&mut u, f.time(), dt, &term);
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            time: f.time() + dt,
        });
    }
    Ok(Field::from_parts(*f.grid(), u, f.time() + dt))
}
