//! Time evolution on radial grids, plus the exact `q = 2` Hopf-Cole oracle and
//! the forced linear heat equation.

mod hopf_cole;
mod scheme;

pub use hopf_cole::{hopf_cole_at, hopf_cole_exact};
pub use scheme::{
    cfl_bound, max_difference_quotient, numerical_hamiltonian, step, Boundary, SchemeConfig,
    TimeIntegrator,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample_datum, Field, InitialDatum, RadialGrid};
use scheme::{SourceTerm, Stepper};

/// Everything that defines one run of the equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub q: f64,
    pub grid: RadialGrid,
    pub datum: InitialDatum,
    /// Time attached to the initial datum.
    pub start_time: f64,
    pub horizon: f64,
    /// When false the gradient term is dropped and the run is the heat
    /// equation.
    pub hamiltonian: bool,
}

impl ProblemSpec {
    pub fn new(q: f64, grid: RadialGrid, datum: InitialDatum, horizon: f64) -> Self {
        Self {
            q,
            grid,
            datum,
            start_time: 0.0,
            horizon,
            hamiltonian: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.q > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "q must exceed 1, got {}",
                self.q
            )));
        }
        if !(self.start_time.is_finite() && self.start_time >= 0.0) {
            return Err(Error::InvalidParameter("start time must be >= 0".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > self.start_time) {
            return Err(Error::InvalidParameter(format!(
                "horizon {} must exceed the start time {}",
                self.horizon, self.start_time
            )));
        }
        Ok(())
    }

    pub fn initial_field(&self) -> Result<Field> {
        Ok(sample_datum(&self.datum, &self.grid)?.with_time(self.start_time))
    }
}

/// Right-hand side `f` of `u_t = Lap u + f`.
pub trait Forcing: Sync {
    /// Writes `f(r_j, t)` into `out`; `state` is the current solution.
    fn sample(&self, grid: &RadialGrid, state: &[f64], t: f64, out: &mut [f64]);
}

/// Forcing given as a function of `(r, t)`.
pub struct SpatialForcing<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> Forcing for SpatialForcing<F> {
    fn sample(&self, grid: &RadialGrid, _state: &[f64], t: f64, out: &mut [f64]) {
        for (o, r) in out.iter_mut().zip(grid.nodes()) {
            *o = (self.0)(r, t);
        }
    }
}

/// `f = -|grad u|^q` evaluated on the current state with the same Godunov
/// flux as the nonlinear solver.
pub struct HamiltonianFeedback {
    pub q: f64,
}

impl Forcing for HamiltonianFeedback {
    fn sample(&self, grid: &RadialGrid, state: &[f64], _t: f64, out: &mut [f64]) {
        let h = grid.spacing();
        let m = grid.node_count();
        for j in 0..=m {
            let um = if j == 0 { state[1] } else { state[j - 1] };
            let up = if j == m { state[m - 1] } else { state[j + 1] };
            out[j] = -numerical_hamiltonian((state[j] - um) / h, (up - state[j]) / h, self.q);
        }
    }
}

/// Solution snapshot with the running mass budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub field: Field,
    /// `int_0^t int |grad u|^q` (or `-int_0^t int f` for forced runs),
    /// accumulated step by step with the same left-endpoint rule as the update.
    pub dissipation: f64,
    /// Mass that crossed `r = R` so far.
    pub boundary_flux: f64,
    pub steps: usize,
}

impl Snapshot {
    pub fn time(&self) -> f64 {
        self.field.time()
    }
}

/// First time at which the far-field tail exceeded its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailViolation {
    pub time: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub q: f64,
    pub hamiltonian: bool,
    pub snapshots: Vec<Snapshot>,
    pub tail_violation: Option<TailViolation>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Snapshot::time).collect()
    }

    pub fn initial(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("trajectory has an initial snapshot")
    }

    /// Snapshot whose time is closest to `t` (relative tolerance `tol`).
    pub fn at_time(&self, t: f64, tol: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.time() - t).abs() <= tol * t.abs().max(1e-300))
    }

    /// Time at which the run stopped being trustworthy, if it did.
    pub fn validity_end(&self) -> Option<f64> {
        self.tail_violation.map(|v| v.time)
    }
}

/// `t_k = t0 rho^k` up to and including `horizon`.
pub fn geometric_schedule(t0: f64, ratio: f64, horizon: f64) -> Result<Vec<f64>> {
    if !(t0 > 0.0 && ratio > 1.0 && horizon >= t0) {
        return Err(Error::InvalidParameter(format!(
            "bad schedule t0={t0} ratio={ratio} horizon={horizon}"
        )));
    }
    let mut times = Vec::new();
    let mut k = 0;
    loop {
        let t = t0 * ratio.powi(k);
        if t >= horizon * (1.0 - 1e-12) {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(horizon);
    Ok(times)
}

/// Default snapshot ratio: eight per decade.
pub fn default_schedule_ratio() -> f64 {
    10f64.powf(1.0 / 8.0)
}

fn check_output_times(start: f64, times: &[f64]) -> Result<()> {
    let mut prev = start;
    for &t in times {
        if !(t.is_finite() && t > prev) {
            return Err(Error::InvalidParameter(format!(
                "output times must increase strictly from {start}; got {t} after {prev}"
            )));
        }
        prev = t;
    }
    Ok(())
}

fn evolve(
    initial: Field,
    cfg: &SchemeConfig,
    term: SourceTerm<'_>,
    output_times: &[f64],
    q: f64,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_output_times(initial.time(), output_times)?;
    let grid = *initial.grid();
    let mut stepper = Stepper::new(grid, *cfg);
    let mut t = initial.time();
    let mut u = initial.into_values();
    if cfg.boundary == Boundary::Dirichlet {
        u[grid.node_count()] = 0.0;
    }
    let mut dissipation = 0.0;
    let mut flux = 0.0;
    let mut steps = 0usize;
    let mut tail_violation = None;
    let mut snapshots = vec![Snapshot {
        field: Field::from_parts(grid, u.clone(), t),
        dissipation,
        boundary_flux: flux,
        steps,
    }];
    let exponent = term.exponent();
    for &target in output_times {
        while t < target {
            let mut dt = cfl_bound(&grid, &u, exponent, cfg);
            if let Some(m) = cfg.max_dt {
                dt = dt.min(m);
            }
            if !dt.is_finite() {
                dt = target - t;
            }
            // land exactly on the output time, avoiding a sliver step
            if t + dt >= target || target - (t + dt) < 1e-9 * dt {
                dt = target - t;
            }
            let budget = stepper.advance(&mut u, t, dt, &term);
            dissipation += budget.dissipation;
            flux += budget.boundary_flux;
            t = if target - t == dt { target } else { t + dt };
            steps += 1;
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { time: t });
            }
            if tail_violation.is_none() && cfg.boundary == Boundary::Dirichlet {
                let m = grid.node_count();
                let sup = u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                if sup > 0.0 {
                    let ratio = u[m - 1].abs() / sup;
                    if ratio > cfg.tail_tolerance {
                        log::warn!("far-field tail {ratio:.3e} exceeds tolerance at t = {t}");
                        tail_violation = Some(TailViolation { time: t, ratio });
                    }
                }
            }
        }
        snapshots.push(Snapshot {
            field: Field::from_parts(grid, u.clone(), t),
            dissipation,
            boundary_flux: flux,
            steps,
        });
    }
    Ok(Trajectory {
        q,
        hamiltonian: exponent.is_some(),
        snapshots,
        tail_violation,
    })
}

/// Evolves `spec` and records a snapshot at every output time.
pub fn solve(spec: &ProblemSpec, cfg: &SchemeConfig, output_times: &[f64]) -> Result<Trajectory> {
    spec.validate()?;
    if let Some(&last) = output_times.last() {
        if last > spec.horizon * (1.0 + 1e-12) {
            return Err(Error::BeyondHorizon {
                requested: last,
                horizon: spec.horizon,
            });
        }
    }
    let initial = spec.initial_field()?;
    let term = if spec.hamiltonian {
        SourceTerm::Hamiltonian(spec.q)
    } else {
        SourceTerm::None
    };
    evolve(initial, cfg, term, output_times, spec.q)
}

/// Solves `u_t = Lap u + f` from `u0` with the same diffusion stencil.
pub fn solve_forced_linear(
    u0: &Field,
    forcing: &dyn Forcing,
    cfg: &SchemeConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    evolve(
        u0.clone(),
        cfg,
        SourceTerm::Forced(forcing),
        output_times,
        f64::NAN,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::heat_kernel;
    use crate::grid::{lp_norm, SignTag};
    use proptest::prelude::*;

    fn gaussian_spec(q: f64, amp: f64, sign: SignTag, radius: f64, h: f64) -> ProblemSpec {
        let grid = RadialGrid::with_radius(1, radius, h).unwrap();
        ProblemSpec::new(q, grid, InitialDatum::gaussian(amp, 1.0, sign), 50.0)
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let grid = RadialGrid::new(2, 64, 0.1).unwrap();
        let spec = ProblemSpec::new(
            1.5,
            grid,
            InitialDatum::tabulated(vec![0.0; grid.len()], SignTag::General),
            5.0,
        );
        for cfg in [SchemeConfig::explicit(), SchemeConfig::imex(0.1)] {
            let traj = solve(&spec, &cfg, &[1.0, 5.0]).unwrap();
            assert!(traj.last().field.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constants_are_exact_with_neumann() {
        let grid = RadialGrid::new(3, 32, 0.2).unwrap();
        let spec = ProblemSpec::new(
            1.7,
            grid,
            InitialDatum::tabulated(vec![2.5; grid.len()], SignTag::Nonnegative),
            3.0,
        );
        for integrator in [TimeIntegrator::ExplicitEuler, TimeIntegrator::Imex] {
            let cfg = SchemeConfig {
                boundary: Boundary::Neumann,
                time_integrator: integrator,
                max_dt: Some(0.05),
                ..SchemeConfig::default()
            };
            let traj = solve(&spec, &cfg, &[3.0]).unwrap();
            for v in traj.last().field.values() {
                assert!((v - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_checks_cfl() {
        let spec = gaussian_spec(1.5, 1.0, SignTag::Nonnegative, 10.0, 0.1);
        let f = spec.initial_field().unwrap();
        let cfg = SchemeConfig::default();
        assert!(matches!(
            step(&f, 1.0, &spec, &cfg),
            Err(Error::CflViolation { .. })
        ));
        let next = step(&f, 1e-3, &spec, &cfg).unwrap();
        assert!((next.time() - 1e-3).abs() < 1e-15);
        assert!(next.max_abs() <= f.max_abs());
    }

    #[test]
    fn output_times_must_increase() {
        let spec = gaussian_spec(1.5, 1.0, SignTag::Nonnegative, 10.0, 0.1);
        let cfg = SchemeConfig::default();
        assert!(solve(&spec, &cfg, &[1.0, 0.5]).is_err());
        assert!(matches!(
            solve(&spec, &cfg, &[100.0]),
            Err(Error::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn heat_equation_conserves_mass() {
        let grid = RadialGrid::with_radius(1, 40.0, 0.1).unwrap();
        let u0 = Field::from_fn(grid, 0.0, |r| heat_kernel(r, 1.0, 1).unwrap()).unwrap();
        let zero = SpatialForcing(|_r: f64, _t: f64| 0.0);
        for cfg in [SchemeConfig::explicit(), SchemeConfig::imex(0.05)] {
            let traj = solve_forced_linear(&u0, &zero, &cfg, &[1.0, 10.0]).unwrap();
            let m0 = traj.initial().field.integral();
            for s in &traj.snapshots {
                assert!((s.field.integral() - m0).abs() < 1e-9);
            }
            // heat kernel self-evolution
            let last = &traj.last().field;
            let err = last
                .grid()
                .nodes()
                .zip(last.values())
                .map(|(r, v)| (v - heat_kernel(r, 11.0, 1).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(err < 3e-3 * heat_kernel(0.0, 11.0, 1).unwrap(), "{err}");
        }
    }

    #[test]
    fn mass_budget_closes() {
        for (n, sign, amp) in [
            (1, SignTag::Nonnegative, 1.0),
            (1, SignTag::Nonpositive, -2.0),
            (3, SignTag::Nonnegative, 1.0),
        ] {
            let grid = RadialGrid::with_radius(n, 15.0, 0.05).unwrap();
            let spec = ProblemSpec::new(1.6, grid, InitialDatum::gaussian(amp, 1.0, sign), 5.0);
            for cfg in [SchemeConfig::explicit(), SchemeConfig::imex(0.01)] {
                let traj = solve(&spec, &cfg, &[1.0, 5.0]).unwrap();
                let m0 = traj.initial().field.integral();
                for s in &traj.snapshots {
                    let lhs = s.field.integral();
                    let rhs = m0 - s.dissipation + s.boundary_flux;
                    let tol = if n == 1 { 1e-11 } else { 1e-3 };
                    assert!((lhs - rhs).abs() < tol * m0.abs(), "N={n}: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn l1_monotone_by_sign() {
        let pos = gaussian_spec(1.8, 1.0, SignTag::Nonnegative, 30.0, 0.1);
        let neg = gaussian_spec(1.8, -1.0, SignTag::Nonpositive, 30.0, 0.1);
        let times = geometric_schedule(0.1, default_schedule_ratio(), 50.0).unwrap();
        let cfg = SchemeConfig::default();
        let tp = solve(&pos, &cfg, &times).unwrap();
        let tn = solve(&neg, &cfg, &times).unwrap();
        let l1 = |t: &Trajectory| -> Vec<f64> {
            t.snapshots
                .iter()
                .map(|s| lp_norm(&s.field, 1.0).unwrap())
                .collect()
        };
        for w in l1(&tp).windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        for w in l1(&tn).windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn feedback_forcing_reproduces_nonlinear_solve() {
        let spec = gaussian_spec(1.5, 2.0, SignTag::Nonnegative, 12.0, 0.1);
        let cfg = SchemeConfig {
            max_dt: Some(1e-3),
            ..SchemeConfig::default()
        };
        let a = solve(&spec, &cfg, &[0.5, 2.0]).unwrap();
        let u0 = spec.initial_field().unwrap();
        let b =
            solve_forced_linear(&u0, &HamiltonianFeedback { q: 1.5 }, &cfg, &[0.5, 2.0]).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            let diff = x.field.sub(&y.field).unwrap().max_abs();
            assert!(diff < 1e-13, "{diff}");
            assert!((x.dissipation - y.dissipation).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_schedule_shape() {
        let s = geometric_schedule(1.0, 10f64.powf(0.125), 100.0).unwrap();
        assert_eq!(s.len(), 17);
        assert!((s[8] - 10.0).abs() < 1e-9);
        assert_eq!(*s.last().unwrap(), 100.0);
        assert!(geometric_schedule(0.0, 2.0, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn comparison_and_sign_preservation(
            a1 in 0.0f64..3.0, da in 0.0f64..2.0, w in 0.5f64..2.0,
            q in 1.1f64..2.5, imex in proptest::bool::ANY, n in 1usize..=3,
        ) {
            let grid = RadialGrid::with_radius(n, 8.0, 0.1).unwrap();
            let lo = ProblemSpec::new(q, grid, InitialDatum::gaussian(a1, w, SignTag::Nonnegative), 1.0);
            let hi = ProblemSpec::new(q, grid, InitialDatum::gaussian(a1 + da, w, SignTag::Nonnegative), 1.0);
            let cfg = if imex { SchemeConfig::imex(0.02) } else { SchemeConfig::explicit() };
            // fixed dt so both runs share the step sequence
            let cfg = SchemeConfig { max_dt: Some(1e-3), ..cfg };
            let times = [0.25, 1.0];
            let tl = solve(&lo, &cfg, &times).unwrap();
            let th = solve(&hi, &cfg, &times).unwrap();
            let mut prev_sup = f64::INFINITY;
            for (sl, sh) in tl.snapshots.iter().zip(&th.snapshots) {
                for (x, y) in sl.field.values().iter().zip(sh.field.values()) {
                    prop_assert!(*x <= *y);
                    prop_assert!(*x >= 0.0);
                }
                let sup = sh.field.max_abs();
                prop_assert!(sup <= prev_sup);
                prev_sup = sup;
            }
        }
    }
}
