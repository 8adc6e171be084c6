//! Fixtures shared by the benchmarks.

use vhj_core::grid::{InitialDatum, RadialGrid, SignTag};
use vhj_core::ProblemSpec;

/// Nonnegative Gaussian at `q = 1.8` on `[0, 60]` with spacing `h`.
pub fn diffusion_spec(h: f64, horizon: f64) -> ProblemSpec {
    let grid = RadialGrid::with_radius(1, 60.0, h).expect("valid grid");
    ProblemSpec::new(
        1.8,
        grid,
        InitialDatum::gaussian(1.0, 1.0, SignTag::Nonnegative),
        horizon,
    )
}

/// Nonpositive bump at `q = 2` on `[0, 10]` with spacing `h`.
pub fn hopf_cole_spec(h: f64) -> ProblemSpec {
    let grid = RadialGrid::with_radius(1, 10.0, h).expect("valid grid");
    ProblemSpec::new(
        2.0,
        grid,
        InitialDatum::smooth_bump(-1.0, 1.0, SignTag::Nonpositive),
        1.0,
    )
}
