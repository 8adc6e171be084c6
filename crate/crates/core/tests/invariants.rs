use proptest::prelude::*;

use vhj_core::diagnostics::{regime_classify, ClassifyOptions, Verdict};
use vhj_core::grid::{laplacian_field, InitialDatum, RadialGrid, SignTag};
use vhj_core::harness::suites::{
    classify_scan_run, hj_radius, hj_scenario, HJ_HORIZON, HJ_Q, VSS_Q,
};
use vhj_core::solver::{
    default_schedule_ratio, geometric_schedule, max_difference_quotient, solve, SchemeConfig,
};
use vhj_core::ProblemSpec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // ||D u^n||_inf <= ||D u0||_inf + O(h), with slack h ||D^2 u0||_inf.
    #[test]
    fn gradient_bound(
        amp in 0.1f64..5.0, w in 0.5f64..2.0, bump in proptest::bool::ANY,
        negative in proptest::bool::ANY, q in 1.1f64..2.0, n in 1usize..=3,
    ) {
        let grid = RadialGrid::with_radius(n, 10.0, 0.05).unwrap();
        let (a, sign) = if negative { (-amp, SignTag::Nonpositive) } else { (amp, SignTag::Nonnegative) };
        let datum = if bump {
            InitialDatum::smooth_bump(a, 2.0 * w, sign)
        } else {
            InitialDatum::gaussian(a, w, sign)
        };
        let spec = ProblemSpec::new(q, grid, datum, 2.0);
        let u0 = spec.initial_field().unwrap();
        let h = grid.spacing();
        let bound = max_difference_quotient(u0.values(), h)
            + h * laplacian_field(&u0).max_abs();
        let traj = solve(&spec, &SchemeConfig::explicit(), &[0.01, 0.1, 0.5, 2.0]).unwrap();
        for s in &traj.snapshots {
            let g = max_difference_quotient(s.field.values(), h);
            prop_assert!(g <= bound, "t = {}: {g} > {bound}", s.time());
        }
    }
}

fn verdict(spec: &ProblemSpec, dt: f64, t0: f64) -> Verdict {
    let times = geometric_schedule(t0, default_schedule_ratio(), spec.horizon).unwrap();
    let traj = solve(spec, &SchemeConfig::imex(dt), &times).unwrap();
    regime_classify(spec, &traj, &ClassifyOptions::default())
        .unwrap()
        .verdict
}

fn refined(spec: &ProblemSpec) -> ProblemSpec {
    let g = spec.grid;
    let grid = RadialGrid::with_radius(g.dimension(), g.radius(), g.spacing() / 2.0).unwrap();
    ProblemSpec {
        grid,
        ..spec.clone()
    }
}

// Verdicts of the acceptance scenarios do not change when h is halved.
#[test]
fn verdicts_survive_refinement() {
    let cases = [
        (
            "diffusion",
            ProblemSpec::new(
                1.8,
                RadialGrid::with_radius(1, 80.0, 0.1).unwrap(),
                InitialDatum::gaussian(1.0, 1.0, SignTag::Nonnegative),
                200.0,
            ),
            Verdict::Diffusion,
        ),
        (
            "vss",
            ProblemSpec::new(
                VSS_Q,
                RadialGrid::with_radius(1, 385.0, 0.1).unwrap(),
                InitialDatum::smooth_bump(10.0, 1.0, SignTag::Nonnegative),
                1000.0,
            ),
            Verdict::VssBalance,
        ),
    ];
    for (name, spec, expected) in cases {
        let h = spec.grid.spacing();
        assert_eq!(verdict(&spec, h / 2.0, 0.1), expected, "{name} at h = {h}");
        let fine = refined(&spec);
        assert_eq!(
            verdict(&fine, h / 4.0, 0.1),
            expected,
            "{name} at h = {}",
            h / 2.0
        );
    }

    // scan samples on both sides of the bracket, at the scan spacing and half of it
    for (amp, expected) in [(0.3, Verdict::Diffusion), (100.0, Verdict::HjDominated)] {
        let datum = InitialDatum::smooth_bump(-amp, 1.0, SignTag::Nonpositive);
        assert_eq!(
            classify_scan_run(&datum).unwrap(),
            expected,
            "scan sample {amp}"
        );
        let grid =
            RadialGrid::with_radius(1, hj_radius(amp, HJ_Q, HJ_HORIZON).unwrap(), 0.1).unwrap();
        let spec = ProblemSpec::new(HJ_Q, grid, datum, HJ_HORIZON);
        assert_eq!(
            verdict(&spec, 0.05, 0.1),
            expected,
            "scan sample {amp} refined"
        );
    }

    let sc = hj_scenario().unwrap();
    assert_eq!(sc.run.verdict(), Verdict::HjDominated);
    assert_eq!(
        verdict(&refined(&sc.run.spec), 0.025, 0.1),
        Verdict::HjDominated
    );
}
