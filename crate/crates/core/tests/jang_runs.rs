mod common;

use common::{load, pg_run};
use horizonlab_core::jang::{
    continuation, gap_between, monotonicity_check, reduced_residual, tensor_residual, JangProblem, Schedule,
    GAP_TOLERANCE,
};
use horizonlab_core::linalg::max_abs;
use proptest::prelude::*;

const FIXTURES: [&str; 5] = [
    "flat_constant_k",
    "painleve_gullstrand",
    "isotropic_schwarzschild",
    "conformal_perturbed",
    "periodic_constant_k",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn radial_and_tensor_residuals_agree(
        which in 0usize..5,
        a in -0.5f64..0.5, b in -1.0f64..1.0, c in 0.5f64..1.5,
        r in 0.5f64..3.5, s in 0.05f64..1.0, src in -0.2f64..0.2,
        dir in (-1.0f64..1.0, -1.0f64..1.0, 0.2f64..1.0),
    ) {
        let d = load(FIXTURES[which], &[]);
        let jet = [
            a * r * r + b * (c * r).sin(),
            2.0 * a * r + b * c * (c * r).cos(),
            2.0 * a - b * c * c * (c * r).sin(),
        ];
        let n = (dir.0 * dir.0 + dir.1 * dir.1 + dir.2 * dir.2).sqrt();
        let x = if d.test_mode() { [r, dir.0, dir.1] } else { [r * dir.0 / n, r * dir.1 / n, r * dir.2 / n] };
        let red = reduced_residual(&d, s, r, jet, src).unwrap();
        let ten = tensor_residual(&d, s, &x, jet, src).unwrap();
        prop_assert!((red - ten).abs() < 1e-8 * (1.0 + red.abs()), "{}: {red} vs {ten}", d.name);
    }

    #[test]
    fn periodic_fixture_is_exact(c in -0.4f64..0.4) {
        let d = load("periodic_constant_k", &[("c", c)]);
        let run = continuation(&JangProblem::new(d, 1.0).unwrap(), &Schedule::geometric(1.0, 0.5, 1e-2).unwrap()).unwrap();
        for st in &run.steps {
            for (f, u) in st.f.iter().zip(st.u()) {
                prop_assert!((f + 3.0 * c / st.s).abs() < 1e-10 * (1.0 + f.abs()));
                prop_assert!((u + 3.0 * c).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn pg_run_respects_bounds_gaps_and_monotonicity() {
    let (d, run) = pg_run(400, 1e-3);
    let mu1 = d.max_trace_k();
    assert_eq!(run.steps.len(), run.schedule.len());
    for st in &run.steps {
        assert!(st.converged);
        assert!(max_abs(&st.u()) <= mu1 + 1e-6, "s = {}", st.s);
    }
    for w in run.steps.windows(2) {
        assert!(gap_between(&w[0], &w[1], GAP_TOLERANCE).holds());
    }
    assert!(monotonicity_check(&run).unwrap().holds);
    // s ∇f stays bounded along the schedule
    let g: Vec<f64> = run.steps.iter().map(|st| st.monitors.max_s_grad).collect();
    assert!(g.iter().all(|v| v.is_finite()));
}

#[test]
fn vacuum_run_is_identically_zero() {
    let d = load("flat_vacuum", &[]);
    let run = continuation(&JangProblem::new(d, 1.0).unwrap(), &Schedule::geometric(1.0, 0.6, 1e-3).unwrap()).unwrap();
    for st in &run.steps {
        assert!(st.f.iter().all(|f| f.abs() < 1e-12));
    }
}
