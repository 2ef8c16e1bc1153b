mod common;

use common::load;
use horizonlab_core::gluing::{
    assemble_cylinder, cap_from_round_horizon, curvature_cross_check, eigen_bound_check, ConformalPath, CylinderSpec,
    Mode,
};
use horizonlab_core::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn modes() -> impl Strategy<Value = Vec<Mode>> {
    prop::collection::vec(
        (0usize..4, -3i64..4, -0.3f64..0.3, 0usize..4).prop_map(|(l, m, amplitude, wavenumber)| Mode {
            l,
            m: m.clamp(-(l as i64), l as i64),
            amplitude,
            wavenumber,
        }),
        1..4,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn warped_formula_matches_assembled_metric(ms in modes(), len in 1.0f64..4.0) {
        let mut spec = CylinderSpec::new(ConformalPath::Modes(ms), (0.5, 0.5 + len));
        spec.axisymmetric = false;
        spec.lmax = 3;
        spec.n_s = 16;
        let cyl = assemble_cylinder(&spec).unwrap();
        prop_assert!(cyl.boundary_defect <= 1e-6);
        prop_assert!(curvature_cross_check(&cyl, &[1, 8, 14]).unwrap() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bound_holds_on_admissible_caps(offset in -0.5f64..0.8, c1 in -0.3f64..0.3, c2 in -0.2f64..0.2) {
        let spec = CylinderSpec::cap(offset, vec![(1, 0, c1), (2, 0, c2)]);
        let cyl = assemble_cylinder(&spec).unwrap();
        let rec = eigen_bound_check(&cyl).unwrap();
        prop_assert!(rec.lambda_star > 0.0);
        prop_assert!(rec.bound_met, "{rec:?}");
        // away from the log end and from the cutoff transitions, where nested differences lose digits
        let interior: Vec<usize> = (0..cyl.s.len())
            .filter(|&q| (0.2..0.45).contains(&cyl.s[q]) || cyl.s[q] > 2.05)
            .step_by(3)
            .collect();
        prop_assert!(curvature_cross_check(&cyl, &interior).unwrap() < 1e-6);
    }
}

#[test]
fn product_and_stretched_cylinders() {
    for b in [3.0, 30.0] {
        let rec = eigen_bound_check(&assemble_cylinder(&CylinderSpec::product((0.0, b))).unwrap()).unwrap();
        assert!((rec.lambda_star - 1.0).abs() < 1e-6);
        assert!((rec.lambda1 - 0.25).abs() < 1e-6);
        assert!(rec.margin.abs() < 1e-6 && rec.bound_met);
    }
}

#[test]
fn flat_ball_and_sine_fixture() {
    let mut spec = CylinderSpec::new(ConformalPath::FlatBall, (0.2, 3.0));
    spec.check_ends = false;
    let cyl = assemble_cylinder(&spec).unwrap();
    assert!(cyl.r_g.iter().all(|r| r.abs() < 1e-8));
    assert!(matches!(eigen_bound_check(&cyl), Err(Error::NotApplicable(_))));

    let sine = CylinderSpec::new(
        ConformalPath::Modes(vec![Mode { l: 1, m: 0, amplitude: 0.1, wavenumber: 1 }]),
        (0.5 * PI, 1.5 * PI),
    );
    let cyl = assemble_cylinder(&sine).unwrap();
    // 0.1 cos(s − π/2) = 0.1 sin s
    let (th, _) = cyl.grid.angles(0);
    let y10 = (3.0 / (4.0 * PI)).sqrt() * th.cos();
    assert!((cyl.w[0] - 0.1 * cyl.s[0].sin() * y10).abs() < 1e-14);
    assert!(curvature_cross_check(&cyl, &(0..cyl.s.len()).step_by(7).collect::<Vec<_>>()).unwrap() < 1e-6);
}

#[test]
fn painleve_gullstrand_horizon_cap() {
    let d = load("painleve_gullstrand", &[]);
    let spec = cap_from_round_horizon(&d, 2.0).unwrap();
    let cyl = assemble_cylinder(&spec).unwrap();
    assert!(cyl.boundary_defect <= 1e-6 && cyl.second_derivative_sup.is_finite());
    let rec = eigen_bound_check(&cyl).unwrap();
    assert!((rec.lambda_star - 0.25).abs() < 1e-9);
    assert!(rec.bound_met && rec.lambda1 >= rec.lambda_star / 4.0 - 1e-6, "{rec:?}");
}
