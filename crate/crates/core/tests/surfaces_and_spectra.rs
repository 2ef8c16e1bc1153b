mod common;

use common::load;
use horizonlab_core::stability::{
    assemble, conjugated_potential, principal_eig, schrodinger_ground_state, zero_field, ExpansionOperator,
};
use horizonlab_core::surfaces::{expansion, fermi_expansion, surface_geometry, Orientation, SphereGrid, Surface};
use proptest::prelude::*;

const ROUND: [&str; 4] = ["flat_constant_k", "painleve_gullstrand", "isotropic_schwarzschild", "conformal_perturbed"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tensor_expansion_reduces_on_round_spheres(which in 0usize..4, r in 0.5f64..8.0) {
        let d = load(ROUND[which], &[]);
        let grid = SphereGrid::new(4);
        let th = expansion(&d, &grid, &Surface::round(r)).unwrap();
        let closed = d.sphere_expansion(r).unwrap();
        for t in th {
            prop_assert!((t - closed).abs() < 1e-8, "{}: {t} vs {closed}", d.name);
        }
    }

    #[test]
    fn orientation_flips_mean_curvature(r in 1.0f64..5.0, a in -0.1f64..0.1, b in -0.1f64..0.1) {
        let d = load("painleve_gullstrand", &[]);
        let grid = SphereGrid::new(4);
        let mut rho = grid.constant(r);
        rho[grid.index(1, 1).unwrap()] = a;
        rho[grid.index(2, 0).unwrap()] = b;
        let out = surface_geometry(&d, &grid, &Surface::radial_graph(rho.clone())).unwrap();
        let inn = surface_geometry(&d, &grid, &Surface::radial_graph(rho).with_orientation(Orientation::Inward)).unwrap();
        for (o, i) in out.nodes.iter().zip(&inn.nodes) {
            prop_assert!((o.mean_curvature + i.mean_curvature).abs() < 1e-10);
            prop_assert!((i.expansion() - (-o.mean_curvature - o.trace_k_sigma)).abs() < 1e-10);
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    #[test]
    fn drift_conjugation_matches_self_adjoint_oracle(
        e in prop::collection::vec(-0.25f64..0.25, 3),
        v in prop::collection::vec(-0.5f64..0.5, 3),
        c in 0.5f64..2.0,
    ) {
        // low-degree η keeps e^η well resolved for the oracle
        let grid = SphereGrid::new(16);
        let mut eta = zero_field(&grid);
        eta[grid.index(1, 0).unwrap()] = e[0];
        eta[grid.index(1, 1).unwrap()] = e[1];
        eta[grid.index(2, 0).unwrap()] = e[2];
        let mut vc = grid.constant(c);
        vc[grid.index(1, -1).unwrap()] = v[0];
        vc[grid.index(2, 2).unwrap()] = v[1];
        vc[grid.index(3, 0).unwrap()] = v[2];
        let vn = grid.synthesize(&vc);
        let op = ExpansionOperator::manufactured(&grid, &eta, &vn);
        let got = principal_eig(&op).unwrap();
        let oracle = schrodinger_ground_state(&grid, &conjugated_potential(&grid, &eta, &vn));
        prop_assert!((got.lambda1 - oracle).abs() < 1e-8, "{} vs {oracle}", got.lambda1);
        prop_assert!(got.positive);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn principal_function_is_positive_on_round_ces(which in 0usize..4, r in 1.0f64..6.0) {
        let d = load(ROUND[which], &[]);
        let grid = SphereGrid::new(6);
        let e = principal_eig(&assemble(&d, &grid, &Surface::round(r)).unwrap()).unwrap();
        prop_assert!(e.positive && e.beta.iter().all(|b| *b > 0.0));
    }
}

#[test]
fn constant_potential_gives_its_value() {
    let grid = SphereGrid::new(8);
    for c in [-1.5, 0.0, 0.7, 3.0] {
        let op = ExpansionOperator::manufactured(&grid, &zero_field(&grid), &vec![c; grid.n_nodes()]);
        assert!((principal_eig(&op).unwrap().lambda1 - c).abs() < 1e-8);
    }
}

#[test]
fn linearization_remainder_is_quadratic_on_pg() {
    let d = load("painleve_gullstrand", &[]);
    let grid = SphereGrid::new(6);
    let base = Surface::round(3.0);
    let op = assemble(&d, &grid, &base).unwrap();
    let mut w = zero_field(&grid);
    w[0] = 0.5;
    w[grid.index(1, 0).unwrap()] = 1.0;
    w[grid.index(2, -1).unwrap()] = 0.4;
    let th0 = expansion(&d, &grid, &base).unwrap();
    let lw = op.apply(&w);
    let ratio: Vec<f64> = [1e-2, 1e-3]
        .iter()
        .map(|&t| {
            let tw: Vec<f64> = w.iter().map(|c| c * t).collect();
            let th = fermi_expansion(&d, &grid, &base, &tw).unwrap();
            (0..grid.n_nodes()).fold(0.0f64, |m, q| m.max((th[q] - th0[q] - t * lw[q]).abs())) / (t * t)
        })
        .collect();
    assert!(ratio[0] / ratio[1] < 2.0 && ratio[1] / ratio[0] < 2.0, "{ratio:?}");
}
