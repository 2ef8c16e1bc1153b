mod common;

use common::{load, unit};
use horizonlab_core::geometry::{christoffel, constraints, scalar_curvature, Extrinsic, Metric, Rank3, Sym3, Vec3};
use horizonlab_core::initial_data::{validate_decay, InitialDataSet};
use proptest::prelude::*;

/// The same metric with only `g` exposed, so every derivative comes from
/// the finite-difference fallback.
struct GOnly<'a>(&'a InitialDataSet);

impl Metric for GOnly<'_> {
    fn g(&self, x: &Vec3) -> Sym3 {
        self.0.g(x)
    }
}

/// `k` scaled by a constant on the same metric.
struct Scaled<'a>(&'a InitialDataSet, f64);

impl Metric for Scaled<'_> {
    fn g(&self, x: &Vec3) -> Sym3 {
        self.0.g(x)
    }
    fn dg(&self, x: &Vec3) -> Rank3 {
        self.0.dg(x)
    }
    fn ddg(&self, x: &Vec3) -> [Rank3; 3] {
        self.0.ddg(x)
    }
}

impl Extrinsic for Scaled<'_> {
    fn k(&self, x: &Vec3) -> Sym3 {
        let k = self.0.k(x);
        core::array::from_fn(|i| core::array::from_fn(|j| self.1 * k[i][j]))
    }
    fn dk(&self, x: &Vec3) -> Rank3 {
        let dk = self.0.dk(x);
        core::array::from_fn(|l| core::array::from_fn(|i| core::array::from_fn(|j| self.1 * dk[l][i][j])))
    }
}

const RADIAL: [&str; 5] = [
    "flat_vacuum",
    "flat_constant_k",
    "painleve_gullstrand",
    "isotropic_schwarzschild",
    "conformal_perturbed",
];

fn point() -> impl Strategy<Value = Vec3> {
    (0.6f64..6.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_filter_map("direction", |(r, a, b, c)| {
        let n = (a * a + b * b + c * c).sqrt();
        (n > 0.1).then(|| {
            let u = unit([a, b, c]);
            [r * u[0], r * u[1], r * u[2]]
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_and_difference_paths_agree(which in 0usize..5, x in point()) {
        let d = load(RADIAL[which], &[]);
        let ga = christoffel(&d, &x).unwrap();
        let gf = christoffel(&GOnly(&d), &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    prop_assert!((ga[i][j][k] - gf[i][j][k]).abs() < 1e-6);
                }
            }
        }
        let ra = scalar_curvature(&d, &x).unwrap();
        let rf = scalar_curvature(&GOnly(&d), &x).unwrap();
        prop_assert!((ra - rf).abs() < 1e-6, "{}: {ra} vs {rf}", d.name);
    }

    #[test]
    fn constraints_are_quadratic_in_k(which in 0usize..5, x in point()) {
        let d = load(RADIAL[which], &[]);
        let one = constraints(&Scaled(&d, 1.0), &x).unwrap();
        let two = constraints(&Scaled(&d, 2.0), &x).unwrap();
        // μ(2k) − μ(k) = 3/2 ((tr k)² − |k|²),  J(2k) − J(k) = J(k)
        let dmu = 1.5 * (one.trace_k * one.trace_k - one.k_norm2);
        prop_assert!((two.mu - one.mu - dmu).abs() < 1e-9 * (1.0 + dmu.abs()));
        for i in 0..3 {
            prop_assert!((two.j[i] - 2.0 * one.j[i]).abs() < 1e-9);
        }
        prop_assert_eq!(two.scalar_curvature, one.scalar_curvature);
    }

    #[test]
    fn vacuum_entries_meet_the_energy_condition(which in 0usize..3, x in point()) {
        let name = ["flat_vacuum", "painleve_gullstrand", "isotropic_schwarzschild"][which];
        let c = constraints(&load(name, &[]), &x).unwrap();
        prop_assert!(c.dec_margin >= -1e-10, "{name}: {}", c.dec_margin);
        prop_assert!(c.mu.abs() < 1e-8 && c.j_norm < 1e-8);
    }
}

#[test]
fn decay_validation_separates_fixtures() {
    for name in ["flat_vacuum", "isotropic_schwarzschild", "conformal_perturbed"] {
        let rep = validate_decay(&load(name, &[])).unwrap();
        assert!(rep.failing().is_empty(), "{name}: {:?}", rep.failing());
    }
    let pg = validate_decay(&load("painleve_gullstrand", &[])).unwrap();
    assert!(!pg.failing().is_empty());
    let ck = validate_decay(&load("flat_constant_k", &[])).unwrap();
    assert!(!ck.failing().is_empty());
}
