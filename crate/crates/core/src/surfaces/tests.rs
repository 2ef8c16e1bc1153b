use super::*;
use crate::geometry::{t2, Data, FnExtrinsic, FnMetric, Sym3, IDENTITY};
use crate::initial_data::catalog_load;
use crate::linalg::{bisect, integrate};
use alloc::collections::BTreeMap;
use alloc::string::ToString;
use core::f64::consts::PI;

fn load(name: &str, kv: &[(&str, f64)]) -> InitialDataSet {
    let p: BTreeMap<_, _> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog_load(name, &p).unwrap()
}

#[test]
fn flat_round_sphere() {
    let d = load("flat_vacuum", &[]);
    let grid = SphereGrid::new(6);
    let geo = surface_geometry(&d, &grid, &Surface::round(2.0)).unwrap();
    for n in &geo.nodes {
        assert!((n.mean_curvature - 1.0).abs() < 1e-12);
        assert!((n.scalar_curvature - 0.5).abs() < 1e-12);
        assert!((n.expansion() - 1.0).abs() < 1e-12);
    }
    assert!((geo.area - 16.0 * PI).abs() < 1e-10);
    assert!((geo.focal_distance() - 1.0).abs() < 1e-12);
}

#[test]
fn constant_k_trace_and_drift() {
    let d = load("flat_constant_k", &[("c", 0.1)]);
    let grid = SphereGrid::new(5);
    let geo = surface_geometry(&d, &grid, &Surface::round(2.0)).unwrap();
    for n in &geo.nodes {
        assert!((n.trace_k_sigma - 0.2).abs() < 1e-13);
        assert!(n.xi[0].abs() < 1e-13 && n.xi[1].abs() < 1e-13);
        assert!((n.expansion() - 0.8).abs() < 1e-12);
    }
    let root = bisect(
        |r| expansion(&d, &grid, &Surface::round(r)).unwrap()[0],
        5.0,
        15.0,
        1e-12,
    )
    .unwrap();
    assert!((root - 10.0).abs() < 1e-9);
}

#[test]
fn painleve_gullstrand_spheres() {
    let d = load("painleve_gullstrand", &[("M", 1.0)]);
    let grid = SphereGrid::new(4);
    for r in [2.0, 3.0, 0.7] {
        let geo = surface_geometry(&d, &grid, &Surface::round(r)).unwrap();
        let q = (2.0 / (r * r * r)).sqrt();
        let oracle = 2.0 * (1.0 / r - q).powi(2);
        for n in &geo.nodes {
            assert!((n.h_minus_k_norm2 - oracle).abs() < 1e-8);
            let closed = d.sphere_expansion(r).unwrap();
            assert!((n.expansion() - closed).abs() < 1e-8);
        }
        let th = geo.expansion();
        assert!(oscillation(&th) < 1e-10);
    }
    let root = bisect(
        |r| expansion(&d, &grid, &Surface::round(r)).unwrap()[0],
        1.0,
        3.0,
        1e-12,
    )
    .unwrap();
    assert!((root - 2.0).abs() < 1e-6);
}

#[test]
fn orientation_flip() {
    let d = load("painleve_gullstrand", &[("M", 1.0)]);
    let grid = SphereGrid::new(4);
    let mut rho = grid.constant(2.5);
    rho[grid.index(2, 1).unwrap()] = 0.05;
    let out = surface_geometry(&d, &grid, &Surface::radial_graph(rho.clone())).unwrap();
    let inn = surface_geometry(
        &d,
        &grid,
        &Surface::radial_graph(rho).with_orientation(Orientation::Inward),
    )
    .unwrap();
    for (a, b) in out.nodes.iter().zip(&inn.nodes) {
        assert!((a.mean_curvature + b.mean_curvature).abs() < 1e-10);
        assert!((b.expansion() - (-a.mean_curvature - a.trace_k_sigma)).abs() < 1e-10);
    }
}

#[test]
fn fermi_offsets() {
    let d = load("flat_vacuum", &[]);
    let grid = SphereGrid::new(4);
    let base = Surface::round(1.0);
    let zero = alloc::vec![0.0; grid.n_coeffs()];
    assert_eq!(
        fermi_expansion(&d, &grid, &base, &zero).unwrap(),
        expansion(&d, &grid, &base).unwrap()
    );
    let th = fermi_expansion(&d, &grid, &base, &grid.constant(0.5)).unwrap();
    assert!(th.iter().all(|t| (t - 4.0 / 3.0).abs() < 1e-12));
    assert!(matches!(
        fermi_expansion(&d, &grid, &base, &grid.constant(0.6)),
        Err(Error::FocalDistance { .. })
    ));
}

#[test]
fn fermi_offset_in_curved_data() {
    // geodesic offset along radial lines: ∫ φ² dr = σ₀
    let d = load("isotropic_schwarzschild", &[("M", 1.0)]);
    let grid = SphereGrid::new(3);
    let (r0, sigma) = (3.0, 0.4);
    let a = |r: f64| (1.0 + 0.5 / r).powi(2);
    let r1 = bisect(|r| integrate(a, r0, r, 8, 8) - sigma, r0, r0 + sigma, 1e-14).unwrap();
    let th = fermi_expansion(&d, &grid, &Surface::round(r0), &grid.constant(sigma)).unwrap();
    let want = d.sphere_expansion(r1).unwrap();
    for t in th {
        assert!((t - want).abs() < 1e-8, "{t} {want}");
    }
}

#[test]
fn axisymmetric_grid_agrees() {
    let d = load("painleve_gullstrand", &[("M", 1.0)]);
    let full = SphereGrid::new(6);
    let axi = SphereGrid::axisymmetric(6);
    let mut rf = full.constant(2.2);
    let mut ra = axi.constant(2.2);
    rf[full.index(2, 0).unwrap()] = 0.1;
    ra[axi.index(2, 0).unwrap()] = 0.1;
    let gf = surface_geometry(&d, &full, &Surface::radial_graph(rf)).unwrap();
    let ga = surface_geometry(&d, &axi, &Surface::radial_graph(ra)).unwrap();
    assert!((gf.area - ga.area).abs() < 1e-10 * gf.area);
    for i in 0..axi.n_lat() {
        let a = ga.nodes[i].expansion();
        let f = gf.nodes[i * full.n_lon()].expansion();
        assert!((a - f).abs() < 1e-10);
    }
}

#[test]
fn general_embedding_matches_radial_graph() {
    let d = load("painleve_gullstrand", &[("M", 1.0)]);
    let grid = SphereGrid::new(8);
    let mut rho = grid.constant(2.5);
    rho[grid.index(1, 1).unwrap()] = 0.02;
    let s = Surface::radial_graph(rho.clone());
    let jets = embedding(&grid, &s, &d).unwrap();
    let comps: [Vec<f64>; 3] = core::array::from_fn(|i| {
        let v: Vec<f64> = jets.iter().map(|j| j.x[i]).collect();
        grid.analyze(&v)
    });
    let e = Surface {
        kind: SurfaceKind::Embedded(comps),
        orientation: Orientation::Outward,
    };
    let a = expansion(&d, &grid, &s).unwrap();
    let b = expansion(&d, &grid, &e).unwrap();
    let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(err < 1e-6, "{err}");
}

#[test]
fn drift_is_tangential_and_divergence_consistent() {
    // k with off-diagonal structure so that ξ ≠ 0
    let ext = FnExtrinsic(|x: &Vec3| -> Sym3 {
        t2(|i, j| 0.1 * (x[i] * x[(j + 1) % 3] + x[j] * x[(i + 1) % 3]) + 0.05 * x[2] * (i == j) as u8 as f64)
    });
    let data = Data(FnMetric(|_: &Vec3| IDENTITY), ext);
    let grid = SphereGrid::new(10);
    let geo = surface_geometry(&data, &grid, &Surface::round(1.3)).unwrap();
    let mut max_xi: f64 = 0.0;
    for n in &geo.nodes {
        // ξ^♯ as ambient vector is orthogonal to ν
        let v: Vec3 = core::array::from_fn(|i| {
            (0..2)
                .map(|a| (0..2).map(|b| n.gamma_inv[a][b] * n.xi[b]).sum::<f64>() * n.tangents[a][i])
                .sum()
        });
        let dot: f64 = (0..3).map(|i| v[i] * n.nu_flat[i]).sum();
        assert!(dot.abs() < 1e-12);
        max_xi = max_xi.max(n.xi_norm2);
    }
    assert!(max_xi > 1e-3);
    // ∫ div ξ dA = 0 on a closed surface
    let integrand: Vec<f64> = geo
        .nodes
        .iter()
        .enumerate()
        .map(|(q, n)| n.div_xi * n.area_element / grid.cos_sin_theta(q).1)
        .collect();
    let total = grid.integrate(&integrand);
    assert!(total.abs() < 1e-6, "{total}");
}

#[test]
fn chart_exit_reported() {
    let d = load("painleve_gullstrand", &[("M", 1.0)]);
    let grid = SphereGrid::new(3);
    assert!(matches!(
        expansion(&d, &grid, &Surface::round(0.1)),
        Err(Error::SurfaceExitsChart { .. })
    ));
}
