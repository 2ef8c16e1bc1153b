mod common;

use common::{load, pg_run};
use horizonlab_core::blowdown::{classify, default_reference, extract, level_ces_deviation, levelset_residuals, NodeLabel};
use horizonlab_core::jang::{continuation, JangProblem, Schedule};
use horizonlab_core::structure::{balance_check, partition, SegmentKind};
use proptest::prelude::*;

#[test]
fn pg_limit_invariants() {
    let (d, run) = pg_run(400, 1e-3);
    let u = extract(&d, &run).unwrap();
    assert!(u.u.iter().all(|v| v.abs() <= u.mu1 + 1e-6));
    assert!(u.sign_partition_holds(1e-6));
    let c = classify(&run, &u, &default_reference(u.nodes.len(), 16)).unwrap();
    // nodes classified as untouched by blowup carry u ≈ 0
    let off: f64 = c
        .labels
        .iter()
        .zip(&u.u)
        .filter(|(l, _)| matches!(l, NodeLabel::NoBlowup))
        .fold(0.0, |m, (_, v)| m.max(v.abs()));
    assert!(off <= u.convergence_gap + 1e-6, "{off} vs gap {}", u.convergence_gap);
    // graphical maximal domains are flat
    assert!(!c.domains.is_empty());
    for &(a, b) in &c.domains {
        let (lo, hi) = u.u[a..=b].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |m, v| (m.0.min(*v), m.1.max(*v)));
        assert!(hi - lo < 1e-6, "oscillation {}", hi - lo);
    }
    // level sets of u are constant-expansion spheres: |θ(r) − u(r)| ≤ C h
    // only level sets inside the blowup region are constant-expansion
    // spheres; outside it u is the decaying residue of u_s
    let skip = |c: &horizonlab_core::blowdown::ClassificationMap| -> Vec<bool> {
        let mut b = c.interface_band(2);
        for (i, l) in c.labels.iter().enumerate() {
            b[i] |= matches!(l, NodeLabel::NoBlowup);
        }
        b
    };
    let dev = level_ces_deviation(&d, &u, &skip(&c)).unwrap();
    assert!(dev.nodes > 0 && dev.constant < 1.0, "{dev:?}");
    let (d2, run2) = pg_run(800, 5e-4);
    let u2 = extract(&d2, &run2).unwrap();
    let c2 = classify(&run2, &u2, &default_reference(u2.nodes.len(), 16)).unwrap();
    let dev2 = level_ces_deviation(&d2, &u2, &skip(&c2)).unwrap();
    assert!(dev2.max_deviation < dev.max_deviation && dev2.constant < 1.0, "{dev2:?}");
    // the weighted residual vanishes wherever it is defined up to the same error
    let res = levelset_residuals(&d, &u).unwrap();
    assert!(res.iter().any(|r| r.is_none()));
}

#[test]
fn pg_structure_tiles_and_balances() {
    let (d, run) = pg_run(800, 5e-4);
    let u = extract(&d, &run).unwrap();
    let c = classify(&run, &u, &default_reference(u.nodes.len(), 16)).unwrap();
    let reps = partition(&u, &c, &d).unwrap();
    assert_eq!(reps.len(), 1);
    let r = &reps[0];
    let n = u.nodes.len();
    assert!(r.tiled && !r.low_confidence && r.unresolved_fraction <= 0.2);
    assert_eq!(r.segments.iter().map(|s| s.len(n)).sum::<usize>(), r.node_count);
    assert!(r.max_on_domain);
    assert!(r.domains().count() >= 1);
    for s in &r.segments {
        if let SegmentKind::FoliationBand { monotone, .. } = s.kind {
            assert!(monotone);
        }
    }
    let h = u.nodes[1] - u.nodes[0];
    for i in &r.interfaces {
        assert!(i.deviation <= r.interface_constant * h + 1e-12);
    }
    let bal = balance_check(r, &u, &u.eta, &d).unwrap();
    assert!(bal.relative <= 0.03, "{bal:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn periodic_box_is_a_single_domain(c in prop_oneof![-0.4f64..-0.05, 0.05f64..0.4]) {
        let d = load("periodic_constant_k", &[("c", c)]);
        let run = continuation(&JangProblem::new(d.clone(), 1.0).unwrap(), &Schedule::geometric(1.0, 0.6, 1e-3).unwrap()).unwrap();
        let u = extract(&d, &run).unwrap();
        prop_assert!(u.u.iter().all(|v| (v + 3.0 * c).abs() < 1e-10));
        let cm = classify(&run, &u, &default_reference(u.nodes.len(), 8)).unwrap();
        let reps = partition(&u, &cm, &d).unwrap();
        prop_assert_eq!(reps.len(), 1);
        prop_assert_eq!(reps[0].segments.len(), 1);
        match reps[0].segments[0].kind {
            SegmentKind::MaximalDomain { theta, .. } => prop_assert!((theta + 3.0 * c).abs() < 1e-10),
            ref k => prop_assert!(false, "unexpected segment {k:?}"),
        }
        let bal = balance_check(&reps[0], &u, &u.eta, &d).unwrap();
        prop_assert!(bal.residual.abs() < 1e-10);
    }
}
