use super::*;
use crate::initial_data::catalog_load;
use alloc::collections::BTreeMap;

fn load(name: &str, kv: &[(&str, f64)]) -> InitialDataSet {
    let p: BTreeMap<_, _> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog_load(name, &p).unwrap()
}

fn gaussian(r: f64) -> [f64; 3] {
    let e = (-r * r).exp();
    [e, -2.0 * r * e, (4.0 * r * r - 2.0) * e]
}

#[test]
fn vacuum_zero_solution() {
    let pr = JangProblem::new(load("flat_vacuum", &[]), 0.5).unwrap();
    let n = pr.nodes().len();
    assert!(residual(&pr, &vec![0.0; n]).unwrap().iter().all(|r| *r == 0.0));
    let sol = solve(&pr, &vec![0.0; n]).unwrap();
    assert!(sol.converged && sol.newton_iters <= 1);
    assert_eq!(max_abs(&sol.f), 0.0);
}

#[test]
fn periodic_constant_solution() {
    let c = 0.1;
    let pr = JangProblem::new(load("periodic_constant_k", &[("c", c)]), 0.5).unwrap();
    let n = pr.nodes().len();
    let exact = vec![-3.0 * c / 0.5; n];
    assert!(max_abs(&residual(&pr, &exact).unwrap()) < 1e-15);
    let sol = solve(&pr, &vec![0.0; n]).unwrap();
    assert!(sol.converged);
    assert!(sol.f.iter().all(|f| (f + 0.6).abs() < 1e-10));
    assert!(sol.u().iter().all(|u| (u + 0.3).abs() < 1e-10));
}

#[test]
fn reduced_and_tensor_paths_agree() {
    let fixtures = [
        load("flat_constant_k", &[("c", 0.1)]),
        load("painleve_gullstrand", &[]),
        load("isotropic_schwarzschild", &[]),
        load("conformal_perturbed", &[]),
        load("periodic_constant_k", &[]),
    ];
    let mut seed = 7u64;
    let mut rnd = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64
    };
    for d in &fixtures {
        for _ in 0..10 {
            let (a, b, c) = (rnd() - 0.5, 2.0 * rnd() - 1.0, 0.5 + rnd());
            let r = 0.5 + 3.0 * rnd();
            // f = a r² + b sin(c r)
            let jet = [a * r * r + b * (c * r).sin(), 2.0 * a * r + b * c * (c * r).cos(), 2.0 * a - b * c * c * (c * r).sin()];
            let dir = [rnd() - 0.5, rnd() - 0.5, rnd() - 0.5];
            let nd = crate::geometry::norm(&dir);
            let x: Vec3 = if d.test_mode() { [r, 0.3, -0.2] } else { core::array::from_fn(|i| r * dir[i] / nd) };
            let s = 0.3;
            let red = reduced_residual(d, s, r, jet, 0.1).unwrap();
            let ten = tensor_residual(d, s, &x, jet, 0.1).unwrap();
            assert!((red - ten).abs() < 1e-8 * (1.0 + red.abs()), "{}: {red} vs {ten}", d.name);
        }
    }
}

fn mms_error(n: usize) -> f64 {
    let data = load("flat_vacuum", &[]).with_chart(Chart::cell_centered(5.0, n)).unwrap();
    let s = 0.5;
    let src = manufactured_source(&data, s, gaussian).unwrap();
    let pr = JangProblem::new(data, s).unwrap().with_source(src);
    let nodes = pr.nodes();
    let sol = solve(&pr, &vec![0.0; nodes.len()]).unwrap();
    assert!(sol.converged);
    nodes.iter().zip(&sol.f).fold(0.0f64, |m, (r, f)| m.max((f - gaussian(*r)[0]).abs()))
}

#[test]
fn manufactured_solution_second_order() {
    let data = load("flat_vacuum", &[]);
    for r in [0.3, 1.0, 2.5] {
        let src = reduced_residual(&data, 0.5, r, gaussian(r), 0.0).unwrap();
        assert!(reduced_residual(&data, 0.5, r, gaussian(r), src).unwrap().abs() <= 1e-10);
    }
    let e: Vec<f64> = [40, 80, 160].iter().map(|&n| mms_error(n)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.2..=4.8).contains(&ratio), "{e:?}");
    }
}

#[test]
fn schedule_parsing() {
    let s: Schedule = "geo:1:0.6:1e-3".parse().unwrap();
    assert_eq!(s.len(), 14);
    assert!((s.values()[13] - 0.6f64.powi(13)).abs() < 1e-15);
    let l: Schedule = "list:0.5,0.25,0.125".parse().unwrap();
    assert_eq!(l.values(), &[0.5, 0.25, 0.125]);
    for bad in ["geo:1:0.6", "geo:1:1.5:1e-3", "list:0.5,0.6", "list:2,1", "foo:1", "list:a", ""] {
        assert!(matches!(bad.parse::<Schedule>(), Err(Error::InvalidSchedule(_))), "{bad}");
    }
}

#[test]
fn periodic_continuation_exact() {
    let c = 0.1;
    let pr = JangProblem::new(load("periodic_constant_k", &[("c", c)]), 1.0).unwrap();
    let run = continuation(&pr, &"list:0.5,0.25,0.125".parse().unwrap()).unwrap();
    for st in &run.steps {
        assert!(st.f.iter().all(|f| (f + 3.0 * c / st.s).abs() < 1e-10));
        assert!(st.u().iter().all(|u| (u + 3.0 * c).abs() < 1e-10));
    }
    // gap bound attained with equality
    let g = gap_check(&run, 0, 1).unwrap();
    assert!(!g.upper.applicable());
    match g.lower {
        CaseCheck::Checked { lhs, bound, holds, .. } => {
            assert!(holds);
            assert!((lhs - bound).abs() < 1e-12);
        }
        CaseCheck::NotApplicable => panic!("lower case applies"),
    }
    let m = monotonicity_check(&run).unwrap();
    assert!(m.holds && m.max_excess.abs() < 1e-12);
}

#[test]
fn vacuum_continuation_trivial() {
    let pr = JangProblem::new(load("flat_vacuum", &[]), 1.0).unwrap();
    let run = continuation(&pr, &"geo:1:0.5:0.1".parse().unwrap()).unwrap();
    for st in &run.steps {
        assert_eq!(max_abs(&st.u()), 0.0);
    }
    assert!(run.gaps.iter().all(|g| !g.upper.applicable() && !g.lower.applicable()));
}

#[test]
fn painleve_gullstrand_short_run() {
    let pr = JangProblem::new(load("painleve_gullstrand", &[]), 1.0).unwrap();
    let run = continuation(&pr, &"geo:1:0.6:1e-2".parse().unwrap()).unwrap();
    for st in &run.steps {
        assert!(st.converged);
        assert!(!st.monitors.bound_violated, "{:?}", st.monitors);
    }
    assert!(run.gaps.iter().all(|g| g.holds()), "{:?}", run.gaps);
    assert!(run.monotonicity.as_ref().unwrap().holds);
}
