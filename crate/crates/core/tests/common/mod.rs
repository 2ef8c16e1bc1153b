#![allow(dead_code)]

use std::collections::BTreeMap;

use horizonlab_core::initial_data::{catalog_load, Chart, InitialDataSet};
use horizonlab_core::jang::{continuation, ContinuationRun, JangProblem, Schedule};

pub fn load(name: &str, params: &[(&str, f64)]) -> InitialDataSet {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog_load(name, &p).unwrap()
}

/// Painlevé–Gullstrand (M = 1) on `radial(0.2, 20, n)`.
pub fn pg(n: usize) -> InitialDataSet {
    load("painleve_gullstrand", &[]).with_chart(Chart::radial(0.2, 20.0, n)).unwrap()
}

pub fn pg_run(n: usize, s_min: f64) -> (InitialDataSet, ContinuationRun) {
    let d = pg(n);
    let run = continuation(
        &JangProblem::new(d.clone(), 1.0).unwrap(),
        &Schedule::geometric(1.0, 0.6, s_min).unwrap(),
    )
    .unwrap();
    (d, run)
}

pub fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}
