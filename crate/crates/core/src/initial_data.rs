//! Catalog of model initial data sets and asymptotic-decay validation.
//!
//! Every catalog entry is conformally flat with a spherically symmetric (or
//! constant) extrinsic curvature, so all fields are given in closed form in
//! Cartesian coordinates together with the radial reduction
//! `g = a(r)² dr² + R(r)² dΩ²`, `k = p dr̂² + q (dθ̂² + dφ̂²)` in orthonormal frames.
//!
//! Sign convention for Painlevé–Gullstrand data: `k_ij = +√(2M/r³)(δ_ij − 3/2 n_i n_j)`,
//! chosen so that the outward-oriented sphere `r = 2M` has `H − tr_Σ k = 0`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{
    self, conformal_ddg, conformal_dg, conformal_g, delta, norm, radial_tensor, t2, Extrinsic,
    Metric, Rank3, Rank4, RadialJet, Sym3, Vec3,
};
use crate::linalg::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Uniform,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Chart {
    Radial {
        r_min: f64,
        r_max: f64,
        n_points: usize,
        spacing: Spacing,
    },
    PeriodicBox {
        side: f64,
        n_points: usize,
    },
    ProductCylinder {
        lmax: usize,
        a: f64,
        b: f64,
        n_s: usize,
    },
}

impl Chart {
    pub fn radial(r_min: f64, r_max: f64, n_points: usize) -> Self {
        Chart::Radial {
            r_min,
            r_max,
            n_points,
            spacing: Spacing::Uniform,
        }
    }

    /// Uniform radial chart whose nodes are cell centers of `[0, r_max]`, so
    /// the innermost cell face sits exactly at the origin.
    pub fn cell_centered(r_max: f64, n_points: usize) -> Self {
        let h = r_max / n_points as f64;
        Chart::radial(0.5 * h, r_max - 0.5 * h, n_points)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidChart(s.to_string()));
        match *self {
            Chart::Radial {
                r_min,
                r_max,
                n_points,
                ..
            } => {
                if !(r_min > 0.0) {
                    return bad("radial chart needs r_min > 0");
                }
                if !(r_max > r_min) || !r_max.is_finite() {
                    return bad("radial chart needs r_max > r_min");
                }
                if n_points < 8 {
                    return bad("chart needs at least 8 points");
                }
            }
            Chart::PeriodicBox { side, n_points } => {
                if !(side > 0.0) || !side.is_finite() {
                    return bad("periodic box needs a positive side length");
                }
                if n_points < 8 {
                    return bad("chart needs at least 8 points");
                }
            }
            Chart::ProductCylinder { a, b, n_s, .. } => {
                if !(b > a) {
                    return bad("cylinder interval must have b > a");
                }
                if n_s < 8 {
                    return bad("chart needs at least 8 points");
                }
            }
        }
        Ok(())
    }

    /// Radial nodes (or box coordinates for periodic charts), strictly increasing.
    pub fn nodes(&self) -> Vec<f64> {
        match *self {
            Chart::Radial {
                r_min,
                r_max,
                n_points,
                spacing,
            } => {
                let n1 = (n_points - 1) as f64;
                (0..n_points)
                    .map(|i| {
                        let t = i as f64 / n1;
                        match spacing {
                            Spacing::Uniform => r_min + t * (r_max - r_min),
                            Spacing::Logarithmic => r_min * (r_max / r_min).powf(t),
                        }
                    })
                    .collect()
            }
            Chart::PeriodicBox { side, n_points } => {
                let h = side / n_points as f64;
                (0..n_points).map(|i| i as f64 * h).collect()
            }
            Chart::ProductCylinder { a, b, n_s, .. } => {
                let h = (b - a) / (n_s - 1) as f64;
                (0..n_s).map(|i| a + i as f64 * h).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Spherical,
    PeriodicHomogeneous,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    FlatVacuum,
    FlatConstantK { c: f64 },
    PainleveGullstrand { m: f64 },
    IsotropicSchwarzschild { m: f64 },
    PeriodicConstantK { c: f64, side: f64 },
    ConformalPerturbed { m: f64, eps: f64 },
}

pub const CATALOG: [&str; 6] = [
    "flat_vacuum",
    "flat_constant_k",
    "painleve_gullstrand",
    "isotropic_schwarzschild",
    "periodic_constant_k",
    "conformal_perturbed",
];

/// Radial reduction at one radius: jets of `a`, `R` and the orthonormal
/// frame components `p = k(r̂, r̂)`, `q = k(θ̂, θ̂)` with first derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub a: RadialJet,
    pub radius: RadialJet,
    pub p: [f64; 2],
    pub q: [f64; 2],
}

impl RadialProfile {
    /// Mean curvature of the outward round sphere at this radius.
    pub fn sphere_mean_curvature(&self) -> f64 {
        2.0 * self.radius[1] / (self.a[0] * self.radius[0])
    }

    /// Expansion `H − tr_Σ k` of the outward round sphere.
    pub fn sphere_expansion(&self) -> f64 {
        self.sphere_mean_curvature() - 2.0 * self.q[0]
    }

    pub fn trace_k(&self) -> f64 {
        self.p[0] + 2.0 * self.q[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSet {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub chart: Chart,
    pub model: Model,
}

fn param(params: &BTreeMap<String, f64>, keys: &[&str], default: Option<f64>) -> Result<f64> {
    for k in keys {
        if let Some(v) = params.get(*k) {
            if !v.is_finite() {
                return Err(Error::ParameterOutOfRange {
                    name: k.to_string(),
                    value: *v,
                    reason: "must be finite",
                });
            }
            return Ok(*v);
        }
    }
    default.ok_or_else(|| Error::ParameterOutOfRange {
        name: keys[0].to_string(),
        value: f64::NAN,
        reason: "required parameter missing",
    })
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::ParameterOutOfRange {
            name: name.to_string(),
            value: v,
            reason: "must be positive",
        })
    }
}

/// Loads a catalog entry with its default chart.
pub fn catalog_load(name: &str, params: &BTreeMap<String, f64>) -> Result<InitialDataSet> {
    let allowed: &[&str] = match name {
        "flat_vacuum" => &[],
        "flat_constant_k" => &["c"],
        "painleve_gullstrand" | "isotropic_schwarzschild" => &["M", "m"],
        "periodic_constant_k" => &["c", "L", "side"],
        "conformal_perturbed" => &["M", "m", "eps", "epsilon"],
        _ => return Err(Error::UnknownDataSet(name.to_string())),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::UnknownParameter(k.clone()));
    }
    let (model, chart) = match name {
        "flat_vacuum" => (Model::FlatVacuum, Chart::cell_centered(20.0, 400)),
        "flat_constant_k" => {
            let c = param(params, &["c"], Some(0.1))?;
            (Model::FlatConstantK { c }, Chart::cell_centered(20.0, 400))
        }
        "painleve_gullstrand" => {
            let m = positive("M", param(params, &["M", "m"], Some(1.0))?)?;
            (
                Model::PainleveGullstrand { m },
                Chart::radial(0.2 * m, 20.0 * m, 400),
            )
        }
        "isotropic_schwarzschild" => {
            let m = positive("M", param(params, &["M", "m"], Some(1.0))?)?;
            (
                Model::IsotropicSchwarzschild { m },
                Chart::radial(0.2 * m, 40.0 * m, 400),
            )
        }
        "periodic_constant_k" => {
            let c = param(params, &["c"], Some(0.1))?;
            let side = positive("L", param(params, &["L", "side"], Some(1.0))?)?;
            (
                Model::PeriodicConstantK { c, side },
                Chart::PeriodicBox { side, n_points: 64 },
            )
        }
        _ => {
            let m = positive("M", param(params, &["M", "m"], Some(1.0))?)?;
            let eps = param(params, &["eps", "epsilon"], Some(0.05))?;
            (
                Model::ConformalPerturbed { m, eps },
                Chart::radial(0.2 * m, 40.0 * m, 400),
            )
        }
    };
    InitialDataSet::new(name, params.clone(), chart, model)
}

impl InitialDataSet {
    pub fn new(
        name: &str,
        params: BTreeMap<String, f64>,
        chart: Chart,
        model: Model,
    ) -> Result<Self> {
        chart.validate()?;
        let periodic_model = matches!(model, Model::PeriodicConstantK { .. });
        let periodic_chart = matches!(chart, Chart::PeriodicBox { .. });
        if periodic_model != periodic_chart {
            return Err(Error::InvalidChart(format!(
                "{name} requires a {} chart",
                if periodic_model { "periodic box" } else { "radial" }
            )));
        }
        Ok(Self {
            name: name.to_string(),
            params,
            chart,
            model,
        })
    }

    pub fn with_chart(mut self, chart: Chart) -> Result<Self> {
        let name = self.name.clone();
        self.chart = chart;
        Self::new(&name, self.params, self.chart, self.model)
    }

    pub fn symmetry(&self) -> Symmetry {
        match self.model {
            Model::PeriodicConstantK { .. } => Symmetry::PeriodicHomogeneous,
            _ => Symmetry::Spherical,
        }
    }

    /// Periodic fixtures violate asymptotic flatness and run in test mode.
    pub fn test_mode(&self) -> bool {
        self.symmetry() == Symmetry::PeriodicHomogeneous
    }

    /// Mass parameter for black-hole entries.
    pub fn mass(&self) -> Option<f64> {
        match self.model {
            Model::PainleveGullstrand { m }
            | Model::IsotropicSchwarzschild { m }
            | Model::ConformalPerturbed { m, .. } => Some(m),
            _ => None,
        }
    }

    /// Jet of the conformal factor `φ` with `g = φ⁴ δ`.
    fn phi(&self, r: f64) -> RadialJet {
        match self.model {
            Model::IsotropicSchwarzschild { m } => {
                [1.0 + 0.5 * m / r, -0.5 * m / (r * r), m / (r * r * r)]
            }
            Model::ConformalPerturbed { m, eps } => {
                let e = (-r * r).exp();
                let bump = [
                    r * r * e,
                    (2.0 * r - 2.0 * r * r * r) * e,
                    (2.0 - 10.0 * r * r + 4.0 * r.powi(4)) * e,
                ];
                [
                    1.0 + 0.5 * m / r + eps * bump[0],
                    -0.5 * m / (r * r) + eps * bump[1],
                    m / (r * r * r) + eps * bump[2],
                ]
            }
            _ => [1.0, 0.0, 0.0],
        }
    }

    /// Jet of `Ψ = φ⁴`.
    fn psi(&self, r: f64) -> RadialJet {
        let [p, dp, ddp] = self.phi(r);
        [
            p.powi(4),
            4.0 * p.powi(3) * dp,
            12.0 * p * p * dp * dp + 4.0 * p.powi(3) * ddp,
        ]
    }

    /// Coefficients `[A, A']`, `[B, B']` of `k = A δ + B x xᵀ`.
    fn k_coefficients(&self, r: f64) -> ([f64; 2], [f64; 2]) {
        match self.model {
            Model::FlatConstantK { c } | Model::PeriodicConstantK { c, .. } => {
                ([c, 0.0], [0.0, 0.0])
            }
            Model::PainleveGullstrand { m } => {
                let c = (2.0 * m).sqrt() * r.powf(-1.5);
                let b = -1.5 * c / (r * r);
                ([c, -1.5 * c / r], [b, -3.5 * b / r])
            }
            _ => ([0.0, 0.0], [0.0, 0.0]),
        }
    }

    /// Radial reduction; errors on periodic data.
    pub fn radial_profile(&self, r: f64) -> Result<RadialProfile> {
        if self.symmetry() != Symmetry::Spherical {
            return Err(Error::NotApplicable(format!(
                "{} has no radial profile",
                self.name
            )));
        }
        let [p, dp, ddp] = self.phi(r);
        let a = [p * p, 2.0 * p * dp, 2.0 * (dp * dp + p * ddp)];
        let radius = [
            r * p * p,
            p * p + 2.0 * r * p * dp,
            4.0 * p * dp + 2.0 * r * (dp * dp + p * ddp),
        ];
        let psi = self.psi(r);
        let (ka, kb) = self.k_coefficients(r);
        let num = ka[0] + kb[0] * r * r;
        let dnum = ka[1] + kb[1] * r * r + 2.0 * kb[0] * r;
        let pr = [
            num / psi[0],
            (dnum * psi[0] - num * psi[1]) / (psi[0] * psi[0]),
        ];
        let q = [
            ka[0] / psi[0],
            (ka[1] * psi[0] - ka[0] * psi[1]) / (psi[0] * psi[0]),
        ];
        Ok(RadialProfile {
            a,
            radius,
            p: pr,
            q,
        })
    }

    /// `(P, T) = (k_xx, k_yy + k_zz)` for periodic-homogeneous data.
    pub fn periodic_profile(&self, _x: f64) -> Result<(f64, f64)> {
        match self.model {
            Model::PeriodicConstantK { c, .. } => Ok((c, 2.0 * c)),
            _ => Err(Error::NotApplicable(format!(
                "{} is not periodic",
                self.name
            ))),
        }
    }

    /// `max |tr_g k|` over the chart (the bound `μ₁` on capillary fields).
    pub fn max_trace_k(&self) -> f64 {
        match self.symmetry() {
            Symmetry::Spherical => self
                .chart
                .nodes()
                .iter()
                .map(|&r| self.radial_profile(r).map(|p| p.trace_k().abs()).unwrap_or(0.0))
                .fold(0.0, f64::max),
            _ => self
                .periodic_profile(0.0)
                .map(|(p, t)| (p + t).abs())
                .unwrap_or(0.0),
        }
    }

    /// Expansion of the outward round sphere `r` (spherical data).
    pub fn sphere_expansion(&self, r: f64) -> Result<f64> {
        Ok(self.radial_profile(r)?.sphere_expansion())
    }
}

impl Metric for InitialDataSet {
    fn g(&self, x: &Vec3) -> Sym3 {
        if self.test_mode() {
            return geometry::IDENTITY;
        }
        conformal_g(x, self.psi(norm(x)))
    }

    fn dg(&self, x: &Vec3) -> Rank3 {
        if self.test_mode() {
            return [[[0.0; 3]; 3]; 3];
        }
        conformal_dg(x, self.psi(norm(x)))
    }

    fn ddg(&self, x: &Vec3) -> Rank4 {
        if self.test_mode() {
            return [[[[0.0; 3]; 3]; 3]; 3];
        }
        conformal_ddg(x, self.psi(norm(x)))
    }
}

impl Extrinsic for InitialDataSet {
    fn k(&self, x: &Vec3) -> Sym3 {
        if let Model::PeriodicConstantK { c, .. } = self.model {
            return t2(|i, j| c * delta(i, j));
        }
        let (a, b) = self.k_coefficients(norm(x));
        radial_tensor(x, a, b).0
    }

    fn dk(&self, x: &Vec3) -> Rank3 {
        if self.test_mode() {
            return [[[0.0; 3]; 3]; 3];
        }
        let (a, b) = self.k_coefficients(norm(x));
        radial_tensor(x, a, b).1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayEntry {
    pub quantity: &'static str,
    /// Measured exponent `α` in `|q| ~ r^{-α}`; `None` when identically zero.
    pub exponent: Option<f64>,
    pub target: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub entries: Vec<DecayEntry>,
    pub pass: bool,
    pub nodes_used: usize,
}

impl DecayReport {
    pub fn failing(&self) -> Vec<&'static str> {
        self.entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| e.quantity)
            .collect()
    }
}

const DECAY_SLACK: f64 = 0.2;
const ZERO_FLOOR: f64 = 1e-12;

/// Log-log least-squares decay exponents over the outer quarter of the chart.
pub fn validate_decay(data: &InitialDataSet) -> Result<DecayReport> {
    let (r_min, r_max) = match data.chart {
        Chart::Radial { r_min, r_max, .. } => (r_min, r_max),
        _ => {
            return Err(Error::NotApplicable(
                "decay validation needs a radial chart".to_string(),
            ))
        }
    };
    let cut = r_min + 0.75 * (r_max - r_min);
    let radii: Vec<f64> = data.chart.nodes().into_iter().filter(|&r| r >= cut).collect();
    if radii.len() < 16 {
        return Err(Error::NotApplicable(format!(
            "outer region has {} nodes, need 16",
            radii.len()
        )));
    }
    let dir = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
    let mut series: [Vec<f64>; 4] = Default::default();
    for &r in &radii {
        let x = [r * dir[0], r * dir[1], r * dir[2]];
        let g = data.g(&x);
        let k = data.k(&x);
        let frob = |m: &Sym3, sub: bool| {
            geometry::sum33(|i, j| {
                let v = m[i][j] - if sub { delta(i, j) } else { 0.0 };
                v * v
            })
            .sqrt()
        };
        series[0].push(frob(&g, true));
        series[1].push(geometry::scalar_curvature(data, &x)?.abs());
        series[2].push(frob(&k, false));
        series[3].push((k[0][0] + k[1][1] + k[2][2]).abs());
    }
    let names = ["g - delta", "scalar curvature", "k", "trace k"];
    let targets = [1.0, 4.0, 2.0, 3.0];
    let logr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let entries: Vec<DecayEntry> = (0..4)
        .map(|q| {
            let vals = &series[q];
            let peak = vals.iter().fold(0.0f64, |m, v| m.max(*v));
            let exponent = if peak < ZERO_FLOOR {
                None
            } else {
                let (xs, ys): (Vec<f64>, Vec<f64>) = logr
                    .iter()
                    .zip(vals)
                    .filter(|(_, v)| **v > 0.0)
                    .map(|(x, v)| (*x, v.ln()))
                    .unzip();
                Some(-linear_fit(&xs, &ys).0)
            };
            let pass = exponent.is_none_or(|e| e >= targets[q] - DECAY_SLACK);
            DecayEntry {
                quantity: names[q],
                exponent,
                target: targets[q],
                pass,
            }
        })
        .collect();
    let pass = entries.iter().all(|e| e.pass);
    Ok(DecayReport {
        entries,
        pass,
        nodes_used: radii.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{constraints, FiniteDifference};

    fn load(name: &str, kv: &[(&str, f64)]) -> InitialDataSet {
        let p = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        catalog_load(name, &p).unwrap()
    }

    #[test]
    fn catalog_errors() {
        let p = BTreeMap::new();
        assert!(matches!(catalog_load("kerr", &p), Err(Error::UnknownDataSet(_))));
        let mut bad = BTreeMap::new();
        bad.insert("M".to_string(), -1.0);
        assert!(matches!(
            catalog_load("painleve_gullstrand", &bad),
            Err(Error::ParameterOutOfRange { .. })
        ));
        let mut extra = BTreeMap::new();
        extra.insert("q".to_string(), 1.0);
        assert!(catalog_load("flat_vacuum", &extra).is_err());
    }

    #[test]
    fn flat_constant_trace() {
        let d = load("flat_constant_k", &[("c", 0.1)]);
        for x in [[1.0, 0.0, 0.0], [3.0, -2.0, 0.5]] {
            let c = constraints(&d, &x).unwrap();
            assert!((c.trace_k - 0.3).abs() < 1e-15);
            assert!((c.mu - 0.03).abs() < 1e-14);
        }
    }

    #[test]
    fn painleve_gullstrand_is_vacuum() {
        let d = load("painleve_gullstrand", &[("M", 1.0)]);
        for &r in &[0.2, 0.5, 2.0, 3.0, 10.0, 20.0] {
            let x = [r * 0.6, r * 0.0, r * 0.8];
            let c = constraints(&d, &x).unwrap();
            let scale = 1.0 + c.k_norm2;
            assert!(c.mu.abs() < 1e-8 * scale, "mu {} at r {r}", c.mu);
            assert!(c.j_norm < 1e-8 * scale, "J {} at r {r}", c.j_norm);
            assert!(c.dec_margin >= -1e-10 * scale);
        }
        let p = d.radial_profile(2.0).unwrap();
        assert!(p.sphere_expansion().abs() < 1e-15);
        let mu1 = d.max_trace_k();
        assert!((mu1 - 1.5 * (2.0f64 / 0.008).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn isotropic_schwarzschild_is_vacuum_and_jets_agree() {
        let d = load("isotropic_schwarzschild", &[("M", 1.0)]);
        let x = [0.4, -1.1, 0.9];
        let c = constraints(&d, &x).unwrap();
        assert!(c.mu.abs() < 1e-10 && c.j_norm == 0.0);
        let a = geometry::christoffel(&d, &x).unwrap();
        let b = geometry::christoffel(&FiniteDifference(&d), &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((a[i][j][k] - b[i][j][k]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn conformal_perturbed_jets_agree() {
        let d = load("conformal_perturbed", &[("M", 1.0), ("eps", 0.2)]);
        let x = [0.5, 0.7, -0.3];
        let ra = geometry::scalar_curvature(&d, &x).unwrap();
        let rb = geometry::scalar_curvature(&FiniteDifference(&d), &x).unwrap();
        assert!((ra - rb).abs() < 1e-6 * (1.0 + ra.abs()), "{ra} {rb}");
        assert!(ra.abs() > 1e-3);
    }

    #[test]
    fn radial_profile_matches_tensor_components() {
        for d in [
            load("painleve_gullstrand", &[("M", 1.3)]),
            load("isotropic_schwarzschild", &[("M", 0.7)]),
            load("conformal_perturbed", &[("M", 1.0), ("eps", 0.3)]),
        ] {
            let r = 1.7;
            let x = [r, 0.0, 0.0];
            let p = d.radial_profile(r).unwrap();
            let g = d.g(&x);
            let k = d.k(&x);
            assert!((p.a[0] * p.a[0] - g[0][0]).abs() < 1e-14);
            assert!((p.radius[0] * p.radius[0] / (r * r) - g[1][1]).abs() < 1e-13);
            assert!((p.p[0] - k[0][0] / g[0][0]).abs() < 1e-14);
            assert!((p.q[0] - k[1][1] / g[1][1]).abs() < 1e-14);
            let h = 1e-5;
            let pp = d.radial_profile(r + h).unwrap();
            let pm = d.radial_profile(r - h).unwrap();
            assert!(((pp.q[0] - pm.q[0]) / (2.0 * h) - p.q[1]).abs() < 1e-7);
            assert!(((pp.p[0] - pm.p[0]) / (2.0 * h) - p.p[1]).abs() < 1e-7);
            assert!(((pp.radius[1] - pm.radius[1]) / (2.0 * h) - p.radius[2]).abs() < 1e-6);
            assert!(((pp.a[1] - pm.a[1]) / (2.0 * h) - p.a[2]).abs() < 1e-6);
        }
    }

    #[test]
    fn decay_reports() {
        let flat = validate_decay(&load("flat_vacuum", &[])).unwrap();
        assert!(flat.pass);
        assert!(flat.entries.iter().all(|e| e.exponent.is_none()));

        let iso = validate_decay(&load("isotropic_schwarzschild", &[("M", 1.0)])).unwrap();
        assert!(iso.pass, "{iso:?}");
        let e = iso.entries[0].exponent.unwrap();
        assert!((e - 1.0).abs() < 0.1, "{e}");

        let ck = validate_decay(&load("flat_constant_k", &[("c", 0.1)])).unwrap();
        assert!(!ck.pass);
        assert_eq!(ck.failing(), ["k", "trace k"]);
        assert!(ck.entries[2].exponent.unwrap().abs() < 1e-8);

        let pg = validate_decay(&load("painleve_gullstrand", &[("M", 1.0)])).unwrap();
        let e = pg.entries[2].exponent.unwrap();
        assert!((e - 1.5).abs() < 1e-6);
        assert!(!pg.pass);

        let per = load("periodic_constant_k", &[("c", 0.1), ("L", 1.0)]);
        assert!(per.test_mode());
        assert!(matches!(validate_decay(&per), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn chart_validation() {
        assert!(Chart::radial(0.0, 1.0, 10).validate().is_err());
        assert!(Chart::radial(0.1, 1.0, 7).validate().is_err());
        let c = Chart::Radial {
            r_min: 0.1,
            r_max: 10.0,
            n_points: 9,
            spacing: Spacing::Logarithmic,
        };
        let n = c.nodes();
        assert!(n.windows(2).all(|w| w[1] > w[0]));
        assert!((n[8] - 10.0).abs() < 1e-12);
        let cc = Chart::cell_centered(2.0, 8);
        assert!((cc.nodes()[0] - 0.125).abs() < 1e-15);
    }
}
