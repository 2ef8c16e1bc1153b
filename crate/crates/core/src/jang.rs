//! Regularised Jang equation `H(f) − K(f) = s f + F` in spherical or
//! periodic-homogeneous symmetry.
//!
//! The radial problem is discretised in conservative finite-volume form:
//! with `η = D/√(1+D²)`, `D = f′/a`, the mean curvature of the graph is
//! `(R² η)′/(a R²)` and `K(f) = tr k − p η²` with `p = k(e_r, e_r)`. Face
//! fluxes `R² η` are differenced over exact cell volumes `∫ a R² dr`. For
//! `h |p| ≤ 2` the scheme is monotone, so the discrete solutions obey the
//! same maximum-principle bounds as the continuous ones.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{sum33, Connection, Extrinsic, Vec3};
use crate::initial_data::{Chart, InitialDataSet, Symmetry};
use crate::linalg::{integrate, max_abs, BandMatrix};

/// `|∇f|` beyond which a step is marked blowup-saturated.
pub const SATURATION_GRADIENT: f64 = 1e8;
/// Slack on the universal bound `max |s f| ≤ max |tr k|`.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerBc {
    /// Zero flux through the innermost face (regular origin, or reflection
    /// at an excision radius).
    RegularCenter,
    /// Gradient at the inner face extrapolated linearly from the interior.
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterBc {
    DirichletZero,
    /// `f′ + p f / r = 0`, i.e. `f ~ r^{−p}`.
    RobinDecay(f64),
}

impl Default for OuterBc {
    fn default() -> Self {
        OuterBc::RobinDecay(0.5)
    }
}

#[derive(Debug, Clone)]
pub struct JangProblem {
    pub data: InitialDataSet,
    pub s: f64,
    /// Nodal source `F`, or zero.
    pub source: Option<Vec<f64>>,
    pub inner: InnerBc,
    pub outer: OuterBc,
}

impl JangProblem {
    pub fn new(data: InitialDataSet, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::ParameterOutOfRange {
                name: "s".into(),
                value: s,
                reason: "regularisation parameter must be positive",
            });
        }
        if data.symmetry() == Symmetry::None {
            return Err(Error::NotApplicable("Jang solver needs symmetric data".into()));
        }
        Ok(Self {
            data,
            s,
            source: None,
            inner: InnerBc::RegularCenter,
            outer: OuterBc::default(),
        })
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        let mut p = Self::new(self.data.clone(), s)?;
        p.source = self.source.clone();
        p.inner = self.inner;
        p.outer = self.outer;
        Ok(p)
    }

    pub fn with_source(mut self, source: Vec<f64>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn with_boundary(mut self, inner: InnerBc, outer: OuterBc) -> Self {
        self.inner = inner;
        self.outer = outer;
        self
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.data.chart.nodes()
    }
}

/// `G(D) = D/√(1+D²)` and its derivative.
fn unit(d: f64) -> (f64, f64) {
    let w2 = 1.0 + d * d;
    let w = w2.sqrt();
    (d / w, 1.0 / (w2 * w))
}

/// A value that is linear (to first order) in at most three unknowns.
#[derive(Debug, Clone, Copy, Default)]
struct Lin {
    v: f64,
    col: [usize; 3],
    d: [f64; 3],
    n: usize,
}

impl Lin {
    fn push(&mut self, col: usize, d: f64) {
        for k in 0..self.n {
            if self.col[k] == col {
                self.d[k] += d;
                return;
            }
        }
        self.col[self.n] = col;
        self.d[self.n] = d;
        self.n += 1;
    }

    fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n).map(move |k| (self.col[k], self.d[k]))
    }

    fn map(self, g: (f64, f64)) -> Lin {
        let mut out = self;
        out.v = g.0;
        for k in 0..out.n {
            out.d[k] *= g.1;
        }
        out
    }

    fn combine(a: &Lin, wa: f64, b: &Lin, wb: f64) -> Lin {
        let mut out = Lin {
            v: wa * a.v + wb * b.v,
            ..Lin::default()
        };
        for (c, d) in a.terms() {
            out.push(c, wa * d);
        }
        for (c, d) in b.terms() {
            out.push(c, wb * d);
        }
        out
    }
}

/// Geometry of the one-dimensional finite-volume grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    periodic: bool,
    pub nodes: Vec<f64>,
    /// Face positions, `n + 1` of them; cell `i` is `[faces[i], faces[i+1]]`.
    pub faces: Vec<f64>,
    face_weight: Vec<f64>,
    face_a: Vec<f64>,
    pub volume: Vec<f64>,
    node_a: Vec<f64>,
    /// `R′/(a R)`, the tangential curvature factor of graph slices.
    node_kt: Vec<f64>,
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    interp: Vec<f64>,
}

impl Discretization {
    pub fn new(data: &InitialDataSet) -> Result<Self> {
        let nodes = data.chart.nodes();
        let n = nodes.len();
        match data.chart {
            Chart::PeriodicBox { side, .. } => {
                let h = side / n as f64;
                let (p, t) = data.periodic_profile(0.0)?;
                Ok(Self {
                    periodic: true,
                    faces: (0..=n).map(|j| (j as f64 - 0.5) * h).collect(),
                    face_weight: vec![1.0; n + 1],
                    face_a: vec![1.0; n + 1],
                    volume: vec![h; n],
                    node_a: vec![1.0; n],
                    node_kt: vec![0.0; n],
                    p: vec![p; n],
                    t: vec![t; n],
                    interp: vec![0.5; n],
                    nodes,
                })
            }
            Chart::Radial { .. } => {
                let h0 = nodes[1] - nodes[0];
                let r_in = if (nodes[0] - 0.5 * h0).abs() <= 1e-9 * h0 { 0.0 } else { nodes[0] };
                let mut faces = Vec::with_capacity(n + 1);
                faces.push(r_in);
                for j in 1..n {
                    faces.push(0.5 * (nodes[j - 1] + nodes[j]));
                }
                faces.push(nodes[n - 1]);
                let mut face_weight = Vec::with_capacity(n + 1);
                let mut face_a = Vec::with_capacity(n + 1);
                for &r in &faces {
                    if r == 0.0 {
                        face_weight.push(0.0);
                        face_a.push(1.0);
                    } else {
                        let pr = data.radial_profile(r)?;
                        face_weight.push(pr.radius[0] * pr.radius[0]);
                        face_a.push(pr.a[0]);
                    }
                }
                let density = |r: f64| {
                    if r <= 0.0 {
                        return 0.0;
                    }
                    data.radial_profile(r)
                        .map(|p| p.a[0] * p.radius[0] * p.radius[0])
                        .unwrap_or(f64::NAN)
                };
                let mut volume = Vec::with_capacity(n);
                let (mut node_a, mut node_kt, mut p, mut t, mut interp) =
                    (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
                for i in 0..n {
                    volume.push(integrate(density, faces[i], faces[i + 1], 1, 6));
                    let pr = data.radial_profile(nodes[i])?;
                    node_a.push(pr.a[0]);
                    node_kt.push(pr.radius[1] / (pr.a[0] * pr.radius[0]));
                    p.push(pr.p[0]);
                    t.push(2.0 * pr.q[0]);
                    interp.push((nodes[i] - faces[i]) / (faces[i + 1] - faces[i]));
                }
                if volume.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::NotFinite("cell volumes"));
                }
                Ok(Self {
                    periodic: false,
                    nodes,
                    faces,
                    face_weight,
                    face_a,
                    volume,
                    node_a,
                    node_kt,
                    p,
                    t,
                    interp,
                })
            }
            Chart::ProductCylinder { .. } => Err(Error::NotApplicable(
                "Jang solver needs a radial or periodic chart".into(),
            )),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn trace_k(&self) -> Vec<f64> {
        self.p.iter().zip(&self.t).map(|(p, t)| p + t).collect()
    }

    /// Normalised gradient `D = f′/a` at face `j` as a linear form in `f`.
    fn face_gradient(&self, f: &[f64], j: usize, inner: InnerBc, outer: OuterBc) -> Lin {
        let n = self.len();
        let mut out = Lin::default();
        if self.periodic {
            let (l, r) = ((j + n - 1) % n, j % n);
            let h = self.nodes[1] - self.nodes[0];
            out.v = (f[r] - f[l]) / h;
            out.push(r, 1.0 / h);
            out.push(l, -1.0 / h);
            return out;
        }
        if j == 0 {
            if inner == InnerBc::OneSided && self.faces[0] > 0.0 {
                let d1 = self.face_gradient(f, 1, inner, outer);
                let d2 = self.face_gradient(f, 2, inner, outer);
                let w = (self.faces[1] - self.faces[0]) / (self.faces[2] - self.faces[1]);
                return Lin::combine(&d1, 1.0 + w, &d2, -w);
            }
            return out;
        }
        if j == n {
            if let OuterBc::RobinDecay(p) = outer {
                let c = -p / (self.nodes[n - 1] * self.node_a[n - 1]);
                out.v = c * f[n - 1];
                out.push(n - 1, c);
            }
            return out;
        }
        let c = 1.0 / ((self.nodes[j] - self.nodes[j - 1]) * self.face_a[j]);
        out.v = c * (f[j] - f[j - 1]);
        out.push(j, c);
        out.push(j - 1, -c);
        out
    }

    fn face_gradients(&self, f: &[f64], inner: InnerBc, outer: OuterBc) -> Vec<Lin> {
        (0..=self.len()).map(|j| self.face_gradient(f, j, inner, outer)).collect()
    }

    /// `D` at the nodes, interpolated from the faces.
    pub fn node_gradient(&self, f: &[f64], inner: InnerBc, outer: OuterBc) -> Vec<f64> {
        let d = self.face_gradients(f, inner, outer);
        (0..self.len())
            .map(|i| (1.0 - self.interp[i]) * d[i].v + self.interp[i] * d[i + 1].v)
            .collect()
    }
}

enum Jacobian {
    Band(BandMatrix),
    Dense(DMatrix<f64>),
}

impl Jacobian {
    fn add(&mut self, i: usize, j: usize, v: f64) {
        match self {
            Jacobian::Band(b) => b.add(i, j, v),
            Jacobian::Dense(d) => d[(i, j)] += v,
        }
    }

    fn solve(self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Jacobian::Band(b) => b.solve(rhs),
            Jacobian::Dense(d) => {
                let x = d
                    .lu()
                    .solve(&DVector::from_column_slice(rhs))
                    .ok_or(Error::Singular("Jang Jacobian"))?;
                Ok(x.iter().copied().collect())
            }
        }
    }
}

/// Discrete residual operator bound to a problem.
struct System<'a> {
    disc: &'a Discretization,
    problem: &'a JangProblem,
}

impl System<'_> {
    fn eval(&self, f: &[f64], want_jac: bool) -> (Vec<f64>, Option<Jacobian>) {
        let disc = self.disc;
        let pr = self.problem;
        let n = disc.len();
        let mut jac = want_jac.then(|| {
            if disc.periodic {
                Jacobian::Dense(DMatrix::zeros(n, n))
            } else {
                Jacobian::Band(BandMatrix::zeros(n, 2, 2))
            }
        });
        let eta: Vec<Lin> = disc
            .face_gradients(f, pr.inner, pr.outer)
            .into_iter()
            .map(|d| {
                let g = unit(d.v);
                d.map(g)
            })
            .collect();
        let mut res = Vec::with_capacity(n);
        for i in 0..n {
            if !disc.periodic && i == n - 1 && pr.outer == OuterBc::DirichletZero {
                res.push(f[i]);
                if let Some(j) = jac.as_mut() {
                    j.add(i, i, 1.0);
                }
                continue;
            }
            let v = disc.volume[i];
            let (wl, wr) = (disc.face_weight[i] / v, disc.face_weight[i + 1] / v);
            let w = disc.interp[i];
            let en = Lin::combine(&eta[i], 1.0 - w, &eta[i + 1], w);
            let src = pr.source.as_ref().map_or(0.0, |s| s[i]);
            let p = disc.p[i];
            res.push(
                wr * eta[i + 1].v - wl * eta[i].v - (p + disc.t[i]) + p * en.v * en.v
                    - pr.s * f[i]
                    - src,
            );
            if let Some(j) = jac.as_mut() {
                for (c, d) in eta[i + 1].terms() {
                    j.add(i, c, wr * d);
                }
                for (c, d) in eta[i].terms() {
                    j.add(i, c, -wl * d);
                }
                for (c, d) in en.terms() {
                    j.add(i, c, 2.0 * p * en.v * d);
                }
                j.add(i, i, -pr.s);
            }
        }
        (res, jac)
    }
}

/// Discrete residual `H(f) − K(f) − s f − F` at the nodes.
pub fn residual(problem: &JangProblem, f: &[f64]) -> Result<Vec<f64>> {
    let disc = Discretization::new(&problem.data)?;
    residual_on(&disc, problem, f)
}

pub fn residual_on(disc: &Discretization, problem: &JangProblem, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != disc.len() {
        return Err(Error::DomainMismatch(alloc::format!(
            "field has {} values, grid has {}",
            f.len(),
            disc.len()
        )));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotFinite("Jang field"));
    }
    Ok(System { disc, problem }.eval(f, false).0)
}

/// Continuous residual of a radial (or periodic) profile with jet
/// `[f, f′, f″]` at `r`, from the symmetry reduction.
pub fn reduced_residual(data: &InitialDataSet, s: f64, r: f64, jet: [f64; 3], source: f64) -> Result<f64> {
    let [f, f1, f2] = jet;
    let (h, k) = match data.symmetry() {
        Symmetry::PeriodicHomogeneous => {
            let (p, t) = data.periodic_profile(r)?;
            let (eta, deta) = unit(f1);
            (deta * f2, p + t - p * eta * eta)
        }
        _ => {
            let pr = data.radial_profile(r)?;
            let (a, da) = (pr.a[0], pr.a[1]);
            let d = f1 / a;
            let dd = (f2 * a - f1 * da) / (a * a);
            let (eta, deta) = unit(d);
            let h = deta * dd / a + 2.0 * pr.radius[1] * eta / (a * pr.radius[0]);
            (h, pr.trace_k() - pr.p[0] * eta * eta)
        }
    };
    Ok(h - k - s * f - source)
}

/// Continuous residual evaluated with the full tensor formula
/// `(g^{ij} − f^i f^j/W²)(∇_i∇_j f / W − k_ij) − s f − F` at the Cartesian
/// point `x`, for `f` depending on `|x|` (or on `x₀` for periodic data).
pub fn tensor_residual(data: &InitialDataSet, s: f64, x: &Vec3, jet: [f64; 3], source: f64) -> Result<f64> {
    let [f, f1, f2] = jet;
    let conn = Connection::at(data, x)?;
    let k = data.k(x);
    let (df, ddf): ([f64; 3], [[f64; 3]; 3]) = match data.symmetry() {
        Symmetry::PeriodicHomogeneous => {
            let mut h = [[0.0; 3]; 3];
            h[0][0] = f2;
            ([f1, 0.0, 0.0], h)
        }
        _ => {
            let r = crate::geometry::norm(x);
            let n: Vec3 = core::array::from_fn(|i| x[i] / r);
            (
                core::array::from_fn(|i| f1 * n[i]),
                core::array::from_fn(|i| {
                    core::array::from_fn(|j| {
                        f2 * n[i] * n[j] + f1 * (crate::geometry::delta(i, j) - n[i] * n[j]) / r
                    })
                }),
            )
        }
    };
    let up: Vec3 = core::array::from_fn(|i| (0..3).map(|j| conn.ginv[i][j] * df[j]).sum());
    let grad2: f64 = (0..3).map(|i| up[i] * df[i]).sum();
    let w2 = 1.0 + grad2;
    let w = w2.sqrt();
    let hess = |i: usize, j: usize| ddf[i][j] - (0..3).map(|l| conn.gamma[l][i][j] * df[l]).sum::<f64>();
    let val = sum33(|i, j| (conn.ginv[i][j] - up[i] * up[j] / w2) * (hess(i, j) / w - k[i][j]));
    Ok(val - s * f - source)
}

/// Source `F = H(f*) − K(f*) − s f*` at the chart nodes for a manufactured
/// solution with jet `fstar`.
pub fn manufactured_source(data: &InitialDataSet, s: f64, fstar: impl Fn(f64) -> [f64; 3]) -> Result<Vec<f64>> {
    data.chart
        .nodes()
        .iter()
        .map(|&r| reduced_residual(data, s, r, fstar(r), 0.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Converged when `‖res‖∞ ≤ tol (1 + ‖f‖∞)`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Monitors {
    /// `max |s f|`.
    pub max_u: f64,
    /// `μ₁ = max |tr k|` over the grid.
    pub mu1: f64,
    pub bound_violated: bool,
    /// `max |s ∇f|`.
    pub max_s_grad: f64,
    pub max_grad: f64,
    /// `sup |∇̄ log⟨ν, −∂_t⟩|` on the graph.
    pub harnack: f64,
    /// `sup |h|²` of the graph.
    pub sup_h2: f64,
    pub blowup_saturated: bool,
}

#[derive(Debug, Clone)]
pub struct JangSolveResult {
    pub s: f64,
    pub nodes: Vec<f64>,
    pub f: Vec<f64>,
    /// `|∇f|` at the nodes (signed radial component `f′/a`).
    pub grad: Vec<f64>,
    pub residual: f64,
    pub newton_iters: usize,
    pub converged: bool,
    pub monitors: Monitors,
}

impl JangSolveResult {
    pub fn u(&self) -> Vec<f64> {
        self.f.iter().map(|f| self.s * f).collect()
    }

    /// Companion field `η = ∇f/√(1+|∇f|²)` (radial component).
    pub fn eta(&self) -> Vec<f64> {
        self.grad.iter().map(|&d| unit(d).0).collect()
    }
}

fn monitors(disc: &Discretization, pr: &JangProblem, f: &[f64]) -> (Vec<f64>, Monitors) {
    let n = disc.len();
    let faces = disc.face_gradients(f, pr.inner, pr.outer);
    let grad = disc.node_gradient(f, pr.inner, pr.outer);
    let eta_face: Vec<f64> = faces.iter().map(|d| unit(d.v).0).collect();
    let max_u = f.iter().fold(0.0f64, |m, v| m.max((pr.s * v).abs()));
    let mu1 = max_abs(&disc.trace_k());
    let max_grad = max_abs(&grad);
    let log_tilt: Vec<f64> = grad.iter().map(|d| -0.5 * (1.0 + d * d).ln()).collect();
    let mut harnack = 0.0f64;
    let pairs = if disc.periodic { n } else { n - 1 };
    for j in 0..pairs {
        let (l, r) = (j, (j + 1) % n);
        let dr = if disc.periodic { disc.nodes[1] - disc.nodes[0] } else { disc.nodes[r] - disc.nodes[l] };
        let d = faces[j + 1].v;
        let len = dr * disc.face_a[j + 1] * (1.0 + d * d).sqrt();
        harnack = harnack.max(((log_tilt[r] - log_tilt[l]) / len).abs());
    }
    let mut sup_h2 = 0.0f64;
    for i in 0..n {
        let kr = (eta_face[i + 1] - eta_face[i]) / (disc.node_a[i] * (disc.faces[i + 1] - disc.faces[i]));
        let w = disc.interp[i];
        let kt = disc.node_kt[i] * ((1.0 - w) * eta_face[i] + w * eta_face[i + 1]);
        sup_h2 = sup_h2.max(kr * kr + 2.0 * kt * kt);
    }
    let interior = if disc.periodic { &grad[..] } else { &grad[1..n - 1] };
    let m = Monitors {
        max_u,
        mu1,
        bound_violated: !pr.data.test_mode() && max_u > mu1 + BOUND_SLACK,
        max_s_grad: pr.s * max_grad,
        max_grad,
        harnack,
        sup_h2,
        blowup_saturated: interior.iter().any(|d| d.abs() > SATURATION_GRADIENT),
    };
    (grad, m)
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Damped Newton solve from `initial_guess`.
pub fn solve(problem: &JangProblem, initial_guess: &[f64]) -> Result<JangSolveResult> {
    solve_with(problem, initial_guess, &SolverOptions::default())
}

pub fn solve_with(problem: &JangProblem, initial_guess: &[f64], opts: &SolverOptions) -> Result<JangSolveResult> {
    let disc = Discretization::new(&problem.data)?;
    solve_on(&disc, problem, initial_guess, opts)
}

pub fn solve_on(
    disc: &Discretization,
    problem: &JangProblem,
    initial_guess: &[f64],
    opts: &SolverOptions,
) -> Result<JangSolveResult> {
    let sys = System { disc, problem };
    let mut f = initial_guess.to_vec();
    let (mut res, mut jac) = {
        residual_on(disc, problem, &f)?;
        sys.eval(&f, true)
    };
    let mut iters = 0;
    let mut converged = false;
    let mut polished = false;
    loop {
        let rn = max_abs(&res);
        let target = opts.tol * (1.0 + max_abs(&f));
        if rn <= target {
            converged = true;
        }
        if (converged && polished) || iters >= opts.max_iter {
            break;
        }
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let step = jac.take().expect("jacobian").solve(&rhs)?;
        let phi0 = sq_norm(&res);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = f.iter().zip(&step).map(|(a, b)| a + lambda * b).collect();
            if trial.iter().all(|v| v.is_finite()) {
                let (r, _) = sys.eval(&trial, false);
                let phi = sq_norm(&r);
                if phi.is_finite() && phi <= (1.0 - 2e-4 * lambda) * phi0 {
                    accepted = Some((trial, r));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, _)) => {
                iters += 1;
                f = trial;
                let (r, j) = sys.eval(&f, true);
                res = r;
                jac = j;
                if converged {
                    // one polishing step past the tolerance
                    polished = true;
                }
            }
            None if converged => break,
            None => {
                return Err(Error::NewtonDivergence {
                    s: problem.s,
                    residual: rn,
                })
            }
        }
    }
    let (grad, monitors) = monitors(disc, problem, &f);
    Ok(JangSolveResult {
        s: problem.s,
        nodes: disc.nodes.clone(),
        f,
        grad,
        residual: max_abs(&res),
        newton_iters: iters,
        converged,
        monitors,
    })
}

/// Strictly decreasing list of regularisation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        if values.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidSchedule("values must be positive".into()));
        }
        if values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidSchedule("values must be strictly decreasing".into()));
        }
        if values[0] > 1.0 {
            return Err(Error::InvalidSchedule("first value must be at most 1".into()));
        }
        Ok(Self(values))
    }

    /// `s_k = s0 · ratio^k` while `s_k ≥ s_min`.
    pub fn geometric(s0: f64, ratio: f64, s_min: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidSchedule("ratio must lie in (0, 1)".into()));
        }
        if !(s_min > 0.0 && s_min <= s0) {
            return Err(Error::InvalidSchedule("need 0 < s_min ≤ s0".into()));
        }
        let mut v = Vec::new();
        let mut s = s0;
        while s >= s_min * (1.0 - 1e-12) {
            v.push(s);
            s *= ratio;
        }
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self::geometric(1.0, 0.6, 1e-3).expect("valid default")
    }
}

impl FromStr for Schedule {
    type Err = Error;

    /// `geo:s0:ratio:s_min` or `list:s0,s1,...`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidSchedule(alloc::format!("{text:?}: {why}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let (kind, rest) = text.split_once(':').ok_or_else(|| bad("expected geo:… or list:…"))?;
        match kind {
            "geo" => {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() != 3 {
                    return Err(bad("geo needs s0:ratio:s_min"));
                }
                Self::geometric(num(parts[0])?, num(parts[1])?, num(parts[2])?)
            }
            "list" => Self::new(rest.split(',').map(num).collect::<Result<_>>()?),
            _ => Err(bad("unknown schedule kind")),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "list:")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStart {
    Cold,
    Previous,
    /// Previous field scaled by `s_prev / s` (keeps `u = s f` fixed).
    Rescaled,
}

impl WarmStart {
    pub fn as_str(self) -> &'static str {
        match self {
            WarmStart::Cold => "cold",
            WarmStart::Previous => "previous",
            WarmStart::Rescaled => "rescaled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseCheck {
    NotApplicable,
    /// Both sides in units of `u` (multiplied by `st/(s−t)`).
    Checked { lhs: f64, bound: f64, slack: f64, holds: bool },
}

impl CaseCheck {
    pub fn holds(&self) -> bool {
        match self {
            CaseCheck::NotApplicable => true,
            CaseCheck::Checked { holds, .. } => *holds,
        }
    }

    pub fn applicable(&self) -> bool {
        matches!(self, CaseCheck::Checked { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub s: f64,
    pub t: f64,
    /// `sup (f_t − f_s) ≤ (s−t)/(st) · min{max u_s, max u_t}`.
    pub upper: CaseCheck,
    /// `(s−t)/(st) · max{min u_s, min u_t} ≤ inf (f_t − f_s)`.
    pub lower: CaseCheck,
}

impl GapReport {
    pub fn holds(&self) -> bool {
        self.upper.holds() && self.lower.holds()
    }
}

pub const GAP_TOLERANCE: f64 = 1e-8;

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Gap estimate between a larger parameter `s` and a smaller `t`.
pub fn gap_between(fs: &JangSolveResult, ft: &JangSolveResult, tol: f64) -> GapReport {
    let (s, t) = (fs.s, ft.s);
    let us = fs.u();
    let ut = ft.u();
    // st/(s−t)·(f_t − f_s) = (s u_t − t u_s)/(s − t)
    let scaled: Vec<f64> = us.iter().zip(&ut).map(|(a, b)| (s * b - t * a) / (s - t)).collect();
    let m1 = max_of(&us).min(max_of(&ut));
    let upper = if m1 > 0.0 {
        let lhs = max_of(&scaled);
        CaseCheck::Checked {
            lhs,
            bound: m1,
            slack: m1 - lhs,
            holds: lhs <= m1 + tol,
        }
    } else {
        CaseCheck::NotApplicable
    };
    let m2 = min_of(&us).max(min_of(&ut));
    let lower = if m2 < 0.0 {
        let lhs = min_of(&scaled);
        CaseCheck::Checked {
            lhs,
            bound: m2,
            slack: lhs - m2,
            holds: m2 <= lhs + tol,
        }
    } else {
        CaseCheck::NotApplicable
    };
    GapReport { s, t, upper, lower }
}

/// Gap estimate for steps `i < j` of a run.
pub fn gap_check(run: &ContinuationRun, i: usize, j: usize) -> Result<GapReport> {
    if !(i < j && j < run.steps.len()) {
        return Err(Error::ParameterOutOfRange {
            name: "step index".into(),
            value: j as f64,
            reason: "need i < j < number of steps",
        });
    }
    let (a, b) = (&run.steps[i], &run.steps[j]);
    if !(a.converged && b.converged) {
        return Err(Error::NotApplicable("gap check needs converged steps".into()));
    }
    Ok(gap_between(a, b, GAP_TOLERANCE))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub s: Vec<f64>,
    pub sup_abs_u: Vec<f64>,
    pub max_u: Vec<f64>,
    pub min_u: Vec<f64>,
    /// Worst `sup|u_t| − sup|u_s|` over pairs `t < s`.
    pub max_excess: f64,
    pub holds: bool,
    pub tol: f64,
}

pub fn monotonicity_check(run: &ContinuationRun) -> Result<MonotonicityReport> {
    monotonicity_of(&run.steps, 1e-8)
}

fn monotonicity_of(steps: &[JangSolveResult], tol: f64) -> Result<MonotonicityReport> {
    if steps.len() < 2 {
        return Err(Error::TooFewSteps("monotonicity needs two steps".into()));
    }
    let sup_abs_u: Vec<f64> = steps.iter().map(|r| max_abs(&r.u())).collect();
    let max_u: Vec<f64> = steps.iter().map(|r| max_of(&r.u())).collect();
    let min_u: Vec<f64> = steps.iter().map(|r| min_of(&r.u())).collect();
    let mut excess = f64::NEG_INFINITY;
    for i in 0..steps.len() {
        for j in i + 1..steps.len() {
            excess = excess.max(sup_abs_u[j] - sup_abs_u[i]);
            if max_u[i] > 0.0 {
                excess = excess.max(max_u[j] - max_u[i]);
            }
            if min_u[i] < 0.0 {
                excess = excess.max(min_u[i] - min_u[j]);
            }
        }
    }
    Ok(MonotonicityReport {
        s: steps.iter().map(|r| r.s).collect(),
        sup_abs_u,
        max_u,
        min_u,
        max_excess: excess,
        holds: excess <= tol,
        tol,
    })
}

#[derive(Debug, Clone)]
pub struct ContinuationRun {
    pub schedule: Schedule,
    pub steps: Vec<JangSolveResult>,
    pub warm_starts: Vec<WarmStart>,
    /// Gap reports for consecutive pairs.
    pub gaps: Vec<GapReport>,
    pub monotonicity: Option<MonotonicityReport>,
}

impl ContinuationRun {
    pub fn last(&self) -> &JangSolveResult {
        self.steps.last().expect("non-empty run")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.steps[0].nodes
    }
}

/// Sequential solves along `schedule` with warm starts.
pub fn continuation(template: &JangProblem, schedule: &Schedule) -> Result<ContinuationRun> {
    continuation_with(template, schedule, &SolverOptions::default())
}

pub fn continuation_with(template: &JangProblem, schedule: &Schedule, opts: &SolverOptions) -> Result<ContinuationRun> {
    let disc = Discretization::new(&template.data)?;
    let mut steps: Vec<JangSolveResult> = Vec::with_capacity(schedule.len());
    let mut warm = Vec::with_capacity(schedule.len());
    for &s in schedule.values() {
        let problem = template.with_s(s)?;
        let (guess, kind) = match steps.last() {
            None => (vec![0.0; disc.len()], WarmStart::Cold),
            Some(prev) => {
                let scaled: Vec<f64> = prev.f.iter().map(|v| v * prev.s / s).collect();
                let r_prev = sq_norm(&residual_on(&disc, &problem, &prev.f)?);
                let r_scaled = sq_norm(&residual_on(&disc, &problem, &scaled)?);
                if r_scaled < r_prev {
                    (scaled, WarmStart::Rescaled)
                } else {
                    (prev.f.clone(), WarmStart::Previous)
                }
            }
        };
        let result = solve_on(&disc, &problem, &guess, opts).map_err(|e| match e {
            Error::NewtonDivergence { residual, .. } => Error::NewtonDivergence { s, residual },
            other => other,
        })?;
        if !result.converged {
            return Err(Error::NewtonMaxIterations {
                s,
                residual: result.residual,
            });
        }
        steps.push(result);
        warm.push(kind);
    }
    let gaps = steps
        .windows(2)
        .map(|w| gap_between(&w[0], &w[1], GAP_TOLERANCE))
        .collect();
    let monotonicity = monotonicity_of(&steps, 1e-8).ok();
    Ok(ContinuationRun {
        schedule: schedule.clone(),
        steps,
        warm_starts: warm,
        gaps,
        monotonicity,
    })
}

impl fmt::Display for InnerBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnerBc::RegularCenter => "regular_center",
            InnerBc::OneSided => "one_sided_extrapolation",
        })
    }
}

impl fmt::Display for OuterBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OuterBc::DirichletZero => f.write_str("dirichlet_zero"),
            OuterBc::RobinDecay(p) => write!(f, "robin_decay({p})"),
        }
    }
}

impl FromStr for InnerBc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular_center" => Ok(InnerBc::RegularCenter),
            "one_sided" | "one_sided_extrapolation" => Ok(InnerBc::OneSided),
            _ => Err(Error::BoundaryCondition(s.to_string())),
        }
    }
}

impl FromStr for OuterBc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet_zero" => Ok(OuterBc::DirichletZero),
            "robin_decay" => Ok(OuterBc::default()),
            _ => {
                let p = s
                    .strip_prefix("robin_decay(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::BoundaryCondition(String::from(s)))?;
                Ok(OuterBc::RobinDecay(p))
            }
        }
    }
}

#[cfg(test)]
mod tests;
