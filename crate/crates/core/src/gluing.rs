//! Warped-product cylinders `g = e^{2w(x,s)} γ* + ds²` over the round
//! sphere and the conformal Laplacian bound
//! `λ₁(−Δ_g + R_g/8) ≥ λ*/4`, `λ* = min_s λ₁(−Δ_{γ_s} + κ_{γ_s})`.
//!
//! The sphere factor is discretised with the spectral [`SphereGrid`], the
//! interval with Lagrange polynomials on Chebyshev (first kind) nodes and
//! Fejér quadrature. Both eigenproblems are posed in weak form, so the
//! Neumann conditions at the ends are natural.
//!
//! Curvature of the slices uses `κ_{e^{2w}γ*} = e^{−2w}(1 − Δ_{γ*} w)`.
//! [`fd_scalar_curvature`] recomputes `R_g` from the assembled 3-metric by
//! finite differences and is the independent check of both this and the
//! warped formula `R_g = 2κ − 4w'' − 6w'²`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{scalar_curvature, Metric, Sym3, Vec3};
use crate::initial_data::InitialDataSet;
use crate::surfaces::{real_harmonic, SphereGrid};

/// Tolerance on `∂_s e^{2w}` at the ends.
pub const BOUNDARY_TOL: f64 = 1e-6;
/// Offset from the ends at which the one-sided limits are sampled.
const END_OFFSET: f64 = 1e-9;
/// Largest dense eigenproblem attempted for the cylinder.
pub const MAX_DIMENSION: usize = 3000;

/// One separable term `A · Y_lm(x) · cos(kπ (s − a)/(b − a))`.
///
/// Every such term has `∂_s w = 0` at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub l: usize,
    pub m: i64,
    pub amplitude: f64,
    pub wavenumber: usize,
}

/// The conformal exponent `w(x, s)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConformalPath {
    /// `w ≡ 0`: the round product cylinder.
    Product,
    /// `w = log s`: flat space in polar coordinates.
    FlatBall,
    Modes(Vec<Mode>),
    /// Cap over `(0, 3)`: `w = η(s) w_h(x) + a(s)` with
    /// `w_h = offset + Σ c_lm Y_lm`, `η = 0` on `(0, 1]`, `1` on `[2, 3)`,
    /// `a = log s` on `(0, ½]`, `0` from `s = 1` on.
    Cap { offset: f64, modes: Vec<(usize, i64, f64)> },
}

/// Cutoffs of the cap construction with their first two derivatives.
pub fn cutoffs(s: f64) -> ([f64; 3], [f64; 3]) {
    let e = smooth_step(s - 1.0);
    let c = smooth_step(2.0 * (s - 0.5));
    let chi = [c[0], 2.0 * c[1], 4.0 * c[2]];
    let ln = s.ln();
    let a = [
        (1.0 - chi[0]) * ln,
        -chi[1] * ln + (1.0 - chi[0]) / s,
        -chi[2] * ln - 2.0 * chi[1] / s - (1.0 - chi[0]) / (s * s),
    ];
    (e, a)
}

/// `C^∞` step from 0 at `t ≤ 0` to 1 at `t ≥ 1`, with two derivatives.
fn smooth_step(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0; 3];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let f = |t: f64| {
        let e = (-1.0 / t).exp();
        [e, e / (t * t), e * (1.0 / t.powi(4) - 2.0 / t.powi(3))]
    };
    let a = f(t);
    let bf = f(1.0 - t);
    let b = [bf[0], -bf[1], bf[2]];
    let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
    let y = a[0] / sum[0];
    let y1 = (a[1] - y * sum[1]) / sum[0];
    let y2 = (a[2] - 2.0 * y1 * sum[1] - y * sum[2]) / sum[0];
    [y, y1, y2]
}

impl ConformalPath {
    /// `(w, ∂_s w, ∂²_s w)` at `(θ, φ, s)` on the interval `(a, b)`.
    pub fn jet(&self, theta: f64, phi: f64, s: f64, interval: (f64, f64)) -> [f64; 3] {
        match self {
            ConformalPath::Product => [0.0; 3],
            ConformalPath::FlatBall => [s.ln(), 1.0 / s, -1.0 / (s * s)],
            ConformalPath::Modes(modes) => {
                let (a, b) = interval;
                let mut out = [0.0; 3];
                for md in modes {
                    let y = md.amplitude * real_harmonic(md.l, md.m, theta, phi);
                    let k = md.wavenumber as f64 * PI / (b - a);
                    let (sn, cs) = (k * (s - a)).sin_cos();
                    out[0] += y * cs;
                    out[1] -= y * k * sn;
                    out[2] -= y * k * k * cs;
                }
                out
            }
            ConformalPath::Cap { offset, modes } => {
                let wh = offset
                    + modes
                        .iter()
                        .map(|&(l, m, c)| c * real_harmonic(l, m, theta, phi))
                        .sum::<f64>();
                let (e, a) = cutoffs(s);
                [e[0] * wh + a[0], e[1] * wh + a[1], e[2] * wh + a[2]]
            }
        }
    }

    fn harmonics(&self) -> Vec<(usize, i64)> {
        match self {
            ConformalPath::Modes(m) => m.iter().map(|m| (m.l, m.m)).collect(),
            ConformalPath::Cap { modes, .. } => modes.iter().map(|&(l, m, _)| (l, m)).collect(),
            _ => Vec::new(),
        }
    }
}

/// Input of [`assemble_cylinder`].
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSpec {
    pub lmax: usize,
    pub axisymmetric: bool,
    pub interval: (f64, f64),
    pub n_s: usize,
    pub path: ConformalPath,
    /// Enforce `∂_s e^{2w} → 0` at both ends. Curvature-only fixtures such
    /// as the flat ball switch this off.
    pub check_ends: bool,
}

impl CylinderSpec {
    pub fn new(path: ConformalPath, interval: (f64, f64)) -> Self {
        Self {
            lmax: 4,
            axisymmetric: true,
            interval,
            n_s: 64,
            path,
            check_ends: true,
        }
    }

    pub fn product(interval: (f64, f64)) -> Self {
        Self::new(ConformalPath::Product, interval)
    }

    pub fn cap(offset: f64, modes: Vec<(usize, i64, f64)>) -> Self {
        Self::new(ConformalPath::Cap { offset, modes }, (0.0, 3.0))
    }

    pub fn grid(&self) -> SphereGrid {
        if self.axisymmetric {
            SphereGrid::axisymmetric(self.lmax)
        } else {
            SphereGrid::new(self.lmax)
        }
    }
}

/// Cap over a round horizon of spherically symmetric data: the induced
/// metric is `R² γ*`, so the uniformising exponent is the constant `log R`.
pub fn cap_from_round_horizon(data: &InitialDataSet, radius: f64) -> Result<CylinderSpec> {
    let prof = data.radial_profile(radius)?;
    let areal = prof.radius[0];
    if !(areal > 0.0) {
        return Err(Error::NotFinite("areal radius"));
    }
    Ok(CylinderSpec::cap(areal.ln(), Vec::new()))
}

/// Chebyshev nodes of the first kind on `(a, b)`, ascending, with Fejér
/// weights and the differentiation matrix of the interpolant.
pub fn chebyshev(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>, DMatrix<f64>) {
    let half = 0.5 * (b - a);
    let th: Vec<f64> = (0..n)
        .map(|k| PI * (2.0 * (n - 1 - k) as f64 + 1.0) / (2.0 * n as f64))
        .collect();
    let s: Vec<f64> = th.iter().map(|t| 0.5 * (a + b) + half * t.cos()).collect();
    let w: Vec<f64> = th
        .iter()
        .map(|t| {
            let mut acc = 1.0;
            for j in 1..=n / 2 {
                let jf = j as f64;
                acc -= 2.0 * (2.0 * jf * t).cos() / (4.0 * jf * jf - 1.0);
            }
            half * 2.0 / n as f64 * acc
        })
        .collect();
    // barycentric weights (−1)^k sin θ_k, common factors cancel
    let bw: Vec<f64> = th
        .iter()
        .enumerate()
        .map(|(k, t)| if (n - 1 - k).is_multiple_of(2) { t.sin() } else { -t.sin() })
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = bw[j] / bw[i] / (s[i] - s[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    (s, w, d)
}

/// An assembled warped cylinder. Nodal fields are indexed `[q * n_x + x]`
/// with `q` the s-node and `x` the sphere node.
#[derive(Debug, Clone)]
pub struct WarpedCylinder {
    pub spec: CylinderSpec,
    pub grid: SphereGrid,
    pub s: Vec<f64>,
    pub s_weights: Vec<f64>,
    pub diff: DMatrix<f64>,
    pub w: Vec<f64>,
    pub w_s: Vec<f64>,
    pub w_ss: Vec<f64>,
    pub laplace_w: Vec<f64>,
    pub kappa: Vec<f64>,
    pub r_g: Vec<f64>,
    /// `max |∂_s e^{2w}|` over both ends.
    pub boundary_defect: f64,
    /// `max |∂²_s e^{2w}|` over the nodes.
    pub second_derivative_sup: f64,
}

impl WarpedCylinder {
    pub fn n_x(&self) -> usize {
        self.grid.n_nodes()
    }

    /// `e^{2w} R_g / 8` evaluated without forming `κ`, finite at `s → 0` on
    /// caps.
    fn weighted_potential(&self, i: usize) -> f64 {
        let e2w = (2.0 * self.w[i]).exp();
        (2.0 * (1.0 - self.laplace_w[i])
            - (4.0 * self.w_ss[i] + 6.0 * self.w_s[i] * self.w_s[i]) * e2w)
            / 8.0
    }
}

pub fn assemble_cylinder(spec: &CylinderSpec) -> Result<WarpedCylinder> {
    let (a, b) = spec.interval;
    if !(a.is_finite() && b.is_finite() && b > a && a >= 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "interval".into(),
            value: b - a,
            reason: "need 0 <= a < b",
        });
    }
    if spec.n_s < 4 {
        return Err(Error::ParameterOutOfRange {
            name: "n_s".into(),
            value: spec.n_s as f64,
            reason: "need at least 4 s-nodes",
        });
    }
    if matches!(spec.path, ConformalPath::Cap { .. }) && (a != 0.0 || b != 3.0) {
        return Err(Error::ParameterOutOfRange {
            name: "interval".into(),
            value: b,
            reason: "caps live on (0, 3)",
        });
    }
    if matches!(spec.path, ConformalPath::FlatBall) && a < 0.0 {
        return Err(Error::NotApplicable("log s needs s > 0".into()));
    }
    for (l, m) in spec.path.harmonics() {
        if l > spec.lmax || m.unsigned_abs() as usize > l || (spec.axisymmetric && m != 0) {
            return Err(Error::ParameterOutOfRange {
                name: format!("mode ({l}, {m})"),
                value: l as f64,
                reason: "not representable on the sphere grid",
            });
        }
    }

    let grid = spec.grid();
    let nx = grid.n_nodes();
    let (s, s_weights, diff) = chebyshev(spec.n_s, a, b);
    let n = spec.n_s * nx;
    let (mut w, mut w_s, mut w_ss) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut laplace_w = vec![0.0; n];
    let mut second_sup: f64 = 0.0;
    for (q, &sq) in s.iter().enumerate() {
        for x in 0..nx {
            let (th, ph) = grid.angles(x);
            let j = spec.path.jet(th, ph, sq, spec.interval);
            let i = q * nx + x;
            w[i] = j[0];
            w_s[i] = j[1];
            w_ss[i] = j[2];
            let e2w = (2.0 * j[0]).exp();
            second_sup = second_sup.max(((2.0 * j[2] + 4.0 * j[1] * j[1]) * e2w).abs());
        }
        let mut c = grid.analyze(&w[q * nx..(q + 1) * nx]);
        for (bi, cb) in c.iter_mut().enumerate() {
            *cb *= -grid.laplace_eigenvalue(bi);
        }
        laplace_w[q * nx..(q + 1) * nx].copy_from_slice(&grid.synthesize(&c));
    }
    let kappa: Vec<f64> = (0..n).map(|i| (-2.0 * w[i]).exp() * (1.0 - laplace_w[i])).collect();
    let r_g: Vec<f64> = (0..n)
        .map(|i| 2.0 * kappa[i] - 4.0 * w_ss[i] - 6.0 * w_s[i] * w_s[i])
        .collect();
    if !r_g.iter().all(|v| v.is_finite()) {
        return Err(Error::NotFinite("scalar curvature of the cylinder"));
    }

    let mut boundary_defect: f64 = 0.0;
    for end in [a + END_OFFSET, b - END_OFFSET] {
        for x in 0..nx {
            let (th, ph) = grid.angles(x);
            let j = spec.path.jet(th, ph, end, spec.interval);
            boundary_defect = boundary_defect.max((2.0 * j[1] * (2.0 * j[0]).exp()).abs());
        }
    }
    if spec.check_ends && !(boundary_defect <= BOUNDARY_TOL) {
        return Err(Error::BoundaryCondition(format!(
            "|d/ds e^(2w)| = {boundary_defect:e} at the ends"
        )));
    }
    if !second_sup.is_finite() {
        return Err(Error::NotFinite("second s-derivative of e^(2w)"));
    }

    Ok(WarpedCylinder {
        spec: spec.clone(),
        grid,
        s,
        s_weights,
        diff,
        w,
        w_s,
        w_ss,
        laplace_w,
        kappa,
        r_g,
        boundary_defect,
        second_derivative_sup: second_sup,
    })
}

/// The assembled 3-metric in coordinates `(θ, φ, s)`.
pub struct AssembledMetric<'a> {
    pub path: &'a ConformalPath,
    pub interval: (f64, f64),
}

impl Metric for AssembledMetric<'_> {
    fn g(&self, x: &Vec3) -> Sym3 {
        let w = self.path.jet(x[0], x[1], x[2], self.interval)[0];
        let e = (2.0 * w).exp();
        let st = x[0].sin();
        [[e, 0.0, 0.0], [0.0, e * st * st, 0.0], [0.0, 0.0, 1.0]]
    }
}

/// Scalar curvature of the assembled metric from nested fourth-order
/// differences of `g` alone.
pub fn fd_scalar_curvature(spec: &CylinderSpec, theta: f64, phi: f64, s: f64) -> Result<f64> {
    let m = AssembledMetric { path: &spec.path, interval: spec.interval };
    scalar_curvature(&m, &[theta, phi, s])
}

/// Largest `|R_g − R_fd|` over sphere nodes at the given interior s-nodes.
pub fn curvature_cross_check(cyl: &WarpedCylinder, s_nodes: &[usize]) -> Result<f64> {
    let nx = cyl.n_x();
    let mut worst: f64 = 0.0;
    for &q in s_nodes {
        for x in 0..nx {
            let (th, ph) = cyl.grid.angles(x);
            let fd = fd_scalar_curvature(&cyl.spec, th, ph, cyl.s[q])?;
            worst = worst.max((fd - cyl.r_g[q * nx + x]).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBoundRecord {
    /// `λ₁(−Δ_{γ_s} + κ_{γ_s})` per s-node.
    pub slice_eigenvalues: Vec<f64>,
    pub lambda_star: f64,
    pub lambda_star_s: f64,
    pub lambda1: f64,
    /// `|λ₁(n_s) − λ₁(n_s/2)|`.
    pub discretization_estimate: f64,
    pub tol: f64,
    pub bound: f64,
    pub margin: f64,
    pub bound_met: bool,
    pub boundary_defect: f64,
}

/// Ascending Gram products `Σ_x W_x f_x Y_i Y_j` for one s-node.
fn weighted_gram(grid: &SphereGrid, f: &[f64]) -> DMatrix<f64> {
    let nb = grid.n_coeffs();
    let nx = grid.n_nodes();
    let mut m = DMatrix::zeros(nb, nb);
    for x in 0..nx {
        let wf = grid.weight(x) * f[x];
        if wf == 0.0 {
            continue;
        }
        for i in 0..nb {
            let yi = wf * grid.basis_value(i, x);
            for j in i..nb {
                m[(i, j)] += yi * grid.basis_value(j, x);
            }
        }
    }
    for i in 0..nb {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    m
}

fn smallest_generalized(a: DMatrix<f64>, b: DMatrix<f64>, what: &'static str) -> Result<f64> {
    let l = Cholesky::new(b).ok_or(Error::Singular(what))?.l();
    let li = l.try_inverse().ok_or(Error::Singular(what))?;
    let c = &li * a * li.transpose();
    let c = 0.5 * (&c + c.transpose());
    let ev = SymmetricEigen::try_new(c, 1e-14, 10_000)
        .ok_or(Error::EigenNoConvergence { iterations: 10_000, residual: f64::NAN })?
        .eigenvalues;
    Ok(ev.min())
}

/// `λ₁(−Δ_{γ_s} + κ_{γ_s})` per s-node, from
/// `(−Δ* + 1 − Δ* w) ξ = λ e^{2w} ξ`.
pub fn slice_eigenvalues(cyl: &WarpedCylinder) -> Result<Vec<f64>> {
    let g = &cyl.grid;
    let nx = cyl.n_x();
    let nb = g.n_coeffs();
    (0..cyl.s.len())
        .map(|q| {
            let r = q * nx..(q + 1) * nx;
            let pot: Vec<f64> = cyl.laplace_w[r.clone()].iter().map(|l| 1.0 - l).collect();
            let e2w: Vec<f64> = cyl.w[r].iter().map(|w| (2.0 * w).exp()).collect();
            let mut a = weighted_gram(g, &pot);
            for i in 0..nb {
                a[(i, i)] += g.laplace_eigenvalue(i);
            }
            smallest_generalized(a, weighted_gram(g, &e2w), "slice mass matrix")
        })
        .collect()
}

/// First Neumann eigenvalue of `−Δ_g + R_g/8` on the cylinder.
///
/// Weak form `∫∫ |∇*φ|² + e^{2w}(φ_s² + R_g φ²/8) dA* ds` against
/// `∫∫ e^{2w} φ² dA* ds`, tensor basis `Y_i(x) ℓ_j(s)`.
pub fn conformal_eigenvalue(cyl: &WarpedCylinder) -> Result<f64> {
    let g = &cyl.grid;
    let nx = cyl.n_x();
    let nb = g.n_coeffs();
    let ns = cyl.s.len();
    let dim = nb * ns;
    if dim > MAX_DIMENSION {
        return Err(Error::NotApplicable(format!(
            "cylinder eigenproblem of dimension {dim} exceeds {MAX_DIMENSION}"
        )));
    }
    let mut k = DMatrix::zeros(dim, dim);
    let mut mass_blocks = Vec::with_capacity(ns);
    for q in 0..ns {
        let r = q * nx..(q + 1) * nx;
        let e2w: Vec<f64> = cyl.w[r.clone()].iter().map(|w| (2.0 * w).exp()).collect();
        let pot: Vec<f64> = r.clone().map(|i| cyl.weighted_potential(i)).collect();
        let e = weighted_gram(g, &e2w);
        let p = weighted_gram(g, &pot);
        let fq = cyl.s_weights[q];
        for i in 0..nb {
            k[(q * nb + i, q * nb + i)] += fq * g.laplace_eigenvalue(i);
            for i2 in 0..nb {
                k[(q * nb + i, q * nb + i2)] += fq * p[(i, i2)];
            }
        }
        for j in 0..ns {
            let dj = cyl.diff[(q, j)];
            if dj == 0.0 {
                continue;
            }
            for j2 in 0..ns {
                let c = fq * dj * cyl.diff[(q, j2)];
                for i in 0..nb {
                    for i2 in 0..nb {
                        k[(j * nb + i, j2 * nb + i2)] += c * e[(i, i2)];
                    }
                }
            }
        }
        mass_blocks.push(e * fq);
    }
    // block-diagonal mass: reduce blockwise
    let mut linv = DMatrix::zeros(dim, dim);
    for (q, mb) in mass_blocks.into_iter().enumerate() {
        let l = Cholesky::new(mb).ok_or(Error::Singular("cylinder mass matrix"))?.l();
        let li = l.try_inverse().ok_or(Error::Singular("cylinder mass matrix"))?;
        linv.view_mut((q * nb, q * nb), (nb, nb)).copy_from(&li);
    }
    let c = &linv * k * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let ev = SymmetricEigen::try_new(c, 1e-14, 10_000)
        .ok_or(Error::EigenNoConvergence { iterations: 10_000, residual: f64::NAN })?
        .eigenvalues;
    Ok(ev.min())
}

/// Checks `λ₁(−Δ_g + R_g/8) ≥ λ*/4 − tol` with
/// `tol = 1e-6 + |λ₁(n_s) − λ₁(n_s/2)|`.
pub fn eigen_bound_check(cyl: &WarpedCylinder) -> Result<EigenBoundRecord> {
    if !(cyl.boundary_defect <= BOUNDARY_TOL) {
        return Err(Error::NotApplicable(format!(
            "ends are not Neumann-compatible (|d/ds e^(2w)| = {:e})",
            cyl.boundary_defect
        )));
    }
    let slices = slice_eigenvalues(cyl)?;
    let (qmin, lambda_star) = slices
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (q, v)| if v < acc.1 { (q, v) } else { acc });
    if !(lambda_star > 0.0) {
        return Err(Error::NotApplicable(format!(
            "lambda_* = {lambda_star:e} is not positive"
        )));
    }
    let lambda1 = conformal_eigenvalue(cyl)?;
    let mut coarse_spec = cyl.spec.clone();
    coarse_spec.n_s = (cyl.spec.n_s / 2).max(4);
    let coarse = conformal_eigenvalue(&assemble_cylinder(&coarse_spec)?)?;
    let estimate = (lambda1 - coarse).abs();
    let tol = 1e-6 + estimate;
    let bound = lambda_star / 4.0;
    Ok(EigenBoundRecord {
        slice_eigenvalues: slices,
        lambda_star,
        lambda_star_s: cyl.s[qmin],
        lambda1,
        discretization_estimate: estimate,
        tol,
        bound,
        margin: lambda1 - bound,
        bound_met: lambda1 >= bound - tol,
        boundary_defect: cyl.boundary_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_rule_and_derivative() {
        let (s, w, d) = chebyshev(16, 0.0, 3.0);
        assert!(s.windows(2).all(|p| p[0] < p[1]));
        let int: f64 = s.iter().zip(&w).map(|(s, w)| w * s.powi(5)).sum();
        assert!((int - 3f64.powi(6) / 6.0).abs() < 1e-11);
        let f: Vec<f64> = s.iter().map(|s| s.powi(4)).collect();
        for i in 0..16 {
            let df: f64 = (0..16).map(|j| d[(i, j)] * f[j]).sum();
            assert!((df - 4.0 * s[i].powi(3)).abs() < 1e-10);
        }
    }

    #[test]
    fn off_grid_harmonics_match_grid() {
        let g = SphereGrid::new(4);
        for (b, &(l, m)) in g.basis().iter().enumerate() {
            for q in [0, 7, 23] {
                let (th, ph) = g.angles(q);
                assert!((real_harmonic(l, m, th, ph) - g.basis_value(b, q)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cutoffs_have_the_stated_shape() {
        for i in 1..300 {
            let s = 0.01 * i as f64;
            let (e, a) = cutoffs(s);
            assert!((0.0..=1.0).contains(&e[0]) && a[0] <= 0.0);
            if s <= 1.0 {
                assert_eq!(e[0], 0.0);
            }
            if s >= 2.0 {
                assert_eq!((e[0], a[0]), (1.0, 0.0));
            }
            if s <= 0.5 {
                assert!((a[0] - s.ln()).abs() < 1e-15);
            }
            // derivatives against differences
            let h = 1e-5;
            let tol = 1e-6 * (1.0 + s.powi(-4));
            let (ep, ap) = cutoffs(s + h);
            let (em, am) = cutoffs(s - h);
            assert!((e[1] - (ep[0] - em[0]) / (2.0 * h)).abs() < tol);
            assert!((a[1] - (ap[0] - am[0]) / (2.0 * h)).abs() < tol);
            assert!((a[2] - (ap[1] - am[1]) / (2.0 * h)).abs() < 10.0 * tol);
        }
    }

    #[test]
    fn product_cylinder() {
        let cyl = assemble_cylinder(&CylinderSpec::product((0.0, 3.0))).unwrap();
        assert!(cyl.r_g.iter().all(|r| (r - 2.0).abs() < 1e-12));
        let rec = eigen_bound_check(&cyl).unwrap();
        assert!((rec.lambda_star - 1.0).abs() < 1e-10);
        assert!((rec.lambda1 - 0.25).abs() < 1e-10);
        assert!(rec.bound_met);
    }

    #[test]
    fn flat_ball_is_scalar_flat() {
        let mut spec = CylinderSpec::new(ConformalPath::FlatBall, (0.5, 2.0));
        assert!(matches!(assemble_cylinder(&spec), Err(Error::BoundaryCondition(_))));
        spec.check_ends = false;
        let cyl = assemble_cylinder(&spec).unwrap();
        assert!(cyl.r_g.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn printed_exponent_fails_the_curvature_oracle() {
        // κ = e^{-w}(1 − Δw) instead of e^{-2w}(1 − Δw)
        let spec = CylinderSpec::new(
            ConformalPath::Modes(vec![
                Mode { l: 0, m: 0, amplitude: 0.8, wavenumber: 0 },
                Mode { l: 1, m: 0, amplitude: 0.1, wavenumber: 1 },
            ]),
            (0.5 * PI, 1.5 * PI),
        );
        let cyl = assemble_cylinder(&spec).unwrap();
        let nx = cyl.n_x();
        let q = 20;
        let mut worst_printed: f64 = 0.0;
        for x in 0..nx {
            let i = q * nx + x;
            let (th, ph) = cyl.grid.angles(x);
            let fd = fd_scalar_curvature(&spec, th, ph, cyl.s[q]).unwrap();
            let printed = 2.0 * (-cyl.w[i]).exp() * (1.0 - cyl.laplace_w[i])
                - 4.0 * cyl.w_ss[i]
                - 6.0 * cyl.w_s[i].powi(2);
            worst_printed = worst_printed.max((fd - printed).abs());
        }
        assert!(worst_printed > 0.1);
        assert!(curvature_cross_check(&cyl, &[q]).unwrap() < 1e-6);
    }
}
