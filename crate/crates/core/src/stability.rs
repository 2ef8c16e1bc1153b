//! Linearised expansion operator `L φ = −Δφ − 2⟨ξ, ∇φ⟩ + V φ` of a surface,
//! its principal eigenpair, and the arctan barrier profile.
//!
//! Eigenproblems are solved on the spectral Galerkin matrix
//! `A_ij = ∫ Y_i L(Y_j)` over the round-sphere quadrature, which keeps the
//! discrete spectrum free of spurious grid modes.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::initial_data::InitialDataSet;
use crate::linalg::{bisect, max_abs};
use crate::surfaces::{
    mean, oscillation, surface_geometry, Ambient, Derivatives, Mat2, SphereGrid, Surface,
    SurfaceGeometry,
};

/// Tolerance on the oscillation of `θ` for a surface to count as a CES.
pub const CES_TOLERANCE: f64 = 1e-6;

/// Largest Galerkin dimension solved with a dense Schur decomposition.
pub const DENSE_LIMIT: usize = 4096;

/// Per-node coefficients of the operator.
#[derive(Debug, Clone, Copy)]
pub struct OperatorNode {
    pub gamma_inv: Mat2,
    pub christoffel: [Mat2; 2],
    pub xi: [f64; 2],
    pub potential: f64,
}

/// Potential split into its named pieces (for inspection and tests).
#[derive(Debug, Clone, Default)]
pub struct PotentialParts {
    pub p_term: Vec<f64>,
    pub div_xi: Vec<f64>,
    pub xi_norm2: Vec<f64>,
    pub theta_term: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExpansionOperator {
    pub grid: SphereGrid,
    pub theta: f64,
    pub theta_oscillation: f64,
    pub nodes: Vec<OperatorNode>,
    pub parts: PotentialParts,
    matrix: DMatrix<f64>,
}

impl ExpansionOperator {
    fn from_nodes(grid: &SphereGrid, theta: f64, osc: f64, nodes: Vec<OperatorNode>, parts: PotentialParts) -> Self {
        let mut op = Self {
            grid: grid.clone(),
            theta,
            theta_oscillation: osc,
            nodes,
            parts,
            matrix: DMatrix::zeros(0, 0),
        };
        op.matrix = op.galerkin();
        op
    }

    /// Operator on the unit round sphere with injected drift `ξ = ∇η` and
    /// potential `v` (nodal).
    pub fn manufactured(grid: &SphereGrid, eta: &[f64], v: &[f64]) -> Self {
        let de = grid.derivatives(eta);
        let nodes = (0..grid.n_nodes())
            .map(|q| {
                let (c, s) = grid.cos_sin_theta(q);
                OperatorNode {
                    gamma_inv: [[1.0, 0.0], [0.0, 1.0 / (s * s)]],
                    christoffel: round_christoffel(c, s),
                    xi: [de.t[q], de.p[q]],
                    potential: v[q],
                }
            })
            .collect();
        Self::from_nodes(grid, f64::NAN, 0.0, nodes, PotentialParts::default())
    }

    pub fn potential(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.potential).collect()
    }

    pub fn dim(&self) -> usize {
        self.grid.n_coeffs()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn apply_derivs(&self, d: &Derivatives) -> Vec<f64> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(q, n)| {
                let grad = [d.t[q], d.p[q]];
                let hess = [[d.tt[q], d.tp[q]], [d.tp[q], d.pp[q]]];
                let mut lap = 0.0;
                let mut drift = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        let cov = hess[a][b]
                            - n.christoffel[0][a][b] * grad[0]
                            - n.christoffel[1][a][b] * grad[1];
                        lap += n.gamma_inv[a][b] * cov;
                        drift += n.gamma_inv[a][b] * n.xi[a] * grad[b];
                    }
                }
                -lap - 2.0 * drift + n.potential * d.v[q]
            })
            .collect()
    }

    /// `L φ` at the nodes for spectral coefficients `phi`.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        self.apply_derivs(&self.grid.derivatives(phi))
    }

    fn galerkin(&self) -> DMatrix<f64> {
        let nb = self.grid.n_coeffs();
        let mut m = DMatrix::zeros(nb, nb);
        for j in 0..nb {
            let col = self.grid.analyze(&self.apply_derivs(&self.grid.basis_derivatives(j)));
            for i in 0..nb {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    /// Solves `L ψ = rhs` (nodal right-hand side) in the Galerkin space.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let b = DVector::from_vec(self.grid.analyze(rhs));
        let lu = self.matrix.clone().lu();
        let x = lu.solve(&b).ok_or(Error::Singular("stability operator"))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("stability operator"));
        }
        Ok(x.iter().copied().collect())
    }

    /// Marginal band `1e−6 (‖V‖∞ + 1)`.
    pub fn tol_marginal(&self) -> f64 {
        1e-6 * (max_abs(&self.potential()) + 1.0)
    }

    /// Infinity norm of the Galerkin matrix, used to scale residuals.
    pub fn norm(&self) -> f64 {
        (0..self.matrix.nrows())
            .map(|i| self.matrix.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn round_christoffel(c: f64, s: f64) -> [Mat2; 2] {
    // γ = dθ² + sin²θ dφ²
    [[[0.0, 0.0], [0.0, -s * c]], [[0.0, c / s], [c / s, 0.0]]]
}

fn operator_from_geometry(grid: &SphereGrid, geo: &SurfaceGeometry, pointwise: bool) -> ExpansionOperator {
    let th = geo.expansion();
    let theta = mean(&th);
    let osc = oscillation(&th);
    let mut parts = PotentialParts::default();
    let nodes = geo
        .nodes
        .iter()
        .zip(&th)
        .map(|(n, &t)| {
            let t = if pointwise { t } else { theta };
            parts.p_term.push(n.p_term());
            parts.div_xi.push(n.div_xi);
            parts.xi_norm2.push(n.xi_norm2);
            parts.theta_term.push(-0.5 * t * (2.0 * n.trace_k + t));
            OperatorNode {
                gamma_inv: n.gamma_inv,
                christoffel: n.christoffel,
                xi: n.xi,
                potential: n.potential(t),
            }
        })
        .collect();
    ExpansionOperator::from_nodes(grid, theta, osc, nodes, parts)
}

/// Assembles `L_Σ` for a constant-expansion surface.
pub fn assemble(data: &dyn Ambient, grid: &SphereGrid, surface: &Surface) -> Result<ExpansionOperator> {
    let geo = surface_geometry(data, grid, surface)?;
    let osc = oscillation(&geo.expansion());
    if osc > CES_TOLERANCE {
        return Err(Error::NotCes { oscillation: osc });
    }
    Ok(operator_from_geometry(grid, &geo, false))
}

/// Linearisation of `θ` for an arbitrary surface (pointwise `θ` in the
/// potential). Coincides with [`assemble`] on a CES.
pub fn linearization(data: &dyn Ambient, grid: &SphereGrid, surface: &Surface) -> Result<ExpansionOperator> {
    let geo = surface_geometry(data, grid, surface)?;
    Ok(operator_from_geometry(grid, &geo, true))
}

pub fn linearization_from_geometry(grid: &SphereGrid, geo: &SurfaceGeometry) -> ExpansionOperator {
    operator_from_geometry(grid, geo, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    StrictlyStable,
    MarginallyStable,
    Unstable,
}

impl StabilityClass {
    pub fn classify(lambda: f64, tol: f64) -> Self {
        if lambda > tol {
            StabilityClass::StrictlyStable
        } else if lambda >= -tol {
            StabilityClass::MarginallyStable
        } else {
            StabilityClass::Unstable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StabilityClass::StrictlyStable => "strictly_stable",
            StabilityClass::MarginallyStable => "marginally_stable",
            StabilityClass::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Imaginary part discarded when truncating to the real axis.
    pub imag: f64,
    pub beta: Vec<f64>,
    pub beta_coeffs: Vec<f64>,
    pub residual: f64,
    pub class: StabilityClass,
    pub positive: bool,
    pub iterations: usize,
    /// Whether the dense Schur decomposition located `λ₁`.
    pub dense: bool,
}

/// Dense spectrum of the Galerkin matrix as `(re, im)` pairs.
/// `None` when the QR iteration does not converge.
pub fn dense_spectrum(op: &ExpansionOperator) -> Option<Vec<(f64, f64)>> {
    let schur = nalgebra::linalg::Schur::try_new(op.matrix.clone(), f64::EPSILON, 100 * op.dim().max(10))?;
    Some(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect())
}

fn inverse_iteration(a: &DMatrix<f64>, sigma: f64, max_iter: usize) -> Result<(f64, DVector<f64>, usize)> {
    let n = a.nrows();
    let shifted = a - DMatrix::identity(n, n) * sigma;
    let lu = shifted.lu();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-13 * (1.0 + scale);
    let mut x = DVector::from_element(n, 0.0);
    x[0] = 1.0;
    for i in 1..n {
        x[i] = 1e-3 / (i as f64 + 1.0);
    }
    x /= x.norm();
    let mut lambda = f64::NAN;
    for it in 1..=max_iter {
        let y = lu.solve(&x).ok_or(Error::Singular("inverse iteration"))?;
        let ny = y.norm();
        if !(ny.is_finite() && ny > 0.0) {
            return Err(Error::NotFinite("inverse iteration"));
        }
        let y = y / ny;
        let ay = a * &y;
        let new = y.dot(&ay);
        let res = (&ay - &y * new).norm();
        let done = res <= tol;
        lambda = new;
        x = y;
        if done {
            return Ok((lambda, x, it));
        }
    }
    let res = (a * &x - &x * lambda).norm();
    if res <= 1e-8 * (1.0 + scale) {
        return Ok((lambda, x, max_iter));
    }
    Err(Error::EigenNoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

/// Principal eigenpair (minimal real part) of `L_Σ`.
pub fn principal_eig(op: &ExpansionOperator) -> Result<EigenResult> {
    let tol = op.tol_marginal();
    let v = op.potential();
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let n = op.dim();
    let spec = if n <= DENSE_LIMIT { dense_spectrum(op) } else { None };
    let (lambda_dense, imag, sigma) = if let Some(spec) = spec {
        let &(re, im) = spec
            .iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal))
            .ok_or(Error::Internal("empty spectrum".into()))?;
        if !re.is_finite() {
            return Err(Error::NotFinite("dense spectrum"));
        }
        if im.abs() > tol {
            return Err(Error::ComplexPrincipal { re, im });
        }
        (Some(re), im, re - 1e-7 * (1.0 + re.abs()))
    } else {
        // λ₁ ≥ min V, so a shift below min V isolates the principal eigenvalue
        (None, 0.0, vmin - 0.1 * (1.0 + vmin.abs()))
    };
    let dense = lambda_dense.is_some();
    let (mut lambda, x, iterations) = inverse_iteration(&op.matrix, sigma, 500)?;
    if let Some(ld) = lambda_dense {
        if (lambda - ld).abs() > 1e-6 * (1.0 + ld.abs()) {
            return Err(Error::Internal(alloc::format!(
                "inverse iteration converged to {lambda}, dense spectrum gives {ld}"
            )));
        }
        lambda = if (lambda - ld).abs() < 1e-9 * (1.0 + ld.abs()) { lambda } else { ld };
    }
    let mut coeffs: Vec<f64> = x.iter().copied().collect();
    let mut beta = op.grid.synthesize(&coeffs);
    let (imax, _) = beta
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    let scale = 1.0 / beta[imax];
    for c in &mut coeffs {
        *c *= scale;
    }
    for b in &mut beta {
        *b *= scale;
    }
    let lb = op.apply(&coeffs);
    let residual = lb
        .iter()
        .zip(&beta)
        .fold(0.0f64, |m, (l, b)| m.max((l - lambda * b).abs()));
    let positive = beta.iter().all(|b| *b > 0.0);
    Ok(EigenResult {
        lambda1: lambda,
        imag,
        beta,
        beta_coeffs: coeffs,
        residual,
        class: StabilityClass::classify(lambda, tol),
        positive,
        iterations,
        dense,
    })
}

/// Smallest eigenvalue of the self-adjoint operator `−Δ + W` on the unit
/// round sphere (symmetric Galerkin, dense solve).
pub fn schrodinger_ground_state(grid: &SphereGrid, w: &[f64]) -> f64 {
    let nb = grid.n_coeffs();
    let vals: Vec<Vec<f64>> = (0..nb)
        .map(|b| (0..grid.n_nodes()).map(|q| grid.basis_value(b, q)).collect())
        .collect();
    let mut m = DMatrix::zeros(nb, nb);
    for i in 0..nb {
        for j in 0..=i {
            let mut acc = 0.0;
            for q in 0..grid.n_nodes() {
                acc += grid.weight(q) * vals[i][q] * w[q] * vals[j][q];
            }
            if i == j {
                acc += grid.laplace_eigenvalue(i);
            }
            m[(i, j)] = acc;
            m[(j, i)] = acc;
        }
    }
    m.symmetric_eigenvalues().min()
}

/// Conjugated potential `V + Δη + |∇η|²` for a gradient drift on the unit
/// round sphere.
pub fn conjugated_potential(grid: &SphereGrid, eta: &[f64], v: &[f64]) -> Vec<f64> {
    let d = grid.derivatives(eta);
    (0..grid.n_nodes())
        .map(|q| {
            let (c, s) = grid.cos_sin_theta(q);
            let lap = d.tt[q] + c / s * d.t[q] + d.pp[q] / (s * s);
            let grad2 = d.t[q] * d.t[q] + d.p[q] * d.p[q] / (s * s);
            v[q] + lap + grad2
        })
        .collect()
}

/// `(η(t), η″(t) + η(t))` for `η(t) = arctan(t + 1) − arctan 1`.
pub fn barrier_profile(t: f64) -> (f64, f64) {
    let u = t + 1.0;
    let eta = u.atan() - core::f64::consts::FRAC_PI_4;
    let d2 = -2.0 * u / (1.0 + u * u).powi(2);
    (eta, d2 + eta)
}

fn barrier_derivatives(t: f64) -> [f64; 3] {
    let u = t + 1.0;
    let q = 1.0 + u * u;
    [u.atan() - core::f64::consts::FRAC_PI_4, 1.0 / q, -2.0 * u / (q * q)]
}

/// Unique real root of `η″ + η`.
pub fn barrier_root() -> f64 {
    bisect(|t| barrier_profile(t).1, 0.0, 2.0, 1e-14).expect("sign change on [0, 2]")
}

/// One sample of the barrier check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSample {
    pub t: f64,
    /// Radius of the slice `N ∩ {t}`.
    pub radius: f64,
    pub expansion: f64,
    /// `θ_N − Θ`; strictly positive for a valid barrier.
    pub margin: f64,
}

/// Expansion of the hypersurface `N = {(Σ_{w(t)}, t)}` in `M × ℝ`, where
/// `Σ_{w}` is the geodesic offset of the round CES sphere `r0` by
/// `w(t) = ε η(α t)` and `α = √(−λ₁)` (constant eigenfunction on round spheres
/// of spherically symmetric data).
pub fn barrier_check(data: &InitialDataSet, r0: f64, lambda1: f64, eps: f64, ts: &[f64]) -> Result<Vec<BarrierSample>> {
    if !(lambda1 < 0.0) {
        return Err(Error::NotApplicable("barrier needs an unstable CES (λ₁ < 0)".into()));
    }
    let alpha = (-lambda1).sqrt();
    let theta0 = data.sphere_expansion(r0)?;
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        let [e0, e1, e2] = barrier_derivatives(alpha * t);
        // offset in geodesic distance and its t-derivatives
        let w = eps * e0;
        let w1 = eps * alpha * e1;
        let w2 = eps * alpha * alpha * e2;
        let r = radius_at_distance(data, r0, w)?;
        let p = data.radial_profile(r)?;
        let slope2 = w1 * w1;
        let tilt = (1.0 + slope2).sqrt();
        let sphere_h = 2.0 * p.radius[1] / (p.a[0] * p.radius[0]);
        let expansion = sphere_h / tilt - w2 / (tilt * tilt * tilt) - 2.0 * p.q[0] - p.p[0] * slope2 / (1.0 + slope2);
        out.push(BarrierSample {
            t,
            radius: r,
            expansion,
            margin: expansion - theta0,
        });
    }
    Ok(out)
}

/// Coordinate radius at geodesic distance `w` (signed) from the sphere `r0`.
pub fn radius_at_distance(data: &InitialDataSet, r0: f64, w: f64) -> Result<f64> {
    let mut r = r0 + w / data.radial_profile(r0)?.a[0];
    for _ in 0..50 {
        let dist = crate::linalg::integrate(
            |s| data.radial_profile(s).map(|p| p.a[0]).unwrap_or(f64::NAN),
            r0,
            r,
            4,
            10,
        );
        let a = data.radial_profile(r)?.a[0];
        let step = (dist - w) / a;
        r -= step;
        if step.abs() < 1e-15 * (1.0 + r.abs()) {
            break;
        }
    }
    if !r.is_finite() {
        return Err(Error::NotFinite("radius_at_distance"));
    }
    Ok(r)
}

/// Zero vector of Galerkin size.
pub fn zero_field(grid: &SphereGrid) -> Vec<f64> {
    vec![0.0; grid.n_coeffs()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{t2, ConformallyFlat, Data, FnExtrinsic, Sym3, Vec3};
    use crate::initial_data::catalog_load;
    use crate::surfaces::{expansion, fermi_expansion};
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;
    use core::f64::consts::PI;

    fn load(name: &str, kv: &[(&str, f64)]) -> InitialDataSet {
        let p: BTreeMap<_, _> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        catalog_load(name, &p).unwrap()
    }

    #[test]
    fn flat_unit_sphere_potential() {
        let d = load("flat_vacuum", &[]);
        let grid = SphereGrid::new(6);
        let op = assemble(&d, &grid, &Surface::round(1.0)).unwrap();
        assert!(op.potential().iter().all(|v| (v + 2.0).abs() < 1e-12));
        // L(1) = V
        let one = op.apply(&grid.constant(1.0));
        assert!(one.iter().all(|v| (v + 2.0).abs() < 1e-12));
        let e = principal_eig(&op).unwrap();
        assert!((e.lambda1 + 2.0).abs() < 1e-10);
        assert_eq!(e.class, StabilityClass::Unstable);
        assert!(e.positive);
        assert!(e.beta.iter().all(|b| (b - 1.0).abs() < 1e-9), "{e:?}");
    }

    #[test]
    fn constant_k_unit_sphere_potential() {
        // Θ = 2 − 2c; V = −2 by hand (see the variation formula)
        let c = 0.1;
        let d = load("flat_constant_k", &[("c", c)]);
        let grid = SphereGrid::new(4);
        let op = assemble(&d, &grid, &Surface::round(1.0)).unwrap();
        assert!((op.theta - (2.0 - 2.0 * c)).abs() < 1e-12);
        let p = 1.0 - (1.0 - c) * (1.0 - c) - 3.0 * c * c;
        for (q, v) in op.potential().iter().enumerate() {
            assert!((op.parts.p_term[q] - p).abs() < 1e-12);
            assert!((v + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn not_ces_rejected() {
        let d = load("flat_vacuum", &[]);
        let grid = SphereGrid::new(4);
        let mut rho = grid.constant(1.0);
        rho[grid.index(2, 0).unwrap()] = 0.05;
        assert!(matches!(
            assemble(&d, &grid, &Surface::radial_graph(rho)),
            Err(Error::NotCes { .. })
        ));
    }

    #[test]
    fn manufactured_action_on_y10() {
        let grid = SphereGrid::new(8);
        let k = (3.0 / (4.0 * PI)).sqrt();
        let eta_nodal: Vec<f64> = (0..grid.n_nodes()).map(|q| 0.3 * grid.cos_sin_theta(q).0).collect();
        let eta = grid.analyze(&eta_nodal);
        let v0 = 0.7;
        let op = ExpansionOperator::manufactured(&grid, &eta, &vec![v0; grid.n_nodes()]);
        let mut y10 = zero_field(&grid);
        y10[grid.index(1, 0).unwrap()] = 1.0;
        let got = op.apply(&y10);
        for q in 0..grid.n_nodes() {
            let (c, s) = grid.cos_sin_theta(q);
            let want = 2.0 * k * c - 0.6 * k * s * s + v0 * k * c;
            assert!((got[q] - want).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_potential_eigenvalue() {
        let grid = SphereGrid::new(6);
        for c in [-2.0, 0.0, 1.5] {
            let op = ExpansionOperator::manufactured(&grid, &zero_field(&grid), &vec![c; grid.n_nodes()]);
            let e = principal_eig(&op).unwrap();
            assert!((e.lambda1 - c).abs() < 1e-8);
            assert!(e.beta.iter().all(|b| (b - 1.0).abs() < 1e-8));
        }
    }

    #[test]
    fn drift_conjugation_oracle() {
        let grid = SphereGrid::new(15);
        let eta_nodal: Vec<f64> = (0..grid.n_nodes()).map(|q| 0.3 * grid.cos_sin_theta(q).0).collect();
        let eta = grid.analyze(&eta_nodal);
        let v = vec![1.0; grid.n_nodes()];
        let op = ExpansionOperator::manufactured(&grid, &eta, &v);
        let e = principal_eig(&op).unwrap();
        let oracle = schrodinger_ground_state(&grid, &conjugated_potential(&grid, &eta, &v));
        assert!((e.lambda1 - oracle).abs() < 1e-8, "{} {}", e.lambda1, oracle);
        assert!(e.positive);
    }

    #[test]
    fn y20_potential_lowers_eigenvalue() {
        let grid = SphereGrid::new(12);
        let y20 = grid.index(2, 0).unwrap();
        let v: Vec<f64> = (0..grid.n_nodes()).map(|q| 1.0 + 0.5 * grid.basis_value(y20, q)).collect();
        let op = ExpansionOperator::manufactured(&grid, &zero_field(&grid), &v);
        let e = principal_eig(&op).unwrap();
        let oracle = schrodinger_ground_state(&grid, &v);
        assert!(e.lambda1 < 1.0 - 1e-4);
        assert!((e.lambda1 - oracle).abs() < 1e-8);
    }

    #[test]
    fn barrier_constants() {
        assert_eq!(barrier_profile(0.0).0, 0.0);
        assert!((barrier_root() - 0.6456).abs() < 1e-3);
        assert!((barrier_profile(0.5).1 + 0.0866).abs() < 1e-3);
    }

    #[test]
    fn barrier_holds_for_unstable_unit_sphere() {
        let d = load("flat_vacuum", &[]);
        let samples = barrier_check(&d, 1.0, -2.0, 1e-2, &[-2.0, -1.0, 0.0, 0.25]).unwrap();
        for s in samples {
            assert!(s.margin > 0.0, "{s:?}");
        }
    }

    #[test]
    fn derivative_consistency_on_round_spheres() {
        let grid = SphereGrid::new(4);
        for (name, r) in [("flat_vacuum", 1.0), ("painleve_gullstrand", 3.0), ("isotropic_schwarzschild", 2.0)] {
            let d = load(name, &[]);
            let op = assemble(&d, &grid, &Surface::round(r)).unwrap();
            let l1 = op.apply(&grid.constant(1.0))[0];
            let h = 1e-4;
            let base = Surface::round(r);
            let tp = fermi_expansion(&d, &grid, &base, &grid.constant(h)).unwrap()[0];
            let tm = fermi_expansion(&d, &grid, &base, &grid.constant(-h)).unwrap()[0];
            let fd = (tp - tm) / (2.0 * h);
            assert!((l1 - fd).abs() < 1e-5, "{name}: {l1} vs {fd}");
        }
    }

    #[test]
    fn linearization_with_drift() {
        // non-symmetric k and curved metric: central differences of θ along
        // Fermi graphs match L w with pointwise θ in the potential
        let metric = ConformallyFlat(|r: f64| {
            let e = 0.2 * (-r * r).exp();
            [1.0 + e, -2.0 * r * e, (4.0 * r * r - 2.0) * e]
        });
        let ext = FnExtrinsic(|x: &Vec3| -> Sym3 {
            t2(|i, j| 0.1 * (x[i] * x[(j + 1) % 3] + x[j] * x[(i + 1) % 3]) + 0.05 * x[2] * (i == j) as u8 as f64)
        });
        let data = Data(metric, ext);
        let grid = SphereGrid::new(12);
        let base = Surface::round(1.2);
        let op = linearization(&data, &grid, &base).unwrap();
        let mut w = zero_field(&grid);
        w[grid.index(1, 1).unwrap()] = 0.3;
        w[grid.index(2, -1).unwrap()] = 0.2;
        w[0] = 0.1;
        let lw = op.apply(&w);
        let t = 1e-4;
        let scaled = |s: f64| w.iter().map(|c| c * s).collect::<Vec<_>>();
        let tp = fermi_expansion(&data, &grid, &base, &scaled(t)).unwrap();
        let tm = fermi_expansion(&data, &grid, &base, &scaled(-t)).unwrap();
        let err = (0..grid.n_nodes()).fold(0.0f64, |m, q| m.max(((tp[q] - tm[q]) / (2.0 * t) - lw[q]).abs()));
        assert!(err < 1e-5, "{err}");
        let th = expansion(&data, &grid, &base).unwrap();
        assert!(oscillation(&th) > 1e-3);
    }

    #[test]
    fn fermi_linearization_small_perturbation() {
        let d = load("flat_vacuum", &[]);
        let grid = SphereGrid::new(8);
        let base = Surface::round(1.0);
        let op = assemble(&d, &grid, &base).unwrap();
        let mut w = zero_field(&grid);
        w[grid.index(1, 0).unwrap()] = 0.01;
        let th0 = expansion(&d, &grid, &base).unwrap();
        let th = fermi_expansion(&d, &grid, &base, &w).unwrap();
        let lw = op.apply(&w);
        // L² norm on the unit sphere
        let wn = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        let err = (0..grid.n_nodes()).fold(0.0f64, |m, q| m.max((th[q] - th0[q] - lw[q]).abs()));
        assert!(err <= 5e-3 * wn, "{err} vs {wn}");
    }

    #[test]
    fn remainder_is_quadratic() {
        let d = load("flat_vacuum", &[]);
        let grid = SphereGrid::new(8);
        let base = Surface::round(1.0);
        let op = assemble(&d, &grid, &base).unwrap();
        let mut w = zero_field(&grid);
        w[grid.index(1, 0).unwrap()] = 1.0;
        w[grid.index(2, 1).unwrap()] = 0.5;
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
}
