//! Gauss–Legendre × equispaced sphere grids and real orthonormal spherical
//! harmonics with exact derivatives.
//!
//! Basis ordering: `(l, m)` for `l = 0..=lmax`, `m = -l..=l`, with
//! `Y_lm ∝ P̄_l^|m|(cos θ) · {cos mφ, 1, sin |m|φ}` for `m > 0, = 0, < 0`.
//! The axisymmetric grid keeps only `m = 0`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::gauss_legendre;

/// Nodal derivatives of a spectral field in `(θ, φ)`.
#[derive(Debug, Clone, Default)]
pub struct Derivatives {
    pub v: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub tt: Vec<f64>,
    pub tp: Vec<f64>,
    pub pp: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    lmax: usize,
    n_lat: usize,
    n_lon: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    lat_weights: Vec<f64>,
    phi: Vec<f64>,
    basis: Vec<(usize, i64)>,
    /// `[lat][basis]` tables of `P̄`, `dP̄/dθ`, `d²P̄/dθ²` (including the √2
    /// normalisation for `m ≠ 0`).
    leg: Vec<f64>,
    leg_t: Vec<f64>,
    leg_tt: Vec<f64>,
}

impl SphereGrid {
    /// Full grid with band limit `lmax`, oversampled by 3/2 so that cubic
    /// products of band-limited fields are integrated without aliasing.
    pub fn new(lmax: usize) -> Self {
        let n_lat = 3 * lmax / 2 + 2;
        let n_lon = 3 * lmax + 2;
        Self::with_resolution(lmax, n_lat, n_lon)
    }

    /// Axisymmetric grid (one longitude, `m = 0` modes only).
    pub fn axisymmetric(lmax: usize) -> Self {
        Self::with_resolution(lmax, 3 * lmax / 2 + 2, 1)
    }

    /// Explicit resolution; `n_lon == 1` selects the axisymmetric mode.
    pub fn with_resolution(lmax: usize, n_lat: usize, n_lon: usize) -> Self {
        assert!(n_lat > lmax, "need n_lat > lmax");
        assert!(n_lon == 1 || n_lon > 2 * lmax, "need n_lon > 2 lmax");
        let (x, w) = gauss_legendre(n_lat);
        let sin_theta: Vec<f64> = x.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let phi: Vec<f64> = (0..n_lon).map(|j| 2.0 * PI * j as f64 / n_lon as f64).collect();
        let mut basis = Vec::new();
        for l in 0..=lmax {
            if n_lon == 1 {
                basis.push((l, 0));
            } else {
                for m in -(l as i64)..=(l as i64) {
                    basis.push((l, m));
                }
            }
        }
        let nb = basis.len();
        let mut leg = vec![0.0; n_lat * nb];
        let mut leg_t = vec![0.0; n_lat * nb];
        let mut leg_tt = vec![0.0; n_lat * nb];
        for i in 0..n_lat {
            let (p, dp, ddp) = normalized_legendre(lmax, x[i], sin_theta[i]);
            for (b, &(l, m)) in basis.iter().enumerate() {
                let ma = m.unsigned_abs() as usize;
                let scale = if m == 0 { 1.0 } else { 2f64.sqrt() };
                let idx = l * (lmax + 1) + ma;
                leg[i * nb + b] = scale * p[idx];
                leg_t[i * nb + b] = scale * dp[idx];
                leg_tt[i * nb + b] = scale * ddp[idx];
            }
        }
        Self {
            lmax,
            n_lat,
            n_lon,
            cos_theta: x,
            sin_theta,
            lat_weights: w,
            phi,
            basis,
            leg,
            leg_t,
            leg_tt,
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn n_lat(&self) -> usize {
        self.n_lat
    }
    pub fn n_lon(&self) -> usize {
        self.n_lon
    }
    pub fn is_axisymmetric(&self) -> bool {
        self.n_lon == 1
    }
    pub fn n_nodes(&self) -> usize {
        self.n_lat * self.n_lon
    }
    pub fn n_coeffs(&self) -> usize {
        self.basis.len()
    }
    pub fn basis(&self) -> &[(usize, i64)] {
        &self.basis
    }

    /// Index of `(l, m)` in the basis, if present.
    pub fn index(&self, l: usize, m: i64) -> Option<usize> {
        self.basis.iter().position(|&b| b == (l, m))
    }

    /// `(θ, φ)` of node `q`.
    pub fn angles(&self, q: usize) -> (f64, f64) {
        let (i, j) = (q / self.n_lon, q % self.n_lon);
        (self.cos_theta[i].acos(), self.phi[j])
    }

    pub fn cos_sin_theta(&self, q: usize) -> (f64, f64) {
        let i = q / self.n_lon;
        (self.cos_theta[i], self.sin_theta[i])
    }

    /// Latitude in degrees (90 at the north pole) and longitude in degrees.
    pub fn lat_lon_degrees(&self, q: usize) -> (f64, f64) {
        let (t, p) = self.angles(q);
        (90.0 - t.to_degrees(), p.to_degrees())
    }

    /// Quadrature weight of node `q` for the unit round sphere.
    pub fn weight(&self, q: usize) -> f64 {
        let (i, _) = (q / self.n_lon, q % self.n_lon);
        self.lat_weights[i] * 2.0 * PI / self.n_lon as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|q| self.weight(q)).collect()
    }

    fn trig(&self, m: i64, j: usize) -> [f64; 3] {
        // value, d/dφ, d²/dφ²
        let p = self.phi[j];
        let mf = m.unsigned_abs() as f64;
        if m > 0 {
            let (s, c) = (mf * p).sin_cos();
            [c, -mf * s, -mf * mf * c]
        } else if m < 0 {
            let (s, c) = (mf * p).sin_cos();
            [s, mf * c, -mf * mf * s]
        } else {
            [1.0, 0.0, 0.0]
        }
    }

    /// Value of basis function `b` at node `q`.
    pub fn basis_value(&self, b: usize, q: usize) -> f64 {
        let (i, j) = (q / self.n_lon, q % self.n_lon);
        self.leg[i * self.basis.len() + b] * self.trig(self.basis[b].1, j)[0]
    }

    /// Nodal values and `(θ, φ)` derivatives of basis function `b`.
    pub fn basis_derivatives(&self, b: usize) -> Derivatives {
        let mut c = vec![0.0; self.n_coeffs()];
        c[b] = 1.0;
        self.derivatives(&c)
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let nb = self.basis.len();
        let mut out = vec![0.0; self.n_nodes()];
        for i in 0..self.n_lat {
            for j in 0..self.n_lon {
                let mut acc = 0.0;
                for b in 0..nb {
                    if coeffs[b] != 0.0 {
                        acc += coeffs[b] * self.leg[i * nb + b] * self.trig(self.basis[b].1, j)[0];
                    }
                }
                out[i * self.n_lon + j] = acc;
            }
        }
        out
    }

    /// Quadrature projection onto the basis (exact for band-limited fields).
    pub fn analyze(&self, nodal: &[f64]) -> Vec<f64> {
        let nb = self.basis.len();
        let mut c = vec![0.0; nb];
        for i in 0..self.n_lat {
            for j in 0..self.n_lon {
                let q = i * self.n_lon + j;
                let wv = self.weight(q) * nodal[q];
                if wv == 0.0 {
                    continue;
                }
                for b in 0..nb {
                    c[b] += wv * self.leg[i * nb + b] * self.trig(self.basis[b].1, j)[0];
                }
            }
        }
        c
    }

    pub fn derivatives(&self, coeffs: &[f64]) -> Derivatives {
        let nb = self.basis.len();
        let n = self.n_nodes();
        let mut d = Derivatives {
            v: vec![0.0; n],
            t: vec![0.0; n],
            p: vec![0.0; n],
            tt: vec![0.0; n],
            tp: vec![0.0; n],
            pp: vec![0.0; n],
        };
        for i in 0..self.n_lat {
            for j in 0..self.n_lon {
                let q = i * self.n_lon + j;
                for b in 0..nb {
                    let c = coeffs[b];
                    if c == 0.0 {
                        continue;
                    }
                    let tr = self.trig(self.basis[b].1, j);
                    let (p, pt, ptt) = (
                        self.leg[i * nb + b],
                        self.leg_t[i * nb + b],
                        self.leg_tt[i * nb + b],
                    );
                    d.v[q] += c * p * tr[0];
                    d.t[q] += c * pt * tr[0];
                    d.p[q] += c * p * tr[1];
                    d.tt[q] += c * ptt * tr[0];
                    d.tp[q] += c * pt * tr[1];
                    d.pp[q] += c * p * tr[2];
                }
            }
        }
        d
    }

    /// Integral of a nodal field over the unit round sphere.
    pub fn integrate(&self, nodal: &[f64]) -> f64 {
        nodal.iter().enumerate().map(|(q, v)| self.weight(q) * v).sum()
    }

    /// Coefficients of the constant function `c`.
    pub fn constant(&self, c: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n_coeffs()];
        v[0] = c * (4.0 * PI).sqrt();
        v
    }

    /// Eigenvalue `l(l+1)` of `-Δ` on the unit sphere for basis entry `b`.
    pub fn laplace_eigenvalue(&self, b: usize) -> f64 {
        let l = self.basis[b].0 as f64;
        l * (l + 1.0)
    }
}

/// Real orthonormal harmonic `Y_lm(θ, φ)` at an arbitrary point, in the
/// convention of [`SphereGrid`].
pub fn real_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> f64 {
    let ma = m.unsigned_abs() as usize;
    if ma > l {
        return 0.0;
    }
    let (s, x) = theta.sin_cos();
    let (p, _, _) = normalized_legendre(l, x, s.max(1e-300));
    let v = p[l * (l + 1) + ma];
    let mf = ma as f64;
    if m > 0 {
        2f64.sqrt() * v * (mf * phi).cos()
    } else if m < 0 {
        2f64.sqrt() * v * (mf * phi).sin()
    } else {
        v
    }
}

/// Orthonormal associated Legendre functions (no Condon–Shortley phase),
/// normalised so that `P̄_lm(cos θ) e^{imφ}` is orthonormal on the sphere.
/// Returns `(P̄, dP̄/dθ, d²P̄/dθ²)` indexed by `l * (lmax + 1) + m`.
fn normalized_legendre(lmax: usize, x: f64, s: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let w = lmax + 1;
    let mut p = vec![0.0; w * w];
    p[0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=lmax {
        let mf = m as f64;
        p[m * w + m] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[(m - 1) * w + m - 1];
    }
    for m in 0..lmax {
        let mf = m as f64;
        p[(m + 1) * w + m] = (2.0 * mf + 3.0).sqrt() * x * p[m * w + m];
    }
    for m in 0..=lmax {
        let mf = m as f64;
        for l in m + 2..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            p[l * w + m] = a * (x * p[(l - 1) * w + m] - b * p[(l - 2) * w + m]);
        }
    }
    let mut dp = vec![0.0; w * w];
    let mut ddp = vec![0.0; w * w];
    for l in 0..=lmax {
        let lf = l as f64;
        for m in 0..=l {
            let mf = m as f64;
            let prev = if l > m { p[(l - 1) * w + m] } else { 0.0 };
            let c = if l > 0 {
                ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt()
            } else {
                0.0
            };
            let d = (lf * x * p[l * w + m] - c * prev) / s;
            dp[l * w + m] = d;
            ddp[l * w + m] =
                -x / s * d - (lf * (lf + 1.0) - mf * mf / (s * s)) * p[l * w + m];
        }
    }
    (p, dp, ddp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_to_band_limit() {
        let g = SphereGrid::new(6);
        let n = g.n_coeffs();
        let vals: Vec<Vec<f64>> = (0..n)
            .map(|b| (0..g.n_nodes()).map(|q| g.basis_value(b, q)).collect())
            .collect();
        for a in 0..n {
            for b in 0..n {
                let prod: Vec<f64> = vals[a].iter().zip(&vals[b]).map(|(x, y)| x * y).collect();
                let ip = g.integrate(&prod);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12, "({a},{b}) -> {ip}");
            }
        }
    }

    #[test]
    fn round_trip_and_constant() {
        let g = SphereGrid::new(8);
        let c: Vec<f64> = (0..g.n_coeffs()).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let back = g.analyze(&g.synthesize(&c));
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let one = g.synthesize(&g.constant(1.0));
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!((g.integrate(&one) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn laplacian_eigenfunctions() {
        // Δ on the unit sphere: f_tt + cot f_t + f_pp / sin²
        let g = SphereGrid::new(7);
        for b in 0..g.n_coeffs() {
            let d = g.basis_derivatives(b);
            for q in 0..g.n_nodes() {
                let (c, s) = g.cos_sin_theta(q);
                let lap = d.tt[q] + c / s * d.t[q] + d.pp[q] / (s * s);
                assert!((lap + g.laplace_eigenvalue(b) * d.v[q]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn y10_is_cos_theta() {
        let g = SphereGrid::axisymmetric(4);
        let b = g.index(1, 0).unwrap();
        for q in 0..g.n_nodes() {
            let (c, s) = g.cos_sin_theta(q);
            let k = (3.0 / (4.0 * PI)).sqrt();
            let d = g.basis_derivatives(b);
            assert!((d.v[q] - k * c).abs() < 1e-14);
            assert!((d.t[q] + k * s).abs() < 1e-14);
            assert!((d.tt[q] + k * c).abs() < 1e-14);
        }
        let w: f64 = g.weights().iter().sum();
        assert!((w - 4.0 * PI).abs() < 1e-12);
    }
}
