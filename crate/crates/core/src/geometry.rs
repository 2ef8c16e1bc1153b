//! Metrics, symmetric 2-tensors and the curvature/constraint quantities of an
//! initial data set `(M, g, k)`.
//!
//! Index conventions: `dg[k][i][j] = ∂_k g_ij`, `ddg[k][l][i][j] = ∂_k ∂_l g_ij`,
//! `gamma[i][j][k] = Γ^i_jk`.

use core::array::from_fn;

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Sym3 = [[f64; 3]; 3];
pub type Rank3 = [[[f64; 3]; 3]; 3];
pub type Rank4 = [[[[f64; 3]; 3]; 3]; 3];

/// Smallest admissible metric eigenvalue.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

#[inline]
pub fn t2(mut f: impl FnMut(usize, usize) -> f64) -> Sym3 {
    from_fn(|i| from_fn(|j| f(i, j)))
}

#[inline]
pub fn t3(mut f: impl FnMut(usize, usize, usize) -> f64) -> Rank3 {
    from_fn(|i| from_fn(|j| from_fn(|k| f(i, j, k))))
}

#[inline]
pub fn t4(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Rank4 {
    from_fn(|i| from_fn(|j| from_fn(|k| from_fn(|l| f(i, j, k, l)))))
}

#[inline]
pub fn sum3(mut f: impl FnMut(usize) -> f64) -> f64 {
    f(0) + f(1) + f(2)
}

#[inline]
pub fn sum33(mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += f(i, j);
        }
    }
    s
}

pub const IDENTITY: Sym3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[inline]
pub fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

fn shifted(x: &Vec3, k: usize, h: f64) -> Vec3 {
    let mut y = *x;
    y[k] += h;
    y
}

fn fd_step(x: &Vec3, k: usize) -> f64 {
    1e-3 * (1.0 + x[k].abs())
}

/// Fourth-order centered difference of an array-valued map along axis `k`.
fn fd4<T, F>(f: F, x: &Vec3, k: usize, combine: impl Fn(&T, &T, &T, &T, f64) -> T) -> T
where
    F: Fn(&Vec3) -> T,
{
    let h = fd_step(x, k);
    let p2 = f(&shifted(x, k, 2.0 * h));
    let p1 = f(&shifted(x, k, h));
    let m1 = f(&shifted(x, k, -h));
    let m2 = f(&shifted(x, k, -2.0 * h));
    combine(&p2, &p1, &m1, &m2, h)
}

fn fd4_sym(f: impl Fn(&Vec3) -> Sym3, x: &Vec3, k: usize) -> Sym3 {
    fd4(f, x, k, |p2, p1, m1, m2, h| {
        t2(|i, j| (-p2[i][j] + 8.0 * p1[i][j] - 8.0 * m1[i][j] + m2[i][j]) / (12.0 * h))
    })
}

fn fd4_rank3(f: impl Fn(&Vec3) -> Rank3, x: &Vec3, k: usize) -> Rank3 {
    fd4(f, x, k, |p2, p1, m1, m2, h| {
        t3(|a, i, j| {
            (-p2[a][i][j] + 8.0 * p1[a][i][j] - 8.0 * m1[a][i][j] + m2[a][i][j]) / (12.0 * h)
        })
    })
}

/// A Riemannian metric in some coordinate chart.
///
/// Only `g` is mandatory; the derivative jets fall back to fourth-order
/// centered differences.
pub trait Metric {
    fn g(&self, x: &Vec3) -> Sym3;

    fn dg(&self, x: &Vec3) -> Rank3 {
        from_fn(|k| fd4_sym(|y| self.g(y), x, k))
    }

    /// `ddg[k][l][i][j] = ∂_k ∂_l g_ij`.
    fn ddg(&self, x: &Vec3) -> Rank4 {
        let by_k: [Rank3; 3] = from_fn(|k| fd4_rank3(|y| self.dg(y), x, k));
        by_k
    }
}

/// A symmetric 2-tensor field with first derivatives.
pub trait Extrinsic {
    fn k(&self, x: &Vec3) -> Sym3;

    fn dk(&self, x: &Vec3) -> Rank3 {
        from_fn(|l| fd4_sym(|y| self.k(y), x, l))
    }
}

impl<T: Metric + ?Sized> Metric for &T {
    fn g(&self, x: &Vec3) -> Sym3 {
        (**self).g(x)
    }
    fn dg(&self, x: &Vec3) -> Rank3 {
        (**self).dg(x)
    }
    fn ddg(&self, x: &Vec3) -> Rank4 {
        (**self).ddg(x)
    }
}

impl<T: Extrinsic + ?Sized> Extrinsic for &T {
    fn k(&self, x: &Vec3) -> Sym3 {
        (**self).k(x)
    }
    fn dk(&self, x: &Vec3) -> Rank3 {
        (**self).dk(x)
    }
}

/// User-supplied metric given only by its components; derivatives by finite
/// differences.
pub struct FnMetric<F: Fn(&Vec3) -> Sym3>(pub F);

impl<F: Fn(&Vec3) -> Sym3> Metric for FnMetric<F> {
    fn g(&self, x: &Vec3) -> Sym3 {
        (self.0)(x)
    }
}

/// User-supplied symmetric tensor; derivatives by finite differences.
pub struct FnExtrinsic<F: Fn(&Vec3) -> Sym3>(pub F);

impl<F: Fn(&Vec3) -> Sym3> Extrinsic for FnExtrinsic<F> {
    fn k(&self, x: &Vec3) -> Sym3 {
        (self.0)(x)
    }
}

/// Wrapper that hides analytic derivatives, forcing the finite-difference
/// path. Used to cross-check analytic jets.
pub struct FiniteDifference<'a, T: ?Sized>(pub &'a T);

impl<T: Metric + ?Sized> Metric for FiniteDifference<'_, T> {
    fn g(&self, x: &Vec3) -> Sym3 {
        self.0.g(x)
    }
}

impl<T: Extrinsic + ?Sized> Extrinsic for FiniteDifference<'_, T> {
    fn k(&self, x: &Vec3) -> Sym3 {
        self.0.k(x)
    }
}

/// Value, first and second derivative of a radial function.
pub type RadialJet = [f64; 3];

/// Conformally flat metric `Ψ(r) δ` in Cartesian coordinates with analytic
/// derivatives; `psi` returns the jet of `Ψ`.
pub struct ConformallyFlat<F: Fn(f64) -> RadialJet>(pub F);

impl<F: Fn(f64) -> RadialJet> Metric for ConformallyFlat<F> {
    fn g(&self, x: &Vec3) -> Sym3 {
        conformal_g(x, (self.0)(norm(x)))
    }
    fn dg(&self, x: &Vec3) -> Rank3 {
        conformal_dg(x, (self.0)(norm(x)))
    }
    fn ddg(&self, x: &Vec3) -> Rank4 {
        conformal_ddg(x, (self.0)(norm(x)))
    }
}

pub fn norm(x: &Vec3) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

pub fn conformal_g(_x: &Vec3, psi: RadialJet) -> Sym3 {
    t2(|i, j| psi[0] * delta(i, j))
}

pub fn conformal_dg(x: &Vec3, psi: RadialJet) -> Rank3 {
    let r = norm(x);
    t3(|k, i, j| psi[1] * x[k] / r * delta(i, j))
}

pub fn conformal_ddg(x: &Vec3, psi: RadialJet) -> Rank4 {
    let r = norm(x);
    let n: Vec3 = from_fn(|i| x[i] / r);
    t4(|k, l, i, j| {
        let hess = psi[2] * n[k] * n[l] + psi[1] / r * (delta(k, l) - n[k] * n[l]);
        hess * delta(i, j)
    })
}

/// `k_ij = A(r) δ_ij + B(r) x_i x_j` and its derivatives, with `a = [A, A']`,
/// `b = [B, B']`. Covers every spherically symmetric tensor in Cartesian form.
pub fn radial_tensor(x: &Vec3, a: [f64; 2], b: [f64; 2]) -> (Sym3, Rank3) {
    let r = norm(x);
    let k = t2(|i, j| a[0] * delta(i, j) + b[0] * x[i] * x[j]);
    let dk = t3(|l, i, j| {
        let nl = if r > 0.0 { x[l] / r } else { 0.0 };
        a[1] * nl * delta(i, j)
            + b[1] * nl * x[i] * x[j]
            + b[0] * (delta(i, l) * x[j] + x[i] * delta(j, l))
    });
    (k, dk)
}

/// Metric `a(r)² dr² + R(r)² (dθ² + sin²θ dφ²)` in coordinates `(r, θ, φ)`.
/// `a` and `radius` return jets.
pub struct WarpedSpherical<A: Fn(f64) -> RadialJet, R: Fn(f64) -> RadialJet> {
    pub a: A,
    pub radius: R,
}

impl<A: Fn(f64) -> RadialJet, R: Fn(f64) -> RadialJet> Metric for WarpedSpherical<A, R> {
    fn g(&self, x: &Vec3) -> Sym3 {
        let a = (self.a)(x[0]);
        let rr = (self.radius)(x[0]);
        let s = x[1].sin();
        let mut g = [[0.0; 3]; 3];
        g[0][0] = a[0] * a[0];
        g[1][1] = rr[0] * rr[0];
        g[2][2] = rr[0] * rr[0] * s * s;
        g
    }

    fn dg(&self, x: &Vec3) -> Rank3 {
        let a = (self.a)(x[0]);
        let rr = (self.radius)(x[0]);
        let (s, c) = (x[1].sin(), x[1].cos());
        let mut d = [[[0.0; 3]; 3]; 3];
        d[0][0][0] = 2.0 * a[0] * a[1];
        d[0][1][1] = 2.0 * rr[0] * rr[1];
        d[0][2][2] = 2.0 * rr[0] * rr[1] * s * s;
        d[1][2][2] = 2.0 * rr[0] * rr[0] * s * c;
        d
    }

    fn ddg(&self, x: &Vec3) -> Rank4 {
        let a = (self.a)(x[0]);
        let rr = (self.radius)(x[0]);
        let (s, c) = (x[1].sin(), x[1].cos());
        let mut d = [[[[0.0; 3]; 3]; 3]; 3];
        d[0][0][0][0] = 2.0 * (a[1] * a[1] + a[0] * a[2]);
        let rr2 = 2.0 * (rr[1] * rr[1] + rr[0] * rr[2]);
        d[0][0][1][1] = rr2;
        d[0][0][2][2] = rr2 * s * s;
        d[0][1][2][2] = 2.0 * rr[0] * rr[1] * 2.0 * s * c;
        d[1][0][2][2] = d[0][1][2][2];
        d[1][1][2][2] = 2.0 * rr[0] * rr[0] * (c * c - s * s);
        d
    }
}

pub fn min_eigenvalue(g: &Sym3) -> f64 {
    let m = Matrix3::from_fn(|i, j| g[i][j]);
    SymmetricEigen::new(m).eigenvalues.min()
}

/// Inverse of a positive-definite metric; errors below the degeneracy threshold.
pub fn inverse(g: &Sym3, x: &Vec3) -> Result<Sym3> {
    let lam = min_eigenvalue(g);
    if !(lam >= DEGENERATE_THRESHOLD) {
        return Err(Error::DegenerateMetric {
            point: *x,
            min_eigenvalue: lam,
        });
    }
    let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    let cof = |i: usize, j: usize| {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        let (c, d) = ((j + 1) % 3, (j + 2) % 3);
        g[a][c] * g[b][d] - g[a][d] * g[b][c]
    };
    Ok(t2(|i, j| cof(j, i) / det))
}

/// Everything needed for curvature at one point.
#[derive(Debug, Clone, Copy)]
pub struct Connection {
    pub g: Sym3,
    pub ginv: Sym3,
    pub dg: Rank3,
    pub gamma: Rank3,
}

impl Connection {
    pub fn at<M: Metric + ?Sized>(metric: &M, x: &Vec3) -> Result<Self> {
        let g = metric.g(x);
        let ginv = inverse(&g, x)?;
        let dg = metric.dg(x);
        let gamma = t3(|i, j, k| {
            0.5 * sum3(|l| ginv[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]))
        });
        Ok(Self { g, ginv, dg, gamma })
    }
}

pub fn christoffel<M: Metric + ?Sized>(metric: &M, x: &Vec3) -> Result<Rank3> {
    Ok(Connection::at(metric, x)?.gamma)
}

/// `dgamma[l][i][j][k] = ∂_l Γ^i_jk` from the metric jets.
pub fn christoffel_derivative<M: Metric + ?Sized>(
    metric: &M,
    x: &Vec3,
    conn: &Connection,
) -> Rank4 {
    let ddg = metric.ddg(x);
    let (ginv, dg) = (&conn.ginv, &conn.dg);
    let dginv: Rank3 = t3(|l, i, m| -sum33(|a, b| ginv[i][a] * dg[l][a][b] * ginv[b][m]));
    t4(|l, i, j, k| {
        sum3(|m| {
            let lower = dg[j][m][k] + dg[k][m][j] - dg[m][j][k];
            let dlower = ddg[l][j][m][k] + ddg[l][k][m][j] - ddg[l][m][j][k];
            0.5 * (dginv[l][i][m] * lower + ginv[i][m] * dlower)
        })
    })
}

pub fn ricci<M: Metric + ?Sized>(metric: &M, x: &Vec3) -> Result<Sym3> {
    let conn = Connection::at(metric, x)?;
    let dgam = christoffel_derivative(metric, x, &conn);
    let gam = &conn.gamma;
    Ok(t2(|j, k| {
        sum3(|i| {
            dgam[i][i][j][k] - dgam[k][i][j][i]
                + sum3(|p| gam[i][i][p] * gam[p][j][k] - gam[i][k][p] * gam[p][j][i])
        })
    }))
}

pub fn scalar_curvature<M: Metric + ?Sized>(metric: &M, x: &Vec3) -> Result<f64> {
    let ric = ricci(metric, x)?;
    let ginv = inverse(&metric.g(x), x)?;
    Ok(sum33(|i, j| ginv[i][j] * ric[i][j]))
}

/// Constraint quantities at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    pub mu: f64,
    /// Momentum density as a covector.
    pub j: Vec3,
    pub j_norm: f64,
    pub dec_margin: f64,
    pub scalar_curvature: f64,
    pub trace_k: f64,
    pub k_norm2: f64,
}

/// `μ = ½(R − |k|² + (tr k)²)`, `J = div(k − (tr k) g)`.
pub fn constraints<D: Metric + Extrinsic + ?Sized>(data: &D, x: &Vec3) -> Result<Constraints> {
    Ok(ambient_point(data, x)?.constraints)
}

/// Metric and extrinsic curvature bundled as one initial data set.
pub struct Data<M, K>(pub M, pub K);

impl<M: Metric, K> Metric for Data<M, K> {
    fn g(&self, x: &Vec3) -> Sym3 {
        self.0.g(x)
    }
    fn dg(&self, x: &Vec3) -> Rank3 {
        self.0.dg(x)
    }
    fn ddg(&self, x: &Vec3) -> Rank4 {
        self.0.ddg(x)
    }
}

impl<M, K: Extrinsic> Extrinsic for Data<M, K> {
    fn k(&self, x: &Vec3) -> Sym3 {
        self.1.k(x)
    }
    fn dk(&self, x: &Vec3) -> Rank3 {
        self.1.dk(x)
    }
}

/// All ambient quantities at one point, computed once.
#[derive(Debug, Clone, Copy)]
pub struct AmbientPoint {
    pub conn: Connection,
    pub ricci: Sym3,
    pub k: Sym3,
    /// `nabla_k[l][i][j] = ∇_l k_ij`.
    pub nabla_k: Rank3,
    pub constraints: Constraints,
}

pub fn ambient_point<D: Metric + Extrinsic + ?Sized>(data: &D, x: &Vec3) -> Result<AmbientPoint> {
    let conn = Connection::at(data, x)?;
    let dgam = christoffel_derivative(data, x, &conn);
    let gam = &conn.gamma;
    let ric = t2(|j, k| {
        sum3(|i| {
            dgam[i][i][j][k] - dgam[k][i][j][i]
                + sum3(|p| gam[i][i][p] * gam[p][j][k] - gam[i][k][p] * gam[p][j][i])
        })
    });
    let ginv = conn.ginv;
    let rscal = sum33(|i, j| ginv[i][j] * ric[i][j]);
    let k = data.k(x);
    let dk = data.dk(x);
    let trk = sum33(|i, j| ginv[i][j] * k[i][j]);
    let kup = t2(|i, j| sum33(|a, b| ginv[i][a] * ginv[j][b] * k[a][b]));
    let k2 = sum33(|i, j| kup[i][j] * k[i][j]);
    let mu = 0.5 * (rscal - k2 + trk * trk);
    let nabla_k = t3(|l, i, j| {
        dk[l][i][j] - sum3(|m| gam[m][l][i] * k[m][j] + gam[m][l][j] * k[i][m])
    });
    let dginv: Rank3 =
        t3(|l, i, m| -sum33(|a, b| ginv[i][a] * conn.dg[l][a][b] * ginv[b][m]));
    let dtrk: Vec3 =
        from_fn(|l| sum33(|a, b| dginv[l][a][b] * k[a][b] + ginv[a][b] * dk[l][a][b]));
    let j: Vec3 = from_fn(|i| sum33(|a, b| ginv[a][b] * nabla_k[a][i][b]) - dtrk[i]);
    let j_norm = sum33(|a, b| ginv[a][b] * j[a] * j[b]).max(0.0).sqrt();
    Ok(AmbientPoint {
        conn,
        ricci: ric,
        k,
        nabla_k,
        constraints: Constraints {
            mu,
            j,
            j_norm,
            dec_margin: mu - j_norm,
            scalar_curvature: rscal,
            trace_k: trk,
            k_norm2: k2,
        },
    })
}
