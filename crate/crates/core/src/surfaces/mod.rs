//! Embedded 2-spheres in an initial data set: induced metric, second
//! fundamental form, expansion `θ = H − tr_Σ k`, and Fermi graphs.
//!
//! Surfaces are parametrised over a [`SphereGrid`]. Radial graphs use the
//! analytic unit normal of the coordinate sphere and a spectral radius;
//! general embeddings carry spectral Cartesian components.

mod grid;

pub use grid::{real_harmonic, Derivatives, SphereGrid};

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::array::from_fn;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{ambient_point, sum3, sum33, Connection, Extrinsic, Metric, Vec3};
use crate::initial_data::{Chart, InitialDataSet};

pub type Mat2 = [[f64; 2]; 2];

/// Ambient data usable by the surface routines.
pub trait Ambient: Metric + Extrinsic {
    /// Admissible radial range of the chart, if bounded.
    fn radial_bounds(&self) -> Option<(f64, f64)> {
        None
    }
}

impl Ambient for InitialDataSet {
    fn radial_bounds(&self) -> Option<(f64, f64)> {
        match self.chart {
            Chart::Radial { r_min, r_max, .. } => Some((r_min, r_max)),
            _ => None,
        }
    }
}

impl<M: Metric, K: Extrinsic> Ambient for crate::geometry::Data<M, K> {}

impl<T: Ambient + ?Sized> Ambient for &T {
    fn radial_bounds(&self) -> Option<(f64, f64)> {
        (**self).radial_bounds()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Outward,
    Inward,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Outward => 1.0,
            Orientation::Inward => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    RoundSphere(f64),
    /// Spectral coefficients of the coordinate radius `ρ(θ, φ)`.
    RadialGraph(Vec<f64>),
    /// Graph of `w` (spectral coefficients) in Fermi coordinates of `base`.
    FermiGraph { base: Box<Surface>, w: Vec<f64> },
    /// Spectral coefficients of the three Cartesian components.
    Embedded([Vec<f64>; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub kind: SurfaceKind,
    pub orientation: Orientation,
}

impl Surface {
    pub fn round(r: f64) -> Self {
        Self {
            kind: SurfaceKind::RoundSphere(r),
            orientation: Orientation::Outward,
        }
    }

    pub fn radial_graph(rho: Vec<f64>) -> Self {
        Self {
            kind: SurfaceKind::RadialGraph(rho),
            orientation: Orientation::Outward,
        }
    }

    pub fn fermi_graph(base: Surface, w: Vec<f64>) -> Self {
        let orientation = base.orientation;
        Self {
            kind: SurfaceKind::FermiGraph {
                base: Box::new(base),
                w,
            },
            orientation,
        }
    }

    pub fn with_orientation(mut self, o: Orientation) -> Self {
        self.orientation = o;
        self
    }

    /// Radius coefficients if the surface is a radial graph (or round sphere).
    pub fn radial_coefficients(&self, grid: &SphereGrid) -> Option<Vec<f64>> {
        match &self.kind {
            SurfaceKind::RoundSphere(r) => Some(grid.constant(*r)),
            SurfaceKind::RadialGraph(c) => Some(c.clone()),
            _ => None,
        }
    }
}

/// Embedding `X(θ, φ)` with first and second parameter derivatives at one node.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingJet {
    pub x: Vec3,
    /// `xa[a]` for `a ∈ {θ, φ}`.
    pub xa: [Vec3; 2],
    pub xab: [[Vec3; 2]; 2],
}

fn unit_normal_jet(c: f64, s: f64, phi: f64) -> ([Vec3; 3], [[Vec3; 2]; 2]) {
    let (sp, cp) = phi.sin_cos();
    let n = [s * cp, s * sp, c];
    let nt = [c * cp, c * sp, -s];
    let np = [-s * sp, s * cp, 0.0];
    let ntt = [-s * cp, -s * sp, -c];
    let ntp = [-c * sp, c * cp, 0.0];
    let npp = [-s * cp, -s * sp, 0.0];
    ([n, nt, np], [[ntt, ntp], [ntp, npp]])
}

/// Nodal embedding jets of a surface.
pub fn embedding(grid: &SphereGrid, surface: &Surface, data: &dyn Ambient) -> Result<Vec<EmbeddingJet>> {
    match &surface.kind {
        SurfaceKind::RoundSphere(_) | SurfaceKind::RadialGraph(_) => {
            let c = surface.radial_coefficients(grid).expect("radial");
            Ok(radial_embedding(grid, &c))
        }
        SurfaceKind::Embedded(comps) => {
            if grid.is_axisymmetric() {
                return Err(Error::NotApplicable(
                    "general embeddings need a full sphere grid".into(),
                ));
            }
            let d: [Derivatives; 3] = from_fn(|i| grid.derivatives(&comps[i]));
            Ok((0..grid.n_nodes())
                .map(|q| EmbeddingJet {
                    x: from_fn(|i| d[i].v[q]),
                    xa: [from_fn(|i| d[i].t[q]), from_fn(|i| d[i].p[q])],
                    xab: [
                        [from_fn(|i| d[i].tt[q]), from_fn(|i| d[i].tp[q])],
                        [from_fn(|i| d[i].tp[q]), from_fn(|i| d[i].pp[q])],
                    ],
                })
                .collect())
        }
        SurfaceKind::FermiGraph { base, w } => {
            let s = fermi_surface(grid, base, w, data)?;
            embedding(grid, &s, data)
        }
    }
}

fn radial_embedding(grid: &SphereGrid, rho: &[f64]) -> Vec<EmbeddingJet> {
    let d = grid.derivatives(rho);
    (0..grid.n_nodes())
        .map(|q| {
            let (c, s) = grid.cos_sin_theta(q);
            let (_, phi) = grid.angles(q);
            let ([n, nt, np], nab) = unit_normal_jet(c, s, phi);
            let na = [nt, np];
            let ra = [d.t[q], d.p[q]];
            let rab = [[d.tt[q], d.tp[q]], [d.tp[q], d.pp[q]]];
            let r = d.v[q];
            EmbeddingJet {
                x: from_fn(|i| r * n[i]),
                xa: from_fn(|a| from_fn(|i| ra[a] * n[i] + r * na[a][i])),
                xab: from_fn(|a| {
                    from_fn(|b| {
                        from_fn(|i| {
                            rab[a][b] * n[i] + ra[a] * na[b][i] + ra[b] * na[a][i] + r * nab[a][b][i]
                        })
                    })
                }),
            }
        })
        .collect()
}

/// Induced geometry at one node.
#[derive(Debug, Clone, Copy)]
pub struct NodeGeometry {
    pub x: Vec3,
    pub tangents: [Vec3; 2],
    /// Unit normal (contravariant) and its index-lowered form.
    pub nu: Vec3,
    pub nu_flat: Vec3,
    pub gamma: Mat2,
    pub gamma_inv: Mat2,
    /// Christoffel symbols `S^c_ab` of the induced metric.
    pub christoffel: [Mat2; 2],
    pub h: Mat2,
    pub k_sigma: Mat2,
    pub mean_curvature: f64,
    pub trace_k_sigma: f64,
    pub h_norm2: f64,
    pub scalar_curvature: f64,
    /// Drift covector `ξ_a = k(ν, X_a)`.
    pub xi: [f64; 2],
    pub xi_norm2: f64,
    pub h_minus_k_norm2: f64,
    pub div_xi: f64,
    pub area_element: f64,
    pub mu: f64,
    pub j_nu: f64,
    pub trace_k: f64,
    pub k_nu_nu: f64,
    pub principal_curvatures: [f64; 2],
}

impl NodeGeometry {
    pub fn expansion(&self) -> f64 {
        self.mean_curvature - self.trace_k_sigma
    }

    /// `𝒫 = ½R_Σ − ½|h − k|²_Σ − μ + J(ν)`.
    pub fn p_term(&self) -> f64 {
        0.5 * self.scalar_curvature - 0.5 * self.h_minus_k_norm2 - self.mu + self.j_nu
    }

    /// Potential of the linearised expansion operator with expansion `theta`.
    pub fn potential(&self, theta: f64) -> f64 {
        self.p_term() - self.div_xi - self.xi_norm2 - 0.5 * theta * (2.0 * self.trace_k + theta)
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    pub nodes: Vec<NodeGeometry>,
    pub area: f64,
}

impl SurfaceGeometry {
    pub fn expansion(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.expansion()).collect()
    }

    pub fn max_abs_principal_curvature(&self) -> f64 {
        self.nodes
            .iter()
            .flat_map(|n| n.principal_curvatures)
            .fold(0.0, |m, k| m.max(k.abs()))
    }

    /// Conservative Fermi-chart width `0.5 / max|κ|`.
    pub fn focal_distance(&self) -> f64 {
        let k = self.max_abs_principal_curvature();
        if k == 0.0 {
            f64::INFINITY
        } else {
            0.5 / k
        }
    }

    pub fn sup_h_norm2(&self) -> f64 {
        self.nodes.iter().fold(0.0, |m, n| m.max(n.h_norm2))
    }
}

fn inv2(m: &Mat2) -> Result<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Singular("induced metric"));
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn sum22(mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    f(0, 0) + f(0, 1) + f(1, 0) + f(1, 1)
}

fn check_chart(data: &dyn Ambient, x: &Vec3) -> Result<()> {
    if let Some((lo, hi)) = data.radial_bounds() {
        let r = crate::geometry::norm(x);
        if r < lo || r > hi || !r.is_finite() {
            return Err(Error::SurfaceExitsChart {
                radius: r,
                r_min: lo,
                r_max: hi,
            });
        }
    }
    Ok(())
}

/// Geometry at one node given the embedding jet.
pub fn node_geometry(data: &dyn Ambient, jet: &EmbeddingJet, orientation: Orientation) -> Result<NodeGeometry> {
    check_chart(data, &jet.x)?;
    let amb = ambient_point(data, &jet.x)?;
    let Connection { g, ginv, gamma: gam, .. } = amb.conn;
    let xa = jet.xa;
    let gamma: Mat2 = from_fn(|a| from_fn(|b| sum33(|i, j| g[i][j] * xa[a][i] * xa[b][j])));
    let gamma_inv = inv2(&gamma)?;
    // covector normal from the coordinate cross product X_θ × X_φ
    let cross = [
        xa[0][1] * xa[1][2] - xa[0][2] * xa[1][1],
        xa[0][2] * xa[1][0] - xa[0][0] * xa[1][2],
        xa[0][0] * xa[1][1] - xa[0][1] * xa[1][0],
    ];
    let len = sum33(|i, j| ginv[i][j] * cross[i] * cross[j]).sqrt();
    if !(len > 0.0) {
        return Err(Error::Singular("surface normal"));
    }
    let sign = orientation.sign();
    let nu_flat: Vec3 = from_fn(|i| sign * cross[i] / len);
    let nu: Vec3 = from_fn(|i| sum3(|j| ginv[i][j] * nu_flat[j]));
    // ∇_{X_a} X_b in ambient coordinates
    let cov: [[Vec3; 2]; 2] = from_fn(|a| {
        from_fn(|b| {
            from_fn(|i| jet.xab[a][b][i] + sum33(|j, k| gam[i][j][k] * xa[a][j] * xa[b][k]))
        })
    });
    let h: Mat2 = from_fn(|a| from_fn(|b| -sum3(|i| nu_flat[i] * cov[a][b][i])));
    // g(∇_a X_b, X_d)
    let lowered: [[[f64; 2]; 2]; 2] = from_fn(|a| {
        from_fn(|b| from_fn(|d| sum33(|i, j| g[i][j] * cov[a][b][i] * xa[d][j])))
    });
    let christoffel: [Mat2; 2] = from_fn(|c| {
        from_fn(|a| {
            from_fn(|b| gamma_inv[c][0] * lowered[a][b][0] + gamma_inv[c][1] * lowered[a][b][1])
        })
    });
    let k = amb.k;
    let k_sigma: Mat2 = from_fn(|a| from_fn(|b| sum33(|i, j| k[i][j] * xa[a][i] * xa[b][j])));
    let mean_curvature = sum22(|a, b| gamma_inv[a][b] * h[a][b]);
    let trace_k_sigma = sum22(|a, b| gamma_inv[a][b] * k_sigma[a][b]);
    let up = |m: &Mat2, n: &Mat2| {
        sum22(|a, b| sum22(|c, d| gamma_inv[a][c] * gamma_inv[b][d] * m[a][b] * n[c][d]))
    };
    let h_norm2 = up(&h, &h);
    let hk: Mat2 = from_fn(|a| from_fn(|b| h[a][b] - k_sigma[a][b]));
    let h_minus_k_norm2 = up(&hk, &hk);
    let h_dot_k = up(&h, &k_sigma);
    let ric_nn = sum33(|i, j| amb.ricci[i][j] * nu[i] * nu[j]);
    let cons = amb.constraints;
    let scalar_curvature =
        cons.scalar_curvature - 2.0 * ric_nn + mean_curvature * mean_curvature - h_norm2;
    let xi: [f64; 2] = from_fn(|a| sum33(|i, j| k[i][j] * nu[i] * xa[a][j]));
    let xi_norm2 = sum22(|a, b| gamma_inv[a][b] * xi[a] * xi[b]);
    let k_nu_nu = sum33(|i, j| k[i][j] * nu[i] * nu[j]);
    let nk = amb.nabla_k;
    let tangential = sum22(|a, b| {
        gamma_inv[a][b]
            * sum3(|l| xa[a][l] * sum33(|i, j| nk[l][i][j] * nu[i] * xa[b][j]))
    });
    let div_xi = tangential + h_dot_k - k_nu_nu * mean_curvature;
    let j_nu = sum3(|i| cons.j[i] * nu[i]);
    let det = gamma[0][0] * gamma[1][1] - gamma[0][1] * gamma[1][0];
    // principal curvatures: eigenvalues of γ^{-1} h
    let s: Mat2 = from_fn(|a| from_fn(|b| gamma_inv[a][0] * h[0][b] + gamma_inv[a][1] * h[1][b]));
    let tr = s[0][0] + s[1][1];
    let half_gap = 0.5 * (s[0][0] - s[1][1]);
    let disc = (half_gap * half_gap + s[0][1] * s[1][0]).max(0.0).sqrt();
    Ok(NodeGeometry {
        x: jet.x,
        tangents: xa,
        nu,
        nu_flat,
        gamma,
        gamma_inv,
        christoffel,
        h,
        k_sigma,
        mean_curvature,
        trace_k_sigma,
        h_norm2,
        scalar_curvature,
        xi,
        xi_norm2,
        h_minus_k_norm2,
        div_xi,
        area_element: det.sqrt(),
        mu: cons.mu,
        j_nu,
        trace_k: cons.trace_k,
        k_nu_nu,
        principal_curvatures: [0.5 * tr + disc, 0.5 * tr - disc],
    })
}

/// Induced geometry on every node of the grid.
pub fn surface_geometry(data: &dyn Ambient, grid: &SphereGrid, surface: &Surface) -> Result<SurfaceGeometry> {
    let jets = embedding(grid, surface, data)?;
    let mut nodes = Vec::with_capacity(jets.len());
    for jet in &jets {
        nodes.push(node_geometry(data, jet, surface.orientation)?);
    }
    let mut area = 0.0;
    for (q, n) in nodes.iter().enumerate() {
        let (_, s) = grid.cos_sin_theta(q);
        // weights integrate dΩ = sin θ dθ dφ; the area element is per dθ dφ
        area += grid.weight(q) * n.area_element / s;
    }
    Ok(SurfaceGeometry { nodes, area })
}

/// Expansion `θ = H − tr_Σ k` at every node.
pub fn expansion(data: &dyn Ambient, grid: &SphereGrid, surface: &Surface) -> Result<Vec<f64>> {
    Ok(surface_geometry(data, grid, surface)?.expansion())
}

/// Number of RK4 steps for normal geodesics.
const GEODESIC_STEPS: usize = 64;

/// Endpoint of the geodesic from `x` with initial velocity `v` after unit time.
pub fn geodesic(data: &dyn Ambient, x: Vec3, v: Vec3) -> Result<Vec3> {
    let rhs = |y: &[f64; 6]| -> Result<[f64; 6]> {
        let p = [y[0], y[1], y[2]];
        let conn = Connection::at(data, &p)?;
        let vel = [y[3], y[4], y[5]];
        let acc: Vec3 = from_fn(|i| -sum33(|j, k| conn.gamma[i][j][k] * vel[j] * vel[k]));
        Ok([vel[0], vel[1], vel[2], acc[0], acc[1], acc[2]])
    };
    let mut y = [x[0], x[1], x[2], v[0], v[1], v[2]];
    let h = 1.0 / GEODESIC_STEPS as f64;
    for _ in 0..GEODESIC_STEPS {
        let k1 = rhs(&y)?;
        let y2: [f64; 6] = from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = rhs(&y2)?;
        let y3: [f64; 6] = from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = rhs(&y3)?;
        let y4: [f64; 6] = from_fn(|i| y[i] + h * k3[i]);
        let k4 = rhs(&y4)?;
        y = from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    Ok([y[0], y[1], y[2]])
}

/// Resolves a Fermi graph into an explicit radial graph or embedding.
pub fn fermi_surface(grid: &SphereGrid, base: &Surface, w: &[f64], data: &dyn Ambient) -> Result<Surface> {
    let geo = surface_geometry(data, grid, base)?;
    let wn = grid.synthesize(w);
    let focal = geo.focal_distance();
    let wmax = wn.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if wmax > focal * (1.0 + 1e-12) {
        return Err(Error::FocalDistance {
            offset: wmax,
            focal,
        });
    }
    let mut pts = Vec::with_capacity(wn.len());
    for (q, n) in geo.nodes.iter().enumerate() {
        let v: Vec3 = from_fn(|i| wn[q] * n.nu[i]);
        let p = if wn[q] == 0.0 { n.x } else { geodesic(data, n.x, v)? };
        check_chart(data, &p)?;
        pts.push(p);
    }
    // radial if every point stays on its coordinate ray
    let radial = (0..pts.len()).all(|q| {
        let (c, s) = grid.cos_sin_theta(q);
        let (_, phi) = grid.angles(q);
        let (sp, cp) = phi.sin_cos();
        let n = [s * cp, s * sp, c];
        let r = crate::geometry::norm(&pts[q]);
        let dev = sum3(|i| (pts[q][i] - r * n[i]).powi(2)).sqrt();
        dev <= 1e-12 * (1.0 + r)
    });
    let kind = if radial {
        let rho: Vec<f64> = pts.iter().map(crate::geometry::norm).collect();
        SurfaceKind::RadialGraph(grid.analyze(&rho))
    } else {
        if grid.is_axisymmetric() {
            return Err(Error::NotApplicable(
                "non-radial Fermi graphs need a full sphere grid".into(),
            ));
        }
        let comps: [Vec<f64>; 3] = from_fn(|i| {
            let v: Vec<f64> = pts.iter().map(|p| p[i]).collect();
            grid.analyze(&v)
        });
        SurfaceKind::Embedded(comps)
    };
    Ok(Surface {
        kind,
        orientation: base.orientation,
    })
}

/// Expansion of the Fermi graph of `w` over `base`.
pub fn fermi_expansion(data: &dyn Ambient, grid: &SphereGrid, base: &Surface, w: &[f64]) -> Result<Vec<f64>> {
    if w.iter().all(|c| *c == 0.0) {
        return expansion(data, grid, base);
    }
    let s = fermi_surface(grid, base, w, data)?;
    expansion(data, grid, &s)
}

/// Spectral coefficients of a nodal field.
pub fn to_coefficients(grid: &SphereGrid, nodal: &[f64]) -> Vec<f64> {
    grid.analyze(nodal)
}

/// Oscillation `max − min` of a nodal field.
pub fn oscillation(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    if v.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[cfg(test)]
mod tests;
