//! Structure report of a blowup region: maximal domains where `u` is
//! constant, foliation bands where `u` is strictly monotone, their interfaces,
//! thickness, the divergence balance of the companion field and the
//! isoperimetric diagnostic.

use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::blowdown::{BlowdownLimit, ClassificationMap, NodeLabel};
use crate::error::{Error, Result};
use crate::initial_data::{Chart, InitialDataSet, Symmetry};
use crate::linalg::integrate;
use crate::stability::{linearization, principal_eig};
use crate::surfaces::{Orientation, SphereGrid, Surface};

/// Unresolved fraction above which a report is marked low-confidence.
pub const UNRESOLVED_LIMIT: f64 = 0.2;

pub const FINITENESS_ASSUMPTION: &str =
    "only finitely many marginally stable CES in the region (assumed, not verified)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    MaximalDomain {
        theta: f64,
        oscillation: f64,
        /// `min |∇f_{s_min}|` over the segment.
        min_grad: f64,
        /// The companion field changes sign inside: a critical point of `f`.
        critical_point: bool,
    },
    FoliationBand {
        tau_range: (f64, f64),
        monotone: bool,
        min_slope: f64,
    },
    Unresolved,
}

impl SegmentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentKind::MaximalDomain { .. } => "maximal_domain",
            SegmentKind::FoliationBand { .. } => "foliation_band",
            SegmentKind::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
    pub r_start: f64,
    pub r_end: f64,
    /// Geodesic width for radial annuli.
    pub thickness: Option<f64>,
}

impl Segment {
    pub fn len(&self, n: usize) -> usize {
        if self.end >= self.start {
            self.end - self.start + 1
        } else {
            n - self.start + self.end + 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface {
    pub radius: f64,
    /// Expansion of the round sphere with normal along increasing `u`.
    pub theta: f64,
    pub u: f64,
    pub deviation: f64,
    pub lambda1: Option<f64>,
    /// Interface of the region with the no-blowup set.
    pub region_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub region_id: usize,
    pub segments: Vec<Segment>,
    pub interfaces: Vec<Interface>,
    pub node_count: usize,
    pub tiled: bool,
    pub unresolved_fraction: f64,
    pub low_confidence: bool,
    pub max_abs_u: f64,
    /// Whether the largest `|u|` sits on a maximal-domain segment.
    pub max_on_domain: bool,
    /// `max |θ − u| / h` over the interfaces.
    pub interface_constant: f64,
    pub assumption: &'static str,
}

impl StructureReport {
    pub fn domains(&self) -> impl Iterator<Item = &Segment> {
        self.segments
            .iter()
            .filter(|s| matches!(s.kind, SegmentKind::MaximalDomain { .. }))
    }
}

/// Geodesic width `∫ a dr` of the radial annulus `(r₁, r₂)`.
pub fn thickness(data: &InitialDataSet, r1: f64, r2: f64) -> Result<f64> {
    if data.symmetry() != Symmetry::Spherical {
        return Err(Error::NotImplemented("thickness of non-radial segments"));
    }
    if r2 < r1 {
        return Err(Error::DomainMismatch("annulus with r2 < r1".into()));
    }
    if r1 == r2 {
        return Ok(0.0);
    }
    data.radial_profile(r1)?;
    data.radial_profile(r2)?;
    let w = integrate(|r| data.radial_profile(r).map(|p| p.a[0]).unwrap_or(f64::NAN), r1, r2, 32, 8);
    if !w.is_finite() {
        return Err(Error::NotFinite("thickness quadrature"));
    }
    Ok(w)
}

fn kind_of(l: &NodeLabel) -> u8 {
    match l {
        NodeLabel::Graphical(_) => 1,
        NodeLabel::Cylindrical(_) => 2,
        NodeLabel::Unresolved => 4,
        NodeLabel::NoBlowup => 0,
    }
}

fn interface_lambda(data: &InitialDataSet, r: f64, sign: f64) -> Option<f64> {
    let grid = SphereGrid::axisymmetric(4);
    let o = if sign >= 0.0 { Orientation::Outward } else { Orientation::Inward };
    let op = linearization(data, &grid, &Surface::round(r).with_orientation(o)).ok()?;
    principal_eig(&op).ok().map(|e| e.lambda1)
}

/// Splits every connected blowup region into maximal domains, foliation
/// bands and unresolved stretches.
pub fn partition(u: &BlowdownLimit, cmap: &ClassificationMap, data: &InitialDataSet) -> Result<Vec<StructureReport>> {
    let n = u.nodes.len();
    if cmap.labels.len() != n {
        return Err(Error::DomainMismatch("classification and limit differ in size".into()));
    }
    let radial = data.symmetry() == Symmetry::Spherical;
    let h = u.nodes.windows(2).fold(0.0f64, |m, w| m.max(w[1] - w[0]));
    let kinds: Vec<u8> = cmap.labels.iter().map(kind_of).collect();
    // connected regions of blowup nodes
    let mut regions: Vec<(usize, usize)> = Vec::new();
    if kinds.iter().all(|&k| k != 0) {
        regions.push((0, n - 1));
    } else {
        let mut i = 0;
        while i < n {
            if kinds[i] != 0 {
                let s = i;
                while i + 1 < n && kinds[i + 1] != 0 {
                    i += 1;
                }
                regions.push((s, i));
            }
            i += 1;
        }
        if u.periodic && regions.len() > 1 {
            let first = regions[0];
            let last = *regions.last().expect("non-empty");
            if first.0 == 0 && last.1 == n - 1 {
                regions.pop();
                regions[0] = (last.0, first.1);
            }
        }
    }
    let last_grad = |i: usize| cmap.gradient_trend[i].last().copied().unwrap_or(0.0);
    let mut reports = Vec::with_capacity(regions.len());
    for (rid, &(a, b)) in regions.iter().enumerate() {
        let idx: Vec<usize> = if b >= a { (a..=b).collect() } else { (a..n).chain(0..=b).collect() };
        let mut segments = Vec::new();
        let mut k = 0;
        while k < idx.len() {
            let kind = kinds[idx[k]];
            let s = k;
            while k + 1 < idx.len() && kinds[idx[k + 1]] == kind {
                k += 1;
            }
            let nodes = &idx[s..=k];
            let vals: Vec<f64> = nodes.iter().map(|&i| u.u[i]).collect();
            let seg_kind = match kind {
                1 => {
                    let (lo, hi) = vals
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
                    let signs: Vec<f64> = nodes
                        .iter()
                        .map(|&i| cmap.eta[i])
                        .filter(|e| e.abs() > 1e-12)
                        .collect();
                    SegmentKind::MaximalDomain {
                        theta: vals.iter().sum::<f64>() / vals.len() as f64,
                        oscillation: hi - lo,
                        min_grad: nodes.iter().map(|&i| last_grad(i)).fold(f64::INFINITY, f64::min),
                        critical_point: signs.windows(2).any(|w| w[0] * w[1] < 0.0),
                    }
                }
                2 => {
                    let d: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
                    let inc = d.iter().all(|x| *x > 0.0);
                    let dec = d.iter().all(|x| *x < 0.0);
                    SegmentKind::FoliationBand {
                        tau_range: (vals[0], vals[vals.len() - 1]),
                        monotone: inc || dec,
                        min_slope: d.iter().fold(f64::INFINITY, |m, x| m.min(x.abs())) / h,
                    }
                }
                _ => SegmentKind::Unresolved,
            };
            let (ia, ib) = (nodes[0], nodes[nodes.len() - 1]);
            let thickness = if radial {
                Some(thickness(data, u.nodes[ia], u.nodes[ib])?)
            } else {
                None
            };
            segments.push(Segment {
                kind: seg_kind,
                start: ia,
                end: ib,
                r_start: u.nodes[ia],
                r_end: u.nodes[ib],
                thickness,
            });
            k += 1;
        }
        // interfaces between neighbouring segments and at the region boundary
        let mut interfaces = Vec::new();
        if radial {
            let mut cuts: Vec<(usize, usize, bool)> = segments.windows(2).map(|w| (w[0].end, w[1].start, false)).collect();
            if a > 0 {
                cuts.insert(0, (a - 1, a, true));
            }
            if b + 1 < n {
                cuts.push((b, b + 1, true));
            }
            for (i, j, boundary) in cuts {
                let r = 0.5 * (u.nodes[i] + u.nodes[j]);
                let uu = 0.5 * (u.u[i] + u.u[j]);
                // normal along increasing u, taken from the band side if any
                let sign = if u.u[j] != u.u[i] { (u.u[j] - u.u[i]).signum() } else { 1.0 };
                let p = data.radial_profile(r)?;
                let theta = sign * p.sphere_mean_curvature() - 2.0 * p.q[0];
                interfaces.push(Interface {
                    radius: r,
                    theta,
                    u: uu,
                    deviation: (theta - uu).abs(),
                    lambda1: interface_lambda(data, r, sign),
                    region_boundary: boundary,
                });
            }
        }
        let node_count = idx.len();
        let covered: usize = segments.iter().map(|s| s.len(n)).sum();
        let unresolved = idx.iter().filter(|&&i| kinds[i] == 4).count();
        let unresolved_fraction = unresolved as f64 / node_count as f64;
        let (imax, max_abs_u) = idx
            .iter()
            .map(|&i| (i, u.u[i].abs()))
            .fold((idx[0], f64::NEG_INFINITY), |m, x| if x.1 > m.1 { x } else { m });
        let max_on_domain = kinds[imax] == 1;
        reports.push(StructureReport {
            region_id: rid,
            interface_constant: interfaces.iter().fold(0.0, |m: f64, x| m.max(x.deviation)) / h,
            segments,
            interfaces,
            node_count,
            tiled: covered == node_count,
            unresolved_fraction,
            low_confidence: unresolved_fraction > UNRESOLVED_LIMIT,
            max_abs_u,
            max_on_domain,
            assumption: FINITENESS_ASSUMPTION,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport {
    /// `∫_∂Ω ⟨η, ν⟩ dA` (outer minus inner sphere).
    pub flux: f64,
    /// `∫_Ω (u + tr k − k(η, η)) dV`.
    pub bulk: f64,
    /// `flux − bulk`.
    pub residual: f64,
    /// Area of the outer boundary sphere (box cross-section when periodic).
    pub boundary_area: f64,
    pub relative: f64,
    /// `⟨η, ν⟩` on the outer boundary, expected `−1` on Ω̂₊ and `+1` on Ω̂₋.
    pub eta_normal: Option<f64>,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Divergence identity `∫_∂Ω ⟨η, ν⟩ = ∫_Ω (u + tr k − k(η, η))` over the
/// node range of `report`.
pub fn balance_check(report: &StructureReport, u: &BlowdownLimit, eta: &[f64], data: &InitialDataSet) -> Result<BalanceReport> {
    let n = u.nodes.len();
    let a = report.segments.first().map(|s| s.start).ok_or_else(|| Error::NotApplicable("empty region".into()))?;
    let b = report.segments.last().map(|s| s.end).expect("non-empty");
    if u.periodic {
        let (p, t) = data.periodic_profile(0.0)?;
        let side = match data.chart {
            Chart::PeriodicBox { side, .. } => side,
            _ => return Err(Error::Internal("periodic data without a box chart".into())),
        };
        let h = side / n as f64;
        let bulk: f64 = (0..n).map(|i| (u.u[i] + p + t - p * eta[i] * eta[i]) * h).sum::<f64>() * side * side;
        let flux = 0.0;
        return Ok(BalanceReport {
            flux,
            bulk,
            residual: flux - bulk,
            boundary_area: side * side,
            relative: (flux - bulk).abs() / (side * side),
            eta_normal: None,
        });
    }
    let four_pi = 4.0 * core::f64::consts::PI;
    let nodes = &u.nodes[a..=b];
    let mut integrand = Vec::with_capacity(nodes.len());
    for (k, &r) in nodes.iter().enumerate() {
        let i = a + k;
        let pr = data.radial_profile(r)?;
        let vol = four_pi * pr.a[0] * pr.radius[0] * pr.radius[0];
        integrand.push((u.u[i] + pr.trace_k() - pr.p[0] * eta[i] * eta[i]) * vol);
    }
    let bulk = trapezoid(nodes, &integrand);
    let area = |r: f64| data.radial_profile(r).map(|p| four_pi * p.radius[0] * p.radius[0]);
    let outer = area(u.nodes[b])?;
    let flux = outer * eta[b] - area(u.nodes[a])? * eta[a];
    let residual = flux - bulk;
    Ok(BalanceReport {
        flux,
        bulk,
        residual,
        boundary_area: outer,
        relative: residual.abs() / outer,
        eta_normal: Some(eta[b]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoperimetricRecord {
    pub volume: f64,
    pub area: f64,
    pub k_norm: f64,
    pub constant: f64,
    pub volume_bound: f64,
    pub area_bound: f64,
    pub volume_holds: bool,
    pub area_holds: bool,
    pub applicable: bool,
}

/// Evaluates `|Ω| ≥ I² ‖k‖⁻³` and `|∂Ω| ≥ I² ‖k‖⁻²`.
pub fn isoperimetric_from(volume: f64, area: f64, k_norm: f64, constant: f64) -> Result<IsoperimetricRecord> {
    if !(constant > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "I".to_string(),
            value: constant,
            reason: "isoperimetric constant must be positive",
        });
    }
    let applicable = k_norm > 0.0;
    let (vb, ab) = if applicable {
        (constant * constant / k_norm.powi(3), constant * constant / (k_norm * k_norm))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(IsoperimetricRecord {
        volume,
        area,
        k_norm,
        constant,
        volume_bound: vb,
        area_bound: ab,
        volume_holds: applicable && volume >= vb,
        area_holds: applicable && area >= ab,
        applicable,
    })
}

/// Measures `|Ω|`, `|∂Ω|` and `‖k‖₀ = sup √(p² + 2q²)` and evaluates the
/// isoperimetric bounds (diagnostic only).
pub fn isoperimetric_check(report: &StructureReport, data: &InitialDataSet, u: &BlowdownLimit, constant: f64) -> Result<IsoperimetricRecord> {
    if data.symmetry() != Symmetry::Spherical {
        return Err(Error::NotImplemented("isoperimetric check for non-radial data"));
    }
    let a = report.segments.first().map(|s| s.start).ok_or_else(|| Error::NotApplicable("empty region".into()))?;
    let b = report.segments.last().map(|s| s.end).expect("non-empty");
    let four_pi = 4.0 * core::f64::consts::PI;
    let (r1, r2) = (u.nodes[a], u.nodes[b]);
    let volume = integrate(
        |r| data.radial_profile(r).map(|p| four_pi * p.a[0] * p.radius[0] * p.radius[0]).unwrap_or(f64::NAN),
        r1,
        r2,
        32,
        8,
    );
    let outer = data.radial_profile(r2)?;
    let area = four_pi * outer.radius[0] * outer.radius[0];
    let k_norm = data
        .chart
        .nodes()
        .iter()
        .map(|&r| data.radial_profile(r).map(|p| (p.p[0] * p.p[0] + 2.0 * p.q[0] * p.q[0]).sqrt()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    isoperimetric_from(volume, area, k_norm, constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowdown::{classify, default_reference, extract};
    use crate::initial_data::catalog_load;
    use crate::jang::{continuation, JangProblem, Schedule};
    use alloc::collections::BTreeMap;

    fn load(name: &str, kv: &[(&str, f64)]) -> InitialDataSet {
        let p: BTreeMap<_, _> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        catalog_load(name, &p).unwrap()
    }

    #[test]
    fn thickness_oracles() {
        let flat = load("flat_vacuum", &[]);
        assert!((thickness(&flat, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(thickness(&flat, 1.5, 1.5).unwrap(), 0.0);
        let schw = load("isotropic_schwarzschild", &[("M", 1.0)]);
        // ∫₁² (1 + 1/(2r))² dr = 1 + ln 2 + 1/8
        let closed = 1.0 + core::f64::consts::LN_2 + 0.125;
        assert!((thickness(&schw, 1.0, 2.0).unwrap() - closed).abs() < 1e-6);
        let per = load("periodic_constant_k", &[("c", 0.1)]);
        assert!(matches!(thickness(&per, 0.0, 1.0), Err(Error::NotImplemented(_))));
    }

    #[test]
    fn isoperimetric_arithmetic() {
        let r = isoperimetric_from(1.0, 1.0, 10.0, 1.0).unwrap();
        assert!(r.applicable && r.volume_holds && r.area_holds);
        assert!((r.volume_bound - 1e-3).abs() < 1e-15 && (r.area_bound - 1e-2).abs() < 1e-15);
        let z = isoperimetric_from(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(!z.applicable);
        assert!(isoperimetric_from(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn vacuum_partition_is_empty() {
        let d = load("flat_vacuum", &[]);
        let run = continuation(&JangProblem::new(d.clone(), 1.0).unwrap(), &"geo:1:0.5:1e-3".parse::<Schedule>().unwrap()).unwrap();
        let u = extract(&d, &run).unwrap();
        let c = classify(&run, &u, &[]).unwrap();
        assert!(partition(&u, &c, &d).unwrap().is_empty());
    }

    #[test]
    fn periodic_box_is_one_maximal_domain() {
        let c = 0.1;
        let d = load("periodic_constant_k", &[("c", c)]);
        let run = continuation(&JangProblem::new(d.clone(), 1.0).unwrap(), &"list:0.1,0.05,0.025,0.0125".parse::<Schedule>().unwrap()).unwrap();
        let u = extract(&d, &run).unwrap();
        let cm = classify(&run, &u, &default_reference(u.u.len(), 8)).unwrap();
        let reps = partition(&u, &cm, &d).unwrap();
        assert_eq!(reps.len(), 1);
        let r = &reps[0];
        assert_eq!(r.segments.len(), 1);
        assert!(r.tiled && r.max_on_domain && !r.low_confidence);
        match r.segments[0].kind {
            SegmentKind::MaximalDomain { theta, oscillation, critical_point, .. } => {
                assert!((theta + 3.0 * c).abs() < 1e-10);
                assert!(oscillation < 1e-10 && !critical_point);
            }
            k => panic!("{k:?}"),
        }
        let bal = balance_check(r, &u, &u.eta, &d).unwrap();
        assert!(bal.residual.abs() < 1e-10);
    }
}
