//! Capillary blowdown limit `u = lim s f_s`, classification of nodes into
//! graphical and cylindrical convergence, and the companion field
//! `η = ∇f/√(1+|∇f|²)` with its identity `div η − tr k + k(η, η) = u`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::initial_data::{InitialDataSet, Symmetry};
use crate::jang::ContinuationRun;
use crate::linalg::{linear_fit, max_abs};

/// Nodes-with-data needed to build the limit.
pub const MIN_SMALL_STEPS: usize = 3;
/// Steps with `s` at most this value count as "small".
pub const SMALL_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowdownOptions {
    /// Node `x` is in the blowup region when `|f_{s_min}(x)| > factor · max|u| / s_min`.
    pub factor: f64,
    /// Factors for the sensitivity report.
    pub sensitivity: [f64; 4],
    /// `grad_floor = rel · ‖u‖∞ / chart scale`.
    pub grad_floor_rel: f64,
}

impl Default for BlowdownOptions {
    fn default() -> Self {
        Self {
            factor: 0.01,
            sensitivity: [0.005, 0.02, 0.25, 0.75],
            grad_floor_rel: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCount {
    pub factor: f64,
    pub plus: usize,
    pub minus: usize,
}

#[derive(Debug, Clone)]
pub struct BlowdownLimit {
    pub nodes: Vec<f64>,
    pub u: Vec<f64>,
    /// Companion field extrapolated like `u` and clamped to `[−1, 1]`.
    pub eta: Vec<f64>,
    /// `u_{s_min}` for comparison with the extrapolation.
    pub u_last: Vec<f64>,
    pub s_used: Vec<f64>,
    pub richardson_order: u32,
    /// Nodes where the extrapolation was non-monotone and `u_{s_min}` was kept.
    pub fallback: Vec<usize>,
    pub lipschitz: f64,
    /// `max |u_{s_min} − u|`, a proxy for the uniform-convergence gap.
    pub convergence_gap: f64,
    /// `+1` on Ω̂₊, `−1` on Ω̂₋, `0` elsewhere.
    pub region: Vec<i8>,
    pub factor: f64,
    /// Threshold on `|f_{s_min}|`.
    pub threshold: f64,
    pub mu1: f64,
    pub sensitivity: Vec<RegionCount>,
    pub grad_floor: f64,
    pub periodic: bool,
    pub chart_scale: f64,
}

impl BlowdownLimit {
    /// `E⁺_C(u) = {u > C}`.
    pub fn level_set_plus(&self, c: f64) -> Vec<usize> {
        (0..self.u.len()).filter(|&i| self.u[i] > c).collect()
    }

    /// `E⁻_C(u) = {u < C}`.
    pub fn level_set_minus(&self, c: f64) -> Vec<usize> {
        (0..self.u.len()).filter(|&i| self.u[i] < c).collect()
    }

    pub fn blowup_nodes(&self) -> Vec<usize> {
        (0..self.u.len()).filter(|&i| self.region[i] != 0).collect()
    }

    /// `max |u|` over nodes outside the detected blowup region.
    pub fn max_abs_outside(&self) -> f64 {
        (0..self.u.len())
            .filter(|&i| self.region[i] == 0)
            .fold(0.0, |m, i| m.max(self.u[i].abs()))
    }

    /// Sign partition: `u ≥ −tol` on Ω̂₊, `u ≤ tol` on Ω̂₋.
    pub fn sign_partition_holds(&self, tol: f64) -> bool {
        self.u.iter().zip(&self.region).all(|(&u, &r)| match r {
            1 => u >= -tol,
            -1 => u <= tol,
            _ => true,
        })
    }

    /// Spread `max |u − other.u|` between two limits on the same grid.
    pub fn spread(&self, other: &BlowdownLimit) -> Result<f64> {
        if self.u.len() != other.u.len() {
            return Err(Error::DomainMismatch("limits live on different grids".into()));
        }
        Ok(self.u.iter().zip(&other.u).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

fn monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0]) || v.windows(2).all(|w| w[1] <= w[0])
}

fn region_of(f_last: &[f64], threshold: f64) -> Vec<i8> {
    f_last
        .iter()
        .map(|&f| {
            if f > threshold {
                1
            } else if f < -threshold {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Radial metric factor `a` at the nodes (1 for periodic data).
fn node_a(data: &InitialDataSet, nodes: &[f64]) -> Result<Vec<f64>> {
    match data.symmetry() {
        Symmetry::PeriodicHomogeneous => Ok(vec![1.0; nodes.len()]),
        _ => nodes.iter().map(|&r| data.radial_profile(r).map(|p| p.a[0])).collect(),
    }
}

pub fn extract(data: &InitialDataSet, run: &ContinuationRun) -> Result<BlowdownLimit> {
    extract_with(data, run, &BlowdownOptions::default())
}

/// Richardson extrapolation (order 1 in `s`) over the last three small-`s`
/// steps.
pub fn extract_with(data: &InitialDataSet, run: &ContinuationRun, opts: &BlowdownOptions) -> Result<BlowdownLimit> {
    let small: Vec<_> = run.steps.iter().filter(|st| st.converged && st.s <= SMALL_S).collect();
    if small.len() < MIN_SMALL_STEPS {
        return Err(Error::TooFewSteps(alloc::format!(
            "blowdown needs {MIN_SMALL_STEPS} converged steps with s ≤ {SMALL_S}, run has {}",
            small.len()
        )));
    }
    let tail = &small[small.len() - MIN_SMALL_STEPS..];
    let last = tail[MIN_SMALL_STEPS - 1];
    let nodes = last.nodes.clone();
    let n = nodes.len();
    let s: Vec<f64> = tail.iter().map(|st| st.s).collect();
    let us: Vec<Vec<f64>> = tail.iter().map(|st| st.u()).collect();
    let etas: Vec<Vec<f64>> = tail.iter().map(|st| st.eta()).collect();
    let mut u = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    let mut fallback = Vec::new();
    let extrapolate = |vals: &[f64]| {
        if monotone(vals) {
            Some(linear_fit(&s, vals).1)
        } else {
            None
        }
    };
    for i in 0..n {
        let vals: Vec<f64> = us.iter().map(|v| v[i]).collect();
        match extrapolate(&vals) {
            Some(x) => u.push(x),
            None => {
                fallback.push(i);
                u.push(vals[MIN_SMALL_STEPS - 1]);
            }
        }
        let vals: Vec<f64> = etas.iter().map(|v| v[i]).collect();
        let e = extrapolate(&vals).unwrap_or(vals[MIN_SMALL_STEPS - 1]);
        eta.push(e.clamp(-1.0, 1.0));
    }
    let u_last = us[MIN_SMALL_STEPS - 1].clone();
    let convergence_gap = u.iter().zip(&u_last).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let umax = max_abs(&u);
    let s_min = last.s;
    let threshold = opts.factor * umax / s_min;
    let region = region_of(&last.f, threshold);
    let sensitivity = opts
        .sensitivity
        .iter()
        .map(|&factor| {
            let r = region_of(&last.f, factor * umax / s_min);
            RegionCount {
                factor,
                plus: r.iter().filter(|&&x| x == 1).count(),
                minus: r.iter().filter(|&&x| x == -1).count(),
            }
        })
        .collect();
    let a = node_a(data, &nodes)?;
    let periodic = data.symmetry() == Symmetry::PeriodicHomogeneous;
    let mut lipschitz = 0.0f64;
    for i in 0..n.saturating_sub(1) {
        let dist = 0.5 * (a[i] + a[i + 1]) * (nodes[i + 1] - nodes[i]);
        lipschitz = lipschitz.max((u[i + 1] - u[i]).abs() / dist);
    }
    let chart_scale = match data.chart {
        crate::initial_data::Chart::PeriodicBox { side, .. } => side,
        _ => nodes[n - 1] - nodes[0],
    };
    Ok(BlowdownLimit {
        grad_floor: opts.grad_floor_rel * umax / chart_scale,
        nodes,
        u,
        eta,
        u_last,
        s_used: s,
        richardson_order: 1,
        fallback,
        lipschitz,
        convergence_gap,
        region,
        factor: opts.factor,
        threshold,
        mu1: data.max_trace_k(),
        sensitivity,
        periodic,
        chart_scale,
    })
}

/// Three-point first derivative on a (possibly non-uniform) grid; one-sided
/// at the ends, wrapped for periodic grids.
pub fn derivative(nodes: &[f64], v: &[f64], periodic: bool) -> Vec<f64> {
    let n = nodes.len();
    if periodic {
        let h = nodes[1] - nodes[0];
        return (0..n).map(|i| (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * h)).collect();
    }
    let three = |x: [f64; 3], y: [f64; 3], at: f64| {
        // derivative of the interpolating parabola
        let l0 = (2.0 * at - x[1] - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
        let l1 = (2.0 * at - x[0] - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
        let l2 = (2.0 * at - x[0] - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
        l0 * y[0] + l1 * y[1] + l2 * y[2]
    };
    (0..n)
        .map(|i| {
            let c = i.clamp(1, n - 2);
            three(
                [nodes[c - 1], nodes[c], nodes[c + 1]],
                [v[c - 1], v[c], v[c + 1]],
                nodes[i],
            )
        })
        .collect()
}

/// Expansion of the level set through node `i` with normal `sign · e_r`.
fn slice_expansion(data: &InitialDataSet, r: f64, sign: f64) -> Result<f64> {
    match data.symmetry() {
        Symmetry::PeriodicHomogeneous => Ok(-data.periodic_profile(r)?.1),
        _ => {
            let p = data.radial_profile(r)?;
            Ok(sign * p.sphere_mean_curvature() - 2.0 * p.q[0])
        }
    }
}

/// Level-set residual `|∇u| (u − θ_{n̂})` at every node, `None` on the
/// singular set `|∇u| < grad_floor`.
pub fn levelset_residuals(data: &InitialDataSet, u: &BlowdownLimit) -> Result<Vec<Option<f64>>> {
    let du = derivative(&u.nodes, &u.u, u.periodic);
    let a = node_a(data, &u.nodes)?;
    (0..u.nodes.len())
        .map(|i| {
            let g = du[i] / a[i];
            if g.abs() < u.grad_floor || g.abs() == 0.0 {
                return Ok(None);
            }
            let theta = slice_expansion(data, u.nodes[i], g.signum())?;
            Ok(Some(g.abs() * (u.u[i] - theta)))
        })
        .collect()
}

/// Level-set residual at one node; not-applicable on the singular set.
pub fn levelset_residual(data: &InitialDataSet, u: &BlowdownLimit, node: usize) -> Result<f64> {
    if node >= u.nodes.len() {
        return Err(Error::DomainMismatch("node index out of range".into()));
    }
    levelset_residuals(data, u)?[node].ok_or_else(|| Error::NotApplicable("node lies in the singular set {∇u = 0}".into()))
}

/// `|θ(level sphere) − u|` where the gradient is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CesDeviation {
    pub max_deviation: f64,
    pub h: f64,
    /// `C` with `max_deviation = C h`.
    pub constant: f64,
    pub nodes: usize,
}

pub fn level_ces_deviation(data: &InitialDataSet, u: &BlowdownLimit, skip: &[bool]) -> Result<CesDeviation> {
    let du = derivative(&u.nodes, &u.u, u.periodic);
    let a = node_a(data, &u.nodes)?;
    let h = u.nodes.windows(2).fold(0.0f64, |m, w| m.max(w[1] - w[0]));
    let mut dev = 0.0f64;
    let mut count = 0;
    for i in 0..u.nodes.len() {
        let g = du[i] / a[i];
        if g.abs() <= u.grad_floor || skip.get(i).copied().unwrap_or(false) {
            continue;
        }
        let theta = slice_expansion(data, u.nodes[i], g.signum())?;
        dev = dev.max((theta - u.u[i]).abs());
        count += 1;
    }
    Ok(CesDeviation {
        max_deviation: dev,
        h,
        constant: dev / h,
        nodes: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLabel {
    Graphical(usize),
    Cylindrical(usize),
    NoBlowup,
    Unresolved,
}

impl NodeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeLabel::Graphical(_) => "graphical",
            NodeLabel::Cylindrical(_) => "cylindrical",
            NodeLabel::NoBlowup => "no_blowup",
            NodeLabel::Unresolved => "unresolved",
        }
    }

    pub fn id(&self) -> Option<usize> {
        match self {
            NodeLabel::Graphical(i) | NodeLabel::Cylindrical(i) => Some(*i),
            _ => None,
        }
    }

    fn kind(&self) -> u8 {
        match self {
            NodeLabel::Graphical(_) => 1,
            NodeLabel::Cylindrical(_) => 2,
            NodeLabel::NoBlowup => 3,
            NodeLabel::Unresolved => 4,
        }
    }
}

/// Growth exponents at or below this count as bounded.
pub const BOUNDED_EXPONENT: f64 = 0.1;
/// Growth exponents at or above this count as divergent.
pub const DIVERGENT_EXPONENT: f64 = 0.5;
/// Steps used for the gradient trend.
pub const TREND_STEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LevelSetMonitor {
    pub pairs_checked: usize,
    pub pairs_increasing: usize,
}

#[derive(Debug, Clone)]
pub struct ClassificationMap {
    pub labels: Vec<NodeLabel>,
    /// Companion field (radial or `x` component).
    pub eta: Vec<f64>,
    /// Fitted exponent `e` in `|∇f_s| ~ s^{−e}`.
    pub growth: Vec<f64>,
    /// `|∇f_{s_k}|` over the trend steps, per node.
    pub gradient_trend: Vec<Vec<f64>>,
    /// Node ranges `[start, end]` (inclusive) of the maximal domains.
    pub domains: Vec<(usize, usize)>,
    /// Node ranges of the cylindrical bands.
    pub bands: Vec<(usize, usize)>,
    pub unresolved_fraction: f64,
    pub monitor: LevelSetMonitor,
}

impl ClassificationMap {
    /// Nodes within `width` of a label change.
    pub fn interface_band(&self, width: usize) -> Vec<bool> {
        let n = self.labels.len();
        let mut out = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if self.labels[i].kind() != self.labels[i + 1].kind() {
                let lo = i.saturating_sub(width.saturating_sub(1));
                let hi = (i + width).min(n - 1);
                for o in out.iter_mut().take(hi + 1).skip(lo) {
                    *o = true;
                }
            }
        }
        out
    }
}

fn runs(labels: &[NodeLabel], kind: u8, periodic: bool) -> Vec<(usize, usize)> {
    let n = labels.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if labels[i].kind() == kind {
            let start = i;
            while i + 1 < n && labels[i + 1].kind() == kind {
                i += 1;
            }
            out.push((start, i));
        }
        i += 1;
    }
    if periodic && out.len() > 1 {
        let first = out[0];
        let last = *out.last().expect("non-empty");
        if first.0 == 0 && last.1 == n - 1 {
            out.pop();
            out[0] = (last.0, first.1);
        }
    }
    out
}

/// Labels every node from the trend of `|∇f_{s_k}|` over the last steps.
pub fn classify(run: &ContinuationRun, u: &BlowdownLimit, reference: &[usize]) -> Result<ClassificationMap> {
    let steps: Vec<_> = run.steps.iter().filter(|s| s.converged).collect();
    if steps.len() < TREND_STEPS {
        return Err(Error::TooFewSteps(alloc::format!(
            "classification needs {TREND_STEPS} converged steps"
        )));
    }
    if !run.steps.last().is_some_and(|s| s.converged) {
        return Err(Error::NotApplicable("run did not converge at its smallest s".into()));
    }
    let tail = &steps[steps.len() - TREND_STEPS..];
    let n = u.nodes.len();
    let x: Vec<f64> = tail.iter().map(|st| (1.0 / st.s).ln()).collect();
    let mut growth = Vec::with_capacity(n);
    let mut trend = Vec::with_capacity(n);
    let mut raw: Vec<u8> = Vec::with_capacity(n);
    for i in 0..n {
        let g: Vec<f64> = tail.iter().map(|st| st.grad[i].abs()).collect();
        let e = if g.iter().all(|v| *v < 1e-12) {
            0.0
        } else {
            let y: Vec<f64> = g.iter().map(|v| (v + 1e-300).ln()).collect();
            linear_fit(&x, &y).0
        };
        growth.push(e);
        trend.push(g);
        raw.push(if e >= DIVERGENT_EXPONENT {
            2
        } else if u.region[i] == 0 {
            3
        } else if e <= BOUNDED_EXPONENT {
            1
        } else {
            4
        });
    }
    // divergent trends away from Ω̂ are not blowup: cylindrical convergence
    // happens on ∂Ω̂, so a cylindrical run must touch the detected region
    let mut i = 0;
    while i < n {
        if raw[i] == 2 {
            let start = i;
            while i + 1 < n && raw[i + 1] == 2 {
                i += 1;
            }
            let lo = start.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            let touches = (lo..=hi).any(|j| u.region[j] != 0)
                || (u.periodic && (u.region[(start + n - 1) % n] != 0 || u.region[(i + 1) % n] != 0));
            if !touches {
                raw[start..=i].iter_mut().for_each(|k| *k = 3);
            }
        }
        i += 1;
    }
    let mut labels: Vec<NodeLabel> = raw
        .iter()
        .map(|k| match k {
            1 => NodeLabel::Graphical(0),
            2 => NodeLabel::Cylindrical(0),
            3 => NodeLabel::NoBlowup,
            _ => NodeLabel::Unresolved,
        })
        .collect();
    let domains = runs(&labels, 1, u.periodic);
    let bands = runs(&labels, 2, u.periodic);
    let assign = |labels: &mut [NodeLabel], ranges: &[(usize, usize)], make: fn(usize) -> NodeLabel| {
        for (id, &(a, b)) in ranges.iter().enumerate() {
            let mut i = a;
            loop {
                labels[i] = make(id);
                if i == b {
                    break;
                }
                i = (i + 1) % n;
            }
        }
    };
    assign(&mut labels, &domains, NodeLabel::Graphical);
    assign(&mut labels, &bands, NodeLabel::Cylindrical);
    let last = tail[TREND_STEPS - 1];
    let eta = last.eta();
    let blowup = labels.iter().filter(|l| !matches!(l, NodeLabel::NoBlowup)).count();
    let unresolved = labels.iter().filter(|l| matches!(l, NodeLabel::Unresolved)).count();
    let mut monitor = LevelSetMonitor::default();
    for &a in reference {
        for &b in reference {
            if a >= n || b >= n || u.u[a] <= u.u[b] + 3.0 * u.convergence_gap {
                continue;
            }
            monitor.pairs_checked += 1;
            let d: Vec<f64> = tail.iter().map(|st| st.f[a] - st.f[b]).collect();
            if d.windows(2).all(|w| w[1] > w[0]) {
                monitor.pairs_increasing += 1;
            }
        }
    }
    Ok(ClassificationMap {
        labels,
        eta,
        growth,
        gradient_trend: trend,
        domains,
        bands,
        unresolved_fraction: if blowup == 0 { 0.0 } else { unresolved as f64 / blowup as f64 },
        monitor,
    })
}

/// Evenly spaced reference nodes.
pub fn default_reference(n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n).max(1);
    (0..count).map(|k| k * (n - 1) / count.max(2).saturating_sub(1).max(1)).map(|i| i.min(n - 1)).collect()
}

#[derive(Debug, Clone)]
pub struct CompanionResidual {
    pub pointwise: Vec<f64>,
    /// Nodes left out of the summary (ends and interface bands).
    pub excluded: Vec<bool>,
    pub interior_max: f64,
}

/// Pointwise `div η − tr k + k(η, η) − u` by centred differences.
pub fn companion_residual(
    data: &InitialDataSet,
    u: &BlowdownLimit,
    eta: &[f64],
    exclude: Option<&[bool]>,
) -> Result<CompanionResidual> {
    let n = u.nodes.len();
    if eta.len() != n {
        return Err(Error::DomainMismatch("η and u live on different grids".into()));
    }
    let (flux, scale, p, trk): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) = match data.symmetry() {
        Symmetry::PeriodicHomogeneous => {
            let (p, t) = data.periodic_profile(0.0)?;
            (eta.to_vec(), vec![1.0; n], vec![p; n], vec![p + t; n])
        }
        _ => {
            let mut out = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, &r) in u.nodes.iter().enumerate() {
                let pr = data.radial_profile(r)?;
                let r2 = pr.radius[0] * pr.radius[0];
                out.0.push(r2 * eta[i]);
                out.1.push(1.0 / (pr.a[0] * r2));
                out.2.push(pr.p[0]);
                out.3.push(pr.trace_k());
            }
            out
        }
    };
    let dflux = derivative(&u.nodes, &flux, u.periodic);
    let pointwise: Vec<f64> = (0..n)
        .map(|i| scale[i] * dflux[i] - trk[i] + p[i] * eta[i] * eta[i] - u.u[i])
        .collect();
    let mut excluded: Vec<bool> = exclude.map_or_else(|| vec![false; n], |e| e.to_vec());
    if !u.periodic {
        excluded[0] = true;
        excluded[n - 1] = true;
    }
    let interior_max = (0..n).filter(|&i| !excluded[i]).fold(0.0f64, |m, i| m.max(pointwise[i].abs()));
    Ok(CompanionResidual {
        pointwise,
        excluded,
        interior_max,
    })
}
