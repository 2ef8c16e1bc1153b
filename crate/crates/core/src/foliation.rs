//! Constant-expansion foliations `θ(Σ_τ) = τ` traced by predictor-corrector
//! continuation, the local solution `v(Ψ(τ, y)) = τ` and the comparison
//! `u ≤ v` on the stable annulus of a MOTS.

use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::blowdown::BlowdownLimit;
use crate::error::{Error, Result};
use crate::stability::{dense_spectrum, linearization, principal_eig, ExpansionOperator, CES_TOLERANCE};
use crate::surfaces::{expansion, fermi_surface, oscillation, surface_geometry, Ambient, SphereGrid, Surface};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationOptions {
    /// Expansion cap `𝒯`: stop once `|τ| > tau_cap`.
    pub tau_cap: f64,
    pub max_steps: usize,
    /// Stop exactly at this expansion if it lies ahead.
    pub tau_end: Option<f64>,
    /// Initial step; default `1e−2 (1 + |τ₀|)`.
    pub dtau0: Option<f64>,
    pub dtau_min: f64,
    pub dtau_max: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Require `λ₁ > 0` on the seed (maximal stable foliation mode).
    pub require_stable: bool,
}

impl Default for FoliationOptions {
    fn default() -> Self {
        Self {
            tau_cap: 10.0,
            max_steps: 400,
            tau_end: None,
            dtau0: None,
            dtau_min: 1e-5,
            dtau_max: 0.1,
            newton_tol: 1e-10,
            max_newton: 8,
            require_stable: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// `λ₁` reached the marginal band, changed sign, or the step collapsed
    /// while `|λ₁|` was small. Carries the extrapolated `τ` where `λ₁ = 0`.
    MarginalEndpoint { tau_estimate: Option<f64> },
    DomainBoundary,
    ExpansionCap,
    StepFailure,
    TargetReached,
    MaxSteps,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::MarginalEndpoint { .. } => "marginal_endpoint",
            Termination::DomainBoundary => "domain_boundary",
            Termination::ExpansionCap => "expansion_cap",
            Termination::StepFailure => "step_failure",
            Termination::TargetReached => "target_reached",
            Termination::MaxSteps => "max_steps",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sheet {
    pub tau: f64,
    pub surface: Surface,
    pub theta_oscillation: f64,
    pub lambda1: f64,
    pub tol_marginal: f64,
    /// Normal velocity per unit `|Δτ|`: `L ψ = σ` with `σ` the direction.
    pub psi: Vec<f64>,
    pub psi_min: f64,
    pub psi_max: f64,
    pub sup_h2: f64,
    /// Area-weighted mean coordinate radius.
    pub r_mean: f64,
    pub area: f64,
    /// `L_Σ(1)` at the nodes.
    pub l_one: Vec<f64>,
    /// Accumulated normal offset from the previous sheet.
    pub displacement: Option<Vec<f64>>,
    /// Signed step from the previous sheet.
    pub dtau: f64,
    pub newton_iters: usize,
    /// `‖θ(predictor) − τ‖∞ / ‖δ‖∞²` for the step into this sheet.
    pub remainder_constant: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FoliationBranch {
    pub grid: SphereGrid,
    pub direction: f64,
    pub sheets: Vec<Sheet>,
    pub termination: Termination,
}

impl FoliationBranch {
    pub fn seed(&self) -> &Sheet {
        &self.sheets[0]
    }

    /// `τ` strictly monotone in the branch direction.
    pub fn tau_monotone(&self) -> bool {
        self.sheets.windows(2).all(|w| (w[1].tau - w[0].tau) * self.direction > 0.0)
    }

    /// `ψ` has one strict sign on every sheet.
    pub fn psi_sign_definite(&self) -> bool {
        self.sheets.iter().all(|s| s.psi_min > 0.0 || s.psi_max < 0.0)
    }
}

fn weighted_mean(grid: &SphereGrid, v: &[f64]) -> f64 {
    grid.integrate(v) / grid.integrate(&grid.synthesize(&grid.constant(1.0)))
}

fn make_sheet(
    data: &dyn Ambient,
    grid: &SphereGrid,
    surface: Surface,
    tau: f64,
    direction: f64,
) -> Result<(Sheet, ExpansionOperator)> {
    let geo = surface_geometry(data, grid, &surface)?;
    let th = geo.expansion();
    let op = linearization(data, grid, &surface)?;
    let eig = principal_eig(&op)?;
    let psi_c = solve_min_norm(&op, &grid.synthesize(&grid.constant(direction)))?;
    let psi = grid.synthesize(&psi_c);
    let (psi_min, psi_max) = psi
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let radii: Vec<f64> = geo.nodes.iter().map(|n| crate::geometry::norm(&n.x)).collect();
    let l_one = op.apply(&grid.constant(1.0));
    Ok((
        Sheet {
            tau,
            theta_oscillation: oscillation(&th),
            lambda1: eig.lambda1,
            tol_marginal: op.tol_marginal(),
            psi,
            psi_min,
            psi_max,
            sup_h2: geo.sup_h_norm2(),
            r_mean: weighted_mean(grid, &radii),
            area: geo.area,
            l_one,
            displacement: None,
            dtau: 0.0,
            newton_iters: 0,
            remainder_constant: None,
            surface,
        },
        op,
    ))
}

/// Moves `surface` with normal speed `w` (coefficients). Radial graphs stay
/// radial graphs: `δρ = w / g(∂_r, ν)` agrees with the Fermi graph to first
/// order and avoids re-fitting points that drift off their rays.
pub fn advance(data: &dyn Ambient, grid: &SphereGrid, surface: &Surface, w: &[f64]) -> Result<Surface> {
    let Some(rho) = surface.radial_coefficients(grid) else {
        return fermi_surface(grid, surface, w, data);
    };
    let geo = surface_geometry(data, grid, surface)?;
    let wn = grid.synthesize(w);
    let drho: Vec<f64> = geo
        .nodes
        .iter()
        .zip(&wn)
        .map(|(n, w)| {
            let r = crate::geometry::norm(&n.x);
            let radial = (0..3).map(|i| n.nu_flat[i] * n.x[i] / r).sum::<f64>();
            w / radial
        })
        .collect();
    let d = grid.analyze(&drho);
    let rho: Vec<f64> = rho.iter().zip(&d).map(|(a, b)| a + b).collect();
    Ok(Surface::radial_graph(rho).with_orientation(surface.orientation))
}

/// Minimum-norm solve of `L x = rhs` (nodal) with singular values below
/// `1e−10 ‖L‖` dropped. Round spheres in flat data have the translations in
/// the kernel of `L` even though `λ₁ ≠ 0`.
pub fn solve_min_norm(op: &ExpansionOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let grid = &op.grid;
    let b = nalgebra::DVector::from_vec(grid.analyze(rhs));
    let svd = op.matrix().clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let x = svd
        .solve(&b, 1e-10 * smax)
        .map_err(|_| Error::Singular("stability operator"))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("stability operator"));
    }
    Ok(x.iter().copied().collect())
}

enum StepError {
    Chart,
    Newton,
}

impl From<Error> for StepError {
    fn from(e: Error) -> Self {
        match e {
            Error::SurfaceExitsChart { .. } => StepError::Chart,
            _ => StepError::Newton,
        }
    }
}

/// Newton on `θ(Σ) = τ` with normal-graph updates `L_Σ δ = τ − θ`.
fn correct(
    data: &dyn Ambient,
    grid: &SphereGrid,
    mut surface: Surface,
    tau: f64,
    disp: &mut [f64],
    opts: &FoliationOptions,
) -> core::result::Result<(Surface, usize), StepError> {
    let tol = opts.newton_tol * (1.0 + tau.abs());
    let mut prev = f64::INFINITY;
    for it in 0..=opts.max_newton {
        let th = expansion(data, grid, &surface)?;
        let err = th.iter().fold(0.0f64, |m, t| m.max((t - tau).abs()));
        if !err.is_finite() {
            return Err(StepError::Newton);
        }
        if err <= tol {
            return Ok((surface, it));
        }
        if it == opts.max_newton || err > 0.5 * prev {
            return Err(StepError::Newton);
        }
        prev = err;
        let op = linearization(data, grid, &surface)?;
        let rhs: Vec<f64> = th.iter().map(|t| tau - t).collect();
        let delta = solve_min_norm(&op, &rhs)?;
        for (d, x) in disp.iter_mut().zip(grid.synthesize(&delta)) {
            *d += x;
        }
        surface = advance(data, grid, &surface, &delta)?;
    }
    Err(StepError::Newton)
}

fn lambda_zero_estimate(sheets: &[Sheet]) -> Option<f64> {
    if sheets.len() < 3 {
        return None;
    }
    let tail = &sheets[sheets.len() - 3..];
    let x: Vec<f64> = tail.iter().map(|s| s.tau).collect();
    let y: Vec<f64> = tail.iter().map(|s| s.lambda1 * s.lambda1).collect();
    let (slope, icpt) = crate::linalg::linear_fit(&x, &y);
    (slope != 0.0).then(|| -icpt / slope)
}

/// Traces `θ(Σ_τ) = τ` from `seed` with `τ` moving in `direction` (±1).
pub fn trace(
    data: &dyn Ambient,
    grid: &SphereGrid,
    seed: Surface,
    direction: f64,
    opts: &FoliationOptions,
) -> Result<FoliationBranch> {
    let direction = direction.signum();
    let th = expansion(data, grid, &seed)?;
    let tau0 = crate::surfaces::mean(&th);
    let osc = oscillation(&th);
    if osc > CES_TOLERANCE * (1.0 + tau0.abs()) {
        return Err(Error::NotCes { oscillation: osc });
    }
    let (sheet0, _) = make_sheet(data, grid, seed, tau0, direction)?;
    if sheet0.lambda1.abs() <= sheet0.tol_marginal {
        return Err(Error::NotApplicable("seed is marginally stable; L is not invertible".into()));
    }
    if opts.require_stable && sheet0.lambda1 <= 0.0 {
        return Err(Error::NotApplicable("stable mode needs a strictly stable seed".into()));
    }
    let mut sheets = alloc::vec![sheet0];
    let mut dtau = opts
        .dtau0
        .unwrap_or(1e-2 * (1.0 + tau0.abs()))
        .clamp(opts.dtau_min, opts.dtau_max);
    let mut last_failure = StepError::Newton;
    let lambda_peak = |s: &[Sheet]| s.iter().fold(0.0f64, |m, x| m.max(x.lambda1.abs()));
    let termination = loop {
        let cur = sheets.last().expect("seed");
        if sheets.len() > opts.max_steps {
            break Termination::MaxSteps;
        }
        if cur.tau.abs() > opts.tau_cap {
            break Termination::ExpansionCap;
        }
        if let Some(end) = opts.tau_end {
            if (end - cur.tau) * direction <= 1e-12 * (1.0 + end.abs()) {
                break Termination::TargetReached;
            }
        }
        if dtau < opts.dtau_min {
            let small = cur.lambda1.abs() <= 0.05 * lambda_peak(&sheets);
            break match last_failure {
                StepError::Chart => Termination::DomainBoundary,
                StepError::Newton if small => Termination::MarginalEndpoint {
                    tau_estimate: lambda_zero_estimate(&sheets),
                },
                StepError::Newton => Termination::StepFailure,
            };
        }
        let mut step = dtau;
        if let Some(end) = opts.tau_end {
            step = step.min((end - cur.tau) * direction);
        }
        let target = cur.tau + direction * step;
        let pred_c = grid.analyze(&cur.psi.iter().map(|p| p * step).collect::<Vec<_>>());
        let mut disp: Vec<f64> = cur.psi.iter().map(|p| p * step).collect();
        let attempt = (|| {
            let pred = advance(data, grid, &cur.surface, &pred_c)?;
            let th = expansion(data, grid, &pred)?;
            let rem = th.iter().fold(0.0f64, |m, t| m.max((t - target).abs()));
            let dmax = disp.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            Ok::<_, StepError>((pred, rem / (dmax * dmax)))
        })();
        let outcome = attempt.and_then(|(pred, a)| {
            correct(data, grid, pred, target, &mut disp, opts).map(|(s, it)| (s, it, a))
        });
        match outcome {
            Ok((surface, iters, a)) => {
                let (mut sheet, _) = match make_sheet(data, grid, surface, target, direction) {
                    Ok(x) => x,
                    Err(_) => {
                        last_failure = StepError::Newton;
                        dtau *= 0.5;
                        continue;
                    }
                };
                sheet.displacement = Some(disp);
                sheet.dtau = direction * step;
                sheet.newton_iters = iters;
                sheet.remainder_constant = Some(a);
                let prev_lambda = cur.lambda1;
                let crossed = sheet.lambda1 * prev_lambda < 0.0;
                let marginal = sheet.lambda1.abs() <= sheet.tol_marginal;
                sheets.push(sheet);
                if marginal || crossed {
                    break Termination::MarginalEndpoint {
                        tau_estimate: lambda_zero_estimate(&sheets),
                    };
                }
                if iters <= 2 {
                    dtau = (dtau * 1.2).min(opts.dtau_max);
                }
            }
            Err(e) => {
                last_failure = e;
                dtau *= 0.5;
            }
        }
    };
    Ok(FoliationBranch {
        grid: grid.clone(),
        direction,
        sheets,
        termination,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityReport {
    /// Per step `max |displacement / |Δτ| − ψ_prev|`.
    pub step_deviation: Vec<f64>,
    pub max_deviation: f64,
    /// Per sheet `max |L_Σ(1) − dθ/dσ|` with `dθ/dσ` from ±ε normal offsets.
    pub l_one_deviation: Vec<f64>,
    pub max_l_one_deviation: f64,
}

/// Compares the sheet displacement with `ψ` and `L_Σ(1)` with the
/// finite-difference normal derivative of `θ`.
pub fn velocity_consistency(data: &dyn Ambient, branch: &FoliationBranch) -> Result<VelocityReport> {
    if branch.sheets.len() < 3 {
        return Err(Error::NotApplicable("velocity consistency needs at least 3 sheets".into()));
    }
    let grid = &branch.grid;
    let step_deviation: Vec<f64> = branch
        .sheets
        .windows(2)
        .map(|w| {
            let disp = w[1].displacement.as_ref().expect("non-seed sheets carry a displacement");
            let h = w[1].dtau.abs();
            disp.iter()
                .zip(&w[0].psi)
                .fold(0.0f64, |m, (d, p)| m.max((d / h - p).abs()))
        })
        .collect();
    let l_one_deviation = branch
        .sheets
        .iter()
        .map(|s| {
            let eps = 1e-4 * s.r_mean.max(1e-3);
            let plus = fermi_surface(grid, &s.surface, &grid.constant(eps), data)?;
            let minus = fermi_surface(grid, &s.surface, &grid.constant(-eps), data)?;
            let tp = expansion(data, grid, &plus)?;
            let tm = expansion(data, grid, &minus)?;
            Ok(s.l_one
                .iter()
                .zip(tp.iter().zip(&tm))
                .fold(0.0f64, |m, (l, (a, b))| m.max((l - (a - b) / (2.0 * eps)).abs())))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(VelocityReport {
        max_deviation: step_deviation.iter().fold(0.0, |m: f64, x| m.max(*x)),
        step_deviation,
        max_l_one_deviation: l_one_deviation.iter().fold(0.0, |m: f64, x| m.max(*x)),
        l_one_deviation,
    })
}

/// Principal eigenvalue from the full dense spectrum, as a cross-check.
pub fn dense_lambda1(data: &dyn Ambient, grid: &SphereGrid, sheet: &Sheet) -> Result<f64> {
    let op = linearization(data, grid, &sheet.surface)?;
    let spec = dense_spectrum(&op).ok_or_else(|| Error::NotApplicable("dense spectrum unavailable".into()))?;
    Ok(spec.iter().fold(f64::INFINITY, |m, (re, _)| m.min(*re)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSheet {
    pub tau: f64,
    pub r_mean: f64,
    pub grad_min: f64,
    pub grad_max: f64,
    pub lambda1: f64,
    /// `C(τ) = max(max|∇v| / λ₁, λ₁ / min|∇v|)`.
    pub harnack: f64,
}

#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub sheets: Vec<LocalSheet>,
    /// Pearson correlation of `λ₁` and `min|∇v|` along the branch.
    pub correlation: Option<f64>,
    pub seed_tau: f64,
    pub seed_lambda1: f64,
    pub direction: f64,
}

impl LocalSolution {
    /// `v` at coordinate radius `r`, interpolated between round sheets.
    pub fn value_at_radius(&self, r: f64) -> Option<f64> {
        let s = &self.sheets;
        if s.len() == 1 {
            return ((r - s[0].r_mean).abs() <= 1e-12 * (1.0 + r)).then_some(s[0].tau);
        }
        s.windows(2).find_map(|w| {
            let (a, b) = (w[0].r_mean, w[1].r_mean);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if r < lo || r > hi {
                return None;
            }
            let t = (r - a) / (b - a);
            Some(w[0].tau + t * (w[1].tau - w[0].tau))
        })
    }

    pub fn radius_range(&self) -> (f64, f64) {
        self.sheets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.r_mean), b.max(s.r_mean)))
    }
}

/// `v(Ψ(τ, y)) = τ` with `|∇v| = 1 / |ψ|` on each sheet.
pub fn local_solution(branch: &FoliationBranch) -> Result<LocalSolution> {
    if let Some(s) = branch.sheets.iter().find(|s| s.lambda1 <= s.tol_marginal) {
        return Err(Error::NotApplicable(alloc::format!(
            "sheet at tau = {} has lambda1 = {} (unstable or marginal)",
            s.tau,
            s.lambda1
        )));
    }
    let sheets: Vec<LocalSheet> = branch
        .sheets
        .iter()
        .map(|s| {
            let amin = s.psi.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
            let amax = s.psi.iter().fold(0.0f64, |m, p| m.max(p.abs()));
            let (grad_min, grad_max) = (1.0 / amax, 1.0 / amin);
            LocalSheet {
                tau: s.tau,
                r_mean: s.r_mean,
                grad_min,
                grad_max,
                lambda1: s.lambda1,
                harnack: (grad_max / s.lambda1).max(s.lambda1 / grad_min),
            }
        })
        .collect();
    let l: Vec<f64> = sheets.iter().map(|s| s.lambda1).collect();
    let g: Vec<f64> = sheets.iter().map(|s| s.grad_min).collect();
    Ok(LocalSolution {
        correlation: crate::linalg::correlation(&l, &g),
        seed_tau: branch.sheets[0].tau,
        seed_lambda1: branch.sheets[0].lambda1,
        direction: branch.direction,
        sheets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub node: usize,
    pub r: f64,
    pub u: f64,
    pub v: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub nodes_checked: usize,
    pub budget: f64,
    /// `max(u − v)` over the annulus.
    pub max_excess: f64,
    pub violations: Vec<Violation>,
}

impl ComparisonReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Error budget on `[r_lo, r_hi]`: extrapolation gap plus the largest
/// change of `u` across one grid cell there.
pub fn error_budget(u: &BlowdownLimit, r_lo: f64, r_hi: f64) -> f64 {
    let jump = u
        .nodes
        .windows(2)
        .zip(u.u.windows(2))
        .filter(|(r, _)| r[1] >= r_lo && r[0] <= r_hi)
        .fold(0.0f64, |m, (_, v)| m.max((v[1] - v[0]).abs()));
    u.convergence_gap + jump
}

/// Checks `u ≤ v + budget` at every node of the foliated annulus.
pub fn compare(u: &BlowdownLimit, v: &LocalSolution, budget: f64) -> Result<ComparisonReport> {
    if u.periodic {
        return Err(Error::NotApplicable("periodic data has no MOTS seed".into()));
    }
    if v.direction < 0.0 {
        return Err(Error::NotApplicable(
            "the comparison annulus is the τ ≥ 0 side of the seed".to_string(),
        ));
    }
    if v.seed_tau.abs() > CES_TOLERANCE || v.seed_lambda1 <= 0.0 {
        return Err(Error::NotApplicable(
            "the comparison needs a strictly stable MOTS seed".to_string(),
        ));
    }
    let (lo, hi) = v.radius_range();
    if hi < u.nodes[0] || lo > u.nodes[u.nodes.len() - 1] {
        return Err(Error::DomainMismatch("annulus lies outside the blowdown grid".into()));
    }
    let mut report = ComparisonReport {
        nodes_checked: 0,
        budget,
        max_excess: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for (i, (&r, &ui)) in u.nodes.iter().zip(&u.u).enumerate() {
        let Some(vi) = v.value_at_radius(r) else { continue };
        report.nodes_checked += 1;
        let excess = ui - vi;
        report.max_excess = report.max_excess.max(excess);
        if excess > budget {
            report.violations.push(Violation {
                node: i,
                r,
                u: ui,
                v: vi,
                excess,
            });
        }
    }
    Ok(report)
}
