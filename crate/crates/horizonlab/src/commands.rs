//! One function per subcommand. Each writes its artifacts through an
//! [`OutDir`], which produces the manifest.

use std::path::{Path, PathBuf};

use horizonlab_core::blowdown::{
    classify as classify_nodes, companion_residual, default_reference, extract, levelset_residuals, BlowdownLimit,
    ClassificationMap,
};
use horizonlab_core::foliation::{trace, velocity_consistency, FoliationOptions};
use horizonlab_core::geometry::constraints;
use horizonlab_core::gluing::{
    assemble_cylinder, cap_from_round_horizon, eigen_bound_check, ConformalPath, CylinderSpec, Mode,
};
use horizonlab_core::initial_data::{validate_decay, InitialDataSet, Symmetry};
use horizonlab_core::jang::{continuation, solve, JangProblem, Schedule};
use horizonlab_core::linalg::max_abs;
use horizonlab_core::stability::{assemble, principal_eig};
use horizonlab_core::structure::{balance_check, isoperimetric_check, partition, SegmentKind, StructureReport};
use horizonlab_core::surfaces::{embedding, oscillation, mean, surface_geometry, to_coefficients, SphereGrid, Surface};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::format::{to_json, Cell, Csv};
use crate::manifest::{OutDir, RunManifest};
use crate::rundir::{load_run, step_csv, write_run, LoadedRun};
use crate::suite;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub data: Option<String>,
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub lmax: Option<usize>,
}

/// Isoperimetric constant used by the structure diagnostics.
fn isoperimetric_constant() -> f64 {
    6.0 * std::f64::consts::PI.sqrt()
}

impl Common {
    fn config(&self) -> CliResult<(Config, InitialDataSet, Option<PathBuf>)> {
        let arg = self
            .data
            .as_deref()
            .ok_or_else(|| CliError::Config("--data is required for this command".into()))?;
        let (pinned, data) = Config::from_arg(arg)?.resolve(self.grid)?;
        let input = Path::new(arg).is_file().then(|| PathBuf::from(arg));
        Ok((pinned, data, input))
    }

    fn out_or(&self, default: impl Into<PathBuf>) -> PathBuf {
        self.out.clone().unwrap_or_else(|| default.into())
    }

    fn open(&self, default: &str, command: &str, settings: Value) -> CliResult<OutDir> {
        OutDir::create(&self.out_or(default), command, &settings)
    }
}

fn spherical(data: &InitialDataSet, what: &str) -> CliResult<()> {
    if data.symmetry() == Symmetry::Spherical {
        Ok(())
    } else {
        Err(CliError::Core(horizonlab_core::Error::NotApplicable(format!(
            "{what} needs spherically symmetric data, `{}` is periodic",
            data.name
        ))))
    }
}

fn sample_point(data: &InitialDataSet, r: f64) -> [f64; 3] {
    match data.symmetry() {
        Symmetry::Spherical => {
            let d = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
            [r * d[0], r * d[1], r * d[2]]
        }
        _ => [r, 0.3, -0.2],
    }
}

pub fn data_validate(c: &Common) -> CliResult<RunManifest> {
    let (cfg, data, input) = c.config()?;
    let mut out = c.open("out/data", "data validate", json!({ "config": cfg }))?;
    if let Some(p) = input {
        out.input(&p);
    }
    let (mut max_mu, mut max_j, mut min_dec, mut max_trk) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for r in data.chart.nodes() {
        let k = constraints(&data, &sample_point(&data, r))?;
        max_mu = max_mu.max(k.mu.abs());
        max_j = max_j.max(k.j_norm);
        min_dec = min_dec.min(k.dec_margin);
        max_trk = max_trk.max(k.trace_k.abs());
    }
    let decay = match validate_decay(&data) {
        Ok(rep) => json!({
            "applicable": true,
            "pass": rep.pass,
            "nodes_used": rep.nodes_used,
            "failing": rep.failing(),
            "entries": rep.entries.iter().map(|e| json!({
                "quantity": e.quantity, "exponent": e.exponent, "target": e.target, "pass": e.pass,
            })).collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "applicable": false, "reason": e.to_string() }),
    };
    let summary = json!({
        "config": cfg,
        "symmetry": format!("{:?}", data.symmetry()),
        "test_mode": data.test_mode(),
        "mass": data.mass(),
        "nodes": data.chart.nodes().len(),
        "constraints": { "max_abs_mu": max_mu, "max_abs_j": max_j, "min_dec_margin": min_dec, "max_abs_trace_k": max_trk },
        "decay": decay,
    });
    out.write("validate.json", &to_json(&summary))?;
    out.finish()
}

pub fn surface_theta(c: &Common, radius: f64) -> CliResult<RunManifest> {
    let (cfg, data, _) = c.config()?;
    spherical(&data, "surface theta")?;
    let lmax = c.lmax.unwrap_or(8);
    let mut out = c.open("out/surface", "surface theta", json!({ "config": cfg, "radius": radius, "lmax": lmax }))?;
    let grid = SphereGrid::new(lmax);
    let geo = out.timed("geometry", || surface_geometry(&data, &grid, &Surface::round(radius)))?;
    let mut csv = Csv::new(&["lat", "lon", "H", "trk", "theta"]);
    for (q, n) in geo.nodes.iter().enumerate() {
        let (lat, lon) = grid.lat_lon_degrees(q);
        csv.row(vec![lat.into(), lon.into(), n.mean_curvature.into(), n.trace_k_sigma.into(), n.expansion().into()]);
    }
    out.write("theta.csv", &csv.into_string())?;
    let th = geo.expansion();
    let summary = json!({
        "radius": radius,
        "lmax": lmax,
        "theta_mean": mean(&th),
        "theta_oscillation": oscillation(&th),
        "theta_closed_form": data.sphere_expansion(radius)?,
        "area": geo.area,
    });
    out.write("theta.json", &to_json(&summary))?;
    out.finish()
}

pub fn stability_eig(c: &Common, radius: f64) -> CliResult<RunManifest> {
    let (cfg, data, _) = c.config()?;
    spherical(&data, "stability eig")?;
    let lmax = c.lmax.unwrap_or(8);
    let mut out = c.open("out/stability", "stability eig", json!({ "config": cfg, "radius": radius, "lmax": lmax }))?;
    let grid = SphereGrid::new(lmax);
    let op = assemble(&data, &grid, &Surface::round(radius))?;
    let e = out.timed("eigen", || principal_eig(&op))?;
    let mut csv = Csv::new(&["lat", "lon", "beta"]);
    for (q, b) in e.beta.iter().enumerate() {
        let (lat, lon) = grid.lat_lon_degrees(q);
        csv.row(vec![lat.into(), lon.into(), (*b).into()]);
    }
    out.write("beta.csv", &csv.into_string())?;
    let summary = json!({
        "lambda1": e.lambda1,
        "class": e.class.as_str(),
        "residual": e.residual,
        "imag": e.imag,
        "positive": e.positive,
        "dense": e.dense,
        "radius": radius,
        "lmax": lmax,
    });
    out.write("eig.json", &to_json(&summary))?;
    out.finish()
}

fn monitors_json(m: &horizonlab_core::jang::Monitors) -> Value {
    serde_json::to_value(crate::rundir::MonitorRecord::from(m)).expect("plain record")
}

pub fn jang_solve(c: &Common, s: f64) -> CliResult<RunManifest> {
    let (cfg, data, _) = c.config()?;
    let mut out = c.open("out/jang", "jang solve", json!({ "config": cfg, "s": s }))?;
    let pr = JangProblem::new(data, s)?;
    let n = pr.nodes().len();
    let sol = out.timed("solve", || solve(&pr, &vec![0.0; n]))?;
    out.write("solve.csv", &step_csv(&sol))?;
    let summary = json!({
        "config": cfg,
        "s": s,
        "converged": sol.converged,
        "residual": sol.residual,
        "newton_iters": sol.newton_iters,
        "inner_bc": pr.inner.to_string(),
        "outer_bc": pr.outer.to_string(),
        "monitors": monitors_json(&sol.monitors),
    });
    out.write("solve.json", &to_json(&summary))?;
    out.suite("universal_bound", !sol.monitors.bound_violated);
    out.finish()
}

pub fn jang_continue(c: &Common, schedule: &str) -> CliResult<RunManifest> {
    // parse before anything touches the disk
    let sched: Schedule = schedule.parse()?;
    let (cfg, data, input) = c.config()?;
    let mut out = c.open("out/run", "jang continue", json!({ "config": cfg, "schedule": sched.to_string() }))?;
    if let Some(p) = input {
        out.input(&p);
    }
    let template = JangProblem::new(data, sched.values()[0])?;
    let run = out.timed("continuation", || continuation(&template, &sched))?;
    let rf = write_run(&mut out, &cfg, &template, &run)?;
    out.suite("universal_bound", rf.universal_bound_holds);
    out.suite("gap_estimate", rf.gaps_hold);
    if let Some(m) = rf.monotone {
        out.suite("monotonicity", m);
    }
    out.finish()
}

fn loaded(run_dir: &Path) -> CliResult<LoadedRun> {
    load_run(run_dir)
}

struct Limit {
    u: BlowdownLimit,
    map: ClassificationMap,
}

fn limit_of(l: &LoadedRun) -> CliResult<Limit> {
    let u = extract(&l.data, &l.run)?;
    let map = classify_nodes(&l.run, &u, &default_reference(u.nodes.len(), 16))?;
    Ok(Limit { u, map })
}

pub fn blowdown(c: &Common, run_dir: &Path) -> CliResult<RunManifest> {
    let l = loaded(run_dir)?;
    let mut out = c.open_under(run_dir, "blowdown", json!({ "run": l.file }))?;
    out.input(run_dir);
    let Limit { u, map } = out.timed("extract", || limit_of(&l))?;
    let band = map.interface_band(2);
    let lsr = levelset_residuals(&l.data, &u)?;
    let comp = companion_residual(&l.data, &u, &u.eta, Some(&band))?;
    let mut csv = Csv::new(&["r", "u", "label", "eta", "levelset_residual", "companion_residual"]);
    for i in 0..u.nodes.len() {
        csv.row(vec![
            u.nodes[i].into(),
            u.u[i].into(),
            map.labels[i].as_str().into(),
            u.eta[i].into(),
            lsr[i].into(),
            comp.pointwise[i].into(),
        ]);
    }
    out.write("blowdown.csv", &csv.into_string())?;
    let plus = u.region.iter().filter(|&&x| x > 0).count();
    let minus = u.region.iter().filter(|&&x| x < 0).count();
    let summary = json!({
        "s_used": u.s_used,
        "richardson_order": u.richardson_order,
        "fallback_nodes": u.fallback.len(),
        "lipschitz": u.lipschitz,
        "convergence_gap": u.convergence_gap,
        "mu1": u.mu1,
        "factor": u.factor,
        "threshold": u.threshold,
        "blowup_plus": plus,
        "blowup_minus": minus,
        "max_abs_outside": u.max_abs_outside(),
        "sign_partition": u.sign_partition_holds(1e-6),
        "bound_holds": u.u.iter().all(|v| v.abs() <= u.mu1 + 1e-6),
        "sensitivity": u.sensitivity.iter().map(|s| json!({"factor": s.factor, "plus": s.plus, "minus": s.minus})).collect::<Vec<_>>(),
        "companion_interior_max": comp.interior_max,
        "levelset_defined": lsr.iter().filter(|x| x.is_some()).count(),
        "domains": ranges(&u, &map.domains),
        "bands": ranges(&u, &map.bands),
        "unresolved_fraction": map.unresolved_fraction,
    });
    out.write("blowdown.json", &to_json(&summary))?;
    out.suite("sign_partition", u.sign_partition_holds(1e-6));
    out.finish()
}

fn ranges(u: &BlowdownLimit, r: &[(usize, usize)]) -> Vec<[f64; 2]> {
    r.iter().map(|&(a, b)| [u.nodes[a], u.nodes[b]]).collect()
}

pub fn classify(c: &Common, run_dir: &Path) -> CliResult<RunManifest> {
    let l = loaded(run_dir)?;
    let mut out = c.open_under(run_dir, "classify", json!({ "run": l.file }))?;
    out.input(run_dir);
    let Limit { u, map } = out.timed("classify", || limit_of(&l))?;
    let mut csv = Csv::new(&["r", "label", "component", "growth", "eta"]);
    for i in 0..u.nodes.len() {
        let id = map.labels[i].id().map_or(Cell::Int(-1), |k| Cell::Int(k as i64));
        csv.row(vec![
            u.nodes[i].into(),
            map.labels[i].as_str().into(),
            id,
            map.growth[i].into(),
            map.eta[i].into(),
        ]);
    }
    out.write("classification.csv", &csv.into_string())?;
    let summary = json!({
        "domains": ranges(&u, &map.domains),
        "bands": ranges(&u, &map.bands),
        "unresolved_fraction": map.unresolved_fraction,
        "levelset_pairs_checked": map.monitor.pairs_checked,
        "levelset_pairs_increasing": map.monitor.pairs_increasing,
    });
    out.write("classification.json", &to_json(&summary))?;
    out.finish()
}

fn segment_json(s: &horizonlab_core::structure::Segment) -> Value {
    let mut v = json!({
        "kind": s.kind.as_str(),
        "start": s.start,
        "end": s.end,
        "r_start": s.r_start,
        "r_end": s.r_end,
        "thickness": s.thickness,
    });
    match s.kind {
        SegmentKind::MaximalDomain { theta, oscillation, min_grad, critical_point } => {
            v["theta"] = json!(theta);
            v["oscillation"] = json!(oscillation);
            v["min_grad"] = json!(min_grad);
            v["critical_point"] = json!(critical_point);
        }
        SegmentKind::FoliationBand { tau_range, monotone, min_slope } => {
            v["tau_range"] = json!([tau_range.0, tau_range.1]);
            v["monotone"] = json!(monotone);
            v["min_slope"] = json!(min_slope);
        }
        SegmentKind::Unresolved => {}
    }
    v
}

fn report_json(r: &StructureReport, l: &LoadedRun, u: &BlowdownLimit) -> Value {
    let balance = balance_check(r, u, &u.eta, &l.data)
        .map(|b| json!({ "flux": b.flux, "bulk": b.bulk, "residual": b.residual, "relative": b.relative, "eta_normal": b.eta_normal }))
        .unwrap_or_else(|e| json!({ "error": e.to_string() }));
    let iso = isoperimetric_check(r, &l.data, u, isoperimetric_constant())
        .map(|i| {
            json!({
                "volume": i.volume, "area": i.area, "k_norm": i.k_norm, "constant": i.constant,
                "volume_bound": i.volume_bound, "area_bound": i.area_bound,
                "volume_holds": i.volume_holds, "area_holds": i.area_holds, "applicable": i.applicable,
            })
        })
        .unwrap_or_else(|e| json!({ "error": e.to_string() }));
    json!({
        "region_id": r.region_id,
        "node_count": r.node_count,
        "tiled": r.tiled,
        "unresolved_fraction": r.unresolved_fraction,
        "low_confidence": r.low_confidence,
        "max_abs_u": r.max_abs_u,
        "max_on_domain": r.max_on_domain,
        "interface_constant": r.interface_constant,
        "assumption": r.assumption,
        "segments": r.segments.iter().map(segment_json).collect::<Vec<_>>(),
        "interfaces": r.interfaces.iter().map(|i| json!({
            "radius": i.radius, "theta": i.theta, "u": i.u, "deviation": i.deviation,
            "lambda1": i.lambda1, "region_boundary": i.region_boundary,
        })).collect::<Vec<_>>(),
        "balance": balance,
        "isoperimetric": iso,
    })
}

pub fn structure(c: &Common, run_dir: &Path) -> CliResult<RunManifest> {
    let l = loaded(run_dir)?;
    let mut out = c.open_under(run_dir, "structure", json!({ "run": l.file }))?;
    out.input(run_dir);
    let Limit { u, map } = out.timed("classify", || limit_of(&l))?;
    let reports = out.timed("partition", || partition(&u, &map, &l.data))?;
    let mut csv = Csv::new(&["region", "kind", "start", "end", "r_start", "r_end", "thickness", "theta", "tau_min", "tau_max"]);
    for r in &reports {
        for s in &r.segments {
            let (theta, lo, hi) = match s.kind {
                SegmentKind::MaximalDomain { theta, .. } => (Some(theta), None, None),
                SegmentKind::FoliationBand { tau_range, .. } => (None, Some(tau_range.0), Some(tau_range.1)),
                SegmentKind::Unresolved => (None, None, None),
            };
            csv.row(vec![
                r.region_id.into(),
                s.kind.as_str().into(),
                s.start.into(),
                s.end.into(),
                s.r_start.into(),
                s.r_end.into(),
                s.thickness.into(),
                theta.into(),
                lo.into(),
                hi.into(),
            ]);
        }
    }
    out.write("segments.csv", &csv.into_string())?;
    let all: Vec<Value> = reports.iter().map(|r| report_json(r, &l, &u)).collect();
    out.write("structure.json", &to_json(&json!({ "reports": all })))?;
    out.suite("tiled", reports.iter().all(|r| r.tiled));
    out.finish()
}

pub fn foliate(c: &Common, seed_radius: f64, direction: f64, cap: f64, full_grid: bool) -> CliResult<RunManifest> {
    let (cfg, data, _) = c.config()?;
    spherical(&data, "foliate")?;
    let lmax = c.lmax.unwrap_or(4);
    let settings = json!({ "config": cfg, "seed_radius": seed_radius, "direction": direction, "cap": cap, "lmax": lmax, "full_grid": full_grid });
    let mut out = c.open("out/foliation", "foliate", settings)?;
    let grid = if full_grid { SphereGrid::new(lmax) } else { SphereGrid::axisymmetric(lmax) };
    let opts = FoliationOptions {
        tau_cap: cap,
        ..Default::default()
    };
    let branch = out.timed("trace", || trace(&data, &grid, Surface::round(seed_radius), direction, &opts))?;
    let mut csv = Csv::new(&["tau", "r_mean", "lambda1", "psi_min", "psi_max", "sup_h2"]);
    for (k, s) in branch.sheets.iter().enumerate() {
        csv.row(vec![s.tau.into(), s.r_mean.into(), s.lambda1.into(), s.psi_min.into(), s.psi_max.into(), s.sup_h2.into()]);
        let radius: Vec<f64> = embedding(&grid, &s.surface, &data)?
            .iter()
            .map(|j| (j.x[0] * j.x[0] + j.x[1] * j.x[1] + j.x[2] * j.x[2]).sqrt())
            .collect();
        let coeffs = to_coefficients(&grid, &radius);
        let mut dump = Csv::new(&["l", "m", "radius_coefficient"]);
        for (b, &(l, m)) in grid.basis().iter().enumerate() {
            dump.row(vec![l.into(), m.into(), coeffs[b].into()]);
        }
        out.write(&format!("sheets/sheet_{k:03}.csv"), &dump.into_string())?;
    }
    out.write("foliation.csv", &csv.into_string())?;
    let velocity = velocity_consistency(&data, &branch)
        .map(|v| json!({ "max_deviation": v.max_deviation, "max_l_one_deviation": v.max_l_one_deviation }))
        .unwrap_or_else(|e| json!({ "error": e.to_string() }));
    let summary = json!({
        "termination": branch.termination.as_str(),
        "sheets": branch.sheets.len(),
        "tau_first": branch.sheets.first().map(|s| s.tau),
        "tau_last": branch.sheets.last().map(|s| s.tau),
        "tau_monotone": branch.tau_monotone(),
        "psi_sign_definite": branch.psi_sign_definite(),
        "velocity": velocity,
    });
    out.write("foliation.json", &to_json(&summary))?;
    out.suite("tau_monotone", branch.tau_monotone());
    out.finish()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeSpec {
    l: usize,
    m: i64,
    amplitude: f64,
    #[serde(default)]
    wavenumber: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PathSpec {
    Product,
    FlatBall,
    Modes { modes: Vec<ModeSpec> },
    Cap {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        modes: Vec<(usize, i64, f64)>,
    },
    /// Cap over the round sphere of radius `radius` in a catalog data set.
    Horizon { data: Config, radius: f64 },
}

/// `gluing-check --spec` input.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GluingSpec {
    path: PathSpec,
    interval: Option<(f64, f64)>,
    lmax: Option<usize>,
    axisymmetric: Option<bool>,
    n_s: Option<usize>,
    check_ends: Option<bool>,
}

impl GluingSpec {
    fn to_cylinder(&self) -> CliResult<CylinderSpec> {
        let mut spec = match &self.path {
            PathSpec::Product => CylinderSpec::product(self.interval.unwrap_or((0.0, 3.0))),
            PathSpec::FlatBall => CylinderSpec::new(ConformalPath::FlatBall, self.interval.unwrap_or((0.2, 3.0))),
            PathSpec::Modes { modes } => {
                let interval = self
                    .interval
                    .ok_or_else(|| CliError::Config("interval: required for `modes` paths".into()))?;
                let modes = modes
                    .iter()
                    .map(|m| Mode {
                        l: m.l,
                        m: m.m,
                        amplitude: m.amplitude,
                        wavenumber: m.wavenumber,
                    })
                    .collect();
                CylinderSpec::new(ConformalPath::Modes(modes), interval)
            }
            PathSpec::Cap { offset, modes } => CylinderSpec::cap(*offset, modes.clone()),
            PathSpec::Horizon { data, radius } => {
                let (_, d) = data.resolve(None)?;
                cap_from_round_horizon(&d, *radius)?
            }
        };
        if let Some(interval) = self.interval {
            if matches!(self.path, PathSpec::Cap { .. } | PathSpec::Horizon { .. }) && interval != spec.interval {
                return Err(CliError::Config("interval: caps live on (0, 3)".into()));
            }
        }
        if let Some(l) = self.lmax {
            spec.lmax = l;
        }
        if let Some(a) = self.axisymmetric {
            spec.axisymmetric = a;
        }
        if let Some(n) = self.n_s {
            spec.n_s = n;
        }
        if let Some(e) = self.check_ends {
            spec.check_ends = e;
        }
        Ok(spec)
    }
}

pub fn gluing_check(c: &Common, spec_path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(spec_path).map_err(CliError::io(spec_path))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", spec_path.display())))?;
    let gs: GluingSpec =
        serde_json::from_value(raw.clone()).map_err(|e| CliError::Config(format!("{}: {e}", spec_path.display())))?;
    let mut spec = gs.to_cylinder()?;
    if let Some(l) = c.lmax {
        spec.lmax = l;
    }
    let mut out = c.open("out/gluing", "gluing-check", json!({ "spec": raw, "lmax": spec.lmax }))?;
    out.input(spec_path);
    let cyl = out.timed("assemble", || assemble_cylinder(&spec))?;
    let summary = match out.timed("eigen", || eigen_bound_check(&cyl)) {
        Ok(rec) => {
            out.suite("bound_met", rec.bound_met);
            json!({
                "applicable": true,
                "lambda_star": rec.lambda_star,
                "lambda1": rec.lambda1,
                "bound_met": rec.bound_met,
                "lambda_star_s": rec.lambda_star_s,
                "bound": rec.bound,
                "margin": rec.margin,
                "tol": rec.tol,
                "discretization_estimate": rec.discretization_estimate,
                "boundary_defect": rec.boundary_defect,
                "max_abs_scalar_curvature": max_abs(&cyl.r_g),
            })
        }
        Err(horizonlab_core::Error::NotApplicable(reason)) => json!({
            "applicable": false,
            "reason": reason,
            "lambda_star": null,
            "lambda1": null,
            "bound_met": null,
            "boundary_defect": cyl.boundary_defect,
            "max_abs_scalar_curvature": max_abs(&cyl.r_g),
        }),
        Err(e) => return Err(e.into()),
    };
    out.write("gluing.json", &to_json(&summary))?;
    out.finish()
}

/// Full acceptance suite without `--data`, the per-data invariant suite
/// with it. Any failure makes the command fail.
pub fn verify_all(c: &Common) -> CliResult<RunManifest> {
    let threads = suite::thread_cap();
    let (records, settings) = match &c.data {
        Some(_) => {
            let (cfg, data, _) = c.config()?;
            (suite::data_suite(&data), json!({ "config": cfg }))
        }
        None => {
            let print = |r: &suite::Record| println!("{}", r.line());
            (suite::run_all(threads, &print), json!({ "suite": "acceptance" }))
        }
    };
    if c.data.is_some() {
        for r in &records {
            println!("{}", r.line());
        }
    }
    let mut out = c.open("out/verify", "verify-all", settings)?;
    let failed = records.iter().filter(|r| !r.pass).count();
    for r in &records {
        out.suite(r.id, r.pass);
    }
    // timings stay out of the data file
    let rows: Vec<Value> = records
        .iter()
        .map(|r| json!({ "id": r.id, "title": r.title, "pass": r.pass, "within_tolerance": r.within_tolerance, "detail": r.detail }))
        .collect();
    out.write("verify.json", &to_json(&json!({ "failed": failed, "criteria": rows })))?;
    let manifest = out.finish()?;
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(manifest)
}

impl Common {
    /// Output directory defaulting to `<run>/<name>`.
    fn open_under(&self, run_dir: &Path, name: &str, settings: Value) -> CliResult<OutDir> {
        OutDir::create(&self.out_or(run_dir.join(name)), name, &settings)
    }
}
