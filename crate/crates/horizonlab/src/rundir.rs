//! Continuation run directories: `run.json` plus one CSV per schedule step.
//!
//! Step files store `f` at 17 significant digits, which round-trips, so a
//! reloaded run is bit-identical to the solved one. The signed gradient is
//! recomputed from `f` by the same discretisation; Newton metadata and
//! monitors come back from `run.json`.

use std::path::Path;

use horizonlab_core::initial_data::InitialDataSet;
use horizonlab_core::jang::{
    gap_between, monotonicity_check, ContinuationRun, Discretization, GapReport, InnerBc, JangProblem,
    JangSolveResult, Monitors, OuterBc, Schedule, WarmStart, GAP_TOLERANCE,
};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::format::{Cell, Csv, Table};
use crate::manifest::{OutDir, RunManifest, MANIFEST};

pub const RUN_FILE: &str = "run.json";
pub const STEP_HEADER: [&str; 4] = ["r", "f", "u_s", "abs_grad_f"];

pub fn step_file(i: usize) -> String {
    format!("steps/step_{i:03}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub max_u: f64,
    pub mu1: f64,
    pub bound_violated: bool,
    pub max_s_grad: f64,
    pub max_grad: f64,
    pub harnack: f64,
    pub sup_h2: f64,
    pub blowup_saturated: bool,
}

impl From<&Monitors> for MonitorRecord {
    fn from(m: &Monitors) -> Self {
        Self {
            max_u: m.max_u,
            mu1: m.mu1,
            bound_violated: m.bound_violated,
            max_s_grad: m.max_s_grad,
            max_grad: m.max_grad,
            harnack: m.harnack,
            sup_h2: m.sup_h2,
            blowup_saturated: m.blowup_saturated,
        }
    }
}

impl From<&MonitorRecord> for Monitors {
    fn from(m: &MonitorRecord) -> Self {
        Self {
            max_u: m.max_u,
            mu1: m.mu1,
            bound_violated: m.bound_violated,
            max_s_grad: m.max_s_grad,
            max_grad: m.max_grad,
            harnack: m.harnack,
            sup_h2: m.sup_h2,
            blowup_saturated: m.blowup_saturated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub s: f64,
    pub file: String,
    pub converged: bool,
    pub residual: f64,
    pub newton_iters: usize,
    pub warm_start: String,
    pub monitors: MonitorRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub s: f64,
    pub t: f64,
    pub upper: Option<(f64, f64)>,
    pub lower: Option<(f64, f64)>,
    pub holds: bool,
}

impl From<&GapReport> for GapRecord {
    fn from(g: &GapReport) -> Self {
        use horizonlab_core::jang::CaseCheck;
        let pair = |c: &CaseCheck| match *c {
            CaseCheck::Checked { lhs, bound, .. } => Some((lhs, bound)),
            CaseCheck::NotApplicable => None,
        };
        Self {
            s: g.s,
            t: g.t,
            upper: pair(&g.upper),
            lower: pair(&g.lower),
            holds: g.holds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub config: Config,
    /// Exact schedule as `list:...`.
    pub schedule: String,
    pub inner_bc: String,
    pub outer_bc: String,
    pub steps: Vec<StepRecord>,
    pub gaps: Vec<GapRecord>,
    pub gaps_hold: bool,
    pub universal_bound_holds: bool,
    pub monotone: Option<bool>,
    pub max_excess: Option<f64>,
}

pub fn step_csv(st: &JangSolveResult) -> String {
    let mut csv = Csv::new(&STEP_HEADER);
    let u = st.u();
    for i in 0..st.nodes.len() {
        csv.row(vec![
            Cell::Num(st.nodes[i]),
            Cell::Num(st.f[i]),
            Cell::Num(u[i]),
            Cell::Num(st.grad[i].abs()),
        ]);
    }
    csv.into_string()
}

pub fn run_file(config: &Config, problem: &JangProblem, run: &ContinuationRun) -> RunFile {
    let steps = run
        .steps
        .iter()
        .enumerate()
        .map(|(i, st)| StepRecord {
            index: i,
            s: st.s,
            file: step_file(i),
            converged: st.converged,
            residual: st.residual,
            newton_iters: st.newton_iters,
            warm_start: run.warm_starts[i].as_str().to_string(),
            monitors: (&st.monitors).into(),
        })
        .collect();
    let gaps: Vec<GapRecord> = run.gaps.iter().map(GapRecord::from).collect();
    RunFile {
        config: config.clone(),
        schedule: run.schedule.to_string(),
        inner_bc: problem.inner.to_string(),
        outer_bc: problem.outer.to_string(),
        steps,
        gaps_hold: gaps.iter().all(|g| g.holds),
        gaps,
        universal_bound_holds: run.steps.iter().all(|s| !s.monitors.bound_violated),
        monotone: run.monotonicity.as_ref().map(|m| m.holds),
        max_excess: run.monotonicity.as_ref().map(|m| m.max_excess),
    }
}

/// Writes `run.json` and the step CSVs into `out`.
pub fn write_run(out: &mut OutDir, config: &Config, problem: &JangProblem, run: &ContinuationRun) -> CliResult<RunFile> {
    for (i, st) in run.steps.iter().enumerate() {
        out.write(&step_file(i), &step_csv(st))?;
    }
    let rf = run_file(config, problem, run);
    out.write(RUN_FILE, &crate::format::to_json(&rf))?;
    Ok(rf)
}

pub struct LoadedRun {
    pub file: RunFile,
    pub data: InitialDataSet,
    pub run: ContinuationRun,
}

fn warm(s: &str) -> WarmStart {
    match s {
        "previous" => WarmStart::Previous,
        "rescaled" => WarmStart::Rescaled,
        _ => WarmStart::Cold,
    }
}

pub fn load_run(dir: &Path) -> CliResult<LoadedRun> {
    let path = dir.join(RUN_FILE);
    if !path.is_file() {
        return Err(CliError::MissingRun(dir.to_path_buf()));
    }
    let bad = |reason: String| CliError::Format {
        path: path.clone(),
        reason,
    };
    if dir.join(MANIFEST).is_file() {
        let changed = RunManifest::read(dir)?.verify(dir)?;
        if !changed.is_empty() {
            return Err(bad(format!("checksum mismatch for {}", changed.join(", "))));
        }
    }
    let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let file: RunFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let (_, data) = file.config.resolve(None)?;
    let schedule: Schedule = file.schedule.parse()?;
    let inner: InnerBc = file.inner_bc.parse()?;
    let outer: OuterBc = file.outer_bc.parse()?;
    if schedule.len() != file.steps.len() {
        return Err(bad(format!("{} steps for a schedule of {}", file.steps.len(), schedule.len())));
    }
    let disc = Discretization::new(&data)?;
    let mut steps = Vec::with_capacity(file.steps.len());
    for (rec, &s) in file.steps.iter().zip(schedule.values()) {
        let csv_path = dir.join(&rec.file);
        let table = Table::read(&csv_path)?;
        let r = table.column("r", &csv_path)?;
        if r != disc.nodes {
            return Err(CliError::Format {
                path: csv_path,
                reason: "nodes do not match the configured chart".into(),
            });
        }
        let f = table.column("f", &csv_path)?;
        let grad = disc.node_gradient(&f, inner, outer);
        steps.push(JangSolveResult {
            s,
            nodes: r,
            f,
            grad,
            residual: rec.residual,
            newton_iters: rec.newton_iters,
            converged: rec.converged,
            monitors: (&rec.monitors).into(),
        });
    }
    let gaps = steps.windows(2).map(|w| gap_between(&w[0], &w[1], GAP_TOLERANCE)).collect();
    let mut run = ContinuationRun {
        schedule,
        warm_starts: file.steps.iter().map(|r| warm(&r.warm_start)).collect(),
        steps,
        gaps,
        monotonicity: None,
    };
    run.monotonicity = monotonicity_check(&run).ok();
    Ok(LoadedRun { file, data, run })
}
