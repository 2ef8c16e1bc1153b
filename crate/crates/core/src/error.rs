use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate metric at {point:?}: smallest eigenvalue {min_eigenvalue:e}")]
    DegenerateMetric { point: [f64; 3], min_eigenvalue: f64 },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("unknown data set `{0}`")]
    UnknownDataSet(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("parameter `{name}` = {value} out of range: {reason}")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        reason: &'static str,
    },

    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    #[error("surface leaves the chart (radius {radius} outside [{r_min}, {r_max}])")]
    SurfaceExitsChart { radius: f64, r_min: f64, r_max: f64 },

    #[error("Fermi offset {offset:e} exceeds focal-distance estimate {focal:e}")]
    FocalDistance { offset: f64, focal: f64 },

    #[error("surface is not a constant-expansion surface (oscillation {oscillation:e})")]
    NotCes { oscillation: f64 },

    #[error("eigen-iteration did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    #[error("principal eigenvalue is complex: {re} + {im}i")]
    ComplexPrincipal { re: f64, im: f64 },

    #[error("NaN encountered in {0}")]
    NotFinite(&'static str),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("Newton iteration diverged at s = {s}: line search exhausted (residual {residual:e})")]
    NewtonDivergence { s: f64, residual: f64 },

    #[error("Newton iteration hit the iteration cap at s = {s} (residual {residual:e})")]
    NewtonMaxIterations { s: f64, residual: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("too few converged steps: {0}")]
    TooFewSteps(String),

    #[error("foliation step failed at tau = {tau}: {reason}")]
    FoliationStep { tau: f64, reason: String },

    #[error("boundary condition violated: {0}")]
    BoundaryCondition(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error("not implemented: {0}")]
    NotImplemented(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
