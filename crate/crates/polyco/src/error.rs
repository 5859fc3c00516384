use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("degree overflow: wedge of degrees {0} and {1} exceeds the degree cap 3")]
    DegreeOverflow(usize, usize),
    #[error("value dimension mismatch: {0} vs {1}")]
    ValueDimMismatch(usize, usize),
    #[error("interior product requires degree >= 1")]
    DegreeZeroContraction,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("kernel rank {found} at sample {sample}, expected {expected}")]
    KernelRank { found: usize, expected: usize, sample: usize },
    #[error("inconsistent defining system at sample point: residual {0:.3e}")]
    InconsistentSystem(f64),
    #[error("cocycle not constant across samples: deviation {0:.3e}")]
    CocycleNotConstant(f64),
    #[error("chart is not tagged with Darboux coordinates")]
    NotDarboux,
    #[error("CFL violation: dt = {dt:.3e} exceeds dx = {dx:.3e}")]
    CflViolation { dt: f64, dx: f64 },
    #[error("unsupported boundary condition: {0}")]
    UnsupportedBoundary(String),
    #[error("radial domain must exclude r = 0 (got [{0}, {1}])")]
    RadialDomain(f64, f64),
    #[error("unknown instance '{0}'")]
    UnknownInstance(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
