use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("boost moves {fraction:.3e} of the weight outside the momentum lattice")]
    SupportEscape { fraction: f64 },
    #[error("states were built with different delta kernels")]
    KernelMismatch,
    #[error("kernel not resolved on the p0 lattice: {0}")]
    Resolution(String),
    #[error("Wigner representation covers the positive branch only")]
    Branch,
    #[error("time {0} is not on the lattice")]
    OffLattice(f64),
    #[error("quadrature did not reach tolerance {tol:.1e} (estimate {estimate:.3e})")]
    QuadratureFailure { tol: f64, estimate: f64 },
    #[error("propagator diverges at lightlike or zero separation")]
    Divergent,
    #[error("propagator amplitude at the lattice boundary is {0:.3e} of its peak")]
    BoundaryLeak(f64),
    #[error("proper-time quadrature aliases: {0}")]
    Aliasing(String),
    #[error("eigen solver failed: {0}")]
    SolverFailure(String),
    #[error("no sign change of m2_j(E) - m2 bracketed: {0}")]
    RootBracketFailure(String),
    #[error("input is not an eigenmode (residual {0:.3e})")]
    NotEigenmode(f64),
    #[error("non-relativistic regime violated: only {0:.4} of |a|^2 inside |p| < m/5")]
    RegimeViolation(f64),
    #[error("weight 1 + phi/c^2 is not positive (min {0:.3e})")]
    IndefiniteWeight(f64),
    #[error("boosted mode {0} is not in the mode set")]
    ModeEscape(usize),
    #[error("two-particle amplitude is not symmetric (defect {0:.3e})")]
    AsymmetricAmplitude(f64),
    #[error("mass grid misses populated lattice cells (weight {0:.3e} outside)")]
    Coverage(f64),
    /// `line` is 1-based; 0 marks an environment override or the command line.
    #[error("config error{}: {msg}", line_suffix(*line))]
    Config { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}
