//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building a system or evaluating it.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter failed validation. Names the offending field.
    #[error("invalid parameter `{field}`: {message}")]
    Validation { field: &'static str, message: String },

    /// Two resolvent poles coincide within tolerance, so the
    /// partial-fraction weights are singular.
    #[error("degenerate resolvent poles: |mu_{i} - mu_{j}| = {separation:.3e} < 1e-9")]
    DegeneratePoles { i: usize, j: usize, separation: f64 },

    /// The adaptive quadrature ran out of budget before meeting tolerance.
    #[error("quadrature failed to converge: worst error {error:.3e} after {intervals} intervals")]
    QuadratureFailure { error: f64, intervals: usize },

    /// A symplectic eigenvalue dropped below the physical floor 1/2.
    /// Always indicates a numerical-accuracy bug, never physics.
    #[error("physicality violation: nu = {nu} < 1/2 - 1e-6 at t = {t}")]
    PhysicalityViolation { nu: f64, t: f64 },

    /// Stored energy never rises above its initial value (e.g. zero coupling).
    #[error("flat energy landscape: no maximum above E_B(0) found on [0, {horizon}]")]
    FlatLandscape { horizon: f64 },

    /// Cell index outside 1..=N.
    #[error("cell index {index} out of range 1..={n_cells}")]
    IndexOutOfRange { index: usize, n_cells: usize },

    /// Bipartition does not split the couplings evenly.
    #[error("unbalanced bipartition: sum of alpha^2 over A = {sum_a}, expected {expected}")]
    UnbalancedPartition { sum_a: f64, expected: f64 },

    /// Logarithmic negativity requires an even number of cells.
    #[error("negativity requires even N, got {n_cells}")]
    OddN { n_cells: usize },

    /// Entropy production is undefined for a reservoir at T = 0.
    #[error("entropy production undefined at T = 0; report the heat flow instead")]
    ZeroTemperatureReservoir,

    /// Efficiency bounds need a positive stored energy above the zero point.
    #[error("bound undefined for kappa = {kappa} <= 0")]
    NonPositiveKappa { kappa: f64 },

    /// The thermal prefactor C(T0) = coth(1/2T0) is always >= 1.
    #[error("invalid thermal prefactor C = {c} < 1")]
    InvalidC { c: f64 },

    /// The lambda-minus and nu-PT entanglement witnesses disagree.
    #[error("inconsistent witnesses: lambda_minus = {lambda_minus} vs nu_pt = {nu_pt} (C = {c})")]
    InconsistentWitness { lambda_minus: f64, nu_pt: f64, c: f64 },

    /// The discrete-bath propagation lost energy conservation.
    #[error("stiff integration: closed-system energy drift {drift:.3e} exceeds 1e-6 relative")]
    StiffIntegration { drift: f64 },

    /// Bath discretization too coarse to reproduce the damping kernel.
    #[error("bath discretization rejected: kernel reconstruction error {error:.3e} exceeds 2%")]
    BathKernelMismatch { error: f64 },

    /// I/O while writing result files.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed run-spec or config document.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::IndexOutOfRange { .. }
            | Error::UnbalancedPartition { .. }
            | Error::OddN { .. }
            | Error::Config(_)
            | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
