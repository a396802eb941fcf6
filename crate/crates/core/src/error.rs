use thiserror::Error;

/// Errors raised by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("expected a {expected} frame Hamiltonian, got {found}")]
    WrongFrame {
        expected: &'static str,
        found: &'static str,
    },

    #[error("step-size underflow on [{t_start}, {t_end}] µs after {substeps} substeps (error estimate {error:.3e})")]
    StepUnderflow {
        t_start: f64,
        t_end: f64,
        substeps: usize,
        error: f64,
    },

    #[error("finite-difference QFI breakdown: state-derivative form {derivative:.6e} vs fidelity form {fidelity:.6e}")]
    DerivativeBreakdown { derivative: f64, fidelity: f64 },

    #[error("phase unwrapping ambiguous between grid points {index} and {next}: jump {jump:.3} rad")]
    PhaseUnwrap { index: usize, next: usize, jump: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("fit did not converge after {iterations} iterations (residual {residual:.3e})")]
    FitNonConvergence { iterations: usize, residual: f64 },

    #[error("search interval does not bracket the target: {0}")]
    NotBracketed(String),

    #[error("no shot records supplied")]
    NoShots,
}

pub type Result<T> = std::result::Result<T, Error>;
