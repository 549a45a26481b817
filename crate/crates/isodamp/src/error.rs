//! Error type shared across the toolbox.

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("denominator evaluates to (near) zero at omega = {omega} rad/s")]
    SingularFrequency { omega: f64 },

    #[error("1 + G(j{omega}) is (near) zero: closed loop singular at this frequency")]
    ClosedLoopSingularity { omega: f64 },

    #[error("transfer function is improper (numerator degree exceeds denominator degree)")]
    ImproperSystem,

    #[error("transfer function carries a delay of {delay} s; rationalize it (Pade) before state-space conversion")]
    DelayNotRationalized { delay: f64 },

    #[error("simulation diverged (non-finite value) at sample index {index}")]
    Divergence { index: usize },

    #[error("DC gain is 0/0; cancel common factors (minreal) first")]
    IndeterminateDcGain,

    #[error("regressor is rank deficient (condition number {condition:.3e}); data does not identify the model")]
    Unidentifiable { condition: f64 },

    #[error("discrete pole at z = {pole} lies on the non-positive real axis; the ZOH inverse has no principal logarithm — refit at different orders")]
    LogarithmBranch { pole: f64 },

    #[error("ARX structure (n={n}, m={m}) has no proper continuous equivalent after delay extraction; refit with m <= n + 1")]
    UnsupportedArxStructure { n: usize, m: usize },

    #[error("system is unstable (pole with real part {max_pole_re:.4}); operation requires a stable model")]
    Instability { max_pole_re: f64 },

    #[error("reduction failed to converge; best objective so far {best_objective:.3e}")]
    ReductionFailed { best_objective: f64 },

    #[error("LQR spec infeasible: required state weights are negative; feasible omega_d >= {omega_min:.6}")]
    SpecInfeasible { omega_min: f64 },

    #[error("static gain of the loop is zero; Bode-integral slope undefined")]
    InvalidStaticGain,

    #[error("shaper design infeasible: binding constraint is {binding}")]
    DesignInfeasible { binding: &'static str },

    #[error("shaper realization misses the exact fractional phase by {worst_deviation_deg:.2} deg on the check band (allowed {allowed_deg:.2})")]
    RealizationAccuracy {
        worst_deviation_deg: f64,
        allowed_deg: f64,
    },

    #[error("open loop has no gain crossover on the analysis grid")]
    NoCrossover,

    #[error("unknown fixture '{name}'; available: {available}")]
    MissingFixture { name: String, available: String },

    #[error("no fixture for initial power {power_pct}% and gain interpolation is disabled")]
    UnknownOperatingPoint { power_pct: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
