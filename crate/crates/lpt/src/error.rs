use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, LptError>;

#[derive(Debug, Clone, Error)]
pub enum LptError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter regime violated: {0}")]
    RegimeViolation(String),

    #[error("integration failed at x = {x}: {reason}")]
    IntegrationFailure { x: f64, reason: String },

    #[error("no root found after {iterations} iterations (last iterate {last})")]
    NoRoot { last: Complex64, iterations: usize },

    #[error("root {omega} rejected: Im ω must be negative for a quasinormal mode")]
    RejectedRoot { omega: Complex64 },

    #[error("x = {x} is too close for the Born expansion (|V| = {v:.3e} vs |α₁ − 2iω| = {gap:.3e})")]
    TailRegionTooClose { x: f64, v: f64, gap: f64 },

    #[error("resonant denominator at k = {k}: |αk − 2iω| = {gap:.3e}")]
    ResonantDenominator { k: usize, gap: f64 },

    #[error("pole of the tail log-derivative near x = {x}")]
    PoleInTail { x: f64 },

    #[error("profile is not an outgoing solution (incoming admixture {fraction:.3e} on the {side} side)")]
    NotConverged { side: &'static str, fraction: f64 },

    #[error("{digits_lost:.1} digits lost to cancellation; enable asymptotic subtraction")]
    PrecisionExhausted { digits_lost: f64 },

    #[error("generalized norm {value} is degenerate")]
    DegenerateNorm { value: Complex64 },

    #[error("order-{n} shift inconsistent with the right boundary (relative mismatch {mismatch:.3e})")]
    InconsistentShift { n: usize, mismatch: f64 },

    #[error("sample grid mismatch: expected {expected} values, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("missing derivative of order {order}")]
    MissingDerivative { order: usize },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("integrand grows along the ray at θ = {theta} (u = {u})")]
    BadAngle { theta: f64, u: f64 },

    #[error("amplitude {given} inconsistent with profile tail amplitude {found}")]
    BadAmplitude { given: Complex64, found: Complex64 },

    #[error("gamma function pole at z = {0}")]
    GammaPole(i64),
}
