use thiserror::Error;

/// Failure modes shared by all modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rational rotation detected: Gauss-map iterate {iterate:e} fell below the floor at level {level}")]
    RationalDetected { level: usize, iterate: f64 },
    #[error("depth exhausted: {n} needs more continued-fraction levels than the {depth} available")]
    DepthExhausted { n: u64, depth: usize },
    #[error("resonant frequency: beta = {beta} is an integer to working precision")]
    ResonantFrequency { beta: f64 },
    #[error("no admissible vector found within sup-norm radius {radius}")]
    SearchExhausted { radius: u64 },
    #[error("orbit point {theta:e} within 1e-13 of the roof singularity")]
    SingularityOverflow { theta: f64 },
    #[error("matrix power exponent {exponent} exceeds the cap {cap} or overflows 128-bit arithmetic")]
    ExponentOverflow { exponent: i64, cap: i64 },
    #[error("generators are not simultaneously diagonalizable (residual {residual:e})")]
    NotSimultaneouslyDiagonalizable { residual: f64 },
    #[error("observable is not fiber-mean-zero")]
    NotFiberMeanZero,
    #[error("no lag passed the 3-sigma noise filter")]
    AllLagsBelowNoise,
    #[error("real-valued cocycle paired with a discrete fiber while rounding is disabled")]
    RoundingPolicyViolation,
    #[error("cocycle is not mean zero (mean {mean:?})")]
    NotZeroMean { mean: Vec<f64> },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
