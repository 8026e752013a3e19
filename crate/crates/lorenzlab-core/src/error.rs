use thiserror::Error;

/// Failure modes shared across the model, integrator and section pipelines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("point ({0:.6}, {1:.6}, {2:.6}) lies outside the linear block")]
    OutOfDomain(f64, f64, f64),

    /// The entry point sits on the stable leaf `x2 = 0` (within [`crate::LEAF_TOL`]);
    /// it converges to the singularity and never reaches an exit face.
    #[error("entry lies on the stable leaf x2 = 0; no exit time exists")]
    OnStableLeaf,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("orbit left the trapping region at ({0:.6}, {1:.6})")]
    Escape(f64, f64),

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); tolerance unreachable")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} accepted steps")]
    TooManySteps(usize),

    #[error("no section crossing found within t = {0:.6}")]
    NoCrossing(f64),

    #[error("curve tangent at node {0} violates the admissible cone")]
    TangentOutsideCone(usize),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("orbit is not periodic: return residual {0:.3e} exceeds {1:.3e}")]
    NotPeriodic(f64, f64),

    /// The orbit passed too close to the singularity for the normal bundle
    /// to stay well conditioned.
    #[error("orbit approaches the singularity: |x2| = {0:.3e} under the exclusion radius")]
    NearSingularity(f64),

    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
