use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no inclusion")]
    NoInclusion,

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("disjointness violated: components {0} and {1} intersect or touch")]
    Disjointness(usize, usize),

    #[error("inclusion {component} is not strictly inside the domain (clearance {clearance:.3e})")]
    Clearance { component: usize, clearance: f64 },

    #[error("mesh generation failed after {iterations} iterations: {reason}")]
    MeshGeneration { reason: String, iterations: usize },

    #[error("degenerate triangle {0} (non-positive area)")]
    DegenerateTriangle(usize),

    #[error("point is {distance:.3e} away from the boundary (allowed {allowed:.3e})")]
    FarFromBoundary { distance: f64, allowed: f64 },

    #[error("node {0} is not a boundary node")]
    NotBoundaryNode(usize),

    #[error("boundary data not zero-mean: |∫g| = {mean:.3e} exceeds {allowed:.3e}")]
    NonZeroMean { mean: f64, allowed: f64 },

    #[error("conjugate gradient did not converge in {iterations} iterations (last residual {:.3e})", history.last().copied().unwrap_or(f64::NAN))]
    NotConverged { iterations: usize, history: Vec<f64> },

    #[error("rescale t or τ: exponent {exponent:.1} exceeds the overflow guard {limit:.0}")]
    Overflow { exponent: f64, limit: f64 },

    #[error("signal below noise floor")]
    BelowNoiseFloor,

    #[error("no bracket: classifier gives {low} at t = {t_low} and {high} at t = {t_high}")]
    NoBracket {
        t_low: f64,
        t_high: f64,
        low: &'static str,
        high: &'static str,
    },

    #[error("half-plane intersection is {kind}; offending directions (angles): {angles:?}")]
    Hull { kind: &'static str, angles: Vec<f64> },

    #[error("singular point: x coincides with a dipole pole")]
    Singular,

    #[error("sweep failed: {failed} of {total} samples failed, first error: {first}")]
    SweepFailed {
        failed: usize,
        total: usize,
        first: String,
    },
}
