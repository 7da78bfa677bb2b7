//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong across the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A point coincides with a centre within the collision radius.
    CollisionPoint { center: usize, distance: f64 },
    /// A loop sample leaves the Hill region `{V + h > 0}`.
    OutsideHillRegion { sample: usize, v_plus_h: f64 },
    /// Two consecutive loop samples subtend too large an angle at the centre
    /// for the winding number to be read off reliably; refine the grid.
    AmbiguousWinding { segment: usize, angle: f64 },
    /// A loop sample lies on a cut ray; perturb or refine.
    SampleOnCut { sample: usize, ray: usize },
    /// A segment crosses two cut rays at numerically indistinguishable
    /// parameters, so the crossing order is not certified.
    AmbiguousCrossing { segment: usize },
    /// Radial dilation about a centre is not defined (zero distance) or is
    /// not an outward push (`k <= 1`).
    InvalidDilation { k: f64 },
    /// A descent step would change the homotopy word and step halving
    /// underflowed before an admissible step was found.
    ClassEscape { iteration: usize },
    /// The optimizer exhausted its iteration budget.
    NotConverged { iterations: usize, gradient_norm: f64 },
    /// The prescribed energy violates `h > 0`.
    InvalidEnergy { h: f64 },
    /// The exponent violates the strong-force condition `alpha > 1`.
    InvalidExponent { alpha: f64 },
    /// No admissible seed loop could be built for the requested word/margin.
    SeedConstructionFailed(String),
    /// A loop with zero kinetic integral cannot be reparameterized.
    DegenerateLoop,
    /// The time change of variables is not strictly increasing.
    NonMonotoneTime { index: usize },
    /// A trajectory node violates the prescribed-energy law.
    EnergyLawViolated { index: usize, residual: f64 },
    /// `|v| >= c` passed where a subluminal velocity is required.
    SuperluminalInput { speed: f64 },
    /// No circular orbit exists at the requested energy.
    NoCircularOrbit { energy: f64, threshold: f64 },
    /// A root bracket could not be established (profile anomaly).
    BracketFailure(&'static str),
    /// No root bracket for the radius equation at this light speed.
    RootNotBracketed { light_speed: f64 },
    /// Invalid configuration or input data.
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::CollisionPoint { center, distance } => write!(
                f,
                "point collides with centre {center} (distance {distance:.3e})"
            ),
            Error::OutsideHillRegion { sample, v_plus_h } => write!(
                f,
                "sample {sample} outside the Hill region (V + h = {v_plus_h:.3e} <= 0)"
            ),
            Error::AmbiguousWinding { segment, angle } => write!(
                f,
                "segment {segment} subtends {angle:.3} rad at the centre; refine the grid"
            ),
            Error::SampleOnCut { sample, ray } => {
                write!(f, "sample {sample} lies on cut ray {ray}")
            }
            Error::AmbiguousCrossing { segment } => {
                write!(f, "segment {segment} crosses two rays at ambiguous order")
            }
            Error::InvalidDilation { k } => {
                write!(f, "push-off factor k = {k:.3e} is not an outward dilation")
            }
            Error::ClassEscape { iteration } => write!(
                f,
                "homotopy class could not be preserved at iteration {iteration}"
            ),
            Error::NotConverged {
                iterations,
                gradient_norm,
            } => write!(
                f,
                "not converged after {iterations} iterations (gradient norm {gradient_norm:.3e})"
            ),
            Error::InvalidEnergy { h } => write!(f, "energy parameter h = {h} must be > 0"),
            Error::InvalidExponent { alpha } => write!(
                f,
                "exponent alpha = {alpha} violates the strong-force condition alpha > 1"
            ),
            Error::SeedConstructionFailed(why) => write!(f, "seed construction failed: {why}"),
            Error::DegenerateLoop => write!(f, "loop has zero kinetic integral"),
            Error::NonMonotoneTime { index } => {
                write!(f, "time change of variables not increasing at node {index}")
            }
            Error::EnergyLawViolated { index, residual } => write!(
                f,
                "energy law violated at node {index} (residual {residual:.3e})"
            ),
            Error::SuperluminalInput { speed } => {
                write!(f, "speed {speed:.6e} is not strictly below c")
            }
            Error::NoCircularOrbit { energy, threshold } => write!(
                f,
                "no circular orbit at energy {energy:.6e} (threshold {threshold:.6e})"
            ),
            Error::BracketFailure(what) => write!(f, "root bracketing failed: {what}"),
            Error::RootNotBracketed { light_speed } => {
                write!(f, "radius equation has no root at c = {light_speed:.6e}")
            }
            Error::InvalidConfig(why) => write!(f, "invalid configuration: {why}"),
        }
    }
}

impl core::error::Error for Error {}
