//! The singular N-centre potential, its gradient, and the transformed
//! potential entering the relativistic Jacobi-type metric.
//!
//! The potential is
//!
//! ```text
//!     V(x) = Σ_i κ_i / (α |x - σ_i|^α) + W(x),          α > 1, κ_i > 0,
//! ```
//!
//! and the transformed potential at energy parameter `h` is
//!
//! ```text
//!     Z_h(x) = 2 m V(x) + (V(x) + h)² / c².
//! ```
//!
//! The metric weight `Z_h + 2hm` factors as `(V+h)(V+h+2mc²)/c²`, which is
//! manifestly positive on the Hill region `{V + h > 0}` and is the form used
//! for evaluation.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is in the test graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Default exclusion radius around each centre, in problem units.
pub const DEFAULT_COLLISION_RADIUS: f64 = 1e-12;

/// Bounded smooth perturbation `W` added to the singular part.
///
/// `Constant` and `GaussianBump` satisfy `0 < W <= M` with vanishing gradient
/// at infinity; `Zero` is accepted for the single-centre model problem and
/// for plain Hamiltonian integration runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Zero,
    Constant { offset: f64 },
    GaussianBump { amplitude: f64, width: f64, offset: f64 },
}

impl Perturbation {
    pub fn value(&self, x: Vec2) -> f64 {
        match *self {
            Perturbation::Zero => 0.0,
            Perturbation::Constant { offset } => offset,
            Perturbation::GaussianBump {
                amplitude,
                width,
                offset,
            } => offset + amplitude * (-x.norm_sq() / (width * width)).exp(),
        }
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        match *self {
            Perturbation::Zero | Perturbation::Constant { .. } => Vec2::ZERO,
            Perturbation::GaussianBump {
                amplitude, width, ..
            } => {
                let w2 = width * width;
                let g = amplitude * (-x.norm_sq() / w2).exp();
                x * (-2.0 * g / w2)
            }
        }
    }

    /// Upper bound `M` with `0 <= W <= M` (derived metadata, not an input).
    pub fn upper_bound(&self) -> f64 {
        match *self {
            Perturbation::Zero => 0.0,
            Perturbation::Constant { offset } => offset,
            Perturbation::GaussianBump {
                amplitude, offset, ..
            } => offset + amplitude,
        }
    }

    /// Whether `W` is strictly positive, as the boundedness assumption on the
    /// perturbation requires. `Zero` fails this and is allowed only for the
    /// model problem and integrator runs.
    pub fn is_strictly_positive(&self) -> bool {
        !matches!(self, Perturbation::Zero)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Perturbation::Zero => Ok(()),
            Perturbation::Constant { offset } => {
                if offset > 0.0 && offset.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!(
                        "constant perturbation offset must be > 0, got {offset}"
                    )))
                }
            }
            Perturbation::GaussianBump {
                amplitude,
                width,
                offset,
            } => {
                if amplitude > 0.0 && width > 0.0 && offset > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!(
                        "gaussian perturbation requires amplitude, width, offset > 0, \
                         got ({amplitude}, {width}, {offset})"
                    )))
                }
            }
        }
    }
}

/// Energy parameter `h` above the rest energy; the relativistic energy is
/// `𝔈 = h + mc²` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLevel {
    pub h: f64,
}

impl EnergyLevel {
    pub const fn new(h: f64) -> Self {
        EnergyLevel { h }
    }

    /// Total relativistic energy `h + mc²`.
    pub fn total_energy(&self, cfg: &PotentialConfig) -> f64 {
        self.h + cfg.rest_energy()
    }
}

/// Immutable configuration of the N-centre potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    centers: Vec<Vec2>,
    strengths: Vec<f64>,
    alpha: f64,
    perturbation: Perturbation,
    mass: f64,
    light_speed: f64,
    collision_radius: f64,
}

impl PotentialConfig {
    pub fn new(
        centers: Vec<Vec2>,
        strengths: Vec<f64>,
        alpha: f64,
        perturbation: Perturbation,
        mass: f64,
        light_speed: f64,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidConfig("at least one centre required".into()));
        }
        if centers.len() != strengths.len() {
            return Err(Error::InvalidConfig(format!(
                "{} centres but {} strengths",
                centers.len(),
                strengths.len()
            )));
        }
        for (i, c) in centers.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::InvalidConfig(format!("centre {i} not finite")));
            }
            for (j, d) in centers.iter().enumerate().skip(i + 1) {
                if c.distance(*d) == 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "centres {i} and {j} coincide"
                    )));
                }
            }
        }
        for (i, &k) in strengths.iter().enumerate() {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "strength {i} must be > 0, got {k}"
                )));
            }
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidConfig(format!("mass must be > 0, got {mass}")));
        }
        if !(light_speed > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "light speed must be > 0, got {light_speed}"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be finite, got {alpha}")));
        }
        perturbation.validate()?;
        Ok(PotentialConfig {
            centers,
            strengths,
            alpha,
            perturbation,
            mass,
            light_speed,
            collision_radius: DEFAULT_COLLISION_RADIUS,
        })
    }

    /// Single centre at the origin with `W = 0` (the model problem).
    pub fn single_center(kappa: f64, alpha: f64, mass: f64, light_speed: f64) -> Result<Self> {
        PotentialConfig::new(
            alloc::vec![Vec2::ZERO],
            alloc::vec![kappa],
            alpha,
            Perturbation::Zero,
            mass,
            light_speed,
        )
    }

    /// Override the collision exclusion radius.
    pub fn with_collision_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "collision radius must be > 0, got {radius}"
            )));
        }
        self.collision_radius = radius;
        Ok(self)
    }

    pub fn centers(&self) -> &[Vec2] {
        &self.centers
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn n_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn collision_radius(&self) -> f64 {
        self.collision_radius
    }

    /// Rest energy `mc²`.
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.light_speed * self.light_speed
    }

    /// Largest distance of a centre from the origin (the `R` of the
    /// loop-space Poincaré-type bound).
    pub fn max_center_norm(&self) -> f64 {
        self.centers
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max)
    }

    /// Smallest distance between two distinct centres; `None` for N = 1.
    pub fn min_center_gap(&self) -> Option<f64> {
        let n = self.centers.len();
        if n < 2 {
            return None;
        }
        let mut gap = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                gap = gap.min(self.centers[i].distance(self.centers[j]));
            }
        }
        Some(gap)
    }

    /// Index of and distance to the nearest centre.
    pub fn nearest_center(&self, x: Vec2) -> (usize, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (i, c) in self.centers.iter().enumerate() {
            let d = x.distance(*c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    fn check_collision(&self, x: Vec2) -> Result<()> {
        let (i, d) = self.nearest_center(x);
        if d <= self.collision_radius {
            Err(Error::CollisionPoint {
                center: i,
                distance: d,
            })
        } else {
            Ok(())
        }
    }

    /// `V(x) = Σ κ_i/(α|x-σ_i|^α) + W(x)`.
    pub fn value(&self, x: Vec2) -> Result<f64> {
        self.check_collision(x)?;
        let mut v = self.perturbation.value(x);
        for (c, &k) in self.centers.iter().zip(&self.strengths) {
            v += k / (self.alpha * x.distance(*c).powf(self.alpha));
        }
        Ok(v)
    }

    /// `∇V(x) = -Σ κ_i (x-σ_i)/|x-σ_i|^(α+2) + ∇W(x)`.
    pub fn gradient(&self, x: Vec2) -> Result<Vec2> {
        self.check_collision(x)?;
        let mut g = self.perturbation.gradient(x);
        for (c, &k) in self.centers.iter().zip(&self.strengths) {
            let r = x - *c;
            g += r * (-k / r.norm().powf(self.alpha + 2.0));
        }
        Ok(g)
    }

    /// Transformed potential `Z_h(x) = 2mV(x) + (V(x)+h)²/c²`.
    pub fn z_h(&self, level: EnergyLevel, x: Vec2) -> Result<f64> {
        Ok(z_h_of_potential(
            self.value(x)?,
            level.h,
            self.mass,
            self.light_speed,
        ))
    }

    /// `∇Z_h(x) = (2/c²)(V(x) + h + mc²) ∇V(x)`.
    pub fn z_h_gradient(&self, level: EnergyLevel, x: Vec2) -> Result<Vec2> {
        let v = self.value(x)?;
        let g = self.gradient(x)?;
        let c2 = self.light_speed * self.light_speed;
        Ok(g * (2.0 / c2 * (v + level.h + self.mass * c2)))
    }

    /// Metric weight `Z_h(x) + 2hm = (V+h)(V+h+2mc²)/c²`.
    pub fn metric_weight(&self, level: EnergyLevel, x: Vec2) -> Result<f64> {
        Ok(metric_weight_of_potential(
            self.value(x)?,
            level.h,
            self.mass,
            self.light_speed,
        ))
    }

    /// Hill-region membership `V(x) + h > 0` (strict).
    pub fn in_hill_region(&self, level: EnergyLevel, x: Vec2) -> Result<bool> {
        Ok(self.value(x)? + level.h > 0.0)
    }
}

/// `Z_h` as a function of the raw potential value.
pub fn z_h_of_potential(v: f64, h: f64, mass: f64, light_speed: f64) -> f64 {
    let vh = v + h;
    2.0 * mass * v + vh * vh / (light_speed * light_speed)
}

/// `Z_h + 2hm` in the factored form `(V+h)(V+h+2mc²)/c²`.
pub fn metric_weight_of_potential(v: f64, h: f64, mass: f64, light_speed: f64) -> f64 {
    let c2 = light_speed * light_speed;
    let vh = v + h;
    vh * (vh + 2.0 * mass * c2) / c2
}
