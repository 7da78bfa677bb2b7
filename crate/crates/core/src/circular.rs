//! Closed-form and root-finding analysis of the single-centre model problem
//!
//! ```text
//!     d/dt ( m x' / sqrt(1 - |x'|²/c²) ) = -κ x / |x|^(α+2),    κ > 0, α > 1,
//! ```
//!
//! circular solutions, energy thresholds, effective-potential orbit
//! classification, and the non-relativistic limit `c → ∞`.
//!
//! A circular solution of radius `r` rotates at
//!
//! ```text
//!     ω² = (-κ² + κ sqrt(κ² + 4 c⁴ m² r^(2α))) / (2 m² c² r^(2α+2))
//! ```
//!
//! and carries energy `𝔈(r) = κ f(r^α)` with
//!
//! ```text
//!     f(t) = 2 m²c⁴ t / (-κ² + κ sqrt(κ² + 4 m²c⁴ t²)) - 1/(α t).
//! ```
//!
//! The raw form of `-κ² + κ sqrt(κ² + 4m²c⁴t²)` loses all digits as `t → 0`;
//! multiplying by the conjugate gives `4κ m²c⁴ t² / (sqrt(κ²+4m²c⁴t²) + κ)`,
//! which turns `f` into the cancellation-free expression
//!
//! ```text
//!     f(t) = (sqrt(κ² + 4 m²c⁴ t²) + κ) / (2κt) - 1/(αt)
//! ```
//!
//! used throughout this module. Root finding is bracketed bisection on
//! branches that are monotone by the sign analysis of the profile functions.

 
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is in the test graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::integrator::PhaseState;
use crate::vec2::Vec2;

/// Relative bracket width at which bisection stops.
const BISECT_REL_TOL: f64 = 1e-12;
/// Log-spaced scan density for sign-change detection.
const SCAN_POINTS_PER_DECADE: usize = 400;
const SCAN_R_MIN: f64 = 1e-6;
const SCAN_R_MAX: f64 = 1e6;

/// Single centre at the origin with `W ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    kappa: f64,
    alpha: f64,
    mass: f64,
    light_speed: f64,
}

/// Tabulated `r ↦ (ω(r), 𝔈(r))` over a log grid.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub rows: Vec<ProfileRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub radius: f64,
    pub omega: f64,
    pub energy: f64,
}

/// Verdict of the per-`(𝔈, L)` phase-plane analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitVerdict {
    NoBoundedOrbits,
    CircularOnly,
    AnnulusPresent,
}

/// Critical points, zeros and admissible annuli of the radial admissibility
/// function `Φ_{𝔈,L}` for one `(𝔈, L)` pair.
#[derive(Debug, Clone)]
pub struct OrbitClassification {
    pub energy: f64,
    pub angular_momentum: f64,
    /// Radii of the critical points of `Φ` (zeros of its numerator `Φ̃`).
    pub critical_radii: Vec<f64>,
    /// `Φ` evaluated at those critical radii.
    pub phi_at_critical: Vec<f64>,
    /// Zeros of `Φ` on the scan window, ascending.
    pub zeros: Vec<f64>,
    /// Bounded intervals `[r1, r2]` with `Φ > 0` strictly inside — the
    /// annuli that could confine non-circular motion.
    pub annuli: Vec<(f64, f64)>,
    pub verdict: OrbitVerdict,
}

/// One row of the non-relativistic limit table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub light_speed: f64,
    /// Circular radius at this `c`, when the radius equation has a root.
    pub radius: Option<f64>,
}

/// `r_h(c)` table plus the classical limit radius (for `α > 2`).
#[derive(Debug, Clone)]
pub struct LimitTable {
    pub rows: Vec<LimitRow>,
    /// `R_h = ((κ/h)(α-2)/(2α))^(1/α)`, defined for `α > 2`.
    pub classical_radius: Option<f64>,
    /// Whether the defined radii decrease strictly with `c`.
    pub monotone_decreasing: bool,
}

/// The circular-orbit energy profile `f(t)` (with `t = r^α`), exposed on raw
/// parameters so threshold behaviour can be probed outside the `α > 1`
/// existence range as well.
pub fn energy_profile(kappa: f64, mass: f64, light_speed: f64, alpha: f64, t: f64) -> f64 {
    let mc2 = mass * light_speed * light_speed;
    ((kappa * kappa + 4.0 * mc2 * mc2 * t * t).sqrt() + kappa) / (2.0 * kappa * t)
        - 1.0 / (alpha * t)
}

/// Threshold `η(α)`: circular solutions of energy `𝔈` exist iff `𝔈 > η(α)`.
pub fn eta(mass: f64, light_speed: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidExponent { alpha });
    }
    let mc2 = mass * light_speed * light_speed;
    Ok(if alpha < 2.0 {
        2.0 * mc2 * (alpha - 1.0).sqrt() / alpha
    } else {
        mc2
    })
}

impl ModelConfig {
    pub fn new(kappa: f64, alpha: f64, mass: f64, light_speed: f64) -> Result<Self> {
        if !(kappa > 0.0) || !(mass > 0.0) || !(light_speed > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "model requires kappa, m, c > 0, got ({kappa}, {mass}, {light_speed})"
            )));
        }
        if !(alpha > 1.0) {
            return Err(Error::InvalidExponent { alpha });
        }
        Ok(ModelConfig {
            kappa,
            alpha,
            mass,
            light_speed,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn rest_energy(&self) -> f64 {
        self.mass * self.light_speed * self.light_speed
    }

    pub fn with_light_speed(&self, c: f64) -> Result<ModelConfig> {
        ModelConfig::new(self.kappa, self.alpha, self.mass, c)
    }

    /// The matching N-centre configuration (single centre at the origin).
    pub fn potential(&self) -> crate::potentials::PotentialConfig {
        crate::potentials::PotentialConfig::single_center(
            self.kappa,
            self.alpha,
            self.mass,
            self.light_speed,
        )
        .expect("validated model parameters")
    }

    /// `η(α)` for this model's mass and light speed.
    pub fn energy_threshold(&self) -> f64 {
        eta(self.mass, self.light_speed, self.alpha).expect("alpha > 1 by construction")
    }

    /// Angular velocity of the circular solution of radius `r > 0`.
    pub fn omega_from_radius(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0);
        let c = self.light_speed;
        let a = 4.0 * self.mass * self.mass * c.powi(4) * r.powf(2.0 * self.alpha);
        let root = (self.kappa * self.kappa + a).sqrt();
        (2.0 * self.kappa * c * c / (r * r * (root + self.kappa))).sqrt()
    }

    /// `𝔈(r) = κ f(r^α)`.
    pub fn energy_of_radius(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0);
        self.kappa
            * energy_profile(
                self.kappa,
                self.mass,
                self.light_speed,
                self.alpha,
                r.powf(self.alpha),
            )
    }

    /// Lorentz factor of the circular solution of radius `r`, computed from
    /// the conjugate form `γ = (sqrt(κ² + 4m²c⁴r^(2α)) + κ)/(2mc²r^α)` which
    /// stays accurate in the ultra-relativistic small-`r` regime.
    pub fn lorentz_factor(&self, r: f64) -> f64 {
        let mc2 = self.mass * self.light_speed * self.light_speed;
        let t = r.powf(self.alpha);
        ((self.kappa * self.kappa + 4.0 * mc2 * mc2 * t * t).sqrt() + self.kappa) / (2.0 * mc2 * t)
    }

    /// Phase-space state of the circular solution at `(r, 0)` moving
    /// counter-clockwise, with the momentum built directly from the stable
    /// Lorentz-factor expression.
    pub fn circular_state(&self, r: f64) -> (PhaseState, f64) {
        let omega = self.omega_from_radius(r);
        let p = self.mass * self.lorentz_factor(r) * omega * r;
        (
            PhaseState::new(Vec2::new(r, 0.0), Vec2::new(0.0, p)),
            omega,
        )
    }

    /// All circular radii with energy exactly `energy`, ascending.
    ///
    /// For `α >= 2` the profile is strictly decreasing and there is one root
    /// for every `energy > mc²`. For `α ∈ (1, 2)` the profile decreases to
    /// its minimum `η(α)` at `t_min = (κ/mc²) sqrt(α-1)/(2-α)` and then
    /// increases towards `mc²`, so there are two roots for
    /// `η < energy < mc²` and one root for `energy >= mc²`.
    pub fn radius_from_energy(&self, energy: f64) -> Result<Vec<f64>> {
        let threshold = self.energy_threshold();
        if !(energy > threshold) {
            return Err(Error::NoCircularOrbit { energy, threshold });
        }
        let f = |t: f64| {
            self.kappa * energy_profile(self.kappa, self.mass, self.light_speed, self.alpha, t)
        };
        let mc2 = self.rest_energy();
        let mut roots_t: Vec<f64> = Vec::new();
        if self.alpha >= 2.0 {
            roots_t.push(bisect_decreasing(&f, energy, 1.0)?);
        } else {
            let t_min = self.kappa / mc2 * (self.alpha - 1.0).sqrt() / (2.0 - self.alpha);
            // decreasing branch (0, t_min]: always one root above threshold
            roots_t.push(bisect_decreasing_bounded(&f, energy, t_min)?);
            // increasing branch [t_min, ∞): range (η, mc²), root iff below mc²
            if energy < mc2 {
                roots_t.push(bisect_increasing_from(&f, energy, t_min)?);
            }
        }
        let mut radii: Vec<f64> = roots_t
            .into_iter()
            .map(|t| t.powf(1.0 / self.alpha))
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(radii)
    }

    /// Radial admissibility function
    /// `Φ_{𝔈,L}(r) = (κ²/(α²r^(2α)) - c²L²/r² + 2𝔈κ/(αr^α) + 𝔈² - m²c⁴)/c²`.
    pub fn effective_potential(&self, energy: f64, angular_momentum: f64, r: f64) -> f64 {
        let c2 = self.light_speed * self.light_speed;
        let ra = r.powf(self.alpha);
        (self.kappa * self.kappa / (self.alpha * self.alpha * ra * ra)
            - c2 * angular_momentum * angular_momentum / (r * r)
            + 2.0 * energy * self.kappa / (self.alpha * ra)
            + energy * energy
            - self.rest_energy() * self.rest_energy())
            / c2
    }

    /// `Φ'_{𝔈,L}(r) = 2 Φ̃_{𝔈,L}(r) / (c² r^(2α+1))` with the reduced form
    /// `Φ̃_{𝔈,L}(r) = c²L²r^(2α-2) - κ²/α - 𝔈 κ r^α`.
    pub fn effective_potential_derivative(
        &self,
        energy: f64,
        angular_momentum: f64,
        r: f64,
    ) -> f64 {
        2.0 * self.phi_tilde(energy, angular_momentum, r)
            / (self.light_speed * self.light_speed * r.powf(2.0 * self.alpha + 1.0))
    }

    /// Reduced numerator of `Φ'`: sign changes of `Φ̃` locate the critical
    /// points of `Φ`.
    pub fn phi_tilde(&self, energy: f64, angular_momentum: f64, r: f64) -> f64 {
        let c2 = self.light_speed * self.light_speed;
        c2 * angular_momentum * angular_momentum * r.powf(2.0 * self.alpha - 2.0)
            - self.kappa * self.kappa / self.alpha
            - energy * self.kappa * r.powf(self.alpha)
    }

    /// Coefficients `(p0, p1, p2)` of the quadratic `P₂(x) = p0 + p1 x + p2 x²`
    /// with `Φ(r) = P₂(r²)/(c²r⁴)` in the `α = 2` case. `P₂(0) = κ²/4 > 0`,
    /// so `Φ` cannot have two consecutive positive zeros with positivity in
    /// between: no bounded non-circular orbits.
    pub fn p2_coefficients(&self, energy: f64, angular_momentum: f64) -> (f64, f64, f64) {
        debug_assert!(self.alpha == 2.0);
        let c2 = self.light_speed * self.light_speed;
        (
            self.kappa * self.kappa / 4.0,
            energy * self.kappa - c2 * angular_momentum * angular_momentum,
            energy * energy - self.rest_energy() * self.rest_energy(),
        )
    }

    /// Phase-plane classification at fixed `(𝔈, L)`, `L > 0`.
    ///
    /// Critical points are counted by sign changes of `Φ̃` on a log grid with
    /// bisection refinement. For `α > 2` exactly one critical point (a global
    /// minimum) exists; for `α = 2` the count follows from the sign of
    /// `c²L² - 𝔈κ` and the quadratic route certifies the verdict. For
    /// `α ∈ (1, 2)` annuli found numerically are reported without an
    /// existence claim.
    pub fn classify_orbits(&self, energy: f64, angular_momentum: f64) -> Result<OrbitClassification> {
        if !(angular_momentum > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "classification requires L > 0, got {angular_momentum}"
            )));
        }
        let tilde = |r: f64| self.phi_tilde(energy, angular_momentum, r);
        let phi = |r: f64| self.effective_potential(energy, angular_momentum, r);

        let critical_radii = scan_roots(&tilde);
        let zeros = scan_roots(&phi);

        if self.alpha > 2.0 && critical_radii.len() != 1 {
            return Err(Error::BracketFailure(
                "expected exactly one critical point for alpha > 2",
            ));
        }
        if self.alpha == 2.0 {
            let c2 = self.light_speed * self.light_speed;
            let expected = usize::from(
                c2 * angular_momentum * angular_momentum > energy * self.kappa,
            );
            if critical_radii.len() != expected {
                return Err(Error::BracketFailure(
                    "alpha = 2 critical-point count disagrees with the quadratic analysis",
                ));
            }
        }

        let phi_at_critical: Vec<f64> = critical_radii.iter().map(|&r| phi(r)).collect();

        // bounded positive lobes between consecutive zeros
        let mut annuli = Vec::new();
        for w in zeros.windows(2) {
            let mid = (w[0] * w[1]).sqrt();
            if phi(mid) > 0.0 {
                annuli.push((w[0], w[1]));
            }
        }

        let verdict = if !annuli.is_empty() {
            OrbitVerdict::AnnulusPresent
        } else if critical_radii
            .iter()
            .zip(&phi_at_critical)
            .any(|(&r, &p)| p.abs() <= 1e-9 * self.phi_scale(energy, angular_momentum, r))
        {
            OrbitVerdict::CircularOnly
        } else {
            OrbitVerdict::NoBoundedOrbits
        };

        // the quadratic route rules out annuli outright when alpha = 2
        if self.alpha == 2.0 && verdict == OrbitVerdict::AnnulusPresent {
            return Err(Error::BracketFailure(
                "alpha = 2 scan found an annulus, contradicting P2(0) > 0",
            ));
        }

        Ok(OrbitClassification {
            energy,
            angular_momentum,
            critical_radii,
            phi_at_critical,
            zeros,
            annuli,
            verdict,
        })
    }

    /// Magnitude scale of the individual terms of `Φ` at radius `r`, used to
    /// decide when a critical value counts as a degenerate double zero.
    fn phi_scale(&self, energy: f64, angular_momentum: f64, r: f64) -> f64 {
        let c2 = self.light_speed * self.light_speed;
        let ra = r.powf(self.alpha);
        (self.kappa * self.kappa / (self.alpha * self.alpha * ra * ra)
            + c2 * angular_momentum * angular_momentum / (r * r)
            + (2.0 * energy * self.kappa / (self.alpha * ra)).abs()
            + energy * energy
            + self.rest_energy() * self.rest_energy())
            / c2
    }

    /// Circular radii `r_h(c)` at fixed `h > 0` for an ascending list of
    /// light speeds, with the classical limit radius for comparison.
    pub fn nonrelativistic_limit(&self, h: f64, c_values: &[f64]) -> Result<LimitTable> {
        if !(h > 0.0) {
            return Err(Error::InvalidEnergy { h });
        }
        if c_values.windows(2).any(|w| w[0] >= w[1]) || c_values.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidConfig(
                "light speeds must be positive and strictly ascending".into(),
            ));
        }
        let mut rows = Vec::with_capacity(c_values.len());
        for &c in c_values {
            let model_c = self.with_light_speed(c)?;
            let energy = h + model_c.rest_energy();
            let radius = match model_c.radius_from_energy(energy) {
                // decreasing-branch root: the smallest radius (sole root
                // whenever energy >= mc², which holds for every h > 0)
                Ok(radii) => radii.first().copied(),
                Err(Error::NoCircularOrbit { .. }) => None,
                Err(e) => return Err(e),
            };
            rows.push(LimitRow {
                light_speed: c,
                radius,
            });
        }
        let defined: Vec<f64> = rows.iter().filter_map(|r| r.radius).collect();
        let monotone_decreasing = defined.windows(2).all(|w| w[0] > w[1]);
        let classical_radius = if self.alpha > 2.0 {
            Some(
                (self.kappa / h * (self.alpha - 2.0) / (2.0 * self.alpha))
                    .powf(1.0 / self.alpha),
            )
        } else {
            None
        };
        Ok(LimitTable {
            rows,
            classical_radius,
            monotone_decreasing,
        })
    }

    /// The pair `(ψ(x), Θ(x))` of the radius equation `ψ(mc²rᵅ) = Θ(rᵅ)`:
    /// `ψ(x) = (sqrt(κ² + 4x²) + κ)/2 - x` (strictly decreasing from κ to
    /// κ/2) and `Θ(x) = h x + κ/α`.
    pub fn psi_theta(&self, x: f64, h: f64) -> (f64, f64) {
        let psi = ((self.kappa * self.kappa + 4.0 * x * x).sqrt() + self.kappa) / 2.0 - x;
        let theta = h * x + self.kappa / self.alpha;
        (psi, theta)
    }

    /// Tabulate `(r, ω, 𝔈)` on a log grid.
    pub fn profile(&self, r_min: f64, r_max: f64, points: usize) -> Result<RadialProfile> {
        if !(r_min > 0.0) || !(r_max > r_min) || points < 2 {
            return Err(Error::InvalidConfig(
                "profile needs 0 < r_min < r_max and >= 2 points".into(),
            ));
        }
        let ratio = (r_max / r_min).ln();
        let rows = (0..points)
            .map(|i| {
                let r = r_min * (ratio * (i as f64) / ((points - 1) as f64)).exp();
                ProfileRow {
                    radius: r,
                    omega: self.omega_from_radius(r),
                    energy: self.energy_of_radius(r),
                }
            })
            .collect();
        Ok(RadialProfile { rows })
    }
}

/// Bisection for `f(t) = target` on a strictly decreasing profile, bracketing
/// by doubling/halving from `t_start`.
fn bisect_decreasing(f: &dyn Fn(f64) -> f64, target: f64, t_start: f64) -> Result<f64> {
    let mut lo = t_start;
    let mut iter = 0;
    while f(lo) <= target {
        lo *= 0.5;
        iter += 1;
        if iter > 2000 {
            return Err(Error::BracketFailure("no lower bracket on decreasing branch"));
        }
    }
    let mut hi = lo.max(t_start);
    iter = 0;
    while f(hi) >= target {
        hi *= 2.0;
        iter += 1;
        if iter > 2000 {
            return Err(Error::BracketFailure("no upper bracket on decreasing branch"));
        }
    }
    Ok(bisect(f, target, lo, hi, true))
}

/// As above but the decreasing branch is capped at `t_max` (the profile
/// minimum); the lower bracket is found by halving from `t_max`.
fn bisect_decreasing_bounded(f: &dyn Fn(f64) -> f64, target: f64, t_max: f64) -> Result<f64> {
    let mut lo = t_max;
    let mut iter = 0;
    while f(lo) <= target {
        lo *= 0.5;
        iter += 1;
        if iter > 2000 {
            return Err(Error::BracketFailure("no bracket below the profile minimum"));
        }
    }
    Ok(bisect(f, target, lo, t_max, true))
}

/// Bisection on the increasing branch starting at `t_min`.
fn bisect_increasing_from(f: &dyn Fn(f64) -> f64, target: f64, t_min: f64) -> Result<f64> {
    let mut hi = t_min * 2.0;
    let mut iter = 0;
    while f(hi) <= target {
        hi *= 2.0;
        iter += 1;
        if iter > 2000 {
            return Err(Error::BracketFailure("no bracket above the profile minimum"));
        }
    }
    Ok(bisect(f, target, t_min, hi, false))
}

/// Plain bisection of `f(t) - target` to relative width `BISECT_REL_TOL`;
/// `decreasing` encodes which side of the bracket is above the target.
fn bisect(f: &dyn Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64, decreasing: bool) -> f64 {
    for _ in 0..200 {
        if (hi - lo) <= BISECT_REL_TOL * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let above = f(mid) > target;
        if above == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign-change scan of `g` over the standard log window, refined by
/// bisection; returns ascending roots.
fn scan_roots(g: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let decades = (SCAN_R_MAX / SCAN_R_MIN).log10();
    let n = (decades * SCAN_POINTS_PER_DECADE as f64) as usize;
    let mut roots = Vec::new();
    let mut r_prev = SCAN_R_MIN;
    let mut g_prev = g(r_prev);
    for i in 1..=n {
        let r = SCAN_R_MIN * 10f64.powf(decades * (i as f64) / (n as f64));
        let gi = g(r);
        if g_prev == 0.0 {
            roots.push(r_prev);
        } else if g_prev * gi < 0.0 {
            // refine by bisection in log space
            let (mut lo, mut hi) = (r_prev, r);
            let (mut glo, _ghi) = (g_prev, gi);
            for _ in 0..200 {
                if hi - lo <= BISECT_REL_TOL * hi {
                    break;
                }
                let mid = (lo * hi).sqrt();
                let gm = g(mid);
                if (gm > 0.0) == (glo > 0.0) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push((lo * hi).sqrt());
        }
        r_prev = r;
        g_prev = gi;
    }
    roots
}
