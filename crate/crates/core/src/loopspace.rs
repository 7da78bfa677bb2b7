//! Discretized closed loops and the length, energy and Maupertuis
//! functionals.
//!
//! A loop is sampled on the uniform grid `σ_j = j/N`, closed by convention
//! (`u_N ≡ u_0`, no duplicated endpoint). With forward differences for the
//! derivative and node averaging for the potential, the discrete functionals
//! are
//!
//! ```text
//!     kinetic        K = N Σ_j |u_{j+1} - u_j|²
//!     potential_part P = (1/N) Σ_j (Z_h(u_j) + 2hm)
//!     maupertuis     M = K · P
//!     energy         E = N Σ_j |u_{j+1} - u_j|² W̄_j
//!     length         L = Σ_j |u_{j+1} - u_j| √W̄_j
//! ```
//!
//! where `W̄_j` is the segment mean of the metric weight `Z_h + 2hm`. By
//! periodicity `Σ_j W̄_j = Σ_j W_j`, so `P` is simultaneously the node and the
//! segment-mean quadrature and the discrete Cauchy-Schwarz inequality
//! `L² <= K·P = M` holds exactly. The Maupertuis gradient differentiates the
//! discrete functional itself (discretize-then-differentiate), so it matches
//! finite differences of `M` to roundoff.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is in the test graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::potentials::{EnergyLevel, PotentialConfig};
use crate::vec2::Vec2;

/// Smallest admissible grid.
pub const MIN_GRID_SIZE: usize = 8;

/// Which notion of loop-to-centre distance backs the collision margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginNorm {
    /// Pointwise margin: the minimum over samples of `|u_j - σ|`. This is the
    /// quantity that controls collision and quadrature blow-up.
    Sup,
    /// The H¹ norm `(∫|u-σ|² + ∫|u'|²)^(1/2)` of the difference.
    H1,
}

/// A closed polyline `u_j = u(j/N)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLoop {
    samples: Vec<Vec2>,
}

/// All five loop functionals at a given energy parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    /// `∫ |u'|² ds`
    pub kinetic: f64,
    /// `∫ (Z_h(u) + 2hm) ds`
    pub potential_part: f64,
    /// `kinetic * potential_part`
    pub maupertuis: f64,
    /// `∫ |u'|² (Z_h(u) + 2hm) ds`
    pub energy_functional: f64,
    /// `∫ |u'| sqrt(Z_h(u) + 2hm) ds`
    pub length: f64,
}

/// Minimum and maximum sample distance to a centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterDistances {
    pub min: f64,
    pub max: f64,
}

impl DiscreteLoop {
    pub fn new(samples: Vec<Vec2>) -> Result<Self> {
        if samples.len() < MIN_GRID_SIZE {
            return Err(Error::InvalidConfig(alloc::format!(
                "loop needs at least {MIN_GRID_SIZE} samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("loop sample not finite".into()));
        }
        Ok(DiscreteLoop { samples })
    }

    /// Counter-clockwise circle sampled uniformly.
    pub fn circle(center: Vec2, radius: f64, n: usize) -> Result<Self> {
        let mut samples = Vec::with_capacity(n);
        for j in 0..n {
            let t = 2.0 * core::f64::consts::PI * (j as f64) / (n as f64);
            samples.push(center + Vec2::new(radius * t.cos(), radius * t.sin()));
        }
        DiscreteLoop::new(samples)
    }

    pub fn samples(&self) -> &[Vec2] {
        &self.samples
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    /// Sample with periodic index.
    #[inline]
    pub fn at(&self, j: usize) -> Vec2 {
        self.samples[j % self.samples.len()]
    }

    /// Piecewise-linear resampling in the grid parameter onto `n` nodes.
    /// For `n = 2N` this is midpoint insertion.
    pub fn resampled(&self, n: usize) -> Result<Self> {
        let m = self.samples.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let s = (k as f64) * (m as f64) / (n as f64);
            let j = s.floor() as usize;
            let t = s - j as f64;
            out.push(self.at(j) * (1.0 - t) + self.at(j + 1) * t);
        }
        DiscreteLoop::new(out)
    }

    /// `N Σ_j |u_{j+1} - u_j|²`, the discrete `∫|u'|² ds`.
    pub fn kinetic(&self) -> f64 {
        let n = self.samples.len();
        let nf = n as f64;
        let mut sum = 0.0;
        for j in 0..n {
            sum += (self.at(j + 1) - self.samples[j]).norm_sq();
        }
        nf * sum
    }

    /// Metric weights `Z_h(u_j) + 2hm` at the nodes, with Hill-region check.
    fn node_weights(&self, cfg: &PotentialConfig, level: EnergyLevel) -> Result<Vec<f64>> {
        let mut w = Vec::with_capacity(self.samples.len());
        for (j, &u) in self.samples.iter().enumerate() {
            let v = cfg.value(u)?;
            let vh = v + level.h;
            if vh <= 0.0 {
                return Err(Error::OutsideHillRegion {
                    sample: j,
                    v_plus_h: vh,
                });
            }
            w.push(crate::potentials::metric_weight_of_potential(
                v,
                level.h,
                cfg.mass(),
                cfg.light_speed(),
            ));
        }
        Ok(w)
    }

    /// Evaluate all five functionals.
    pub fn functionals(
        &self,
        cfg: &PotentialConfig,
        level: EnergyLevel,
    ) -> Result<FunctionalReport> {
        let n = self.samples.len();
        let nf = n as f64;
        let w = self.node_weights(cfg, level)?;
        let mut kinetic = 0.0;
        let mut potential = 0.0;
        let mut energy = 0.0;
        let mut length = 0.0;
        for j in 0..n {
            let d2 = (self.at(j + 1) - self.samples[j]).norm_sq();
            let wbar = 0.5 * (w[j] + w[(j + 1) % n]);
            kinetic += d2;
            potential += w[j];
            energy += d2 * wbar;
            length += (d2 * wbar).sqrt();
        }
        kinetic *= nf;
        potential /= nf;
        energy *= nf;
        Ok(FunctionalReport {
            kinetic,
            potential_part: potential,
            maupertuis: kinetic * potential,
            energy_functional: energy,
            length,
        })
    }

    /// Exact gradient of the discrete Maupertuis functional with respect to
    /// each sample point.
    pub fn maupertuis_gradient(
        &self,
        cfg: &PotentialConfig,
        level: EnergyLevel,
    ) -> Result<Vec<Vec2>> {
        let n = self.samples.len();
        let nf = n as f64;
        let w = self.node_weights(cfg, level)?;
        let mut kinetic = 0.0;
        let mut potential = 0.0;
        for j in 0..n {
            kinetic += (self.at(j + 1) - self.samples[j]).norm_sq();
            potential += w[j];
        }
        kinetic *= nf;
        potential /= nf;

        let mut grad = Vec::with_capacity(n);
        for j in 0..n {
            let u = self.samples[j];
            let lap = u * 2.0 - self.at(j + 1) - self.at(j + n - 1);
            let gk = lap * (2.0 * nf);
            let gp = cfg.z_h_gradient(level, u)? / nf;
            grad.push(gk * potential + gp * kinetic);
        }
        Ok(grad)
    }

    /// `<maupertuis_gradient, direction>`, for probes such as the push-off
    /// test `dM_h(u)[u - σ_i]`.
    pub fn directional_derivative(
        &self,
        cfg: &PotentialConfig,
        level: EnergyLevel,
        direction: &[Vec2],
    ) -> Result<f64> {
        if direction.len() != self.samples.len() {
            return Err(Error::InvalidConfig(alloc::format!(
                "direction has {} entries for a {}-sample loop",
                direction.len(),
                self.samples.len()
            )));
        }
        let g = self.maupertuis_gradient(cfg, level)?;
        Ok(g.iter().zip(direction).map(|(a, b)| a.dot(*b)).sum())
    }

    /// Minimum and maximum sample distance to `center`.
    pub fn distance_to_center(&self, center: Vec2) -> CenterDistances {
        let mut min = f64::INFINITY;
        let mut max = 0.0_f64;
        for &u in &self.samples {
            let d = u.distance(center);
            min = min.min(d);
            max = max.max(d);
        }
        CenterDistances { min, max }
    }

    /// Discrete H¹ norm of `u - σ`: `(Σ|u_j-σ|²/N + N Σ|Δu_j|²)^(1/2)`.
    pub fn h1_distance_to_center(&self, center: Vec2) -> f64 {
        let n = self.samples.len() as f64;
        let l2: f64 = self
            .samples
            .iter()
            .map(|&u| (u - center).norm_sq())
            .sum::<f64>()
            / n;
        (l2 + self.kinetic()).sqrt()
    }

    /// Distance to a centre in the chosen margin norm.
    pub fn center_distance(&self, center: Vec2, norm: MarginNorm) -> f64 {
        match norm {
            MarginNorm::Sup => self.distance_to_center(center).min,
            MarginNorm::H1 => self.h1_distance_to_center(center),
        }
    }

    /// Smallest margin-norm distance over all centres, with the index of the
    /// closest centre.
    pub fn min_margin(&self, cfg: &PotentialConfig, norm: MarginNorm) -> (usize, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (i, &c) in cfg.centers().iter().enumerate() {
            let d = self.center_distance(c, norm);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Per-centre pointwise minimum distances (the collision margins).
    pub fn margins(&self, cfg: &PotentialConfig) -> Vec<f64> {
        cfg.centers()
            .iter()
            .map(|&c| self.distance_to_center(c).min)
            .collect()
    }

    /// True when every sample keeps clear of every centre's exclusion radius.
    pub fn is_collision_free(&self, cfg: &PotentialConfig) -> bool {
        self.margins(cfg)
            .iter()
            .all(|&d| d > cfg.collision_radius())
    }

    /// Constant loop at a point (useful for degenerate-input tests).
    pub fn constant(point: Vec2, n: usize) -> Result<Self> {
        DiscreteLoop::new(vec![point; n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Perturbation;
    use alloc::vec;
    use core::f64::consts::PI;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn model() -> PotentialConfig {
        PotentialConfig::single_center(1.0, 2.0, 1.0, 1.0).unwrap()
    }

    fn h05() -> EnergyLevel {
        EnergyLevel::new(0.5)
    }

    /// Central finite difference of the discrete Maupertuis functional.
    fn fd_gradient(
        lp: &DiscreteLoop,
        cfg: &PotentialConfig,
        level: EnergyLevel,
        step: f64,
    ) -> Vec<Vec2> {
        let n = lp.grid_size();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let mut comps = [0.0_f64; 2];
            for (axis, comp) in comps.iter_mut().enumerate() {
                let mut plus = lp.samples().to_vec();
                let mut minus = lp.samples().to_vec();
                if axis == 0 {
                    plus[j].x += step;
                    minus[j].x -= step;
                } else {
                    plus[j].y += step;
                    minus[j].y -= step;
                }
                let fp = DiscreteLoop::new(plus)
                    .unwrap()
                    .functionals(cfg, level)
                    .unwrap()
                    .maupertuis;
                let fm = DiscreteLoop::new(minus)
                    .unwrap()
                    .functionals(cfg, level)
                    .unwrap()
                    .maupertuis;
                *comp = (fp - fm) / (2.0 * step);
            }
            out.push(Vec2::new(comps[0], comps[1]));
        }
        out
    }

    fn random_loop(rng: &mut StdRng, n: usize, center: Vec2, r0: f64) -> DiscreteLoop {
        // smooth random loop: low-order trigonometric polynomial around a ring
        let mut coef = [[0.0_f64; 4]; 4];
        for row in coef.iter_mut() {
            for c in row.iter_mut() {
                *c = rng.gen_range(-0.1..0.1) * r0;
            }
        }
        let samples: Vec<Vec2> = (0..n)
            .map(|j| {
                let t = 2.0 * PI * (j as f64) / (n as f64);
                let mut p = center + Vec2::new(r0 * t.cos(), r0 * t.sin());
                for k in 1..=2 {
                    let kt = (k as f64) * t;
                    p += Vec2::new(
                        coef[0][k] * kt.cos() + coef[1][k] * kt.sin(),
                        coef[2][k] * kt.cos() + coef[3][k] * kt.sin(),
                    );
                }
                p
            })
            .collect();
        DiscreteLoop::new(samples).unwrap()
    }

    #[test]
    fn test_circle_kinetic_matches_continuum() {
        let lp = DiscreteLoop::circle(Vec2::ZERO, 1.0, 256).unwrap();
        let rep = lp.functionals(&model(), h05()).unwrap();
        let exact = (2.0 * PI) * (2.0 * PI);
        assert!(
            ((rep.kinetic - exact) / exact).abs() < 1e-4,
            "kinetic {} vs {}",
            rep.kinetic,
            exact
        );
    }

    #[test]
    fn test_circle_potential_part_and_maupertuis() {
        // V = 1/2 on the unit circle, Z_h = 2*0.5 + 1 = 2, weight = 3
        let lp = DiscreteLoop::circle(Vec2::ZERO, 1.0, 256).unwrap();
        let rep = lp.functionals(&model(), h05()).unwrap();
        assert!((rep.potential_part - 3.0).abs() < 1e-13);
        let expected = 3.0 * (2.0 * PI) * (2.0 * PI);
        assert!(((rep.maupertuis - expected) / expected).abs() < 1e-4);
        assert_eq!(rep.maupertuis, rep.kinetic * rep.potential_part);
    }

    #[test]
    fn test_constant_loop_zero_kinetic() {
        let lp = DiscreteLoop::constant(Vec2::new(2.0, 0.5), 16).unwrap();
        let rep = lp.functionals(&model(), h05()).unwrap();
        assert_eq!(rep.kinetic, 0.0);
        assert_eq!(rep.maupertuis, 0.0);
        let g = lp.maupertuis_gradient(&model(), h05()).unwrap();
        assert!(g.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn test_gradient_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(7);
        let cfg = model();
        for _ in 0..5 {
            let lp = random_loop(&mut rng, 64, Vec2::ZERO, 1.5);
            let g = lp.maupertuis_gradient(&cfg, h05()).unwrap();
            let fd = fd_gradient(&lp, &cfg, h05(), 1e-6);
            let gn: f64 = g.iter().map(|v| v.norm_sq()).sum::<f64>().sqrt();
            let err: f64 = g
                .iter()
                .zip(&fd)
                .map(|(a, b)| (*a - *b).norm_sq())
                .sum::<f64>()
                .sqrt();
            assert!(
                err / gn < 1e-6,
                "gradient/fd mismatch: rel err {:.3e}",
                err / gn
            );
        }
    }

    #[test]
    fn test_directional_derivative_basics() {
        let mut rng = StdRng::seed_from_u64(8);
        let cfg = model();
        let lp = random_loop(&mut rng, 64, Vec2::ZERO, 1.5);
        let zero = vec![Vec2::ZERO; 64];
        assert_eq!(lp.directional_derivative(&cfg, h05(), &zero).unwrap(), 0.0);
        let g = lp.maupertuis_gradient(&cfg, h05()).unwrap();
        let dd = lp.directional_derivative(&cfg, h05(), &g).unwrap();
        let gn2: f64 = g.iter().map(|v| v.norm_sq()).sum();
        assert!(dd >= 0.0);
        assert!((dd - gn2).abs() <= 1e-12 * gn2.max(1.0));
    }

    #[test]
    fn test_push_off_direction_is_descent_near_center() {
        // dM_h(u)[u - σ] < 0 for loops close to the singularity
        let cfg = model();
        let lp = DiscreteLoop::circle(Vec2::ZERO, 1e-3, 64).unwrap();
        let dir: Vec<Vec2> = lp.samples().iter().map(|&u| u - Vec2::ZERO).collect();
        let dd = lp.directional_derivative(&cfg, h05(), &dir).unwrap();
        assert!(dd < 0.0, "expected inward-pointing derivative, got {dd}");
    }

    #[test]
    fn test_h1_distance_unit_circle() {
        let lp = DiscreteLoop::circle(Vec2::ZERO, 1.0, 1024).unwrap();
        let h1 = lp.h1_distance_to_center(Vec2::ZERO);
        let exact = (1.0 + 4.0 * PI * PI).sqrt();
        assert!(
            ((h1 - exact) / exact).abs() < 1e-5,
            "h1 {} vs {}",
            h1,
            exact
        );
        let d = lp.distance_to_center(Vec2::ZERO);
        assert!((d.min - 1.0).abs() < 1e-14 && (d.max - 1.0).abs() < 1e-14);
    }

    #[test]
    fn test_distances_translation_invariant() {
        let mut rng = StdRng::seed_from_u64(9);
        let lp = random_loop(&mut rng, 32, Vec2::ZERO, 2.0);
        let shift = Vec2::new(3.7, -1.2);
        let shifted =
            DiscreteLoop::new(lp.samples().iter().map(|&u| u + shift).collect()).unwrap();
        let a = lp.distance_to_center(Vec2::new(0.3, 0.1));
        let b = shifted.distance_to_center(Vec2::new(0.3, 0.1) + shift);
        assert!((a.min - b.min).abs() < 1e-12 && (a.max - b.max).abs() < 1e-12);
        let ha = lp.h1_distance_to_center(Vec2::new(0.3, 0.1));
        let hb = shifted.h1_distance_to_center(Vec2::new(0.3, 0.1) + shift);
        assert!((ha - hb).abs() < 1e-10);
    }

    #[test]
    fn test_cauchy_schwarz_on_random_loops() {
        let mut rng = StdRng::seed_from_u64(10);
        let cfg = model();
        for _ in 0..20 {
            let r0 = rng.gen_range(0.5..3.0);
            let lp = random_loop(&mut rng, 48, Vec2::ZERO, r0);
            let rep = lp.functionals(&cfg, h05()).unwrap();
            assert!(
                rep.length * rep.length <= rep.maupertuis * (1.0 + 1e-12),
                "Cauchy-Schwarz violated: L^2 = {}, M = {}",
                rep.length * rep.length,
                rep.maupertuis
            );
        }
    }

    #[test]
    fn test_rotation_invariance_single_center() {
        let mut rng = StdRng::seed_from_u64(11);
        let cfg = model();
        let lp = random_loop(&mut rng, 64, Vec2::ZERO, 1.2);
        let rot = DiscreteLoop::new(lp.samples().iter().map(|&u| u.rotated(0.83)).collect())
            .unwrap();
        let a = lp.functionals(&cfg, h05()).unwrap();
        let b = rot.functionals(&cfg, h05()).unwrap();
        assert!((a.kinetic - b.kinetic).abs() <= 1e-12 * a.kinetic);
        assert!((a.potential_part - b.potential_part).abs() <= 1e-12 * a.potential_part);
        assert!((a.maupertuis - b.maupertuis).abs() <= 1e-12 * a.maupertuis);
        assert!((a.energy_functional - b.energy_functional).abs() <= 1e-11 * a.energy_functional);
        assert!((a.length - b.length).abs() <= 1e-11 * a.length);
    }

    #[test]
    fn test_quadrature_second_order() {
        // Richardson ratio between successive grid doublings is ~4 for an
        // analytic loop (off-centre ellipse).
        let cfg = model();
        let ellipse = |n: usize| {
            let samples: Vec<Vec2> = (0..n)
                .map(|j| {
                    let t = 2.0 * PI * (j as f64) / (n as f64);
                    Vec2::new(0.3 + 1.4 * t.cos(), 0.1 + 0.9 * t.sin())
                })
                .collect();
            DiscreteLoop::new(samples).unwrap()
        };
        let f = |n: usize| ellipse(n).functionals(&cfg, h05()).unwrap().maupertuis;
        let (f1, f2, f4) = (f(64), f(128), f(256));
        let ratio = (f1 - f2) / (f2 - f4);
        assert!(
            (3.3..4.7).contains(&ratio),
            "expected ~4 (second order), got {ratio}"
        );
    }

    #[test]
    fn test_outside_hill_region_detected() {
        // W = 0 and h < 0: far loop has V + h < 0
        let cfg = model();
        let lp = DiscreteLoop::circle(Vec2::ZERO, 100.0, 16).unwrap();
        match lp.functionals(&cfg, EnergyLevel::new(-0.4)) {
            Err(Error::OutsideHillRegion { .. }) => {}
            other => panic!("expected OutsideHillRegion, got {other:?}"),
        }
    }

    #[test]
    fn test_collision_propagates() {
        let cfg = model();
        let mut samples = DiscreteLoop::circle(Vec2::ZERO, 1.0, 16)
            .unwrap()
            .samples()
            .to_vec();
        samples[3] = Vec2::ZERO;
        let lp = DiscreteLoop::new(samples).unwrap();
        assert!(matches!(
            lp.functionals(&cfg, h05()),
            Err(Error::CollisionPoint { .. })
        ));
    }

    #[test]
    fn test_grid_too_small_rejected() {
        assert!(DiscreteLoop::new(vec![Vec2::new(1.0, 0.0); 7]).is_err());
    }

    #[test]
    fn test_resample_midpoint_keeps_nodes() {
        let lp = DiscreteLoop::circle(Vec2::ZERO, 1.0, 16).unwrap();
        let fine = lp.resampled(32).unwrap();
        for j in 0..16 {
            assert!((fine.samples()[2 * j] - lp.samples()[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn test_positive_perturbation_keeps_weight_positive() {
        let cfg = PotentialConfig::new(
            vec![Vec2::ZERO],
            vec![1.0],
            2.0,
            Perturbation::GaussianBump {
                amplitude: 0.3,
                width: 1.0,
                offset: 0.2,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let lp = DiscreteLoop::circle(Vec2::ZERO, 5.0, 32).unwrap();
        let rep = lp.functionals(&cfg, h05()).unwrap();
        assert!(rep.potential_part > 2.0 * 0.5 * 1.0);
    }
}
