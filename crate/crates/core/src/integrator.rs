//! Independent forward integration of the equivalent Hamiltonian system
//!
//! ```text
//!     H(x, p) = mc² sqrt(1 + |p|²/(m²c²)) - V(x),
//!     x' = ∂H/∂p = p / (m sqrt(1 + |p|²/(m²c²))),     p' = ∇V(x),
//! ```
//!
//! used to cross-validate variational solutions and to explore phase space.
//! Momentum variables remove the `sqrt(1 - |v|²/c²)` singularity and make
//! `|v| < c` structural. The stepper is an adaptive embedded Runge-Kutta
//! pair with the Dormand-Prince 5(4) coefficients (tableau below); runs are
//! short (a few periods), so drift is measured rather than assumed, and the
//! relative drifts of `H` and of the angular momentum `ℒ = <x, Jp>` are
//! recorded along the trajectory.

use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is in the test graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::potentials::PotentialConfig;
use crate::vec2::Vec2;

/// Phase-space state in momentum variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub position: Vec2,
    pub momentum: Vec2,
}

impl PhaseState {
    pub const fn new(position: Vec2, momentum: Vec2) -> Self {
        PhaseState { position, momentum }
    }
}

/// Step-size control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Optional fixed initial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    /// Optional cap on the step size.
    pub max_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 10_000_000,
            initial_step: None,
            max_step: None,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        IntegratorOptions {
            rtol: tol,
            atol: tol,
            ..IntegratorOptions::default()
        }
    }
}

/// How an integration run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrationOutcome {
    Completed,
    /// Halted because the trajectory approached a centre within the
    /// collision radius; the partial trajectory is returned.
    CollisionApproach { center: usize, time: f64 },
    /// Step size underflowed (or the step budget ran out); the partial
    /// trajectory is returned.
    StepUnderflow { time: f64 },
}

/// Accepted/rejected step counts and step-size range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
}

/// Trajectory samples at accepted steps plus conservation diagnostics.
#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    /// Relative drift `(H(t) - H(0))/|H(0)|`; starts at 0 by definition.
    pub energy_drift: Vec<f64>,
    /// Angular momentum `(x - σ_1) ∧ p` about the centre, recorded for
    /// single-centre configurations.
    pub angular_momentum: Option<Vec<f64>>,
    pub outcome: IntegrationOutcome,
    pub stats: StepStats,
}

impl IntegrationResult {
    pub fn final_state(&self) -> PhaseState {
        *self.states.last().expect("trajectory never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory never empty")
    }

    /// Maximum absolute relative energy drift along the run.
    pub fn max_energy_drift(&self) -> f64 {
        self.energy_drift.iter().fold(0.0_f64, |a, &d| a.max(d.abs()))
    }

    /// Maximum relative angular-momentum drift (single-centre runs).
    pub fn max_angular_momentum_drift(&self) -> Option<f64> {
        let l = self.angular_momentum.as_ref()?;
        let l0 = *l.first()?;
        let scale = l0.abs().max(1e-300);
        Some(l.iter().fold(0.0_f64, |a, &v| a.max((v - l0).abs())) / scale)
    }
}

/// `H(x,p) = mc² sqrt(1 + |p|²/(m²c²)) - V(x)`.
pub fn hamiltonian(cfg: &PotentialConfig, state: &PhaseState) -> Result<f64> {
    let m = cfg.mass();
    let c = cfg.light_speed();
    let mc = m * c;
    let kinetic = m * c * c * (1.0 + state.momentum.norm_sq() / (mc * mc)).sqrt();
    Ok(kinetic - cfg.value(state.position)?)
}

/// `v = p / (m sqrt(1 + |p|²/(m²c²)))`; always `|v| < c`.
pub fn velocity_from_momentum(cfg: &PotentialConfig, p: Vec2) -> Vec2 {
    let mc = cfg.mass() * cfg.light_speed();
    p / (cfg.mass() * (1.0 + p.norm_sq() / (mc * mc)).sqrt())
}

/// `p = m v / sqrt(1 - |v|²/c²)`, requiring `|v| < c` strictly.
///
/// The Lorentz factor is computed from the factored form
/// `(1 - |v|/c)(1 + |v|/c)` to keep accuracy near the light speed.
pub fn momentum_from_velocity(cfg: &PotentialConfig, v: Vec2) -> Result<Vec2> {
    let c = cfg.light_speed();
    let beta = v.norm() / c;
    if beta >= 1.0 {
        return Err(Error::SuperluminalInput { speed: v.norm() });
    }
    let gamma = 1.0 / ((1.0 - beta) * (1.0 + beta)).sqrt();
    Ok(v * (cfg.mass() * gamma))
}

/// Angular momentum `(x - center) ∧ p`.
pub fn angular_momentum(center: Vec2, state: &PhaseState) -> f64 {
    (state.position - center).cross(state.momentum)
}

// Dormand-Prince 5(4) tableau (RKDP, FSAL):
//   c2..c6 = 1/5, 3/10, 4/5, 8/9, 1
//   B5 = 5th-order weights, B4 = embedded 4th-order weights.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type Y = [f64; 4];

#[inline]
fn axpy(y: &Y, h: f64, coeffs: &[f64], ks: &[Y]) -> Y {
    let mut out = *y;
    for (c, k) in coeffs.iter().zip(ks) {
        for i in 0..4 {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn rhs(cfg: &PotentialConfig, y: &Y) -> Result<Y> {
    let x = Vec2::new(y[0], y[1]);
    let p = Vec2::new(y[2], y[3]);
    let v = velocity_from_momentum(cfg, p);
    let f = cfg.gradient(x)?;
    Ok([v.x, v.y, f.x, f.y])
}

fn error_norm(err: &Y, y0: &Y, y1: &Y, rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / 4.0).sqrt()
}

/// Integrate from `initial` to `t_end` with adaptive step control.
///
/// The step is clamped so the run ends exactly at `t_end`. Approaching a
/// centre within the collision radius halts the run with a flagged partial
/// result rather than regularizing.
pub fn integrate(
    cfg: &PotentialConfig,
    initial: PhaseState,
    t_end: f64,
    options: &IntegratorOptions,
) -> Result<IntegrationResult> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "t_end must be positive and finite, got {t_end}"
        )));
    }
    if !initial.position.is_finite() || !initial.momentum.is_finite() {
        return Err(Error::InvalidConfig("initial state not finite".into()));
    }
    cfg.value(initial.position)?; // collision check up front

    let h0_energy = hamiltonian(cfg, &initial)?;
    let h_scale = h0_energy.abs().max(1e-300);
    let single_center = cfg.n_centers() == 1;

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut drift = Vec::new();
    let mut ang: Option<Vec<f64>> = if single_center { Some(Vec::new()) } else { None };

    macro_rules! record {
        ($t:expr, $s:expr) => {{
            let s: PhaseState = $s;
            times.push($t);
            drift.push((hamiltonian(cfg, &s)? - h0_energy) / h_scale);
            if let Some(l) = ang.as_mut() {
                l.push(angular_momentum(cfg.centers()[0], &s));
            }
            states.push(s);
        }};
    }

    record!(0.0, initial);

    let mut y: Y = [
        initial.position.x,
        initial.position.y,
        initial.momentum.x,
        initial.momentum.y,
    ];
    let mut t = 0.0_f64;
    let mut k1 = rhs(cfg, &y)?;

    // initial step: scale-based guess, refined by the controller
    let mut h = options.initial_step.unwrap_or_else(|| {
        let ynorm = (y.iter().map(|a| a * a).sum::<f64>()).sqrt().max(1e-6);
        let fnorm = (k1.iter().map(|a| a * a).sum::<f64>()).sqrt();
        let guess = if fnorm > 1e-12 {
            0.01 * ynorm / fnorm
        } else {
            1e-4 * t_end
        };
        guess.min(0.1 * t_end)
    });
    if let Some(hm) = options.max_step {
        h = h.min(hm);
    }

    let mut stats = StepStats {
        accepted: 0,
        rejected: 0,
        min_step: f64::INFINITY,
        max_step: 0.0,
    };
    let mut outcome = IntegrationOutcome::Completed;
    let h_floor = t_end * 1e-15;

    while t < t_end {
        if stats.accepted + stats.rejected >= options.max_steps {
            outcome = IntegrationOutcome::StepUnderflow { time: t };
            break;
        }
        h = h.min(t_end - t);
        if h < h_floor {
            if t_end - t < h_floor {
                break; // within roundoff of the end time
            }
            outcome = IntegrationOutcome::StepUnderflow { time: t };
            break;
        }

        // stage evaluations; a collision inside a stage rejects the step
        let stages = (|| -> Result<(Y, Y, Y)> {
            let k2 = rhs(cfg, &axpy(&y, h, &A2, &[k1]))?;
            let k3 = rhs(cfg, &axpy(&y, h, &A3, &[k1, k2]))?;
            let k4 = rhs(cfg, &axpy(&y, h, &A4, &[k1, k2, k3]))?;
            let k5 = rhs(cfg, &axpy(&y, h, &A5, &[k1, k2, k3, k4]))?;
            let k6 = rhs(cfg, &axpy(&y, h, &A6, &[k1, k2, k3, k4, k5]))?;
            let ks = [k1, k2, k3, k4, k5, k6];
            let y5 = axpy(&y, h, &B5[..6], &ks);
            let k7 = rhs(cfg, &y5)?;
            let mut err = [0.0_f64; 4];
            let all = [k1, k2, k3, k4, k5, k6, k7];
            for i in 0..4 {
                let mut e = 0.0;
                for (j, k) in all.iter().enumerate() {
                    e += (B5[j] - B4[j]) * k[i];
                }
                err[i] = h * e;
            }
            Ok((y5, k7, err))
        })();

        let (y5, k7, err) = match stages {
            Ok(v) => v,
            Err(Error::CollisionPoint { .. }) => {
                stats.rejected += 1;
                h *= 0.25;
                if h < h_floor {
                    outcome = IntegrationOutcome::StepUnderflow { time: t };
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };

        let en = error_norm(&err, &y, &y5, options.rtol, options.atol);
        if en <= 1.0 {
            t += h;
            y = y5;
            k1 = k7; // FSAL
            stats.accepted += 1;
            stats.min_step = stats.min_step.min(h);
            stats.max_step = stats.max_step.max(h);

            let state = PhaseState::new(Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3]));
            let (ci, d) = cfg.nearest_center(state.position);
            record!(t, state);
            if d <= cfg.collision_radius() {
                outcome = IntegrationOutcome::CollisionApproach {
                    center: ci,
                    time: t,
                };
                break;
            }

            let fac = (0.9 * en.powf(-0.2)).clamp(0.2, 5.0);
            h *= fac;
            if let Some(hm) = options.max_step {
                h = h.min(hm);
            }
        } else {
            stats.rejected += 1;
            h *= (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
        }
    }

    Ok(IntegrationResult {
        times,
        states,
        energy_drift: drift,
        angular_momentum: ang,
        outcome,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> PotentialConfig {
        PotentialConfig::single_center(1.0, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn test_hamiltonian_rest_state() {
        let cfg = model();
        let x = Vec2::new(2.0, 0.0);
        let s = PhaseState::new(x, Vec2::ZERO);
        let h = hamiltonian(&cfg, &s).unwrap();
        let v = cfg.value(x).unwrap();
        assert!((h - (1.0 - v)).abs() < 1e-15);
    }

    #[test]
    fn test_hamiltonian_kinetic_arithmetic() {
        // m = c = 1, |p| = sqrt(3): kinetic part sqrt(1+3) = 2 exactly
        let cfg = model();
        let x = Vec2::new(7.0, 0.0);
        let s = PhaseState::new(x, Vec2::new(3.0_f64.sqrt(), 0.0));
        let h = hamiltonian(&cfg, &s).unwrap();
        let v = cfg.value(x).unwrap();
        assert!((h + v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn test_momentum_velocity_roundtrip() {
        let cfg = model();
        for &(vx, vy) in &[(0.0, 0.0), (0.6, 0.0), (0.3, -0.5), (0.0, 0.99)] {
            let v = Vec2::new(vx, vy);
            let p = momentum_from_velocity(&cfg, v).unwrap();
            let back = velocity_from_momentum(&cfg, p);
            assert!((back - v).norm() <= 1e-14 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn test_lorentz_factor_arithmetic() {
        // v = 0.6 c: gamma = 1.25, p = 0.75
        let cfg = model();
        let p = momentum_from_velocity(&cfg, Vec2::new(0.6, 0.0)).unwrap();
        assert!((p - Vec2::new(0.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn test_momentum_monotone_to_light_speed() {
        let cfg = model();
        let mut last = 0.0;
        for k in 1..=10 {
            let beta = 1.0 - 10f64.powi(-k);
            let p = momentum_from_velocity(&cfg, Vec2::new(beta, 0.0))
                .unwrap()
                .norm();
            assert!(p > last, "momentum not increasing at beta = {beta}");
            last = p;
        }
        assert!(matches!(
            momentum_from_velocity(&cfg, Vec2::new(1.0, 0.0)),
            Err(Error::SuperluminalInput { .. })
        ));
    }

    #[test]
    fn test_velocity_always_subluminal() {
        let cfg = model();
        for &scale in &[1.0, 1e3, 1e6] {
            let v = velocity_from_momentum(&cfg, Vec2::new(scale, scale));
            assert!(v.norm() < cfg.light_speed());
        }
        // beyond |p| ~ 1/sqrt(eps) the speed saturates at c in f64 but never
        // exceeds it
        for &scale in &[1e12, 1e15] {
            let v = velocity_from_momentum(&cfg, Vec2::new(scale, scale));
            assert!(v.norm() <= cfg.light_speed());
        }
    }

    #[test]
    fn test_radial_plunge_halts_at_collision() {
        let cfg = model();
        let s = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::ZERO);
        let r = integrate(&cfg, s, 50.0, &IntegratorOptions::with_tolerance(1e-8)).unwrap();
        match r.outcome {
            IntegrationOutcome::CollisionApproach { center: 0, .. }
            | IntegrationOutcome::StepUnderflow { .. } => {}
            other => panic!("expected halt near the centre, got {other:?}"),
        }
        assert!(r.energy_drift[0] == 0.0);
    }

    #[test]
    fn test_time_reversal_symmetry() {
        let cfg = model();
        let opts = IntegratorOptions::with_tolerance(1e-11);
        let s0 = PhaseState::new(Vec2::new(1.3, 0.2), Vec2::new(-0.1, 0.8));
        let fwd = integrate(&cfg, s0, 2.0, &opts).unwrap();
        assert_eq!(fwd.outcome, IntegrationOutcome::Completed);
        let turn = PhaseState::new(fwd.final_state().position, -fwd.final_state().momentum);
        let back = integrate(&cfg, turn, 2.0, &opts).unwrap();
        let end = back.final_state();
        let err = (end.position - s0.position).norm() + (end.momentum + s0.momentum).norm();
        assert!(err < 1e-8, "time-reversal error {err:.3e}");
    }

    #[test]
    fn test_drift_scales_with_tolerance() {
        // stable circular state at alpha = 1.5 (outer branch)
        let cfg15 = PotentialConfig::single_center(1.0, 1.5, 1.0, 1.0).unwrap();
        let r = 3.0_f64;
        let a = 4.0 * r.powf(3.0); // 4 m^2 c^4 r^(2 alpha)
        let gamma = ((1.0 + a).sqrt() + 1.0) / (2.0 * r.powf(1.5));
        let omega = (2.0 / (r * r * ((1.0 + a).sqrt() + 1.0))).sqrt();
        let s = PhaseState::new(Vec2::new(r, 0.0), Vec2::new(0.0, gamma * omega * r));
        let period = 2.0 * core::f64::consts::PI / omega;
        let mut drifts = alloc::vec::Vec::new();
        for &tol in &[1e-7, 1e-9, 1e-11] {
            let res =
                integrate(&cfg15, s, period, &IntegratorOptions::with_tolerance(tol)).unwrap();
            assert_eq!(res.outcome, IntegrationOutcome::Completed);
            drifts.push(res.max_energy_drift());
        }
        assert!(
            drifts[0] > drifts[1] && drifts[1] > drifts[2],
            "drift not decreasing with tolerance: {drifts:?}"
        );
    }
}
