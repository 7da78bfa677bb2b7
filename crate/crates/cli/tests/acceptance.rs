//! Acceptance suite: one test per acceptance criterion, each printing a
//! pass line with the measured values (visible with `--nocapture`).
//!
//! Run with `cargo test -p relorbit --test acceptance -- --nocapture`.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use relorbit_core::circular::{ModelConfig, OrbitVerdict};
use relorbit_core::homotopy::{homotopy_word, push_off, winding_number, CutSystem, HomotopyWord};
use relorbit_core::integrator::{
    integrate, momentum_from_velocity, IntegrationOutcome, IntegratorOptions, PhaseState,
};
use relorbit_core::loopspace::{DiscreteLoop, MarginNorm};
use relorbit_core::optimizer::{minimize_in_class, SolveSettings};
use relorbit_core::potentials::{EnergyLevel, Perturbation, PotentialConfig};
use relorbit_core::reparam::{
    energy_law_residual, energy_param_to_time, maupertuis_to_energy_param, ode_residual,
};
use relorbit_core::{Error, Vec2};

fn model_potential() -> PotentialConfig {
    PotentialConfig::single_center(1.0, 2.0, 1.0, 1.0).unwrap()
}

fn centers_for(n: usize) -> Vec<Vec2> {
    match n {
        1 => vec![Vec2::ZERO],
        2 => vec![Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)],
        3 => vec![Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.2)],
        _ => unreachable!(),
    }
}

/// Smooth random loop on a ring around `center`, regenerated until it keeps
/// a healthy margin from all centres.
fn random_loop(
    rng: &mut StdRng,
    n_samples: usize,
    ring_center: Vec2,
    ring_radius: f64,
    centers: &[Vec2],
    margin: f64,
) -> DiscreteLoop {
    loop {
        let mut coef = [[0.0_f64; 4]; 4];
        for row in coef.iter_mut() {
            for c in row.iter_mut() {
                *c = rng.gen_range(-0.12..0.12) * ring_radius;
            }
        }
        let samples: Vec<Vec2> = (0..n_samples)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * (j as f64) / (n_samples as f64);
                let mut p =
                    ring_center + Vec2::new(ring_radius * t.cos(), ring_radius * t.sin());
                for k in 1..=3 {
                    let kt = (k as f64) * t;
                    p += Vec2::new(
                        coef[0][k] * kt.cos() + coef[1][k] * kt.sin(),
                        coef[2][k] * kt.cos() + coef[3][k] * kt.sin(),
                    );
                }
                p
            })
            .collect();
        let lp = DiscreteLoop::new(samples).unwrap();
        if centers
            .iter()
            .all(|&c| lp.distance_to_center(c).min > margin)
        {
            return lp;
        }
    }
}

/// Central finite differences of the discrete Maupertuis functional.
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

#[test]
fn criterion_1_gradient_exactness() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let level = EnergyLevel::new(0.5);
    let mut worst = 0.0_f64;
    let combos: Vec<(usize, f64)> = [1usize, 2, 3]
        .iter()
        .flat_map(|&n| [1.5, 2.0, 3.0].iter().map(move |&a| (n, a)))
        .collect();
    for i in 0..50 {
        let (n_centers, alpha) = combos[i % combos.len()];
        let centers = centers_for(n_centers);
        let cfg = PotentialConfig::new(
            centers.clone(),
            vec![1.0; n_centers],
            alpha,
            Perturbation::Zero,
            1.0,
            1.0,
        )
        .unwrap();
        let lp = random_loop(&mut rng, 64, Vec2::new(0.0, 0.1), 2.6, &centers, 0.3);
        let grad = lp.maupertuis_gradient(&cfg, level).unwrap();
        let fd = fd_gradient(&lp, &cfg, level, 1e-6);
        let gnorm: f64 = grad.iter().map(|v| v.norm_sq()).sum::<f64>().sqrt();
        let err: f64 = grad
            .iter()
            .zip(&fd)
            .map(|(a, b)| (*a - *b).norm_sq())
            .sum::<f64>()
            .sqrt();
        let rel = err / gnorm;
        worst = worst.max(rel);
        assert!(
            rel < 1e-6,
            "loop {i} (N={n_centers}, alpha={alpha}): rel err {rel:.3e}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "runtime {elapsed:.2}s exceeds 10s");
    println!(
        "criterion 1 PASS: gradient vs finite differences, 50 loops, worst rel err {worst:.3e}, {elapsed:.2}s"
    );
}

#[test]
fn criterion_2_variational_ode_equivalence() {
    let start = Instant::now();
    let cfg = model_potential();
    let level = EnergyLevel::new(0.5);
    let word = HomotopyWord::parse("a1", 1).unwrap();
    let settings = SolveSettings {
        refinement_schedule: vec![64, 128, 256, 512],
        ..SolveSettings::default()
    };
    let solve = minimize_in_class(&cfg, level, &word, &settings).unwrap();
    assert!(solve.converged, "optimizer failed to converge");
    let q = maupertuis_to_energy_param(&solve.minimizer, &cfg, level).unwrap();

    // (a) energy-law residual < 1e-8 pointwise
    let sol = energy_param_to_time(&q, &cfg, level, 1024).unwrap();
    let law = energy_law_residual(&sol, &cfg, level).unwrap();
    assert!(law < 1e-8, "(a) energy-law residual {law:.3e}");

    // (b) strictly subluminal
    let speed = sol.max_speed_ratio(&cfg);
    assert!(speed < 1.0, "(b) max |v|/c = {speed}");

    // (c) ode residual < 1e-4 at N_t = 1024, order >= 3 under doubling
    let res_1024 = ode_residual(&sol, &cfg).unwrap();
    assert!(res_1024 < 1e-4, "(c) ode residual {res_1024:.3e}");
    let sol_2048 = energy_param_to_time(&q, &cfg, level, 2048).unwrap();
    let res_2048 = ode_residual(&sol_2048, &cfg).unwrap();
    let order = (res_1024 / res_2048).log2();
    assert!(
        order >= 3.0,
        "(c) observed order {order:.2} ({res_1024:.3e} -> {res_2048:.3e})"
    );

    // (d) independent integration over one period returns to the start
    let p0 = momentum_from_velocity(&cfg, sol.velocities[0]).unwrap();
    let run = integrate(
        &cfg,
        PhaseState::new(sol.positions[0], p0),
        sol.period,
        &IntegratorOptions::with_tolerance(1e-11),
    )
    .unwrap();
    assert_eq!(run.outcome, IntegrationOutcome::Completed);
    let gap = (run.final_state().position - sol.positions[0]).norm();
    assert!(gap < 1e-4, "(d) periodicity gap {gap:.3e}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "runtime {elapsed:.2}s exceeds 60s");
    println!(
        "criterion 2 PASS: energy law {law:.2e}, max v/c {speed:.6}, ode residual {res_1024:.2e} \
         (order {order:.2}), periodicity gap {gap:.2e}, {elapsed:.2}s"
    );
}

#[test]
fn criterion_3_circular_orbit_consistency() {
    let model = ModelConfig::new(1.0, 2.0, 1.0, 1.0).unwrap();
    let cfg = model.potential();
    // closed-form energy vs Hamiltonian on the circular state, 200-point
    // log grid over [1e-3, 1e3]
    let mut worst = 0.0_f64;
    for i in 0..200 {
        let r = 1e-3 * 1e6_f64.powf(i as f64 / 199.0);
        let (state, _) = model.circular_state(r);
        let h_val = relorbit_core::integrator::hamiltonian(&cfg, &state).unwrap();
        let e_val = model.energy_of_radius(r);
        let rel = ((h_val - e_val) / e_val).abs();
        worst = worst.max(rel);
        assert!(rel < 1e-10, "r = {r:.3e}: rel err {rel:.3e}");
    }
    // circular states close after one revolution of period 2*pi/omega
    let mut worst_gap = 0.0_f64;
    for &r in &[0.3, 1.0, 3.0] {
        let (state, omega) = model.circular_state(r);
        let period = 2.0 * std::f64::consts::PI / omega;
        let run = integrate(&cfg, state, period, &IntegratorOptions::with_tolerance(1e-11))
            .unwrap();
        assert_eq!(run.outcome, IntegrationOutcome::Completed);
        let gap = (run.final_state().position - state.position).norm();
        worst_gap = worst_gap.max(gap);
        assert!(gap < 1e-6, "r = {r}: closure gap {gap:.3e}");
    }
    println!(
        "criterion 3 PASS: energy/Hamiltonian agreement {worst:.2e} over 200 radii, \
         worst closure gap {worst_gap:.2e}"
    );
}

#[test]
fn criterion_4_threshold_sharpness() {
    // alpha >= 2: circular orbits exactly above mc^2
    for &alpha in &[2.0, 3.0] {
        let m = ModelConfig::new(1.0, alpha, 1.0, 1.0).unwrap();
        for k in 1..=6 {
            let above = 1.0 + 10f64.powi(-k);
            let below = 1.0 - 10f64.powi(-k);
            assert!(
                m.radius_from_energy(above).is_ok(),
                "alpha={alpha}: expected orbit at E = 1 + 1e-{k}"
            );
            assert!(
                matches!(
                    m.radius_from_energy(below),
                    Err(Error::NoCircularOrbit { .. })
                ),
                "alpha={alpha}: expected no orbit at E = 1 - 1e-{k}"
            );
        }
    }
    // alpha = 1.5: threshold eta = 2 sqrt(0.5)/1.5 and a two-root window
    let m = ModelConfig::new(1.0, 1.5, 1.0, 1.0).unwrap();
    let eta = m.energy_threshold();
    assert!((eta - 0.9428090415820634).abs() < 1e-12);
    assert!(matches!(
        m.radius_from_energy(eta - 1e-3),
        Err(Error::NoCircularOrbit { .. })
    ));
    for &e in &[0.95, 0.97, 0.99] {
        let radii = m.radius_from_energy(e).unwrap();
        assert_eq!(radii.len(), 2, "E = {e}: expected two radii, got {radii:?}");
        assert!(radii[0] < radii[1]);
    }
    assert_eq!(m.radius_from_energy(1.01).unwrap().len(), 1);
    println!(
        "criterion 4 PASS: threshold sharp at mc^2 for alpha in {{2,3}}; \
         eta(1.5) = {eta:.6} with the two-root window below mc^2"
    );
}

#[test]
fn criterion_5_no_bounded_orbits_alpha_ge_2() {
    let energies = [0.5, 1.0, 1.5, 2.0];
    let momenta = [1.5, 2.0, 2.5, 3.0];
    for &alpha in &[2.0, 2.5, 3.0] {
        let m = ModelConfig::new(1.0, alpha, 1.0, 1.0).unwrap();
        for &e in &energies {
            for &l in &momenta {
                let c = m.classify_orbits(e, l).unwrap();
                assert_eq!(
                    c.critical_radii.len(),
                    1,
                    "alpha={alpha} (E,L)=({e},{l}): {} critical points",
                    c.critical_radii.len()
                );
                assert_eq!(
                    c.verdict,
                    OrbitVerdict::NoBoundedOrbits,
                    "alpha={alpha} (E,L)=({e},{l})"
                );
                if alpha == 2.0 {
                    // the quadratic route: P2(0) > 0 rules out an interior
                    // positive lobe, and P2 reconstructs Phi exactly
                    let (p0, p1, p2) = m.p2_coefficients(e, l);
                    assert!(p0 > 0.0);
                    for &r in &[0.5, 1.0, 2.0] {
                        let x: f64 = r * r;
                        let phi_q = (p0 + p1 * x + p2 * x * x) / (x * x);
                        let phi = m.effective_potential(e, l, r);
                        assert!((phi_q - phi).abs() <= 1e-12 * phi.abs().max(1.0));
                    }
                }
            }
        }
    }
    println!(
        "criterion 5 PASS: one critical point and no bounded orbits on the 4x4 grid \
         for alpha in {{2, 2.5, 3}}; alpha = 2 verified through the quadratic"
    );
}

#[test]
fn criterion_6_nonrelativistic_limit() {
    let cs: Vec<f64> = (0..=10).map(|k| 2f64.powi(k)).collect();
    // alpha = 3: convergence to the classical radius (1/6)^(1/3)
    let m3 = ModelConfig::new(1.0, 3.0, 1.0, 1.0).unwrap();
    let t3 = m3.nonrelativistic_limit(1.0, &cs).unwrap();
    assert!(t3.monotone_decreasing, "alpha=3 radii not decreasing");
    let classical = t3.classical_radius.unwrap();
    assert!((classical - (1.0f64 / 6.0).powf(1.0 / 3.0)).abs() < 1e-14);
    let last3 = t3.rows.last().unwrap().radius.unwrap();
    let gap = (last3 - classical).abs();
    assert!(gap < 1e-4, "alpha=3: |r_h(2^10) - R_h| = {gap:.3e}");
    // alpha = 1.5: the radius trends to zero
    let m15 = ModelConfig::new(1.0, 1.5, 1.0, 1.0).unwrap();
    let t15 = m15.nonrelativistic_limit(1.0, &cs).unwrap();
    assert!(t15.monotone_decreasing, "alpha=1.5 radii not decreasing");
    let last15 = t15.rows.last().unwrap().radius.unwrap();
    assert!(last15 < 1e-2, "alpha=1.5: r_h(2^10) = {last15:.3e}");
    println!(
        "criterion 6 PASS: r_h(2^10) = {last3:.6} vs R_h = {classical:.6} (gap {gap:.2e}) at alpha=3; \
         r_h(2^10) = {last15:.2e} -> 0 at alpha=1.5"
    );
}

#[test]
fn criterion_7_variational_selection() {
    // the minimizer in word a1 coincides with the unique circular orbit of
    // the same energy to sup-distance < 1e-3 at N_s = 512
    let mut worst = 0.0_f64;
    for &alpha in &[2.0, 2.5] {
        let model = ModelConfig::new(1.0, alpha, 1.0, 1.0).unwrap();
        let cfg = model.potential();
        let level = EnergyLevel::new(0.5);
        let word = HomotopyWord::parse("a1", 1).unwrap();
        let settings = SolveSettings {
            refinement_schedule: vec![64, 128, 256, 512],
            ..SolveSettings::default()
        };
        let solve = minimize_in_class(&cfg, level, &word, &settings).unwrap();
        let q = maupertuis_to_energy_param(&solve.minimizer, &cfg, level).unwrap();
        let radii = model.radius_from_energy(level.total_energy(&cfg)).unwrap();
        assert_eq!(radii.len(), 1, "unique circular orbit expected");
        let r_star = radii[0];
        let sup: f64 = q
            .samples()
            .iter()
            .map(|u| (u.norm() - r_star).abs())
            .fold(0.0, f64::max);
        worst = worst.max(sup);
        assert!(
            sup < 1e-3,
            "alpha={alpha}: sup distance to the circle {sup:.3e}"
        );
    }
    println!(
        "criterion 7 PASS: minimizer matches the circular orbit, worst sup-distance {worst:.2e}"
    );
}

#[test]
fn criterion_8_homotopy_machinery() {
    let centers = centers_for(2);
    let cuts = CutSystem::for_centers(&centers).unwrap();
    let mut rng = StdRng::seed_from_u64(77);

    // abelianization consistency on 100 random polygonal loops
    let mut done = 0;
    while done < 100 {
        let ring = Vec2::new(rng.gen_range(-1.3..1.3), rng.gen_range(-0.4..0.4));
        let radius = rng.gen_range(0.4..2.2);
        let lp = random_loop(&mut rng, 128, ring, radius, &centers, 0.05);
        let word = match homotopy_word(&lp, &cuts) {
            Ok(w) => w,
            Err(_) => continue, // sample on a cut: regenerate
        };
        let winding: Result<Vec<i64>, _> = centers
            .iter()
            .map(|&c| winding_number(&lp, c))
            .collect();
        let Ok(winding) = winding else { continue };
        assert_eq!(
            word.winding_vector(),
            winding,
            "abelianization mismatch for {}",
            word.display()
        );
        done += 1;
    }

    // push-off preserves words and never increases the functional on 20
    // near-centre loops
    let cfg = PotentialConfig::new(
        centers.clone(),
        vec![1.0, 1.0],
        2.0,
        Perturbation::Zero,
        1.0,
        1.0,
    )
    .unwrap();
    let level = EnergyLevel::new(0.5);
    let epsilon = 0.01;
    let lambda = 1.5;
    for i in 0..20 {
        let center = centers[i % 2];
        let rho = 0.006 + 0.0004 * i as f64;
        let wobble = 0.1 + 0.02 * (i as f64);
        let samples: Vec<Vec2> = (0..64)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * (j as f64) / 64.0 + 0.23;
                let r = rho * (1.0 + 0.2 * (wobble * t).sin().abs());
                center + Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let lp = DiscreteLoop::new(samples).unwrap();
        let before_word = homotopy_word(&lp, &cuts).unwrap();
        let before = lp.functionals(&cfg, level).unwrap().maupertuis;
        let pushed = push_off(&lp, center, epsilon, lambda, MarginNorm::Sup).unwrap();
        let after_word = homotopy_word(&pushed, &cuts).unwrap();
        let after = pushed.functionals(&cfg, level).unwrap().maupertuis;
        assert_eq!(before_word, after_word, "push-off changed the word");
        assert!(
            after <= before,
            "push-off raised the functional: {before:.6e} -> {after:.6e}"
        );
        assert!(
            (pushed.distance_to_center(center).min - lambda * epsilon).abs() < 1e-15
        );
    }
    println!(
        "criterion 8 PASS: abelianization consistent on 100 loops; push-off preserved \
         words and never increased the functional on 20 near-centre loops"
    );
}

#[test]
fn criterion_9_conservation_suite() {
    let opts = IntegratorOptions {
        rtol: 1e-11,
        atol: 1e-11,
        ..IntegratorOptions::default()
    };
    let mut worst_h = 0.0_f64;
    let mut worst_l = 0.0_f64;
    for &(alpha, r) in &[(1.5, 3.0), (1.5, 5.0), (1.2, 1.0)] {
        let model = ModelConfig::new(1.0, alpha, 1.0, 1.0).unwrap();
        let cfg = model.potential();
        let (state, omega) = model.circular_state(r);
        let period = 2.0 * std::f64::consts::PI / omega;
        let run = integrate(&cfg, state, 10.0 * period, &opts).unwrap();
        assert_eq!(run.outcome, IntegrationOutcome::Completed);
        let h_drift = run.max_energy_drift();
        let l_drift = run.max_angular_momentum_drift().unwrap();
        worst_h = worst_h.max(h_drift);
        worst_l = worst_l.max(l_drift);
        assert!(
            h_drift < 1e-9,
            "(alpha, r) = ({alpha}, {r}): H drift {h_drift:.3e}"
        );
        assert!(
            l_drift < 1e-9,
            "(alpha, r) = ({alpha}, {r}): L drift {l_drift:.3e}"
        );
    }
    println!(
        "criterion 9 PASS: over 10 periods at tol 1e-11, H drift <= {worst_h:.2e}, \
         L drift <= {worst_l:.2e} on three circular states"
    );
}
