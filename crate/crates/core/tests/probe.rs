use relorbit_core::homotopy::HomotopyWord;
use relorbit_core::loopspace::DiscreteLoop;
use relorbit_core::optimizer::{minimize_in_class, SolveSettings};
use relorbit_core::potentials::{EnergyLevel, PotentialConfig};
use relorbit_core::reparam::{energy_param_to_time, maupertuis_to_energy_param, ode_residual};
use relorbit_core::Vec2;

#[test]
fn probe_floor_source() {
    let cfg = PotentialConfig::single_center(1.0, 2.0, 1.0, 1.0).unwrap();
    let level = EnergyLevel::new(0.5);

    // exact circle polygon, skipping the optimizer entirely
    let r = 0.668740304976422_f64;
    let circle = DiscreteLoop::circle(Vec2::ZERO, r, 512).unwrap();
    for &nt in &[256usize, 512, 1024, 2048] {
        let sol = energy_param_to_time(&circle, &cfg, level, nt).unwrap();
        let res = ode_residual(&sol, &cfg).unwrap();
        print!("  circle {nt}: {res:.2e}");
    }
    println!();

    // pipeline q-loop
    let word = HomotopyWord::parse("a1", 1).unwrap();
    let settings = SolveSettings {
        refinement_schedule: vec![64, 128, 256, 512],
        ..SolveSettings::default()
    };
    let solve = minimize_in_class(&cfg, level, &word, &settings).unwrap();
    let q = maupertuis_to_energy_param(&solve.minimizer, &cfg, level).unwrap();
    // spectrum of q radius signal
    let n = q.grid_size();
    for k in [1usize, 2, 64, 127, 128] {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, p) in q.samples().iter().enumerate() {
            let ang = 2.0 * std::f64::consts::PI * (k * j % n) as f64 / n as f64;
            a += p.x * ang.cos();
            b += p.x * ang.sin();
        }
        println!("  q: k={k} |c|={:.2e}", (a * a + b * b).sqrt() / n as f64);
    }
    for &nt in &[256usize, 512, 1024] {
        let sol = energy_param_to_time(&q, &cfg, level, nt).unwrap();
        let res = ode_residual(&sol, &cfg).unwrap();
        print!("  q {nt}: {res:.2e}");
    }
    println!();
}
