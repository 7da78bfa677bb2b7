//! Command pipelines: run a validated job, verify, and write artifacts.
//!
//! The solve pipeline is seed → minimize → constancy resample → physical
//! time → certificates (energy law, subluminality, equation-of-motion
//! residual, independent one-period integration). Every threshold comes
//! from the active tolerance profile; the process exit status is zero iff
//! every verification passed.

use std::path::Path;

use relorbit_core::homotopy::HomotopyWord;
use relorbit_core::integrator::{
    integrate, momentum_from_velocity, IntegrationOutcome, IntegratorOptions, PhaseState,
};
use relorbit_core::loopspace::DiscreteLoop;
use relorbit_core::optimizer::{minimize_in_class, poincare_bound_check, SolveResult};
use relorbit_core::potentials::{EnergyLevel, PotentialConfig};
use relorbit_core::reparam::{
    constancy_spread, energy_law_residual, energy_param_to_time, maupertuis_to_energy_param,
    ode_residual, PeriodicSolution,
};
use relorbit_core::Vec2;
use serde_json::json;

use crate::io;
use crate::jobs::{CliError, CliResult, InitialStateSpec, JobSpec};
use crate::report::{Check, Report};
use crate::tolerances::ToleranceProfile;

/// Everything a solve run produces, before any files are written.
pub struct SolveArtifacts {
    pub solve: SolveResult,
    pub energy_loop: DiscreteLoop,
    pub solution: PeriodicSolution,
    pub report: Report,
    pub constancy: (f64, f64),
    pub ode_residual: f64,
    pub energy_law: f64,
    pub periodicity_gap: f64,
}

/// Run a solve job end to end (no file output).
pub fn run_solve(
    potential: &PotentialConfig,
    h: f64,
    word: &HomotopyWord,
    settings: &relorbit_core::optimizer::SolveSettings,
    tols: &ToleranceProfile,
) -> CliResult<SolveArtifacts> {
    let level = EnergyLevel::new(h);
    let solve = minimize_in_class(potential, level, word, settings)?;

    let energy_loop = maupertuis_to_energy_param(&solve.minimizer, potential, level)?;
    let constancy = constancy_spread(&energy_loop, potential, level)?;
    let solution = energy_param_to_time(&energy_loop, potential, level, tols.n_time)?;

    let energy_law = energy_law_residual(&solution, potential, level)?;
    let speed_ratio = solution.max_speed_ratio(potential);
    let residual = ode_residual(&solution, potential)?;

    // independent integration over one period from the solution's first node
    let p0 = momentum_from_velocity(potential, solution.velocities[0])?;
    let run = integrate(
        potential,
        PhaseState::new(solution.positions[0], p0),
        solution.period,
        &IntegratorOptions {
            rtol: tols.integrator_rtol,
            atol: tols.integrator_atol,
            ..IntegratorOptions::default()
        },
    )?;
    let periodicity_gap = if run.outcome == IntegrationOutcome::Completed {
        (run.final_state().position - solution.positions[0]).norm()
    } else {
        f64::INFINITY
    };

    let bound = poincare_bound_check(&solve.minimizer, potential);

    let mut report = Report::default();
    report.push(Check::flag("optimizer_converged", solve.converged));
    report.push(Check::flag(
        "class_certificate_matches",
        &solve.class_certificate == word,
    ));
    report.push(Check::flag(
        "margins_respected",
        solve
            .margin_report
            .iter()
            .all(|&m| m >= settings.epsilon * (1.0 - 1e-12)),
    ));
    report.push(Check::flag("loop_space_bound", bound.holds));
    report.push(Check::max(
        "constancy_spread",
        constancy.1,
        tols.constancy_spread_max,
    ));
    report.push(Check::max("energy_law_residual", energy_law, tols.energy_law_max));
    report.push(Check::strict("max_speed_over_c", speed_ratio, 1.0));
    report.push(Check::max("ode_residual", residual, tols.ode_residual_max));
    report.push(Check::max(
        "periodicity_gap",
        periodicity_gap,
        tols.periodicity_max,
    ));

    Ok(SolveArtifacts {
        solve,
        energy_loop,
        solution,
        report,
        constancy,
        ode_residual: residual,
        energy_law,
        periodicity_gap,
    })
}

/// Run a solve job and write its artifact set under `out`.
pub fn run_solve_to_dir(
    potential: &PotentialConfig,
    h: f64,
    word: &HomotopyWord,
    settings: &relorbit_core::optimizer::SolveSettings,
    tols: &ToleranceProfile,
    out: &Path,
) -> CliResult<SolveArtifacts> {
    let artifacts = run_solve(potential, h, word, settings, tols)?;
    std::fs::create_dir_all(out)?;

    io::write_loop_csv(&out.join("minimizer.csv"), &artifacts.solve.minimizer)?;
    io::write_json(
        &out.join("minimizer.json"),
        &io::loop_to_json(&artifacts.solve.minimizer),
    )?;
    io::write_solution_csv(&out.join("solution.csv"), &artifacts.solution)?;
    io::write_json(
        &out.join("solution.json"),
        &io::solution_to_json(
            &artifacts.solution,
            &json!({
                "energy_law": artifacts.energy_law,
                "ode_residual": artifacts.ode_residual,
                "constancy_spread": artifacts.constancy.1,
                "periodicity_gap": artifacts.periodicity_gap,
            }),
        ),
    )?;
    io::write_json(
        &out.join("solve_result.json"),
        &json!({
            "maupertuis_value": artifacts.solve.maupertuis_value,
            "gradient_norm": artifacts.solve.gradient_norm,
            "iterations": artifacts.solve.iterations,
            "converged": artifacts.solve.converged,
            "word": artifacts.solve.class_certificate.display(),
            "winding_vector": artifacts.solve.class_certificate.winding_vector(),
            "word_is_primitive": artifacts.solve.word_is_primitive,
            "margins": artifacts.solve.margin_report,
            "lambda": artifacts.solution.lambda,
            "period": artifacts.solution.period,
            "energy": artifacts.solution.energy,
        }),
    )?;

    // line-delimited iteration log
    let mut log = String::new();
    for rec in &artifacts.solve.history {
        log.push_str(
            &json!({
                "iteration": rec.iteration,
                "stage": rec.stage,
                "value": rec.value,
                "gradient_norm": rec.gradient_norm,
                "min_margin": rec.min_margin,
            })
            .to_string(),
        );
        log.push('\n');
    }
    std::fs::write(out.join("iterations.jsonl"), log)?;

    io::write_json(&out.join("report.json"), &artifacts.report.to_json())?;
    Ok(artifacts)
}

/// Integration runs: trajectory CSV plus a drift report.
pub fn run_integrate_to_dir(
    potential: &PotentialConfig,
    initial: &InitialStateSpec,
    t_end: f64,
    rtol: Option<f64>,
    atol: Option<f64>,
    out: &Path,
) -> CliResult<Report> {
    let x = Vec2::from(initial.x);
    let p = match (initial.p, initial.v) {
        (Some(p), None) => Vec2::from(p),
        (None, Some(v)) => momentum_from_velocity(potential, Vec2::from(v))?,
        _ => unreachable!("validated by JobSpec::validate"),
    };
    let opts = IntegratorOptions {
        rtol: rtol.unwrap_or(1e-10),
        atol: atol.unwrap_or(1e-12),
        ..IntegratorOptions::default()
    };
    let res = integrate(potential, PhaseState::new(x, p), t_end, &opts)?;

    std::fs::create_dir_all(out)?;
    io::write_trajectory_csv(&out.join("trajectory.csv"), &res, potential)?;

    let mut report = Report::default();
    report.push(Check::flag(
        "completed",
        res.outcome == IntegrationOutcome::Completed,
    ));
    let outcome = match res.outcome {
        IntegrationOutcome::Completed => json!("completed"),
        IntegrationOutcome::CollisionApproach { center, time } => {
            json!({"collision_approach": {"center": center, "time": time}})
        }
        IntegrationOutcome::StepUnderflow { time } => json!({"step_underflow": {"time": time}}),
    };
    io::write_json(
        &out.join("report.json"),
        &json!({
            "outcome": outcome,
            "final_time": res.final_time(),
            "max_energy_drift": res.max_energy_drift(),
            "max_angular_momentum_drift": res.max_angular_momentum_drift(),
            "steps_accepted": res.stats.accepted,
            "steps_rejected": res.stats.rejected,
            "pass": report.pass(),
        }),
    )?;
    Ok(report)
}

/// Circular-analysis commands: CSV tables and classification JSON.
pub fn run_circular_to_dir(job: &JobSpec, out: &Path) -> CliResult<Report> {
    std::fs::create_dir_all(out)?;
    let mut report = Report::default();
    match job {
        JobSpec::CircularProfile {
            model,
            r_min,
            r_max,
            points,
        } => {
            let m = model.build()?;
            let profile = m.profile(*r_min, *r_max, *points)?;
            let rows: Vec<Vec<f64>> = profile
                .rows
                .iter()
                .map(|r| vec![r.radius, r.omega, r.energy])
                .collect();
            io::write_table_csv(&out.join("profile.csv"), "r,omega,E", &rows)?;
            report.push(Check::flag("profile_rows", rows.len() == *points));
        }
        JobSpec::CircularRadius { model, energy } => {
            let m = model.build()?;
            match m.radius_from_energy(*energy) {
                Ok(radii) => {
                    io::write_json(
                        &out.join("radii.json"),
                        &json!({
                            "energy": energy,
                            "threshold": m.energy_threshold(),
                            "radii": radii,
                        }),
                    )?;
                    report.push(Check::flag("circular_orbit_exists", true));
                }
                Err(relorbit_core::Error::NoCircularOrbit { threshold, .. }) => {
                    io::write_json(
                        &out.join("radii.json"),
                        &json!({
                            "energy": energy,
                            "threshold": threshold,
                            "radii": [],
                        }),
                    )?;
                    report.push(Check::flag("circular_orbit_exists", false));
                }
                Err(e) => return Err(e.into()),
            }
        }
        JobSpec::CircularClassify {
            model,
            energy,
            angular_momentum,
        } => {
            let m = model.build()?;
            let c = m.classify_orbits(*energy, *angular_momentum)?;
            let verdict = match c.verdict {
                relorbit_core::circular::OrbitVerdict::NoBoundedOrbits => "no-bounded-orbits",
                relorbit_core::circular::OrbitVerdict::CircularOnly => "circular-only",
                relorbit_core::circular::OrbitVerdict::AnnulusPresent => "annulus-present",
            };
            io::write_json(
                &out.join("classification.json"),
                &json!({
                    "energy": c.energy,
                    "angular_momentum": c.angular_momentum,
                    "critical_radii": c.critical_radii,
                    "phi_at_critical": c.phi_at_critical,
                    "zeros": c.zeros,
                    "annuli": c.annuli.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
                    "verdict": verdict,
                }),
            )?;
            report.push(Check::flag("classified", true));
        }
        _ => {
            return Err(CliError::Invalid(
                "run_circular_to_dir expects a circular-* job".into(),
            ))
        }
    }
    io::write_json(&out.join("report.json"), &report.to_json())?;
    Ok(report)
}

/// Non-relativistic limit table: `(c, r_h)` CSV plus summary JSON.
pub fn run_limit_to_dir(
    model: &crate::jobs::ModelSpec,
    h: f64,
    light_speeds: &[f64],
    out: &Path,
) -> CliResult<Report> {
    let m = model.build()?;
    let table = m.nonrelativistic_limit(h, light_speeds)?;
    std::fs::create_dir_all(out)?;

    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .filter_map(|r| r.radius.map(|rad| vec![r.light_speed, rad]))
        .collect();
    io::write_table_csv(&out.join("limit.csv"), "c,r_h", &rows)?;

    let mut report = Report::default();
    report.push(Check::flag("monotone_decreasing", table.monotone_decreasing));
    report.push(Check::flag("all_rows_defined", rows.len() == table.rows.len()));
    io::write_json(
        &out.join("limit.json"),
        &json!({
            "h": h,
            "classical_radius": table.classical_radius,
            "monotone_decreasing": table.monotone_decreasing,
            "rows": table.rows.iter().map(|r| json!({
                "c": r.light_speed,
                "r_h": r.radius,
            })).collect::<Vec<_>>(),
            "pass": report.pass(),
        }),
    )?;
    Ok(report)
}
