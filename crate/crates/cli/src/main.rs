//! `relorbit` — prescribed-energy relativistic periodic orbits from the
//! command line.
//!
//! Every subcommand reads a JSON job file (`--job`), writes artifacts into
//! `--out`, and exits nonzero when a verification tolerance is exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relorbit::jobs::{CliError, CliResult, JobSpec};
use relorbit::pipeline;
use relorbit::sweep::run_sweep_to_dir;
use relorbit::tolerances::ToleranceProfile;
use relorbit_core::homotopy::HomotopyWord;

#[derive(Parser)]
#[command(
    name = "relorbit",
    about = "Prescribed-energy periodic solutions of the special-relativistic \
             equation of motion: loop-space solves, Hamiltonian integration, \
             circular-orbit analysis, and parameter sweeps.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON job file (see the README for schemas).
    #[arg(long)]
    job: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Named tolerance profile: default, strict, or quick.
    #[arg(long, default_value = "default")]
    tolerance_profile: String,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize in a homotopy class, reparameterize, verify.
    Solve(CommonArgs),
    /// Integrate the Hamiltonian system forward.
    Integrate(CommonArgs),
    /// Circular-orbit analysis of the single-centre model.
    Circular {
        #[command(subcommand)]
        what: CircularCommand,
    },
    /// Non-relativistic limit table r_h(c).
    Limit(CommonArgs),
    /// Fan a base job out over parameter axes.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads for sweep cells.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Subcommand)]
enum CircularCommand {
    /// Tabulate (r, omega, E) on a log grid.
    Profile(CommonArgs),
    /// Circular radii at a prescribed energy.
    Radius(CommonArgs),
    /// Effective-potential classification at fixed (E, L).
    Classify(CommonArgs),
}

fn profile_for(name: &str) -> CliResult<ToleranceProfile> {
    ToleranceProfile::named(name).ok_or_else(|| {
        CliError::Invalid(format!(
            "unknown tolerance profile `{name}` (expected default, strict, or quick)"
        ))
    })
}

fn expect_command(job: &JobSpec, expected: &str) -> CliResult<()> {
    if job.command_name() == expected {
        Ok(())
    } else {
        Err(CliError::Invalid(format!(
            "job file declares command `{}` but the `{expected}` subcommand was invoked",
            job.command_name()
        )))
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Solve(args) => {
            let job = JobSpec::from_file(&args.job)?;
            expect_command(&job, "solve")?;
            let JobSpec::Solve {
                potential,
                h,
                word,
                settings,
                tolerances,
            } = job
            else {
                unreachable!()
            };
            let cfg = potential.build()?;
            let parsed = HomotopyWord::parse(&word, cfg.n_centers())
                .map_err(|e| CliError::Invalid(format!("word: {e}")))?;
            let s = settings.build()?;
            let tols = tolerances.apply(profile_for(&args.tolerance_profile)?);
            let artifacts = pipeline::run_solve_to_dir(&cfg, h, &parsed, &s, &tols, &args.out)?;
            println!(
                "solve: word {}  winding {:?}  M = {:.9e}  T = {:.9e}  E = {:.9e}",
                artifacts.solve.class_certificate.display(),
                artifacts.solve.class_certificate.winding_vector(),
                artifacts.solve.maupertuis_value,
                artifacts.solution.period,
                artifacts.solution.energy,
            );
            for c in &artifacts.report.checks {
                println!(
                    "  [{}] {} = {:.3e} (<= {:.3e})",
                    if c.pass { "ok" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            Ok(artifacts.report.pass())
        }
        Command::Integrate(args) => {
            let job = JobSpec::from_file(&args.job)?;
            expect_command(&job, "integrate")?;
            let JobSpec::Integrate {
                potential,
                initial,
                t_end,
                rtol,
                atol,
            } = job
            else {
                unreachable!()
            };
            let cfg = potential.build()?;
            let report =
                pipeline::run_integrate_to_dir(&cfg, &initial, t_end, rtol, atol, &args.out)?;
            println!(
                "integrate: wrote {} ({})",
                args.out.join("trajectory.csv").display(),
                if report.pass() { "completed" } else { "halted" }
            );
            Ok(report.pass())
        }
        Command::Circular { what } => {
            let (args, expected) = match &what {
                CircularCommand::Profile(a) => (a, "circular-profile"),
                CircularCommand::Radius(a) => (a, "circular-radius"),
                CircularCommand::Classify(a) => (a, "circular-classify"),
            };
            let job = JobSpec::from_file(&args.job)?;
            expect_command(&job, expected)?;
            let report = pipeline::run_circular_to_dir(&job, &args.out)?;
            println!("{expected}: artifacts in {}", args.out.display());
            Ok(report.pass())
        }
        Command::Limit(args) => {
            let job = JobSpec::from_file(&args.job)?;
            expect_command(&job, "limit")?;
            let JobSpec::Limit {
                model,
                h,
                light_speeds,
            } = job
            else {
                unreachable!()
            };
            let report = pipeline::run_limit_to_dir(&model, h, &light_speeds, &args.out)?;
            println!("limit: table in {}", args.out.join("limit.csv").display());
            Ok(report.pass())
        }
        Command::Sweep { common, workers } => {
            let job = JobSpec::from_file(&common.job)?;
            expect_command(&job, "sweep")?;
            let JobSpec::Sweep { base, axes } = job else {
                unreachable!()
            };
            let tols = profile_for(&common.tolerance_profile)?;
            let ok = run_sweep_to_dir(&base, &axes, workers, &tols, &common.out)?;
            println!(
                "sweep: cells in {} ({})",
                common.out.display(),
                if ok { "all passed" } else { "some cells failed" }
            );
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("relorbit: one or more verifications exceeded tolerance");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("relorbit: {e}");
            ExitCode::FAILURE
        }
    }
}
