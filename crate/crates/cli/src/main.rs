//! Command-line entry point: plan agile actions, generate the flywheel
//! posture trajectory, replay plans against the stabilizers, and re-export
//! solved trajectories.
//!
//! Exit codes: 0 success, 1 solver or simulation failure, 2 usage or
//! configuration error.

mod config;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use config::Config;
use nlp_solver::{solve, SolveStatus};
use ocp::{interpolate_trajectory, transcribe, SavedSolution, Trajectory};
use rayon::prelude::*;
use replay_sim::{run_replay, StabilizerChoice};
use stabilizers::FlywheelTrajectory;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Planning and replay toolkit for centaur-type quadruped template models.
#[derive(Parser)]
#[command(name = "centaur", version, about)]
struct Cli {
    /// Configuration file (JSON). Falls back to $CENTAUR_CONFIG, then to
    /// built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a planned action and export the interpolated trajectory.
    Plan {
        /// One of: squat, half-squat.
        #[arg(long)]
        action: String,
        /// Interpolation step of the exported trajectory, s.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Solve the periodic arm flywheel problem and export `qstar.json`.
    Flywheel,
    /// Replay a planned trajectory in the physics simulator.
    Replay {
        /// Planned trajectory JSON (from `plan`).
        #[arg(long)]
        trajectory: PathBuf,
        /// Comma-separated list from: none, raibert, angmom, ocp.
        #[arg(long, default_value = "none")]
        stabilizer: String,
        /// Flywheel trajectory JSON (required by the `ocp` stabilizer).
        #[arg(long)]
        qstar: Option<PathBuf>,
        /// IMU noise seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run the stabilizer sweep on this many threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-interpolate a saved solution at a different output step.
    Export {
        /// `solution.json` written by `plan`.
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        dt: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.output_dir) {
        eprintln!("error: cannot create output dir: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Plan { action, dt } => cmd_plan(&config, action, *dt, &cli.output_dir),
        Command::Flywheel => cmd_flywheel(&config, &cli.output_dir),
        Command::Replay {
            trajectory,
            stabilizer,
            qstar,
            seed,
            jobs,
        } => cmd_replay(
            &config,
            trajectory,
            stabilizer,
            qstar.as_deref(),
            *seed,
            *jobs,
            &cli.output_dir,
        ),
        Command::Export { solution, dt } => cmd_export(solution, *dt, &cli.output_dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("CENTAUR_CONFIG").map(PathBuf::from));
    match path {
        Some(p) => Config::load(&p),
        None => Ok(Config::default()),
    }
}

fn cmd_plan(config: &Config, action: &str, dt: f64, out: &Path) -> anyhow::Result<ExitCode> {
    let model = template_model::build_centaur_template(&config.template)
        .map_err(|e| anyhow!("template model: {e}"))?;
    let problem = match action {
        "squat" => actions::build_squat_jump(&model, &config.template, &config.squat)
            .map_err(|e| anyhow!("squat problem: {e}"))?,
        "half-squat" => {
            actions::build_half_squat_jump(&model, &config.template, &config.half_squat)
                .map_err(|e| anyhow!("half-squat problem: {e}"))?
        }
        other => {
            return Err(anyhow!(
                "unknown action `{other}`; valid actions: squat, half-squat"
            ))
        }
    };
    let nlp = transcribe(problem).map_err(|e| anyhow!("transcription: {e}"))?;
    let z0 = actions::jump_initial_guess(&nlp);
    let opts = config.solver.to_options(Some(out.join("solver_log.csv")));
    let sol = solve(&nlp, &z0, &opts).context("solver")?;
    eprintln!(
        "plan `{action}`: {:?} after {} iterations (violation {:.3e}, stationarity {:.3e}, {:.1} s)",
        sol.status, sol.iterations, sol.kkt.violation, sol.kkt.stationarity, sol.wall_time_s
    );
    let traj = interpolate_trajectory(&nlp, &sol.z, dt).map_err(|e| anyhow!("interpolate: {e}"))?;
    traj.write_csv(&out.join("trajectory.csv"))?;
    std::fs::write(out.join("trajectory.json"), traj.to_json())?;
    std::fs::write(
        out.join("solution.json"),
        SavedSolution::new(&nlp.problem, &sol.z).to_json(),
    )?;
    if sol.status != SolveStatus::Converged {
        eprintln!("solver did not converge; artifacts written for inspection");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_flywheel(config: &Config, out: &Path) -> anyhow::Result<ExitCode> {
    let arm = template_model::build_arm_model(&config.template)
        .map_err(|e| anyhow!("arm model: {e}"))?;
    let problem = actions::build_flywheel_ocp(&arm, &config.flywheel)
        .map_err(|e| anyhow!("flywheel problem: {e}"))?;
    let n_s = problem.n_intervals;
    let nq = arm.nq();
    let nlp = transcribe(problem).map_err(|e| anyhow!("transcription: {e}"))?;
    let z0 = nlp.default_initial_guess();
    let opts = config.solver.to_options(Some(out.join("solver_log.csv")));
    let sol = solve(&nlp, &z0, &opts).context("solver")?;
    eprintln!(
        "flywheel: {:?} after {} iterations (violation {:.3e})",
        sol.status, sol.iterations, sol.kkt.violation
    );
    if sol.status != SolveStatus::Converged {
        return Ok(ExitCode::from(1));
    }
    let samples: Vec<Vec<f64>> = (0..=n_s)
        .map(|k| {
            let x = nlp.unpack_state(&sol.z, k);
            (0..nq).map(|i| x.q[i]).collect()
        })
        .collect();
    // Close the loop exactly: the periodicity constraint holds to solver
    // tolerance, the replay lookup requires bit-level periodicity.
    let mut samples = samples;
    let first = samples[0].clone();
    *samples.last_mut().unwrap() = first;
    let qstar = FlywheelTrajectory {
        n_intervals: n_s,
        samples,
    };
    qstar.validate().map_err(|e| anyhow!("flywheel export: {e}"))?;
    std::fs::write(out.join("qstar.json"), qstar.to_json())?;
    std::fs::write(
        out.join("solution.json"),
        SavedSolution::new(&nlp.problem, &sol.z).to_json(),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn parse_stabilizers(
    names: &str,
    qstar: Option<&Path>,
) -> anyhow::Result<Vec<StabilizerChoice>> {
    names
        .split(',')
        .map(|name| match name.trim() {
            "none" => Ok(StabilizerChoice::None),
            "raibert" => Ok(StabilizerChoice::Raibert),
            "angmom" => Ok(StabilizerChoice::AngMom),
            "ocp" => {
                let path = qstar.ok_or_else(|| {
                    anyhow!("the `ocp` stabilizer needs --qstar <qstar.json> from `flywheel`")
                })?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| anyhow!("cannot read {}: {e}", path.display()))?;
                Ok(StabilizerChoice::OcpPosture(
                    FlywheelTrajectory::from_json(&text).map_err(|e| anyhow!("qstar: {e}"))?,
                ))
            }
            other => Err(anyhow!(
                "unknown stabilizer `{other}`; valid choices: none, raibert, angmom, ocp"
            )),
        })
        .collect()
}

fn cmd_replay(
    config: &Config,
    trajectory: &Path,
    stabilizer: &str,
    qstar: Option<&Path>,
    seed: u64,
    jobs: usize,
    out: &Path,
) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(trajectory)
        .map_err(|e| anyhow!("cannot read trajectory {}: {e}", trajectory.display()))?;
    let traj = Trajectory::from_json(&text).map_err(|e| anyhow!("trajectory: {e}"))?;
    let model = template_model::build_centaur_with_arms(&config.template)
        .map_err(|e| anyhow!("replay model: {e}"))?;
    let choices = parse_stabilizers(stabilizer, qstar)?;
    let mut sim_cfg = config.sim.clone();
    sim_cfg.seed = seed;

    let run_one = |choice: &StabilizerChoice| -> anyhow::Result<(String, replay_sim::RunSummary)> {
        let log = run_replay(&model, &traj, choice, &config.stabilizer, &sim_cfg)
            .map_err(|e| anyhow!("replay ({}): {e}", choice.name()))?;
        let dir = if choices.len() > 1 {
            out.join(choice.name())
        } else {
            out.to_path_buf()
        };
        std::fs::create_dir_all(&dir)?;
        log.write_csv(&dir.join("runlog.csv"))?;
        let summary = log.summary();
        std::fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary)?,
        )?;
        Ok((choice.name().to_string(), summary))
    };

    let results: Vec<anyhow::Result<(String, replay_sim::RunSummary)>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
        pool.install(|| choices.par_iter().map(run_one).collect())
    } else {
        choices.iter().map(run_one).collect()
    };
    let mut failed = false;
    for r in results {
        match r {
            Ok((name, s)) => eprintln!(
                "replay `{name}`: peak |pitch| {:.4} rad, settling {:.2} s, max force {:.0} N",
                s.peak_pitch_rad, s.settling_time_s, s.max_contact_force_n
            ),
            Err(e) => {
                eprintln!("error: {e:#}");
                failed = true;
            }
        }
    }
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_export(solution: &Path, dt: f64, out: &Path) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(solution)
        .map_err(|e| anyhow!("cannot read solution {}: {e}", solution.display()))?;
    let (problem, z) = SavedSolution::from_json(&text).map_err(|e| anyhow!("solution: {e}"))?;
    let nlp = transcribe(problem).map_err(|e| anyhow!("transcription: {e}"))?;
    let traj = interpolate_trajectory(&nlp, &z, dt).map_err(|e| anyhow!("interpolate: {e}"))?;
    traj.write_csv(&out.join("trajectory.csv"))?;
    std::fs::write(out.join("trajectory.json"), traj.to_json())?;
    Ok(ExitCode::SUCCESS)
}
