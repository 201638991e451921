use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use gainsynth_core::abstraction::{build_observer, build_partition, delta_gain_bound_weighted, ObserverMachine};
use gainsynth_core::rational::{parse_rational, Decimal, Fraction};
use gainsynth_core::simulate::{certificate_violation, closed_loop_sim, empirical_objective_check};
use gainsynth_core::synthesis::{synthesize_level, synthesize_pipeline, AttemptOutcome, LevelReport, Synthesis};
use gainsynth_core::Rational;

use crate::artifacts::{
    controller_level, controller_text, parse_controller, verify_certificate_file, write_trajectory_csv,
    CertificateFile,
};
use crate::scenario::{Scenario, Setup};
use crate::Error;

/// Controller state count reported for the reference tank.
const REFERENCE_CONTROLLER_STATES: usize = 190;

#[derive(Parser, Debug)]
#[command(name = "gainsynth", version, about = "Finite-state abstraction and gain-based controller synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the observer at one level, dump its edge list and print its error gain.
    Abstract {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        level: u32,
        /// Edge list destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the error gain bound of the observer at one level.
    Gain {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        level: u32,
    },
    /// Synthesize at one level, or refine level by level until synthesis succeeds.
    Synthesize {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        level: Option<u32>,
        /// Directory for certificate.json and controller.txt.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the plant in closed loop with a controller table and print CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        controller: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long)]
        steps: usize,
        /// Observer level; read from the controller header when absent.
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a certificate document.
    Certify {
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Run the reference tank end to end and write every artifact.
    DemoTank {
        #[arg(long, default_value = "demo-tank")]
        out_dir: PathBuf,
    },
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 success, 2 infeasible, 3 configuration error,
/// 4 certificate failure.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 3;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn observer_at(setup: &Setup, level: u32) -> Result<ObserverMachine, Error> {
    let partition =
        build_partition(&setup.plant, setup.config.base, level).map_err(|e| Error::Config(e.to_string()))?;
    build_observer(&setup.plant, &partition).map_err(|e| Error::Config(e.to_string()))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Error> {
    match command {
        Command::Abstract { scenario, level, out: dest } => {
            let setup = Scenario::load(&scenario)?.setup()?;
            let obs = observer_at(&setup, level)?;
            let edges = obs.edge_list().to_string();
            match dest {
                Some(path) => write_file(&path, &edges)?,
                None => out.write_all(edges.as_bytes()).map_err(io)?,
            }
            let (bound, _) = delta_gain_bound_weighted(&obs, &setup.delta).map_err(|e| Error::Config(e.to_string()))?;
            writeln!(out, "level {level}: {} observer states, delta gain bound {bound}", obs.state_count()).map_err(io)
        }
        Command::Gain { scenario, level } => {
            let setup = Scenario::load(&scenario)?.setup()?;
            let obs = observer_at(&setup, level)?;
            let (bound, _) = delta_gain_bound_weighted(&obs, &setup.delta).map_err(|e| Error::Config(e.to_string()))?;
            writeln!(out, "{bound}").map_err(io)
        }
        Command::Synthesize { scenario, level, out_dir } => {
            let scenario = Scenario::load(&scenario)?;
            let setup = scenario.setup()?;
            let success = synthesize(&setup, level, out)?;
            if let Some(dir) = out_dir {
                write_synthesis(&dir, &scenario, &success)?;
                writeln!(out, "wrote {}", dir.display()).map_err(io)?;
            }
            Ok(())
        }
        Command::Simulate {
            scenario,
            controller,
            x0,
            steps,
            level,
            out: dest,
        } => {
            let setup = Scenario::load(&scenario)?.setup()?;
            let text = read_file(&controller)?;
            let level = level
                .or_else(|| controller_level(&text))
                .ok_or_else(|| Error::Config("controller level unknown; pass --level".into()))?;
            let obs = observer_at(&setup, level)?;
            let k = parse_controller(&text, &obs)?;
            let x0 = parse_rational(&x0).ok_or_else(|| Error::Config(format!("--x0: not a rational: {x0:?}")))?;
            let traj = closed_loop_sim(&setup.plant, &obs, &k, &setup.objective, x0, steps)
                .map_err(|e| Error::Config(e.to_string()))?;
            match dest {
                Some(path) => {
                    let file = fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    write_trajectory_csv(file, &setup.plant, &traj)
                }
                None => write_trajectory_csv(&mut *out, &setup.plant, &traj),
            }
        }
        Command::Certify { certificate } => {
            let file = CertificateFile::from_json(&read_file(&certificate)?)?;
            let v = verify_certificate_file(&file)?;
            writeln!(
                out,
                "certificate valid: level {}, gamma bound {}, tau {}, B = {}",
                v.certificate.level,
                Fraction(v.certificate.gamma_bound),
                Fraction(v.certificate.tau),
                Fraction(v.certificate.value_bound)
            )
            .map_err(io)
        }
        Command::DemoTank { out_dir } => demo_tank(&out_dir, out),
    }
}

fn print_report(out: &mut dyn Write, r: &LevelReport) -> Result<(), Error> {
    write!(
        out,
        "level {}: {} observer states, delta gain bound {}",
        r.level, r.observer_states, r.delta_bound
    )
    .map_err(io)?;
    for a in &r.attempts {
        match a.outcome {
            AttemptOutcome::Converged { initial_value, iterations } => write!(
                out,
                "; tau {}: converged after {iterations} sweeps, V(initial) = {}",
                Fraction(a.tau),
                Fraction(initial_value)
            ),
            AttemptOutcome::Diverged { iterations, .. } => {
                write!(out, "; tau {}: diverged after {iterations} sweeps", Fraction(a.tau))
            }
        }
        .map_err(io)?;
    }
    writeln!(out).map_err(io)
}

fn synthesize(setup: &Setup, level: Option<u32>, out: &mut dyn Write) -> Result<Synthesis, Error> {
    let (reports, success) = match level {
        Some(level) => {
            let (report, success) = synthesize_level(&setup.plant, &setup.objective, &setup.delta, level, &setup.config)
                .map_err(|e| Error::Config(e.to_string()))?;
            (vec![report], success)
        }
        None => {
            let outcome = synthesize_pipeline(&setup.plant, &setup.objective, &setup.delta, &setup.config)
                .map_err(|e| Error::Config(e.to_string()))?;
            (outcome.levels, outcome.success)
        }
    };
    for r in &reports {
        print_report(out, r)?;
    }
    let s = success.ok_or_else(|| {
        let levels: Vec<String> = reports.iter().map(|r| r.level.to_string()).collect();
        Error::Infeasible(format!("synthesis is infeasible at level(s) {}", levels.join(", ")))
    })?;
    writeln!(
        out,
        "success at level {}: controller with {} states (reference {}), B = {}",
        s.level,
        s.controller.state_count(),
        REFERENCE_CONTROLLER_STATES,
        Fraction(s.certificate.value_bound)
    )
    .map_err(io)?;
    Ok(s)
}

fn write_synthesis(dir: &Path, scenario: &Scenario, s: &Synthesis) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let cert = dir.join("certificate.json");
    write_file(&cert, &CertificateFile::new(scenario, &s.certificate, &s.controller).to_json())?;
    write_file(&dir.join("controller.txt"), &controller_text(&s.controller, s.level))?;
    Ok(cert)
}

fn demo_tank(dir: &Path, out: &mut dyn Write) -> Result<(), Error> {
    let scenario = Scenario::tank();
    let setup = scenario.setup()?;
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write_file(&dir.join("scenario.json"), &(scenario.to_json() + "\n"))?;

    let s = synthesize(&setup, None, out)?;
    for level in 1..=s.level {
        let obs = observer_at(&setup, level)?;
        write_file(&dir.join(format!("observer-level{level}.txt")), &obs.edge_list().to_string())?;
    }
    let cert_path = write_synthesis(dir, &scenario, &s)?;
    let verified = verify_certificate_file(&CertificateFile::from_json(&read_file(&cert_path)?)?)?;
    writeln!(out, "certificate verified: {}", cert_path.display()).map_err(io)?;

    let traj_dir = dir.join("trajectories");
    fs::create_dir_all(&traj_dir).map_err(|e| Error::Io(format!("{}: {e}", traj_dir.display())))?;
    for &x0 in &scenario.sim.x0 {
        run_demo_trajectory(&setup, &verified, x0.0, scenario.sim.steps, &traj_dir, out)?;
    }
    Ok(())
}

fn run_demo_trajectory(
    setup: &Setup,
    v: &crate::artifacts::Verified,
    x0: Rational,
    steps: usize,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let plant = &setup.plant;
    let traj = closed_loop_sim(plant, &v.observer, &v.controller, &setup.objective, x0, steps)
        .map_err(|e| Error::Config(e.to_string()))?;
    let vs: Vec<u8> = traj.rows.iter().map(|r| r.v).collect();
    let report = empirical_objective_check(&vs, &setup.objective).map_err(|e| Error::Config(e.to_string()))?;
    let bound = certificate_violation(&traj, &v.certificate, &setup.objective, &setup.delta)
        .map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join(format!("x0-{}.csv", Decimal(x0)));
    let file = fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_trajectory_csv(file, plant, &traj)?;
    let settled = report.last_violation.map_or(0, |t| t + 1);
    writeln!(
        out,
        "x0 = {}: in band from t = {settled}, min partial sum {}, certificate bound {}",
        Decimal(x0),
        Fraction(report.min_partial_sum),
        if bound.is_none() { "holds" } else { "VIOLATED" }
    )
    .map_err(io)?;
    if let Some(t) = bound {
        return Err(Error::Certificate(format!("closed-loop run from x0 = {} breaks the bound at t = {t}", Decimal(x0))));
    }
    Ok(())
}
