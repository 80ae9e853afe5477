//! `invfem` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure or failed verification,
//! 2 configuration/schema error, 3 solver divergence (report still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use invfem::bench::{run_tet_bench, BenchOptions, BenchReport};
use invfem::config::{execute, from_value, load_value, RunConfig, RunDirection, RunStatus};
use invfem::mesh::write_vtk;
use invfem::verify::{beam_report, shear_report, BeamOptions, ShearOptions};
use invfem::Error;
use log::info;
use serde::Serialize;
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "invfem", version, about = "Forward and one-shot inverse hyperelasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set solver.max_iter=40`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory for reports and VTK files.
    #[arg(long, default_value = ".")]
    output: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the deformed shape of the configured mesh.
    Forward(Common),
    /// Recover the unloaded shape of the configured (deformed) mesh.
    Inverse(Common),
    /// Recover the unloaded shape with the iterative geometric algorithm.
    Iga(Common),
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Run a benchmark.
    Bench {
        #[arg(value_enum)]
        target: BenchTarget,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Suite {
    Shear,
    Beam,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum BenchTarget {
    Tet,
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Config { .. }) => 2,
            Some(Error::Divergence { .. }) => 3,
            _ => 1,
        };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn schema_error(path: &str, message: impl Into<String>) -> Failure {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
    .into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = match std::env::var("INVFEM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => {
                eprintln!("error: config error at `INVFEM_THREADS`: expected a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        },
        Err(_) => None,
    };
    let result = match threads {
        Some(n) => invfem::par::with_threads(n, || run(cli)),
        None => run(cli),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Forward(c) => solve(c, RunDirection::Forward),
        Command::Inverse(c) => solve(c, RunDirection::Inverse),
        Command::Iga(c) => solve(c, RunDirection::Iga),
        Command::Verify { suite, common } => verify(suite, common),
        Command::Bench { target: BenchTarget::Tet, common } => bench(common),
    }
}

fn output_path(dir: &Path, file: &Path) -> PathBuf {
    dir.join(file)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let text = serde_json::to_string_pretty(value).context("serializing report")?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn load(path: &Path, overrides: &[String]) -> Result<Value, Failure> {
    load_value(path, overrides).map_err(|e| match e {
        Error::Io(io) => Failure {
            code: 1,
            error: anyhow::Error::from(io).context(format!("reading {}", path.display())),
        },
        other => other.into(),
    })
}

/// Options for the suites: defaults, optionally from a file, then overrides.
fn options<T: serde::de::DeserializeOwned + Serialize + Default>(c: &Common) -> Result<T, Failure> {
    let mut value = match &c.config {
        Some(path) => load(path, &[])?,
        None => serde_json::to_value(T::default()).context("default options")?,
    };
    for o in &c.overrides {
        invfem::config::apply_override(&mut value, o)?;
    }
    Ok(from_value(value)?)
}

fn solve(c: Common, direction: RunDirection) -> Result<u8, Failure> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| schema_error("--config", "solve commands need a configuration file"))?;
    let mut value = load(path, &c.overrides)?;
    if let Value::Object(map) = &mut value {
        map.insert("direction".into(), serde_json::to_value(direction).expect("direction"));
    }
    let cfg = RunConfig::from_value(value, path.parent().unwrap_or(Path::new(".")))?;
    let outcome = execute(&cfg, c.seed)?;
    let report_path = output_path(&c.output, &cfg.output.report_path);
    write_json(&report_path, &outcome.report)?;
    if let (Some(vtk), Some(a)) = (&cfg.output.vtk_path, &outcome.analysis) {
        let vtk = output_path(&c.output, vtk);
        let mut fields = vec![("displacement", &a.displacement)];
        if let Some(p) = &a.pressure {
            fields.push(("pressure", p));
        }
        write_vtk(&a.input_mesh, &fields, &vtk)?;
        let stem = vtk.file_stem().and_then(|s| s.to_str()).unwrap_or("solution");
        write_vtk(&a.updated_mesh, &[], vtk.with_file_name(format!("{stem}_updated.vtk")))?;
    }
    match outcome.report.status {
        RunStatus::Converged => {
            let d = outcome.report.displacement.as_ref().expect("converged runs have a displacement");
            println!(
                "{:?}: converged, {} dofs, max |u| = {:.6e}",
                direction, outcome.report.dofs, d.max_magnitude
            );
            if let Some(iga) = &outcome.report.iga {
                println!("IGA: {} iterations, final mismatch {:.3e}", iga.iterations, iga.history.last().unwrap_or(&f64::NAN));
            }
            println!("report: {}", report_path.display());
            Ok(0)
        }
        RunStatus::Diverged => {
            eprintln!(
                "error: {}",
                outcome.report.error.as_deref().unwrap_or("solver diverged")
            );
            eprintln!("report: {}", report_path.display());
            Ok(3)
        }
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verify(suite: Suite, c: Common) -> Result<u8, Failure> {
    match suite {
        Suite::Shear => {
            let opts: ShearOptions = options(&c)?;
            let report = shear_report(&opts.solver, &opts.generalized_divisions)?;
            let summary = report.summary();
            println!("simple shear: max relative error {:.3e}", summary.max_simple_error);
            println!("generalized shear (divisions, mean energy error, mean stress error):");
            for r in &report.generalized {
                println!(
                    "  {:>3}  {:.4e}  {:.4e}",
                    r.case.divisions, r.mean_energy_error, r.mean_stress_error
                );
            }
            println!("inverse shear: max nodal error {:.3e}", summary.max_inverse_error);
            println!("{}", verdict(summary.passed));
            write_json(
                &c.output.join("verify_shear.json"),
                &serde_json::json!({"summary": summary, "report": report}),
            )?;
            Ok(if summary.passed { 0 } else { 1 })
        }
        Suite::Beam => {
            let opts: BeamOptions = options(&c)?;
            let report = beam_report(&opts)?;
            for r in &report.refinement {
                println!(
                    "beam {:>3} x {}: {:>6} dofs, tip {:.3} mm",
                    r.axial,
                    r.radial,
                    r.dofs,
                    r.tip_deflection * 1e3
                );
            }
            if let Some(t) = &report.round_trip {
                println!(
                    "round trip: max vertex error {:.4} mm ({:.3}% of length), stacked l2 {:.4} mm",
                    t.error.max * 1e3,
                    t.relative_max * 100.0,
                    t.error.l2 * 1e3
                );
            }
            println!("{}", verdict(report.passed));
            write_json(&c.output.join("verify_beam.json"), &report)?;
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

fn print_bench(report: &BenchReport) {
    println!("single tetrahedron, seed {}, {} draws per part", report.seed, report.draws_per_part);
    println!(
        "{:<6} {:<10} {:>10} {:>10} {:>10} {:>10} {:>8} {:>10}",
        "part", "method", "avg err", "sd err", "min err", "max err", "avg it", "avg ms"
    );
    for p in &report.parts {
        let rows = [
            ("one-shot", &p.one_shot),
            ("IGA(1)", &p.iga),
            ("IGA(2)", &p.iga_matched),
        ];
        for (name, m) in rows {
            println!(
                "{:<6} {:<10} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>8.2} {:>10.3}",
                p.part, name, m.error.mean, m.error.sd, m.error.min, m.error.max, m.iterations.mean, m.time_ms.mean
            );
        }
        println!(
            "part {}: IGA(2)/one-shot time ratio {:.2}, one-shot faster in {:.1}% of cases, IGA(1) failures {}",
            p.part,
            p.time_ratio_matched,
            100.0 * p.one_shot_time_wins,
            p.iga.failures
        );
    }
}

fn bench(c: Common) -> Result<u8, Failure> {
    let mut opts: BenchOptions = options(&c)?;
    opts.seed = c.seed;
    if opts.draws_per_part == 0 {
        return Err(schema_error("draws_per_part", "must be at least 1"));
    }
    let report = run_tet_bench(&opts)?;
    print_bench(&report);
    write_json(&c.output.join("bench_tet.json"), &report)?;
    Ok(0)
}
