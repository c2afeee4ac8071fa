use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kirigami_cli::commands::{self, CliError};
use kirigami_cli::StudyConfig;
use kirigami_core::analytic::FreeVariable;

#[derive(Parser, Debug)]
#[command(name = "kirigami", version, about = "Design and simulation of bistable trilayer Kirigami composites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Study config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` from the config, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config value, e.g. `--set prestretch.values=[1.4]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Free {
    Prestretch,
    Size,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Laminate stiffnesses and analytic curvature/height per (L, λ).
    Analyze(Common),
    /// Sweep CSV over sizes and pre-stretches, optionally simulated.
    Sweep(Common),
    /// Solve for pre-stretch or size that hits a target H/L.
    Design {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, value_enum)]
        free: Option<Free>,
    },
    /// Stable states as OBJ files plus summary.json.
    Simulate(Common),
    /// Snap-through force-displacement curve.
    Snap(Common),
}

fn run(cli: Cli) -> Result<String, CliError> {
    let common = match &cli.command {
        Command::Analyze(c) | Command::Sweep(c) | Command::Simulate(c) | Command::Snap(c) => c,
        Command::Design { common, .. } => common,
    };
    let cfg = StudyConfig::from_path(&common.config, &common.overrides)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(match &cli.command {
        Command::Analyze(_) => {
            let points = commands::run_analyze(&cfg, &out)?;
            format!("wrote {} points to {}", points.len(), out.join("analyze.json").display())
        }
        Command::Sweep(_) => {
            let rows = commands::run_sweep(&cfg, &out)?;
            format!("wrote {} rows to {}", rows.len(), out.join("sweep.csv").display())
        }
        Command::Design { target, free, .. } => {
            let free = free.map(|f| match f {
                Free::Prestretch => FreeVariable::Prestretch,
                Free::Size => FreeVariable::Size,
            });
            let r = commands::run_design(&cfg, *target, free, &out)?;
            format!("{:?} = {} (forward H/L {})", r.free, r.solved, r.forward_check)
        }
        Command::Simulate(_) => {
            let r = commands::run_simulate(&cfg, &out)?;
            format!("{} equilibria, {} failed seeds: {}", r.found.states.len(), r.found.failures.len(), r.files.join(", "))
        }
        Command::Snap(_) => {
            let r = commands::run_snap(&cfg, &out)?;
            format!(
                "snapped: {}, negative stiffness: {}, {} samples",
                r.outcome.snapped,
                r.outcome.curve.has_negative_stiffness(),
                r.outcome.curve.len()
            )
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
