use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use goodwill::runner::run;
use goodwill::scenario::{load_config, ProblemKind};

#[derive(Parser)]
#[command(name = "goodwill-ctrl", version, about = "Solve distributed goodwill control scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `[output] dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomised probes
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve goodwill under the scenario's control
    Simulate(RunArgs),
    /// Optimal effort for linear reward and capped quadratic cost
    MpQuadratic(RunArgs),
    /// Bang-bang effort for linear reward and capped linear cost
    MpLinear(RunArgs),
    /// Maximise terminal goodwill under an effort-energy budget
    Budget(RunArgs),
    /// Riccati feedback for the indefinite quadratic problem
    P1(RunArgs),
    /// Steer goodwill towards a terminal target profile
    P2(RunArgs),
    /// Targeting value for a list of uniform target levels
    P2Sweep(RunArgs),
    /// Cross-check the solvers against finite differences and DP
    Verify(RunArgs),
    /// Print the normalised form of a scenario file
    RenderConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> goodwill::Result<()> {
    let (kind, args) = match cmd {
        Command::RenderConfig { config } => {
            print!("{}", load_config(&config)?.render());
            return Ok(());
        }
        Command::Simulate(a) => (ProblemKind::Simulate, a),
        Command::MpQuadratic(a) => (ProblemKind::MpQuadratic, a),
        Command::MpLinear(a) => (ProblemKind::MpLinear, a),
        Command::Budget(a) => (ProblemKind::Budget, a),
        Command::P1(a) => (ProblemKind::P1, a),
        Command::P2(a) => (ProblemKind::P2, a),
        Command::P2Sweep(a) => (ProblemKind::P2Sweep, a),
        Command::Verify(a) => (ProblemKind::Verify, a),
    };
    let mut cfg = load_config(&args.config)?;
    if cfg.problem != kind {
        log::warn!("config declares kind = {}, running {kind} as requested", cfg.problem);
        cfg.problem = kind;
    }
    let report = run(&cfg, args.out.as_deref(), args.seed)?;
    print!("{}", report.render());
    Ok(())
}
