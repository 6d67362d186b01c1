use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use roughsde::runner::{resolve_output, run_scenario, ScenarioConfig, SCENARIOS};

#[derive(Parser)]
#[command(name = "roughsde", version, about = "Run rough-coefficient SDE scenarios")]
struct Cli {
    /// Output directory (overrides the config and ROUGHSDE_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for path-parallel work.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its output tree.
    Run { config: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the scenario names.
    ListScenarios,
}

fn load(path: &Path, seed: Option<u64>) -> roughsde::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::ListScenarios => {
            for (name, what) in SCENARIOS {
                println!("{name:<26} {what}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Validate { config } => load(config, cli.seed).and_then(|c| c.validate()).map(|()| {
            println!("ok");
            true
        }),
        Command::Run { config } => load(config, cli.seed).and_then(|c| {
            let dir = resolve_output(cli.out.as_deref(), &c);
            let m = run_scenario(&c, &dir)?;
            for check in &m.checks {
                println!("{} {}", if check.passed { "PASS" } else { "FAIL" }, check.check);
            }
            println!("wrote {}", dir.display());
            Ok(m.passed)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(roughsde::Error::Config(list)) => {
            for e in list {
                eprintln!("config error: {e}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
