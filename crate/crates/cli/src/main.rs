use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wgnlink_cli::{exit, ExperimentConfig, ExperimentReport, Overrides};

#[derive(Parser)]
#[command(
    name = "wgnlink",
    version,
    about = "WGN link capacity and channel characterization"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the WGN sweep.
    Simulate(RunArgs),
    /// Run the same sweep with 16QAM.
    #[command(name = "reference-16qam")]
    Reference16qam(RunArgs),
    /// Estimate the channel between two stored captures.
    Characterize(CharacterizeArgs),
    /// Check a config file and print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// 1M-sample captures.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    no_plots: bool,
    /// Keep the launched and received captures of the first seed.
    #[arg(long)]
    save_captures: bool,
}

#[derive(Args)]
struct CharacterizeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Launched capture.
    #[arg(long)]
    f_in: PathBuf,
    /// Received capture.
    #[arg(long)]
    f_out: PathBuf,
    /// Loop passes between the two captures.
    #[arg(long, default_value_t = 1)]
    recirculations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_plots: bool,
}

fn load(path: &PathBuf, overrides: &Overrides) -> Result<ExperimentConfig, ExitCode> {
    let mut cfg = wgnlink_cli::validate_config(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(exit::CONFIG_ERROR)
    })?;
    cfg.apply_overrides(overrides).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(exit::CONFIG_ERROR)
    })?;
    Ok(cfg)
}

fn finish(result: Result<ExperimentReport, wgnlink_cli::RunError>, out: &std::path::Path) -> ExitCode {
    match result {
        Ok(report) => {
            println!("{} rows written to {}", report.rows.len(), out.display());
            for f in &report.failures {
                eprintln!(
                    "failed: value {} seed {} at {}: {}",
                    f.sweep_value, f.seed, f.stage, f.message
                );
            }
            if report.succeeded() {
                ExitCode::from(exit::SUCCESS)
            } else {
                ExitCode::from(exit::RUNTIME_FAILURE)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::RUNTIME_FAILURE)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::Simulate(a) => {
            let cfg = match load(&a.config, &overrides(&a)) {
                Ok(c) => c,
                Err(code) => return code,
            };
            finish(wgnlink_cli::run_experiment(&cfg), &cfg.outputs)
        }
        Command::Reference16qam(a) => {
            let cfg = match load(&a.config, &overrides(&a)) {
                Ok(c) => c,
                Err(code) => return code,
            };
            finish(wgnlink_cli::run_reference_16qam(&cfg), &cfg.outputs)
        }
        Command::Characterize(a) => {
            let o = Overrides {
                outputs: a.out.clone(),
                no_plots: a.no_plots,
                ..Overrides::default()
            };
            let cfg = match load(&a.config, &o) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match wgnlink_cli::characterize(&cfg, &a.f_in, &a.f_out, a.recirculations) {
                Ok(r) => {
                    println!(
                        "dynamic range {:.1} dB, results in {}",
                        r.channel.dynamic_range_db,
                        cfg.outputs.display()
                    );
                    ExitCode::from(exit::SUCCESS)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit::RUNTIME_FAILURE)
                }
            }
        }
        Command::Validate { config } => match wgnlink_cli::validate_config(&config) {
            Ok(cfg) => {
                print!("{}", toml::to_string(&cfg).expect("config serializes"));
                ExitCode::from(exit::SUCCESS)
            }
            Err(e) => {
                eprintln!("error: {}: {e}", config.display());
                ExitCode::from(exit::CONFIG_ERROR)
            }
        },
    }
}

fn overrides(a: &RunArgs) -> Overrides {
    Overrides {
        outputs: a.out.clone(),
        seeds: a.seeds.clone(),
        quick: a.quick,
        no_plots: a.no_plots,
        save_captures: a.save_captures,
    }
}
