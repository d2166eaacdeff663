use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use microwire::config::{parse_count, ConfigError, ScenarioConfig};
use microwire::scenario::{run_scenario, Scenario};
use microwire::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_MODEL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "microwire",
    version,
    about = "Photon-pair generation in a tapered chalcogenide microwire"
)]
struct Cli {
    /// Scenario (phasematch, seeded, pairs, car-scan, histogram, delay-scan,
    /// noise, fit), `validate` or `list`.
    command: String,

    /// Config file for `validate`, as an alternative to --config.
    path: Option<PathBuf>,

    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the pulse count per scan point; `1e8` is accepted.
    #[arg(long, value_parser = pulses)]
    pulses: Option<u64>,

    /// Output directory, created if missing.
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
}

fn pulses(s: &str) -> Result<u64, String> {
    match parse_count(s) {
        Some(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got `{s}`")),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } => EXIT_CONFIG,
        Error::ModelValidity(_) | Error::WavelengthOutOfRange { .. } | Error::NoRoot(_) => {
            EXIT_MODEL
        }
        _ => 1,
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, ConfigError> {
    let Some(path) = cli.config.as_deref().or(cli.path.as_deref()) else {
        return Err(ConfigError::single(
            Path::new("<none>"),
            "",
            "",
            "no config given; pass --config <path>",
        ));
    };
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(n) = cli.pulses {
        cfg = cfg.with_pulses(n);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.command == "list" {
        for s in Scenario::ALL {
            println!("{s}");
        }
        return ExitCode::SUCCESS;
    }
    let scenario = if cli.command == "validate" {
        None
    } else {
        match cli.command.parse::<Scenario>() {
            Ok(s) => Some(s),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    };
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let Some(scenario) = scenario else {
        println!("valid: config_sha256 {}", cfg.hash());
        return ExitCode::SUCCESS;
    };
    let written = run_scenario(scenario, &cfg).and_then(|out| out.write(&cli.out));
    match written {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
