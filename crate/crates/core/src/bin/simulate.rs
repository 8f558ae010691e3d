use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ddi_fluor::config::RunConfig;
use ddi_fluor::observables::Channel;
use ddi_fluor::run::run;
use ddi_fluor::Error;

/// Resonance fluorescence of two dipole-dipole coupled four-level atoms.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// TOML run configuration.
    config: PathBuf,
    /// Directory for artifacts; overrides the config file.
    #[arg(long, env = "DDI_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Number of detuning grid points; overrides the config file.
    #[arg(long)]
    grid_count: Option<usize>,
    /// Polarization channel; overrides the config file.
    #[arg(long)]
    channel: Option<Channel>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(dir) = &cli.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(n) = cli.grid_count {
        config = config.with_grid_count(n)?;
    }
    if let Some(c) = cli.channel {
        config = config.with_channel(c);
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&config) {
        Ok(summary) => {
            for p in &summary.outputs {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_CONFIG } else { EXIT_NUMERICAL })
        }
    }
}
