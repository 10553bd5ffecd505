use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use foldflash_cli::config::parse_text;
use foldflash_cli::runner::{parse_sweep_values, sweep, write_sweep};
use foldflash_cli::{run_scenario, write_outputs, Config, ConfigError, OutputFormat, RunError, Scenario};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "foldflash", version, about = "Behavioral folding-flash ADC scenario runner")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `json` writes report.json only; `csv` adds the plot-ready CSVs.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs one scenario.
    Run { config: PathBuf },
    /// Runs a scenario once per value of one numeric parameter.
    Sweep {
        config: PathBuf,
        /// Dotted key, e.g. `frontend.kickback_amp`.
        #[arg(long)]
        param: String,
        /// Comma-separated values with units, e.g. `0V,3mV,20mV`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<std::collections::BTreeMap<String, String>, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::new(path.display().to_string(), format!("cannot read config: {e}")))?;
    let mut map = parse_text(&text)?;
    if let Some(seed) = seed {
        map.insert("seed".into(), seed.to_string());
    }
    Ok(map)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let format = match cli.format {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
    };
    match cli.command {
        Command::Run { config } => {
            let map = load(&config, cli.seed)?;
            let scenario = Scenario::from_config(Config::from_map(&map)?)?;
            let output = run_scenario(&scenario)?;
            write_outputs(&cli.out, &output, format)
        }
        Command::Sweep { config, param, values } => {
            let map = load(&config, cli.seed)?;
            Config::from_map(&map)?;
            let values = parse_sweep_values(&param, &values)?;
            let output = sweep(&map, &param, &values)?;
            write_sweep(&cli.out, &output, format)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let message: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            let message = message.join(" ");
            let line = serde_json::json!({"error": "usage", "message": message.trim_start_matches("error: ")});
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
