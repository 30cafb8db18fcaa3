//! `critgrowth`: batch analysis of critical stochastic difference equations.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 on computational
//! failures. Errors are written to stderr as a single JSON object.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use critgrowth::commands::{self, write_artifacts};
use critgrowth::config::{Format, RunConfig};
use critgrowth::Error;

#[derive(Parser, Debug)]
#[command(name = "critgrowth", version, about = "Growth/extinction analysis of critical stochastic difference equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report formats; overrides the configuration.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Perron data, contraction factor and growth classification.
    Analyze,
    /// Trajectory ensemble and dichotomy probe.
    Simulate,
    /// Supermartingale scans and moment scan.
    Lyapunov,
    /// Assumption audit.
    Audit,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Json,
    Csv,
    Both,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Both => Format::Both,
        }
    }
}

fn report_error(kind: &str, message: String, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn run(cli: &Cli) -> Result<Vec<String>, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config {
        path: "--config".into(),
        message: "a configuration file is required".into(),
    })?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(f) = cli.format {
        cfg.output.format = f.into();
    }
    let artifacts = match cli.command {
        Command::Analyze => commands::analyze(&cfg)?,
        Command::Simulate => commands::simulate(&cfg)?,
        Command::Lyapunov => commands::lyapunov(&cfg)?,
        Command::Audit => commands::audit(&cfg)?,
    };
    let dir = PathBuf::from(&cfg.output.dir);
    write_artifacts(&dir, &artifacts)?;
    Ok(artifacts.iter().map(|a| dir.join(&a.file_name).display().to_string()).collect())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_error("usage", e.to_string().trim_end().to_string(), 1),
    };
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => report_error(e.kind(), e.to_string(), e.exit_code() as u8),
    }
}
