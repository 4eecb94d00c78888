use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qpv_cli::{emit_report, parse_config, run_command, CliError, Command, Format};
use qpv_core::Execution;

/// Coherent-state quantum position verification laboratory.
#[derive(Debug, Parser)]
#[command(name = "qpv", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Sectioned key=value configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Session seed; repeat for several trials. Overrides `run.seeds`.
    #[arg(long = "seed")]
    seeds: Vec<u64>,

    #[arg(long, value_enum, default_value = "obj")]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

fn run(args: &Args) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let cfg = parse_config(&text)?;
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let report = run_command(args.command, &cfg, &args.seeds, exec)?;
    let doc = emit_report(&report, args.format)?;
    match &args.out {
        Some(path) => std::fs::write(path, doc).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => print!("{doc}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qpv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
