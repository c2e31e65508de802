//! The `mirage` command line: a thin wrapper over [`crate::runner`].
//!
//! Exit codes: 0 on success, 1 for configuration or validation problems,
//! 2 when a backend failed hard (transport errors, exhausted retries,
//! malformed wire responses).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::dataset::Track;
use crate::eval::{render_report, ReportFormat};
use crate::runner::{cmd_evaluate, cmd_run, cmd_score, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrackArg {
    Aware,
    Agnostic,
}

impl From<TrackArg> for Track {
    fn from(arg: TrackArg) -> Self {
        match arg {
            TrackArg::Aware => Track::ModelAware,
            TrackArg::Agnostic => Track::ModelAgnostic,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mirage",
    about = "Score hallucination detectors and evaluate them against gold annotations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one method on one track and write its verdict file.
    Score {
        /// Path to the run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Method name from the configuration.
        #[arg(long)]
        method: String,
        /// Which track's dataset to score.
        #[arg(long, value_enum)]
        track: TrackArg,
        /// Output directory (default: the config's out_dir, then ".").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate verdict files against gold annotations and write reports.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verdict files named `<method>.<track>.verdicts.jsonl`.
        #[arg(required = true)]
        verdicts: Vec<PathBuf>,
    },
    /// Score every configured method on every configured track, then evaluate.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a configuration, building nothing.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn out_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

async fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Score {
            config,
            method,
            track,
            out,
        } => {
            let config = RunConfig::load(&config)?;
            let out = out_dir(out, &config);
            let path = cmd_score(&config, &method, Track::from(track), &out).await?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Evaluate {
            config,
            out,
            verdicts,
        } => {
            let config = RunConfig::load(&config)?;
            let out = out_dir(out, &config);
            let report = cmd_evaluate(&config, &verdicts, &out)?;
            print!("{}", render_report(&report, ReportFormat::Markdown)?);
            Ok(())
        }
        Command::Run { config, out } => {
            let config = RunConfig::load(&config)?;
            let out = out_dir(out, &config);
            let (report, files) = cmd_run(&config, &out).await?;
            for file in files {
                eprintln!("wrote {}", file.display());
            }
            print!("{}", render_report(&report, ReportFormat::Markdown)?);
            Ok(())
        }
        Command::ValidateConfig { config } => {
            RunConfig::load(&config)?;
            println!("config ok");
            Ok(())
        }
    }
}

/// Parses arguments, runs the requested command, and maps errors to exit
/// codes (printing the error chain to stderr).
pub async fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            // Most layers embed their cause's text already; only print
            // causes that add something.
            let mut previous = err.to_string();
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                let text = cause.to_string();
                if !previous.contains(&text) {
                    eprintln!("caused by: {text}");
                }
                previous = text;
                source = cause.source();
            }
            ExitCode::from(err.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_all_subcommands() {
        Cli::try_parse_from([
            "mirage", "score", "--config", "c.json", "--method", "embed", "--track", "aware",
        ])
        .unwrap();
        Cli::try_parse_from([
            "mirage",
            "evaluate",
            "--config",
            "c.json",
            "a.aware.verdicts.jsonl",
            "b.agnostic.verdicts.jsonl",
        ])
        .unwrap();
        Cli::try_parse_from(["mirage", "run", "--config", "c.json", "--out", "reports"]).unwrap();
        Cli::try_parse_from(["mirage", "validate-config", "--config", "c.json"]).unwrap();
    }

    #[test]
    fn evaluate_requires_at_least_one_verdict_file() {
        assert!(Cli::try_parse_from(["mirage", "evaluate", "--config", "c.json"]).is_err());
    }

    #[test]
    fn track_arg_values() {
        assert!(Cli::try_parse_from([
            "mirage", "score", "--config", "c", "--method", "m", "--track", "both",
        ])
        .is_err());
    }
}
