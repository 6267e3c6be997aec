//! `metasel`: generate synthetic corpora, extract meta-features, label
//! datasets with the model grid, train multilabel meta-learners and
//! recommend models for new datasets.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, CommandFactory, Parser};

#[derive(Parser, Debug)]
#[command(name = "metasel", version, about = "Meta-learned model selection for tabular classification")]
pub struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true, env = "METASEL_JOBS")]
    jobs: Option<usize>,
    /// key=value file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: commands::Command,
}

/// Failure classes, each with its own exit code.
#[derive(Debug, Clone, Copy)]
enum FailureClass {
    Usage,
    Io,
    Data,
    Schema,
    Computation,
    Other,
}

impl FailureClass {
    fn of(err: &anyhow::Error) -> Self {
        use metasel::Error as E;
        for cause in err.chain() {
            if cause.downcast_ref::<commands::UsageError>().is_some() {
                return FailureClass::Usage;
            }
            if let Some(e) = cause.downcast_ref::<E>() {
                return match e {
                    E::Io { .. } => FailureClass::Io,
                    E::InvalidParameter(_) => FailureClass::Usage,
                    E::SchemaMismatch(_) => FailureClass::Schema,
                    E::SingularCovariance { .. } => FailureClass::Computation,
                    E::MetaFeature { source, .. } if matches!(**source, E::SingularCovariance { .. }) => {
                        FailureClass::Computation
                    }
                    _ => FailureClass::Data,
                };
            }
            if cause.downcast_ref::<std::io::Error>().is_some() {
                return FailureClass::Io;
            }
        }
        FailureClass::Other
    }

    fn label(self) -> &'static str {
        match self {
            FailureClass::Usage => "usage",
            FailureClass::Io => "io",
            FailureClass::Data => "data",
            FailureClass::Schema => "schema",
            FailureClass::Computation => "computation",
            FailureClass::Other => "internal",
        }
    }

    fn code(self) -> u8 {
        match self {
            FailureClass::Other => 1,
            FailureClass::Usage => 2,
            FailureClass::Io => 3,
            FailureClass::Data => 4,
            FailureClass::Schema => 5,
            FailureClass::Computation => 6,
        }
    }
}

fn fail(class: FailureClass, message: &str) -> ExitCode {
    let one_line = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("metasel: error[{}]: {one_line}", class.label());
    ExitCode::from(class.code())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let args = match config::inject(args, Cli::command()) {
        Ok(a) => a,
        Err(e) => return fail(FailureClass::Usage, &format!("{e:#}")),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return fail(FailureClass::Usage, first.trim_start_matches("error: "));
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(jobs) = cli.jobs.filter(|&j| j > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            return fail(FailureClass::Other, &format!("thread pool: {e}"));
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(FailureClass::of(&e), &describe(&e)),
    }
}

/// Joins the error chain, skipping causes whose text an outer message
/// already embeds.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let part = cause.to_string();
        if text.contains(&part) {
            continue;
        }
        if !text.is_empty() {
            text.push_str(": ");
        }
        text.push_str(&part);
    }
    text
}
