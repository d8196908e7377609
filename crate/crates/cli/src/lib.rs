//! Command-line front end for the `milnor-core` library.

pub mod commands;
pub mod job;
pub mod parse;

use std::fs;
use std::path::Path;

use clap::Parser;

pub use commands::{Command, Document};
pub use job::{CliError, CliResult, Format, JobArgs, JobConfig, EXIT_INPUT, EXIT_INTERNAL, EXIT_PRECONDITION};

#[derive(Debug, Parser)]
#[command(name = "milnor", version, about = "Milnor invariants, tree diagrams and Koszul homology in exact arithmetic")]
pub struct Cli {
    #[command(flatten)]
    pub job: JobArgs,
    #[command(subcommand)]
    pub command: Command,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

/// Runs one job. Returns the text for stdout and the exit code.
pub fn execute(cli: &Cli) -> CliResult<(String, i32)> {
    let job = JobConfig::from_args(&cli.job)?;
    let doc = commands::run(&cli.command, &job)?;
    let rendered = doc.render(job.format)?;
    if let Some(dir) = &job.out_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        let ext = match job.format {
            Format::Text => "txt",
            Format::Json => "json",
            Format::Dot => "dot",
        };
        write_file(dir, &format!("{}.{ext}", cli.command.name()), &rendered)?;
        for (name, contents) in &doc.files {
            write_file(dir, name, contents)?;
        }
    }
    Ok((rendered, doc.exit_code))
}
