use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use asep_cli::oracle_cmd::oracle;
use asep_cli::summary::format_table;
use asep_cli::{run, summarize, CliError};

/// Biased card shuffling and ASEP experiments.
///
/// Exit status: 0 when every threshold passes, 1 when any fails, 2 on
/// usage, config, schema, I/O or simulation errors.
#[derive(Parser)]
#[command(name = "asep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Recompute and print summaries of finished result directories.
    Summarize { dir: PathBuf },
    /// Exact small-instance quantities as JSON: cards N= p=, exclusion N= k= p=,
    /// blocking p= [n_max=], z-hitting N= p= [tol=].
    Oracle { kind: String, params: Vec<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Run { config } => {
            let report = run(&config)?;
            print!("{}", format_table(&report.summary.rows));
            println!(
                "{} replicas in {:.1}s -> {}",
                report.manifest.seeds.len(),
                report.manifest.wall_time_secs,
                report.dir.display()
            );
            Ok(report.summary.pass)
        }
        Command::Summarize { dir } => {
            let (done, incomplete) = summarize(&dir)?;
            for d in &incomplete {
                eprintln!("skipping {}: no manifest (incomplete run)", d.display());
            }
            let rows: Vec<_> = done.iter().flat_map(|(_, s)| s.rows.clone()).collect();
            if !rows.is_empty() {
                print!("{}", format_table(&rows));
            }
            Ok(done.iter().all(|(_, s)| s.pass))
        }
        Command::Oracle { kind, params } => {
            let v = oracle(&kind, &params)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&v).map_err(|e| CliError::Json(e.to_string()))?
            );
            Ok(true)
        }
    }
}
