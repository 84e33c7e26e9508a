use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lyapcenter::{output_paths, run, write_csvs, CliError, RunConfig};
use lyapcenter_core::euler_ring::eval_expression;
use lyapcenter_core::symmetry::{check_admissible_finite, FinitePermGroup};

#[derive(Parser)]
#[command(
    name = "lyapcenter",
    version,
    about = "Equivariant Liapunov centers: certify and exhibit periodic orbits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze critical orbits, certify bifurcation and refine periodic orbits.
    Run {
        config: PathBuf,
        /// Write the JSON report here (overrides outputs.report_path).
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Write orbit CSV files here (overrides outputs.orbit_csv_dir).
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Evaluate an Euler-ring expression such as `chi(S^"R[1,0]+R[2,3]")`.
    Euler { expr: String },
    /// Decide admissibility of a subgroup of a finite group table.
    CheckGroup {
        table: PathBuf,
        /// Comma-separated element names.
        #[arg(long)]
        subgroup: String,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            json_out,
            csv_dir,
        } => {
            let cfg = RunConfig::load(&config)?;
            let mut report = run(&cfg)?;
            let (json_path, csv_path) = output_paths(&cfg, json_out, csv_dir);
            if let Some(dir) = csv_path {
                write_csvs(&mut report, &dir)?;
            }
            match json_path {
                Some(path) => {
                    std::fs::write(&path, report.to_json())
                        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
                    print!("{}", report.summary());
                    println!("report written to {}", path.display());
                }
                None => println!("{}", report.to_json()),
            }
        }
        Command::Euler { expr } => {
            let value = eval_expression(&expr).map_err(|e| CliError::Config(e.to_string()))?;
            println!("{value}");
        }
        Command::CheckGroup { table, subgroup } => {
            let text = std::fs::read_to_string(&table)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", table.display())))?;
            let g = FinitePermGroup::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?;
            let h = g.parse_subset(&subgroup).map_err(|e| CliError::Config(e.to_string()))?;
            let verdict = check_admissible_finite(&g, &h).map_err(|e| CliError::Config(e.to_string()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&verdict).expect("verdict serializes")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
