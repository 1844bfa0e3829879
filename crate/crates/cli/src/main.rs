//! `swe-lab`: command-line front end for the stochastic wave equation lab.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{Parser, Subcommand};
use swe_lab::exec;
use swe_lab::runner::{self, Command, Invocation, EXIT_CONFIG, EXIT_RESOLUTION, FIELD_DOCS};

fn config_help() -> &'static str {
    static HELP: OnceLock<String> = OnceLock::new();
    HELP.get_or_init(|| {
        let mut s = String::from(
            "Configuration: one JSON document with optional sections model, grid, scales, experiment, output.\n\
             Unknown fields are rejected. Fields:\n",
        );
        for (key, doc) in FIELD_DOCS {
            s.push_str(&format!("  {key:<26} {doc}\n"));
        }
        s.push_str("\nDefaults (`swe-lab schema` writes them with this table):\n");
        let defaults = runner::schema()["defaults"].clone();
        s.push_str(&serde_json::to_string_pretty(&defaults).unwrap_or_default());
        s.push_str("\n\nExit codes: 0 success, 1 check failure, 2 config error, 3 resolution/resource error.");
        s
    })
}

#[derive(Parser)]
#[command(
    name = "swe-lab",
    version,
    about = "Exact sampling and oscillation statistics for the stochastic wave equation with Riesz noise"
)]
#[command(after_help = config_help())]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (default: output.dir, else the current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed, overriding experiment.seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads (default: physical cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Closed forms against quadrature oracles and Gaussian identities.
    Selftest,
    /// Exact samples of the field on the configured grid.
    Sample,
    /// Iterated-logarithm statistics at one point.
    Lil,
    /// Singularity propagation experiment.
    Propagate,
    /// Orthant-derivative identity checks.
    Slepian,
    /// Writes config-schema.json (defaults and field documentation).
    Schema,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let command = match cli.command {
        Cmd::Selftest => Command::Selftest,
        Cmd::Sample => Command::Sample,
        Cmd::Lil => Command::Lil,
        Cmd::Propagate => Command::Propagate,
        Cmd::Slepian => Command::Slepian,
        Cmd::Schema => return write_schema(cli.out),
    };
    let inv = Invocation { command, config: cli.config, out: cli.out, seed: cli.seed };
    let threads = cli.threads.unwrap_or_else(num_cpus::get_physical);
    let outcome = exec::with_threads(Some(threads), || runner::execute(&inv));
    if let Some(text) = &outcome.stdout {
        println!("{text}");
    }
    if outcome.exit_code == 0 {
        eprintln!("{}", outcome.message);
    } else {
        eprintln!("error (exit {}): {}", outcome.exit_code, outcome.message);
    }
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}

fn write_schema(out: Option<PathBuf>) -> ExitCode {
    let text = serde_json::to_string_pretty(&runner::schema()).unwrap_or_default() + "\n";
    match out {
        None => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Some(dir) => {
            let path = dir.join("config-schema.json");
            match std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(&path, text)) {
                Ok(()) => {
                    eprintln!("wrote {}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error (exit {EXIT_RESOLUTION}): cannot write {}: {e}", path.display());
                    ExitCode::from(EXIT_RESOLUTION as u8)
                }
            }
        }
    }
}
