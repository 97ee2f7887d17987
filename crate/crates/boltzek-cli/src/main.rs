use boltzek_cli::{compare, run, CliError, CliResult, RunConfig, RunOptions, Stage};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "boltzek", version, about = "Small eigenvalues of the semiclassical linear Boltzmann operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured stages and write artifacts plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of landscape,predict,spectrum,quasimode,semigroup.
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        #[arg(long)]
        summary_only: bool,
    },
    /// Compare two summary.json files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
        /// Exit nonzero when any field is flagged.
        #[arg(long)]
        strict: bool,
    },
}

fn read_json(path: &PathBuf) -> CliResult<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    Ok(serde_json::from_str(&text)?)
}

fn execute(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Run { config, stages, out, h_list, summary_only } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = stages {
                cfg.stages = s.iter().map(|x| x.parse::<Stage>()).collect::<CliResult<_>>()?;
            }
            if let Some(o) = out {
                cfg.output = o;
            }
            if let Some(h) = h_list {
                cfg.h_list = h;
            }
            cfg.validate()?;
            let report = run(&cfg, RunOptions { summary_only })?;
            for c in &report.checks {
                let h = c.h.map(|h| format!(" h={h}")).unwrap_or_default();
                println!("{} {}{h}: {:.4e} (bound {:.4e}) {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.bound, c.detail);
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            Ok(report.passed())
        }
        Command::Compare { a, b, threshold, strict } => {
            let diff = compare(&read_json(&a)?, &read_json(&b)?, threshold)?;
            println!("{}", serde_json::to_string_pretty(&diff)?);
            Ok(!(strict && diff.flagged().next().is_some()))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
