//! `apartment` command line: reproducible experiments with CSV and JSON reports.

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use apartment::report::{write_report, Summary};
use commands::{Failure, Outcome};
use config::Params;

#[derive(Parser)]
#[command(name = "apartment", about = "Stability experiments for limits of Hitchin harmonic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file of parameters; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Schwarz P construction, instability certificate and cutoff sweep.
    PSurfaceIndex,
    /// Invariant polynomials and companion realization round trip.
    HitchinRoundtrip,
    /// Eigenvalue monodromy along loops and loop words.
    Monodromy,
    /// Decoupling of eigen-projections along an R-sweep.
    Decoupling,
    /// Convergence of Q_{H_R} to Q_f along an R-sweep.
    Convergence,
    /// Index of a constant regular semisimple field on a torus.
    FlatStability,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::PSurfaceIndex => "p-surface-index",
            Command::HitchinRoundtrip => "hitchin-roundtrip",
            Command::Monodromy => "monodromy",
            Command::Decoupling => "decoupling",
            Command::Convergence => "convergence",
            Command::FlatStability => "flat-stability",
        }
    }

    fn run(self, p: &Params) -> Result<Outcome, Failure> {
        match self {
            Command::PSurfaceIndex => commands::p_surface(p),
            Command::HitchinRoundtrip => commands::hitchin(p),
            Command::Monodromy => commands::monodromy(p),
            Command::Decoupling => commands::decoupling(p),
            Command::Convergence => commands::convergence(p),
            Command::FlatStability => commands::flat(p),
        }
    }
}

fn writable(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let probe = dir.join(".apartment-write-probe");
    fs::write(&probe, b"").map_err(|e| format!("{} is not writable: {e}", dir.display()))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let params = match &cli.config {
        Some(path) => match Params::load(path) {
            Ok(base) => base.merged(&cli.params),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => cli.params.clone(),
    };
    let out = params.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = writable(&out) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let start = Instant::now();
    let outcome = match cli.command.run(&params) {
        Ok(o) => o,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            let diag = serde_json::json!({"command": name, "error": msg});
            let path = out.join(format!("{name}_diagnostics.json"));
            if let Err(e) = fs::write(&path, serde_json::to_string_pretty(&diag).unwrap_or_default()) {
                eprintln!("error: cannot write {}: {e}", path.display());
            }
            return ExitCode::from(1);
        }
    };
    let summary = Summary {
        command: name.into(),
        params: outcome.params,
        checks: outcome.checks,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    let written = write_report(&out, name, &outcome.table.to_csv(), &summary).and_then(|_| {
        for (file, body) in &outcome.extra {
            fs::write(out.join(file), body)?;
        }
        Ok(())
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for c in &summary.checks {
        println!("{} {} value={:e} threshold={:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    if summary.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
