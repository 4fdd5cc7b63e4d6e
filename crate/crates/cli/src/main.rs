use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

mod args;
mod run;

use args::{canonical, Cli};
use run::{execute, Ctx, Status};

pub const DEFAULT_SEED: u64 = 20_240_601;
const VERSION: &str = env!("CARGO_PKG_VERSION");

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let config = canonical(&cli.command, seed);
    let header = vec![
        format!("greedyjump {VERSION}"),
        format!("config: {config}"),
        format!("seed: {seed}"),
    ];
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();

    let mut ctx = match Ctx::new(&cli.out, header) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let result = execute(&cli.command, seed, &mut ctx);
    let (status, error) = match &result {
        Ok(s) => (*s, None),
        Err(e) => (Status::Failed, Some(format!("{e:#}"))),
    };
    let manifest = json!({
        "tool": "greedyjump",
        "version": VERSION,
        "command": cli.command.name(),
        "config": config,
        "arguments": cli.command,
        "seed": seed,
        "out": cli.out,
        "started_unix": started,
        "wall_time_seconds": clock.elapsed().as_secs_f64(),
        "files": ctx.files,
        "status": status,
        "error": error,
    });
    if let Err(e) = greedyjump::export::write_json(&cli.out.join("manifest.json"), &manifest) {
        eprintln!("error: writing manifest: {e}");
        return ExitCode::from(1);
    }
    if let Some(e) = error {
        eprintln!("error: {e}");
    }
    ExitCode::from(status.exit_code())
}
