use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

mod config;
mod error;
mod experiments;
mod table;

use config::Config;
use error::{CliError, CliResult};
use experiments::{Experiment, Run};

/// Kicked-rotor amplitude amplification experiments.
#[derive(Debug, Parser)]
#[command(name = "qkr", version)]
struct Args {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Flat key = value config file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Main CSV output; side tables go next to it with a suffix.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
}

fn side_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    out.with_file_name(name)
}

fn run(args: &Args) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = Config::parse(&text)?;
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    let mut run = Run::new(&cfg, args.seed);
    let outcome = run.execute(args.experiment);
    for d in &run.diagnostics {
        eprintln!("{}", d.render());
    }
    outcome?;

    let mut header = vec![
        format!("qkr v{}", env!("CARGO_PKG_VERSION")),
        format!("experiment = {}", args.experiment.name()),
        format!("seed = {}", args.seed),
        "units = time in kick periods, energy in hbar^2/I, momentum in hbar".to_string(),
    ];
    header.extend(
        cfg.resolved()
            .iter()
            .map(|(k, v)| format!("config.{k} = {v}")),
    );
    header.extend(
        run.diagnostics
            .iter()
            .map(|d| format!("diagnostic = {}", d.render())),
    );

    let mut written = Vec::new();
    for (suffix, table) in &run.tables {
        let path = match suffix {
            None => args.out.clone(),
            Some(s) => side_path(&args.out, s),
        };
        let mut h = header.clone();
        if let Some(s) = suffix {
            h.push(format!("table = {s}"));
        }
        table.write(&path, &h)?;
        written.push(path);
    }
    if let Some((_, main)) = run.tables.iter().find(|(s, _)| s.is_none()) {
        for (k, v) in &main.results {
            println!("{k} = {v}");
        }
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.record(None));
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record(Some(args.experiment.name())));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
