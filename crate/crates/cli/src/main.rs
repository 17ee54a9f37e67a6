use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dispersa_core::experiments::{run, Command, ExperimentConfig, Format};
use dispersa_core::Error;

#[derive(Parser)]
#[command(name = "dispersa", version, about = "Run a dispersa experiment from a TOML config")]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,

    /// Experiment config. Its `command` key, if present, must match.
    #[arg(long)]
    config: PathBuf,

    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format, overriding `output.format`.
    #[arg(long, value_enum)]
    format: Option<Fmt>,

    /// Worker threads for scan points. 0 lets rayon decide.
    #[arg(long, env = "DISPERSA_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    VerifyIdentities,
    Solve,
    Persistence,
    PhiScan,
    Strichartz,
    Calibrate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::VerifyIdentities => Command::VerifyIdentities,
            Cmd::Solve => Command::Solve,
            Cmd::Persistence => Command::Persistence,
            Cmd::PhiScan => Command::PhiScan,
            Cmd::Strichartz => Command::Strichartz,
            Cmd::Calibrate => Command::Calibrate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Csv,
    Json,
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let text = std::fs::read_to_string(&cli.config).map_err(|source| Error::Io {
        path: cli.config.display().to_string(),
        source,
    })?;
    let mut cfg = ExperimentConfig::parse_for(&text, cli.command.into())?;
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            Fmt::Csv => Format::Csv,
            Fmt::Json => Format::Json,
        };
    }

    let report = run(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let written = report.write(&cfg.output.dir, cfg.output.format)?;
    println!(
        "[{}] done in {:.2}s, {} file(s) in {}",
        report.command,
        report.wall_clock_seconds,
        written.len(),
        cfg.output.dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: could not start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
