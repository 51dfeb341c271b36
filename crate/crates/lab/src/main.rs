use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nbrw_lab::{run, write_outputs, CommandKind, ExperimentConfig, LabError, OutputFormat};

#[derive(Parser)]
#[command(
    name = "nbrw-lab",
    version,
    about = "Random walks on dynamically rewired configuration-model graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo tail of the cross-rewired time with limit overlays.
    TauTail(Args),
    /// Dynamic TV, τ tail and static TV on a profile grid.
    MixProfile(Args),
    /// Exhaustive small-instance matrix battery.
    ExactVerify(Args),
    /// Static mixing times across the n grid.
    StaticMix(Args),
    /// Short-cut counts along sampled walks.
    ShortcutAudit(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for replica fan-out.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::TauTail(a) => (CommandKind::TauTail, a),
        Command::MixProfile(a) => (CommandKind::MixProfile, a),
        Command::ExactVerify(a) => (CommandKind::ExactVerify, a),
        Command::StaticMix(a) => (CommandKind::StaticMix, a),
        Command::ShortcutAudit(a) => (CommandKind::ShortcutAudit, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(kind: CommandKind, args: Args) -> Result<(), LabError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    match cfg.command {
        Some(c) if c != kind => {
            return Err(LabError::config(format!(
                "config is for {}, not {}",
                c.name(),
                kind.name()
            )))
        }
        _ => cfg.command = Some(kind),
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = args.out_dir {
        cfg.output.dir = dir;
    }
    if let Some(format) = args.format {
        cfg.output.format = format;
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| LabError::config(format!("--threads: {e}")))?;
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let out = run(&cfg, base)?;
    let out_dir = base.join(&cfg.output.dir);
    for path in write_outputs(&out, &cfg, &out_dir, cfg.output.format)? {
        println!("{}", path.display());
    }
    if let Some(report) = &out.report {
        for f in &report.failures {
            eprintln!("FAIL {f}");
        }
        if !report.pass {
            return Err(LabError::Verification(format!(
                "{} of {} cases failed",
                report.failures.len(),
                report.cases.len()
            )));
        }
    }
    Ok(())
}
