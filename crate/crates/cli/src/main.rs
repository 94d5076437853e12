use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cvmbqc::experiment::{run_experiment, run_sweep, sweep_csv, ExperimentConfig};
use cvmbqc::verify::{render_table, run_suite};

/// Gaussian simulator for continuous-variable cluster-state computation.
#[derive(Parser)]
#[command(name = "cvmbqc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its JSON result document.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run the config's sweep and write a CSV table, one row per grid value.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run the built-in identity and invariant suite.
    Verify {
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct Opts {
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; defaults to the config's `output_path`, then stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config `{}`", path.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text).with_context(|| format!("config `{}`", path.display()))?;
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    Ok(cfg)
}

/// `--output` as given; a config `output_path` is taken relative to the config file.
fn destination(config: &Path, cfg: &ExperimentConfig, opts: &Opts) -> Option<PathBuf> {
    opts.output.clone().or_else(|| {
        let rel = PathBuf::from(cfg.output_path.as_ref()?);
        Some(config.parent().map_or(rel.clone(), |dir| dir.join(&rel)))
    })
}

fn emit(config: &Path, cfg: &ExperimentConfig, opts: &Opts, body: &str) -> Result<()> {
    match destination(config, cfg, opts) {
        Some(path) => {
            std::fs::write(&path, body).with_context(|| format!("cannot write `{}`", path.display()))?;
            if !opts.quiet {
                eprintln!("wrote {}", path.display());
            }
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run(config: &Path, opts: &Opts) -> Result<()> {
    let cfg = load(config, opts.seed)?;
    let doc = run_experiment(&cfg)?;
    emit(config, &cfg, opts, &doc.to_json()?)?;
    if !opts.quiet {
        let failed: Vec<_> = doc.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        eprintln!(
            "{}: deviation {:e}, noise trace {:e}, {} trial(s){}",
            doc.protocol,
            doc.deviation,
            doc.noise_trace,
            doc.determinism.trials,
            if failed.is_empty() { String::new() } else { format!(", failed checks: {}", failed.join(", ")) }
        );
    }
    Ok(())
}

fn sweep(config: &Path, opts: &Opts) -> Result<()> {
    let cfg = load(config, opts.seed)?;
    if cfg.sweep.is_none() {
        bail!("config `{}`: field `sweep` is required for the sweep command", config.display());
    }
    let (param, rows) = run_sweep(&cfg)?;
    emit(config, &cfg, opts, &sweep_csv(param, &rows)?)?;
    if !opts.quiet {
        eprintln!("{} rows over {}", rows.len(), param.as_str());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, opts } => run(config, opts),
        Command::Sweep { config, opts } => sweep(config, opts),
        Command::Verify { quiet } => {
            let rows = run_suite();
            if !quiet {
                print!("{}", render_table(&rows));
            }
            if rows.iter().all(|r| r.passed) {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
