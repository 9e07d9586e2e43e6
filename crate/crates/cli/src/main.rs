use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lrlab_cli::{demos, execute, validate, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "lrlab", version, about = "Lieb–Robinson bound experiments on lattice fermions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Check a configuration without computing anything.
    Validate { config: PathBuf },
    /// Run or print one of the shipped configurations.
    Demo {
        /// Demo name; omit with `--list`.
        name: Option<String>,
        /// List the available demos.
        #[arg(long)]
        list: bool,
        /// Print the configuration instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args)]
struct RunOpts {
    /// Output directory (default: the config's `out`, else `lrlab-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this value.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Exit status for a run whose certificate failed.
const CERTIFICATE_FAILED: u8 = 2;

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config, opts } => run(ExperimentConfig::load(&config)?, opts),
        Command::Validate { config } => {
            let findings = validate(&ExperimentConfig::load(&config)?);
            for f in &findings {
                println!("{f}");
            }
            if findings.is_empty() {
                println!("ok");
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Demo { list: true, .. } | Command::Demo { name: None, .. } => {
            for d in demos::DEMOS {
                println!("{:<26}{}", d.name, d.summary);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Demo { name: Some(name), print, opts, .. } => {
            let demo = demos::find(&name)?;
            if print {
                print!("{}", demo.config);
                return Ok(ExitCode::SUCCESS);
            }
            run(ExperimentConfig::parse(demo.config)?, opts)
        }
    }
}

fn run(mut cfg: ExperimentConfig, opts: RunOpts) -> Result<ExitCode, CliError> {
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let threads = opts.threads.or(cfg.threads).unwrap_or(0);
    let out = opts.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("lrlab-out"));
    let result = execute(&cfg, threads)?;
    for path in result.write(&out)? {
        println!("wrote {}", path.display());
    }
    for c in &result.certificate.checks {
        println!("{} {} (value {:.4e}, limit {:.4e}){}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit, detail(&c.detail));
    }
    Ok(if result.certificate.pass { ExitCode::SUCCESS } else { ExitCode::from(CERTIFICATE_FAILED) })
}

fn detail(d: &str) -> String {
    if d.is_empty() {
        String::new()
    } else {
        format!(": {d}")
    }
}
