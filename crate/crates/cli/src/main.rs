use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod data;
mod error;
mod report;

use commands::{DeembedInput, Output};
use config::RunConfig;
use error::{CliError, CliResult};

/// Contact-resistivity extraction from de-embedded TLM test structures.
#[derive(Debug, Parser)]
#[command(name = "tlm-forge", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["hr-rtlm", "hr-ltlm"])]
    flavor: Option<String>,
    #[arg(long, global = true, value_parser = ["closed-form", "oracle"])]
    source: Option<String>,
    /// Output file; for `simulate` the measurement CSV, otherwise a JSON report.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides any configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a measurement series and its de-embed value.
    Simulate,
    /// Extract rho_c from a measurement CSV.
    Extract {
        data: PathBuf,
        /// De-embed structure resistance in ohm.
        #[arg(long, conflicts_with = "deembed")]
        deembed_ohm: Option<f64>,
        /// Single-row de-embed CSV.
        #[arg(long, value_name = "PATH")]
        deembed: Option<PathBuf>,
        #[arg(long, value_name = "OHM_SQ")]
        r_shs: Option<f64>,
        #[arg(long, value_name = "OHM_SQ")]
        r_shm: Option<f64>,
        #[arg(long)]
        w_um: Option<f64>,
        #[arg(long)]
        l0_um: Option<f64>,
    },
    /// Compare every closed form with the network oracle.
    Validate {
        #[arg(long)]
        n_segments: Option<usize>,
    },
    /// Monte Carlo spread of the extracted rho_c.
    Mc {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-trial CSV of extracted values.
        #[arg(long, value_name = "PATH")]
        per_trial: Option<PathBuf>,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("TLM_FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("TLM_FORGE_THREADS must be a non-negative integer, got `{raw}`")))?;
    // zero lets rayon pick the core count
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("cannot size thread pool: {e}")))
}

fn build_config(common: &Common, extra: &[(&str, String)]) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    for item in &common.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("--set expects KEY=VALUE, got `{item}`")))?;
        pairs.push((k.trim().to_string(), v.to_string()));
    }
    if let Some(f) = &common.flavor {
        pairs.push(("flavor".into(), f.clone()));
    }
    if let Some(s) = &common.source {
        pairs.push(("source".into(), s.clone()));
    }
    if let Some(o) = &common.out {
        pairs.push(("out".into(), o.display().to_string()));
    }
    pairs.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    for (k, v) in pairs {
        cfg.set(&k, &v).map_err(|e| CliError::Invalid(format!("command line: {e}")))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<Output> {
    configure_threads()?;
    let opt = |key: &'static str, v: Option<String>| v.map(|v| (key, v));
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&build_config(&cli.common, &[])?),
        Command::Extract {
            data,
            deembed_ohm,
            deembed,
            r_shs,
            r_shm,
            w_um,
            l0_um,
        } => {
            let extra: Vec<_> = [
                opt("r_shs_ohm_sq", r_shs.map(|v| v.to_string())),
                opt("r_shm_ohm_sq", r_shm.map(|v| v.to_string())),
                opt("w_um", w_um.map(|v| v.to_string())),
                opt("l0_um", l0_um.map(|v| v.to_string())),
            ]
            .into_iter()
            .flatten()
            .collect();
            let cfg = build_config(&cli.common, &extra)?;
            let input = deembed_ohm
                .map(DeembedInput::Value)
                .or(deembed.map(DeembedInput::File));
            commands::cmd_extract(&cfg, &data, input)
        }
        Command::Validate { n_segments } => {
            let extra: Vec<_> = opt("n_segments", n_segments.map(|v| v.to_string())).into_iter().collect();
            commands::cmd_validate(&build_config(&cli.common, &extra)?)
        }
        Command::Mc { trials, seed, per_trial } => {
            let extra: Vec<_> = [
                opt("trials", trials.map(|v| v.to_string())),
                opt("seed", seed.map(|v| v.to_string())),
                opt("per_trial_csv", per_trial.map(|p| p.display().to_string())),
            ]
            .into_iter()
            .flatten()
            .collect();
            commands::cmd_mc(&build_config(&cli.common, &extra)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(out) => {
            for line in &out.stderr {
                eprintln!("{line}");
            }
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::from(out.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
