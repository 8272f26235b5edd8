//! `maxwell`: experiment runner for the Hermite–Galerkin Boltzmann toolkit.
//!
//! Every subcommand reads a [`RunConfig`], writes its artifacts to the output
//! directory and exits with 0 on pass, 1 on a failed verification and 2 on a
//! usage or configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "MAXWELL_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "maxwell", version, about = "Hermite–Galerkin runs for Maxwellian-molecule Boltzmann dynamics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Kernel spec: linear, quintic, family:<g(s)> or expr:<b(x)>.
    #[arg(long, global = true)]
    kernel: Option<String>,
    /// Basis degree N.
    #[arg(long, global = true)]
    degree: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides MAXWELL_OUT_DIR and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral gap, theorem radius and moment table.
    Gap,
    /// Symmetry, evenness and cutoff checks of the kernel.
    CheckKernel,
    /// Kernel checks plus structural, spectral, trilinear, conservation and oracle checks.
    Verify,
    /// Assembles L and R and writes them as text.
    Assemble,
    /// Integrates the Galerkin system from the configured initial condition.
    Evolve,
    /// Solves the Duhamel fixed point by Picard iteration.
    Picard,
    /// Runs both solvers and checks the decay statements.
    Theorem,
    /// Chi-square table for product-Gaussian initial data.
    GaussianExample {
        /// Variances `s1,s2,s3` (repeatable); defaults to a standard table.
        #[arg(long = "sigma", value_name = "S1,S2,S3")]
        sigma: Vec<String>,
    },
    /// Monte-Carlo spot checks of assembled entries.
    Oracle,
}

fn resolve_config(common: &Common) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        cfg.apply_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    for s in &common.set {
        cfg.assign(s)?;
    }
    if let Some(k) = &common.kernel {
        cfg.kernel = k.clone();
    }
    if let Some(n) = common.degree {
        cfg.degree = n;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.display().to_string();
    } else if let Ok(o) = std::env::var(OUT_DIR_ENV) {
        if !o.is_empty() {
            cfg.out_dir = o;
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cfg = match resolve_config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Gap => commands::gap(&cfg),
        Command::CheckKernel => commands::check_kernel(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Assemble => commands::assemble(&cfg),
        Command::Evolve => commands::evolve(&cfg),
        Command::Picard => commands::picard(&cfg),
        Command::Theorem => commands::theorem(&cfg),
        Command::GaussianExample { sigma } => commands::gaussian_example(&cfg, sigma),
        Command::Oracle => commands::oracle(&cfg),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
