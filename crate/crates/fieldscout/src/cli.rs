//! Command-line surface. Flags override the matching config keys.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::Config;
use crate::error::CliResult;
use crate::output::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "fieldscout", version, about = "Weed-field representation and informative path planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config; defaults are used when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output run directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic stage costs and a fixed thread layout; outputs are byte-stable
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Ground-truth raster (PNG/TIFF); overrides the config field source
    #[arg(long)]
    pub raster: Option<PathBuf>,
    /// Comma-separated partition methods
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the field model and score every partition method
    Represent {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run adaptive survey missions
    Mission {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        starts: Option<usize>,
        /// Mission time budget in seconds
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Correlate field features with method scores across represent runs
    Compare {
        #[command(flatten)]
        common: Common,
        /// Directory whose subdirectories are represent runs
        #[arg(long)]
        fields: PathBuf,
    },
    /// Merge run directories into one report
    Report {
        #[command(flatten)]
        common: Common,
        /// Run directories to merge
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

fn base_config(c: &Common) -> CliResult<Config> {
    let mut cfg = match &c.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.deterministic |= c.deterministic;
    Ok(cfg)
}

fn apply_field(cfg: &mut Config, f: &FieldArgs) -> Option<Vec<String>> {
    if let Some(r) = &f.raster {
        cfg.field.path = Some(r.clone());
    }
    f.methods.clone()
}

/// Resolves the effective config and runs the subcommand.
pub fn run(cli: Cli) -> CliResult<RunManifest> {
    match cli.command {
        Command::Represent { common, field, trials } => {
            let mut cfg = base_config(&common)?;
            if let Some(m) = apply_field(&mut cfg, &field) {
                cfg.represent.methods = m;
            }
            if let Some(t) = trials {
                cfg.represent.trials = t;
            }
            commands::represent(&cfg, &common.out)
        }
        Command::Mission {
            common,
            field,
            starts,
            budget,
        } => {
            let mut cfg = base_config(&common)?;
            if let Some(m) = apply_field(&mut cfg, &field) {
                cfg.mission.methods = m;
            }
            if let Some(s) = starts {
                cfg.mission.starts = s;
            }
            if let Some(b) = budget {
                cfg.mission.budget_s = b;
            }
            commands::mission(&cfg, &common.out)
        }
        Command::Compare { common, fields } => {
            let cfg = base_config(&common)?;
            commands::compare(&cfg, &fields, &common.out)
        }
        Command::Report { common, runs } => {
            let cfg = base_config(&common)?;
            commands::report(&cfg, &runs, &common.out)
        }
    }
}

