//! Command-line front end: `train`, `predict`, `eval`, `ablate` and
//! `plot-pr`. Every command writes into its `--out` directory and finishes
//! with a `manifest.json` listing each artifact with its SHA-256.

pub mod config;
pub mod evaluate;
pub mod manifest;
pub mod plot;
pub mod predict;
pub mod train;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use pdfnet_core::Variant;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "pdfnet",
    version,
    about = "Parallel down-up fusion network for salient object detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Default, Args)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// FULL, NO_DC, ONE_DC, NO_CPC or NO_DUS.
    #[arg(long, value_name = "NAME")]
    pub variant: Option<Variant>,
    /// Train on generated shapes instead of a dataset.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, value_name = "N")]
    pub steps: Option<usize>,
    /// Square input size, a multiple of 16.
    #[arg(long, value_name = "N")]
    pub size: Option<usize>,
    /// Any other configuration key, e.g. `--set batch_size=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl Common {
    /// Defaults, then the config file, then `--set`, then dedicated flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            cfg.set(&k.trim().to_ascii_lowercase().replace('-', "_"), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.train.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(v) = self.variant {
            cfg.network.variant = v;
        }
        if self.synthetic {
            cfg.synthetic = true;
        }
        if let Some(steps) = self.steps {
            cfg.train.max_steps = steps;
        }
        if let Some(size) = self.size {
            cfg.network.input_size = (size, size);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one variant and write checkpoints and a loss log.
    Train(Common),
    /// Write a saliency PNG for every image in a directory.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
    },
    /// Score prediction PNGs against ground-truth masks.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        pred: PathBuf,
        #[arg(long, value_name = "DIR")]
        gt: PathBuf,
    },
    /// Train and evaluate all five variants under one configuration.
    Ablate(Common),
    /// Draw P-R curves from `pr_curve.csv` files.
    PlotPr {
        #[command(flatten)]
        common: Common,
        #[arg(required = true, value_name = "CSV")]
        curves: Vec<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.resolve()?;
            let losses = train::cmd_train(&cfg)?;
            println!(
                "trained {} for {} steps, final loss {:.6}; outputs in {}",
                cfg.network.variant,
                losses.len(),
                losses.last().copied().unwrap_or(f64::NAN),
                cfg.out.display()
            );
        }
        Command::Predict {
            common,
            checkpoint,
            input,
        } => {
            let cfg = common.resolve()?;
            let s = predict::cmd_predict(&checkpoint, &input, &cfg.out, common.variant)?;
            println!(
                "wrote {} maps ({} skipped) to {}",
                s.written.len(),
                s.skipped.len(),
                cfg.out.display()
            );
        }
        Command::Eval { common, pred, gt } => {
            let cfg = common.resolve()?;
            let r = evaluate::cmd_eval(&pred, &gt, &cfg.out)?;
            let m = &r.mean;
            println!(
                "{} images: precision {:.4} recall {:.4} F_β {:.4} MAE {:.4} S_m {:.4}",
                m.images, m.precision, m.recall, m.f_beta, m.mae, m.s_measure
            );
        }
        Command::Ablate(common) => {
            let cfg = common.resolve()?;
            let rows = evaluate::cmd_ablate(&cfg)?;
            print!("{}", evaluate::ablation_table(&rows));
        }
        Command::PlotPr { common, curves } => {
            let cfg = common.resolve()?;
            let refs: Vec<&std::path::Path> = curves.iter().map(PathBuf::as_path).collect();
            evaluate::cmd_plot_pr(&refs, &cfg.out)?;
            println!("wrote {}", cfg.out.join(evaluate::PR_PLOT).display());
        }
    }
    Ok(())
}
