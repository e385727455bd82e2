use std::fmt::Write as _;

use anyhow::{Context, Result};
use pdfnet_core::data::{
    augment, endless_batches, load_dataset, make_synthetic_corpus, resize_sample, to_tensors, Sample,
};
use pdfnet_core::training::{save_checkpoint, Trainer};
use pdfnet_core::{build_variant, count_parameters};

use crate::config::RunConfig;
use crate::manifest::ManifestBuilder;

pub const LOSS_LOG: &str = "loss.csv";
pub const FINAL_CHECKPOINT: &str = "model.ckpt";
pub const RESOLVED_CONFIG: &str = "config.cfg";

fn load_split(cfg: &RunConfig, split: &str, synthetic_count: usize, synthetic_seed: u64) -> Result<Vec<Sample>> {
    let (h, w) = cfg.network.input_size;
    if cfg.synthetic {
        return Ok(make_synthetic_corpus(synthetic_count, h, synthetic_seed)?);
    }
    let root = cfg.dataset_root.as_ref().context("no dataset_root configured")?;
    let ds = load_dataset(root, split).with_context(|| format!("loading split `{split}` from {}", root.display()))?;
    ds.samples
        .iter()
        .map(|s| resize_sample(s, h, w).map_err(Into::into))
        .collect()
}

pub fn training_corpus(cfg: &RunConfig) -> Result<Vec<Sample>> {
    load_split(cfg, &cfg.train_split, cfg.synthetic_samples, cfg.train.seed)
}

/// Held-out data: the test split, or a synthetic corpus from a different
/// stream than the training one.
pub fn evaluation_corpus(cfg: &RunConfig) -> Result<Vec<Sample>> {
    load_split(
        cfg,
        &cfg.test_split,
        cfg.synthetic_eval_samples,
        cfg.train.seed ^ 0x5eed_e7a1,
    )
}

fn mix(seed: u64, step: u64, index: u64) -> u64 {
    let mut z = seed ^ step.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `cfg.train.max_steps` updates over shuffled, augmented batches of
/// `corpus`, calling `on_step` after each one.
pub fn fit<F>(cfg: &RunConfig, corpus: &[Sample], mut on_step: F) -> Result<Trainer<f32>>
where
    F: FnMut(&Trainer<f32>, f64) -> Result<()>,
{
    let model = build_variant(&cfg.network)?;
    let mut trainer = Trainer::<f32>::new(model, cfg.train.clone())?;
    let seed = cfg.train.seed;
    let batches = endless_batches(corpus, cfg.train.batch_size, seed, true)?;
    for (step, batch) in batches.take(cfg.train.max_steps).enumerate() {
        let augmented: Vec<Sample> = batch
            .iter()
            .enumerate()
            .map(|(i, s)| augment(s, &cfg.augment, mix(seed, step as u64, i as u64)))
            .collect::<pdfnet_core::Result<_>>()?;
        let (x, y) = to_tensors(&augmented.iter().collect::<Vec<_>>())?;
        let loss = trainer.train_step(&x, &y).with_context(|| {
            format!(
                "training aborted at step {} (variant {})",
                step + 1,
                cfg.network.variant
            )
        })?;
        on_step(&trainer, loss)?;
    }
    Ok(trainer)
}

pub fn loss_log(losses: &[f64]) -> String {
    let mut s = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(s, "{},{l}", i + 1);
    }
    s
}

pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.require_data_source()?;
    let corpus = training_corpus(cfg)?;
    let mut out = ManifestBuilder::new(&cfg.out, "train");
    out.write(RESOLVED_CONFIG, cfg.to_text())?;
    log::info!(
        "training {} ({} parameters) on {} samples for {} steps",
        cfg.network.variant,
        count_parameters(&build_variant(&cfg.network)?),
        corpus.len(),
        cfg.train.max_steps
    );
    let mut losses = Vec::with_capacity(cfg.train.max_steps);
    let trainer = fit(cfg, &corpus, |t, loss| {
        losses.push(loss);
        let step = t.step();
        if step % 10 == 0 {
            log::info!("step {step}: loss {loss:.6}");
        }
        if step % cfg.checkpoint_every as u64 == 0 && step < cfg.train.max_steps as u64 {
            let path = out.artifact(format!("checkpoints/step_{step:06}.ckpt"))?;
            save_checkpoint(t.params(), &cfg.network, step, cfg.train.seed, &path)?;
        }
        Ok(())
    })?;
    out.write(LOSS_LOG, loss_log(&losses))?;
    let path = out.artifact(FINAL_CHECKPOINT)?;
    save_checkpoint(trainer.params(), &cfg.network, trainer.step(), cfg.train.seed, &path)?;
    out.finish()?;
    Ok(losses)
}
