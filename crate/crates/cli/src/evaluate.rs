use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use pdfnet_core::data::to_tensors;
use pdfnet_core::metrics::{evaluate_dataset, evaluate_pairs, read_pr_csv, EvalReport, GroundTruth, SaliencyMap};
use pdfnet_core::{count_parameters, Variant};

use crate::config::RunConfig;
use crate::manifest::ManifestBuilder;
use crate::plot::write_pr_plot;
use crate::train::{evaluation_corpus, fit, loss_log, training_corpus, LOSS_LOG, RESOLVED_CONFIG};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const PR_CSV: &str = "pr_curve.csv";
pub const PR_PLOT: &str = "pr_curve.png";
pub const ABLATION_CSV: &str = "ablation.csv";
pub const ABLATION_TABLE: &str = "ablation.md";

/// Column headers of the ablation table after the variant name.
pub const ABLATION_COLUMNS: [&str; 4] = ["params", "F_β", "MAE", "S_m"];

fn write_report(out: &mut ManifestBuilder, prefix: &str, report: &EvalReport) -> Result<()> {
    report.write_json(&out.artifact(format!("{prefix}{REPORT_JSON}"))?)?;
    report.write_csv(&out.artifact(format!("{prefix}{REPORT_CSV}"))?)?;
    report.write_pr_csv(&out.artifact(format!("{prefix}{PR_CSV}"))?)?;
    write_pr_plot(&[&report.pr_curve], &out.artifact(format!("{prefix}{PR_PLOT}"))?)
}

pub fn cmd_eval(pred: &Path, gt: &Path, out_dir: &Path) -> Result<EvalReport> {
    let report = evaluate_dataset(pred, gt)
        .with_context(|| format!("evaluating {} against {}", pred.display(), gt.display()))?;
    let mut out = ManifestBuilder::new(out_dir, "eval");
    write_report(&mut out, "", &report)?;
    out.finish()?;
    Ok(report)
}

pub fn cmd_plot_pr(curves: &[&Path], out_dir: &Path) -> Result<()> {
    let data = curves
        .iter()
        .map(|p| read_pr_csv(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[_]> = data.iter().map(Vec::as_slice).collect();
    let mut out = ManifestBuilder::new(out_dir, "plot-pr");
    write_pr_plot(&refs, &out.artifact(PR_PLOT)?)?;
    out.finish()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    pub params: usize,
    pub f_beta: f64,
    pub mae: f64,
    pub s_measure: f64,
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = format!("variant,{}\n", ABLATION_COLUMNS.join(","));
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.variant, r.params, r.f_beta, r.mae, r.s_measure);
    }
    s
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut s = format!(
        "| variant | {} |\n|---|---:|---:|---:|---:|\n",
        ABLATION_COLUMNS.join(" | ")
    );
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {} | {:.4} | {:.4} | {:.4} |",
            r.variant, r.params, r.f_beta, r.mae, r.s_measure
        );
    }
    s
}

/// Trains and evaluates all five variants with the same seed, data and
/// schedule.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    cfg.require_data_source()?;
    let train = training_corpus(cfg)?;
    let test = evaluation_corpus(cfg)?;
    let (images, _) = to_tensors(&test.iter().collect::<Vec<_>>())?;
    let mut out = ManifestBuilder::new(&cfg.out, "ablate");
    out.write(RESOLVED_CONFIG, cfg.to_text())?;
    let mut rows = Vec::new();
    for variant in Variant::ALL {
        let mut vc = cfg.clone();
        vc.network.variant = variant;
        let mut losses = Vec::new();
        let trainer = fit(&vc, &train, |_, loss| {
            losses.push(loss);
            Ok(())
        })?;
        let pred = trainer.predict(&images)?;
        let pairs = test
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let gt = GroundTruth::from_binary(s.height, s.width, &s.mask)?;
                Ok((s.id.clone(), SaliencyMap::from_tensor(&pred, i)?, gt))
            })
            .collect::<pdfnet_core::Result<Vec<_>>>()?;
        let report = evaluate_pairs(pairs)?;
        let prefix = format!("{}/", variant.name());
        out.write(format!("{prefix}{LOSS_LOG}"), loss_log(&losses))?;
        write_report(&mut out, &prefix, &report)?;
        let row = AblationRow {
            variant,
            params: count_parameters(trainer.model()),
            f_beta: report.mean.f_beta,
            mae: report.mean.mae,
            s_measure: report.mean.s_measure,
        };
        log::info!(
            "{variant}: F_β {:.4}, MAE {:.4}, S_m {:.4}",
            row.f_beta,
            row.mae,
            row.s_measure
        );
        rows.push(row);
    }
    out.write(ABLATION_CSV, ablation_csv(&rows))?;
    out.write(ABLATION_TABLE, ablation_table(&rows))?;
    out.finish()?;
    Ok(rows)
}
