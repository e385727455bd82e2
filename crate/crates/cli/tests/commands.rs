use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pdfnet_cli::manifest;

fn tiny_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/tiny.cfg")
}

fn pdfnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdfnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env("RUST_BACKTRACE", "0")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = pdfnet(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_mask(path: &Path, size: u32, on: impl Fn(u32, u32) -> bool) {
    image::GrayImage::from_fn(size, size, |x, y| image::Luma([if on(x, y) { 255 } else { 0 }]))
        .save(path)
        .unwrap();
}

#[test]
fn train_logs_one_row_per_step_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = tiny_config();
    ok(&[
        "train",
        "--config",
        s(&cfg),
        "--synthetic",
        "--steps",
        "50",
        "--size",
        "32",
        "--out",
        s(&out),
        "--set",
        "checkpoint_every=25",
    ]);
    let log = std::fs::read_to_string(out.join("loss.csv")).unwrap();
    let rows: Vec<&str> = log.lines().skip(1).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows
        .iter()
        .all(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap().is_finite()));
    assert!(out.join("checkpoints/step_000025.ckpt").exists());
    let resolved = std::fs::read_to_string(out.join("config.cfg")).unwrap();
    assert!(resolved.contains("steps = 50"), "{resolved}");
    assert!(resolved.contains("size = 32"), "{resolved}");
    assert!(manifest::verify(&out).unwrap().is_empty());

    // Predictions land next to a manifest too, and tampering is detected.
    let imgs = dir.path().join("imgs");
    std::fs::create_dir(&imgs).unwrap();
    image::RgbImage::from_pixel(40, 24, image::Rgb([90, 140, 200]))
        .save(imgs.join("a.png"))
        .unwrap();
    let pred = dir.path().join("pred");
    ok(&[
        "predict",
        "--checkpoint",
        s(&out.join("model.ckpt")),
        "--input",
        s(&imgs),
        "--out",
        s(&pred),
    ]);
    assert!(pred.join("a.png").exists());
    std::fs::write(pred.join("a.png"), b"changed").unwrap();
    assert_eq!(manifest::verify(&pred).unwrap(), ["a.png"]);
}

#[test]
fn missing_dataset_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdfnet(&[
        "train",
        "--set",
        &format!("dataset_root={}", s(&dir.path().join("nope"))),
        "--out",
        s(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn bad_flags_are_rejected() {
    assert!(!pdfnet(&["train", "--synthetic", "--variant", "HALF"]).status.success());
    assert!(!pdfnet(&["train", "--synthetic", "--size", "30"]).status.success());
    assert!(!pdfnet(&["train", "--synthetic", "--set", "colour=blue"])
        .status
        .success());
}

#[test]
fn evaluating_ground_truth_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt");
    std::fs::create_dir(&gt).unwrap();
    write_mask(&gt.join("one.png"), 16, |x, y| {
        (4..12).contains(&x) && (2..9).contains(&y)
    });
    write_mask(&gt.join("two.png"), 16, |x, y| x + y < 10);
    let out = dir.path().join("eval");
    let printed = ok(&["eval", "--pred", s(&gt), "--gt", s(&gt), "--out", s(&out)]);
    assert!(printed.contains("2 images"), "{printed}");

    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let mean = &json["mean"];
    assert_eq!(mean["f_beta"].as_f64(), Some(1.0));
    assert_eq!(mean["mae"].as_f64(), Some(0.0));
    assert!((mean["s_measure"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    // Every per-image row in the CSV agrees with the JSON report.
    let mut csv = csv::Reader::from_path(out.join("report.csv")).unwrap();
    let headers = csv.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = csv.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for (rec, img) in rows.iter().zip(json["images"].as_array().unwrap()) {
        assert_eq!(rec[col("id")], *img["id"].as_str().unwrap());
        for key in ["f_beta", "mae", "s_measure", "precision", "recall"] {
            assert_eq!(
                rec[col(key)].parse::<f64>().unwrap(),
                img[key].as_f64().unwrap(),
                "{key}"
            );
        }
    }
    assert_eq!(&rows[2][col("id")], "mean");
    assert!(manifest::verify(&out).unwrap().is_empty());

    let plot = dir.path().join("plot");
    ok(&["plot-pr", s(&out.join("pr_curve.csv")), "--out", s(&plot)]);
    assert!(image::open(plot.join("pr_curve.png")).is_ok());
}
