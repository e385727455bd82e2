//! End-to-end acceptance checks. Each prints one PASS/FAIL line with its
//! wall time against its budget; the process exits non-zero if any fails.

#[path = "../../core/tests/support/benchmark_rows.rs"]
mod benchmark_rows;
#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pdfnet_core::data::{make_synthetic_corpus, to_tensors};
use pdfnet_core::metrics::*;
use pdfnet_core::model::NUM_PATHS;
use pdfnet_core::training::*;
use pdfnet_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn pdfnet(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pdfnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env("RUST_BACKTRACE", "0")
        .output()
        .map_err(fail)?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "pdfnet {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn benchmark_scores() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, p, r, f) in benchmark_rows::ROWS {
        let err = (f_measure(p, r, BETA_SQUARED) - f).abs();
        ensure(err <= benchmark_rows::TOLERANCE, || format!("{name}: off by {err:.2e}"))?;
        worst = worst.max(err);
    }
    Ok(format!(
        "{} rows, worst deviation {worst:.1e}",
        benchmark_rows::ROWS.len()
    ))
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let s: Vec<Vec<f64>> = (0..8)
            .map(|_| {
                (0..8)
                    .map(|_| {
                        if rng.random_bool(0.3) {
                            rng.random_range(0..256) as f64 / 255.0
                        } else {
                            rng.random()
                        }
                    })
                    .collect()
            })
            .collect();
        let density: f64 = rng.random_range(0.05..0.95);
        let mut g: Vec<Vec<bool>> = (0..8)
            .map(|_| (0..8).map(|_| rng.random_bool(density)).collect())
            .collect();
        g[rng.random_range(0..8)][rng.random_range(0..8)] = true;
        let sm = SaliencyMap::new(8, 8, s.iter().flatten().copied().collect()).map_err(fail)?;
        let gt = GroundTruth::new(8, 8, g.iter().flatten().copied().collect()).map_err(fail)?;

        let curve = pr_curve(&sm, &gt).map_err(fail)?;
        ensure(curve.len() == NUM_THRESHOLDS, || {
            format!("curve has {} points", curve.len())
        })?;
        for (k, pt) in curve.iter().enumerate() {
            let (op, or) = oracle::precision_recall(&s, &g, k as f64 / 255.0);
            let of = oracle::f_measure(op, or);
            for err in [
                (pt.precision - op).abs(),
                (pt.recall - or).abs(),
                (f_measure(pt.precision, pt.recall, BETA_SQUARED) - of).abs(),
            ] {
                worst = worst.max(err);
            }
        }
        worst = worst.max((mae(&sm, &gt).map_err(fail)? - oracle::mae(&s, &g)).abs());
        worst = worst.max((s_measure(&sm, &gt).map_err(fail)? - oracle::s_measure(&s, &g)).abs());
        ensure(worst <= 1e-9, || format!("case {case}: deviation {worst:.2e}"))?;
    }
    Ok(format!("1000 pairs, worst deviation {worst:.1e}"))
}

fn gradient_check_config(variant: Variant) -> NetworkConfig {
    let mut c = NetworkConfig::tiny().with_variant(variant).with_input_size(16, 16);
    c.backbone_widths = vec![2, 4, 4, 4, 4];
    c.path_widths = vec![2, 4, 4, 4, 4];
    c.compression_widths = vec![2, 4, 4, 4, 4];
    c.fusion_width = 4;
    c
}

fn gradient_check_suite() -> Outcome {
    let corpus = make_synthetic_corpus(1, 16, 5).map_err(fail)?;
    let (x, y) = to_tensors(&corpus.iter().collect::<Vec<_>>()).map_err(fail)?;
    let (x, y) = (x.cast::<f64>(), y.cast::<f64>());
    let mut notes = Vec::new();
    for v in [Variant::Full, Variant::NoCpc, Variant::NoDus] {
        let model = build_variant(&gradient_check_config(v)).map_err(fail)?;
        let tc = TrainConfig {
            weight_init: WeightInit::He,
            bias_init: 0.01,
            seed: 3,
            ..TrainConfig::new(1)
        };
        let params: ParamStore<f64> = init_params(&model, &tc);
        let r = gradient_check(&model, &params, &x, &y).map_err(fail)?;
        ensure(r.max_relative_error < 1e-4, || {
            format!("{v}: max relative error {:.2e} at {:?}", r.max_relative_error, r.worst)
        })?;
        notes.push(format!(
            "{v} {:.1e} over {} ({} kink crossings excluded)",
            r.max_relative_error, r.coordinates_checked, r.kink_crossings
        ));
    }
    Ok(notes.join(", "))
}

fn shape_suite() -> Outcome {
    let tc = TrainConfig {
        weight_init: WeightInit::He,
        ..TrainConfig::new(1)
    };
    for size in [64, 96, 128] {
        let x = Tensor::from_vec(
            Shape::new(2, size, size, 3),
            (0..2 * size * size * 3)
                .map(|i| ((i * 37) % 101) as f32 / 100.0)
                .collect(),
        )
        .map_err(fail)?;
        for v in Variant::ALL {
            let model =
                build_variant(&NetworkConfig::tiny().with_variant(v).with_input_size(size, size)).map_err(fail)?;
            let params: ParamStore<f32> = init_params(&model, &tc);
            let mut g = Graph::new(&params);
            let input = g.input(x.clone(), "image").map_err(fail)?;
            let trace = model.forward_graph(&mut g, input).map_err(fail)?;
            let out = g.shape(trace.output);
            ensure(out == Shape::new(2, size, size, 1), || {
                format!("{v} at {size}: output {out}")
            })?;
            let value = g.value(trace.output);
            ensure(value.data().iter().all(|&z| z > 0.0 && z < 1.0), || {
                format!("{v} at {size}: output leaves (0, 1)")
            })?;
            for rec in g.concat_log() {
                let sum: usize = rec.input_channels.iter().sum();
                ensure(sum == rec.output_channels, || {
                    format!("{v}: {} concatenates {sum} into {}", rec.label, rec.output_channels)
                })?;
            }
            if v == Variant::Full {
                for (k, path) in trace.paths.iter().enumerate() {
                    let got = g.shape(path.features).spatial();
                    let want = (size >> k, size >> k);
                    ensure(got == want, || {
                        format!("path {} at {size}: {got:?}, expected {want:?}", k + 1)
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "5 variants at 64, 96 and 128, {NUM_PATHS} path resolutions checked"
    ))
}

fn overfit() -> Outcome {
    let mut cfg = NetworkConfig::tiny().with_input_size(64, 64);
    cfg.backbone_widths = vec![8, 16, 16, 16, 16];
    cfg.path_widths = vec![8; NUM_PATHS];
    cfg.compression_widths = vec![8; NUM_PATHS];
    cfg.fusion_width = 16;
    let model = build_variant(&cfg).map_err(fail)?;
    let tc = TrainConfig {
        learning_rate: 1e-4,
        seed: 1,
        ..TrainConfig::new(1000)
    };
    let corpus = make_synthetic_corpus(4, 64, 11).map_err(fail)?;
    let (x, y) = to_tensors(&corpus.iter().collect::<Vec<_>>()).map_err(fail)?;
    let mut trainer = Trainer::<f32>::new(model, tc).map_err(fail)?;
    let mut last = (0.0, 1.0);
    for step in 1..=1000 {
        trainer.train_step(&x, &y).map_err(fail)?;
        if step % 25 != 0 {
            continue;
        }
        let pred = trainer.predict(&x).map_err(fail)?;
        let pairs = corpus
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok((
                    s.id.clone(),
                    SaliencyMap::from_tensor(&pred, i)?,
                    GroundTruth::from_binary(64, 64, &s.mask)?,
                ))
            })
            .collect::<pdfnet_core::Result<Vec<_>>>()
            .map_err(fail)?;
        let m = evaluate_pairs(pairs).map_err(fail)?.mean;
        last = (m.f_beta, m.mae);
        if m.f_beta >= 0.95 && m.mae <= 0.02 {
            return Ok(format!("step {step}: F_β {:.4}, MAE {:.4}", m.f_beta, m.mae));
        }
    }
    Err(format!("after 1000 steps F_β {:.4}, MAE {:.4}", last.0, last.1))
}

fn ablation(work: &Path) -> Outcome {
    let count = |v: Variant| build_variant(&NetworkConfig::default().with_variant(v)).map(|m| count_parameters(&m));
    let (no_dc, one_dc, full) = (
        count(Variant::NoDc).map_err(fail)?,
        count(Variant::OneDc).map_err(fail)?,
        count(Variant::Full).map_err(fail)?,
    );
    ensure(no_dc < one_dc && one_dc < full, || {
        format!("counts {no_dc}, {one_dc}, {full}")
    })?;

    let out = work.join("ablate");
    let cfg = config_dir().join("tiny.cfg");
    let printed = pdfnet(&[
        "ablate",
        "--config",
        p(&cfg),
        "--synthetic",
        "--steps",
        "10",
        "--out",
        p(&out),
    ])?;
    let rows: Vec<&str> = printed
        .lines()
        .filter(|l| Variant::ALL.iter().any(|v| l.contains(&format!("| {v} "))))
        .collect();
    ensure(rows.len() == 5, || format!("expected 5 table rows, got:\n{printed}"))?;
    let header = printed.lines().next().unwrap_or_default();
    ensure(["F_β", "MAE", "S_m"].iter().all(|c| header.contains(c)), || {
        format!("header `{header}`")
    })?;
    for v in Variant::ALL {
        let log = std::fs::read_to_string(out.join(v.name()).join("loss.csv")).map_err(fail)?;
        ensure(log.lines().count() == 11, || {
            format!("{v}: {} loss rows", log.lines().count() - 1)
        })?;
    }
    Ok(format!("NO_DC {no_dc} < ONE_DC {one_dc} < FULL {full}; 5-row table"))
}

fn determinism(work: &Path) -> Outcome {
    let cfg = config_dir().join("tiny.cfg");
    let run = |name: &str| -> Result<PathBuf, String> {
        let out = work.join(name);
        pdfnet(&[
            "train",
            "--config",
            p(&cfg),
            "--synthetic",
            "--steps",
            "20",
            "--seed",
            "7",
            "--out",
            p(&out),
        ])?;
        Ok(out)
    };
    let (a, b) = (run("train_a")?, run("train_b")?);
    let read = |path: PathBuf| std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()));
    let log = read(a.join("loss.csv"))?;
    ensure(log == read(b.join("loss.csv"))?, || "loss logs differ".into())?;
    ensure(read(a.join("model.ckpt"))? == read(b.join("model.ckpt"))?, || {
        "final checkpoints differ".into()
    })?;

    let images = work.join("images");
    std::fs::create_dir_all(&images).map_err(fail)?;
    for s in make_synthetic_corpus(3, 64, 99).map_err(fail)? {
        let img = image::RgbImage::from_fn(64, 64, |x, y| {
            let i = 3 * (y as usize * 64 + x as usize);
            image::Rgb([0, 1, 2].map(|c| (s.image[i + c] * 255.0).round() as u8))
        });
        img.save(images.join(format!("{}.png", s.id))).map_err(fail)?;
    }
    let ckpt = a.join("model.ckpt");
    let predict = |name: &str| -> Result<PathBuf, String> {
        let out = work.join(name);
        pdfnet(&[
            "predict",
            "--checkpoint",
            p(&ckpt),
            "--input",
            p(&images),
            "--out",
            p(&out),
        ])?;
        Ok(out)
    };
    let (pa, pb) = (predict("pred_a")?, predict("pred_b")?);
    for entry in std::fs::read_dir(&pa).map_err(fail)? {
        let name = entry.map_err(fail)?.file_name();
        ensure(read(pa.join(&name))? == read(pb.join(&name))?, || {
            format!("{name:?} differs")
        })?;
    }
    Ok(format!(
        "{} identical loss rows, predictions bitwise equal",
        log.iter().filter(|&&c| c == b'\n').count() - 1
    ))
}

fn checkpoints(work: &Path) -> Outcome {
    let cfg = NetworkConfig::tiny();
    let model = build_variant(&cfg).map_err(fail)?;
    let params: ParamStore<f32> = init_params(&model, &TrainConfig::new(1));
    let (a, b) = (work.join("a.ckpt"), work.join("b.ckpt"));
    save_checkpoint(&params, &cfg, 5, 6, &a).map_err(fail)?;
    let loaded = load_checkpoint(&a).map_err(fail)?;
    save_checkpoint(
        &loaded.params,
        loaded.config(),
        loaded.manifest.step,
        loaded.manifest.seed,
        &b,
    )
    .map_err(fail)?;
    let bytes = std::fs::read(&a).map_err(fail)?;
    ensure(bytes == std::fs::read(&b).map_err(fail)?, || {
        "resaved checkpoint differs".into()
    })?;
    for v in Variant::ALL.into_iter().filter(|&v| v != Variant::Full) {
        ensure(loaded.params_for(&cfg.clone().with_variant(v)).is_err(), || {
            format!("FULL checkpoint accepted by {v}")
        })?;
    }
    let images = work.join("ckpt_images");
    std::fs::create_dir_all(&images).map_err(fail)?;
    image::RgbImage::new(16, 16).save(images.join("x.png")).map_err(fail)?;
    let cli = pdfnet(&[
        "predict",
        "--checkpoint",
        p(&a),
        "--input",
        p(&images),
        "--variant",
        "NO_DC",
        "--out",
        p(&work.join("ckpt_pred")),
    ]);
    ensure(cli.is_err(), || "predict accepted a FULL checkpoint as NO_DC".into())?;
    Ok(format!("{} bytes round-trip, 4 foreign variants rejected", bytes.len()))
}

type Check<'a> = (&'static str, u64, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let work = tempfile::tempdir().expect("temporary directory");
    let checks: Vec<Check> = vec![
        ("benchmark scores", 1, Box::new(benchmark_scores)),
        ("metric oracles", 30, Box::new(metric_oracles)),
        ("gradient check", 300, Box::new(gradient_check_suite)),
        ("output shapes", 60, Box::new(shape_suite)),
        ("overfit four samples", 600, Box::new(overfit)),
        ("ablation", 300, Box::new(|| ablation(work.path()))),
        ("determinism", 600, Box::new(|| determinism(work.path()))),
        ("checkpoints", 60, Box::new(|| checkpoints(work.path()))),
    ];
    let mut failed = 0;
    for (name, budget, check) in &checks {
        let start = Instant::now();
        let mut outcome = check();
        let took = start.elapsed();
        if outcome.is_ok() && took > Duration::from_secs(*budget) {
            outcome = Err(format!("took {took:.1?}, budget {budget} s"));
        }
        match outcome {
            Ok(detail) => println!("PASS {name} ({took:.2?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({took:.2?}): {detail}");
            }
        }
    }
    println!("{} of {} acceptance checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
