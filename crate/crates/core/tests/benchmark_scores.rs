#[path = "support/benchmark_rows.rs"]
mod benchmark_rows;

use benchmark_rows::{ROWS, TOLERANCE};
use pdfnet_core::metrics::{f_measure, BETA_SQUARED};

#[test]
fn reported_f_scores_follow_from_precision_and_recall() {
    for (name, p, r, f) in ROWS {
        let got = f_measure(p, r, BETA_SQUARED);
        assert!((got - f).abs() <= TOLERANCE, "{name}: {got:.5} vs {f}");
    }
}

#[test]
fn another_beta_would_not_fit() {
    let misses = ROWS
        .iter()
        .filter(|&&(_, p, r, f)| (f_measure(p, r, 1.0) - f).abs() > TOLERANCE)
        .count();
    assert!(misses >= 12, "{misses}");
}
