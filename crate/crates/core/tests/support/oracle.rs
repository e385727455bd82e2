//! Metric definitions written pixel by pixel on nested vectors, sharing
//! nothing with the library.

#![allow(clippy::needless_range_loop)]

pub const BETA2: f64 = 0.3;

pub fn precision_recall(s: &[Vec<f64>], g: &[Vec<bool>], t: f64) -> (f64, f64) {
    let (mut tp, mut fp, mut fn_) = (0u32, 0u32, 0u32);
    for (row_s, row_g) in s.iter().zip(g) {
        for (&v, &gt) in row_s.iter().zip(row_g) {
            let pred = v >= t;
            if pred && gt {
                tp += 1;
            }
            if pred && !gt {
                fp += 1;
            }
            if !pred && gt {
                fn_ += 1;
            }
        }
    }
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    (precision, tp as f64 / (tp + fn_) as f64)
}

pub fn f_measure(p: f64, r: f64) -> f64 {
    if p == 0.0 && r == 0.0 {
        0.0
    } else {
        (1.0 + BETA2) * p * r / (BETA2 * p + r)
    }
}

pub fn mae(s: &[Vec<f64>], g: &[Vec<bool>]) -> f64 {
    let mut total = 0.0;
    let mut n = 0.0;
    for (row_s, row_g) in s.iter().zip(g) {
        for (&v, &gt) in row_s.iter().zip(row_g) {
            total += (v - if gt { 1.0 } else { 0.0 }).abs();
            n += 1.0;
        }
    }
    total / n
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn object(v: &[f64]) -> f64 {
    let x = mean(v);
    2.0 * x / (x * x + 1.0 + sample_std(v) + f64::EPSILON)
}

fn block_ssim(s: &[f64], g: &[f64]) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let n = s.len() as f64;
    let x = mean(s);
    let y = mean(g);
    let mut sx2 = 0.0;
    let mut sy2 = 0.0;
    let mut sxy = 0.0;
    for i in 0..s.len() {
        sx2 += (s[i] - x) * (s[i] - x);
        sy2 += (g[i] - y) * (g[i] - y);
        sxy += (s[i] - x) * (g[i] - y);
    }
    sx2 /= n - 1.0 + f64::EPSILON;
    sy2 /= n - 1.0 + f64::EPSILON;
    sxy /= n - 1.0 + f64::EPSILON;
    let alpha = 4.0 * x * y * sxy;
    let beta = (x * x + y * y) * (sx2 + sy2);
    if alpha != 0.0 {
        alpha / (beta + f64::EPSILON)
    } else if alpha == 0.0 && beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn matlab_round(v: f64) -> usize {
    (v + 0.5).floor() as usize
}

pub fn s_measure(s: &[Vec<f64>], g: &[Vec<bool>]) -> f64 {
    let rows = s.len();
    let cols = s[0].len();
    let flat_s: Vec<f64> = s.iter().flatten().copied().collect();
    let flat_g: Vec<f64> = g.iter().flatten().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let y = mean(&flat_g);
    if y == 0.0 {
        return 1.0 - mean(&flat_s);
    }
    if y == 1.0 {
        return mean(&flat_s);
    }
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    for i in 0..flat_s.len() {
        if flat_g[i] == 1.0 {
            fg.push(flat_s[i]);
        } else {
            bg.push(1.0 - flat_s[i]);
        }
    }
    let s_object = y * object(&fg) + (1.0 - y) * object(&bg);

    let mut total = 0.0;
    let mut sum_i = 0.0;
    let mut sum_j = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            if g[i][j] {
                total += 1.0;
                sum_i += (i + 1) as f64;
                sum_j += (j + 1) as f64;
            }
        }
    }
    let cx = matlab_round(sum_j / total);
    let cy = matlab_round(sum_i / total);
    let take = |r0: usize, r1: usize, c0: usize, c1: usize, m: &[f64]| -> Vec<f64> {
        let mut out = Vec::new();
        for i in r0..r1 {
            for j in c0..c1 {
                out.push(m[i * cols + j]);
            }
        }
        out
    };
    let area = (rows * cols) as f64;
    let w1 = (cx * cy) as f64 / area;
    let w2 = ((cols - cx) * cy) as f64 / area;
    let w3 = (cx * (rows - cy)) as f64 / area;
    let w4 = 1.0 - w1 - w2 - w3;
    let q1 = block_ssim(&take(0, cy, 0, cx, &flat_s), &take(0, cy, 0, cx, &flat_g));
    let q2 = block_ssim(&take(0, cy, cx, cols, &flat_s), &take(0, cy, cx, cols, &flat_g));
    let q3 = block_ssim(&take(cy, rows, 0, cx, &flat_s), &take(cy, rows, 0, cx, &flat_g));
    let q4 = block_ssim(&take(cy, rows, cx, cols, &flat_s), &take(cy, rows, cx, cols, &flat_g));
    let s_region = w1 * q1 + w2 * q2 + w3 * q3 + w4 * q4;
    let q = 0.5 * s_object + 0.5 * s_region;
    if q < 0.0 {
        0.0
    } else {
        q
    }
}
