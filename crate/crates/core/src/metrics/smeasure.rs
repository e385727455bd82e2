//! Structure measure: a blend of object-aware and region-aware similarity
//! between a saliency map and a binary mask.
//!
//! Standard deviations use the unbiased (n − 1) estimator and every
//! denominator is guarded by `f64::EPSILON`, matching the common reference
//! implementation.

use crate::error::Result;

use super::maps::{check_same_shape, GroundTruth, SaliencyMap};

/// Balance between the object and region terms.
pub const S_ALPHA: f64 = 0.5;

const EPS: f64 = f64::EPSILON;

pub fn s_measure(s: &SaliencyMap, gt: &GroundTruth) -> Result<f64> {
    check_same_shape(s, gt)?;
    let n = gt.values().len();
    let fg = gt.foreground_count();
    if fg == 0 {
        return Ok(1.0 - s.mean());
    }
    if fg == n {
        return Ok(s.mean());
    }
    let q = S_ALPHA * s_object(s, gt) + (1.0 - S_ALPHA) * s_region(s, gt);
    Ok(q.max(0.0))
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, count) = values.clone().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / count as f64;
    if count == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (count - 1) as f64).sqrt())
}

fn object_score(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (x, sigma) = mean_std(values);
    2.0 * x / (x * x + 1.0 + sigma + EPS)
}

fn s_object(s: &SaliencyMap, gt: &GroundTruth) -> f64 {
    let pairs = s.values().iter().zip(gt.values());
    let fg = object_score(pairs.clone().filter(|(_, &g)| g).map(|(&v, _)| v));
    let bg = object_score(pairs.filter(|(_, &g)| !g).map(|(&v, _)| 1.0 - v));
    let u = gt.foreground_count() as f64 / gt.values().len() as f64;
    u * fg + (1.0 - u) * bg
}

/// Foreground centroid as 1-based (column, row), rounded half away from zero.
fn centroid(gt: &GroundTruth) -> (usize, usize) {
    let (h, w) = (gt.height(), gt.width());
    let total = gt.foreground_count();
    if total == 0 {
        return ((w as f64 / 2.0).round() as usize, (h as f64 / 2.0).round() as usize);
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            if gt.get(y, x) {
                sx += (x + 1) as f64;
                sy += (y + 1) as f64;
            }
        }
    }
    (
        (sx / total as f64).round() as usize,
        (sy / total as f64).round() as usize,
    )
}

/// Rectangle [y0, y1) × [x0, x1).
#[derive(Clone, Copy)]
struct Block {
    y0: usize,
    y1: usize,
    x0: usize,
    x1: usize,
}

impl Block {
    fn area(&self) -> usize {
        (self.y1 - self.y0) * (self.x1 - self.x0)
    }

    fn values<'a>(&self, data: &'a [f64], width: usize) -> impl Iterator<Item = f64> + Clone + 'a {
        let b = *self;
        (b.y0..b.y1).flat_map(move |y| (b.x0..b.x1).map(move |x| data[y * width + x]))
    }
}

/// Structural similarity of one block; empty blocks score 0.
fn ssim(s: &[f64], g: &[f64], width: usize, block: Block) -> f64 {
    let n = block.area();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let x = block.values(s, width).sum::<f64>() / nf;
    let y = block.values(g, width).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in block.values(s, width).zip(block.values(g, width)) {
        sxx += (a - x) * (a - x);
        syy += (b - y) * (b - y);
        sxy += (a - x) * (b - y);
    }
    let d = nf - 1.0 + EPS;
    let (sxx, syy, sxy) = (sxx / d, syy / d, sxy / d);
    let alpha = 4.0 * x * y * sxy;
    let beta = (x * x + y * y) * (sxx + syy);
    if alpha != 0.0 {
        alpha / (beta + EPS)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn s_region(s: &SaliencyMap, gt: &GroundTruth) -> f64 {
    let (h, w) = (gt.height(), gt.width());
    let (cx, cy) = centroid(gt);
    let g = gt.as_saliency();
    let blocks = [
        Block {
            y0: 0,
            y1: cy,
            x0: 0,
            x1: cx,
        },
        Block {
            y0: 0,
            y1: cy,
            x0: cx,
            x1: w,
        },
        Block {
            y0: cy,
            y1: h,
            x0: 0,
            x1: cx,
        },
        Block {
            y0: cy,
            y1: h,
            x0: cx,
            x1: w,
        },
    ];
    let area = (h * w) as f64;
    let weights = [
        (cx * cy) as f64 / area,
        ((w - cx) * cy) as f64 / area,
        (cx * (h - cy)) as f64 / area,
    ];
    let weights = [
        weights[0],
        weights[1],
        weights[2],
        1.0 - weights[0] - weights[1] - weights[2],
    ];
    blocks
        .iter()
        .zip(weights)
        .map(|(&b, wt)| wt * ssim(s.values(), g.values(), w, b))
        .sum()
}
