//! Raster P-R plots: recall on the horizontal axis, precision on the
//! vertical one, both spanning [0, 1] with grid lines every 0.1. Curves
//! are colored in argument order and a matching swatch column sits in the
//! upper right.

use std::path::Path;

use anyhow::{Context, Result};
use image::{Rgb, RgbImage};
use pdfnet_core::metrics::PrPoint;

const SIZE: u32 = 512;
const MARGIN: u32 = 48;
const PALETTE: [[u8; 3]; 6] = [
    [220, 40, 40],
    [30, 100, 220],
    [20, 150, 60],
    [230, 140, 0],
    [140, 60, 180],
    [0, 160, 170],
];

fn to_pixel(recall: f64, precision: f64) -> (i64, i64) {
    let span = (SIZE - 2 * MARGIN) as f64;
    let x = MARGIN as f64 + recall.clamp(0.0, 1.0) * span;
    let y = (SIZE - MARGIN) as f64 - precision.clamp(0.0, 1.0) * span;
    (x.round() as i64, y.round() as i64)
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb<u8>, thick: bool) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        put(img, x, y, c);
        if thick {
            put(img, x + 1, y, c);
            put(img, x, y + 1, c);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

pub fn render_pr_plot(curves: &[&[PrPoint]]) -> RgbImage {
    let mut img = RgbImage::from_pixel(SIZE, SIZE, Rgb([255, 255, 255]));
    let grid = Rgb([225, 225, 225]);
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        line(&mut img, to_pixel(v, 0.0), to_pixel(v, 1.0), grid, false);
        line(&mut img, to_pixel(0.0, v), to_pixel(1.0, v), grid, false);
    }
    let axis = Rgb([0, 0, 0]);
    line(&mut img, to_pixel(0.0, 0.0), to_pixel(1.0, 0.0), axis, true);
    line(&mut img, to_pixel(0.0, 0.0), to_pixel(0.0, 1.0), axis, true);
    for (i, curve) in curves.iter().enumerate() {
        let color = Rgb(PALETTE[i % PALETTE.len()]);
        let mut pts: Vec<(i64, i64)> = curve.iter().map(|p| to_pixel(p.recall, p.precision)).collect();
        pts.dedup();
        for pair in pts.windows(2) {
            line(&mut img, pair[0], pair[1], color, true);
        }
        if let [only] = pts[..] {
            put(&mut img, only.0, only.1, color);
        }
        let top = MARGIN as i64 + 6 + 14 * i as i64;
        let left = (SIZE - MARGIN) as i64 - 16;
        for y in top..top + 10 {
            for x in left..left + 10 {
                put(&mut img, x, y, color);
            }
        }
    }
    img
}

pub fn write_pr_plot(curves: &[&[PrPoint]], path: &Path) -> Result<()> {
    render_pr_plot(curves)
        .save(path)
        .with_context(|| format!("writing {}", path.display()))
}
