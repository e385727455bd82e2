use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::SIZE_MULTIPLE;

use super::sample::Sample;

#[derive(Clone, Copy, Debug)]
enum Shape {
    Ellipse { cy: f64, cx: f64, ry: f64, rx: f64 },
    Rect { y0: f64, x0: f64, y1: f64, x1: f64 },
}

impl Shape {
    fn contains(&self, y: f64, x: f64) -> bool {
        match *self {
            Shape::Ellipse { cy, cx, ry, rx } => ((y - cy) / ry).powi(2) + ((x - cx) / rx).powi(2) <= 1.0,
            Shape::Rect { y0, x0, y1, x1 } => (y0..y1).contains(&y) && (x0..x1).contains(&x),
        }
    }

    fn random(rng: &mut ChaCha8Rng, size: f64) -> Shape {
        let ry = rng.random_range(0.08..0.22) * size;
        let rx = rng.random_range(0.08..0.22) * size;
        let cy = rng.random_range(ry..size - ry);
        let cx = rng.random_range(rx..size - rx);
        if rng.random_bool(0.5) {
            Shape::Ellipse { cy, cx, ry, rx }
        } else {
            Shape::Rect {
                y0: cy - ry,
                x0: cx - rx,
                y1: cy + ry,
                x1: cx + rx,
            }
        }
    }
}

fn render(id: String, size: usize, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let sf = size as f64;
    loop {
        let shapes: Vec<Shape> = (0..rng.random_range(1..=3)).map(|_| Shape::random(rng, sf)).collect();
        let fg_color: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.75..1.0));
        let bg_base: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.1..0.35));
        let (fy, fx, phase) = (
            rng.random_range(1.0..4.0) * std::f64::consts::TAU / sf,
            rng.random_range(1.0..4.0) * std::f64::consts::TAU / sf,
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let mut image = Vec::with_capacity(size * size * 3);
        let mut mask = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                let (py, px) = (y as f64 + 0.5, x as f64 + 0.5);
                let inside = shapes.iter().any(|s| s.contains(py, px));
                let texture = 0.08 * (fy * py + phase).sin() * (fx * px).cos();
                for c in 0..3 {
                    let noise = rng.random_range(-0.04..0.04);
                    let base = if inside { fg_color[c] } else { bg_base[c] + texture };
                    image.push((base + noise).clamp(0.0, 1.0) as f32);
                }
                mask.push(inside as u8);
            }
        }
        let fraction = mask.iter().map(|&m| m as usize).sum::<usize>() as f64 / mask.len() as f64;
        if fraction > 0.0 && fraction < 0.5 {
            return Sample::new(id, size, size, image, mask);
        }
    }
}

/// `n` square samples of 1–3 bright ellipses or rectangles on a darker
/// textured background. Each mask is the exact union of the shapes and
/// covers between 0 and 50% of the image.
pub fn make_synthetic_corpus(n: usize, size: usize, seed: u64) -> Result<Vec<Sample>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "synthetic corpus needs at least one sample".into(),
        ));
    }
    if size == 0 || !size.is_multiple_of(SIZE_MULTIPLE) {
        return Err(Error::InvalidArgument(format!(
            "synthetic size {size} is not a positive multiple of {SIZE_MULTIPLE}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| render(format!("synthetic_{i:04}"), size, &mut rng))
        .collect()
}
