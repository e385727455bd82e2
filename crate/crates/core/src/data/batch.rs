use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::sample::Sample;

/// Sample order for one epoch. With shuffling the permutation depends only
/// on `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: u64, shuffle: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(epoch);
        order.shuffle(&mut rng);
    }
    order
}

/// Batches of one epoch; the last batch may be short.
pub struct Batches<'a> {
    samples: &'a [Sample],
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl<'a> Iterator for Batches<'a> {
    type Item = Vec<&'a Sample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let batch = self.order[self.pos..end].iter().map(|&i| &self.samples[i]).collect();
        self.pos = end;
        Some(batch)
    }
}

pub fn epoch_batches(
    samples: &[Sample],
    batch_size: usize,
    seed: u64,
    epoch: u64,
    shuffle: bool,
) -> Result<Batches<'_>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    Ok(Batches {
        samples,
        order: epoch_order(samples.len(), seed, epoch, shuffle),
        batch_size,
        pos: 0,
    })
}

/// Batches of the first epoch.
pub fn batch_iter(samples: &[Sample], batch_size: usize, seed: u64, shuffle: bool) -> Result<Batches<'_>> {
    epoch_batches(samples, batch_size, seed, 0, shuffle)
}

/// Endless batch stream cycling through epochs 0, 1, 2, …
pub fn endless_batches(
    samples: &[Sample],
    batch_size: usize,
    seed: u64,
    shuffle: bool,
) -> Result<impl Iterator<Item = Vec<&Sample>> + '_> {
    if samples.is_empty() {
        return Err(Error::Data("no samples to batch".into()));
    }
    epoch_batches(samples, batch_size, seed, 0, shuffle)?;
    Ok((0u64..).flat_map(move |e| epoch_batches(samples, batch_size, seed, e, shuffle).expect("batch size checked")))
}
