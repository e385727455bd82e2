use pdfnet_core::data::*;
use proptest::prelude::*;

const TRANSFORMS: [Transform; 6] = [
    Transform::Identity,
    Transform::FlipHorizontal,
    Transform::FlipVertical,
    Transform::Rotate90,
    Transform::Rotate180,
    Transform::Rotate270,
];

/// A sample whose first image channel repeats the mask, so any transform
/// that treats image and mask alike keeps them equal.
fn sample_strategy() -> impl Strategy<Value = Sample> {
    (1usize..7, 1usize..7).prop_flat_map(|(h, w)| {
        (
            prop::collection::vec(0u8..2, h * w),
            prop::collection::vec(0.0f32..1.0, h * w),
        )
            .prop_map(move |(mask, noise)| {
                let image = mask
                    .iter()
                    .zip(&noise)
                    .flat_map(|(&m, &n)| [m as f32, n, 1.0 - n])
                    .collect();
                Sample::new("p", h, w, image, mask).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn transforms_move_image_and_mask_together(s in sample_strategy(), t in 0usize..6) {
        let out = apply_transform(&s, TRANSFORMS[t]);
        prop_assert!(out.validate().is_ok());
        for (i, &m) in out.mask.iter().enumerate() {
            prop_assert_eq!(out.image[3 * i], m as f32);
        }
        prop_assert_eq!(out.mask.iter().filter(|&&m| m == 1).count(), s.mask.iter().filter(|&&m| m == 1).count());
    }

    #[test]
    fn seeded_augmentation_is_reproducible(s in sample_strategy(), seed in any::<u64>()) {
        let spec = AugmentationSpec::default();
        prop_assert_eq!(augment(&s, &spec, seed).unwrap(), augment(&s, &spec, seed).unwrap());
    }

    #[test]
    fn every_sample_appears_once_per_epoch(n in 1usize..40, batch in 1usize..10, seed in any::<u64>(), epoch in 0u64..5) {
        let samples: Vec<Sample> = (0..n)
            .map(|i| Sample::new(format!("{i:03}"), 1, 1, vec![0.0; 3], vec![0]).unwrap())
            .collect();
        let mut seen: Vec<String> = epoch_batches(&samples, batch, seed, epoch, true)
            .unwrap()
            .flat_map(|b| b.into_iter().map(|s| s.id.clone()))
            .collect();
        seen.sort();
        let want: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
        prop_assert_eq!(seen, want);
    }

    #[test]
    fn resizing_keeps_pairs_consistent(s in sample_strategy(), th in 1usize..4, tw in 1usize..4) {
        let r = resize_sample(&s, 16 * th, 16 * tw).unwrap();
        prop_assert!(r.validate().is_ok());
        prop_assert_eq!((r.height, r.width), (16 * th, 16 * tw));
    }
}

#[test]
fn same_seed_gives_same_batches() {
    let corpus = make_synthetic_corpus(10, 16, 3).unwrap();
    let ids = || -> Vec<Vec<String>> {
        batch_iter(&corpus, 4, 8, true)
            .unwrap()
            .map(|b| b.iter().map(|s| s.id.clone()).collect())
            .collect()
    };
    assert_eq!(ids(), ids());
    assert_eq!(ids().iter().map(Vec::len).collect::<Vec<_>>(), [4, 4, 2]);
}
