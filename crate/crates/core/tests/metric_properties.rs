use pdfnet_core::metrics::*;
use proptest::prelude::*;

fn pair_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<bool>)> {
    (1usize..9, 1usize..9).prop_flat_map(|(h, w)| {
        (
            Just(h),
            Just(w),
            prop::collection::vec(0.0f64..=1.0, h * w),
            prop::collection::vec(any::<bool>(), h * w),
        )
    })
}

fn build(h: usize, w: usize, s: &[f64], mut g: Vec<bool>) -> (SaliencyMap, GroundTruth) {
    g[0] = true;
    (
        SaliencyMap::new(h, w, s.to_vec()).unwrap(),
        GroundTruth::new(h, w, g).unwrap(),
    )
}

proptest! {
    #[test]
    fn f_lies_between_precision_and_recall(p in 1e-6f64..=1.0, r in 1e-6f64..=1.0) {
        let f = f_measure(p, r, BETA_SQUARED);
        prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
    }

    #[test]
    fn recall_and_positives_shrink_with_threshold((h, w, s, g) in pair_strategy()) {
        let (sm, gt) = build(h, w, &s, g);
        let curve = pr_curve(&sm, &gt).unwrap();
        let positives = |t: f64| sm.values().iter().filter(|&&v| v >= t).count();
        for pair in curve.windows(2) {
            prop_assert!(pair[1].recall <= pair[0].recall);
            prop_assert!(positives(pair[1].threshold) <= positives(pair[0].threshold));
        }
    }

    #[test]
    fn pixelwise_metrics_ignore_pixel_order((h, w, s, g) in pair_strategy(), rot in 0usize..64) {
        let (sm, gt) = build(h, w, &s, g);
        let n = s.len();
        let k = rot % n;
        let mut s2 = sm.values().to_vec();
        let mut g2 = gt.values().to_vec();
        s2.rotate_left(k);
        g2.rotate_left(k);
        let (sm2, gt2) = (SaliencyMap::new(h, w, s2).unwrap(), GroundTruth::new(h, w, g2).unwrap());
        prop_assert!((mae(&sm, &gt).unwrap() - mae(&sm2, &gt2).unwrap()).abs() < 1e-12);
        prop_assert_eq!(pr_curve(&sm, &gt).unwrap(), pr_curve(&sm2, &gt2).unwrap());
        for t in [0.1, 0.5, 0.9] {
            prop_assert_eq!(precision_recall(&sm, &gt, t).unwrap(), precision_recall(&sm2, &gt2, t).unwrap());
        }
    }

    #[test]
    fn mae_is_bounded_and_symmetric((h, w, s, g) in pair_strategy()) {
        let (sm, gt) = build(h, w, &s, g);
        let m = mae(&sm, &gt).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        // Between two binary maps the roles can be swapped.
        let b: Vec<bool> = s.iter().map(|&v| v >= 0.5).collect();
        let b_gt = GroundTruth::new(h, w, b.clone()).unwrap();
        let b_map = b_gt.as_saliency();
        prop_assert_eq!(mae(&b_map, &gt).unwrap(), mae(&gt.as_saliency(), &b_gt).unwrap());
    }

    #[test]
    fn s_measure_is_a_score((h, w, s, g) in pair_strategy()) {
        let (sm, gt) = build(h, w, &s, g);
        let q = s_measure(&sm, &gt).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&q), "{}", q);
        let perfect = s_measure(&gt.as_saliency(), &gt).unwrap();
        prop_assert!(perfect >= q - 1e-9);
    }
}
