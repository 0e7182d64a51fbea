use proptest::prelude::*;

use prunability_core::geometry::{projected_width, threshold, EllipsoidSpec};
use prunability_core::pipeline::RunConfig;
use prunability_core::pruning::{magnitude_mask, r_of_p};
use prunability_core::spectral::{convexify, Spectrum, SpectrumSource};

fn weights() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..60).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(any::<bool>(), n)))
}

proptest! {
    #[test]
    fn masks_nest_and_match_r_of_p((w, prunable) in weights(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = magnitude_mask(&w, &prunable, lo).unwrap();
        let large = magnitude_mask(&w, &prunable, hi).unwrap();
        for i in 0..w.len() {
            prop_assert!(!small.mask[i] || large.mask[i]);
            prop_assert!(!large.mask[i] || prunable[i]);
        }
        let r = r_of_p(&w, &prunable);
        prop_assert_eq!(r.eval(lo), small.r);
        prop_assert_eq!(r.eval(hi), large.r);
        prop_assert!(small.r <= large.r);
    }

    #[test]
    fn threshold_is_a_fraction_and_decreases_with_distance(
        eig in prop::collection::vec(1e-6f64..1e3, 1..80),
        eps in 1e-4f64..10.0,
        r1 in 1e-3f64..10.0,
        r2 in 1e-3f64..10.0,
    ) {
        let e = EllipsoidSpec::new(Spectrum::new(eig, SpectrumSource::Exact, 0), eps).unwrap();
        let (near, far) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let (tn, tf) = (threshold(&e, near), threshold(&e, far));
        prop_assert!((0.0..=1.0).contains(&tn) && (0.0..=1.0).contains(&tf));
        prop_assert!(tf <= tn);
        prop_assert!(projected_width(&e, far) <= projected_width(&e, near));
    }

    #[test]
    fn convexify_keeps_magnitudes(eig in prop::collection::vec(-1e3f64..1e3, 1..80)) {
        let s = convexify(&Spectrum::new(eig.clone(), SpectrumSource::Exact, 0));
        prop_assert_eq!(s.dim(), eig.len());
        let mut want: Vec<f64> = eig.iter().filter(|&&x| x != 0.0).map(|x| x.abs()).collect();
        want.sort_by(f64::total_cmp);
        let got: Vec<f64> = s.eigenvalues.iter().copied().filter(|&x| x != prunability_core::SENTINEL).collect();
        prop_assert!(s.eigenvalues.iter().all(|&x| x > 0.0));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn config_text_round_trips(
        seed in any::<u64>(),
        hidden in prop::collection::vec(1usize..64, 0..3),
        lr in 1e-5f64..1.0,
        points in 1usize..500,
        sigma2 in 1e-12f64..1e-3,
    ) {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.widths = std::iter::once(2).chain(hidden).chain(std::iter::once(2)).collect();
        cfg.train.lr = lr;
        cfg.sweep.points = points;
        cfg.spectrum.slq.sigma2 = sigma2;
        let back = RunConfig::parse(&cfg.serialize(), "generated").unwrap();
        prop_assert_eq!(back, cfg);
    }
}
