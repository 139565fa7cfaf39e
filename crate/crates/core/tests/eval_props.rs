use cedir_core::eval::{
    assignment_cost, count_errors, evaluate, hungarian_assign, match_at_tau, threshold_sweep, ImagePair,
};
use cedir_core::rng::SplitMix64;
use cedir_core::{Detection, DetectionList, Point};
use proptest::prelude::*;

mod common;
use common::{exhaustive_min_cost, random_cost};

#[test]
fn hungarian_matches_exhaustive_search() {
    let mut rng = SplitMix64::new(77);
    for trial in 0..1000 {
        let c = random_cost(&mut rng);
        let pairs = hungarian_assign(&c).unwrap();
        assert_eq!(pairs.len(), c.height().min(c.width()), "trial {trial}");
        let mut rows: Vec<_> = pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<_> = pairs.iter().map(|p| p.1).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        assert_eq!(rows.len(), pairs.len());
        assert_eq!(cols.len(), pairs.len());
        assert_eq!(assignment_cost(&c, &pairs), exhaustive_min_cost(&c), "trial {trial}");
    }
}

#[test]
fn hungarian_is_deterministic() {
    let mut rng = SplitMix64::new(3);
    for _ in 0..100 {
        let c = random_cost(&mut rng);
        assert_eq!(hungarian_assign(&c).unwrap(), hungarian_assign(&c).unwrap());
    }
}

fn points(max: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0.0..60.0f64, 0.0..60.0f64), 0..max)
        .prop_map(|v| v.into_iter().map(|(r, c)| Point::new(r, c)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matching_conserves_counts(preds in points(12), gts in points(12), tau in 0.5..40.0f64) {
        let m = match_at_tau(&preds, &gts, tau).unwrap();
        prop_assert_eq!(m.tp() + m.fp(), preds.len());
        prop_assert_eq!(m.tp() + m.fn_(), gts.len());
        prop_assert!(m.tp_pairs.iter().all(|&(_, _, d)| d < tau));
    }

    #[test]
    fn true_positives_grow_with_tau(preds in points(10), gts in points(10), t1 in 0.5..30.0f64, dt in 0.0..30.0f64) {
        let a = match_at_tau(&preds, &gts, t1).unwrap();
        let b = match_at_tau(&preds, &gts, t1 + dt).unwrap();
        prop_assert!(b.tp() >= a.tp());
    }

    #[test]
    fn matching_is_symmetric(preds in points(10), gts in points(10), tau in 0.5..40.0f64) {
        let a = match_at_tau(&preds, &gts, tau).unwrap();
        let b = match_at_tau(&gts, &preds, tau).unwrap();
        prop_assert_eq!(a.tp(), b.tp());
        prop_assert_eq!(a.fp(), b.fn_());
    }

    #[test]
    fn report_metrics_stay_in_range(
        imgs in prop::collection::vec((points(8), points(8)), 1..6),
    ) {
        let images: Vec<ImagePair> = imgs.into_iter().map(|(p, g)| ImagePair { preds: p, gts: g }).collect();
        let r = evaluate(&images, &[5.0, 15.0, 40.0]).unwrap();
        prop_assert!(r.rmse >= r.mae - 1e-12);
        let mut last_f1 = -1.0;
        for &(_, prf) in &r.per_tau {
            for v in [prf.precision, prf.recall, prf.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(prf.f1 >= last_f1 - 1e-12);
            last_f1 = prf.f1;
        }
    }

    #[test]
    fn count_errors_vanish_only_on_equal_counts(a in prop::collection::vec(0usize..20, 1..10)) {
        let (mae, rmse) = count_errors(&a, &a).unwrap();
        prop_assert_eq!((mae, rmse), (0.0, 0.0));
        let shifted: Vec<usize> = a.iter().map(|v| v + 1).collect();
        prop_assert_eq!(count_errors(&a, &shifted).unwrap(), (1.0, 1.0));
    }
}

#[test]
fn sweep_recovers_the_separating_threshold() {
    let gts = vec![vec![Point::new(10.0, 10.0), Point::new(30.0, 30.0)]];
    let dets = vec![DetectionList::new(vec![
        Detection { row: 10.0, col: 10.0, score: 0.9 },
        Detection { row: 30.0, col: 30.0, score: 0.8 },
        Detection { row: 50.0, col: 5.0, score: 0.3 },
    ])];
    let s = threshold_sweep(&dets, &gts, 5.0).unwrap();
    assert_eq!(s.best_f1, 1.0);
    assert_eq!(s.best_threshold, 0.8);
    assert_eq!(s.mae, 0.0);
}
