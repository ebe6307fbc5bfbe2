use corrbound::bounds::{
    activity_rate, bound_eta, bound_main, bound_tangent_tur, cmax, dynamical_activity,
    geodesic_arg, BoundId, CmaxMode,
};
use corrbound::correlation::{correlation_derivative, MeanAccumulator};
use corrbound::distances::{bhattacharyya, bhattacharyya_angle, hellinger_sq, tvd, FiniteDistribution};
use corrbound::linear_response::{conjugate_matrix, response_function};
use corrbound::markov::{propagate, propagator, steady_state, ProbVector, ScoreVector};
use corrbound::path_space::verify_path_inequalities;
use corrbound::sweep::{evaluate, Model};
use proptest::prelude::*;

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, n).prop_filter_map("non-zero mass", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-6).then(|| w.iter().map(|x| x / s).collect())
    })
}

fn pair(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| (distribution(n), distribution(n)))
}

fn model() -> impl Strategy<Value = Model> {
    (2usize..=4, any::<u64>()).prop_map(|(n, seed)| Model::random(n, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_chain((p, q) in pair(6)) {
        let p = FiniteDistribution::from_dense(p).unwrap();
        let q = FiniteDistribution::from_dense(q).unwrap();
        let h = hellinger_sq(&p, &q).unwrap();
        let d = tvd(&p, &q).unwrap();
        let b = bhattacharyya(&p, &q).unwrap();
        prop_assert!(h <= d + 1e-12);
        prop_assert!(d <= (h * (2.0 - h)).sqrt() + 1e-12);
        prop_assert!((h * (2.0 - h)).sqrt() <= (2.0 * h).sqrt() + 1e-12);
        prop_assert!((h - (1.0 - b)).abs() < 1e-12);
        prop_assert!((tvd(&q, &p).unwrap() - d).abs() < 1e-15);
        let angle = bhattacharyya_angle(&p, &q).unwrap();
        prop_assert!((angle.cos() - b).abs() < 1e-9);
    }

    #[test]
    fn propagator_is_stochastic_semigroup(m in model(), s in 0.0..3.0f64, t in 0.0..3.0f64) {
        let ps = propagator(&m.w, s).unwrap();
        let pt = propagator(&m.w, t).unwrap();
        let pst = propagator(&m.w, s + t).unwrap();
        prop_assert!((&pt * &ps - &pst).amax() < 1e-12);
        for c in 0..m.n() {
            prop_assert!((pst.column(c).sum() - 1.0).abs() < 1e-12);
            prop_assert!(pst.column(c).min() > -1e-14);
        }
        let via = propagate(&m.w, &propagate(&m.w, &m.p0, s).unwrap(), t).unwrap();
        let direct = propagate(&m.w, &m.p0, s + t).unwrap();
        prop_assert!((via.as_vector() - direct.as_vector()).amax() < 1e-12);
    }

    #[test]
    fn activity_is_monotone_with_correct_slope(m in model(), t in 0.01..5.0f64, dt in 0.001..1.0f64) {
        let a1 = dynamical_activity(&m.w, &m.p0, t).unwrap();
        let a2 = dynamical_activity(&m.w, &m.p0, t + dt).unwrap();
        prop_assert!(a1 >= 0.0 && a2 >= a1);
        let rate = activity_rate(&m.w, &m.p0).unwrap();
        let small = dynamical_activity(&m.w, &m.p0, 1e-6).unwrap() / 1e-6;
        prop_assert!((small - rate).abs() <= 1e-4 * rate);
    }

    #[test]
    fn geodesic_is_additive(m in model(), a in 0.0..2.0f64, b in 0.0..2.0f64, c in 0.0..2.0f64) {
        let mut v = [a, a + b, a + b + c];
        v.sort_by(f64::total_cmp);
        let g12 = geodesic_arg(&m.w, &m.p0, v[0], v[1]).unwrap();
        let g23 = geodesic_arg(&m.w, &m.p0, v[1], v[2]).unwrap();
        let g13 = geodesic_arg(&m.w, &m.p0, v[0], v[2]).unwrap();
        prop_assert!(g12 >= 0.0 && g23 >= 0.0);
        prop_assert!((g12 + g23 - g13).abs() < 3e-9);
    }

    #[test]
    fn every_bound_holds(m in model(), t in 0.01..10.0f64, tight in any::<bool>()) {
        let mode = if tight { CmaxMode::Tight } else { CmaxMode::Standard };
        let reports = evaluate(&m, &BoundId::ALL, &[0.5 * t, t], mode).unwrap();
        for r in reports {
            prop_assert!(r.passes(), "{:?}", r);
            if r.in_validity_domain {
                prop_assert!(r.ratio <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn tight_cmax_never_exceeds_standard(
        (s, t) in (2usize..6).prop_flat_map(|n| {
            (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(-5.0..5.0f64, n))
        })
    ) {
        let s = ScoreVector::new(s).unwrap();
        let t = ScoreVector::new(t).unwrap();
        prop_assert!(cmax(&s, &t, CmaxMode::Tight) <= cmax(&s, &t, CmaxMode::Standard) + 1e-15);
    }

    #[test]
    fn tightness_chain(m in model(), t in 0.01..10.0f64) {
        let eta = bound_eta(&m.w, &m.p0, &m.s, &m.t, t, CmaxMode::Standard).unwrap();
        let sin = bound_main(&m.w, &m.p0, &m.s, &m.t, 0.0, t, CmaxMode::Standard).unwrap();
        let tan = bound_tangent_tur(&m.w, &m.p0, &m.s, &m.t, t, CmaxMode::Standard).unwrap();
        if sin.in_validity_domain {
            prop_assert!(eta.rhs <= sin.rhs + 1e-12);
        }
        if tan.in_validity_domain {
            prop_assert!(sin.rhs <= tan.rhs + 1e-12);
        }
    }

    #[test]
    fn fluctuation_dissipation(m in model(), t in -2.0..6.0f64) {
        let pst = steady_state(&m.w).unwrap();
        let f = conjugate_matrix(&m.w, &m.s);
        let r = response_function(&m.w, &pst, &f, &m.t, t).unwrap();
        if t < 0.0 {
            prop_assert_eq!(r, 0.0);
        } else {
            let d = correlation_derivative(&m.w, &pst, &m.s, &m.t, t).unwrap();
            prop_assert!((r - d).abs() < 1e-10);
        }
    }

    #[test]
    fn skeletons_obey_path_bounds(n in 2usize..=3, seed in any::<u64>(), steps in 1usize..=4, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let m = Model::random(n, seed).unwrap();
        let (t1, t2) = (a.min(b), a.max(b));
        let r = verify_path_inequalities(&m.w, &m.p0, 1.0, steps, t1, t2).unwrap();
        prop_assert!(r.angle_holds, "{:?}", r);
        prop_assert!(r.tvd_holds, "{:?}", r);
    }

    #[test]
    fn accumulator_merge_matches_sequential(xs in prop::collection::vec(-10.0..10.0f64, 2..60), split in 0usize..60) {
        let split = split.min(xs.len());
        let mut all = MeanAccumulator::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut left = MeanAccumulator::default();
        let mut right = MeanAccumulator::default();
        xs[..split].iter().for_each(|&x| left.push(x));
        xs[split..].iter().for_each(|&x| right.push(x));
        left.merge(&right);
        prop_assert_eq!(left.count(), all.count());
        prop_assert!((left.mean() - all.mean()).abs() < 1e-12);
        prop_assert!((left.std_error() - all.std_error()).abs() < 1e-12);
    }

    #[test]
    fn prob_vectors_validate(p in distribution(5)) {
        let v = ProbVector::new(p.clone()).unwrap();
        prop_assert_eq!(v.len(), 5);
        let mut bad = p;
        bad[0] += 0.01;
        prop_assert!(ProbVector::new(bad).is_err());
    }
}
