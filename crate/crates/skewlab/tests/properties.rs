use proptest::prelude::*;
use skewlab::excursion::{decompose_excursions, last_zero_curve};
use skewlab::grid::{make_grid, refine_bridge, sample_brownian, SamplePath};
use skewlab::localtime::{ito_sum, quadratic_covariation};
use skewlab::seed::SeedSpec;
use skewlab::signflip::{
    apply_sign, assign_signs, build_sign_path, native_sign_path, AlphaSchedule, CellRule, SignMode,
};
use skewlab::stats::ks_two_sample;

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => -3.0..3.0f64], 2..300)
}

fn path(v: Vec<f64>) -> SamplePath {
    SamplePath::new(make_grid(1.0, v.len() - 1).unwrap(), v).unwrap()
}

proptest! {
    #[test]
    fn last_zero_is_idempotent_and_monotone(v in values()) {
        let p = path(v);
        let e = decompose_excursions(&p);
        let (c, gbar) = last_zero_curve(&e);
        for (i, &g) in c.gamma.iter().enumerate() {
            prop_assert!(g <= i);
            prop_assert_eq!(c.gamma[g], g);
            if i > 0 {
                prop_assert!(c.gamma[i - 1] <= g);
            }
        }
        prop_assert_eq!(gbar, *c.gamma.last().unwrap());
    }

    #[test]
    fn excursions_reconstruct_the_path(v in values()) {
        let p = path(v);
        let e = decompose_excursions(&p);
        let z = native_sign_path(&e, p.grid());
        prop_assert_eq!(apply_sign(&z, &p, SignMode::Absolute).unwrap(), p.clone());
        for x in &e.intervals {
            for i in x.members() {
                prop_assert_eq!(p.values()[i].signum(), x.side.as_f64());
            }
        }
        // every nonzero index lies in exactly one excursion
        for (i, &x) in p.values().iter().enumerate() {
            prop_assert_eq!(e.excursion_of(i).is_some(), x != 0.0);
        }
    }

    #[test]
    fn flips_preserve_absolute_value(v in values(), alpha in 0.0..=1.0f64, k in 0u64..1000) {
        let p = path(v);
        let e = decompose_excursions(&p);
        let s = AlphaSchedule::piecewise(vec![0.0, 0.4], vec![alpha, 1.0 - alpha]).unwrap();
        for rule in [CellRule::ExcursionStart, CellRule::CellIntersection] {
            let a = assign_signs(&e, p.grid(), &s, rule, &SeedSpec::new(3, "prop", k));
            let z = build_sign_path(&e, &a, &s, p.grid()).unwrap();
            for mode in [SignMode::Signed, SignMode::Absolute] {
                let x = apply_sign(&z, &p, mode).unwrap();
                for (a, b) in x.values().iter().zip(p.values()) {
                    prop_assert_eq!(a.abs(), b.abs());
                }
            }
        }
    }

    #[test]
    fn discrete_integration_by_parts(v in values(), x0 in -2.0..2.0f64) {
        let p = path(v).map(|x| x + x0);
        let lhs = 2.0 * ito_sum(&p, &p).unwrap().last() + quadratic_covariation(&p, &p).unwrap().last();
        let rhs = p.last().powi(2) - p.first().powi(2);
        let scale = 1.0 + p.values().iter().map(|x| x * x).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn refine_then_restrict_is_identity(n in 1usize..64, level in 0u32..5, k in 0u64..1000) {
        let g = make_grid(1.0, n).unwrap();
        let s = SeedSpec::new(8, "refine", k);
        let p = sample_brownian(&g, &s, 0.0);
        let f = 1usize << level;
        let r = refine_bridge(&p, f, &s.child("bridge")).unwrap();
        prop_assert_eq!(r.grid().n_steps(), n * f);
        prop_assert_eq!(r.restrict(f).unwrap(), p.clone());
        // nested meshes: refining by f/2 agrees with restricting the f refinement by 2
        if f > 1 {
            let half = refine_bridge(&p, f / 2, &s.child("bridge")).unwrap();
            prop_assert_eq!(r.restrict(2).unwrap(), half);
        }
    }

    #[test]
    fn ks_distance_is_a_probability(a in prop::collection::vec(-5.0..5.0f64, 1000..1200), shift in -1.0..1.0f64) {
        let b: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let ks = ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ks.distance));
        prop_assert!((0.0..=1.0).contains(&ks.p_value));
        prop_assert_eq!(ks_two_sample(&a, &a).unwrap().distance, 0.0);
    }
}
