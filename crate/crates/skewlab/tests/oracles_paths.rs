//! Monte Carlo and brute-force oracles for grids, excursions and the
//! discrete calculus.

use skewlab::excursion::{decompose_excursions, last_zero_curve, ZeroMask};
use skewlab::grid::{make_grid, refine_bridge, sample_brownian, sample_independent_pair, SamplePath};
use skewlab::localtime::{local_time, quadratic_covariation, LocalTimeMethod};
use skewlab::seed::SeedSpec;
use skewlab::stats::{median, variance};

fn seeds(label: &str, n: u64) -> impl Iterator<Item = SeedSpec> + '_ {
    (0..n).map(move |i| SeedSpec::new(31, label, i))
}

#[test]
fn brownian_terminal_variance() {
    let g = make_grid(1.0, 1 << 12).unwrap();
    let t: Vec<f64> = seeds("var", 10_000).map(|s| sample_brownian(&g, &s, 0.0).last()).collect();
    let v = variance(&t);
    assert!((0.97..=1.03).contains(&v), "variance {v}");
}

#[test]
fn refined_paths_keep_the_law() {
    // 4 coarse steps refined by 2: index 1 is a new bridge point at t = 1/8
    let g = make_grid(1.0, 4).unwrap();
    let (mut terminal, mut mid) = (Vec::new(), Vec::new());
    for s in seeds("refine", 10_000) {
        let p = refine_bridge(&sample_brownian(&g, &s, 0.0), 2, &s.child("bridge")).unwrap();
        terminal.push(p.last());
        mid.push(p.values()[1]);
    }
    let v = variance(&terminal);
    assert!((0.97..=1.03).contains(&v), "terminal variance {v}");
    let v = variance(&mid) * 8.0;
    assert!((0.97..=1.03).contains(&v), "scaled midpoint variance {v}");
}

#[test]
fn independent_pair_has_no_covariation() {
    let g = make_grid(1.0, 1 << 16).unwrap();
    let c: Vec<f64> = seeds("pair", 32)
        .map(|s| {
            let (a, b) = sample_independent_pair(&g, &s);
            quadratic_covariation(&a, &b).unwrap().last().abs()
        })
        .collect();
    assert!(median(&c) < 0.05, "{}", median(&c));
}

#[test]
fn brownian_quadratic_variation() {
    let g = make_grid(1.0, 1 << 16).unwrap();
    let q: Vec<f64> = seeds("qv", 32)
        .map(|s| {
            let b = sample_brownian(&g, &s, 0.0);
            quadratic_covariation(&b, &b).unwrap().last()
        })
        .collect();
    let m = median(&q);
    assert!((0.97..=1.03).contains(&m), "{m}");
}

/// Maximal runs of nonzero values with one sign.
fn brute_force_runs(v: &[f64]) -> usize {
    let mut runs = 0;
    let mut prev = 0.0_f64;
    for &x in v {
        if x != 0.0 && (prev == 0.0 || prev.signum() != x.signum()) {
            runs += 1;
        }
        prev = x;
    }
    runs
}

#[test]
fn excursion_count_matches_sign_runs() {
    let g = make_grid(1.0, 1 << 12).unwrap();
    for s in seeds("runs", 20) {
        let b = sample_brownian(&g, &s, 0.0);
        assert_eq!(decompose_excursions(&b).len(), brute_force_runs(b.values()));
    }
    let p = SamplePath::new(make_grid(1.0, 7).unwrap(), vec![0.0, 1.0, 0.0, 2.0, -1.0, 0.0, 0.0, 3.0]).unwrap();
    assert_eq!(decompose_excursions(&p).len(), 4);
    assert_eq!(brute_force_runs(p.values()), 4);
}

#[test]
fn last_zero_matches_brute_force() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(5);
    for _ in 0..20 {
        let flags: Vec<bool> = (0..1025).map(|_| rng.random_bool(0.02)).collect();
        let mask = ZeroMask::from_flags(flags.clone());
        let (curve, gbar) = skewlab::excursion::LastZeroCurve::from_mask(&mask);
        for (i, &g) in curve.gamma.iter().enumerate() {
            let want = (0..=i).rev().find(|&j| flags[j]).unwrap_or(0);
            assert_eq!(g, want);
        }
        assert_eq!(gbar, flags.iter().rposition(|&f| f).unwrap_or(0));
    }
    // through the excursion set as well
    let p = SamplePath::new(make_grid(1.0, 5).unwrap(), vec![0.0, 1.0, 2.0, 0.0, -1.0, 0.0]).unwrap();
    let (c, gbar) = last_zero_curve(&decompose_excursions(&p));
    assert_eq!(c.gamma, vec![0, 0, 0, 3, 3, 5]);
    assert_eq!(gbar, 5);
}

#[test]
fn occupation_and_tanaka_agree() {
    let g = make_grid(1.0, 1 << 16).unwrap();
    let d: Vec<f64> = seeds("lt", 32)
        .map(|s| {
            let b = sample_brownian(&g, &s, 0.0);
            let t = local_time(&b, LocalTimeMethod::Tanaka).curve;
            let o = local_time(&b, LocalTimeMethod::Occupation { bandwidth: None }).curve;
            t.zip_with(&o, |a, b| a - b).unwrap().sup_norm()
        })
        .collect();
    assert!(median(&d) < 0.1, "{}", median(&d));
}
