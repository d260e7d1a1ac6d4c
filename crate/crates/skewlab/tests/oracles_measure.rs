//! Oracles for the signed-measure model, residuals and equivalence suites.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use skewlab::excursion::decompose_excursions;
use skewlab::grid::{make_grid, SamplePath};
use skewlab::localtime::{local_time, LocalTimeMethod};
use skewlab::report::Status;
use skewlab::seed::SeedSpec;
use skewlab::signed_measure::*;

fn seed(label: &str) -> SeedSpec {
    SeedSpec::new(77, label, 0)
}

/// `P(min_{[0,1]} (1 + B) <= 0)` by a direct fine-mesh simulation that shares
/// no code with the model.
fn hitting_probability_oracle(n_paths: usize, n_steps: usize) -> f64 {
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(2024);
    let sd = (1.0 / n_steps as f64).sqrt();
    let mut hits = 0;
    for _ in 0..n_paths {
        let mut x = 1.0;
        for _ in 0..n_steps {
            x += sd * rng.sample::<f64, _>(StandardNormal);
            if x <= 0.0 {
                hits += 1;
                break;
            }
        }
    }
    hits as f64 / n_paths as f64
}

#[test]
fn density_hits_zero_as_often_as_the_oracle() {
    let g = make_grid(1.0, 1 << 12).unwrap();
    let n = 10_000;
    let hit = (0..n as u64)
        .filter(|&i| build_model(ModelFamily::ShiftedBrownian, &g, &seed("hmask").with_index(i)).h_mask.has_any())
        .count() as f64
        / n as f64;
    let oracle = hitting_probability_oracle(20_000, 1 << 14);
    // 3 sigma of the difference of two binomial proportions
    let sigma = (oracle * (1.0 - oracle) * (1.0 / n as f64 + 1.0 / 20_000.0)).sqrt();
    assert!((hit - oracle).abs() < 3.0 * sigma, "model {hit} vs oracle {oracle}");
}

#[test]
fn h_mask_is_the_zero_set_of_the_density() {
    let g = make_grid(1.0, 1 << 12).unwrap();
    let m = build_model(ModelFamily::ShiftedBrownian, &g, &seed("h"));
    assert_eq!(m.h_mask, decompose_excursions(&m.density).mask);
}

fn fine() -> SuiteOptions {
    SuiteOptions {
        n_steps: 1 << 16,
        ..SuiteOptions::default()
    }
}

#[test]
fn local_time_shift_residual_shrinks_with_mesh() {
    let fam = ModelFamily::ShiftedBrownian;
    let medians: Vec<f64> = [1 << 12, 1 << 14, 1 << 16]
        .into_iter()
        .map(|n| {
            let opts = SuiteOptions {
                n_steps: n,
                ..SuiteOptions::default()
            };
            qp_suite("W+2L", fam, |m, s| Zoo::LocalTimeShift(2.0).sample(m, s), &opts, &seed("shift")).unwrap().statistic
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
    assert!(medians[2] < 0.05);
}

#[test]
fn brownian_qp_residual_small() {
    let r = qp_suite("W", ModelFamily::ShiftedBrownian, |m, s| Zoo::Brownian.sample(m, s), &fine(), &seed("w")).unwrap();
    assert!(r.pass(), "{r:?}");
}

#[test]
fn density_local_time_is_carried_by_h() {
    let g = make_grid(1.0, 1 << 16).unwrap();
    let mut checked = 0;
    for i in 0.. {
        let m = build_model(ModelFamily::ShiftedBrownian, &g, &seed("carried").with_index(i));
        if !m.h_mask.has_any() {
            continue;
        }
        let l = local_time(&m.density, LocalTimeMethod::Tanaka).curve;
        assert!(carried_by_check(&l, &m.h_mask, 2, 0.05).unwrap().pass());
        checked += 1;
        if checked == 5 {
            break;
        }
    }
    let lebesgue = SamplePath::from_fn(g, |t| t).unwrap();
    let sparse = skewlab::excursion::ZeroMask::from_indices(g.len(), &[10, 5000, 40000]);
    let r = carried_by_check(&lebesgue, &sparse, 2, 0.05).unwrap();
    assert!(!r.pass());
    assert!(r.statistic < 1e-3);
}

#[test]
fn class_membership_examples() {
    let opts = fine();
    for fam in [ModelFamily::Trivial, ModelFamily::ShiftedBrownian] {
        let r = sigma_suite("|W|", fam, |m, s| SigmaZoo::AbsBrownian.sample(m, s), &opts, &seed("abs")).unwrap();
        assert!(r.pass(), "{fam}: {r:?}");
    }
    let fam = ModelFamily::ShiftedBrownian;
    let r = sigma_suite("W+2L", fam, |m, s| SigmaZoo::LocalTimeShift.sample(m, s), &opts, &seed("shift")).unwrap();
    assert!(r.pass(), "{r:?}");
    let r = sigma_suite("W+t", fam, |m, s| SigmaZoo::Drifted.sample(m, s), &opts, &seed("drift")).unwrap();
    assert_eq!(r.statistic, 0.0);
}

fn unenforced() -> SuiteOptions {
    SuiteOptions {
        enforce_hypotheses: false,
        ..SuiteOptions::default()
    }
}

#[test]
fn abs_mart_trivial_brownian_is_outside_the_hypotheses() {
    // H is empty under the trivial model, so W has zeros off H
    let run = |opts: &SuiteOptions| {
        equivalence_suite(
            EquivalenceSuite::AbsMart,
            ModelFamily::Trivial,
            Process::Mart(Zoo::Brownian),
            0.7,
            &seed("abs_mart"),
            opts,
        )
        .unwrap()
    };
    let o = run(&SuiteOptions::default());
    assert_eq!(o.report.status, Status::HypothesisNotMet);
    // without the guard: W passes, |W| = W-martingale + L shows its drift
    let o = run(&unenforced());
    assert_eq!((o.left.status, o.right.status), (Status::Pass, Status::Fail), "{:?}", o.report);
}

#[test]
fn abs_mart_positive_instance_passes_both_sides() {
    for fam in [ModelFamily::Trivial, ModelFamily::ShiftedBrownian] {
        let o = equivalence_suite(
            EquivalenceSuite::AbsMart,
            fam,
            Process::Mart(Zoo::Geometric),
            0.7,
            &seed("abs_gbm"),
            &SuiteOptions::default(),
        )
        .unwrap();
        assert_eq!((o.left.status, o.right.status), (Status::Pass, Status::Pass), "{:?}", o.report);
    }
}

#[test]
fn zalpha_mart_rejects_drifted_brownian_on_both_sides() {
    let o = equivalence_suite(
        EquivalenceSuite::ZalphaMart,
        ModelFamily::ShiftedBrownian,
        Process::Mart(Zoo::Drifted),
        0.7,
        &seed("zalpha"),
        &unenforced(),
    )
    .unwrap();
    assert_eq!((o.left.status, o.right.status), (Status::Fail, Status::Fail), "{:?}", o.report);
}

#[test]
fn cmart_half_flip_of_abs_brownian_is_driftless() {
    let o = equivalence_suite(
        EquivalenceSuite::Cmart,
        ModelFamily::Trivial,
        Process::Sigma(SigmaZoo::AbsBrownian),
        0.5,
        &seed("cmart"),
        &SuiteOptions::default(),
    )
    .unwrap();
    assert!(o.right.pass(), "{:?}", o.right);
    assert!(o.agree());
}

#[test]
fn brownian_with_zeros_off_h_is_outside_the_hypotheses() {
    let o = equivalence_suite(
        EquivalenceSuite::AbsBrownian,
        ModelFamily::ShiftedBrownian,
        Process::Mart(Zoo::Brownian),
        0.5,
        &seed("absb"),
        &SuiteOptions::default(),
    )
    .unwrap();
    assert_eq!(o.report.status, Status::HypothesisNotMet);
}

#[test]
fn representation_trivial_model_unconditional() {
    let opts = SuiteOptions {
        n_steps: 1 << 10,
        ..SuiteOptions::default()
    };
    let r = optional_representation_check(
        "rep",
        ModelFamily::Trivial,
        Zoo::Brownian,
        StoppingRule::Deterministic(0.5),
        &[EventRule::Always],
        RepresentationForm::DensityWeighted,
        &opts,
        &seed("rep"),
    )
    .unwrap();
    assert!(r.pass(), "{r:?}");
}
