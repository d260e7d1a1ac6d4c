//! Suite orchestration: maps an [`ExperimentConfig`] onto the checks of
//! [`crate::signed_measure`] and [`crate::skewbm`].
//!
//! Every random draw is keyed by `(master seed, suite label, path index)`,
//! and reports are assembled in a fixed order, so a bundle depends only on
//! the configuration (and the timestamp).

use crate::config::{ExperimentConfig, Suite};
use crate::error::Result;
use crate::grid::{make_grid, refine_bridge, sample_brownian, SamplePath};
use crate::localtime::{identity_residual_curve, ito_sum, local_time, IdentityInputs, IdentityKind, LocalTimeMethod, ResidualReport};
use crate::report::{CurveSet, Provenance, ReportBundle, Status, TestReport};
use crate::seed::SeedSpec;
use crate::signed_measure::{
    build_model, equivalence_suite, optional_representation_check, qp_residual, sigma_suite, DriftConfig,
    EquivalenceSuite, EventRule, ModelFamily, RepresentationForm, SigmaOptions, SigmaZoo, StoppingRule,
    SuiteOptions, Zoo,
};
use crate::signflip::{AlphaSchedule, CellRule};
use crate::skewbm::{
    build_skew, law_test, sde_residual, skew_cdf, skew_cdf_piecewise, skew_law_sample, skew_positive_probability,
    walk_law_sample, LawReference, LawTestOptions, SkewBuildSpec, SkewVariant,
};
use crate::stats::{mean, median};
use rayon::prelude::*;

/// Statistic a negative control must exceed in the drift test.
pub const CONTROL_DRIFT: f64 = 5.0;

/// Runs every suite selected by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    config
        .validate()
        .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?;
    let mut bundle = ReportBundle::new(Provenance::new(config.echo(), config.master_seed));
    for suite in config.suite.expand() {
        let out = match suite {
            Suite::Identities => identities(config)?,
            Suite::Martingale => martingale(config)?,
            Suite::SigmaH => sigma_h(config)?,
            Suite::SkewLaw => skew_law(config)?,
            Suite::SkewResidual => skew_residual(config)?,
            Suite::Representation => representation(config)?,
            Suite::All => unreachable!("expanded"),
        };
        bundle.reports.extend(out.reports);
        bundle.residuals.extend(out.residuals);
        bundle.curves.extend(out.curves);
    }
    Ok(bundle)
}

#[derive(Default)]
struct SuiteOutput {
    reports: Vec<TestReport>,
    residuals: Vec<ResidualReport>,
    curves: Vec<CurveSet>,
}

fn seed(config: &ExperimentConfig, label: &str) -> SeedSpec {
    SeedSpec::new(config.master_seed, label, 0)
}

/// Suite options for single-mesh suites.
pub fn suite_options(config: &ExperimentConfig, suite: Suite) -> SuiteOptions {
    let t = &config.tolerance;
    SuiteOptions {
        n_steps: config.single_steps(suite),
        horizon: 1.0,
        n_paths: config.n_paths,
        pathwise_paths: config.pathwise_paths,
        pathwise_quorum: t.quorum,
        drift: DriftConfig {
            threshold: t.drift,
            ..DriftConfig::default()
        },
        sigma: SigmaOptions {
            dilation: t.dilation,
            carried_tol: t.carried,
            qp_tol: t.qp,
            snap: 0.0,
        },
        qp_tol: t.qp,
        enforce_hypotheses: true,
        ks_level: t.ks_level,
    }
}

/// Brownian paths on every level, each refined from the previous one by
/// Brownian bridges, so all levels share the coarse skeleton.
pub fn coupled_levels(levels: &[usize], seed: &SeedSpec) -> Result<Vec<SamplePath>> {
    let mut out: Vec<SamplePath> = Vec::with_capacity(levels.len());
    for &n in levels {
        let next = match out.last() {
            None => sample_brownian(&make_grid(1.0, n)?, &seed.child("coarse"), 0.0),
            Some(prev) => refine_bridge(prev, n / prev.grid().n_steps(), &seed.child(&format!("refine{n}")))?,
        };
        out.push(next);
    }
    Ok(out)
}

/// One report per level (median below the previous level's) and one for the
/// bound at the finest level.
fn mesh_reports(name: &str, levels: &[usize], medians: &[f64], bound: f64, paths: usize, seed: &SeedSpec) -> Vec<TestReport> {
    let mut out = Vec::new();
    for (k, (&n, &m)) in levels.iter().zip(medians).enumerate() {
        let prev = if k == 0 { f64::MAX } else { medians[k - 1] };
        out.push(
            TestReport::new(format!("{name}.median[N={n}]"), m, prev, m < prev)
                .sizes(paths, n)
                .seeded(seed)
                .with_detail("median sup-norm residual; threshold is the previous level's median"),
        );
    }
    let (&n, &m) = (levels.last().expect("levels"), medians.last().expect("levels"));
    out.push(
        TestReport::new(format!("{name}.bound"), m, bound, m < bound)
            .sizes(paths, n)
            .seeded(seed)
            .with_detail("median sup-norm residual at the finest level"),
    );
    out
}

fn first_path_curves(name: &str, levels: &[usize], curves: &[SamplePath]) -> CurveSet {
    let mut c = CurveSet::new(name);
    for (n, curve) in levels.iter().zip(curves) {
        // thin to at most 1024 points per series
        let step = (curve.len() / 1024).max(1);
        let g = curve.grid();
        c.push_series(
            &format!("N={n}"),
            curve.values().iter().enumerate().step_by(step).map(|(i, &v)| (g.time(i), v)),
        );
    }
    c
}

fn identities(config: &ExperimentConfig) -> Result<SuiteOutput> {
    let levels = config.steps_for(Suite::Identities);
    let seed = seed(config, "identities");
    let cos_k = |t: f64| t.cos();
    let one = |_: f64| 1.0;
    let sin_f = |t: f64| t.sin();
    // per path: per level (tanaka, balayage cos, balayage 1, c3) curves
    let per_path: Vec<Vec<[SamplePath; 4]>> = (0..config.pathwise_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.with_index(i);
            coupled_levels(&levels, &s)?
                .iter()
                .map(|b| {
                    let tanaka = identity_residual_curve(
                        IdentityKind::Tanaka,
                        &IdentityInputs {
                            path: Some(b),
                            local_time: LocalTimeMethod::Bridge,
                            ..Default::default()
                        },
                    )?;
                    let y = b.abs();
                    let bal = |k: &dyn Fn(f64) -> f64| {
                        identity_residual_curve(
                            IdentityKind::BalayagePredictable,
                            &IdentityInputs {
                                path: Some(&y),
                                reference: Some(b),
                                weight: Some(k),
                                ..Default::default()
                            },
                        )
                    };
                    let m = ito_sum(&b.map(crate::localtime::sgn), b)?;
                    let v = local_time(b, LocalTimeMethod::Tanaka).curve;
                    let c3 = identity_residual_curve(
                        IdentityKind::TransformC3,
                        &IdentityInputs {
                            martingale_part: Some(&m),
                            fv_part: Some(&v),
                            weight: Some(&cos_k),
                            antiderivative: Some(&sin_f),
                            ..Default::default()
                        },
                    )?;
                    Ok([tanaka, bal(&cos_k)?, bal(&one)?, c3])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = SuiteOutput::default();
    let tol = config.tolerance.identity;
    let n_paths = config.pathwise_paths;
    for (j, name) in [(0, "tanaka"), (1, "balayage_cos"), (3, "transform_c3")] {
        let medians: Vec<f64> = (0..levels.len())
            .map(|l| median(&per_path.iter().map(|p| p[l][j].sup_norm()).collect::<Vec<_>>()))
            .collect();
        out.reports.extend(mesh_reports(&format!("identities.{name}"), &levels, &medians, tol, n_paths, &seed));
        let curves: Vec<SamplePath> = per_path[0].iter().map(|p| p[j].clone()).collect();
        out.curves.push(first_path_curves(&format!("identities_{name}"), &levels, &curves));
        for c in &curves {
            out.residuals.push(ResidualReport::from_curve(name, c, Some(seed.with_index(0))));
        }
    }
    let exact = per_path
        .iter()
        .flat_map(|p| p.iter().map(|l| l[2].sup_norm()))
        .fold(0.0, f64::max);
    out.reports.push(
        TestReport::new("identities.balayage_one.exact", exact, 1e-12, exact <= 1e-12)
            .sizes(n_paths, *levels.last().expect("levels"))
            .seeded(&seed)
            .with_detail("k = 1: max sup-norm residual over paths and levels"),
    );
    Ok(out)
}

/// Terminal qp residual averaged over `n_paths`; for `W + t` it estimates
/// `E int_0^T D ds = T`.
fn qp_control(config: &ExperimentConfig, opts: &SuiteOptions, seed: &SeedSpec) -> Result<TestReport> {
    let g = opts.grid()?;
    let family = config.model;
    let terminal: Vec<f64> = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.with_index(i);
            let model = build_model(family, &g, &s);
            Ok(qp_residual(&Zoo::Drifted.sample(&model, &s)?, &model)?.terminal)
        })
        .collect::<Result<_>>()?;
    let m = mean(&terminal);
    let gap = (m - g.horizon()).abs();
    Ok(TestReport::new("martingale.qp.control[W+t]", gap, opts.qp_tol, gap < opts.qp_tol)
        .sizes(opts.n_paths, opts.n_steps)
        .seeded(seed)
        .with_detail(format!("model={family} mean terminal residual {m:.5}; statistic is |mean - T|")))
}

/// Positive instance passes both sides, negative control fails both.
fn equivalence_reports(
    eq: EquivalenceSuite,
    config: &ExperimentConfig,
    opts: &SuiteOptions,
    prefix: &str,
) -> Result<Vec<TestReport>> {
    let (pos, neg) = eq.instances();
    let alpha = config.schedule.cell_alpha(0).get();
    let mut out = Vec::new();
    for (base, expect_pass) in [(pos, true), (neg, false)] {
        let label = format!("{prefix}/{}/{}", eq.name(), if expect_pass { "positive" } else { "control" });
        let s = seed(config, &label);
        let o = equivalence_suite(eq, config.model, base, alpha, &s, opts)?;
        let verdicts_ok = o.agree() && o.left.pass() == expect_pass;
        let mut r = o.report.clone();
        r.suite = format!("{prefix}.equivalence.{}[{}]", eq.name(), base.name());
        r.detail = format!(
            "expected {}; left {:?}, right {:?}; {}",
            if expect_pass { "pass/pass" } else { "fail/fail" },
            o.left.status,
            o.right.status,
            o.report.detail
        );
        r.status = match o.report.status {
            Status::HypothesisNotMet => Status::HypothesisNotMet,
            _ if verdicts_ok => Status::Pass,
            _ => Status::Fail,
        };
        out.push(r);
    }
    Ok(out)
}

fn control(mut r: TestReport, detected: bool, what: &str) -> TestReport {
    r.status = if detected { Status::Pass } else { Status::Fail };
    r.detail = format!("negative control, pass means {what} detected; {}", r.detail);
    r
}

fn martingale(config: &ExperimentConfig) -> Result<SuiteOutput> {
    use crate::signed_measure::{drift_suite, qp_suite};
    let opts = suite_options(config, Suite::Martingale);
    let family = config.model;
    let mut out = SuiteOutput::default();
    let members = [Zoo::Brownian, Zoo::LocalTimeShift(2.0), Zoo::ReturnToLastZero, Zoo::Geometric];
    for z in members {
        let s = seed(config, &format!("martingale/qp/{}", z.name()));
        out.reports.push(qp_suite(&format!("martingale.qp[{}]", z.name()), family, |m, s| z.sample(m, s), &opts, &s)?);
    }
    out.reports.push(qp_control(config, &opts, &seed(config, "martingale/qp/control"))?);
    for z in members.into_iter().chain([Zoo::Drifted]) {
        let s = seed(config, &format!("martingale/drift/{}", z.name()));
        let gen = |m: &crate::signed_measure::SignedMeasureModel, s: &SeedSpec| Ok(z.sample(m, s)?.total);
        let r = drift_suite(&format!("martingale.drift[D*({})]", z.name()), family, gen, &opts, &s)?;
        out.reports.push(if z == Zoo::Drifted {
            let hit = r.statistic > CONTROL_DRIFT;
            let mut r = control(r, hit, "drift");
            r.threshold = CONTROL_DRIFT;
            r
        } else {
            r
        });
    }
    for eq in [
        EquivalenceSuite::AbsMart,
        EquivalenceSuite::ZalphaMart,
        EquivalenceSuite::QpBrownian,
        EquivalenceSuite::AbsBrownian,
    ] {
        out.reports.extend(equivalence_reports(eq, config, &opts, "martingale")?);
    }
    Ok(out)
}

fn sigma_h(config: &ExperimentConfig) -> Result<SuiteOutput> {
    let opts = suite_options(config, Suite::SigmaH);
    let mut out = SuiteOutput::default();
    for z in [SigmaZoo::AbsBrownian, SigmaZoo::LocalTimeShift, SigmaZoo::Drifted] {
        let s = seed(config, &format!("sigma_h/{}", z.name()));
        let r = sigma_suite(&format!("sigma_h.class[{}]", z.name()), config.model, |m, s| z.sample(m, s), &opts, &s)?;
        out.reports.push(if z == SigmaZoo::Drifted {
            let miss = !r.pass();
            control(r, miss, "non-membership")
        } else {
            r
        });
    }
    for eq in [
        EquivalenceSuite::AbsSigma,
        EquivalenceSuite::ZalphaSigma,
        EquivalenceSuite::Cmart,
        EquivalenceSuite::ItoXdx,
    ] {
        out.reports.extend(equivalence_reports(eq, config, &opts, "sigma_h")?);
    }
    Ok(out)
}

fn law_curves(schedule: &AlphaSchedule, values: &[f64]) -> CurveSet {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let ys: Vec<f64> = (0..=80).map(|k| -4.0 + 0.1 * k as f64).collect();
    let oracle = |y: f64| match schedule {
        AlphaSchedule::Constant(a) => skew_cdf(a.get(), 1.0, y),
        AlphaSchedule::Piecewise { .. } => skew_cdf_piecewise(schedule, 1.0, y),
    };
    let mut c = CurveSet::new("skew_law_cdf");
    c.push_series("empirical", ys.iter().map(|&y| (y, sorted.partition_point(|&x| x <= y) as f64 / n)));
    c.push_series("oracle", ys.iter().map(|&y| (y, oracle(y))));
    c
}

fn skew_law(config: &ExperimentConfig) -> Result<SuiteOutput> {
    let n = config.single_steps(Suite::SkewLaw);
    let g = make_grid(1.0, n)?;
    let schedule = &config.schedule;
    let s = seed(config, "skew_law/construction");
    let t = &config.tolerance;
    let sample = skew_law_sample(SkewVariant::Absolute, schedule, CellRule::ExcursionStart, &g, config.n_paths, &s);
    let p = skew_positive_probability(schedule, 1.0);
    let frac = sample.fraction_positive();
    let mut out = SuiteOutput::default();
    out.reports.push(
        TestReport::new("skew_law.sign", (frac - p).abs(), t.sign, (frac - p).abs() < t.sign)
            .sizes(config.n_paths, n)
            .seeded(&s)
            .with_detail(format!("P(X_1 > 0) = {frac:.5}, oracle {p:.5}")),
    );
    let opts = LawTestOptions {
        level: t.ks_level,
        allowance: 0.0,
    };
    let reference = match schedule {
        AlphaSchedule::Constant(a) => LawReference::Skew { alpha: a.get(), t: 1.0 },
        AlphaSchedule::Piecewise { .. } => LawReference::Piecewise { schedule, t: 1.0 },
    };
    out.reports.push(law_test(&sample, reference, opts)?.renamed("skew_law.ks").sizes(config.n_paths, n).seeded(&s));
    if let AlphaSchedule::Constant(a) = schedule {
        let ws = seed(config, "skew_law/walk");
        let walk = walk_law_sample(a.get(), n, config.n_paths, &ws)?;
        let r = law_test(&sample, LawReference::Sample(&walk), LawTestOptions { allowance: t.lattice, ..opts })?;
        out.reports.push(r.renamed("skew_law.walk").sizes(config.n_paths, n).seeded(&ws));
    }
    out.curves.push(law_curves(schedule, &sample.values));
    Ok(out)
}

fn skew_residual(config: &ExperimentConfig) -> Result<SuiteOutput> {
    let levels = config.steps_for(Suite::SkewResidual);
    let seed = seed(config, "skew_residual");
    let schedule = &config.schedule;
    // per path: per level (residual curve, driver qv)
    let per_path: Vec<Vec<(SamplePath, f64)>> = (0..config.pathwise_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.with_index(i);
            coupled_levels(&levels, &s)?
                .into_iter()
                .map(|b| {
                    let spec = SkewBuildSpec::trivial(SkewVariant::Absolute, schedule.clone(), b);
                    let x = build_skew(&spec, &s)?;
                    let r = sde_residual(&x.path, &spec.base, &x.sign, schedule, SkewVariant::Absolute)?;
                    Ok((r.curve, r.driver_qv))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = SuiteOutput::default();
    let medians: Vec<f64> = (0..levels.len())
        .map(|l| median(&per_path.iter().map(|p| p[l].0.sup_norm()).collect::<Vec<_>>()))
        .collect();
    out.reports.extend(mesh_reports(
        "skew_residual.sde",
        &levels,
        &medians,
        config.tolerance.sde,
        config.pathwise_paths,
        &seed,
    ));
    let finest = levels.len() - 1;
    let qv = median(&per_path.iter().map(|p| (p[finest].1 - 1.0).abs()).collect::<Vec<_>>());
    out.reports.push(
        TestReport::new("skew_residual.driver_qv", qv, config.tolerance.qp, qv < config.tolerance.qp)
            .sizes(config.pathwise_paths, levels[finest])
            .seeded(&seed)
            .with_detail("median |[W, W]_1 - 1| of the recovered driver"),
    );
    let curves: Vec<SamplePath> = per_path[0].iter().map(|p| p.0.clone()).collect();
    out.curves.push(first_path_curves("skew_residual_sde", &levels, &curves));
    for c in &curves {
        out.residuals.push(ResidualReport::from_curve("skew_sde", c, Some(seed.with_index(0))));
    }
    Ok(out)
}

/// Events used by the representation suite.
pub const REPRESENTATION_EVENTS: [EventRule; 3] =
    [EventRule::Always, EventRule::PositiveAt(0.25), EventRule::DensityAbove(1.0)];

fn representation(config: &ExperimentConfig) -> Result<SuiteOutput> {
    let opts = suite_options(config, Suite::Representation);
    let mut out = SuiteOutput::default();
    for (family, base) in [(ModelFamily::Trivial, Zoo::Brownian), (ModelFamily::ShiftedBrownian, Zoo::ReturnToLastZero)] {
        for t in [0.5, 1.0] {
            let label = format!("representation[{}|{family}|T={t}]", base.name());
            let s = seed(config, &label);
            out.reports.push(optional_representation_check(
                &label,
                family,
                base,
                StoppingRule::Deterministic(t),
                &REPRESENTATION_EVENTS,
                RepresentationForm::DensityWeighted,
                &opts,
                &s,
            )?);
        }
    }
    Ok(out)
}
