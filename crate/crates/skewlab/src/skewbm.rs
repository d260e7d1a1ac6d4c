//! Skew Brownian motion by excursion sign flipping, its SDE residual, and
//! law oracles (closed-form density, skew random walk).

use crate::error::{invalid, Error, Result};
use crate::excursion::{decompose_excursions, ExcursionSet, Side};
use crate::grid::{ensure_aligned, make_grid, sample_brownian, SamplePath, TimeGrid};
use crate::localtime::{ito_sum, local_time, quadratic_covariation, sgn, LocalTimeMethod, ResidualReport};
use crate::report::TestReport;
use crate::seed::SeedSpec;
use crate::signed_measure::{Decomposition, SignedMeasureModel};
use crate::signflip::{
    apply_sign, assign_signs, build_sign_path, draw_side, AlphaSchedule, CellRule, SignAssignment, SignMode, SignPath,
};
use crate::stats::{ks_one_sample, ks_one_sample_lattice, ks_two_sample, normal_cdf, snap_to_lattice, KsOutcome};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkewVariant {
    /// `Z M`
    Signed,
    /// `Z |M|`
    #[default]
    Absolute,
}

impl SkewVariant {
    fn mode(self) -> SignMode {
        match self {
            Self::Signed => SignMode::Signed,
            Self::Absolute => SignMode::Absolute,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkewBuildSpec {
    pub variant: SkewVariant,
    pub schedule: AlphaSchedule,
    pub cell_rule: CellRule,
    pub base: Decomposition,
    pub model: SignedMeasureModel,
    pub x0: f64,
}

impl SkewBuildSpec {
    /// Trivial-model spec around a given base path.
    pub fn trivial(variant: SkewVariant, schedule: AlphaSchedule, base: SamplePath) -> Self {
        let x0 = base.first();
        let model = SignedMeasureModel::from_density(SamplePath::constant(*base.grid(), 1.0));
        Self {
            variant,
            schedule,
            cell_rule: CellRule::default(),
            base: Decomposition::martingale("B", base),
            model,
            x0,
        }
    }

    /// Base null on `H` (a zero of the base within two steps of every point
    /// of `H`) and `[D, M]` indistinguishable from 0.
    pub fn check_hypotheses(&self) -> Result<()> {
        if !self.model.h_mask.has_any() {
            return Ok(());
        }
        let zeros = decompose_excursions(&self.base.total).mask.dilate(2);
        if self.model.h_mask.indices().iter().any(|&k| !zeros.contains(k)) {
            return Err(Error::HypothesisNotMet("base does not vanish on H".into()));
        }
        let (d, m) = (self.model.density.values(), self.base.total.values());
        let (mut s, mut s2) = (0.0, 0.0);
        for i in 0..d.len() - 1 {
            let p = (d[i + 1] - d[i]) * (m[i + 1] - m[i]);
            s += p;
            s2 += p * p;
        }
        if s2 > 0.0 && s.abs() / s2.sqrt() > 6.0 {
            return Err(Error::HypothesisNotMet("base is correlated with D".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewPath {
    pub path: SamplePath,
    pub sign: SignPath,
    pub excursions: ExcursionSet,
    pub assignment: SignAssignment,
}

/// `Z^alpha M` or `Z^alpha |M|`, excursions taken from the signed base and
/// signs drawn from `seed/signs`. With `x0 != 0` the initial excursion keeps
/// the sign that returns `x0` at time 0.
pub fn build_skew(spec: &SkewBuildSpec, seed: &SeedSpec) -> Result<SkewPath> {
    let base = &spec.base.total;
    let grid = base.grid();
    if base.first() != spec.x0 {
        return Err(invalid(format!("base starts at {}, x0 = {}", base.first(), spec.x0)));
    }
    spec.schedule.check_horizon(grid.horizon())?;
    ensure_aligned(base, &spec.model.density)?;
    spec.check_hypotheses()?;
    let excursions = decompose_excursions(base);
    let mut assignment = assign_signs(&excursions, grid, &spec.schedule, spec.cell_rule, &seed.child("signs"));
    if let Some(initial) = Side::of(spec.x0) {
        let keep = match spec.variant {
            SkewVariant::Signed => Side::Positive,
            SkewVariant::Absolute => initial,
        };
        assignment.force(0, keep);
    }
    let sign = build_sign_path(&excursions, &assignment, &spec.schedule, grid)?;
    let path = apply_sign(&sign, base, spec.variant.mode())?;
    Ok(SkewPath {
        path,
        sign,
        excursions,
        assignment,
    })
}

/// Trivial-model skew path over a Brownian base drawn from `seed/base`.
pub fn sample_skew(
    variant: SkewVariant,
    schedule: &AlphaSchedule,
    rule: CellRule,
    grid: &TimeGrid,
    x0: f64,
    seed: &SeedSpec,
) -> Result<SkewPath> {
    let base = sample_brownian(grid, &seed.child("base"), x0);
    let mut spec = SkewBuildSpec::trivial(variant, schedule.clone(), base);
    spec.cell_rule = rule;
    build_skew(&spec, seed)
}

/// Terminal value of [`sample_skew`] on `[0, horizon]` without storing the
/// path. Consumes the same streams in the same order, so the result is
/// bit-identical.
pub fn skew_terminal(
    variant: SkewVariant,
    schedule: &AlphaSchedule,
    rule: CellRule,
    grid: &TimeGrid,
    x0: f64,
    seed: &SeedSpec,
) -> f64 {
    let mut rng = seed.child("base").rng();
    let sd = grid.dt().sqrt();
    let mut x = x0;
    let mut prev = Side::of(x);
    let mut count = usize::from(prev.is_some());
    let mut open = 0;
    for i in 1..=grid.n_steps() {
        let z: f64 = rng.sample(StandardNormal);
        x += sd * z;
        let s = Side::of(x);
        if s.is_some() && s != prev {
            open = if prev.is_none() { i - 1 } else { i };
            count += 1;
        }
        prev = s;
    }
    if prev.is_none() {
        return 0.0;
    }
    let n = count - 1;
    let side = match Side::of(x0) {
        Some(initial) if n == 0 => match variant {
            SkewVariant::Signed => Side::Positive,
            SkewVariant::Absolute => initial,
        },
        _ => {
            let cell = match rule {
                CellRule::ExcursionStart => schedule.cell_of(grid.time(open)),
                CellRule::CellIntersection => schedule.cell_of(grid.horizon()),
            };
            draw_side(seed.child("signs").key(), n, cell, schedule.cell_alpha(cell))
        }
    };
    let magnitude = match variant {
        SkewVariant::Signed => x,
        SkewVariant::Absolute => x.abs(),
    };
    side.as_f64() * magnitude
}

/// Residual of the skew SDE and the quadratic variation of its recovered
/// driver.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeResidual {
    pub report: ResidualReport,
    pub curve: SamplePath,
    /// `[W, W]_T` for the recovered driver, compare with the horizon.
    pub driver_qv: f64,
}

/// `X_t - x0 - W_t - sum (2 alpha(s) - 1) dL_s`.
///
/// The driver is `W = sum Z sgn(M) dM` (absolute) or `sum Z dM` (signed),
/// `L` the Tanaka local time of the base, which equals that of `X` in
/// continuous time, and `alpha` is read at the right end of each step.
pub fn sde_residual(
    x_alpha: &SamplePath,
    base: &Decomposition,
    sign: &SignPath,
    schedule: &AlphaSchedule,
    variant: SkewVariant,
) -> Result<SdeResidual> {
    let m = &base.total;
    ensure_aligned(x_alpha, m)?;
    ensure_aligned(sign.path(), m)?;
    let g = *m.grid();
    let k = match variant {
        SkewVariant::Absolute => sign.path().zip_with(m, |z, x| z * sgn(x))?,
        SkewVariant::Signed => sign.path().clone(),
    };
    let w = ito_sum(&k, m)?;
    let l = local_time(m, LocalTimeMethod::Tanaka).curve;
    let (xv, wv, lv) = (x_alpha.values(), w.values(), l.values());
    let x0 = xv[0];
    let mut drift = 0.0;
    let mut out = Vec::with_capacity(xv.len());
    out.push(0.0);
    for i in 1..xv.len() {
        let a = schedule.alpha_at(g.time(i)).get();
        drift += (2.0 * a - 1.0) * (lv[i] - lv[i - 1]);
        out.push(xv[i] - x0 - wv[i] - drift);
    }
    let curve = SamplePath::new(g, out)?;
    let driver_qv = quadratic_covariation(&w, &w)?.last();
    Ok(SdeResidual {
        report: ResidualReport::from_curve("skew_sde", &curve, None),
        curve,
        driver_qv,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Density at time `t` of skew Brownian motion started at 0.
pub fn skew_transition_density(alpha: f64, t: f64, y: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    let phi = (-y * y / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
    Ok(if y > 0.0 {
        2.0 * alpha * phi
    } else if y < 0.0 {
        2.0 * (1.0 - alpha) * phi
    } else {
        phi
    })
}

/// CDF matching [`skew_transition_density`].
pub fn skew_cdf(alpha: f64, t: f64, y: f64) -> f64 {
    let p = normal_cdf(y / t.sqrt());
    if y < 0.0 {
        2.0 * (1.0 - alpha) * p
    } else {
        1.0 - alpha + 2.0 * alpha * (p - 0.5)
    }
}

/// `P(g_t in [0, s], |B_t| > y)` for the last zero `g_t` of a Brownian
/// motion from 0; with `s = t sin^2 theta` the arcsine density becomes
/// `2 / pi dtheta` and `|B_t|` given `g_t` is a meander of length `t - g_t`.
fn last_zero_tail(t: f64, s: f64, y: f64) -> f64 {
    let hi = (s / t).clamp(0.0, 1.0).sqrt().asin();
    if hi == 0.0 {
        return 0.0;
    }
    let f = |th: f64| {
        let c = th.cos();
        if c == 0.0 {
            0.0
        } else {
            (-y * y / (2.0 * t * c * c)).exp()
        }
    };
    // composite Simpson, the integrand is smooth on [0, pi/2]
    let n = 2000;
    let h = hi / n as f64;
    let mut acc = f(0.0) + f(hi);
    for k in 1..n {
        acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 / std::f64::consts::PI * acc * h / 3.0
}

/// CDF at time `t` of the excursion-start construction for a piecewise
/// schedule, started at 0: the sign of `X_t` is drawn with the alpha of the
/// cell holding the last zero before `t`.
pub fn skew_cdf_piecewise(schedule: &AlphaSchedule, t: f64, y: f64) -> f64 {
    let bounds: Vec<f64> = match schedule {
        AlphaSchedule::Constant(_) => vec![0.0],
        AlphaSchedule::Piecewise { boundaries, .. } => boundaries.clone(),
    };
    let a = y.abs();
    let mut tail = 0.0;
    for (c, &lo) in bounds.iter().enumerate() {
        if lo >= t {
            break;
        }
        let hi = bounds.get(c + 1).copied().unwrap_or(t).min(t);
        let mass = last_zero_tail(t, hi, a) - last_zero_tail(t, lo, a);
        let alpha = schedule.cell_alpha(c).get();
        tail += if y < 0.0 { (1.0 - alpha) * mass } else { alpha * mass };
    }
    if y < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// `P(X_t > 0)` for [`skew_cdf_piecewise`].
pub fn skew_positive_probability(schedule: &AlphaSchedule, t: f64) -> f64 {
    1.0 - skew_cdf_piecewise(schedule, t, 0.0)
}

fn walk_step(rng: &mut impl Rng, alpha: f64, at_zero: bool) -> i64 {
    let u: f64 = rng.random();
    let p = if at_zero { alpha } else { 0.5 };
    if u < p {
        1
    } else {
        -1
    }
}

/// Skew random walk from 0 (up with probability `alpha` at 0, fair
/// elsewhere), scaled by `1/sqrt(n)` on the grid `[0, 1]`.
pub fn harrison_shepp_walk(alpha: f64, n_steps: usize, seed: &SeedSpec) -> Result<SamplePath> {
    check_alpha(alpha)?;
    let g = make_grid(1.0, n_steps)?;
    let scale = 1.0 / (n_steps as f64).sqrt();
    let mut rng = seed.rng();
    let mut k: i64 = 0;
    let mut v = Vec::with_capacity(n_steps + 1);
    v.push(0.0);
    for _ in 0..n_steps {
        k += walk_step(&mut rng, alpha, k == 0);
        v.push(k as f64 * scale);
    }
    SamplePath::new(g, v)
}

/// Terminal value of [`harrison_shepp_walk`], same stream.
pub fn harrison_shepp_terminal(alpha: f64, n_steps: usize, seed: &SeedSpec) -> f64 {
    let mut rng = seed.rng();
    let mut k: i64 = 0;
    for _ in 0..n_steps {
        k += walk_step(&mut rng, alpha, k == 0);
    }
    k as f64 * (1.0 / (n_steps as f64).sqrt())
}

/// Lattice spacing of the scaled walk's terminal value.
pub fn walk_lattice(n_steps: usize) -> f64 {
    2.0 / (n_steps as f64).sqrt()
}

/// Terminal values at a fixed time from independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LawSample {
    pub values: Vec<f64>,
    pub tag: String,
    /// Spacing when the values live on a lattice `{k h}`.
    pub lattice: Option<f64>,
}

impl LawSample {
    pub fn new(tag: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(invalid(format!("non-finite law sample value {x}")));
        }
        Ok(Self {
            values,
            tag: tag.into(),
            lattice: None,
        })
    }

    pub fn on_lattice(mut self, h: f64) -> Self {
        self.lattice = Some(h);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn fraction_positive(&self) -> f64 {
        self.values.iter().filter(|&&x| x > 0.0).count() as f64 / self.values.len() as f64
    }
}

/// Terminal law of the skew construction, path `i` seeded by
/// `seed.with_index(i)`.
pub fn skew_law_sample(
    variant: SkewVariant,
    schedule: &AlphaSchedule,
    rule: CellRule,
    grid: &TimeGrid,
    n_paths: usize,
    seed: &SeedSpec,
) -> LawSample {
    let values = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| skew_terminal(variant, schedule, rule, grid, 0.0, &seed.with_index(i)))
        .collect();
    LawSample {
        values,
        tag: format!("skew[{}]", seed.stream_label),
        lattice: None,
    }
}

pub fn walk_law_sample(alpha: f64, n_steps: usize, n_paths: usize, seed: &SeedSpec) -> Result<LawSample> {
    check_alpha(alpha)?;
    let values = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| harrison_shepp_terminal(alpha, n_steps, &seed.with_index(i)))
        .collect();
    Ok(LawSample {
        values,
        tag: format!("walk[alpha={alpha}]"),
        lattice: Some(walk_lattice(n_steps)),
    })
}

pub enum LawReference<'a> {
    Sample(&'a LawSample),
    /// Skew law started at 0, observed at time `t`.
    Skew { alpha: f64, t: f64 },
    /// Excursion-start construction for a piecewise schedule, from 0.
    Piecewise { schedule: &'a AlphaSchedule, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawTestOptions {
    pub level: f64,
    /// Added to the critical value.
    pub allowance: f64,
}

impl Default for LawTestOptions {
    fn default() -> Self {
        Self {
            level: 0.01,
            allowance: 0.0,
        }
    }
}

/// KS test of `sample` against another sample or the skew law.
///
/// Against the skew law the detail also carries `|P(X > 0) - alpha|`. A
/// lattice sample is compared with the continuous law by the midpoint
/// convention; in a two-sample test against a lattice sample the other
/// sample is snapped to the same lattice first.
pub fn law_test(sample: &LawSample, reference: LawReference<'_>, opts: LawTestOptions) -> Result<TestReport> {
    let (ks, detail): (KsOutcome, String) = match reference {
        LawReference::Sample(other) => {
            let h = sample.lattice.or(other.lattice);
            let snap = |s: &LawSample| -> Vec<f64> {
                match h {
                    Some(h) if s.lattice.is_none() => s.values.iter().map(|&x| snap_to_lattice(x, h)).collect(),
                    _ => s.values.clone(),
                }
            };
            let ks = ks_two_sample(&snap(sample), &snap(other))?;
            let d = match h {
                Some(h) => format!("vs {}; lattice spacing {h}", other.tag),
                None => format!("vs {}", other.tag),
            };
            (ks, d)
        }
        LawReference::Skew { alpha, t } => {
            check_alpha(alpha)?;
            let cdf = |y| skew_cdf(alpha, t, y);
            let ks = match sample.lattice {
                Some(h) => ks_one_sample_lattice(&sample.values, cdf, h)?,
                None => ks_one_sample(&sample.values, cdf)?,
            };
            let pos = (sample.fraction_positive() - alpha).abs();
            let mut d = format!("skew law alpha={alpha} t={t}; |P(X>0)-alpha|={pos:.5}");
            if let Some(h) = sample.lattice {
                d.push_str(&format!("; lattice spacing {h}"));
            }
            (ks, d)
        }
        LawReference::Piecewise { schedule, t } => {
            let ks = ks_one_sample(&sample.values, |y| skew_cdf_piecewise(schedule, t, y))?;
            let p = skew_positive_probability(schedule, t);
            let pos = (sample.fraction_positive() - p).abs();
            (ks, format!("piecewise law t={t}; |P(X>0)-{p:.5}|={pos:.5}"))
        }
    };
    let threshold = ks.critical(opts.level) + opts.allowance;
    Ok(TestReport::new(format!("law[{}]", sample.tag), ks.distance, threshold, ks.distance < threshold)
        .sizes(sample.len(), 0)
        .with_detail(format!("{detail}; p={:.4}", ks.p_value)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TimeGrid {
        make_grid(1.0, n).unwrap()
    }

    #[test]
    fn alpha_one_reflects() {
        let g = grid(512);
        let s = AlphaSchedule::constant(1.0).unwrap();
        for k in 0..10 {
            let seed = SeedSpec::new(1, "skew", k);
            let p = sample_skew(SkewVariant::Absolute, &s, CellRule::ExcursionStart, &g, 0.0, &seed).unwrap();
            let base = sample_brownian(&g, &seed.child("base"), 0.0);
            assert_eq!(p.path, base.abs());
        }
    }

    #[test]
    fn fused_terminal_matches_pipeline() {
        let g = grid(300);
        let schedules = [
            AlphaSchedule::constant(0.7).unwrap(),
            AlphaSchedule::piecewise(vec![0.0, 0.5], vec![0.3, 0.8]).unwrap(),
        ];
        for s in &schedules {
            for rule in [CellRule::ExcursionStart, CellRule::CellIntersection] {
                for variant in [SkewVariant::Absolute, SkewVariant::Signed] {
                    for x0 in [0.0, 0.3, -0.2] {
                        for k in 0..40 {
                            let seed = SeedSpec::new(9, "fused", k);
                            let p = sample_skew(variant, s, rule, &g, x0, &seed).unwrap();
                            let t = skew_terminal(variant, s, rule, &g, x0, &seed);
                            assert_eq!(p.path.last().to_bits(), t.to_bits(), "{variant:?} {rule:?} x0={x0} k={k}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn x0_initial_excursion_kept() {
        let g = grid(256);
        let s = AlphaSchedule::constant(0.0).unwrap();
        for k in 0..10 {
            let seed = SeedSpec::new(3, "x0", k);
            let p = sample_skew(SkewVariant::Absolute, &s, CellRule::ExcursionStart, &g, 0.5, &seed).unwrap();
            assert_eq!(p.path.first(), 0.5);
            let q = sample_skew(SkewVariant::Signed, &s, CellRule::ExcursionStart, &g, -0.5, &seed).unwrap();
            assert_eq!(q.path.first(), -0.5);
        }
    }

    #[test]
    fn base_must_start_at_x0() {
        let g = grid(16);
        let base = sample_brownian(&g, &SeedSpec::new(0, "b", 0), 0.0);
        let mut spec = SkewBuildSpec::trivial(SkewVariant::Absolute, AlphaSchedule::constant(0.5).unwrap(), base);
        spec.x0 = 1.0;
        assert!(matches!(build_skew(&spec, &SeedSpec::new(0, "s", 0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn hypothesis_enforced_for_nontrivial_model() {
        use crate::signed_measure::{build_model, ModelFamily, Zoo};
        let g = grid(1024);
        let mut seen_bad = false;
        for k in 0..10 {
            let seed = SeedSpec::new(4, "h", k);
            let model = build_model(ModelFamily::ShiftedBrownian, &g, &seed);
            if !model.h_mask.has_any() {
                continue;
            }
            let good = Zoo::ReturnToLastZero.sample(&model, &seed).unwrap();
            let spec = SkewBuildSpec {
                variant: SkewVariant::Absolute,
                schedule: AlphaSchedule::constant(0.7).unwrap(),
                cell_rule: CellRule::ExcursionStart,
                base: good,
                model: model.clone(),
                x0: 0.0,
            };
            assert!(build_skew(&spec, &seed).is_ok());
            let spec = SkewBuildSpec {
                base: Decomposition::martingale("D-1", model.density.map(|d| d - 1.0)),
                ..spec
            };
            assert!(matches!(build_skew(&spec, &seed), Err(Error::HypothesisNotMet(_))));
            seen_bad = true;
        }
        assert!(seen_bad);
    }

    #[test]
    fn density_examples() {
        let phi = |y: f64| (-y * y / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for y in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            assert!((skew_transition_density(0.5, 1.0, y).unwrap() - phi(y)).abs() < 1e-15);
        }
        assert!(skew_transition_density(0.5, 0.0, 1.0).is_err());
        assert!(skew_transition_density(1.5, 1.0, 1.0).is_err());
        assert_eq!(skew_cdf(0.7, 1.0, 0.0), 0.30000000000000004);
    }

    #[test]
    fn piecewise_cdf_reduces_to_closed_form() {
        let c = AlphaSchedule::constant(0.7).unwrap();
        let same = AlphaSchedule::piecewise(vec![0.0, 0.5], vec![0.7, 0.7]).unwrap();
        for y in [-2.0, -0.4, 0.0, 0.3, 1.5] {
            let want = skew_cdf(0.7, 1.0, y);
            assert!((skew_cdf_piecewise(&c, 1.0, y) - want).abs() < 1e-10, "{y}");
            assert!((skew_cdf_piecewise(&same, 1.0, y) - want).abs() < 1e-10, "{y}");
        }
        // arcsine law: the last zero before 1 precedes 1/2 with probability 1/2
        let two = AlphaSchedule::piecewise(vec![0.0, 0.5], vec![0.3, 0.8]).unwrap();
        assert!((skew_positive_probability(&two, 1.0) - 0.55).abs() < 1e-12);
    }

    #[test]
    fn walk_alpha_one_nonnegative() {
        for k in 0..20 {
            let w = harrison_shepp_walk(1.0, 1000, &SeedSpec::new(5, "w", k)).unwrap();
            assert!(w.values().iter().all(|&x| x >= 0.0));
            assert_eq!(w.last(), harrison_shepp_terminal(1.0, 1000, &SeedSpec::new(5, "w", k)));
        }
    }

    #[test]
    fn law_test_identical() {
        let v: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 2000) as f64 / 2000.0 - 0.5).collect();
        let a = LawSample::new("a", v).unwrap();
        let r = law_test(&a, LawReference::Sample(&a), LawTestOptions::default()).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass());
        assert!(LawSample::new("bad", vec![f64::NAN]).is_err());
    }

    #[test]
    fn residual_alpha_one_is_tanaka_of_abs() {
        let g = grid(2048);
        let s = AlphaSchedule::constant(1.0).unwrap();
        let seed = SeedSpec::new(6, "r", 0);
        let p = sample_skew(SkewVariant::Absolute, &s, CellRule::ExcursionStart, &g, 0.0, &seed).unwrap();
        let base = Decomposition::martingale("B", sample_brownian(&g, &seed.child("base"), 0.0));
        let r = sde_residual(&p.path, &base, &p.sign, &s, SkewVariant::Absolute).unwrap();
        // Z = 1 off zeros: residual is |B| - sum sgn(B) dB - L_tanaka(B) = 0
        assert!(r.report.sup_norm < 1e-12, "{}", r.report.sup_norm);
    }
}
