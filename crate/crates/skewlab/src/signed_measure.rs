//! Density-process models of a signed measure and the statistical suites
//! built on them.
//!
//! A model carries `D` (the density process), its zero set `H`, the
//! last-zero curve and `gbar`. A process `M` is a (Q,P)-martingale when
//! `D M` is a P-martingale; with a decomposition `M = m + v` this is checked
//! pathwise through `sum D dv + [M, D] = 0` and statistically by a drift test
//! on `D M`.

use crate::error::{invalid, Error, Result};
use crate::excursion::{decompose_excursions, decompose_with_snap, LastZeroCurve, Side, ZeroMask};
use crate::grid::{ensure_aligned, sample_brownian, SamplePath, TimeGrid};
use crate::localtime::{ito_sum, local_time, quadratic_covariation, sgn, LocalTimeMethod, ResidualReport};
use crate::report::{Status, TestReport};
use crate::seed::SeedSpec;
use crate::signflip::{assign_signs, build_sign_path, AlphaSchedule, CellRule};
use crate::stats::{ks_one_sample, median, normal_cdf, Moments};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

type RowWeight = Box<dyn Fn(&[f64; 3]) -> f64>;

pub const MIN_DRIFT_PATHS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelFamily {
    /// `D = 1`, so `Q = P` and `H` is empty.
    Trivial,
    /// `D = 1 + B` on the horizon.
    ShiftedBrownian,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Trivial => "trivial",
            Self::ShiftedBrownian => "shifted_brownian",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trivial" => Ok(Self::Trivial),
            "shifted_brownian" => Ok(Self::ShiftedBrownian),
            other => Err(invalid(format!("unknown model family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Family(ModelFamily),
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasureModel {
    pub kind: ModelKind,
    pub density: SamplePath,
    pub d_infinity: f64,
    pub h_mask: ZeroMask,
    pub gamma: LastZeroCurve,
    pub gbar: usize,
}

impl SignedMeasureModel {
    /// Model from an arbitrary continuous density path.
    pub fn from_density(density: SamplePath) -> Self {
        Self::with_kind(density, ModelKind::Custom)
    }

    fn with_kind(density: SamplePath, kind: ModelKind) -> Self {
        let e = decompose_excursions(&density);
        let (gamma, _) = LastZeroCurve::from_mask(&e.mask);
        // gbar = 0 v g with g = sup H; the empty H gives 0
        let gbar = e.mask.indices().last().copied().unwrap_or(0);
        Self {
            kind,
            d_infinity: density.last(),
            density,
            h_mask: e.mask,
            gamma,
            gbar,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        self.density.grid()
    }

    pub fn is_trivial(&self) -> bool {
        self.kind == ModelKind::Family(ModelFamily::Trivial)
    }
}

pub fn build_model(family: ModelFamily, grid: &TimeGrid, seed: &SeedSpec) -> SignedMeasureModel {
    let density = match family {
        ModelFamily::Trivial => SamplePath::constant(*grid, 1.0),
        ModelFamily::ShiftedBrownian => sample_brownian(grid, &seed.child("density"), 1.0),
    };
    SignedMeasureModel::with_kind(density, ModelKind::Family(family))
}

/// `M = m + v` with `m` the martingale part and `v` of finite variation.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub total: SamplePath,
    pub martingale_part: SamplePath,
    pub fv_part: SamplePath,
    pub label: String,
}

impl Decomposition {
    pub fn new(label: impl Into<String>, m: SamplePath, v: SamplePath) -> Result<Self> {
        let total = m.zip_with(&v, |a, b| a + b)?;
        Ok(Self {
            total,
            martingale_part: m,
            fv_part: v,
            label: label.into(),
        })
    }

    /// A martingale with no finite-variation part.
    pub fn martingale(label: impl Into<String>, m: SamplePath) -> Self {
        let v = SamplePath::constant(*m.grid(), 0.0);
        Self {
            total: m.clone(),
            martingale_part: m,
            fv_part: v,
            label: label.into(),
        }
    }

    /// Total known exactly; the martingale part is `total - fv`.
    pub fn from_total(label: impl Into<String>, total: SamplePath, fv: SamplePath) -> Result<Self> {
        let m = total.zip_with(&fv, |a, b| a - b)?;
        Ok(Self {
            total,
            martingale_part: m,
            fv_part: fv,
            label: label.into(),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.total.grid()
    }

    /// `|M|` through Tanaka: the finite-variation part is
    /// `sum sgn(M) dv + L(M)`.
    pub fn abs(&self) -> Result<Decomposition> {
        let s = self.total.map(sgn);
        let sv = ito_sum(&s, &self.fv_part)?;
        let l = local_time(&self.total, LocalTimeMethod::Tanaka).curve;
        let fv = sv.zip_with(&l, |a, b| a + b)?;
        Decomposition::from_total(format!("|{}|", self.label), self.total.abs(), fv)
    }

    /// `Z M` for a sign path `Z`: finite-variation part `sum Z dv`.
    pub fn signed_by(&self, z: &SamplePath) -> Result<Decomposition> {
        let total = z.zip_with(&self.total, |a, b| a * b)?;
        let fv = ito_sum(z, &self.fv_part)?;
        Decomposition::from_total(format!("Z{}", self.label), total, fv)
    }
}

/// Residual curve `sum D dv + [M, D]`.
pub fn qp_residual_curve(dec: &Decomposition, model: &SignedMeasureModel) -> Result<SamplePath> {
    ensure_aligned(&dec.total, &model.density)?;
    let a = ito_sum(&model.density, &dec.fv_part)?;
    let b = quadratic_covariation(&dec.total, &model.density)?;
    a.zip_with(&b, |x, y| x + y)
}

pub fn qp_residual(dec: &Decomposition, model: &SignedMeasureModel) -> Result<ResidualReport> {
    let c = qp_residual_curve(dec, model)?;
    Ok(ResidualReport::from_curve(format!("qp[{}]", dec.label), &c, None))
}

/// Fraction of the total variation of `fv` accumulated on increments with an
/// endpoint within `dilation` steps of the mask. 1 when `fv` is constant.
pub fn carried_by_fraction(fv: &SamplePath, mask: &ZeroMask, dilation: usize) -> Result<f64> {
    if mask.len() != fv.len() {
        return Err(Error::GridMismatch {
            left: fv.len(),
            right: mask.len(),
        });
    }
    let dist = mask.distance();
    let v = fv.values();
    let (mut near, mut total) = (0.0, 0.0);
    for i in 0..v.len() - 1 {
        let dv = (v[i + 1] - v[i]).abs();
        total += dv;
        if dist[i] <= dilation || dist[i + 1] <= dilation {
            near += dv;
        }
    }
    Ok(if total == 0.0 { 1.0 } else { near / total })
}

pub fn carried_by_check(fv: &SamplePath, mask: &ZeroMask, dilation: usize, tol: f64) -> Result<TestReport> {
    let s = carried_by_fraction(fv, mask, dilation)?;
    Ok(TestReport::new("carried_by", s, 1.0 - tol, s >= 1.0 - tol)
        .sizes(1, fv.grid().n_steps())
        .with_detail(format!("dilation={dilation}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub checkpoints: Vec<f64>,
    pub threshold: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            checkpoints: vec![0.5, 1.0],
            threshold: 4.0,
        }
    }
}

/// Zero-drift test for product paths `P` from `generator(seed.with_index(i))`.
///
/// For consecutive checkpoints `(s, t)` (0 prepended) and the weights
/// `1`, `sgn(P_{s/2})`, `1{P_s > median}`, the statistic is
/// `max |mean(w (P_t - P_s))| / se`; pass iff below the threshold.
pub fn martingale_drift_test<F>(
    suite: &str,
    generator: F,
    n_paths: usize,
    cfg: &DriftConfig,
    seed: &SeedSpec,
) -> Result<TestReport>
where
    F: Fn(&SeedSpec) -> Result<SamplePath> + Sync,
{
    if n_paths < MIN_DRIFT_PATHS {
        return Err(Error::InsufficientSamples {
            got: n_paths,
            need: MIN_DRIFT_PATHS,
        });
    }
    if cfg.checkpoints.is_empty() || cfg.checkpoints.windows(2).any(|w| w[0] >= w[1]) || cfg.checkpoints[0] <= 0.0 {
        return Err(invalid("checkpoints must be positive and increasing"));
    }
    let mut times = vec![0.0];
    times.extend(&cfg.checkpoints);
    let pairs: Vec<(f64, f64)> = times.windows(2).map(|w| (w[0], w[1])).collect();
    // per path: for each pair (P_{s/2}, P_s, P_t)
    let rows: Vec<(usize, Vec<[f64; 3]>)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = generator(&seed.with_index(i))?;
            let v: Vec<[f64; 3]> = pairs
                .iter()
                .map(|&(s, t)| [p.at_time(s / 2.0), p.at_time(s), p.at_time(t)])
                .collect();
            Ok((p.grid().n_steps(), v))
        })
        .collect::<Result<_>>()?;
    let n_steps = rows[0].0;
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (k, &(s, t)) in pairs.iter().enumerate() {
        let ps: Vec<f64> = rows.iter().map(|r| r.1[k][1]).collect();
        let med = median(&ps);
        let weights: [(&str, RowWeight); 3] = [
            ("1", Box::new(|_| 1.0)),
            ("sgn", Box::new(|r| sgn(r[0]))),
            ("above_median", Box::new(move |r| if r[1] > med { 1.0 } else { 0.0 })),
        ];
        for (name, w) in &weights {
            if rows.iter().all(|r| w(&r.1[k]) == 0.0) {
                continue;
            }
            let m: Moments = rows.iter().map(|r| w(&r.1[k]) * (r.1[k][2] - r.1[k][1])).collect();
            let z = m.t_statistic();
            worst = worst.max(z);
            detail.push(format!("({s},{t}) w={name}: {:.3}", z));
        }
    }
    Ok(TestReport::new(suite, worst, cfg.threshold, worst < cfg.threshold)
        .sizes(n_paths, n_steps)
        .seeded(seed)
        .with_detail(detail.join("; ")))
}

/// `X = M + A` with `M = m + v` a candidate (Q,P)-martingale and `A` the
/// part that must be carried by `{X = 0}` plus `H`.
///
/// `shadow` is a signed path whose excursion intervals are those of `X`: `X`
/// itself when it changes sign, `W` for `X = |W|`, which never reaches 0 on a
/// grid. Sign flips of `X` keep the shadow, so adjacent excursions that draw
/// the same sign stay separate.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaDecomposition {
    pub x: SamplePath,
    pub shadow: SamplePath,
    pub local_mart: Decomposition,
    pub compensator: SamplePath,
}

impl SigmaDecomposition {
    pub fn new(local_mart: Decomposition, compensator: SamplePath) -> Result<Self> {
        let x = local_mart.total.zip_with(&compensator, |a, b| a + b)?;
        Ok(Self {
            shadow: x.clone(),
            x,
            local_mart,
            compensator,
        })
    }

    pub fn with_shadow(mut self, shadow: SamplePath) -> Result<Self> {
        ensure_aligned(&self.x, &shadow)?;
        self.shadow = shadow;
        Ok(self)
    }

    /// Discrete zero set: exact zeros and crossings of the shadow, plus
    /// `|X| <= snap`.
    pub fn zero_set(&self, snap: f64) -> ZeroMask {
        let mask = decompose_excursions(&self.shadow).mask;
        if snap > 0.0 {
            mask.union(&decompose_with_snap(&self.x, snap).mask)
        } else {
            mask
        }
    }

    /// `|X|`: `M' = sum sgn(X) dM`, `A' = |X| - M'`.
    pub fn abs(&self) -> Result<Self> {
        let s = self.x.map(sgn);
        self.transformed(&s, self.x.abs(), self.shadow.clone(), "|.|")
    }

    /// `Z X` for a sign path built on the excursions of the shadow.
    pub fn signed_by(&self, z: &SamplePath) -> Result<Self> {
        let total = z.zip_with(&self.x, |a, b| a * b)?;
        self.transformed(z, total, self.shadow.clone(), "Z")
    }

    fn transformed(&self, k: &SamplePath, new_x: SamplePath, shadow: SamplePath, tag: &str) -> Result<Self> {
        let m = ito_sum(k, &self.local_mart.martingale_part)?;
        let v = ito_sum(k, &self.local_mart.fv_part)?;
        let mart = Decomposition::new(format!("{tag}{}", self.local_mart.label), m, v)?;
        let a = new_x.zip_with(&mart.total, |x, y| x - y)?;
        Ok(Self {
            x: new_x,
            shadow,
            local_mart: mart,
            compensator: a,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaOptions {
    pub dilation: usize,
    pub carried_tol: f64,
    /// Sup-norm tolerance for the qp residual, raised to four standard
    /// errors of `[M, D]` when the grid is too coarse to resolve it.
    pub qp_tol: f64,
    /// Values with `|X| <= snap` join the zero set.
    pub snap: f64,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        Self {
            dilation: 2,
            carried_tol: 0.05,
            qp_tol: 0.05,
            snap: 0.0,
        }
    }
}

/// `sqrt(sum (dM dD)^2)`, the standard error of `[M, D]_T` when `M` and `D`
/// are independent.
pub fn covariation_noise(m: &SamplePath, d: &SamplePath) -> Result<f64> {
    ensure_aligned(m, d)?;
    let (a, b) = (m.values(), d.values());
    let s: f64 = (0..a.len() - 1)
        .map(|i| ((a[i + 1] - a[i]) * (b[i + 1] - b[i])).powi(2))
        .sum();
    Ok(s.sqrt())
}

/// Membership check for the class: (a) `A` carried by `{X = 0}` plus `H`,
/// (b) the qp residual of `M` below tolerance in sup norm, (c) `A_0 = M_0 = 0`.
pub fn sigma_h_check(dec: &SigmaDecomposition, model: &SignedMeasureModel, opts: &SigmaOptions) -> Result<TestReport> {
    ensure_aligned(&dec.x, &model.density)?;
    let mask = dec.zero_set(opts.snap).union(&model.h_mask);
    let carried = carried_by_fraction(&dec.compensator, &mask, opts.dilation)?;
    let qp = qp_residual(&dec.local_mart, model)?;
    let qp_tol = opts
        .qp_tol
        .max(4.0 * covariation_noise(&dec.local_mart.total, &model.density)?);
    let start = dec.compensator.first() == 0.0 && dec.local_mart.total.first() == 0.0;
    let ok = carried >= 1.0 - opts.carried_tol && qp.sup_norm < qp_tol && start;
    Ok(TestReport::new("sigma_h", carried, 1.0 - opts.carried_tol, ok)
        .sizes(1, dec.x.grid().n_steps())
        .with_detail(format!(
            "carried={carried:.4} qp_sup={:.4} qp_tol={qp_tol:.4} starts_at_zero={start}",
            qp.sup_norm
        )))
}

/// Concrete (Q,P)-martingale candidates. `W` is a Brownian motion
/// independent of `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Zoo {
    /// `W`
    Brownian,
    /// `W + c L(D)`
    LocalTimeShift(f64),
    /// `W - W_gamma`, gamma from the zeros of `D`
    ReturnToLastZero,
    /// `exp(W - t/2)`, never zero
    Geometric,
    /// `W + t`, negative control
    Drifted,
    /// `exp(W - t/2) + t`, negative control
    GeometricDrifted,
}

impl Zoo {
    pub fn name(self) -> String {
        match self {
            Self::Brownian => "W".into(),
            Self::LocalTimeShift(c) => format!("W+{c}L(D)"),
            Self::ReturnToLastZero => "W-W_gamma".into(),
            Self::Geometric => "GBM".into(),
            Self::Drifted => "W+t".into(),
            Self::GeometricDrifted => "GBM+t".into(),
        }
    }

    pub fn sample(self, model: &SignedMeasureModel, seed: &SeedSpec) -> Result<Decomposition> {
        let g = *model.grid();
        let w = sample_brownian(&g, &seed.child("driver"), 0.0);
        let label = self.name();
        match self {
            Self::Brownian => Ok(Decomposition::martingale(label, w)),
            Self::LocalTimeShift(c) => {
                let l = local_time(&model.density, LocalTimeMethod::Tanaka).curve;
                Decomposition::new(label, w, l.map(|x| c * x))
            }
            Self::ReturnToLastZero => {
                let wv = w.values();
                let m = model.gamma.gamma.iter().enumerate().map(|(i, &gi)| wv[i] - wv[gi]).collect();
                Ok(Decomposition::martingale(label, SamplePath::new(g, m)?))
            }
            Self::Geometric => Ok(Decomposition::martingale(label, w.map_with_time(|t, x| (x - 0.5 * t).exp()))),
            Self::Drifted => Decomposition::new(label, w, SamplePath::from_fn(g, |t| t)?),
            Self::GeometricDrifted => Decomposition::new(
                label,
                w.map_with_time(|t, x| (x - 0.5 * t).exp()),
                SamplePath::from_fn(g, |t| t)?,
            ),
        }
    }
}

/// Concrete members (and a non-member) of the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaZoo {
    /// `|W| = sum sgn(W) dW + L(W)`
    AbsBrownian,
    /// `W + 2 L(D)` with `A = 2 L(D)`
    LocalTimeShift,
    /// `W + t`, negative control
    Drifted,
}

impl SigmaZoo {
    pub fn name(self) -> &'static str {
        match self {
            Self::AbsBrownian => "|W|",
            Self::LocalTimeShift => "W+2L(D)",
            Self::Drifted => "W+t",
        }
    }

    pub fn sample(self, model: &SignedMeasureModel, seed: &SeedSpec) -> Result<SigmaDecomposition> {
        let g = *model.grid();
        let w = sample_brownian(&g, &seed.child("driver"), 0.0);
        match self {
            Self::AbsBrownian => {
                let m = ito_sum(&w.map(sgn), &w)?;
                let a = local_time(&w, LocalTimeMethod::Tanaka).curve;
                SigmaDecomposition::new(Decomposition::martingale("sgn(W).W", m), a)?.with_shadow(w)
            }
            Self::LocalTimeShift => {
                let a = local_time(&model.density, LocalTimeMethod::Tanaka).curve.map(|x| 2.0 * x);
                SigmaDecomposition::new(Decomposition::martingale("W", w), a)
            }
            Self::Drifted => SigmaDecomposition::new(Decomposition::martingale("W", w), SamplePath::from_fn(g, |t| t)?),
        }
    }
}

/// Shared sizes for the suites.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub n_steps: usize,
    pub horizon: f64,
    /// Paths for drift and law tests.
    pub n_paths: usize,
    /// Paths for pathwise checks (qp residual, class membership).
    pub pathwise_paths: usize,
    /// Fraction of pathwise checks that must pass.
    pub pathwise_quorum: f64,
    pub drift: DriftConfig,
    pub sigma: SigmaOptions,
    pub qp_tol: f64,
    pub enforce_hypotheses: bool,
    pub ks_level: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            n_steps: 1 << 12,
            horizon: 1.0,
            n_paths: 10_000,
            pathwise_paths: 32,
            pathwise_quorum: 0.9,
            drift: DriftConfig::default(),
            sigma: SigmaOptions::default(),
            qp_tol: 0.05,
            enforce_hypotheses: true,
            ks_level: 0.01,
        }
    }
}

impl SuiteOptions {
    pub fn grid(&self) -> Result<TimeGrid> {
        crate::grid::make_grid(self.horizon, self.n_steps)
    }
}

fn model_for(family: ModelFamily, grid: &TimeGrid, seed: &SeedSpec) -> SignedMeasureModel {
    build_model(family, grid, seed)
}

/// Median over paths of `|qp residual at T|`; pass below `qp_tol`.
pub fn qp_suite<F>(suite: &str, family: ModelFamily, make: F, opts: &SuiteOptions, seed: &SeedSpec) -> Result<TestReport>
where
    F: Fn(&SignedMeasureModel, &SeedSpec) -> Result<Decomposition> + Sync,
{
    let g = opts.grid()?;
    let terms: Vec<f64> = (0..opts.pathwise_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.with_index(i);
            let model = model_for(family, &g, &s);
            let dec = make(&model, &s)?;
            Ok(qp_residual(&dec, &model)?.terminal.abs())
        })
        .collect::<Result<_>>()?;
    let med = median(&terms);
    Ok(TestReport::new(suite, med, opts.qp_tol, med < opts.qp_tol)
        .sizes(opts.pathwise_paths, opts.n_steps)
        .seeded(seed)
        .with_detail(format!("model={family} median |terminal residual|")))
}

/// Drift test on `D * P` with `P` from `make`.
pub fn drift_suite<F>(suite: &str, family: ModelFamily, make: F, opts: &SuiteOptions, seed: &SeedSpec) -> Result<TestReport>
where
    F: Fn(&SignedMeasureModel, &SeedSpec) -> Result<SamplePath> + Sync,
{
    let g = opts.grid()?;
    let gen = |s: &SeedSpec| {
        let model = model_for(family, &g, s);
        let p = make(&model, s)?;
        model.density.zip_with(&p, |d, x| d * x)
    };
    martingale_drift_test(suite, gen, opts.n_paths, &opts.drift, seed)
}

/// Fraction of paths passing [`sigma_h_check`]; pass at the quorum.
pub fn sigma_suite<F>(suite: &str, family: ModelFamily, make: F, opts: &SuiteOptions, seed: &SeedSpec) -> Result<TestReport>
where
    F: Fn(&SignedMeasureModel, &SeedSpec) -> Result<SigmaDecomposition> + Sync,
{
    let g = opts.grid()?;
    let outcomes: Vec<(bool, f64)> = (0..opts.pathwise_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.with_index(i);
            let model = model_for(family, &g, &s);
            let dec = make(&model, &s)?;
            let r = sigma_h_check(&dec, &model, &opts.sigma)?;
            Ok((r.pass(), r.statistic))
        })
        .collect::<Result<_>>()?;
    let frac = outcomes.iter().filter(|o| o.0).count() as f64 / outcomes.len() as f64;
    let carried = median(&outcomes.iter().map(|o| o.1).collect::<Vec<_>>());
    Ok(TestReport::new(suite, frac, opts.pathwise_quorum, frac >= opts.pathwise_quorum)
        .sizes(opts.pathwise_paths, opts.n_steps)
        .seeded(seed)
        .with_detail(format!("model={family} median carried-by={carried:.4}")))
}

/// Paths on which `{M = 0}` leaves the dilated `H`, out of those inspected.
pub fn zeros_outside_h<F>(family: ModelFamily, make: F, opts: &SuiteOptions, seed: &SeedSpec) -> Result<usize>
where
    F: Fn(&SignedMeasureModel, &SeedSpec) -> Result<SamplePath> + Sync,
{
    let g = opts.grid()?;
    let bad = (0..opts.pathwise_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.with_index(i);
            let model = model_for(family, &g, &s);
            let m = make(&model, &s)?;
            let zeros = decompose_excursions(&m).mask;
            let h = model.h_mask.dilate(opts.sigma.dilation);
            Ok(zeros.indices().iter().any(|&k| !h.contains(k)) as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(bad.into_iter().sum())
}

/// Paths on which `{M = 0}` differs from `H` (up to dilation either way).
pub fn zeros_differ_from_h<F>(family: ModelFamily, make: F, opts: &SuiteOptions, seed: &SeedSpec) -> Result<usize>
where
    F: Fn(&SignedMeasureModel, &SeedSpec) -> Result<SamplePath> + Sync,
{
    let g = opts.grid()?;
    let bad = (0..opts.pathwise_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.with_index(i);
            let model = model_for(family, &g, &s);
            let m = make(&model, &s)?;
            let zeros = decompose_excursions(&m).mask;
            let h = &model.h_mask;
            let zd = zeros.dilate(opts.sigma.dilation);
            let hd = h.dilate(opts.sigma.dilation);
            let differ = zeros.indices().iter().any(|&k| !hd.contains(k)) || h.indices().iter().any(|&k| !zd.contains(k));
            Ok(differ as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(bad.into_iter().sum())
}

/// Sign path for `Z X` built on the excursions of `shadow`.
pub fn sign_path_for(shadow: &SamplePath, alpha: f64, seed: &SeedSpec) -> Result<SamplePath> {
    let e = decompose_excursions(shadow);
    let schedule = AlphaSchedule::constant(alpha)?;
    let mut asg = assign_signs(&e, shadow.grid(), &schedule, CellRule::ExcursionStart, &seed.child("signs"));
    // a path started away from 0 keeps its first excursion
    if let Some(first) = e.intervals.first() {
        if first.first == 0 {
            asg.force(0, Side::Positive);
        }
    }
    Ok(build_sign_path(&e, &asg, &schedule, shadow.grid())?.0)
}


#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquivalenceSuite {
    AbsMart,
    ZalphaMart,
    AbsSigma,
    ZalphaSigma,
    Cmart,
    ItoXdx,
    QpBrownian,
    AbsBrownian,
}

impl EquivalenceSuite {
    pub const ALL: [EquivalenceSuite; 8] = [
        Self::AbsMart,
        Self::ZalphaMart,
        Self::AbsSigma,
        Self::ZalphaSigma,
        Self::Cmart,
        Self::ItoXdx,
        Self::QpBrownian,
        Self::AbsBrownian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::AbsMart => "abs_mart",
            Self::ZalphaMart => "zalpha_mart",
            Self::AbsSigma => "abs_sigma",
            Self::ZalphaSigma => "zalpha_sigma",
            Self::Cmart => "cmart",
            Self::ItoXdx => "ito_xdx",
            Self::QpBrownian => "qp_brownian",
            Self::AbsBrownian => "abs_brownian",
        }
    }

    /// Default positive instance and negative control.
    pub fn instances(self) -> (Process, Process) {
        use Process::*;
        match self {
            Self::AbsMart | Self::ZalphaMart => (Mart(Zoo::Geometric), Mart(Zoo::GeometricDrifted)),
            Self::AbsSigma | Self::ZalphaSigma | Self::Cmart | Self::ItoXdx => {
                (Sigma(SigmaZoo::AbsBrownian), Sigma(SigmaZoo::Drifted))
            }
            Self::QpBrownian => (Mart(Zoo::LocalTimeShift(2.0)), Mart(Zoo::Drifted)),
            Self::AbsBrownian => (Mart(Zoo::Brownian), Mart(Zoo::Drifted)),
        }
    }
}

impl FromStr for EquivalenceSuite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown equivalence suite `{s}`")))
    }
}

/// Base process handed to an equivalence suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Process {
    Mart(Zoo),
    Sigma(SigmaZoo),
}

impl Process {
    pub fn name(self) -> String {
        match self {
            Self::Mart(z) => z.name(),
            Self::Sigma(z) => z.name().to_string(),
        }
    }

    fn mart(self, model: &SignedMeasureModel, seed: &SeedSpec) -> Result<Decomposition> {
        match self {
            Self::Mart(z) => z.sample(model, seed),
            Self::Sigma(z) => Ok(z.sample(model, seed)?.local_mart),
        }
    }

    fn sigma(self, model: &SignedMeasureModel, seed: &SeedSpec) -> Result<SigmaDecomposition> {
        match self {
            Self::Sigma(z) => z.sample(model, seed),
            Self::Mart(z) => {
                let d = z.sample(model, seed)?;
                let zero = SamplePath::constant(*d.grid(), 0.0);
                SigmaDecomposition::new(d, zero)
            }
        }
    }

    fn path(self, model: &SignedMeasureModel, seed: &SeedSpec) -> Result<SamplePath> {
        match self {
            Self::Mart(z) => Ok(z.sample(model, seed)?.total),
            Self::Sigma(z) => Ok(z.sample(model, seed)?.x),
        }
    }
}

/// Left and right verdicts of one equivalence run.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceOutcome {
    pub suite: EquivalenceSuite,
    pub left: TestReport,
    pub right: TestReport,
    pub report: TestReport,
}

impl EquivalenceOutcome {
    pub fn agree(&self) -> bool {
        self.left.status == self.right.status
    }
}

fn both(suite: &str, a: TestReport, b: TestReport) -> TestReport {
    let pass = a.pass() && b.pass();
    let stat = if a.pass() { b.statistic } else { a.statistic };
    TestReport {
        suite: suite.to_string(),
        statistic: stat,
        threshold: if a.pass() { b.threshold } else { a.threshold },
        n_paths: a.n_paths.max(b.n_paths),
        n_steps: a.n_steps,
        seed: a.seed.clone(),
        status: if pass { Status::Pass } else { Status::Fail },
        detail: format!("[{}: {}] [{}: {}]", a.suite, a.detail, b.suite, b.detail),
    }
}

/// Runs the named equivalence theorem on `base` under `family`.
pub fn equivalence_suite(
    suite: EquivalenceSuite,
    family: ModelFamily,
    base: Process,
    alpha: f64,
    seed: &SeedSpec,
    opts: &SuiteOptions,
) -> Result<EquivalenceOutcome> {
    let name = suite.name();
    let tag = |side: &str| format!("{name}.{side}[{}]", base.name());
    let (left, right, hypothesis) = match suite {
        EquivalenceSuite::AbsMart => {
            let l_qp = qp_suite(&tag("M.qp"), family, |m, s| base.mart(m, s), opts, seed)?;
            let l_dr = drift_suite(&tag("M.drift"), family, |m, s| base.path(m, s), opts, seed)?;
            let r_qp = qp_suite(&tag("|M|.qp"), family, |m, s| base.mart(m, s)?.abs(), opts, seed)?;
            let r_dr = drift_suite(&tag("|M|.drift"), family, |m, s| Ok(base.path(m, s)?.abs()), opts, seed)?;
            let bad = zeros_outside_h(family, |m, s| base.path(m, s), opts, seed)?;
            (both(&tag("M"), l_qp, l_dr), both(&tag("|M|"), r_qp, r_dr), (bad > 0).then_some("zeros of M outside H"))
        }
        EquivalenceSuite::ZalphaMart => {
            let zm = |m: &SignedMeasureModel, s: &SeedSpec| -> Result<Decomposition> {
                let d = base.mart(m, s)?;
                let z = sign_path_for(&d.total, alpha, s)?;
                d.signed_by(&z)
            };
            let l_qp = qp_suite(&tag("M.qp"), family, |m, s| base.mart(m, s), opts, seed)?;
            let l_dr = drift_suite(&tag("M.drift"), family, |m, s| base.path(m, s), opts, seed)?;
            let r_qp = qp_suite(&tag("ZM.qp"), family, zm, opts, seed)?;
            let r_dr = drift_suite(&tag("ZM.drift"), family, |m, s| Ok(zm(m, s)?.total), opts, seed)?;
            let bad = zeros_outside_h(family, |m, s| base.path(m, s), opts, seed)?;
            (both(&tag("M"), l_qp, l_dr), both(&tag("ZM"), r_qp, r_dr), (bad > 0).then_some("zeros of M outside H"))
        }
        EquivalenceSuite::AbsSigma => {
            let l = sigma_suite(&tag("X"), family, |m, s| base.sigma(m, s), opts, seed)?;
            let r = sigma_suite(&tag("|X|"), family, |m, s| base.sigma(m, s)?.abs(), opts, seed)?;
            (l, r, None)
        }
        EquivalenceSuite::ZalphaSigma => {
            let l = sigma_suite(&tag("X"), family, |m, s| base.sigma(m, s), opts, seed)?;
            let r = sigma_suite(
                &tag("ZX"),
                family,
                |m, s| {
                    let d = base.sigma(m, s)?;
                    let z = sign_path_for(&d.shadow, alpha, s)?;
                    d.signed_by(&z)
                },
                opts,
                seed,
            )?;
            (l, r, None)
        }
        EquivalenceSuite::Cmart => {
            let l = sigma_suite(&tag("X"), family, |m, s| base.sigma(m, s), opts, seed)?;
            let r = drift_suite(
                &tag("Z_half_X.drift"),
                family,
                |m, s| {
                    let d = base.sigma(m, s)?;
                    let z = sign_path_for(&d.shadow, 0.5, s)?;
                    z.zip_with(&d.x, |a, b| a * b)
                },
                opts,
                seed,
            )?;
            (l, r, None)
        }
        EquivalenceSuite::ItoXdx => {
            let l = sigma_suite(&tag("X"), family, |m, s| base.sigma(m, s), opts, seed)?;
            let r = drift_suite(
                &tag("XdX.drift"),
                family,
                |m, s| {
                    let x = base.sigma(m, s)?.x;
                    ito_sum(&x, &x)
                },
                opts,
                seed,
            )?;
            (l, r, None)
        }
        EquivalenceSuite::QpBrownian => {
            let g = opts.grid()?;
            let horizon = g.horizon();
            let qv: Vec<f64> = (0..opts.pathwise_paths as u64)
                .into_par_iter()
                .map(|i| {
                    let s = seed.with_index(i);
                    let m = base.path(&model_for(family, &g, &s), &s)?;
                    Ok((quadratic_covariation(&m, &m)?.last() - horizon).abs())
                })
                .collect::<Result<_>>()?;
            let qv_med = median(&qv);
            let qv_r = TestReport::new(tag("M.qv"), qv_med, opts.qp_tol, qv_med < opts.qp_tol)
                .sizes(opts.pathwise_paths, opts.n_steps)
                .seeded(seed);
            let l_qp = qp_suite(&tag("M.qp"), family, |m, s| base.mart(m, s), opts, seed)?;
            let r_m = drift_suite(&tag("M.drift"), family, |m, s| base.path(m, s), opts, seed)?;
            let r_sq = drift_suite(
                &tag("M2-t.drift"),
                family,
                |m, s| Ok(base.path(m, s)?.map_with_time(|t, x| x * x - t)),
                opts,
                seed,
            )?;
            (both(&tag("pathwise"), qv_r, l_qp), both(&tag("drift"), r_m, r_sq), None)
        }
        EquivalenceSuite::AbsBrownian => {
            let zm = |m: &SignedMeasureModel, s: &SeedSpec| -> Result<SamplePath> {
                let x = base.path(m, s)?;
                let z = sign_path_for(&x, 0.5, s)?;
                z.zip_with(&x, |a, b| a * b)
            };
            let l = drift_suite(&tag("ZM.drift"), family, zm, opts, seed)?;
            let g = opts.grid()?;
            let terminal: Vec<f64> = (0..opts.n_paths as u64)
                .into_par_iter()
                .map(|i| {
                    let s = seed.with_index(i);
                    Ok(zm(&model_for(family, &g, &s), &s)?.last())
                })
                .collect::<Result<_>>()?;
            let sd = g.horizon().sqrt();
            let ks = ks_one_sample(&terminal, |x| normal_cdf(x / sd))?;
            let crit = ks.critical(opts.ks_level);
            let r = TestReport::new(tag("ZM.ks"), ks.distance, crit, ks.distance < crit)
                .sizes(opts.n_paths, opts.n_steps)
                .seeded(seed)
                .with_detail(format!("p={:.4}", ks.p_value));
            let bad = zeros_differ_from_h(family, |m, s| base.path(m, s), opts, seed)?;
            (l, r, (bad > 0).then_some("zeros of M differ from H"))
        }
    };
    let (left, right) = match hypothesis {
        Some(why) if opts.enforce_hypotheses => (left.hypothesis_not_met(why), right.hypothesis_not_met(why)),
        _ => (left, right),
    };
    let mut report = both(&format!("{name}[{}|{}]", base.name(), family), left.clone(), right.clone());
    if let Some(why) = hypothesis.filter(|_| opts.enforce_hypotheses) {
        report = report.hypothesis_not_met(why);
    }
    Ok(EquivalenceOutcome {
        suite,
        left,
        right,
        report,
    })
}

/// Stopping time for the representation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    Deterministic(f64),
    /// First time `|M| >= level`, capped at `cap`.
    FirstHitting { level: f64, cap: f64 },
}

/// Events measurable at the stopping time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventRule {
    Always,
    /// `M` positive at the given time (or at the stopping time if earlier).
    PositiveAt(f64),
    /// `D` above `level` at the stopping time.
    DensityAbove(f64),
}

impl EventRule {
    fn name(self) -> String {
        match self {
            Self::Always => "always".into(),
            Self::PositiveAt(t) => format!("M_{t}>0"),
            Self::DensityAbove(l) => format!("D_T>{l}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepresentationForm {
    /// `D_T (M_T - M_gamma_T) 1_A` against `D_oo M_oo 1{gbar < T} 1_A`.
    #[default]
    DensityWeighted,
    /// `(M_T - M_gamma_T) 1_A` against `M_oo 1{gbar < T} 1_A`.
    Plain,
}

/// Weak form of the optional representation: for each event a paired
/// standardised difference of both sides; pass iff all stay below the
/// threshold.
#[allow(clippy::too_many_arguments)]
pub fn optional_representation_check(
    suite: &str,
    family: ModelFamily,
    base: Zoo,
    stopping: StoppingRule,
    events: &[EventRule],
    form: RepresentationForm,
    opts: &SuiteOptions,
    seed: &SeedSpec,
) -> Result<TestReport> {
    if events.is_empty() {
        return Err(invalid("event dictionary is empty"));
    }
    if opts.n_paths < MIN_DRIFT_PATHS {
        return Err(Error::InsufficientSamples {
            got: opts.n_paths,
            need: MIN_DRIFT_PATHS,
        });
    }
    let g = opts.grid()?;
    let rows: Vec<(Vec<f64>, bool)> = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.with_index(i);
            let model = model_for(family, &g, &s);
            let m = base.sample(&model, &s)?.total;
            let mv = m.values();
            let d = model.density.values();
            let tau = match stopping {
                StoppingRule::Deterministic(t) => g.index_at_or_before(t),
                StoppingRule::FirstHitting { level, cap } => {
                    let c = g.index_at_or_before(cap);
                    (0..=c).find(|&k| mv[k].abs() >= level).unwrap_or(c)
                }
            };
            let n = mv.len() - 1;
            let (dt, dinf) = match form {
                RepresentationForm::DensityWeighted => (d[tau], model.d_infinity),
                RepresentationForm::Plain => (1.0, 1.0),
            };
            let lhs = dt * (mv[tau] - mv[model.gamma.gamma[tau]]);
            let rhs = if model.gbar < tau { dinf * mv[n] } else { 0.0 };
            let null_at_gbar = mv[model.gbar].abs() <= 1e-12 || model.is_trivial();
            let diffs = events
                .iter()
                .map(|e| {
                    let on = match *e {
                        EventRule::Always => true,
                        EventRule::PositiveAt(t) => mv[g.index_at_or_before(t).min(tau)] > 0.0,
                        EventRule::DensityAbove(l) => d[tau] > l,
                    };
                    if on {
                        lhs - rhs
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok((diffs, null_at_gbar))
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (k, e) in events.iter().enumerate() {
        let m: Moments = rows.iter().map(|r| r.0[k]).collect();
        let z = m.t_statistic();
        worst = worst.max(z);
        detail.push(format!("{}: {:.3}", e.name(), z));
    }
    let report = TestReport::new(suite, worst, opts.drift.threshold, worst < opts.drift.threshold)
        .sizes(opts.n_paths, opts.n_steps)
        .seeded(seed)
        .with_detail(detail.join("; "));
    if rows.iter().any(|r| !r.1) && opts.enforce_hypotheses {
        return Ok(report.hypothesis_not_met("M does not vanish at gbar"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn trivial_model() {
        let g = make_grid(1.0, 64).unwrap();
        let m = build_model(ModelFamily::Trivial, &g, &SeedSpec::new(1, "m", 0));
        assert!(!m.h_mask.has_any());
        assert_eq!(m.gbar, 0);
        assert_eq!(m.d_infinity, 1.0);
        assert!(m.is_trivial());
        assert!("bogus".parse::<ModelFamily>().is_err());
    }

    #[test]
    fn shifted_model_matches_decomposition() {
        let g = make_grid(1.0, 1 << 12).unwrap();
        for k in 0..20 {
            let s = SeedSpec::new(2, "m", k);
            let m = build_model(ModelFamily::ShiftedBrownian, &g, &s);
            assert_eq!(m.density.first(), 1.0);
            let e = decompose_excursions(&m.density);
            assert_eq!(m.h_mask, e.mask);
            let (gamma, gbar) = crate::excursion::last_zero_curve(&e);
            assert_eq!(m.gamma, gamma);
            assert_eq!(m.gbar, gbar);
            assert_eq!(m.d_infinity, m.density.last());
        }
    }

    #[test]
    fn carried_by_basics() {
        let g = make_grid(1.0, 100).unwrap();
        let zero = SamplePath::constant(g, 0.0);
        let mask = ZeroMask::from_indices(101, &[50]);
        assert!(carried_by_check(&zero, &mask, 2, 0.05).unwrap().pass());
        let t = SamplePath::from_fn(g, |t| t).unwrap();
        let r = carried_by_check(&t, &mask, 2, 0.05).unwrap();
        assert!(!r.pass());
        // 6 of 100 increments touch the dilated mask {48..52}
        assert!((r.statistic - 0.06).abs() < 1e-12, "{}", r.statistic);
    }

    #[test]
    fn drift_test_needs_paths() {
        let gen = |_: &SeedSpec| Ok(SamplePath::constant(make_grid(1.0, 4).unwrap(), 0.0));
        let r = martingale_drift_test("x", gen, 10, &DriftConfig::default(), &SeedSpec::new(0, "d", 0));
        assert!(matches!(r, Err(Error::InsufficientSamples { got: 10, need: 1000 })));
    }

    #[test]
    fn decomposition_transforms_sum_up() {
        let g = make_grid(1.0, 256).unwrap();
        let s = SeedSpec::new(3, "z", 0);
        let model = build_model(ModelFamily::ShiftedBrownian, &g, &s);
        let d = Zoo::LocalTimeShift(2.0).sample(&model, &s).unwrap();
        let a = d.abs().unwrap();
        for i in 0..a.total.len() {
            let sum = a.martingale_part.values()[i] + a.fv_part.values()[i];
            assert!((sum - a.total.values()[i]).abs() < 1e-12);
        }
        let r = Zoo::ReturnToLastZero.sample(&model, &s).unwrap();
        for k in model.h_mask.indices() {
            assert_eq!(r.total.values()[k], 0.0);
        }
    }

    #[test]
    fn representation_needs_events() {
        let opts = SuiteOptions::default();
        let r = optional_representation_check(
            "x",
            ModelFamily::Trivial,
            Zoo::Brownian,
            StoppingRule::Deterministic(0.5),
            &[],
            RepresentationForm::default(),
            &opts,
            &SeedSpec::new(0, "r", 0),
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in EquivalenceSuite::ALL {
            assert_eq!(s.name().parse::<EquivalenceSuite>().unwrap(), s);
        }
        assert!("nope".parse::<EquivalenceSuite>().is_err());
    }
}
