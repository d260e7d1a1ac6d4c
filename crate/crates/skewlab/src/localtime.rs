//! Discrete stochastic calculus: Itô sums, covariation, local time at 0 and
//! residuals of pathwise identities.

use crate::error::{invalid, Result};
use crate::excursion::{decompose_excursions, last_zero_curve};
use crate::grid::{ensure_aligned, SamplePath};
use crate::seed::SeedSpec;
use serde::{Deserialize, Serialize};

/// Symmetric sign, `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Left-point sums `out[j] = sum_{i<j} k_i (y_{i+1} - y_i)`.
///
/// Summation order is fixed: along a run of identical integrand values
/// starting at `s` the sum telescopes, `out[j] = out[s] + k_s (y_j - y_s)`.
/// Constant integrands therefore reproduce `k (y_j - y_0)` exactly.
pub fn ito_sum(integrand: &SamplePath, integrator: &SamplePath) -> Result<SamplePath> {
    ensure_aligned(integrand, integrator)?;
    Ok(SamplePath::from_parts(
        *integrand.grid(),
        ito_sum_values(integrand.values(), integrator.values()),
    ))
}

pub(crate) fn ito_sum_values(k: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    let mut s = 0;
    while s + 1 < n {
        let ks = k[s];
        let base = out[s];
        let ys = y[s];
        let mut j = s + 1;
        loop {
            out[j] = base + ks * (y[j] - ys);
            if j + 1 >= n || k[j].to_bits() != ks.to_bits() {
                break;
            }
            j += 1;
        }
        s = j;
    }
    out
}

/// Cumulative sum of products of increments, left to right.
pub fn quadratic_covariation(x: &SamplePath, y: &SamplePath) -> Result<SamplePath> {
    ensure_aligned(x, y)?;
    let (a, b) = (x.values(), y.values());
    let mut out = Vec::with_capacity(a.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..a.len() - 1 {
        acc += (a[i + 1] - a[i]) * (b[i + 1] - b[i]);
        out.push(acc);
    }
    Ok(SamplePath::from_parts(*x.grid(), out))
}

/// Estimator of the symmetric local time at 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTimeMethod {
    /// `|X_t| - |X_0| - sum sgn(X_i) dX_i`.
    Tanaka,
    /// `(2 eps)^-1 sum_{t_i < t} 1{|X_i| <= eps} dt`, default `eps = dt^0.4`.
    Occupation { bandwidth: Option<f64> },
    /// Sum over steps of the expected local time of a Brownian bridge between
    /// consecutive grid values. Independent of the Tanaka sum.
    #[default]
    Bridge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeCurve {
    pub curve: SamplePath,
    pub method: LocalTimeMethod,
    /// Occupation bandwidth actually used.
    pub bandwidth: Option<f64>,
}

pub const DEFAULT_BANDWIDTH_EXPONENT: f64 = 0.4;

pub fn local_time(path: &SamplePath, method: LocalTimeMethod) -> LocalTimeCurve {
    let g = *path.grid();
    let x = path.values();
    match method {
        LocalTimeMethod::Tanaka => {
            let s = path.map(sgn);
            let i = ito_sum_values(s.values(), x);
            let x0 = x[0].abs();
            let v = x.iter().zip(&i).map(|(&xj, &ij)| (xj.abs() - x0) - ij).collect();
            LocalTimeCurve {
                curve: SamplePath::from_parts(g, v),
                method,
                bandwidth: None,
            }
        }
        LocalTimeMethod::Occupation { bandwidth } => {
            let eps = bandwidth.unwrap_or_else(|| g.dt().powf(DEFAULT_BANDWIDTH_EXPONENT));
            let w = g.dt() / (2.0 * eps);
            let mut acc = 0.0;
            let mut v = Vec::with_capacity(x.len());
            v.push(0.0);
            for &xi in &x[..x.len() - 1] {
                if xi.abs() <= eps {
                    acc += w;
                }
                v.push(acc);
            }
            LocalTimeCurve {
                curve: SamplePath::from_parts(g, v),
                method,
                bandwidth: Some(eps),
            }
        }
        LocalTimeMethod::Bridge => {
            let h = g.dt();
            let mut acc = 0.0;
            let mut v = Vec::with_capacity(x.len());
            v.push(0.0);
            for w in x.windows(2) {
                acc += bridge_local_time(w[0], w[1], h);
                v.push(acc);
            }
            LocalTimeCurve {
                curve: SamplePath::from_parts(g, v),
                method,
                bandwidth: None,
            }
        }
    }
}

/// Expected symmetric local time at 0 of a Brownian bridge from `a` to `b`
/// over time `h`: `sqrt(h) exp((d^2 - c^2) / 2h) m(c / sqrt h)` with
/// `c = |a| + |b|`, `d = b - a` and `m` the Mills ratio.
pub fn bridge_local_time(a: f64, b: f64, h: f64) -> f64 {
    let c = a.abs() + b.abs();
    let d = b - a;
    let e = (d * d - c * c) / (2.0 * h);
    if e < -745.0 {
        return 0.0;
    }
    h.sqrt() * e.exp() * mills_ratio(c / h.sqrt())
}

/// `(1 - Phi(x)) / phi(x)` for `x >= 0`.
pub fn mills_ratio(x: f64) -> f64 {
    if x < 8.0 {
        let tail = 0.5 * libm::erfc(x / std::f64::consts::SQRT_2);
        let dens = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        tail / dens
    } else {
        // continued fraction 1/(x+ 1/(x+ 2/(x+ 3/(x+ ...)))), evaluated backwards
        let mut f = x;
        for k in (1..=60).rev() {
            f = x + k as f64 / f;
        }
        1.0 / f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity: String,
    pub sup_norm: f64,
    pub terminal: f64,
    pub n_steps: usize,
    pub seed: Option<SeedSpec>,
}

impl ResidualReport {
    pub fn from_curve(identity: impl Into<String>, curve: &SamplePath, seed: Option<SeedSpec>) -> Self {
        Self {
            identity: identity.into(),
            sup_norm: curve.sup_norm(),
            terminal: curve.last(),
            n_steps: curve.grid().n_steps(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    /// `|X_t| - |X_0| - sum sgn(X) dX - L_t`, with `L` from an estimator.
    Tanaka,
    /// `k(gamma_t) Y_t - k(0) Y_0 - sum k(gamma_s) dY_s`, gamma from the
    /// zeros of the reference path.
    BalayagePredictable,
    /// `f(v_t) M_t - f(v_0) M_0 - sum f(v_s) dm_s - (F(v_t) - F(v_0))` for
    /// `M = m + v`.
    TransformC3,
}

impl IdentityKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tanaka => "tanaka",
            Self::BalayagePredictable => "balayage_predictable",
            Self::TransformC3 => "transform_c3",
        }
    }
}

/// Named inputs; which ones are required depends on the [`IdentityKind`].
#[derive(Default, Clone, Copy)]
pub struct IdentityInputs<'a> {
    /// Tanaka: `X`. Balayage: `Y`.
    pub path: Option<&'a SamplePath>,
    /// Balayage: path whose zeros define gamma (defaults to `path`).
    pub reference: Option<&'a SamplePath>,
    /// Transform: `m`.
    pub martingale_part: Option<&'a SamplePath>,
    /// Transform: `v`.
    pub fv_part: Option<&'a SamplePath>,
    /// Balayage: `k` as a function of the last-zero time. Transform: `f`.
    pub weight: Option<&'a dyn Fn(f64) -> f64>,
    /// Transform: `F`, an antiderivative of `f` with `F(0) = 0`.
    pub antiderivative: Option<&'a dyn Fn(f64) -> f64>,
    /// Tanaka: independent local-time estimator.
    pub local_time: LocalTimeMethod,
    pub seed: Option<&'a SeedSpec>,
}

fn need<T>(x: Option<T>, kind: IdentityKind, what: &str) -> Result<T> {
    x.ok_or_else(|| invalid(format!("{} residual needs `{what}`", kind.name())))
}

/// Residual curve of the identity.
pub fn identity_residual_curve(kind: IdentityKind, inputs: &IdentityInputs<'_>) -> Result<SamplePath> {
    match kind {
        IdentityKind::Tanaka => {
            let x = need(inputs.path, kind, "path")?;
            if inputs.local_time == LocalTimeMethod::Tanaka {
                return Err(invalid("tanaka residual against the tanaka estimator is identically 0"));
            }
            let lt = local_time(x, LocalTimeMethod::Tanaka).curve;
            let l = local_time(x, inputs.local_time).curve;
            lt.zip_with(&l, |a, b| a - b)
        }
        IdentityKind::BalayagePredictable => {
            let y = need(inputs.path, kind, "path")?;
            let k = need(inputs.weight, kind, "weight")?;
            let reference = inputs.reference.unwrap_or(y);
            ensure_aligned(y, reference)?;
            let g = *y.grid();
            let (gamma, _) = last_zero_curve(&decompose_excursions(reference));
            let kg: Vec<f64> = gamma.gamma.iter().map(|&i| k(g.time(i))).collect();
            let yv = y.values();
            let integral = ito_sum_values(&kg, yv);
            let k0y0 = kg[0] * yv[0];
            let r = (0..yv.len()).map(|j| (kg[j] * yv[j] - k0y0) - integral[j]).collect();
            Ok(SamplePath::from_parts(g, r))
        }
        IdentityKind::TransformC3 => {
            let m = need(inputs.martingale_part, kind, "martingale_part")?;
            let v = need(inputs.fv_part, kind, "fv_part")?;
            let f = need(inputs.weight, kind, "weight")?;
            let big_f = need(inputs.antiderivative, kind, "antiderivative")?;
            ensure_aligned(m, v)?;
            let total = m.zip_with(v, |a, b| a + b)?;
            let fv = v.map(f);
            let integral = ito_sum(&fv, m)?;
            let (mt, vv, fvv, iv) = (total.values(), v.values(), fv.values(), integral.values());
            let start = fvv[0] * mt[0];
            let f_v0 = big_f(vv[0]);
            let r = (0..mt.len())
                .map(|j| (fvv[j] * mt[j] - start) - iv[j] - (big_f(vv[j]) - f_v0))
                .collect();
            Ok(SamplePath::from_parts(*m.grid(), r))
        }
    }
}

pub fn identity_residual(kind: IdentityKind, inputs: &IdentityInputs<'_>) -> Result<ResidualReport> {
    let curve = identity_residual_curve(kind, inputs)?;
    Ok(ResidualReport::from_curve(kind.name(), &curve, inputs.seed.cloned()))
}
