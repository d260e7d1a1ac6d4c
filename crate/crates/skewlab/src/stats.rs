//! Kolmogorov–Smirnov machinery and small sample summaries.

use crate::error::{Error, Result};

pub const MIN_LAW_SAMPLES: usize = 1000;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi-transformed series converges fast for small lambda
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let c = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            cdf += (-j * j * pi2 / (8.0 * lambda * lambda)).exp();
        }
        return (1.0 - c * cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `lambda` with `kolmogorov_sf(lambda) = level`.
pub fn kolmogorov_quantile(level: f64) -> f64 {
    let (mut lo, mut hi) = (0.2, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stephens' finite-sample scaling `sqrt(n) + 0.12 + 0.11 / sqrt(n)`.
fn stephens(n_eff: f64) -> f64 {
    let r = n_eff.sqrt();
    r + 0.12 + 0.11 / r
}

/// Critical KS distance at `level` for effective sample size `n_eff`.
pub fn ks_critical(n_eff: f64, level: f64) -> f64 {
    kolmogorov_quantile(level) / stephens(n_eff)
}

pub fn two_sample_effective_n(n: usize, m: usize) -> f64 {
    (n as f64 * m as f64) / (n + m) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub distance: f64,
    pub n_eff: f64,
    pub p_value: f64,
}

impl KsOutcome {
    fn new(distance: f64, n_eff: f64) -> Self {
        Self {
            distance,
            n_eff,
            p_value: kolmogorov_sf(stephens(n_eff) * distance),
        }
    }

    pub fn critical(&self, level: f64) -> f64 {
        ks_critical(self.n_eff, level)
    }
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn check_len(n: usize) -> Result<()> {
    if n < MIN_LAW_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n,
            need: MIN_LAW_SAMPLES,
        });
    }
    Ok(())
}

/// One-sample KS distance against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsOutcome> {
    check_len(sample.len())?;
    let s = sorted(sample);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsOutcome::new(d, n))
}

/// One-sample KS for lattice data with spacing `h`, midpoint convention: the
/// empirical CDF at lattice point `x_k` is compared with `F(x_k + h/2)`, and
/// just below `x_k` with `F(x_k - h/2)`.
pub fn ks_one_sample_lattice(sample: &[f64], cdf: impl Fn(f64) -> f64, h: f64) -> Result<KsOutcome> {
    check_len(sample.len())?;
    let s = sorted(sample);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let below = i as f64 / n;
        let mut j = i;
        while j < s.len() && (s[j] - x).abs() < 0.25 * h {
            j += 1;
        }
        let at = j as f64 / n;
        d = d.max((below - cdf(x - 0.5 * h)).abs()).max((at - cdf(x + 0.5 * h)).abs());
        i = j;
    }
    Ok(KsOutcome::new(d, n))
}

/// Two-sample KS distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsOutcome> {
    check_len(a.len().min(b.len()))?;
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsOutcome::new(d, two_sample_effective_n(sa.len(), sb.len())))
}

/// Nearest point of the lattice `{k h}` (ties away from zero).
pub fn snap_to_lattice(x: f64, h: f64) -> f64 {
    (x / h).round() * h
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn median(x: &[f64]) -> f64 {
    let s = sorted(x);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// `p +- k sqrt(p (1 - p) / n)`.
pub fn binomial_band(p: f64, n: usize, k_sigma: f64) -> (f64, f64) {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    (p - k_sigma * sd, p + k_sigma * sd)
}

/// Running sums for an associative mean / standard-error reduction.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n
    }

    pub fn variance(&self) -> f64 {
        ((self.sum_sq - self.sum * self.sum / self.n) / (self.n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n).sqrt()
    }

    /// `|mean| / se`, 0 when both vanish.
    pub fn t_statistic(&self) -> f64 {
        let m = self.mean().abs();
        let se = self.std_error();
        if se == 0.0 {
            if m == 0.0 {
                0.0
            } else {
                f64::MAX
            }
        } else {
            m / se
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}
