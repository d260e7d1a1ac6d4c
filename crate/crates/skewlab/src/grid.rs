//! Uniform time grids, sampled paths and Brownian path generation.

use crate::error::{invalid, Error, Result};
use crate::seed::SeedSpec;
use rand::Rng;
use rand_distr::StandardNormal;

/// Uniform grid `t_i = i * horizon / n_steps` on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Time of point `i`. Endpoints are exact.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            self.horizon * (i as f64 / self.n_steps as f64)
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// First index whose time is `>= t` (clamped to the last index).
    pub fn index_at_or_after(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let raw = (t / self.horizon * self.n_steps as f64).ceil();
        let mut i = (raw as usize).min(self.n_steps);
        // guard against ceil landing one past due to rounding
        while i > 0 && self.time(i - 1) >= t {
            i -= 1;
        }
        i
    }

    /// Last index whose time is `<= t`.
    pub fn index_at_or_before(&self, t: f64) -> usize {
        if t >= self.horizon {
            return self.n_steps;
        }
        let i = self.index_at_or_after(t);
        if self.time(i) > t && i > 0 {
            i - 1
        } else {
            i
        }
    }

    /// Grid with `factor` times as many steps over the same horizon.
    pub fn refined(&self, factor: usize) -> TimeGrid {
        TimeGrid {
            horizon: self.horizon,
            n_steps: self.n_steps * factor,
        }
    }
}

pub fn make_grid(horizon: f64, n_steps: usize) -> Result<TimeGrid> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps must be at least 1"));
    }
    Ok(TimeGrid { horizon, n_steps })
}

/// Values aligned one-to-one with a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; for values produced by this crate.
    pub(crate) fn from_parts(grid: TimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        Self::from_parts(grid, vec![value; grid.len()])
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| f(grid.time(i))).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Value at the last grid time `<= t`.
    pub fn at_time(&self, t: f64) -> f64 {
        self.values[self.grid.index_at_or_before(t)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise map on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SamplePath {
        Self::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise map with the grid time.
    pub fn map_with_time(&self, f: impl Fn(f64, f64) -> f64) -> SamplePath {
        let g = self.grid;
        Self::from_parts(
            g,
            self.values.iter().enumerate().map(|(i, &v)| f(g.time(i), v)).collect(),
        )
    }

    pub fn zip_with(&self, other: &SamplePath, f: impl Fn(f64, f64) -> f64) -> Result<SamplePath> {
        ensure_aligned(self, other)?;
        Ok(Self::from_parts(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn abs(&self) -> SamplePath {
        self.map(f64::abs)
    }

    /// Restriction to every `factor`-th point, i.e. onto a coarser grid.
    pub fn restrict(&self, factor: usize) -> Result<SamplePath> {
        if factor == 0 || !self.grid.n_steps.is_multiple_of(factor) {
            return Err(invalid(format!(
                "cannot restrict {} steps by factor {factor}",
                self.grid.n_steps
            )));
        }
        let grid = TimeGrid {
            horizon: self.grid.horizon,
            n_steps: self.grid.n_steps / factor,
        };
        Ok(Self::from_parts(grid, self.values.iter().step_by(factor).copied().collect()))
    }
}

pub(crate) fn ensure_aligned(a: &SamplePath, b: &SamplePath) -> Result<()> {
    if a.grid != b.grid || a.values.len() != b.values.len() {
        return Err(Error::GridMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Brownian path started at `x0`: cumulative `N(0, dt)` increments drawn from
/// the seed's substream, summed left to right.
pub fn sample_brownian(grid: &TimeGrid, seed: &SeedSpec, x0: f64) -> SamplePath {
    let mut rng = seed.rng();
    let sd = grid.dt().sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let mut x = x0;
    values.push(x);
    for _ in 0..grid.n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x += sd * z;
        values.push(x);
    }
    SamplePath::from_parts(*grid, values)
}

/// Two Brownian paths from the substreams `label/a` and `label/b`.
pub fn sample_independent_pair(grid: &TimeGrid, seed: &SeedSpec) -> (SamplePath, SamplePath) {
    (
        sample_brownian(grid, &seed.child("a"), 0.0),
        sample_brownian(grid, &seed.child("b"), 0.0),
    )
}

/// Brownian-bridge midpoint refinement.
///
/// Each halving inserts `(a + b) / 2 + sqrt(h / 4) * Z` between neighbours
/// `a, b` a distance `h` apart, left to right, one level at a time, all from
/// one stream. Because levels are drawn in order, refining by 4 and then
/// restricting by 2 reproduces refinement by 2: meshes are nested.
pub fn refine_bridge(path: &SamplePath, factor: usize, seed: &SeedSpec) -> Result<SamplePath> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(invalid(format!("refinement factor must be a power of 2, got {factor}")));
    }
    let mut values = path.values.clone();
    let mut grid = path.grid;
    let mut rng = seed.rng();
    let mut f = factor;
    while f > 1 {
        let sd = (grid.dt() / 4.0).sqrt();
        let mut next = Vec::with_capacity(2 * values.len() - 1);
        for w in values.windows(2) {
            let z: f64 = rng.sample(StandardNormal);
            next.push(w[0]);
            next.push(0.5 * (w[0] + w[1]) + sd * z);
        }
        next.push(values[values.len() - 1]);
        values = next;
        grid = grid.refined(2);
        f /= 2;
    }
    Ok(SamplePath::from_parts(grid, values))
}
