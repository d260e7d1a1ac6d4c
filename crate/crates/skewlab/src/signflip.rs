//! Bernoulli sign processes over an excursion decomposition.

use crate::error::{invalid, Result};
use crate::excursion::{ExcursionSet, Side};
use crate::grid::{ensure_aligned, SamplePath, TimeGrid};
use crate::seed::{counter_uniform, SeedSpec};

/// Probability of a positive excursion, validated to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(a: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&a) {
            Ok(Self(a))
        } else {
            Err(invalid(format!("alpha must lie in [0, 1], got {a}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Skewness coefficient `2 alpha - 1`.
    pub fn beta(self) -> f64 {
        2.0 * self.0 - 1.0
    }
}

/// Skewness as a function of time: constant, or piecewise constant with
/// value `values[i]` on `[boundaries[i], boundaries[i + 1])` and the last
/// value from the last boundary on.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSchedule {
    Constant(Alpha),
    Piecewise { boundaries: Vec<f64>, values: Vec<Alpha> },
}

impl AlphaSchedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        Ok(Self::Constant(Alpha::new(alpha)?))
    }

    pub fn piecewise(boundaries: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if boundaries.is_empty() || boundaries.len() != values.len() {
            return Err(invalid(format!(
                "schedule needs one value per boundary, got {} boundaries and {} values",
                boundaries.len(),
                values.len()
            )));
        }
        if boundaries[0] != 0.0 {
            return Err(invalid("first schedule boundary must be 0"));
        }
        if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("schedule boundaries must be strictly increasing"));
        }
        let values = values.into_iter().map(Alpha::new).collect::<Result<Vec<_>>>()?;
        Ok(Self::Piecewise { boundaries, values })
    }

    pub fn n_cells(&self) -> usize {
        match self {
            Self::Constant(_) => 1,
            Self::Piecewise { values, .. } => values.len(),
        }
    }

    /// Cell ordinal containing time `t`.
    pub fn cell_of(&self, t: f64) -> usize {
        match self {
            Self::Constant(_) => 0,
            Self::Piecewise { boundaries, .. } => {
                boundaries.partition_point(|&b| b <= t).saturating_sub(1)
            }
        }
    }

    pub fn cell_alpha(&self, cell: usize) -> Alpha {
        match self {
            Self::Constant(a) => *a,
            Self::Piecewise { values, .. } => values[cell],
        }
    }

    pub fn alpha_at(&self, t: f64) -> Alpha {
        self.cell_alpha(self.cell_of(t))
    }

    /// Validates that the partition fits inside `[0, horizon]`.
    pub fn check_horizon(&self, horizon: f64) -> Result<()> {
        if let Self::Piecewise { boundaries, .. } = self {
            if boundaries.iter().any(|&b| b > horizon) {
                return Err(invalid(format!("schedule boundary beyond horizon {horizon}")));
            }
        }
        Ok(())
    }
}

/// How a piecewise schedule assigns signs within one excursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellRule {
    /// One sign per nonempty excursion-cell intersection; the sign may change
    /// at a partition boundary inside an excursion.
    CellIntersection,
    /// One sign per excursion, drawn with the alpha of the cell holding its
    /// opening index. Keeps the signed path continuous.
    #[default]
    ExcursionStart,
}

/// Signs per excursion: a list of `(first cell, side)` pieces ordered by
/// cell, one piece per excursion under [`CellRule::ExcursionStart`].
#[derive(Debug, Clone, PartialEq)]
pub struct SignAssignment {
    pub rule: CellRule,
    pub pieces: Vec<Vec<(usize, Side)>>,
}

impl SignAssignment {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// All drawn signs in excursion order.
    pub fn sides(&self) -> impl Iterator<Item = Side> + '_ {
        self.pieces.iter().flatten().map(|&(_, s)| s)
    }

    /// Overrides every piece of excursion `n`.
    pub fn force(&mut self, n: usize, side: Side) {
        for p in &mut self.pieces[n] {
            p.1 = side;
        }
    }
}

#[inline]
pub(crate) fn draw_side(key: u64, ordinal: usize, cell: usize, alpha: Alpha) -> Side {
    if counter_uniform(key, ordinal as u64, cell as u64) < alpha.get() {
        Side::Positive
    } else {
        Side::Negative
    }
}

/// Independent signs, `+1` with the cell's alpha, keyed by
/// `(seed, excursion ordinal, cell ordinal)`.
pub fn assign_signs(
    excursions: &ExcursionSet,
    grid: &TimeGrid,
    schedule: &AlphaSchedule,
    rule: CellRule,
    seed: &SeedSpec,
) -> SignAssignment {
    let key = seed.key();
    let pieces = excursions
        .intervals
        .iter()
        .enumerate()
        .map(|(n, e)| {
            let cells: Vec<usize> = match rule {
                CellRule::ExcursionStart => vec![schedule.cell_of(grid.time(e.open))],
                CellRule::CellIntersection => {
                    let lo = schedule.cell_of(grid.time(e.first));
                    let hi = schedule.cell_of(grid.time(e.last));
                    (lo..=hi).collect()
                }
            };
            cells
                .into_iter()
                .map(|c| (c, draw_side(key, n, c, schedule.cell_alpha(c))))
                .collect()
        })
        .collect();
    SignAssignment { rule, pieces }
}

/// `{-1, 0, +1}`-valued path, 0 off the excursion members.
#[derive(Debug, Clone, PartialEq)]
pub struct SignPath(pub SamplePath);

impl SignPath {
    pub fn path(&self) -> &SamplePath {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
}

pub fn build_sign_path(
    excursions: &ExcursionSet,
    assignment: &SignAssignment,
    schedule: &AlphaSchedule,
    grid: &TimeGrid,
) -> Result<SignPath> {
    if assignment.len() != excursions.len() {
        return Err(invalid(format!(
            "assignment has {} excursions, decomposition has {}",
            assignment.len(),
            excursions.len()
        )));
    }
    if excursions.n_points() != grid.len() {
        return Err(invalid("excursion set does not match grid"));
    }
    let mut z = vec![0.0; grid.len()];
    for (e, pieces) in excursions.intervals.iter().zip(&assignment.pieces) {
        match assignment.rule {
            CellRule::ExcursionStart => {
                let [(_, s)] = pieces.as_slice() else {
                    return Err(invalid("excursion-start rule needs exactly one sign per excursion"));
                };
                z[e.members()].fill(s.as_f64());
            }
            CellRule::CellIntersection => {
                for i in e.members() {
                    let c = schedule.cell_of(grid.time(i));
                    let s = pieces
                        .iter()
                        .find(|p| p.0 == c)
                        .ok_or_else(|| invalid(format!("no sign for cell {c}")))?
                        .1;
                    z[i] = s.as_f64();
                }
            }
        }
    }
    Ok(SignPath(SamplePath::from_parts(*grid, z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    /// `Z * X`
    Signed,
    /// `Z * |X|`
    Absolute,
}

pub fn apply_sign(sign: &SignPath, path: &SamplePath, mode: SignMode) -> Result<SamplePath> {
    ensure_aligned(sign.path(), path)?;
    Ok(match mode {
        SignMode::Signed => sign.0.zip_with(path, |z, x| z * x)?,
        SignMode::Absolute => sign.0.zip_with(path, |z, x| z * x.abs())?,
    })
}

/// Sign path equal to the path's own excursion signs.
pub fn native_sign_path(excursions: &ExcursionSet, grid: &TimeGrid) -> SignPath {
    let mut z = vec![0.0; grid.len()];
    for e in &excursions.intervals {
        z[e.members()].fill(e.side.as_f64());
    }
    SignPath(SamplePath::from_parts(*grid, z))
}
