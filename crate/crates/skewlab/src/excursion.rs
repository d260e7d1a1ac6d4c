//! Zero sets, excursion intervals and the last-zero curve of a sampled path.
//!
//! Discrete conventions:
//!
//! * index `i` is a zero when `|x_i| <= snap` (exact zeros for the default
//!   `snap = 0`);
//! * a strict sign change between `i` and `i + 1` ends one excursion at `i`
//!   and starts the next at `i + 1`; the index `i + 1` joins the zero mask so
//!   that the last-zero curve moves there;
//! * an excursion still running at the last index closes at `N`.

use crate::grid::SamplePath;

/// Boolean flags aligned with a grid; `true` marks the discrete zero set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroMask {
    flags: Vec<bool>,
}

impl ZeroMask {
    pub fn empty(len: usize) -> Self {
        Self { flags: vec![false; len] }
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        Self { flags }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut flags = vec![false; len];
        for &i in indices {
            flags[i] = true;
        }
        Self { flags }
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn contains(&self, i: usize) -> bool {
        self.flags[i]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn has_any(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.flags.len()).filter(|&i| self.flags[i]).collect()
    }

    /// Union with another mask of the same length.
    pub fn union(&self, other: &ZeroMask) -> ZeroMask {
        assert_eq!(self.len(), other.len(), "mask length mismatch");
        ZeroMask {
            flags: self.flags.iter().zip(&other.flags).map(|(&a, &b)| a || b).collect(),
        }
    }

    /// Distance in grid steps from each index to the nearest flagged index
    /// (`usize::MAX` when the mask is empty).
    pub fn distance(&self) -> Vec<usize> {
        let n = self.flags.len();
        let mut d = vec![usize::MAX; n];
        let mut last: Option<usize> = None;
        for (i, (di, &f)) in d.iter_mut().zip(&self.flags).enumerate() {
            if f {
                last = Some(i);
            }
            if let Some(l) = last {
                *di = i - l;
            }
        }
        last = None;
        for i in (0..n).rev() {
            if self.flags[i] {
                last = Some(i);
            }
            if let Some(l) = last {
                d[i] = d[i].min(l - i);
            }
        }
        d
    }

    /// Flags every index within `radius` steps of the mask.
    pub fn dilate(&self, radius: usize) -> ZeroMask {
        ZeroMask {
            flags: self.distance().into_iter().map(|d| d <= radius).collect(),
        }
    }
}

/// Side of zero an excursion lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Negative,
    Positive,
}

impl Side {
    pub fn of(x: f64) -> Option<Side> {
        if x > 0.0 {
            Some(Side::Positive)
        } else if x < 0.0 {
            Some(Side::Negative)
        } else {
            None
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
        }
    }
}

/// One excursion `]open, close[`.
///
/// `open`/`close` are the boundary indices (a zero, a crossing index, or the
/// ends of the grid); `first..=last` are the indices where the path is
/// nonzero with sign `side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Excursion {
    pub open: usize,
    pub close: usize,
    pub first: usize,
    pub last: usize,
    pub side: Side,
}

impl Excursion {
    /// `(g, d, sign)` triple.
    pub fn bounds(&self) -> (usize, usize, i8) {
        let s = match self.side {
            Side::Positive => 1,
            Side::Negative => -1,
        };
        (self.open, self.close, s)
    }

    pub fn members(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionSet {
    pub intervals: Vec<Excursion>,
    pub mask: ZeroMask,
}

impl ExcursionSet {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.mask.len()
    }

    /// Ordinal of the excursion containing index `i`, if any.
    pub fn excursion_of(&self, i: usize) -> Option<usize> {
        let k = self.intervals.partition_point(|e| e.last < i);
        (k < self.intervals.len() && self.intervals[k].first <= i).then_some(k)
    }
}

pub fn decompose_excursions(path: &SamplePath) -> ExcursionSet {
    decompose_values(path.values(), 0.0)
}

/// Decomposition with values of magnitude `<= snap` treated as zeros.
pub fn decompose_with_snap(path: &SamplePath, snap: f64) -> ExcursionSet {
    decompose_values(path.values(), snap)
}

pub(crate) fn decompose_values(values: &[f64], snap: f64) -> ExcursionSet {
    let n = values.len();
    let side = |x: f64| if x.abs() <= snap { None } else { Side::of(x) };
    let mut flags = vec![false; n];
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n {
        let Some(s) = side(values[i]) else {
            flags[i] = true;
            i += 1;
            continue;
        };
        let first = i;
        while i + 1 < n && side(values[i + 1]) == Some(s) {
            i += 1;
        }
        let last = i;
        let open = if first == 0 {
            0
        } else if side(values[first - 1]).is_none() {
            first - 1
        } else {
            // crossing from the previous run
            flags[first] = true;
            first
        };
        let close = if last + 1 == n {
            n - 1
        } else if side(values[last + 1]).is_none() {
            last + 1
        } else {
            last
        };
        intervals.push(Excursion {
            open,
            close,
            first,
            last,
            side: s,
        });
        i += 1;
    }
    ExcursionSet {
        intervals,
        mask: ZeroMask { flags },
    }
}

/// `gamma[i]` is the largest zero index `<= i`, or 0 when there is none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LastZeroCurve {
    pub gamma: Vec<usize>,
}

impl LastZeroCurve {
    pub fn from_mask(mask: &ZeroMask) -> (Self, usize) {
        let mut gamma = Vec::with_capacity(mask.len());
        let mut g = 0;
        for (i, &f) in mask.flags().iter().enumerate() {
            if f {
                g = i;
            }
            gamma.push(g);
        }
        let gbar = g;
        (Self { gamma }, gbar)
    }
}

/// Last-zero curve and `gbar = 0 v (last zero index)`.
pub fn last_zero_curve(excursions: &ExcursionSet) -> (LastZeroCurve, usize) {
    LastZeroCurve::from_mask(&excursions.mask)
}

/// Largest `min(|x_g|, |x_d|)` over boundaries of strict sign changes; a
/// measure of how far the discrete crossings sit from a true zero.
pub fn crossing_gap(path: &SamplePath, excursions: &ExcursionSet) -> f64 {
    let v = path.values();
    excursions
        .intervals
        .windows(2)
        .filter(|w| w[0].last + 1 == w[1].first)
        .map(|w| v[w[0].last].abs().min(v[w[1].first].abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn path(v: &[f64]) -> SamplePath {
        SamplePath::new(make_grid(1.0, v.len() - 1).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn spec_example() {
        let e = decompose_excursions(&path(&[0.0, 1.0, 2.0, 0.0, -1.0, 0.0]));
        let b: Vec<_> = e.intervals.iter().map(|x| x.bounds()).collect();
        assert_eq!(b, vec![(0, 3, 1), (3, 5, -1)]);
        assert_eq!(e.mask.indices(), vec![0, 3, 5]);
        let (g, gbar) = last_zero_curve(&e);
        assert_eq!(g.gamma, vec![0, 0, 0, 3, 3, 5]);
        assert_eq!(gbar, 5);
    }

    #[test]
    fn all_positive() {
        let e = decompose_excursions(&path(&[0.5, 1.0, 2.0, 0.1]));
        assert_eq!(e.intervals.len(), 1);
        assert_eq!(e.intervals[0].bounds(), (0, 3, 1));
        assert!(!e.mask.has_any());
        let (g, gbar) = last_zero_curve(&e);
        assert_eq!(g.gamma, vec![0; 4]);
        assert_eq!(gbar, 0);
    }

    #[test]
    fn all_zero() {
        let e = decompose_excursions(&path(&[0.0, 0.0, 0.0]));
        assert!(e.intervals.is_empty());
        assert_eq!(e.mask.count(), 3);
    }

    #[test]
    fn crossing_boundaries() {
        let e = decompose_excursions(&path(&[0.0, 1.0, -1.0, -2.0, 3.0]));
        let b: Vec<_> = e.intervals.iter().map(|x| x.bounds()).collect();
        assert_eq!(b, vec![(0, 1, 1), (2, 3, -1), (4, 4, 1)]);
        assert_eq!(e.mask.indices(), vec![0, 2, 4]);
        assert_eq!(e.excursion_of(3), Some(1));
        assert_eq!(e.excursion_of(0), None);
        let (g, _) = last_zero_curve(&e);
        assert_eq!(g.gamma, vec![0, 0, 2, 2, 4]);
    }

    #[test]
    fn snap_creates_zeros() {
        let p = path(&[0.0, 0.01, 1.0, 0.02, 1.0]);
        assert_eq!(decompose_excursions(&p).len(), 1);
        let e = decompose_with_snap(&p, 0.05);
        assert_eq!(e.len(), 2);
        assert_eq!(e.mask.indices(), vec![0, 1, 3]);
    }

    #[test]
    fn mask_distance_and_dilation() {
        let m = ZeroMask::from_indices(8, &[2, 6]);
        assert_eq!(m.distance(), vec![2, 1, 0, 1, 2, 1, 0, 1]);
        assert_eq!(m.dilate(1).indices(), vec![1, 2, 3, 5, 6, 7]);
        assert!(ZeroMask::empty(3).distance().iter().all(|&d| d == usize::MAX));
    }
}
