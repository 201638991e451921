use core::fmt;

use super::AbstractionError;
use crate::plant::{Interval, Plant1D};
use crate::rational::Rational;

/// Uniform partition of `[0, h]` into `cells` half-open pieces
/// `[k*w, (k+1)*w)` plus a degenerate top cell `{h}` with index `cells`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    level: u32,
    cells: usize,
    height: Rational,
}

/// Contiguous run of cells `lo..=hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellRange {
    pub lo: usize,
    pub hi: usize,
}

impl CellRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn single(k: usize) -> Self {
        Self { lo: k, hi: k }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cells(&self) -> core::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    pub fn intersect(&self, other: &CellRange) -> Option<CellRange> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(CellRange { lo, hi })
    }

    pub fn hull(&self, other: &CellRange) -> CellRange {
        CellRange {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn contains_range(&self, other: &CellRange) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn parse(text: &str) -> Option<CellRange> {
        let (lo, hi) = text.split_once("..")?;
        let (lo, hi) = (lo.parse().ok()?, hi.parse().ok()?);
        (lo <= hi).then_some(CellRange { lo, hi })
    }
}

impl fmt::Display for CellRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl Partition {
    /// `base * 2^(level-1)` equal cells over the plant's range.
    pub fn new(plant: &Plant1D, base: usize, level: u32) -> Result<Self, AbstractionError> {
        if level < 1 {
            return Err(AbstractionError::Config("level must be at least 1"));
        }
        if base < 1 {
            return Err(AbstractionError::Config("base cell count must be at least 1"));
        }
        let cells = 1usize
            .checked_shl(level - 1)
            .and_then(|f| f.checked_mul(base))
            .filter(|&n| n <= 1 << 16)
            .ok_or(AbstractionError::Config("partition too fine"))?;
        Ok(Self {
            level,
            cells,
            height: plant.height(),
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cell_count(&self) -> usize {
        self.cells
    }

    pub fn width(&self) -> Rational {
        self.height / Rational::from_integer(self.cells as i64)
    }

    pub fn height(&self) -> Rational {
        self.height
    }

    /// Index of the top cell `{h}`.
    pub fn top(&self) -> usize {
        self.cells
    }

    pub fn full(&self) -> CellRange {
        CellRange::new(0, self.cells)
    }

    fn boundary(&self, k: usize) -> Rational {
        self.width() * Rational::from_integer(k as i64)
    }

    /// Cell containing `x`; the left boundary of a cell belongs to it.
    pub fn cell_of(&self, x: Rational) -> usize {
        if x >= self.height {
            return self.cells;
        }
        let k = (x / self.width()).floor().to_integer();
        k.clamp(0, self.cells as i64 - 1) as usize
    }

    pub fn cell_interval(&self, k: usize) -> Interval {
        if k >= self.cells {
            return Interval::point(self.height);
        }
        Interval::half_open(self.boundary(k), self.boundary(k + 1))
    }

    /// Union of the cells of `r`.
    pub fn range_interval(&self, r: CellRange) -> Interval {
        if r.hi >= self.cells {
            return Interval::closed(self.boundary(r.lo.min(self.cells)), self.height);
        }
        Interval::half_open(self.boundary(r.lo), self.boundary(r.hi + 1))
    }

    /// Smallest cell range whose union covers `interval`.
    pub fn snap(&self, interval: Interval) -> Result<CellRange, AbstractionError> {
        if interval.is_empty() {
            return Err(AbstractionError::EmptyInterval);
        }
        if interval.lo < Rational::from_integer(0) || interval.hi > self.height {
            return Err(AbstractionError::Config("interval outside [0, h]"));
        }
        let lo = self.cell_of(interval.lo);
        let hi = if interval.hi_closed {
            self.cell_of(interval.hi)
        } else {
            // Last cell holding points just below the open end.
            let k = (interval.hi / self.width()).ceil().to_integer() - 1;
            (k.max(0) as usize).min(self.cells - 1)
        };
        Ok(CellRange::new(lo, hi.max(lo)))
    }

    /// Whether every cell of `self` is a union of cells of `finer`.
    pub fn is_refined_by(&self, finer: &Partition) -> bool {
        self.height == finer.height
            && finer.cells.is_multiple_of(self.cells)
            && (finer.cells / self.cells).is_power_of_two()
    }

    /// The cells of `self` covering `r` of the finer partition.
    pub fn coarsen(&self, finer: &Partition, r: CellRange) -> CellRange {
        let factor = finer.cells / self.cells;
        let map = |k: usize| if k >= finer.cells { self.cells } else { k / factor };
        CellRange::new(map(r.lo), map(r.hi))
    }
}

/// Builds the level-`level` partition under the doubling schedule.
pub fn build_partition(plant: &Plant1D, base: usize, level: u32) -> Result<Partition, AbstractionError> {
    Partition::new(plant, base, level)
}
