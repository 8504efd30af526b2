//! Dyadic grids on `[0, 1)` with an anisotropic length gauge.
//!
//! # Coordinate system
//!
//! Fix a branching exponent `N >= 1` and a depth `L`. A cell at *level* `j`
//! (for `0 <= j <= L`) is the half-open interval
//!
//! ```text
//!   Q(j, k) = [ k * 2^(-jN), (k+1) * 2^(-jN) ),    0 <= k < 2^(jN),
//! ```
//!
//! so each level-`j` cell splits into `2^N` cells at level `j + 1` and the
//! finest (level-`L`) cells have physical width `2^(-NL)`. The *length gauge*
//! used by all content and measure computations is not the physical width but
//!
//! ```text
//!   len(Q(j, k)) = 2^(-j),
//! ```
//!
//! i.e. one power of two per level regardless of `N`. For `N = 1` the gauge
//! is the ordinary length; for `N > 1` a cell is "long" relative to its
//! width, which is exactly what makes `s`-dimensional counting with
//! `s` up to `N` meaningful on these grids.
//!
//! Endpoints, widths and gauge lengths are all dyadic rationals and are kept
//! exact: either as [`DyadicRational`] values or as `f64`s whose arithmetic
//! (sums of dyadics, scaling by powers of two) is exact in IEEE double
//! precision for every grid this crate accepts (`N * L <= 30`).

use crate::util::neumaier_sum;
use crate::{Error, Result};
use std::fmt;
use std::io::{BufReader, Read, Write};
use std::path::Path;

/// Hard cap on `N * L`: keeps cell counts addressable and every endpoint
/// mantissa well inside the 53-bit exact-integer range of `f64`.
pub const MAX_TOTAL_DEPTH: u32 = 30;

// ---------------------------------------------------------------------------
// Grid parameters
// ---------------------------------------------------------------------------

/// Branching exponent and depth of a dyadic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridParams {
    n: u32,
    l: u32,
}

impl GridParams {
    /// A grid with `2^N` children per subdivision step and `L` steps.
    /// Requires `N >= 1`, `L >= 1`, and `N * L <= 30`.
    pub fn new(n: u32, l: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be >= 1".into()));
        }
        if l == 0 {
            return Err(Error::InvalidParams("L must be >= 1".into()));
        }
        if n.saturating_mul(l) > MAX_TOTAL_DEPTH {
            return Err(Error::InvalidParams(format!(
                "N*L = {} exceeds the supported maximum {}",
                n * l,
                MAX_TOTAL_DEPTH
            )));
        }
        Ok(GridParams { n, l })
    }

    /// Depth-0 (single root cell) grids arise internally when a set is
    /// restricted to one of its own finest cells; they are valid values but
    /// not constructible through [`GridParams::new`].
    pub(crate) fn from_raw(n: u32, l: u32) -> Self {
        GridParams { n, l }
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn l(&self) -> u32 {
        self.l
    }

    /// Number of cells at level `j`.
    #[inline]
    pub fn cells_at_level(&self, j: u32) -> u64 {
        1u64 << (j * self.n)
    }

    /// Number of finest-level cells.
    #[inline]
    pub fn cell_count(&self) -> u64 {
        self.cells_at_level(self.l)
    }

    /// Physical width of a finest-level cell: `2^(-NL)`.
    #[inline]
    pub fn cell_width(&self) -> f64 {
        (2.0f64).powi(-((self.n * self.l) as i32))
    }

    /// The interval `Q(level, index)`, validated against this grid.
    pub fn interval(&self, level: u32, index: u64) -> Result<DyadicInterval> {
        if level > self.l {
            return Err(Error::InvalidParams(format!(
                "level {} exceeds depth {}",
                level, self.l
            )));
        }
        if index >= self.cells_at_level(level) {
            return Err(Error::InvalidParams(format!(
                "index {} out of range at level {} (max {})",
                index,
                level,
                self.cells_at_level(level) - 1
            )));
        }
        Ok(DyadicInterval { level, index })
    }

    /// The root cell `[0, 1)`.
    pub fn root(&self) -> DyadicInterval {
        DyadicInterval { level: 0, index: 0 }
    }
}

// ---------------------------------------------------------------------------
// Exact dyadic rationals
// ---------------------------------------------------------------------------

/// A nonnegative dyadic rational `numer / 2^log2_denom`, kept in lowest
/// terms (odd numerator, or denominator exponent 0).
#[derive(Debug, Clone, Copy)]
pub struct DyadicRational {
    numer: u64,
    log2_denom: u32,
}

impl DyadicRational {
    pub fn new(numer: u64, log2_denom: u32) -> Self {
        let mut r = DyadicRational { numer, log2_denom };
        r.normalize();
        r
    }

    /// `2^(-j)`.
    pub fn pow2_neg(j: u32) -> Self {
        DyadicRational {
            numer: 1,
            log2_denom: j,
        }
    }

    fn normalize(&mut self) {
        if self.numer == 0 {
            self.log2_denom = 0;
            return;
        }
        while self.log2_denom > 0 && self.numer.is_multiple_of(2) {
            self.numer /= 2;
            self.log2_denom -= 1;
        }
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    pub fn log2_denom(&self) -> u32 {
        self.log2_denom
    }

    /// Exact conversion; every value this crate produces has a numerator
    /// below `2^53`.
    pub fn to_f64(&self) -> f64 {
        self.numer as f64 * (2.0f64).powi(-(self.log2_denom as i32))
    }
}

impl PartialEq for DyadicRational {
    fn eq(&self, other: &Self) -> bool {
        // Both sides are normalized.
        self.numer == other.numer && self.log2_denom == other.log2_denom
    }
}
impl Eq for DyadicRational {}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Compare a/2^p with b/2^q via a*2^q' vs b*2^p' on u128.
        let common = self.log2_denom.max(other.log2_denom);
        let lhs = (self.numer as u128) << (common - self.log2_denom);
        let rhs = (other.numer as u128) << (common - other.log2_denom);
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log2_denom == 0 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/2^{}", self.numer, self.log2_denom)
        }
    }
}

// ---------------------------------------------------------------------------
// Intervals
// ---------------------------------------------------------------------------

/// One dyadic cell `Q(level, index)`. The branching exponent `N` is supplied
/// by the surrounding [`GridParams`] where geometry is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    pub level: u32,
    pub index: u64,
}

impl DyadicInterval {
    /// Length gauge `2^(-level)`, exact.
    pub fn length(&self) -> DyadicRational {
        DyadicRational::pow2_neg(self.level)
    }

    /// Left endpoint `index * 2^(-level*N)`, exact.
    pub fn left(&self, n: u32) -> DyadicRational {
        DyadicRational::new(self.index, self.level * n)
    }

    /// Right endpoint `(index+1) * 2^(-level*N)`, exact.
    pub fn right(&self, n: u32) -> DyadicRational {
        DyadicRational::new(self.index + 1, self.level * n)
    }

    /// Physical width `2^(-level*N)` as `f64` (a power of two, exact).
    pub fn width(&self, n: u32) -> f64 {
        (2.0f64).powi(-((self.level * n) as i32))
    }

    /// Half-open membership `x in [left, right)`.
    pub fn contains(&self, n: u32, x: f64) -> bool {
        let l = self.left(n).to_f64();
        let r = self.right(n).to_f64();
        x >= l && x < r
    }

    /// The `2^(N*steps)` descendants `steps` levels below this cell, in
    /// ascending index order. Fails with `DepthOverflow` past the grid floor.
    pub fn children(
        &self,
        params: &GridParams,
        steps: u32,
    ) -> Result<impl Iterator<Item = DyadicInterval>> {
        if self.level + steps > params.l() {
            return Err(Error::DepthOverflow {
                level: self.level,
                steps,
                max: params.l(),
            });
        }
        let level = self.level + steps;
        let first = self.index << (params.n() * steps);
        let count = 1u64 << (params.n() * steps);
        Ok((first..first + count).map(move |index| DyadicInterval { level, index }))
    }

    /// Affine map sending this cell onto `[0, 1)`:
    /// `y = 2^(level*N) * (x - left)`. `x` may be anywhere in the closure,
    /// so `y` lands in `[0, 1]`. Exact for dyadic `x`.
    pub fn rescale_to_unit(&self, n: u32, x: f64) -> Result<f64> {
        let l = self.left(n).to_f64();
        let r = self.right(n).to_f64();
        if !(x >= l && x <= r) {
            return Err(Error::OutsideInterval { x, lo: l, hi: r });
        }
        Ok((x - l) * (2.0f64).powi((self.level * n) as i32))
    }

    /// Inverse of [`rescale_to_unit`]: `x = 2^(-level*N) * y + left` for
    /// `y in [0, 1]`.
    pub fn rescale_from_unit(&self, n: u32, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::OutsideInterval {
                x: y,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok((2.0f64).powi(-((self.level * n) as i32)) * y + self.left(n).to_f64())
    }
}

// ---------------------------------------------------------------------------
// Occupancy sets
// ---------------------------------------------------------------------------

/// A union of finest-level cells: the discrete stand-in for a compact subset
/// of `[0, 1]` at resolution `2^(-NL)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicSet {
    params: GridParams,
    cells: Vec<bool>,
}

impl DyadicSet {
    /// Builds a set from an occupancy vector of length `2^(N*L)`.
    pub fn new(params: GridParams, cells: Vec<bool>) -> Result<Self> {
        if cells.len() as u64 != params.cell_count() {
            return Err(Error::InvalidParams(format!(
                "occupancy vector has {} cells, grid needs {}",
                cells.len(),
                params.cell_count()
            )));
        }
        Ok(DyadicSet { params, cells })
    }

    pub fn empty(params: GridParams) -> Self {
        let n = params.cell_count() as usize;
        DyadicSet {
            params,
            cells: vec![false; n],
        }
    }

    pub fn full(params: GridParams) -> Self {
        let n = params.cell_count() as usize;
        DyadicSet {
            params,
            cells: vec![true; n],
        }
    }

    #[inline]
    pub fn params(&self) -> GridParams {
        self.params
    }

    #[inline]
    pub fn is_occupied(&self, index: u64) -> bool {
        self.cells[index as usize]
    }

    pub fn set_occupied(&mut self, index: u64, value: bool) {
        self.cells[index as usize] = value;
    }

    pub fn occupied_count(&self) -> u64 {
        self.cells.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&b| b)
    }

    pub fn iter_occupied(&self) -> impl Iterator<Item = u64> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u64)
    }

    /// Fraction of finest cells occupied.
    pub fn occupied_fraction(&self) -> f64 {
        self.occupied_count() as f64 / self.cell_count() as f64
    }

    pub fn cell_count(&self) -> u64 {
        self.params.cell_count()
    }

    /// Does the cell `q` (at any level) meet the set?
    pub fn meets(&self, q: &DyadicInterval) -> bool {
        let steps = self.params.l() - q.level;
        let first = q.index << (self.params.n() * steps);
        let count = 1u64 << (self.params.n() * steps);
        (first..first + count).any(|i| self.cells[i as usize])
    }

    /// The finest-level cell containing `x`, for `x in [0, 1)`.
    pub fn cell_of(&self, x: f64) -> Option<u64> {
        if !(0.0..1.0).contains(&x) {
            return None;
        }
        let idx = (x / self.params.cell_width()).floor() as u64;
        Some(idx.min(self.cell_count() - 1))
    }

    /// Membership of `x` in the **closure** of the occupied cells: either the
    /// half-open cell containing `x` is occupied, or `x` sits exactly on a
    /// cell boundary whose left neighbour is occupied (this covers `x = 1`).
    /// Returns the index of a witnessing occupied cell.
    pub fn closure_cell(&self, x: f64) -> Option<u64> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        let w = self.params.cell_width();
        let last = self.cell_count() - 1;
        let idx = ((x / w).floor() as u64).min(last);
        if x < 1.0 && self.cells[idx as usize] {
            return Some(idx);
        }
        // Exact boundary point: also accept the cell on the left.
        if x == idx as f64 * w && idx > 0 && self.cells[idx as usize - 1] {
            return Some(idx - 1);
        }
        if x == 1.0 && self.cells[last as usize] {
            return Some(last);
        }
        None
    }

    pub fn closure_contains(&self, x: f64) -> bool {
        self.closure_cell(x).is_some()
    }

    /// Restrict to the cell `q` and rescale onto `[0, 1)`: the result lives
    /// on a grid of depth `L - level(q)` and keeps exactly the finest cells
    /// of `self` inside `q`.
    pub fn restrict_and_rescale(&self, q: &DyadicInterval) -> Result<DyadicSet> {
        if q.level > self.params.l() {
            return Err(Error::DepthOverflow {
                level: q.level,
                steps: 0,
                max: self.params.l(),
            });
        }
        let steps = self.params.l() - q.level;
        let first = q.index << (self.params.n() * steps);
        let count = 1u64 << (self.params.n() * steps);
        let cells: Vec<bool> = (first..first + count)
            .map(|i| self.cells[i as usize])
            .collect();
        Ok(DyadicSet {
            params: GridParams::from_raw(self.params.n(), steps),
            cells,
        })
    }

    // -- set file format ----------------------------------------------------

    /// Serializes as two lines:
    ///
    /// ```text
    /// N=<int> L=<int>
    /// <start>:<len>,<start>:<len>,...
    /// ```
    ///
    /// where the second line lists maximal runs of occupied finest cells in
    /// ascending order (empty line for the empty set). The encoding is
    /// canonical, so serialize/parse round-trips bit-exactly.
    pub fn to_rle_string(&self) -> String {
        let mut out = format!("N={} L={}\n", self.params.n(), self.params.l());
        let mut runs: Vec<(u64, u64)> = Vec::new();
        let mut i = 0u64;
        let n = self.cell_count();
        while i < n {
            if self.cells[i as usize] {
                let start = i;
                while i < n && self.cells[i as usize] {
                    i += 1;
                }
                runs.push((start, i - start));
            } else {
                i += 1;
            }
        }
        let body: Vec<String> = runs.iter().map(|(s, l)| format!("{}:{}", s, l)).collect();
        out.push_str(&body.join(","));
        out.push('\n');
        out
    }

    pub fn from_rle_str(text: &str) -> Result<DyadicSet> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header line".into(),
        })?;
        let mut n_val: Option<u32> = None;
        let mut l_val: Option<u32> = None;
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("N=") {
                n_val = Some(v.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("bad N value `{}`", v),
                })?);
            } else if let Some(v) = tok.strip_prefix("L=") {
                l_val = Some(v.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("bad L value `{}`", v),
                })?);
            } else {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unexpected token `{}`", tok),
                });
            }
        }
        let params = GridParams::new(
            n_val.ok_or(Error::Parse {
                line: 1,
                msg: "missing N=".into(),
            })?,
            l_val.ok_or(Error::Parse {
                line: 1,
                msg: "missing L=".into(),
            })?,
        )?;
        let mut set = DyadicSet::empty(params);
        let body = lines.next().unwrap_or("");
        if !body.trim().is_empty() {
            for part in body.trim().split(',') {
                let (s, l) = part.split_once(':').ok_or(Error::Parse {
                    line: 2,
                    msg: format!("run `{}` is not <start>:<len>", part),
                })?;
                let start: u64 = s.parse().map_err(|_| Error::Parse {
                    line: 2,
                    msg: format!("bad run start `{}`", s),
                })?;
                let len: u64 = l.parse().map_err(|_| Error::Parse {
                    line: 2,
                    msg: format!("bad run length `{}`", l),
                })?;
                if len == 0 || start + len > set.cell_count() {
                    return Err(Error::Parse {
                        line: 2,
                        msg: format!("run {}:{} outside grid of {} cells", start, len, set.cell_count()),
                    });
                }
                for i in start..start + len {
                    set.cells[i as usize] = true;
                }
            }
        }
        Ok(set)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_rle_string().as_bytes())?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<DyadicSet> {
        let mut text = String::new();
        BufReader::new(std::fs::File::open(path)?).read_to_string(&mut text)?;
        Self::from_rle_str(&text)
    }
}

/// Convenience: exact total of an iterator of weights (compensated).
pub fn mass_total<I: IntoIterator<Item = f64>>(weights: I) -> f64 {
    neumaier_sum(weights)
}

// Keep BufRead in scope for read_to_string on the reader.
#[allow(unused_imports)]
use std::io::BufRead as _;
