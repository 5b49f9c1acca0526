//! Two-dimensional signals, supports and per-column sparsity.
//!
//! All public indices are 1-based `(row, col)` pairs; storage is row-major.

use std::collections::BTreeSet;
use std::ops::{Add, Sub};

use crate::error::{domain, Error, Result};

/// A cell position, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Anti-diagonal layer index `row + col - 1`.
    pub const fn layer(self) -> usize {
        layer_of(self.row, self.col)
    }
}

/// Layer (anti-diagonal) holding cell `(i, j)`.
pub const fn layer_of(i: usize, j: usize) -> usize {
    i + j - 1
}

/// Number of layers of an `rows x cols` grid.
pub fn layer_count(rows: usize, cols: usize) -> usize {
    rows + cols - 1
}

/// Number of cells in every layer, index 0 holding layer 1.
pub fn layer_sizes(rows: usize, cols: usize) -> Vec<usize> {
    (1..=layer_count(rows, cols))
        .map(|m| {
            let lo = 1.max((m + 1).saturating_sub(cols));
            let hi = m.min(rows);
            hi + 1 - lo
        })
        .collect()
}

/// Real-valued `M x N` matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal2D {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Signal2D {
    /// Builds a signal from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return domain(format!("signal shape {rows}x{cols} must be positive"));
        }
        if data.len() != rows * cols {
            return domain(format!(
                "{} entries supplied for a {rows}x{cols} signal",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite entry at row-major index {pos}"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return domain("ragged rows");
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "signal shape must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        let mut s = Self::zeros(rows, cols);
        s.data.fill(value);
        s
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Entry at 1-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.data[k] = v;
    }

    fn index(&self, i: usize, j: usize) -> usize {
        assert!(
            (1..=self.rows).contains(&i) && (1..=self.cols).contains(&j),
            "cell ({i}, {j}) outside {}x{}",
            self.rows,
            self.cols
        );
        (i - 1) * self.cols + (j - 1)
    }

    /// Column `j` (1-based) as a vector of length `rows`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (1..=self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Assembles a signal from `cols` columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return domain("columns have unequal lengths");
        }
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                data[i * cols + j] = *v;
            }
        }
        Self::from_row_major(rows, cols, data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_row_major(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn norm_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn ensure_shape(&self, expected: (usize, usize)) -> Result<()> {
        if self.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: self.shape(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        other.ensure_shape(self.shape())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_row_major(self.rows, self.cols, data)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }
}

impl Add for &Signal2D {
    type Output = Signal2D;

    /// Panics on shape mismatch; use [`Signal2D::try_add`] otherwise.
    fn add(self, rhs: Self) -> Signal2D {
        self.try_add(rhs).expect("shape mismatch in signal addition")
    }
}

impl Sub for &Signal2D {
    type Output = Signal2D;

    fn sub(self, rhs: Self) -> Signal2D {
        self.try_sub(rhs).expect("shape mismatch in signal subtraction")
    }
}

/// Set of nonzero positions on an `M x N` grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    rows: usize,
    cols: usize,
    cells: BTreeSet<Cell>,
}

impl SupportSet {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: BTreeSet::new(),
        }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        let cells = (1..=rows)
            .flat_map(|i| (1..=cols).map(move |j| Cell::new(i, j)))
            .collect();
        Self { rows, cols, cells }
    }

    /// Builds a support, rejecting out-of-range and duplicate cells.
    pub fn new(rows: usize, cols: usize, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for c in cells {
            if !(1..=rows).contains(&c.row) || !(1..=cols).contains(&c.col) {
                return domain(format!("cell ({}, {}) outside {rows}x{cols}", c.row, c.col));
            }
            if !set.insert(c) {
                return domain(format!("duplicate cell ({}, {})", c.row, c.col));
            }
        }
        Ok(Self {
            rows,
            cols,
            cells: set,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }

    /// Cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells.iter().copied()
    }
}

/// Per-column nonzero counts of a support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityVector {
    counts: Vec<usize>,
}

impl SparsityVector {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Sum of the counts, i.e. the sparsity level.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Largest column count.
    pub fn chebyshev(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> usize {
        self.counts.iter().copied().min().unwrap_or(0)
    }
}

/// Keeps the `s` largest-magnitude entries of `x` and zeroes the rest.
///
/// Ties are broken by ascending row-major index.
pub fn best_s_term(x: &Signal2D, s: usize) -> Result<(Signal2D, SupportSet)> {
    let total = x.len();
    if s > total {
        return domain(format!("s = {s} exceeds the {total} cells of the signal"));
    }
    let mut order: Vec<usize> = (0..total).collect();
    let data = x.as_slice();
    // stable sort keeps row-major order among equal magnitudes
    order.sort_by(|&a, &b| data[b].abs().total_cmp(&data[a].abs()));
    let mut kept = vec![0.0; total];
    let mut cells = BTreeSet::new();
    for &k in &order[..s] {
        kept[k] = data[k];
        cells.insert(Cell::new(k / x.cols() + 1, k % x.cols() + 1));
    }
    let approx = Signal2D::from_row_major(x.rows(), x.cols(), kept)?;
    let support = SupportSet {
        rows: x.rows(),
        cols: x.cols(),
        cells,
    };
    Ok((approx, support))
}

/// Cells whose magnitude is at least `tau`.
pub fn threshold_support(x: &Signal2D, tau: f64) -> Result<SupportSet> {
    if !(tau >= 0.0) {
        return domain(format!("threshold {tau} must be nonnegative"));
    }
    let cols = x.cols();
    let cells = x
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= tau)
        .map(|(k, _)| Cell::new(k / cols + 1, k % cols + 1))
        .collect();
    Ok(SupportSet {
        rows: x.rows(),
        cols,
        cells,
    })
}

/// Number of support cells in each column.
pub fn sparsity_vector(support: &SupportSet) -> SparsityVector {
    let mut counts = vec![0; support.cols];
    for c in support.iter() {
        counts[c.col - 1] += 1;
    }
    SparsityVector { counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example() -> Signal2D {
        Signal2D::from_rows(&[vec![3.0, -1.0], vec![0.0, 2.0]]).unwrap()
    }

    #[test]
    fn best_s_term_examples() {
        let x = example();
        let (z, sup) = best_s_term(&x, 0).unwrap();
        assert_eq!(z, Signal2D::zeros(2, 2));
        assert!(sup.is_empty());

        let (full, sup) = best_s_term(&x, 4).unwrap();
        assert_eq!(full, x);
        assert_eq!(sup, SupportSet::full(2, 2));

        let (two, sup) = best_s_term(&x, 2).unwrap();
        assert_eq!(two, Signal2D::from_rows(&[vec![3.0, 0.0], vec![0.0, 2.0]]).unwrap());
        assert_eq!(
            sup,
            SupportSet::new(2, 2, [Cell::new(1, 1), Cell::new(2, 2)]).unwrap()
        );
        assert!(matches!(best_s_term(&x, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn ties_prefer_lower_row_major_index() {
        let x = Signal2D::from_rows(&[vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        let (_, sup) = best_s_term(&x, 2).unwrap();
        assert_eq!(
            sup,
            SupportSet::new(2, 2, [Cell::new(1, 1), Cell::new(1, 2)]).unwrap()
        );
    }

    #[test]
    fn threshold_examples() {
        let x = example();
        assert_eq!(threshold_support(&x, 0.0).unwrap().len(), 4);
        assert!(threshold_support(&x, 3.5).unwrap().is_empty());
        assert_eq!(
            threshold_support(&x, 2.0).unwrap(),
            SupportSet::new(2, 2, [Cell::new(1, 1), Cell::new(2, 2)]).unwrap()
        );
        assert!(threshold_support(&x, -1.0).is_err());
    }

    #[test]
    fn sparsity_vector_examples() {
        let sv = sparsity_vector(&SupportSet::empty(4, 4));
        assert_eq!(sv.counts(), &[0, 0, 0, 0]);
        assert_eq!(sv.total(), 0);

        let sup = SupportSet::new(4, 4, [Cell::new(1, 1), Cell::new(2, 1), Cell::new(3, 4)]).unwrap();
        let sv = sparsity_vector(&sup);
        assert_eq!(sv.counts(), &[2, 0, 0, 1]);
        assert_eq!(sv.total(), 3);
        assert_eq!(sv.chebyshev(), 2);

        let sv = sparsity_vector(&SupportSet::full(4, 4));
        assert_eq!(sv.counts(), &[4, 4, 4, 4]);
        assert_eq!(sv.total(), 16);
    }

    #[test]
    fn layers() {
        assert_eq!(layer_of(1, 1), 1);
        assert_eq!(layer_of(2, 4), 5);
        assert_eq!(layer_of(4, 4), 7);
        assert_eq!(layer_count(4, 4), 7);
        assert_eq!(layer_sizes(4, 4), vec![1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(layer_sizes(2, 3), vec![1, 2, 2, 1]);
        assert_eq!(layer_sizes(3, 1), vec![1, 1, 1]);
    }

    #[test]
    fn support_validation() {
        assert!(SupportSet::new(2, 2, [Cell::new(3, 1)]).is_err());
        assert!(SupportSet::new(2, 2, [Cell::new(1, 1), Cell::new(1, 1)]).is_err());
        assert!(Signal2D::from_row_major(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(Signal2D::from_row_major(2, 2, vec![0.0; 3]).is_err());
    }

    fn signal_strategy() -> impl Strategy<Value = Signal2D> {
        (1usize..8, 1usize..8).prop_flat_map(|(m, n)| {
            proptest::collection::vec(-100.0f64..100.0, m * n)
                .prop_map(move |d| Signal2D::from_row_major(m, n, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn best_s_term_idempotent(x in signal_strategy(), frac in 0.0f64..=1.0) {
            let s = (frac * x.len() as f64).floor() as usize;
            let (once, _) = best_s_term(&x, s).unwrap();
            let (twice, _) = best_s_term(&once, s).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn approximation_error_nonincreasing(x in signal_strategy()) {
            let mut prev = f64::INFINITY;
            for s in 0..=x.len() {
                let (xs, sup) = best_s_term(&x, s).unwrap();
                prop_assert_eq!(sup.len(), s);
                let err = x.try_sub(&xs).unwrap().norm_l1();
                prop_assert!(err <= prev + 1e-12);
                prev = err;
            }
        }

        #[test]
        fn best_s_term_minimizes_l1_error(x in signal_strategy(), seed in any::<u64>()) {
            // any other s-subset of cells leaves at least as much l1 mass behind
            let s = (seed as usize) % (x.len() + 1);
            let (xs, _) = best_s_term(&x, s).unwrap();
            let best = x.try_sub(&xs).unwrap().norm_l1();
            let mut idx: Vec<usize> = (0..x.len()).collect();
            let mut r = crate::rng::Stream::new(seed, 0);
            for k in (1..idx.len()).rev() {
                idx.swap(k, r.below(k + 1));
            }
            let other: f64 = idx[s..].iter().map(|&k| x.as_slice()[k].abs()).sum();
            prop_assert!(best <= other + 1e-9);
        }

        #[test]
        fn sparsity_total_matches_support(m in 1usize..10, n in 1usize..10, seed in any::<u64>()) {
            let mut r = crate::rng::Stream::new(seed, 0);
            let cells: Vec<Cell> = (1..=m)
                .flat_map(|i| (1..=n).map(move |j| Cell::new(i, j)))
                .filter(|_| r.bernoulli(0.4))
                .collect();
            let sup = SupportSet::new(m, n, cells).unwrap();
            let sv = sparsity_vector(&sup);
            prop_assert_eq!(sv.total(), sup.len());
            prop_assert!(sv.chebyshev() * n >= sv.total());
        }
    }
}
