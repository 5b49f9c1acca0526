//! Entry permutations of 2D signals.
//!
//! A [`PermutationMap`] moves every cell of an `M x N` grid to a destination
//! cell. Scan-based maps rank the cells (zigzag order, or group by group) and
//! then write rank `r` (1-based) to row `ceil(r / N)`, column
//! `((r - 1) mod N) + 1`, i.e. a row-wise reshape of the scan.

use crate::error::{domain, Result};
use crate::signal::{best_s_term, sparsity_vector, Cell, Signal2D, SparsityVector, SupportSet};

pub const IDENTITY_TAG: &str = "identity";
pub const ZIGZAG_TAG: &str = "zigzag";
pub const GROUP_SCAN_TAG: &str = "group-scan";
pub const OPTIMAL_TAG: &str = "optimal";

/// Bijection on the cells of an `M x N` grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationMap {
    rows: usize,
    cols: usize,
    /// Row-major source index -> row-major destination index.
    dest: Vec<usize>,
    tag: String,
}

impl PermutationMap {
    /// Builds a map from 0-based row-major destinations, checking bijectivity.
    pub fn from_destinations(
        rows: usize,
        cols: usize,
        dest: Vec<usize>,
        tag: impl Into<String>,
    ) -> Result<Self> {
        let n = rows * cols;
        if dest.len() != n {
            return domain(format!("{} destinations for {n} cells", dest.len()));
        }
        let mut hit = vec![false; n];
        for &d in &dest {
            if d >= n || std::mem::replace(&mut hit[d], true) {
                return domain(format!("destination {d} out of range or repeated"));
            }
        }
        Ok(Self {
            rows,
            cols,
            dest,
            tag: tag.into(),
        })
    }

    pub fn identity(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            dest: (0..rows * cols).collect(),
            tag: IDENTITY_TAG.to_owned(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Identifier carried into measurement batches.
    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    /// Destination of a source cell.
    pub fn dest_of(&self, c: Cell) -> Cell {
        let k = self.dest[(c.row - 1) * self.cols + (c.col - 1)];
        Cell::new(k / self.cols + 1, k % self.cols + 1)
    }

    /// Row-major destination indices (0-based).
    pub fn destinations(&self) -> &[usize] {
        &self.dest
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.dest.len()];
        for (src, &d) in self.dest.iter().enumerate() {
            inv[d] = src;
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            dest: inv,
            tag: format!("inverse({})", self.tag),
        }
    }

    /// The map applying `first` and then `self`.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        if self.shape() != first.shape() {
            return domain("composing permutations of different shapes");
        }
        let dest = first.dest.iter().map(|&d| self.dest[d]).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            dest,
            tag: format!("{}*{}", self.tag, first.tag),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.dest.iter().enumerate().all(|(i, &d)| i == d)
    }

    /// Permutes the entries of `x`: `out(dest_of(c)) = x(c)`.
    pub fn apply(&self, x: &Signal2D) -> Result<Signal2D> {
        x.ensure_shape(self.shape())?;
        let mut out = vec![0.0; x.len()];
        for (src, &v) in x.as_slice().iter().enumerate() {
            out[self.dest[src]] = v;
        }
        Signal2D::from_row_major(self.rows, self.cols, out)
    }

    /// Maps every support cell to its destination.
    pub fn apply_support(&self, support: &SupportSet) -> Result<SupportSet> {
        if support.shape() != self.shape() {
            return domain("support and permutation shapes differ");
        }
        SupportSet::new(self.rows, self.cols, support.iter().map(|c| self.dest_of(c)))
    }

    /// Row-wise reshape of a scan order given as source cells by rank.
    fn from_scan(rows: usize, cols: usize, scan: &[Cell], tag: &str) -> Result<Self> {
        let mut dest = vec![usize::MAX; rows * cols];
        if scan.len() != dest.len() {
            return domain(format!("scan covers {} of {} cells", scan.len(), dest.len()));
        }
        for (rank, c) in scan.iter().enumerate() {
            if !(1..=rows).contains(&c.row) || !(1..=cols).contains(&c.col) {
                return domain(format!("cell ({}, {}) outside {rows}x{cols}", c.row, c.col));
            }
            let slot = &mut dest[(c.row - 1) * cols + (c.col - 1)];
            if *slot != usize::MAX {
                return domain(format!("cell ({}, {}) scanned twice", c.row, c.col));
            }
            *slot = rank;
        }
        Self::from_destinations(rows, cols, dest, tag)
    }
}

/// Cells of layer `m` in zigzag traversal order: ascending row on even
/// layers, descending row on odd layers. Rows are clamped to the grid.
fn zigzag_layer(rows: usize, cols: usize, m: usize) -> Vec<Cell> {
    let lo = 1.max((m + 1).saturating_sub(cols));
    let hi = m.min(rows);
    let cells = (lo..=hi).map(|i| Cell::new(i, m + 1 - i));
    if m % 2 == 0 {
        cells.collect()
    } else {
        cells.rev().collect()
    }
}

/// Source cells in zigzag scan order.
pub fn zigzag_order(rows: usize, cols: usize) -> Vec<Cell> {
    (1..rows + cols)
        .flat_map(|m| zigzag_layer(rows, cols, m))
        .collect()
}

/// Zigzag scan followed by a row-wise reshape.
pub fn zigzag_permutation(rows: usize, cols: usize) -> PermutationMap {
    PermutationMap::from_scan(rows, cols, &zigzag_order(rows, cols), ZIGZAG_TAG)
        .expect("zigzag order covers the grid exactly once")
}

/// Layer groups, each ordered by ascending row (`alternating = false`) or in
/// zigzag direction (`alternating = true`).
pub fn layer_groups(rows: usize, cols: usize, alternating: bool) -> Vec<Vec<Cell>> {
    (1..rows + cols)
        .map(|m| {
            let mut g = zigzag_layer(rows, cols, m);
            if !alternating {
                g.sort();
            }
            g
        })
        .collect()
}

/// Group-by-group scan followed by a row-wise reshape.
///
/// Groups are scanned in the given order and cells within a group in the
/// order listed. The groups must partition the grid.
pub fn group_scan_permutation(
    rows: usize,
    cols: usize,
    groups: &[Vec<Cell>],
) -> Result<PermutationMap> {
    let scan: Vec<Cell> = groups.iter().flatten().copied().collect();
    PermutationMap::from_scan(rows, cols, &scan, GROUP_SCAN_TAG)
}

/// Group-scan permutation with every group traversed in row-major order.
pub fn group_scan_row_major(
    rows: usize,
    cols: usize,
    groups: &[Vec<Cell>],
) -> Result<PermutationMap> {
    let sorted: Vec<Vec<Cell>> = groups
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.sort();
            g
        })
        .collect();
    group_scan_permutation(rows, cols, &sorted)
}

/// Whether `p` strictly lowers the largest column count of the best
/// `s`-term support of `x`.
///
/// The support is computed once on `x` and mapped through `p`, which keeps
/// the answer deterministic when magnitudes tie.
pub fn is_acceptable(x: &Signal2D, s: usize, p: &PermutationMap) -> Result<bool> {
    if s == 0 || s > x.len() {
        return domain(format!("s = {s} must lie in 1..={}", x.len()));
    }
    let (_, support) = best_s_term(x, s)?;
    let before = sparsity_vector(&support).chebyshev();
    let after = sparsity_vector(&p.apply_support(&support)?).chebyshev();
    Ok(after < before)
}

/// Column counts differ by at most one.
pub fn is_optimal_sparsity(sv: &SparsityVector) -> bool {
    sv.chebyshev() - sv.min() <= 1
}

/// A permutation spreading the support evenly over the columns.
///
/// Support cells (row-major) go to the first `s` destinations in row-major
/// order, so the first `s mod N` columns receive `ceil(s/N)` cells and the
/// rest `floor(s/N)`. Remaining cells fill the remaining destinations in
/// row-major order.
pub fn construct_optimal_permutation(support: &SupportSet) -> PermutationMap {
    let (rows, cols) = support.shape();
    let scan: Vec<Cell> = support
        .iter()
        .chain(
            (1..=rows)
                .flat_map(|i| (1..=cols).map(move |j| Cell::new(i, j)))
                .filter(|c| !support.contains(*c)),
        )
        .collect();
    PermutationMap::from_scan(rows, cols, &scan, OPTIMAL_TAG)
        .expect("support plus complement covers the grid")
}
