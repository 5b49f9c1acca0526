//! Gaussian sensing matrices and column-parallel sampling `Y = A X`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::rng::Stream;
use crate::signal::Signal2D;

/// `K x M` sensing matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingMatrix {
    k: usize,
    m: usize,
    entries: Vec<f64>,
    seed: Option<u64>,
}

impl SensingMatrix {
    /// Wraps explicit entries. Matrices built this way carry no seed and
    /// cannot be regenerated from a measurement file.
    pub fn from_entries(k: usize, m: usize, entries: Vec<f64>) -> Result<Self> {
        if k == 0 || m == 0 || entries.len() != k * m {
            return domain(format!("{} entries for a {k}x{m} sensing matrix", entries.len()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return domain("non-finite sensing matrix entry");
        }
        Ok(Self {
            k,
            m,
            entries,
            seed: None,
        })
    }

    pub fn identity(m: usize) -> Self {
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            entries[i * m + i] = 1.0;
        }
        Self {
            k: m,
            m,
            entries,
            seed: None,
        }
    }

    /// Number of measurements per column.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Length of each sampled column.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.m..(r + 1) * self.m]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.m + c]
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.m);
        self.entries
            .chunks_exact(self.m)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A^T v`.
    pub fn mul_transpose_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.k);
        let mut out = vec![0.0; self.m];
        for (row, &vr) in self.entries.chunks_exact(self.m).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vr;
            }
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.k, self.m, &self.entries)
    }

    /// Euclidean norm of column `c`.
    pub fn column_norm(&self, c: usize) -> f64 {
        (0..self.k).map(|r| self.get(r, c).powi(2)).sum::<f64>().sqrt()
    }
}

/// `K x M` matrix of i.i.d. `N(0, 1/K)` entries, filled row-major from
/// stream 0 of `seed`.
pub fn gaussian_sensing(k: usize, m: usize, seed: u64) -> Result<SensingMatrix> {
    if k == 0 || k > m {
        return domain(format!("measurement count {k} must lie in 1..={m}"));
    }
    let mut rng = Stream::new(seed, 0);
    let scale = 1.0 / (k as f64).sqrt();
    let entries = (0..k * m).map(|_| rng.gaussian() * scale).collect();
    Ok(SensingMatrix {
        k,
        m,
        entries,
        seed: Some(seed),
    })
}

/// Measurements of the `N` columns of a signal, one length-`K` vector each.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBatch {
    k: usize,
    signal_rows: usize,
    /// Column-major: column `j` occupies `[j K, (j + 1) K)`.
    data: Vec<f64>,
    n: usize,
    pub sensing_seed: Option<u64>,
    pub perm_tag: String,
}

impl MeasurementBatch {
    /// Builds a batch from measurement columns of equal length.
    pub fn from_columns(
        signal_rows: usize,
        columns: Vec<Vec<f64>>,
        sensing_seed: Option<u64>,
        perm_tag: impl Into<String>,
    ) -> Result<Self> {
        let k = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || k == 0 || columns.iter().any(|c| c.len() != k) {
            return domain("measurement columns must be non-empty and of equal length");
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return domain("non-finite measurement");
        }
        Ok(Self {
            k,
            signal_rows,
            n: columns.len(),
            data: columns.concat(),
            sensing_seed,
            perm_tag: perm_tag.into(),
        })
    }

    /// Measurements per column.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of columns.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Height `M` of the sampled signal.
    pub fn signal_rows(&self) -> usize {
        self.signal_rows
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.k..(j + 1) * self.k]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }

    /// Entry `(r, j)` of the `K x N` measurement matrix, 0-based.
    pub fn get(&self, r: usize, j: usize) -> f64 {
        self.data[j * self.k + r]
    }

    /// The `K x N` measurement matrix in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        (0..self.k)
            .flat_map(|r| (0..self.n).map(move |j| (r, j)))
            .map(|(r, j)| self.get(r, j))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

/// Samples every column of `x` with the same matrix: `y_j = A x_j`.
pub fn sample_parallel(a: &SensingMatrix, x: &Signal2D, perm_tag: &str) -> Result<MeasurementBatch> {
    if a.m() != x.rows() {
        return Err(Error::ShapeMismatch {
            expected: (a.m(), x.cols()),
            found: x.shape(),
        });
    }
    let columns: Vec<Vec<f64>> = (1..=x.cols())
        .into_par_iter()
        .map(|j| a.mul_vec(&x.column(j)))
        .collect();
    MeasurementBatch::from_columns(x.rows(), columns, a.seed(), perm_tag)
}

/// Measurement count `ceil(c s ln(m / s))` sufficient for Gaussian matrices
/// to satisfy the restricted isometry property of order `s`, clamped to
/// `[1, m]`.
pub fn required_k(s_inf: usize, m: usize, c: f64) -> Result<usize> {
    if s_inf == 0 || s_inf >= m {
        return domain(format!("sparsity {s_inf} must lie in 1..{m}"));
    }
    if !(c > 0.0) {
        return domain(format!("constant {c} must be positive"));
    }
    let k = (c * s_inf as f64 * (m as f64 / s_inf as f64).ln()).ceil();
    Ok((k.max(1.0) as usize).min(m))
}

/// Largest supported signal length for [`restricted_isometry_constant`].
pub const RIP_MAX_M: usize = 14;
/// Largest supported order for [`restricted_isometry_constant`].
pub const RIP_MAX_S: usize = 4;

/// Restricted isometry constant `delta_s`, by brute force over every
/// `s`-column submatrix.
pub fn restricted_isometry_constant(a: &SensingMatrix, s: usize) -> Result<f64> {
    if a.m() > RIP_MAX_M || s > RIP_MAX_S || s == 0 || s > a.m() {
        return domain(format!(
            "brute-force RIP needs m <= {RIP_MAX_M} and 1 <= s <= min({RIP_MAX_S}, m); got m = {}, s = {s}",
            a.m()
        ));
    }
    let full = a.to_dmatrix();
    let gram = full.transpose() * &full;
    let mut delta: f64 = 0.0;
    for subset in combinations(a.m(), s) {
        let sub = DMatrix::from_fn(s, s, |r, c| gram[(subset[r], subset[c])]);
        let eig = SymmetricEigen::new(sub).eigenvalues;
        let hi = eig.max();
        let lo = eig.min();
        delta = delta.max(hi - 1.0).max(1.0 - lo);
    }
    Ok(delta)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for t in i..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation() {
        let a = gaussian_sensing(20, 50, 9).unwrap();
        assert_eq!(a, gaussian_sensing(20, 50, 9).unwrap());
        assert_ne!(a, gaussian_sensing(20, 50, 10).unwrap());
        assert_eq!(a.seed(), Some(9));
        assert!(gaussian_sensing(51, 50, 1).is_err());
        assert!(gaussian_sensing(0, 50, 1).is_err());
    }

    #[test]
    fn entry_statistics() {
        let (k, m) = (100, 400);
        let a = gaussian_sensing(k, m, 1234).unwrap();
        let n = (k * m) as f64;
        let mean = a.entries().iter().sum::<f64>() / n;
        let var = a.entries().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sigma = (1.0 / k as f64).sqrt();
        assert!(mean.abs() <= 4.0 * sigma / n.sqrt());
        assert!((var * k as f64 - 1.0).abs() < 0.1);
        for c in 0..m {
            assert!((a.column_norm(c) - 1.0).abs() < 0.5);
        }
    }

    #[test]
    fn sampling_examples() {
        let a = gaussian_sensing(5, 8, 3).unwrap();
        let zero = sample_parallel(&a, &Signal2D::zeros(8, 4), "identity").unwrap();
        assert!(zero.is_zero());
        assert_eq!((zero.k(), zero.n()), (5, 4));

        let mut rng = Stream::new(2, 0);
        let x = Signal2D::from_row_major(6, 3, (0..18).map(|_| rng.gaussian()).collect()).unwrap();
        let y = sample_parallel(&SensingMatrix::identity(6), &x, "identity").unwrap();
        for j in 0..3 {
            assert_eq!(y.column(j), x.column(j + 1).as_slice());
        }
        assert!(sample_parallel(&a, &x, "identity").is_err());
    }

    #[test]
    fn sampling_is_linear_and_matches_triple_loop() {
        let a = gaussian_sensing(7, 10, 5).unwrap();
        let mut rng = Stream::new(8, 0);
        let x1 = Signal2D::from_row_major(10, 6, (0..60).map(|_| rng.gaussian()).collect()).unwrap();
        let x2 = Signal2D::from_row_major(10, 6, (0..60).map(|_| rng.gaussian()).collect()).unwrap();
        let y1 = sample_parallel(&a, &x1, "t").unwrap();
        let y2 = sample_parallel(&a, &x2, "t").unwrap();
        let y12 = sample_parallel(&a, &(&x1 + &x2), "t").unwrap();
        for r in 0..7 {
            for j in 0..6 {
                assert!((y12.get(r, j) - y1.get(r, j) - y2.get(r, j)).abs() < 1e-12);
                let mut acc = 0.0;
                for i in 0..10 {
                    acc += a.get(r, i) * x1.get(i + 1, j + 1);
                }
                assert!((acc - y1.get(r, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn required_k_examples() {
        assert_eq!(required_k(4, 256, 4.0).unwrap(), 67);
        assert!(required_k(1, 3, 1.0).unwrap() >= 1);
        let mut prev = 0;
        for s in 1..=94 {
            let k = required_k(s, 256, 1.0).unwrap();
            assert!(k >= prev);
            prev = k;
        }
        for s in 1..100 {
            assert!(required_k(s, 100, 50.0).unwrap() <= 100);
        }
        assert!(required_k(0, 10, 1.0).is_err());
        assert!(required_k(10, 10, 1.0).is_err());
    }

    #[test]
    fn rip_examples() {
        let id = SensingMatrix::identity(6);
        for s in 1..=4 {
            assert!(restricted_isometry_constant(&id, s).unwrap().abs() < 1e-12);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = SensingMatrix::from_entries(1, 2, vec![h, h]).unwrap();
        assert!((restricted_isometry_constant(&a, 1).unwrap() - 0.5).abs() < 1e-12);

        for seed in 0..5 {
            let a = gaussian_sensing(6, 10, seed).unwrap();
            let d: Vec<f64> = (1..=4).map(|s| restricted_isometry_constant(&a, s).unwrap()).collect();
            assert!(d.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{d:?}");
        }
        assert!(restricted_isometry_constant(&gaussian_sensing(6, 15, 0).unwrap(), 2).is_err());
        assert!(restricted_isometry_constant(&id, 5).is_err());
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(14, 4).len(), 1001);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }
}
