use nalgebra::DMatrix;

use crate::signal::Signal2D;

/// Orthonormal type-II DCT matrix of size `n`: row `k` holds basis `k`.
fn dct_matrix(n: usize) -> DMatrix<f64> {
    let base = std::f64::consts::PI / (2 * n) as f64;
    DMatrix::from_fn(n, n, |k, i| {
        let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        scale * libm::cos(base * ((2 * i + 1) * k) as f64)
    })
}

fn to_matrix(x: &Signal2D) -> DMatrix<f64> {
    DMatrix::from_row_slice(x.rows(), x.cols(), x.as_slice())
}

fn from_matrix(m: &DMatrix<f64>) -> Signal2D {
    let data = m.transpose().as_slice().to_vec();
    Signal2D::from_row_major(m.nrows(), m.ncols(), data).expect("transform of a finite signal is finite")
}

/// Separable orthonormal 2D DCT-II: `C_M X C_N^T`.
pub fn dct2(x: &Signal2D) -> Signal2D {
    if x.is_empty() {
        return x.clone();
    }
    from_matrix(&(dct_matrix(x.rows()) * to_matrix(x) * dct_matrix(x.cols()).transpose()))
}

/// Inverse of [`dct2`]: `C_M^T Y C_N`.
pub fn idct2(y: &Signal2D) -> Signal2D {
    if y.is_empty() {
        return y.clone();
    }
    from_matrix(&(dct_matrix(y.rows()).transpose() * to_matrix(y) * dct_matrix(y.cols())))
}
