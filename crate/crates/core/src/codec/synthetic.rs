//! Synthetic test images and video.

use super::{idct2, PIXEL_MAX};
use crate::error::{domain, Result};
use crate::layermodel::{sample_support, LayerModelParams};
use crate::rng::Stream;
use crate::signal::{Cell, Signal2D};

/// Largest pixel excursion of the AC part around mid-grey.
const AC_SWING: f64 = 127.0;

/// Image whose DCT spectrum is exactly sparse: a DC term for mid-grey plus
/// random-sign coefficients on a support drawn from the layer model.
///
/// The support comes from stream 0 of `seed` (as [`sample_support`]) and
/// the amplitudes from stream 1. The AC part is scaled so every pixel lies
/// in `[1, 255]`.
pub fn layer_model_spectrum(params: &LayerModelParams, seed: u64) -> Signal2D {
    let (rows, cols) = (params.rows, params.cols);
    let support = sample_support(params, seed);
    let mut rng = Stream::new(seed, 1);
    let mut ac = Signal2D::zeros(rows, cols);
    for c in support.iter() {
        let magnitude = 0.25 + rng.uniform();
        let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
        if c != Cell::new(1, 1) {
            ac.set(c.row, c.col, sign * magnitude);
        }
    }
    let peak = idct2(&ac).max_abs();
    let scale = if peak > 0.0 { AC_SWING / peak } else { 0.0 };
    let mut spectrum = ac.map(|v| v * scale).expect("finite spectrum");
    spectrum.set(1, 1, 128.0 * ((rows * cols) as f64).sqrt());
    spectrum
}

pub fn layer_model_image(params: &LayerModelParams, seed: u64) -> Signal2D {
    idct2(&layer_model_spectrum(params, seed)).map(|v| v.clamp(0.0, PIXEL_MAX)).expect("finite image")
}

/// Smooth scene of soft blobs over a gradient, translated horizontally by
/// `velocity` pixels per frame. Frame indices start at 1.
pub fn smooth_scene(rows: usize, cols: usize, index: usize, velocity: f64, seed: u64) -> Result<Signal2D> {
    if rows == 0 || cols == 0 || index == 0 {
        return domain("scene needs a positive size and a 1-based frame index");
    }
    let mut rng = Stream::new(seed, 0);
    let blobs: Vec<[f64; 4]> = (0..6)
        .map(|_| {
            [
                rng.uniform() * rows as f64,
                rng.uniform() * cols as f64,
                (0.08 + 0.12 * rng.uniform()) * rows.min(cols) as f64,
                (rng.uniform() - 0.5) * 160.0,
            ]
        })
        .collect();
    let shift = velocity * (index - 1) as f64;
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let (y, x) = (i as f64, j as f64 - shift);
            let mut v = 90.0 + 60.0 * y / rows as f64 + 30.0 * (x / cols as f64);
            for &[cy, cx, width, amp] in &blobs {
                let d2 = (y - cy).powi(2) + (x - cx).powi(2);
                v += amp * (-d2 / (2.0 * width * width)).exp();
            }
            data.push(v.clamp(0.0, PIXEL_MAX));
        }
    }
    Signal2D::from_row_major(rows, cols, data)
}
