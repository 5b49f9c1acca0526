//! Image and video coding with permuted parallel sampling.
//!
//! Reference frames are transformed with a 2D DCT, permuted by the zigzag
//! map and sampled column by column. Non-reference frames are sampled as the
//! unpermuted pixel difference to the preceding reference frame. The decoder
//! mirrors both paths and only needs the measurement files: the sensing
//! matrix is regenerated from the recorded seed.

mod dct;
pub mod io;
pub mod synthetic;

pub use dct::{dct2, idct2};

use crate::error::{domain, Error, Result};
use crate::permute::{zigzag_permutation, PermutationMap, IDENTITY_TAG, ZIGZAG_TAG};
use crate::recon::{reconstruct_2d, reconstruct_parallel, SolveStatus, SolverOptions};
use crate::sensing::{gaussian_sensing, sample_parallel, MeasurementBatch, SensingMatrix};
use crate::signal::Signal2D;

pub const PIXEL_MAX: f64 = 255.0;

/// Default reference to non-reference measurement split.
pub const DEFAULT_SPLIT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Reference,
    NonReference,
}

impl FrameKind {
    /// Odd (1-based) frame indices are reference frames.
    pub fn of_index(index: usize) -> Self {
        if index % 2 == 1 {
            Self::Reference
        } else {
            Self::NonReference
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Reference => "reference",
            Self::NonReference => "non-reference",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "reference" => Some(Self::Reference),
            "non-reference" => Some(Self::NonReference),
            _ => None,
        }
    }
}

/// A luminance frame with pixels in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    luminance: Signal2D,
    index: usize,
}

impl Frame {
    pub fn new(luminance: Signal2D, index: usize) -> Result<Self> {
        if index == 0 {
            return domain("frame indices start at 1");
        }
        if luminance.is_empty() {
            return domain("empty frame");
        }
        if luminance.as_slice().iter().any(|v| !(0.0..=PIXEL_MAX).contains(v)) {
            return domain("pixel outside [0, 255]");
        }
        Ok(Self { luminance, index })
    }

    /// Builds a frame after clamping every pixel into `[0, 255]`.
    pub fn clamped(luminance: &Signal2D, index: usize) -> Result<Self> {
        Self::new(luminance.map(|v| v.clamp(0.0, PIXEL_MAX))?, index)
    }

    pub fn luminance(&self) -> &Signal2D {
        &self.luminance
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn kind(&self) -> FrameKind {
        FrameKind::of_index(self.index)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.luminance.shape()
    }
}

/// Measurements of one frame plus what the decoder needs to interpret them.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameCode {
    pub batch: MeasurementBatch,
    /// Width `N` of the coded frame.
    pub cols: usize,
    pub index: usize,
    pub kind: FrameKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FramePairCode {
    pub reference: FrameCode,
    pub nonreference: FrameCode,
    pub ratios: (f64, f64),
}

/// Splits an average measurement ratio between a reference frame and the
/// following non-reference frame so that `r_ref = split * r_nonref` and the
/// pair averages `avg_ratio`.
pub fn allocate_ratios(avg_ratio: f64, split: f64) -> Result<(f64, f64)> {
    if !(avg_ratio > 0.0 && avg_ratio <= 1.0) {
        return domain(format!("average ratio {avg_ratio} outside (0, 1]"));
    }
    if !(split > 0.0 && split.is_finite()) {
        return domain(format!("split {split} must be positive"));
    }
    let r_nonref = 2.0 * avg_ratio / (split + 1.0);
    let r_ref = split * r_nonref;
    if r_ref > 1.0 || r_nonref > 1.0 {
        return domain(format!(
            "average ratio {avg_ratio} with split {split} needs a ratio above 1"
        ));
    }
    Ok((r_ref, r_nonref))
}

/// Measurements per column for a ratio: `ratio * m` rounded half up, at
/// least 1.
pub fn measurement_count(ratio: f64, m: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return domain(format!("ratio {ratio} outside (0, 1]"));
    }
    Ok(((ratio * m as f64 + 0.5).floor() as usize).clamp(1, m))
}

/// Coefficient ordering applied before sampling a reference frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scan {
    Zigzag,
    Identity,
}

impl Scan {
    pub fn permutation(self, rows: usize, cols: usize) -> PermutationMap {
        match self {
            Self::Zigzag => zigzag_permutation(rows, cols),
            Self::Identity => PermutationMap::identity(rows, cols),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            ZIGZAG_TAG => Ok(Self::Zigzag),
            IDENTITY_TAG => Ok(Self::Identity),
            other => Err(Error::Format(format!("unsupported permutation tag `{other}`"))),
        }
    }
}

/// Samples the permuted DCT of a frame with a given matrix.
pub fn encode_reference_with(f: &Frame, a: &SensingMatrix, scan: Scan) -> Result<FrameCode> {
    let (rows, cols) = f.shape();
    let p = scan.permutation(rows, cols);
    let coeffs = p.apply(&dct2(f.luminance()))?;
    Ok(FrameCode {
        batch: sample_parallel(a, &coeffs, p.tag())?,
        cols,
        index: f.index(),
        kind: FrameKind::Reference,
    })
}

/// Reference-frame encoder: DCT, zigzag permutation, parallel sampling with
/// a Gaussian matrix drawn from `seed`.
pub fn encode_reference(f: &Frame, ratio: f64, seed: u64) -> Result<FrameCode> {
    encode_image(f, ratio, seed, Scan::Zigzag)
}

/// Reference-style encoder with a selectable coefficient scan.
pub fn encode_image(f: &Frame, ratio: f64, seed: u64, scan: Scan) -> Result<FrameCode> {
    let m = f.shape().0;
    let a = gaussian_sensing(measurement_count(ratio, m)?, m, seed)?;
    encode_reference_with(f, &a, scan)
}

pub fn encode_nonreference_with(f: &Frame, preceding_ref: &Frame, a: &SensingMatrix) -> Result<FrameCode> {
    let diff = f.luminance().try_sub(preceding_ref.luminance())?;
    Ok(FrameCode {
        batch: sample_parallel(a, &diff, IDENTITY_TAG)?,
        cols: diff.cols(),
        index: f.index(),
        kind: FrameKind::NonReference,
    })
}

/// Non-reference encoder: unpermuted sampling of the pixel difference to the
/// preceding reference frame.
pub fn encode_nonreference(f: &Frame, preceding_ref: &Frame, ratio: f64, seed: u64) -> Result<FrameCode> {
    preceding_ref.luminance().ensure_shape(f.shape())?;
    let m = f.shape().0;
    let a = gaussian_sensing(measurement_count(ratio, m)?, m, seed)?;
    encode_nonreference_with(f, preceding_ref, &a)
}

/// Encodes a reference/non-reference pair. The non-reference matrix uses
/// seed `seed + 1`.
pub fn encode_pair(
    reference: &Frame,
    nonreference: &Frame,
    avg_ratio: f64,
    split: f64,
    seed: u64,
) -> Result<FramePairCode> {
    let ratios = allocate_ratios(avg_ratio, split)?;
    Ok(FramePairCode {
        reference: encode_reference(reference, ratios.0, seed)?,
        nonreference: encode_nonreference(nonreference, reference, ratios.1, seed.wrapping_add(1))?,
        ratios,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodedFrame {
    pub frame: Frame,
    /// Solver status of every reconstructed column.
    pub statuses: Vec<SolveStatus>,
}

impl DecodedFrame {
    pub fn all_converged(&self) -> bool {
        self.statuses.iter().all(|s| s.is_converged())
    }
}

fn regenerate_matrix(code: &FrameCode) -> Result<SensingMatrix> {
    let seed = code
        .batch
        .sensing_seed
        .ok_or_else(|| Error::Format("measurements carry no sensing seed".into()))?;
    gaussian_sensing(code.batch.k(), code.batch.signal_rows(), seed)
}

fn check_code(code: &FrameCode, kind: FrameKind) -> Result<()> {
    if code.kind != kind {
        return domain(format!("expected a {} frame, got {}", kind.name(), code.kind.name()));
    }
    if code.batch.n() != code.cols {
        return Err(Error::Format(format!(
            "{} measurement columns for a frame of width {}",
            code.batch.n(),
            code.cols
        )));
    }
    Ok(())
}

pub fn decode_reference_with(
    code: &FrameCode,
    a: &SensingMatrix,
    opts: &SolverOptions,
    workers: usize,
) -> Result<DecodedFrame> {
    check_code(code, FrameKind::Reference)?;
    let scan = Scan::from_tag(&code.batch.perm_tag)?;
    let p = scan.permutation(code.batch.signal_rows(), code.cols);
    let rec = reconstruct_2d(a, &code.batch, &p, opts, workers)?;
    Ok(DecodedFrame {
        frame: Frame::clamped(&idct2(&rec.signal), code.index)?,
        statuses: rec.statuses,
    })
}

/// Reference-frame decoder: parallel reconstruction, inverse permutation,
/// inverse DCT, clamping to the pixel range.
pub fn decode_reference(code: &FrameCode, opts: &SolverOptions, workers: usize) -> Result<DecodedFrame> {
    decode_reference_with(code, &regenerate_matrix(code)?, opts, workers)
}

pub fn decode_nonreference_with(
    code: &FrameCode,
    decoded_ref: &Frame,
    a: &SensingMatrix,
    opts: &SolverOptions,
    workers: usize,
) -> Result<DecodedFrame> {
    check_code(code, FrameKind::NonReference)?;
    if code.batch.perm_tag != IDENTITY_TAG {
        return Err(Error::TagMismatch {
            measured: code.batch.perm_tag.clone(),
            given: IDENTITY_TAG.into(),
        });
    }
    decoded_ref
        .luminance()
        .ensure_shape((code.batch.signal_rows(), code.cols))?;
    let rec = reconstruct_parallel(a, &code.batch, opts, workers)?;
    let sum = decoded_ref.luminance().try_add(&rec.signal)?;
    Ok(DecodedFrame {
        frame: Frame::clamped(&sum, code.index)?,
        statuses: rec.statuses,
    })
}

/// Non-reference decoder: reconstructed difference added to the decoded
/// reference frame, clamped.
pub fn decode_nonreference(
    code: &FrameCode,
    decoded_ref: &Frame,
    opts: &SolverOptions,
    workers: usize,
) -> Result<DecodedFrame> {
    decode_nonreference_with(code, decoded_ref, &regenerate_matrix(code)?, opts, workers)
}

/// Peak signal-to-noise ratio in dB for 8-bit frames; identical frames give
/// `f64::INFINITY`.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    psnr_signals(a.luminance(), b.luminance())
}

pub fn psnr_signals(a: &Signal2D, b: &Signal2D) -> Result<f64> {
    let diff = a.try_sub(b)?;
    if diff.is_empty() {
        return domain("PSNR of empty frames");
    }
    let mse = diff.as_slice().iter().map(|v| v * v).sum::<f64>() / diff.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PIXEL_MAX * PIXEL_MAX / mse).log10())
}
