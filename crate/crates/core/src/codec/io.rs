//! File formats: binary PGM images, planar YUV 4:2:0 video and measurement
//! files.
//!
//! A measurement file is one ASCII header line
//!
//! ```text
//! PCSM1 M=144 N=176 K=115 seed=7 perm=zigzag frame=1 kind=reference
//! ```
//!
//! followed by the `K x N` measurement matrix as row-major little-endian
//! `f64`. `seed=none` marks measurements taken with a caller-supplied matrix.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{FrameCode, FrameKind, PIXEL_MAX};
use crate::error::{Error, Result};
use crate::sensing::MeasurementBatch;
use crate::signal::Signal2D;

pub const QCIF_WIDTH: usize = 176;
pub const QCIF_HEIGHT: usize = 144;

const MEASUREMENT_MAGIC: &str = "PCSM1";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

/// Parses a binary (P5) 8-bit PGM image.
pub fn parse_pgm(bytes: &[u8]) -> Result<Signal2D> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return format_err("truncated PGM header");
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return format_err("not a binary PGM (P5) file");
    }
    let mut number = |what: &str| -> Result<usize> {
        token()?
            .parse()
            .map_err(|_| Error::Format(format!("bad PGM {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return format_err("PGM with zero size");
    }
    if maxval == 0 || maxval > 255 {
        return format_err(format!("only 8-bit PGM is supported (maxval {maxval})"));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let n = width * height;
    if bytes.len() < start + n {
        return format_err(format!("PGM raster holds {} of {n} pixels", bytes.len().saturating_sub(start)));
    }
    let scale = PIXEL_MAX / maxval as f64;
    let data = bytes[start..start + n].iter().map(|&b| b as f64 * scale).collect();
    Signal2D::from_row_major(height, width, data)
}

pub fn read_pgm(path: &Path) -> Result<Signal2D> {
    parse_pgm(&fs::read(path)?)
}

/// Encodes a signal as an 8-bit P5 PGM, rounding and clamping each pixel.
pub fn encode_pgm(x: &Signal2D) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", x.cols(), x.rows()).into_bytes();
    out.extend(x.as_slice().iter().map(|v| v.round().clamp(0.0, PIXEL_MAX) as u8));
    out
}

pub fn write_pgm(path: &Path, x: &Signal2D) -> Result<()> {
    Ok(fs::write(path, encode_pgm(x))?)
}

/// Bytes of one planar 4:2:0 frame.
pub fn yuv420_frame_bytes(width: usize, height: usize) -> usize {
    width * height + 2 * width.div_ceil(2) * height.div_ceil(2)
}

/// Reads the luma planes of up to `max_frames` frames of planar YUV 4:2:0
/// video, skipping chroma.
pub fn parse_yuv420_luma(
    bytes: &[u8],
    width: usize,
    height: usize,
    max_frames: Option<usize>,
) -> Result<Vec<Signal2D>> {
    if width == 0 || height == 0 {
        return format_err("zero frame size");
    }
    if bytes.is_empty() {
        return format_err("empty video file");
    }
    let frame_bytes = yuv420_frame_bytes(width, height);
    let available = bytes.len().div_ceil(frame_bytes);
    let count = max_frames.map_or(available, |m| m.min(available));
    let mut frames = Vec::with_capacity(count);
    for f in 0..count {
        let start = f * frame_bytes;
        if bytes.len() < start + frame_bytes {
            return format_err(format!(
                "frame {} is truncated: {} of {frame_bytes} bytes",
                f + 1,
                bytes.len() - start
            ));
        }
        let luma = bytes[start..start + width * height].iter().map(|&b| b as f64).collect();
        frames.push(Signal2D::from_row_major(height, width, luma)?);
    }
    Ok(frames)
}

pub fn read_yuv420_luma(path: &Path, width: usize, height: usize, max_frames: Option<usize>) -> Result<Vec<Signal2D>> {
    parse_yuv420_luma(&fs::read(path)?, width, height, max_frames)
}

/// Encodes luma frames as planar YUV 4:2:0 with neutral chroma.
pub fn encode_yuv420(frames: &[Signal2D]) -> Vec<u8> {
    let mut out = Vec::new();
    for f in frames {
        out.extend(f.as_slice().iter().map(|v| v.round().clamp(0.0, PIXEL_MAX) as u8));
        let chroma = 2 * f.cols().div_ceil(2) * f.rows().div_ceil(2);
        out.extend(std::iter::repeat_n(128u8, chroma));
    }
    out
}

/// Serialises a frame code in the measurement file format.
pub fn write_measurements(mut w: impl Write, code: &FrameCode) -> Result<()> {
    let b = &code.batch;
    let seed = b.sensing_seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
    if b.perm_tag.chars().any(char::is_whitespace) {
        return format_err("permutation tag contains whitespace");
    }
    writeln!(
        w,
        "{MEASUREMENT_MAGIC} M={} N={} K={} seed={seed} perm={} frame={} kind={}",
        b.signal_rows(),
        code.cols,
        b.k(),
        b.perm_tag,
        code.index,
        code.kind.name()
    )?;
    let mut raw = Vec::with_capacity(8 * b.k() * b.n());
    for v in b.to_row_major() {
        raw.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&raw)?;
    Ok(())
}

pub fn encode_measurements(code: &FrameCode) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_measurements(&mut out, code)?;
    Ok(out)
}

/// Parses a measurement file.
pub fn read_measurements(mut r: impl Read) -> Result<FrameCode> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let Some(nl) = bytes.iter().position(|&b| b == b'\n') else {
        return format_err("measurement file has no header line");
    };
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some(MEASUREMENT_MAGIC) {
        return format_err("not a measurement file");
    }
    let mut get = |key: &str| -> Result<String> {
        match fields.next().and_then(|f| f.strip_prefix(key)?.strip_prefix('=')) {
            Some(v) => Ok(v.to_owned()),
            None => format_err(format!("header field `{key}` missing or out of order")),
        }
    };
    let parse = |key: &str, v: String| -> Result<usize> {
        v.parse().map_err(|_| Error::Format(format!("bad header value {key}={v}")))
    };
    let m = parse("M", get("M")?)?;
    let n = parse("N", get("N")?)?;
    let k = parse("K", get("K")?)?;
    let seed = match get("seed")?.as_str() {
        "none" => None,
        s => Some(s.parse().map_err(|_| Error::Format(format!("bad seed `{s}`")))?),
    };
    let perm = get("perm")?;
    let index = parse("frame", get("frame")?)?;
    let kind_name = get("kind")?;
    let kind = FrameKind::from_name(&kind_name).ok_or_else(|| Error::Format(format!("unknown frame kind `{kind_name}`")))?;

    let body = &bytes[nl + 1..];
    if body.len() != 8 * k * n {
        return format_err(format!("expected {} data bytes, found {}", 8 * k * n, body.len()));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let columns = (0..n).map(|j| (0..k).map(|r| values[r * n + j]).collect()).collect();
    Ok(FrameCode {
        batch: MeasurementBatch::from_columns(m, columns, seed, perm)?,
        cols: n,
        index,
        kind,
    })
}
