//! Binary netpbm I/O: 8-bit PGM (P5) and PPM (P6) with maxval 255, the
//! toolkit's bit-exact interchange formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sodkit::edt::BinaryMask;
use sodkit::loss::PredictionMap;
use sodkit::tensor::Tensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl PnmError {
    fn format(path: &Path, reason: impl Into<String>) -> Self {
        PnmError::Format {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    /// Interleaved r, g, b.
    pub pixels: Vec<u8>,
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn read_uint(&mut self) -> Option<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

/// Parse a P5/P6 header; returns (width, height, raster offset).
fn parse_header(bytes: &[u8], magic: &[u8; 2], path: &Path) -> Result<(usize, usize, usize), PnmError> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(PnmError::format(
            path,
            format!(
                "expected magic {:?}, this is not a binary {} file",
                std::str::from_utf8(magic).unwrap(),
                if magic == b"P5" { "PGM" } else { "PPM" }
            ),
        ));
    }
    let mut scanner = Scanner { bytes, pos: 2 };
    let width = scanner
        .read_uint()
        .ok_or_else(|| PnmError::format(path, "missing or malformed width"))?;
    let height = scanner
        .read_uint()
        .ok_or_else(|| PnmError::format(path, "missing or malformed height"))?;
    let maxval = scanner
        .read_uint()
        .ok_or_else(|| PnmError::format(path, "missing or malformed maxval"))?;
    if width == 0 || height == 0 {
        return Err(PnmError::format(path, "zero image dimension"));
    }
    if maxval != 255 {
        return Err(PnmError::format(
            path,
            format!("maxval must be 255, got {maxval}"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if scanner.pos >= bytes.len() || !bytes[scanner.pos].is_ascii_whitespace() {
        return Err(PnmError::format(path, "missing whitespace before raster"));
    }
    Ok((width, height, scanner.pos + 1))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, PnmError> {
    let bytes = fs::read(path).map_err(|source| PnmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (width, height, offset) = parse_header(&bytes, b"P5", path)?;
    let raster = &bytes[offset..];
    if raster.len() != width * height {
        return Err(PnmError::format(
            path,
            format!(
                "raster holds {} bytes, expected {} for {width}x{height}",
                raster.len(),
                width * height
            ),
        ));
    }
    Ok(GrayImage {
        height,
        width,
        pixels: raster.to_vec(),
    })
}

pub fn read_ppm(path: &Path) -> Result<RgbImage, PnmError> {
    let bytes = fs::read(path).map_err(|source| PnmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (width, height, offset) = parse_header(&bytes, b"P6", path)?;
    let raster = &bytes[offset..];
    if raster.len() != 3 * width * height {
        return Err(PnmError::format(
            path,
            format!(
                "raster holds {} bytes, expected {} for {width}x{height} RGB",
                raster.len(),
                3 * width * height
            ),
        ));
    }
    Ok(RgbImage {
        height,
        width,
        pixels: raster.to_vec(),
    })
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<(), PnmError> {
    let mut out = Vec::with_capacity(32 + image.pixels.len());
    write!(out, "P5\n{} {}\n255\n", image.width, image.height).expect("writing to a Vec");
    out.extend_from_slice(&image.pixels);
    fs::write(path, out).map_err(|source| PnmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Interpret gray levels as probabilities `v / 255`.
pub fn to_prediction(image: &GrayImage) -> PredictionMap {
    let values = image.pixels.iter().map(|&v| v as f64 / 255.0).collect();
    PredictionMap::new(image.height, image.width, values)
        .expect("byte / 255 always lies in [0, 1]")
}

/// Binarize gray levels at 128: `v >= 128` marks foreground.
pub fn to_binary_mask(image: &GrayImage) -> BinaryMask {
    let pixels = image.pixels.iter().map(|&v| (v >= 128) as u8).collect();
    BinaryMask::new(image.height, image.width, pixels).expect("dimensions carried over")
}

/// Quantize values in `[0, 1]` to gray levels `round(255 * v)`.
pub fn from_values(height: usize, width: usize, values: &[f64]) -> GrayImage {
    let pixels = values.iter().map(|&v| (255.0 * v).round() as u8).collect();
    GrayImage {
        height,
        width,
        pixels,
    }
}

/// RGB bytes to a `(3, H, W)` tensor scaled to `[0, 1]`.
pub fn to_tensor(image: &RgbImage) -> Tensor {
    let plane = image.height * image.width;
    let mut data = vec![0.0f32; 3 * plane];
    for i in 0..plane {
        for c in 0..3 {
            data[c * plane + i] = image.pixels[3 * i + c] as f32 / 255.0;
        }
    }
    Tensor::new(3, image.height, image.width, data).expect("sized by construction")
}
