//! Binary netpbm (P5 gray / P6 RGB, maxval 255) and float image planes.
//!
//! Pixel values are kept on the `[0, 255]` scale as `f64`. Writing rounds half
//! away from zero and clamps, so integer-valued planes round-trip exactly.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// One `height × width` matrix per channel (1 for gray, 3 for RGB).
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlanes {
    width: usize,
    height: usize,
    planes: Vec<DenseMatrix>,
}

impl ImagePlanes {
    pub fn new(planes: Vec<DenseMatrix>) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::domain("an image needs at least one channel"))?;
        let (height, width) = first.shape();
        if height == 0 || width == 0 {
            return Err(Error::domain("image dimensions must be positive"));
        }
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::domain(format!(
                "expected 1 or 3 channels, got {}",
                planes.len()
            )));
        }
        if planes.iter().any(|p| p.shape() != (height, width)) {
            return Err(Error::domain(
                "all channel planes must have the same dimensions",
            ));
        }
        if planes.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::domain("image planes must be finite"));
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn gray(plane: DenseMatrix) -> Result<Self> {
        Self::new(vec![plane])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn planes(&self) -> &[DenseMatrix] {
        &self.planes
    }

    pub fn plane(&self, c: usize) -> &DenseMatrix {
        &self.planes[c]
    }
}

pub fn split_channels(img: &ImagePlanes) -> Vec<DenseMatrix> {
    img.planes.clone()
}

pub fn merge_channels(planes: Vec<DenseMatrix>) -> Result<ImagePlanes> {
    ImagePlanes::new(planes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(start, format!("{what} is too large")))
    }
}

/// Parses a binary PGM (`P5`) or PPM (`P6`) image with maxval 255.
pub fn read_pnm(bytes: &[u8]) -> Result<ImagePlanes> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some([b'P', d]) if (b'1'..=b'7').contains(d) => {
            return Err(Error::parse(
                0,
                format!("unsupported netpbm variant P{}", *d as char),
            ))
        }
        _ => return Err(Error::parse(0, "not a binary PGM/PPM file")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_whitespace_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(maxval_at, "image dimensions must be positive"));
    }
    if maxval != 255 {
        return Err(Error::parse(
            maxval_at,
            format!("only maxval 255 is supported, got {maxval}"),
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::parse(cur.pos, "missing whitespace after maxval")),
    }
    let payload = &bytes[cur.pos..];
    let needed = width * height * channels;
    if payload.len() < needed {
        return Err(Error::parse(
            cur.pos + payload.len(),
            format!(
                "truncated raster: expected {needed} bytes, found {}",
                payload.len()
            ),
        ));
    }
    let planes = (0..channels)
        .map(|c| {
            DenseMatrix::from_fn(height, width, |i, j| {
                payload[(i * width + j) * channels + c] as f64
            })
        })
        .collect();
    ImagePlanes::new(planes)
}

/// Round half away from zero, then clamp to a byte.
pub fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Encodes with the canonical header `P5\n<w> <h>\n255\n` (or `P6`).
pub fn write_pnm(img: &ImagePlanes) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.width * img.height * img.channels());
    for i in 0..img.height {
        for j in 0..img.width {
            for p in &img.planes {
                out.push(to_byte(p[(i, j)]));
            }
        }
    }
    out
}

/// Linear map of `[0, max]` onto `[0, 255]` for display. An all-zero matrix stays black.
pub fn heatmap(values: &DenseMatrix) -> Result<ImagePlanes> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    ImagePlanes::gray(values.map(|v| (v.max(0.0) * scale).min(255.0)))
}
