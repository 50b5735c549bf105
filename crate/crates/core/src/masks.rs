//! Deterministic observation-mask generators.
//!
//! Random loss removes exactly `round(ratio·m·n)` entries chosen by a seeded
//! shuffle. Blocks, triangles and diamonds are geometric occlusions; text-like
//! occlusions come from a grayscale image. Masks are exchanged as PGM files
//! with 255 = observed and 0 = missing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imageio::ImagePlanes;
use crate::matrix::{DenseMatrix, ObservationMask};

pub const DEFAULT_THRESHOLD: u8 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn new(top: usize, left: usize, height: usize, width: usize) -> Self {
        Self {
            top,
            left,
            height,
            width,
        }
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.top && i < self.top + self.height && j >= self.left && j < self.left + self.width
    }

    fn check_within(&self, m: usize, n: usize) -> Result<()> {
        if self.top + self.height > m || self.left + self.width > n {
            return Err(Error::domain(format!(
                "rectangle {self:?} exceeds a {m}x{n} matrix"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Entries on or below the anti-diagonal of the bounding box go missing.
    Triangle(Rect),
    /// Entries with `|i − c_i|/a + |j − c_j|/b ≤ 1` go missing.
    Diamond {
        center_row: usize,
        center_col: usize,
        /// Semi-axis along rows, in cells.
        a: f64,
        /// Semi-axis along columns, in cells.
        b: f64,
    },
}

impl Shape {
    pub fn covers(&self, i: usize, j: usize) -> bool {
        match *self {
            Shape::Triangle(rect) => {
                if !rect.contains(i, j) {
                    return false;
                }
                // cell centers (li + ½)/h + (lj + ½)/w ≥ 1, in integers
                let (li, lj) = (i - rect.top, j - rect.left);
                (2 * li + 1) * rect.width + (2 * lj + 1) * rect.height
                    >= 2 * rect.height * rect.width
            }
            Shape::Diamond {
                center_row,
                center_col,
                a,
                b,
            } => {
                let di = (i as f64 - center_row as f64).abs();
                let dj = (j as f64 - center_col as f64).abs();
                di / a + dj / b <= 1.0
            }
        }
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        match *self {
            Shape::Triangle(rect) => {
                if rect.height == 0 || rect.width == 0 {
                    return Err(Error::domain("triangle bounding box has zero area"));
                }
                rect.check_within(m, n)
            }
            Shape::Diamond {
                center_row,
                center_col,
                a,
                b,
            } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::domain("diamond semi-axes must be positive"));
                }
                let (ra, rb) = (a.floor() as usize, b.floor() as usize);
                if center_row < ra
                    || center_row + ra >= m
                    || center_col < rb
                    || center_col + rb >= n
                {
                    return Err(Error::domain(format!(
                        "diamond around ({center_row}, {center_col}) with semi-axes ({a}, {b}) exceeds a {m}x{n} matrix"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Everything needed to regenerate a mask.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskSpec {
    Random { missing_ratio: f64, seed: u64 },
    Blocks(Vec<Rect>),
    Shape(Shape),
    FromImage { image: ImagePlanes, threshold: u8 },
}

impl MaskSpec {
    pub fn generate(&self, m: usize, n: usize) -> Result<ObservationMask> {
        match self {
            MaskSpec::Random {
                missing_ratio,
                seed,
            } => random_mask(m, n, *missing_ratio, *seed),
            MaskSpec::Blocks(rects) => block_mask(m, n, rects),
            MaskSpec::Shape(shape) => shape_mask(m, n, shape),
            MaskSpec::FromImage { image, threshold } => {
                let mask = mask_from_image(image, *threshold)?;
                mask.check_shape(m, n, "target matrix")?;
                Ok(mask)
            }
        }
    }
}

/// Exactly `round(ratio·m·n)` missing entries, chosen by a seeded shuffle of all indices.
pub fn random_mask(m: usize, n: usize, missing_ratio: f64, seed: u64) -> Result<ObservationMask> {
    if !(0.0..=1.0).contains(&missing_ratio) {
        return Err(Error::domain(format!(
            "missing ratio must lie in [0, 1], got {missing_ratio}"
        )));
    }
    let total = m * n;
    let missing = (missing_ratio * total as f64).round() as usize;
    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut observed = vec![true; total];
    for &k in &order[..missing] {
        observed[k] = false;
    }
    ObservationMask::new(m, n, observed)
}

/// An entry is missing iff some rectangle covers it.
pub fn block_mask(m: usize, n: usize, rects: &[Rect]) -> Result<ObservationMask> {
    for r in rects {
        r.check_within(m, n)?;
    }
    Ok(ObservationMask::from_fn(m, n, |i, j| {
        !rects.iter().any(|r| r.contains(i, j))
    }))
}

pub fn shape_mask(m: usize, n: usize, shape: &Shape) -> Result<ObservationMask> {
    shape.validate(m, n)?;
    Ok(ObservationMask::from_fn(m, n, |i, j| !shape.covers(i, j)))
}

/// Observed iff the gray value is at least `threshold`.
pub fn mask_from_image(img: &ImagePlanes, threshold: u8) -> Result<ObservationMask> {
    if img.channels() != 1 {
        return Err(Error::domain(format!(
            "mask images must be single-channel, got {} channels",
            img.channels()
        )));
    }
    let plane = img.plane(0);
    let t = threshold as f64;
    Ok(ObservationMask::from_fn(
        img.height(),
        img.width(),
        |i, j| plane[(i, j)] >= t,
    ))
}

/// 255 where observed, 0 where missing.
pub fn mask_to_image(mask: &ObservationMask) -> ImagePlanes {
    let plane = DenseMatrix::from_fn(mask.rows(), mask.cols(), |i, j| {
        if mask.is_observed(i, j) {
            255.0
        } else {
            0.0
        }
    });
    ImagePlanes::gray(plane).expect("mask dimensions are positive")
}
