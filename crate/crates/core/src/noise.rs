//! Seeded corruption models for binary images.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;
use crate::types::{BinaryImage, Geometry};

/// Binarization threshold applied after adding Gaussian noise.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Axis-aligned block of pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RectRegion {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl RectRegion {
    pub fn new(row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        RectRegion {
            row0,
            col0,
            rows,
            cols,
        }
    }

    /// Top-left block covering 35/57 of each side (35x35 on a 57x57 code,
    /// 13x13 on 21x21), about 37% of the pixels.
    pub fn default_corner(g: Geometry) -> Self {
        let side = |len: usize| ((len as f64) * 35.0 / 57.0).round() as usize;
        RectRegion::new(0, 0, side(g.rows).min(g.rows), side(g.cols).min(g.cols))
    }

    pub fn whole(g: Geometry) -> Self {
        RectRegion::new(0, 0, g.rows, g.cols)
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    fn check(&self, g: Geometry) -> Result<()> {
        if self.row0 + self.rows > g.rows || self.col0 + self.cols > g.cols {
            return Err(Error::Parameter(format!(
                "region {}x{} at ({}, {}) does not fit in a {g} image",
                self.rows, self.cols, self.row0, self.col0
            )));
        }
        Ok(())
    }

    fn indices(&self, cols: usize) -> impl Iterator<Item = usize> + '_ {
        (self.row0..self.row0 + self.rows)
            .flat_map(move |r| (self.col0..self.col0 + self.cols).map(move |c| r * cols + c))
    }
}

fn check_fraction(name: &str, d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Parameter(format!(
            "{name} must lie in [0, 1], got {d}"
        )));
    }
    Ok(())
}

fn check_variance(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::Parameter(format!(
            "variance must be positive and finite, got {sigma2}"
        )));
    }
    Ok(())
}

/// Add independent `N(0, sigma2)` noise to every pixel and re-binarize at
/// 0.5. A dark pixel turns light iff its noise is below -0.5, a light pixel
/// turns dark iff its noise is at least 0.5.
pub fn gaussian_noise(img: &BinaryImage, sigma2: f64, seed: u64) -> Result<BinaryImage> {
    gaussian_noise_with_threshold(img, sigma2, DEFAULT_THRESHOLD, seed)
}

pub fn gaussian_noise_with_threshold(
    img: &BinaryImage,
    sigma2: f64,
    threshold: f64,
    seed: u64,
) -> Result<BinaryImage> {
    check_variance(sigma2)?;
    let normal = Normal::new(0.0, sigma2.sqrt())
        .map_err(|e| Error::Parameter(format!("bad variance {sigma2}: {e}")))?;
    let mut rng = seed::rng(seed);
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| u8::from(f64::from(p) + normal.sample(&mut rng) >= threshold))
        .collect();
    Ok(BinaryImage::from_parts_unchecked(
        img.rows(),
        img.cols(),
        pixels,
    ))
}

/// Expected fraction of pixels flipped by [`gaussian_noise`]:
/// `1 - Phi(0.5 / sqrt(sigma2))`.
pub fn expected_gaussian_flip_fraction(sigma2: f64) -> Result<f64> {
    check_variance(sigma2)?;
    let z = DEFAULT_THRESHOLD / sigma2.sqrt();
    // 1 - Phi(z) = erfc(z / sqrt 2) / 2
    Ok(0.5 * libm::erfc(z / std::f64::consts::SQRT_2))
}

/// Each pixel is hit with probability `d`; a hit pixel becomes 1 or 0 with
/// equal probability regardless of its old value.
pub fn salt_pepper(img: &BinaryImage, d: f64, seed: u64) -> Result<BinaryImage> {
    region_salt_pepper(img, RectRegion::whole(img.geometry()), d, seed)
}

/// [`salt_pepper`] restricted to `region`.
pub fn region_salt_pepper(
    img: &BinaryImage,
    region: RectRegion,
    d: f64,
    seed: u64,
) -> Result<BinaryImage> {
    check_fraction("salt & pepper density", d)?;
    region.check(img.geometry())?;
    let mut rng = seed::rng(seed);
    let cols = img.cols();
    let mut pixels = img.clone().into_pixels();
    for i in region.indices(cols) {
        if rng.random::<f64>() < d {
            pixels[i] = u8::from(rng.random::<bool>());
        }
    }
    Ok(BinaryImage::from_parts_unchecked(img.rows(), cols, pixels))
}

/// Force every pixel of `region` to `value`.
pub fn region_fill(img: &BinaryImage, region: RectRegion, value: u8) -> Result<BinaryImage> {
    if value > 1 {
        return Err(Error::Parameter(format!(
            "fill value must be 0 or 1, got {value}"
        )));
    }
    region.check(img.geometry())?;
    let cols = img.cols();
    let mut pixels = img.clone().into_pixels();
    for i in region.indices(cols) {
        pixels[i] = value;
    }
    Ok(BinaryImage::from_parts_unchecked(img.rows(), cols, pixels))
}

/// Flip exactly `round(fraction * n)` pixels chosen uniformly without
/// replacement.
pub fn random_flips(img: &BinaryImage, fraction: f64, seed: u64) -> Result<BinaryImage> {
    check_fraction("flip fraction", fraction)?;
    let n = img.pixels().len();
    let count = ((n as f64) * fraction).round() as usize;
    let mut rng = seed::rng(seed);
    let mut pixels = img.clone().into_pixels();
    for i in index::sample(&mut rng, n, count.min(n)) {
        pixels[i] ^= 1;
    }
    Ok(BinaryImage::from_parts_unchecked(
        img.rows(),
        img.cols(),
        pixels,
    ))
}

/// A corruption model with its parameter, as written on the command line:
/// `gaussian:0.3`, `saltpepper:0.4`, `corner-sp:1.0`, `corner-fill:0`,
/// `corner-fill:1` or `flips:0.18`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Gaussian { sigma2: f64 },
    SaltPepper { d: f64 },
    CornerSaltPepper { d: f64 },
    CornerFill { value: u8 },
    Flips { fraction: f64 },
}

impl NoiseSpec {
    pub fn apply(&self, img: &BinaryImage, seed: u64) -> Result<BinaryImage> {
        let corner = RectRegion::default_corner(img.geometry());
        match *self {
            NoiseSpec::Gaussian { sigma2 } => gaussian_noise(img, sigma2, seed),
            NoiseSpec::SaltPepper { d } => salt_pepper(img, d, seed),
            NoiseSpec::CornerSaltPepper { d } => region_salt_pepper(img, corner, d, seed),
            NoiseSpec::CornerFill { value } => region_fill(img, corner, value),
            NoiseSpec::Flips { fraction } => random_flips(img, fraction, seed),
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            NoiseSpec::Gaussian { sigma2 } => check_variance(sigma2)?,
            NoiseSpec::SaltPepper { d } | NoiseSpec::CornerSaltPepper { d } => {
                check_fraction("salt & pepper density", d)?
            }
            NoiseSpec::CornerFill { value } if value > 1 => {
                return Err(Error::Parameter(format!(
                    "fill value must be 0 or 1, got {value}"
                )))
            }
            NoiseSpec::CornerFill { .. } => {}
            NoiseSpec::Flips { fraction } => check_fraction("flip fraction", fraction)?,
        }
        Ok(self)
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            Error::Parameter(format!("noise spec {s:?} must look like kind:value"))
        })?;
        let number = || {
            arg.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad noise parameter {arg:?} in {s:?}")))
        };
        let spec = match kind.trim() {
            "gaussian" => NoiseSpec::Gaussian { sigma2: number()? },
            "saltpepper" | "salt-pepper" => NoiseSpec::SaltPepper { d: number()? },
            "corner-sp" => NoiseSpec::CornerSaltPepper { d: number()? },
            "corner-fill" => NoiseSpec::CornerFill {
                value: arg
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad fill value {arg:?}")))?,
            },
            "flips" => NoiseSpec::Flips {
                fraction: number()?,
            },
            other => return Err(Error::Parameter(format!("unknown noise kind {other:?}"))),
        };
        spec.validate()
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Gaussian { sigma2 } => write!(f, "gaussian:{sigma2}"),
            NoiseSpec::SaltPepper { d } => write!(f, "saltpepper:{d}"),
            NoiseSpec::CornerSaltPepper { d } => write!(f, "corner-sp:{d}"),
            NoiseSpec::CornerFill { value } => write!(f, "corner-fill:{value}"),
            NoiseSpec::Flips { fraction } => write!(f, "flips:{fraction}"),
        }
    }
}
