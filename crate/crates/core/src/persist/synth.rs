//! Synthetic QR-like binary patterns.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{self, derive_seed};
use crate::types::{BinaryImage, Geometry};

/// Side of a finder motif.
pub const FINDER_SIZE: usize = 7;

/// Whether `(r, c)` inside a 7x7 finder motif is dark: the outer ring and
/// the central 3x3 block are dark, the ring between them light.
fn finder_dark(r: usize, c: usize) -> bool {
    let ring = r.min(c).min(FINDER_SIZE - 1 - r).min(FINDER_SIZE - 1 - c);
    ring != 1
}

/// I.i.d. Bernoulli(`density`) pixels. With `finder_corners`, and when the
/// image is at least 14 pixels on each side, three finder motifs are stamped
/// at the top-left, top-right and bottom-left corners.
pub fn synth_pattern(
    rows: usize,
    cols: usize,
    density: f64,
    finder_corners: bool,
    seed: u64,
) -> Result<BinaryImage> {
    Geometry::new(rows, cols)?;
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Parameter(format!(
            "density must lie in [0, 1], got {density}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut pixels: Vec<u8> = (0..rows * cols)
        .map(|_| u8::from(rng.random::<f64>() < density))
        .collect();
    if finder_corners && rows >= 2 * FINDER_SIZE && cols >= 2 * FINDER_SIZE {
        for (r0, c0) in [(0, 0), (0, cols - FINDER_SIZE), (rows - FINDER_SIZE, 0)] {
            for r in 0..FINDER_SIZE {
                for c in 0..FINDER_SIZE {
                    pixels[(r0 + r) * cols + c0 + c] = u8::from(finder_dark(r, c));
                }
            }
        }
    }
    BinaryImage::new(rows, cols, pixels)
}

/// `count` patterns, the i-th seeded from `derive_seed(seed, i)`.
pub fn synth_patterns(
    count: usize,
    geometry: Geometry,
    density: f64,
    finder_corners: bool,
    seed: u64,
) -> Result<Vec<BinaryImage>> {
    (0..count)
        .map(|i| {
            synth_pattern(
                geometry.rows,
                geometry.cols,
                density,
                finder_corners,
                derive_seed(seed, i as u64),
            )
        })
        .collect()
}
