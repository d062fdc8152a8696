//! Domain types shared across the crate and the conversions between the
//! binary image form and the bipolar network state.
//!
//! Images are vectorized in row-major order everywhere, including the bank
//! file format: pixel `(r, c)` lives at index `r * cols + c`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Image geometry. `n()` is the node count of a network over this geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Geometry {
    pub rows: usize,
    pub cols: usize,
}

impl Geometry {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "geometry must be positive, got {rows}x{cols}"
            )));
        }
        Ok(Geometry { rows, cols })
    }

    pub fn n(&self) -> usize {
        self.rows * self.cols
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// A rows x cols grid of {0, 1} pixels stored row-major. 1 is a dark module.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        Geometry::new(rows, cols)?;
        if pixels.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} pixels supplied for a {rows}x{cols} image",
                pixels.len()
            )));
        }
        if let Some(pos) = pixels.iter().position(|&p| p > 1) {
            return Err(Error::Domain(format!(
                "pixel {pos} has value {}, expected 0 or 1",
                pixels[pos]
            )));
        }
        Ok(BinaryImage { rows, cols, pixels })
    }

    /// Image with every pixel set to `value` (0 or 1).
    pub fn filled(rows: usize, cols: usize, value: u8) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    /// Build from nested rows; convenient in tests and examples.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.cols + col]
    }

    /// Number of dark pixels.
    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// Number of differing pixels. Geometries must match.
    pub fn hamming(&self, other: &BinaryImage) -> Result<usize> {
        if self.geometry() != other.geometry() {
            return Err(Error::Dimension(format!(
                "cannot compare {} with {}",
                self.geometry(),
                other.geometry()
            )));
        }
        Ok(self
            .pixels
            .iter()
            .zip(&other.pixels)
            .filter(|(a, b)| a != b)
            .count())
    }

    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, pixels: Vec<u8>) -> Self {
        debug_assert_eq!(pixels.len(), rows * cols);
        debug_assert!(pixels.iter().all(|&p| p <= 1));
        BinaryImage { rows, cols, pixels }
    }

    pub(crate) fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// Flatten an image to a row-major binary vector.
pub fn vectorize(img: &BinaryImage) -> Vec<u8> {
    img.pixels.clone()
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &[u8], rows: usize, cols: usize) -> Result<BinaryImage> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "vector of length {} cannot be shaped {rows}x{cols}",
            v.len()
        )));
    }
    BinaryImage::new(rows, cols, v.to_vec())
}

/// Network state: one entry per node, each +1 or -1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BipolarState(Vec<i8>);

impl BipolarState {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::Domain(format!(
                "state entry {pos} is {}, expected +1 or -1",
                values[pos]
            )));
        }
        Ok(BipolarState(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    /// Map back to {0, 1}.
    pub fn to_binary(&self) -> Vec<u8> {
        self.0.iter().map(|&v| ((v + 1) / 2) as u8).collect()
    }

    /// Number of positions where the two states disagree.
    pub fn hamming(&self, other: &BipolarState) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub(crate) fn from_vec_unchecked(values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|&v| v == 1 || v == -1));
        BipolarState(values)
    }
}

/// `S = 2V - 1`.
pub fn to_bipolar(v: &[u8]) -> Result<BipolarState> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| match x {
            0 => Ok(-1),
            1 => Ok(1),
            other => Err(Error::Domain(format!(
                "entry {i} is {other}, expected 0 or 1"
            ))),
        })
        .collect::<Result<Vec<i8>>>()
        .map(BipolarState)
}

/// `(s + 1) / 2`, validating that every entry is +1 or -1.
pub fn to_binary(s: &[i8]) -> Result<Vec<u8>> {
    s.iter()
        .enumerate()
        .map(|(i, &x)| match x {
            -1 => Ok(0),
            1 => Ok(1),
            other => Err(Error::Domain(format!(
                "entry {i} is {other}, expected +1 or -1"
            ))),
        })
        .collect()
}

/// Dense n x n weights of one trained network, row-major.
///
/// Symmetric, zero on the diagonal and finite; the constructors enforce it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    /// Validate and wrap a row-major buffer.
    pub fn from_row_major(n: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} weights supplied for n = {n}",
                w.len()
            )));
        }
        for i in 0..n {
            if w[i * n + i] != 0.0 {
                return Err(Error::Domain(format!(
                    "diagonal entry {i} is {}, expected exactly 0",
                    w[i * n + i]
                )));
            }
            for j in 0..n {
                let a = w[i * n + j];
                if !a.is_finite() {
                    return Err(Error::Domain(format!("weight ({i}, {j}) is not finite")));
                }
                if j > i {
                    let b = w[j * n + i];
                    if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                        return Err(Error::Domain(format!(
                            "weights ({i}, {j}) = {a} and ({j}, {i}) = {b} are not symmetric"
                        )));
                    }
                }
            }
        }
        Ok(WeightMatrix { n, w })
    }

    /// Validate and copy a dense matrix.
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "weight matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        // nalgebra is column-major; transposing gives row-major order.
        let w = m.transpose().as_slice().to_vec();
        Self::from_row_major(n, w)
    }

    pub fn zeros(n: usize) -> Self {
        WeightMatrix {
            n,
            w: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.w)
    }

    /// Every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_row_major(self.n, self.w.iter().map(|x| x * c).collect())
    }

    /// Bytes actually allocated for the weights.
    pub fn heap_bytes(&self) -> usize {
        self.w.capacity() * std::mem::size_of::<f64>()
    }
}

/// K independently trained networks over one shared geometry, plus the
/// record of which network stores which pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkBank {
    geometry: Geometry,
    networks: Vec<WeightMatrix>,
    assignment: BTreeMap<String, usize>,
}

impl NetworkBank {
    pub fn new(
        geometry: Geometry,
        networks: Vec<WeightMatrix>,
        assignment: BTreeMap<String, usize>,
    ) -> Result<Self> {
        let n = geometry.n();
        if let Some((k, w)) = networks.iter().enumerate().find(|(_, w)| w.n() != n) {
            return Err(Error::Dimension(format!(
                "network {k} has {} nodes, geometry {geometry} needs {n}",
                w.n()
            )));
        }
        if let Some((id, &k)) = assignment.iter().find(|(_, &k)| k >= networks.len()) {
            return Err(Error::Input(format!(
                "pattern {id:?} assigned to network {k}, bank has {}",
                networks.len()
            )));
        }
        Ok(NetworkBank {
            geometry,
            networks,
            assignment,
        })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn n(&self) -> usize {
        self.geometry.n()
    }

    pub fn k(&self) -> usize {
        self.networks.len()
    }

    pub fn networks(&self) -> &[WeightMatrix] {
        &self.networks
    }

    pub fn network(&self, k: usize) -> &WeightMatrix {
        &self.networks[k]
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    /// Network that stores `id`, if any.
    pub fn home_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    /// Pattern ids stored in network `k`, in id order.
    pub fn ids_in(&self, k: usize) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, &home)| home == k)
            .map(|(id, _)| id.as_str())
    }

    /// Bytes allocated for all weight matrices.
    pub fn weight_bytes(&self) -> usize {
        self.networks.iter().map(WeightMatrix::heap_bytes).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vectorize_is_row_major() {
        let img = BinaryImage::from_rows(&[&[1, 0], &[0, 1]]).unwrap();
        assert_eq!(vectorize(&img), vec![1, 0, 0, 1]);
        let one = BinaryImage::from_rows(&[&[0]]).unwrap();
        assert_eq!(vectorize(&one), vec![0]);
        let big = BinaryImage::filled(57, 57, 0).unwrap();
        assert_eq!(vectorize(&big).len(), 3249);

        let img = BinaryImage::new(2, 3, vec![0, 0, 1, 0, 0, 0]).unwrap();
        assert_eq!(img.get(0, 2), 1);
    }

    #[test]
    fn devectorize_examples() {
        let img = devectorize(&[1, 0, 0, 1], 2, 2).unwrap();
        assert_eq!(img, BinaryImage::from_rows(&[&[1, 0], &[0, 1]]).unwrap());
        assert_eq!(devectorize(&[0], 1, 1).unwrap().pixels(), &[0]);
        assert!(matches!(
            devectorize(&[1, 1, 0], 2, 2),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn bipolar_conversions() {
        assert_eq!(to_bipolar(&[0, 1, 0]).unwrap().values(), &[-1, 1, -1]);
        assert!(to_bipolar(&[1; 5])
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 1));
        assert!(to_bipolar(&[0; 5])
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == -1));
        assert!(matches!(to_bipolar(&[0, 2]), Err(Error::Domain(_))));

        assert_eq!(to_binary(&[-1, 1]).unwrap(), vec![0, 1]);
        let v = [0, 1, 1, 0];
        assert_eq!(to_binary(to_bipolar(&v).unwrap().values()).unwrap(), v);
        assert!(matches!(to_binary(&[1, 0, -1]), Err(Error::Domain(_))));
    }

    #[test]
    fn image_rejects_bad_pixels() {
        assert!(BinaryImage::new(2, 2, vec![0, 1, 2, 0]).is_err());
        assert!(BinaryImage::new(2, 2, vec![0, 1, 1]).is_err());
        assert!(BinaryImage::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn weight_matrix_invariants() {
        assert!(WeightMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(WeightMatrix::from_row_major(2, vec![0.5, 1.0, 1.0, 0.0]).is_err());
        assert!(WeightMatrix::from_row_major(2, vec![0.0, 1.0, 1.5, 0.0]).is_err());
        assert!(WeightMatrix::from_row_major(2, vec![0.0, f64::NAN, f64::NAN, 0.0]).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 3.0, 0.0]);
        let w = WeightMatrix::from_dmatrix(&m).unwrap();
        assert_eq!(w.to_dmatrix(), m);
    }

    #[test]
    fn bank_rejects_mismatched_networks() {
        let g = Geometry::new(2, 2).unwrap();
        assert!(NetworkBank::new(g, vec![WeightMatrix::zeros(3)], BTreeMap::new()).is_err());
        let mut a = BTreeMap::new();
        a.insert("x".to_string(), 1);
        assert!(NetworkBank::new(g, vec![WeightMatrix::zeros(4)], a).is_err());
    }

    proptest! {
        #[test]
        fn round_trips(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
            let pixels: Vec<u8> = (0..rows * cols)
                .map(|i| ((seed.rotate_left(i as u32 % 64) ^ i as u64) & 1) as u8)
                .collect();
            let img = BinaryImage::new(rows, cols, pixels).unwrap();
            let v = vectorize(&img);
            prop_assert_eq!(&devectorize(&v, rows, cols).unwrap(), &img);
            let s = to_bipolar(&v).unwrap();
            prop_assert!(s.values().iter().all(|&x| x != 0));
            prop_assert_eq!(to_binary(s.values()).unwrap(), v.clone());
            prop_assert_eq!(s.to_binary(), v);
        }
    }
}
