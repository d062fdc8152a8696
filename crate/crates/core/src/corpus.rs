//! Pattern corpora: a directory of PBM files or a synthetic generator spec.
//!
//! Synthetic corpora are written `synthetic:COUNT:ROWSxCOLS`, optionally
//! followed by `:density=D` and `:finder`, for example
//! `synthetic:4000:57x57:finder`. Pattern `i` is drawn from
//! `derive_seed(seed, i)` and named with a zero-padded index, so the ids
//! sort in generation order.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::persist::{read_pbm, synth_patterns};
use crate::training::TrainingSet;
use crate::types::{to_bipolar, vectorize, BinaryImage, Geometry};

/// Named images sharing one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub geometry: Geometry,
    pub ids: Vec<String>,
    pub images: Vec<BinaryImage>,
}

impl Corpus {
    pub fn new(ids: Vec<String>, images: Vec<BinaryImage>) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::Input("corpus has no patterns".into()))?;
        let geometry = first.geometry();
        if let Some((id, img)) = ids
            .iter()
            .zip(&images)
            .find(|(_, img)| img.geometry() != geometry)
        {
            return Err(Error::Dimension(format!(
                "pattern {id:?} is {}, expected {geometry}",
                img.geometry()
            )));
        }
        if ids.len() != images.len() {
            return Err(Error::Input(format!(
                "{} ids for {} images",
                ids.len(),
                images.len()
            )));
        }
        Ok(Corpus {
            geometry,
            ids,
            images,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn training_set(&self) -> Result<TrainingSet> {
        let patterns = self
            .images
            .iter()
            .map(|img| to_bipolar(&vectorize(img)))
            .collect::<Result<Vec<_>>>()?;
        TrainingSet::new(self.ids.clone(), patterns)
    }

    pub fn get(&self, id: &str) -> Option<&BinaryImage> {
        self.ids
            .iter()
            .position(|x| x == id)
            .map(|i| &self.images[i])
    }
}

/// Where patterns come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PatternSource {
    Directory(PathBuf),
    Synthetic {
        count: usize,
        geometry: Geometry,
        density: f64,
        finder_corners: bool,
    },
}

impl FromStr for PatternSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("synthetic:") else {
            return Ok(PatternSource::Directory(PathBuf::from(s)));
        };
        let bad = |what: &str| Error::Parameter(format!("{what} in synthetic spec {s:?}"));
        let mut parts = rest.split(':');
        let count: usize = parts
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| bad("bad pattern count"))?;
        let (rows, cols) = parts
            .next()
            .and_then(|g| g.split_once('x'))
            .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
            .ok_or_else(|| bad("bad geometry (expected ROWSxCOLS)"))?;
        let geometry = Geometry::new(rows, cols)?;
        let mut density = 0.5;
        let mut finder_corners = false;
        for opt in parts {
            match opt.trim() {
                "finder" => finder_corners = true,
                o => {
                    density = o
                        .strip_prefix("density=")
                        .and_then(|d| d.parse().ok())
                        .ok_or_else(|| bad(&format!("unknown option {o:?}")))?;
                }
            }
        }
        Ok(PatternSource::Synthetic {
            count,
            geometry,
            density,
            finder_corners,
        })
    }
}

impl PatternSource {
    pub fn load(&self, seed: u64) -> Result<Corpus> {
        match self {
            PatternSource::Directory(dir) => load_directory(dir),
            &PatternSource::Synthetic {
                count,
                geometry,
                density,
                finder_corners,
            } => synthetic_corpus(count, geometry, density, finder_corners, seed),
        }
    }
}

/// Zero-padded ids `p0`, `p1`, ... wide enough for `count`.
pub fn pattern_ids(count: usize) -> Vec<String> {
    let width = count.saturating_sub(1).to_string().len();
    (0..count).map(|i| format!("p{i:0width$}")).collect()
}

pub fn synthetic_corpus(
    count: usize,
    geometry: Geometry,
    density: f64,
    finder_corners: bool,
    seed: u64,
) -> Result<Corpus> {
    let images = synth_patterns(count, geometry, density, finder_corners, seed)?;
    Corpus::new(pattern_ids(count), images)
}

/// Every `*.pbm` file in `dir`, ordered by file name; ids are file stems.
pub fn load_directory(dir: &Path) -> Result<Corpus> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("pbm"))
        {
            paths.push(path);
        }
    }
    paths.sort();
    let mut ids = Vec::with_capacity(paths.len());
    let mut images = Vec::with_capacity(paths.len());
    for path in paths {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        images.push(read_pbm(&path)?);
        ids.push(stem);
    }
    if images.is_empty() {
        return Err(Error::Input(format!("no .pbm files in {}", dir.display())));
    }
    Corpus::new(ids, images)
}
