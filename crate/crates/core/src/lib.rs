//! Parallel Hopfield associative memories for denoising binary
//! matrix-barcode images.
//!
//! A corpus of binary patterns is split across `k` independent Hopfield
//! networks. A noisy input is probed briefly in every network, the network
//! whose probe looks most like descent into a stored pattern is selected,
//! and that network alone is run to convergence to recover the pattern.
//!
//! ```no_run
//! use hopdenoise::{corpus, noise, selector, training};
//! use hopdenoise::types::Geometry;
//!
//! let g = Geometry::new(21, 21)?;
//! let corpus = corpus::synthetic_corpus(120, g, 0.5, false, 7)?;
//! let ts = corpus.training_set()?;
//! let bank = training::train_bank(&ts, g, 4, training::Rule::Pseudoinverse, 1)?;
//! let noisy = noise::gaussian_noise(&corpus.images[0], 0.3, 2)?;
//! let report = selector::denoise(&bank, &noisy, &selector::DenoiseOptions::default(), Some(&ts))?;
//! println!("winner {} matched {:?}", report.selection.winner, report.matched_stored_id);
//! # Ok::<(), hopdenoise::Error>(())
//! ```

pub mod bench;
pub mod corpus;
pub mod dynamics;
pub mod error;
pub mod noise;
pub mod persist;
pub mod seed;
pub mod selector;
pub mod training;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    devectorize, to_bipolar, vectorize, BinaryImage, BipolarState, Geometry, NetworkBank,
    WeightMatrix,
};
