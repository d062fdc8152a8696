//! Files: PBM images, bank files, and synthetic pattern generation.

mod bank_file;
mod pbm;
mod synth;

pub use bank_file::{
    encoded_len, load_bank, read_bank, save_bank, write_bank, FORMAT_VERSION, MAGIC,
};
pub use pbm::{encode_pbm, parse_pbm, read_pbm, write_pbm, PbmFormat};
pub use synth::{synth_pattern, synth_patterns, FINDER_SIZE};
