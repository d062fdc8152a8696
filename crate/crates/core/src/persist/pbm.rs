//! Portable bitmap (PBM) reading and writing, plain (P1) and raw (P4).
//! https://netpbm.sourceforge.net/doc/pbm.html
//!
//! In PBM a 1 bit is black, which maps straight onto a dark pixel value 1.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::types::BinaryImage;

/// Longest line emitted in plain files, per the format's recommendation.
const PLAIN_LINE_WIDTH: usize = 70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PbmFormat {
    /// ASCII `0`/`1` raster.
    Plain,
    /// Packed bits, rows padded to a byte boundary.
    #[default]
    Raw,
}

impl FromStr for PbmFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P1" | "p1" | "plain" => Ok(PbmFormat::Plain),
            "P4" | "p4" | "raw" => Ok(PbmFormat::Raw),
            other => Err(Error::Parameter(format!("unknown PBM format {other:?}"))),
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn dimension(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(format!("expected {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let value: usize = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("{what} {text} is too large"),
        })?;
        if value == 0 {
            return Err(Error::Parse {
                offset: start,
                message: format!("{what} must be positive"),
            });
        }
        Ok(value)
    }
}

/// Parse a P1 or P4 image from memory.
pub fn parse_pbm(bytes: &[u8]) -> Result<BinaryImage> {
    let magic = bytes.get(..2).ok_or(Error::Parse {
        offset: bytes.len(),
        message: "file too short for a magic number".into(),
    })?;
    let format = match magic {
        b"P1" => PbmFormat::Plain,
        b"P4" => PbmFormat::Raw,
        other => {
            return Err(Error::Format(format!(
                "magic {:?} is not P1 or P4",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur
        .bytes
        .get(cur.pos)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(cur.error("expected whitespace after magic number"));
    }
    let cols = cur.dimension("width")?;
    let rows = cur.dimension("height")?;
    let total = rows
        .checked_mul(cols)
        .ok_or_else(|| cur.error("image dimensions overflow"))?;

    let pixels = match format {
        PbmFormat::Plain => {
            let mut pixels = Vec::with_capacity(total.min(bytes.len()));
            while pixels.len() < total {
                cur.skip_whitespace_and_comments();
                match cur.bytes.get(cur.pos) {
                    Some(b'0') => pixels.push(0),
                    Some(b'1') => pixels.push(1),
                    Some(&b) => {
                        return Err(cur.error(format!("unexpected byte {b:#04x} in raster")))
                    }
                    None => {
                        return Err(cur.error(format!(
                            "raster ends after {} of {total} pixels",
                            pixels.len()
                        )))
                    }
                }
                cur.pos += 1;
            }
            pixels
        }
        PbmFormat::Raw => {
            match cur.bytes.get(cur.pos) {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => return Err(cur.error("expected a single whitespace byte before the raster")),
            }
            let stride = cols.div_ceil(8);
            let needed = stride * rows;
            let raster = &bytes[cur.pos..];
            if raster.len() < needed {
                return Err(Error::Parse {
                    offset: bytes.len(),
                    message: format!("raster has {} of {needed} bytes", raster.len()),
                });
            }
            let mut pixels = Vec::with_capacity(total);
            for row in raster[..needed].chunks_exact(stride) {
                for c in 0..cols {
                    pixels.push((row[c / 8] >> (7 - c % 8)) & 1);
                }
            }
            pixels
        }
    };
    BinaryImage::new(rows, cols, pixels)
}

pub fn read_pbm(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pbm(&bytes)
}

/// Serialize to bytes. Output depends only on the image and format.
pub fn encode_pbm(img: &BinaryImage, format: PbmFormat) -> Vec<u8> {
    let (rows, cols) = (img.rows(), img.cols());
    let mut out = Vec::new();
    match format {
        PbmFormat::Plain => {
            out.extend_from_slice(format!("P1\n{cols} {rows}\n").as_bytes());
            for row in img.pixels().chunks_exact(cols) {
                for line in row.chunks(PLAIN_LINE_WIDTH) {
                    out.extend(line.iter().map(|&p| b'0' + p));
                    out.push(b'\n');
                }
            }
        }
        PbmFormat::Raw => {
            out.extend_from_slice(format!("P4\n{cols} {rows}\n").as_bytes());
            let stride = cols.div_ceil(8);
            for row in img.pixels().chunks_exact(cols) {
                let mut packed = vec![0u8; stride];
                for (c, &p) in row.iter().enumerate() {
                    packed[c / 8] |= p << (7 - c % 8);
                }
                out.extend_from_slice(&packed);
            }
        }
    }
    out
}

pub fn write_pbm(img: &BinaryImage, path: impl AsRef<Path>, format: PbmFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pbm(img, format)).map_err(|e| Error::io(path, e))
}
