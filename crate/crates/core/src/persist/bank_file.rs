//! Bank file layout, all integers little-endian:
//!
//! ```text
//! "HPBK"                          magic
//! u32 version, u32 rows, u32 cols, u32 k
//! k * n * n f64                   weights, network by network, row-major
//! u32 m                           manifest entries, sorted by id
//! m * (u32 len, len bytes utf-8 id, u32 network)
//! u32 crc32                       IEEE CRC-32 of every preceding byte
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crc32fast::Hasher;

use crate::error::{Error, Result};
use crate::types::{Geometry, NetworkBank, WeightMatrix};

pub const MAGIC: &[u8; 4] = b"HPBK";
pub const FORMAT_VERSION: u32 = 1;
/// Version, rows, cols and k.
pub const HEADER_BYTES: usize = 16;
/// Longest pattern id accepted when reading.
const MAX_ID_BYTES: usize = 1 << 16;

/// Exact encoded size of `bank` in bytes.
pub fn encoded_len(bank: &NetworkBank) -> usize {
    let n = bank.n();
    let manifest: usize = bank.assignment().keys().map(|id| 8 + id.len()).sum();
    MAGIC.len() + HEADER_BYTES + bank.k() * n * n * 8 + 4 + manifest + 4
}

struct CrcWriter<W> {
    inner: W,
    hasher: Hasher,
}

impl<W: Write> CrcWriter<W> {
    fn put(&mut self, bytes: &[u8]) -> std::io::Result<()> {
        self.hasher.update(bytes);
        self.inner.write_all(bytes)
    }
}

fn u32_field(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::Input(format!("{what} {value} does not fit in u32")))
}

/// Check that every size in `bank` fits the format before writing a byte.
fn header_fields(bank: &NetworkBank) -> Result<[u32; 4]> {
    let g = bank.geometry();
    u32_field(bank.assignment().len(), "manifest size")?;
    for (id, &k) in bank.assignment() {
        u32_field(id.len(), "id length")?;
        u32_field(k, "network index")?;
    }
    Ok([
        FORMAT_VERSION,
        u32_field(g.rows, "rows")?,
        u32_field(g.cols, "cols")?,
        u32_field(bank.k(), "network count")?,
    ])
}

fn write_body<W: Write>(bank: &NetworkBank, header: [u32; 4], writer: W) -> std::io::Result<()> {
    let mut out = CrcWriter {
        inner: writer,
        hasher: Hasher::new(),
    };
    out.put(MAGIC)?;
    for field in header {
        out.put(&field.to_le_bytes())?;
    }
    let n = bank.n();
    let mut row_bytes = Vec::with_capacity(n * 8);
    for w in bank.networks() {
        for i in 0..n {
            row_bytes.clear();
            for x in w.row(i) {
                row_bytes.extend_from_slice(&x.to_le_bytes());
            }
            out.put(&row_bytes)?;
        }
    }
    out.put(&(bank.assignment().len() as u32).to_le_bytes())?;
    for (id, &k) in bank.assignment() {
        out.put(&(id.len() as u32).to_le_bytes())?;
        out.put(id.as_bytes())?;
        out.put(&(k as u32).to_le_bytes())?;
    }
    let crc = out.hasher.clone().finalize();
    out.inner.write_all(&crc.to_le_bytes())?;
    out.inner.flush()
}

/// Serialize `bank` to an arbitrary writer.
pub fn write_bank<W: Write>(bank: &NetworkBank, writer: W) -> Result<()> {
    let header = header_fields(bank)?;
    write_body(bank, header, writer).map_err(|e| Error::io("<stream>", e))
}

pub fn save_bank(bank: &NetworkBank, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = header_fields(bank)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_body(bank, header, BufWriter::with_capacity(1 << 20, file))
        .map_err(|e| Error::io(path, e))
}

struct CrcReader<R> {
    inner: R,
    hasher: Hasher,
    offset: usize,
}

impl<R: Read> CrcReader<R> {
    fn take(&mut self, buf: &mut [u8]) -> Result<()> {
        self.take_unhashed(buf)?;
        self.hasher.update(buf);
        Ok(())
    }

    fn take_unhashed(&mut self, buf: &mut [u8]) -> Result<()> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len();
                Ok(())
            }
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => Err(Error::Parse {
                offset: self.offset,
                message: format!("file truncated while reading {} bytes", buf.len()),
            }),
            Err(e) => Err(Error::Parse {
                offset: self.offset,
                message: e.to_string(),
            }),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.take(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
}

/// Deserialize a bank. `total_len`, when known, bounds allocations so a
/// damaged header cannot request more memory than the file could hold.
pub fn read_bank<R: Read>(reader: R, total_len: Option<u64>) -> Result<NetworkBank> {
    let mut r = CrcReader {
        inner: reader,
        hasher: Hasher::new(),
        offset: 0,
    };
    let mut magic = [0u8; 4];
    r.take(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "bank format version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let header_end = r.offset + 12;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let k = r.u32()? as usize;
    let geometry = Geometry::new(rows, cols).map_err(|_| Error::Parse {
        offset: header_end - 12,
        message: format!("invalid geometry {rows}x{cols}"),
    })?;
    let n = geometry.n();
    let per_network = n
        .checked_mul(n)
        .and_then(|x| x.checked_mul(8))
        .ok_or_else(|| Error::Parse {
            offset: header_end,
            message: "network size overflows".into(),
        })?;
    let weight_bytes = per_network.checked_mul(k).ok_or_else(|| Error::Parse {
        offset: header_end,
        message: "weight payload size overflows".into(),
    })?;
    if let Some(len) = total_len {
        let minimum = (header_end + weight_bytes + 8) as u64;
        if minimum > len {
            return Err(Error::Parse {
                offset: len as usize,
                message: format!("header promises at least {minimum} bytes, file has {len}"),
            });
        }
    }

    let mut raw = vec![0u8; per_network];
    let mut weights = Vec::with_capacity(k);
    for _ in 0..k {
        r.take(&mut raw)?;
        let w: Vec<f64> = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        weights.push(w);
    }
    drop(raw);

    let m = r.u32()? as usize;
    let mut manifest = Vec::with_capacity(m.min(1 << 20));
    for _ in 0..m {
        let start = r.offset;
        let len = r.u32()? as usize;
        if len > MAX_ID_BYTES || total_len.is_some_and(|t| (r.offset + len) as u64 > t) {
            return Err(Error::Parse {
                offset: start,
                message: format!("id length {len} runs past the end of the file"),
            });
        }
        let mut id = vec![0u8; len];
        r.take(&mut id)?;
        let net = r.u32()? as usize;
        manifest.push((start, id, net));
    }

    let computed = r.hasher.clone().finalize();
    let mut crc = [0u8; 4];
    r.take_unhashed(&mut crc)?;
    let stored = u32::from_le_bytes(crc);
    let mut extra = [0u8; 1];
    if r.inner.read(&mut extra).map_err(|e| Error::Parse {
        offset: r.offset,
        message: e.to_string(),
    })? != 0
    {
        return Err(Error::Parse {
            offset: r.offset,
            message: "trailing bytes after checksum".into(),
        });
    }
    if stored != computed {
        return Err(Error::Corruption { stored, computed });
    }

    let mut assignment = BTreeMap::new();
    for (offset, id, net) in manifest {
        let id = String::from_utf8(id).map_err(|_| Error::Parse {
            offset,
            message: "pattern id is not UTF-8".into(),
        })?;
        if net >= k {
            return Err(Error::Parse {
                offset,
                message: format!("pattern {id:?} assigned to network {net} of {k}"),
            });
        }
        if assignment.insert(id.clone(), net).is_some() {
            return Err(Error::Parse {
                offset,
                message: format!("pattern {id:?} listed twice"),
            });
        }
    }
    let networks = weights
        .into_iter()
        .map(|w| WeightMatrix::from_row_major(n, w))
        .collect::<Result<Vec<_>>>()?;
    NetworkBank::new(geometry, networks, assignment)
}

pub fn load_bank(path: impl AsRef<Path>) -> Result<NetworkBank> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    read_bank(BufReader::with_capacity(1 << 20, file), Some(len))
}
