//! Tensor files.
//!
//! * Binary: `b"TNS3"`, one version byte (currently 1), three `u32` little-endian dims, then
//!   `I·J·K` little-endian `f64` values in mode-1-fastest order.
//! * Text: a first line `I J K`, then one value per line in the same order.
//! * CSV triplets: `i,j,k,value` rows with 1-based indices; entries not listed are zero. An
//!   optional non-numeric header row is skipped. Without declared dims, the largest index seen
//!   in each mode is used.
//!
//! Reading detects the binary format by its magic bytes; otherwise a `.csv` extension selects
//! triplets and anything else is read as text. Writes go to a temporary file in the target
//! directory and are renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor3, Dims};

pub const MAGIC: &[u8; 4] = b"TNS3";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 3 * 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorFormat {
    Binary,
    Text,
    Csv,
}

impl TensorFormat {
    /// `.csv` → triplets, `.txt` → text, everything else binary.
    pub fn from_extension(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => TensorFormat::Csv,
            Some("txt") => TensorFormat::Text,
            _ => TensorFormat::Binary,
        }
    }
}

/// Parsed binary header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorFileHeader {
    pub version: u8,
    pub dims: Dims,
}

impl TensorFileHeader {
    pub fn payload_len(&self) -> usize {
        8 * self.dims.len()
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(MAGIC);
        out[4] = self.version;
        for (slot, d) in self.dims.as_array().into_iter().enumerate() {
            out[5 + 4 * slot..9 + 4 * slot].copy_from_slice(&(d as u32).to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let format = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < HEADER_LEN {
            return Err(format(format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(format("missing TNS3 magic".into()));
        }
        let version = bytes[4];
        if version != VERSION {
            return Err(format(format!("unsupported version {version}")));
        }
        let dim = |slot: usize| u32::from_le_bytes(bytes[5 + 4 * slot..9 + 4 * slot].try_into().unwrap()) as usize;
        let dims = Dims(dim(0), dim(1), dim(2));
        if dims.as_array().contains(&0) {
            return Err(format(format!("dims must be positive, got {dims}")));
        }
        Ok(Self { version, dims })
    }
}

pub fn encode_binary(x: &DenseTensor3) -> Vec<u8> {
    let header = TensorFileHeader {
        version: VERSION,
        dims: x.dims(),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + header.payload_len());
    out.extend_from_slice(&header.encode());
    for v in x.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8], path: &Path) -> Result<DenseTensor3> {
    let header = TensorFileHeader::decode(bytes, path)?;
    let payload = &bytes[HEADER_LEN..];
    let expected = header.payload_len();
    if payload.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("{} trailing bytes after payload", payload.len() - expected),
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseTensor3::new(header.dims, values)
}

pub fn encode_text(x: &DenseTensor3) -> String {
    let Dims(i, j, k) = x.dims();
    let mut out = format!("{i} {j} {k}\n");
    for v in x.values() {
        // `Display` for f64 prints the shortest string that parses back to the same value.
        out.push_str(&format!("{v}\n"));
    }
    out
}

pub fn decode_text(text: &str, path: &Path) -> Result<DenseTensor3> {
    let format = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| format("empty file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format(format!("bad dims line '{header}': {e}")))?;
    let &[i, j, k] = dims.as_slice() else {
        return Err(format(format!("dims line must hold three integers, got '{header}'")));
    };
    let dims = Dims(i, j, k);
    if dims.as_array().contains(&0) {
        return Err(format(format!("dims must be positive, got {dims}")));
    }
    let values = lines
        .enumerate()
        .map(|(n, l)| l.parse::<f64>().map_err(|e| format(format!("value line {}: '{l}': {e}", n + 2))))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != dims.len() {
        return Err(format(format!("expected {} values for {dims}, found {}", dims.len(), values.len())));
    }
    DenseTensor3::new(dims, values)
}

pub fn encode_csv(x: &DenseTensor3) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let Dims(ni, nj, nk) = x.dims();
    let csv_err = |e: csv::Error| Error::Validation(format!("csv encoding failed: {e}"));
    w.write_record(["i", "j", "k", "value"]).map_err(csv_err)?;
    for k in 0..nk {
        for j in 0..nj {
            for i in 0..ni {
                w.write_record(&[
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    (k + 1).to_string(),
                    x.get(i, j, k).to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn decode_csv(text: &str, dims: Option<Dims>, path: &Path) -> Result<DenseTensor3> {
    let format = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut triplets = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format(format!("row {}: {e}", n + 1)))?;
        if record.len() != 4 {
            return Err(format(format!("row {} has {} fields, expected 4", n + 1, record.len())));
        }
        let index = |f: usize| record[f].parse::<usize>();
        let parsed = (index(0), index(1), index(2), record[3].parse::<f64>());
        match parsed {
            (Ok(i), Ok(j), Ok(k), Ok(v)) => triplets.push((i, j, k, v)),
            // Header row.
            _ if n == 0 && record[3].parse::<f64>().is_err() => continue,
            _ => return Err(format(format!("row {} is not an 'i,j,k,value' triplet", n + 1))),
        }
    }
    let dims = match dims {
        Some(d) => d,
        None => {
            if triplets.is_empty() {
                return Err(format("no triplets and no declared dims".into()));
            }
            let max = |f: fn(&(usize, usize, usize, f64)) -> usize| triplets.iter().map(f).max().unwrap_or(0);
            Dims(max(|t| t.0), max(|t| t.1), max(|t| t.2))
        }
    };
    let mut values = vec![0.0; dims.len()];
    for &(i, j, k, v) in &triplets {
        if i == 0 || j == 0 || k == 0 || i > dims.0 || j > dims.1 || k > dims.2 {
            return Err(Error::TripletOutOfRange {
                path: path.to_path_buf(),
                i,
                j,
                k,
                dims: (dims.0, dims.1, dims.2),
            });
        }
        values[(i - 1) + dims.0 * ((j - 1) + dims.1 * (k - 1))] = v;
    }
    DenseTensor3::new(dims, values)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor3> {
    read_tensor_with_dims(path, None)
}

/// Like [`read_tensor`]; `dims` declares the shape of a CSV triplet file.
pub fn read_tensor_with_dims(path: impl AsRef<Path>, dims: Option<Dims>) -> Result<DenseTensor3> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        return decode_binary(&bytes, path);
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Format {
        path: path.to_path_buf(),
        reason: "neither a TNS3 binary file nor UTF-8 text".into(),
    })?;
    match TensorFormat::from_extension(path) {
        TensorFormat::Csv => decode_csv(&text, dims, path),
        _ => decode_text(&text, path),
    }
}

/// Writes in the format implied by the extension.
pub fn write_tensor(x: &DenseTensor3, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_tensor_as(x, path, TensorFormat::from_extension(path))
}

pub fn write_tensor_as(x: &DenseTensor3, path: impl AsRef<Path>, format: TensorFormat) -> Result<()> {
    let bytes = match format {
        TensorFormat::Binary => encode_binary(x),
        TensorFormat::Text => encode_text(x).into_bytes(),
        TensorFormat::Csv => encode_csv(x)?.into_bytes(),
    };
    write_atomic(path.as_ref(), &bytes)
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
