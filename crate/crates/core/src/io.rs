//! File formats: MXIF embedding matrices, CSV embeddings, frame manifests and
//! structured-text reports.
//!
//! MXIF layout, all integers little-endian:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `MXIF`                  |
//! | 4      | 2    | version, `1`                  |
//! | 6      | 1    | dtype, `0` = f32 LE           |
//! | 7      | 1    | reserved, written as `0`      |
//! | 8      | 4    | rows                          |
//! | 12     | 4    | cols                          |
//! | 16     | 4·rows·cols | row-major payload      |

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::EmbeddingMatrix;

pub const MAGIC: &[u8; 4] = b"MXIF";
pub const VERSION: u16 = 1;
pub const DTYPE_F32_LE: u8 = 0;
pub const HEADER_LEN: usize = 16;

/// Serialises `m` as MXIF. Values are narrowed to f32.
pub fn encode_embeddings(m: &EmbeddingMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows())
        .map_err(|_| Error::InvalidInput(format!("{} rows exceed the u32 header", m.rows())))?;
    let cols = u32::try_from(m.cols())
        .map_err(|_| Error::InvalidInput(format!("{} cols exceed the u32 header", m.cols())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.rows() * m.cols());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(DTYPE_F32_LE);
    out.push(0);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for i in 0..m.rows() {
        for (j, &v) in m.row(i).iter().enumerate() {
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "value {v} at row {i}, column {j} does not fit in f32"
                )));
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "header needs {HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?} at byte 0, expected \"MXIF\"",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version} at byte 4, expected {VERSION}"
        )));
    }
    if bytes[6] != DTYPE_F32_LE {
        return Err(Error::Format(format!(
            "unsupported dtype {} at byte 6, expected {DTYPE_F32_LE} (f32 LE)",
            bytes[6]
        )));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("{rows}x{cols} payload size overflows")))?;
    let actual = bytes.len() - HEADER_LEN;
    if actual != expected {
        return Err(Error::Format(format!(
            "payload for {rows}x{cols} needs {expected} bytes after offset {HEADER_LEN}, found {actual}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty {rows}x{cols} matrix")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {} (byte {})",
                k / cols,
                k % cols,
                HEADER_LEN + 4 * k
            )));
        }
        data.push(f64::from(v));
    }
    EmbeddingMatrix::new(rows, cols, data)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes)
}

pub fn write_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_embeddings(m)?).map_err(|e| Error::io(path, e))
}

/// Parses headerless, comma-separated numeric rows.
pub fn parse_csv_embeddings(reader: impl Read) -> Result<EmbeddingMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(format!("csv: {e}")))?;
        let line = rec.position().map_or(rows + 1, |p| p.line() as usize);
        let width = *cols.get_or_insert(rec.len());
        if rec.len() != width {
            return Err(Error::Format(format!(
                "line {line}: {} fields, expected {width}",
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Format(format!("line {line}, field {}: {field:?} is not a number", j + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite value at row {rows}, column {j} (line {line})"
                )));
            }
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(Error::Format("csv contains no values".into()));
    }
    EmbeddingMatrix::new(rows, cols, data)
}

pub fn read_csv_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_embeddings(std::io::BufReader::new(file))
}

/// One sampled frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub row_index: usize,
    pub source_frame_number: u64,
    pub timestamp_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    /// Path or identifier of the source video.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps_sampled: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_frames: Option<u64>,
}

/// Maps embedding rows to source frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameManifest {
    pub video: VideoMeta,
    pub frames: Vec<FrameRecord>,
}

impl FrameManifest {
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<f64> = None;
        for (i, f) in self.frames.iter().enumerate() {
            if f.row_index != i {
                return Err(Error::Format(format!(
                    "manifest frame {i} has row_index {}",
                    f.row_index
                )));
            }
            if !f.timestamp_seconds.is_finite() || prev.is_some_and(|p| f.timestamp_seconds <= p) {
                return Err(Error::Format(format!(
                    "manifest frame {i}: timestamp {} is not strictly increasing",
                    f.timestamp_seconds
                )));
            }
            prev = Some(f.timestamp_seconds);
        }
        Ok(())
    }

    /// Checks that the manifest describes exactly `rows` embedding rows.
    pub fn check_rows(&self, rows: usize) -> Result<()> {
        if self.frames.len() != rows {
            return Err(Error::Format(format!(
                "manifest lists {} frames but the embedding matrix has {rows} rows",
                self.frames.len()
            )));
        }
        Ok(())
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<FrameManifest> {
    let m: FrameManifest = read_text(path)?;
    m.validate()?;
    Ok(m)
}

pub fn write_manifest(m: &FrameManifest, path: impl AsRef<Path>) -> Result<()> {
    m.validate()?;
    write_text(m, path)
}

/// Deterministic UTF-8 text: pretty JSON, keys in declaration order, LF
/// line endings, trailing newline.
pub fn to_text<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("serialise: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn from_text<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::Format(format!("line {}, column {}: {e}", e.line(), e.column()))
    })
}

pub fn write_text<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_text(value)?).map_err(|e| Error::io(path, e))
}

pub fn read_text<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}
