//! The `EMB1` embedding container.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                                 |
//! |--------|------|---------------------------------------|
//! | 0      | 4    | magic `45 4D 42 31` (`"EMB1"`)        |
//! | 4      | 4    | version, `u32` = 1                    |
//! | 8      | 4    | dim, `u32`                            |
//! | 12     | 8    | count, `u64`                          |
//! | 20     | 64   | extractor id, UTF-8, NUL padded       |
//! | 84     | 4    | layer index, `u32`                    |
//! | 88     | ...  | `count * dim` binary32 values, row-major |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::StoreError;

pub const MAGIC: [u8; 4] = *b"EMB1";
pub const VERSION: u32 = 1;
pub const EXTRACTOR_ID_LEN: usize = 64;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 8 + EXTRACTOR_ID_LEN + 4;

/// A dense `count x dim` matrix of pooled features from one extractor layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    extractor_id: String,
    layer_index: u32,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingSet {
    /// Builds a set from row-major data, validating every invariant.
    pub fn new(
        extractor_id: impl Into<String>,
        layer_index: u32,
        dim: usize,
        data: Vec<f32>,
    ) -> Result<Self, StoreError> {
        let extractor_id = extractor_id.into();
        if dim == 0 || dim > u32::MAX as usize {
            return Err(StoreError::Format(format!("invalid dimension {dim}")));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(StoreError::Format(format!(
                "{} values do not form rows of dimension {dim}",
                data.len()
            )));
        }
        check_extractor_id(&extractor_id)?;
        let set = Self {
            extractor_id,
            layer_index,
            dim,
            data,
        };
        set.check_finite()?;
        Ok(set)
    }

    /// Builds a set from row vectors. All rows must share one length.
    pub fn from_rows(
        extractor_id: impl Into<String>,
        layer_index: u32,
        rows: &[Vec<f32>],
    ) -> Result<Self, StoreError> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(StoreError::Format(format!(
                "row {bad} has length {} but row 0 has {dim}",
                rows[bad].len()
            )));
        }
        Self::new(extractor_id, layer_index, dim, rows.concat())
    }

    pub fn extractor_id(&self) -> &str {
        &self.extractor_id
    }

    pub fn layer_index(&self) -> u32 {
        self.layer_index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major payload.
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Copies the selected rows, in the given order, into a new set.
    pub fn select(&self, rows: &[usize]) -> EmbeddingSet {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        EmbeddingSet {
            extractor_id: self.extractor_id.clone(),
            layer_index: self.layer_index,
            dim: self.dim,
            data,
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f32) -> Result<EmbeddingSet, StoreError> {
        Self::new(
            self.extractor_id.clone(),
            self.layer_index,
            self.dim,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    fn check_finite(&self) -> Result<(), StoreError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(StoreError::Data {
                row: pos / self.dim,
            }),
            None => Ok(()),
        }
    }

    /// Serializes header and payload into a byte buffer.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.count() as u64).to_le_bytes());
        let mut id = [0u8; EXTRACTOR_ID_LEN];
        id[..self.extractor_id.len()].copy_from_slice(self.extractor_id.as_bytes());
        out.extend_from_slice(&id);
        out.extend_from_slice(&self.layer_index.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses and validates a complete `EMB1` byte image.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(StoreError::Format("bad magic, expected EMB1".into()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(StoreError::Truncation {
                expected: HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(StoreError::Format(format!("unsupported version {version}")));
        }
        let dim = u32_at(8) as usize;
        let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let raw_id = &bytes[20..20 + EXTRACTOR_ID_LEN];
        let id_len = raw_id
            .iter()
            .position(|&b| b == 0)
            .unwrap_or(EXTRACTOR_ID_LEN);
        if raw_id[id_len..].iter().any(|&b| b != 0) {
            return Err(StoreError::Format("extractor id is not NUL padded".into()));
        }
        let extractor_id = std::str::from_utf8(&raw_id[..id_len])
            .map_err(|_| StoreError::Format("extractor id is not UTF-8".into()))?
            .to_string();
        let layer_index = u32_at(84);
        if dim == 0 {
            return Err(StoreError::Format("dimension is zero".into()));
        }

        let expected = (count as u128) * (dim as u128) * 4 + HEADER_LEN as u128;
        let actual = bytes.len() as u128;
        if actual < expected {
            return Err(StoreError::Truncation {
                expected: expected.min(u64::MAX as u128) as u64,
                actual: actual as u64,
            });
        }
        if actual > expected {
            return Err(StoreError::Format(format!(
                "{} trailing bytes after payload",
                actual - expected
            )));
        }
        let data: Vec<f32> = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let set = Self {
            extractor_id,
            layer_index,
            dim,
            data,
        };
        set.check_finite()?;
        Ok(set)
    }
}

fn check_extractor_id(id: &str) -> Result<(), StoreError> {
    if id.len() > EXTRACTOR_ID_LEN {
        return Err(StoreError::Format(format!(
            "extractor id is {} bytes, at most {EXTRACTOR_ID_LEN} allowed",
            id.len()
        )));
    }
    if id.as_bytes().contains(&0) {
        return Err(StoreError::Format("extractor id contains NUL".into()));
    }
    Ok(())
}

/// Reads and validates an `EMB1` file.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet, StoreError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| StoreError::io(path, e))?;
    EmbeddingSet::from_bytes(&bytes)
}

/// Writes `set` as an `EMB1` file. Nothing is written if the set is invalid.
pub fn write_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    check_extractor_id(&set.extractor_id)?;
    set.check_finite()?;
    let file = File::create(path).map_err(|e| StoreError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&set.to_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| StoreError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingSet {
        EmbeddingSet::new("w2v-bert-2.0", 4, 3, vec![1.0, -2.5, 3.25, 0.0, 1e-7, -0.0]).unwrap()
    }

    #[test]
    fn header_is_88_bytes() {
        assert_eq!(HEADER_LEN, 88);
    }

    #[test]
    fn empty_set_round_trips() {
        let set = EmbeddingSet::new("x", 0, 4, vec![]).unwrap();
        let bytes = set.to_bytes();
        assert_eq!(bytes.len(), HEADER_LEN);
        let back = EmbeddingSet::from_bytes(&bytes).unwrap();
        assert_eq!(back.count(), 0);
        assert_eq!(back.dim(), 4);
    }

    #[test]
    fn single_value_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.emb");
        let set = EmbeddingSet::new("x", 1, 1, vec![0.0]).unwrap();
        write_embeddings(&set, &path).unwrap();
        assert_eq!(
            std::fs::metadata(&path).unwrap().len(),
            HEADER_LEN as u64 + 4
        );
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.emb");
        let set = sample();
        write_embeddings(&set, &path).unwrap();
        let back = load_embeddings(&path).unwrap();
        assert_eq!(back.extractor_id(), "w2v-bert-2.0");
        assert_eq!(back.layer_index(), 4);
        let bits = |s: &EmbeddingSet| s.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&set));
        assert_eq!(std::fs::read(&path).unwrap(), set.to_bytes());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let bytes = sample().to_bytes();
        let short = &bytes[..HEADER_LEN + 20];
        assert!(matches!(
            EmbeddingSet::from_bytes(short),
            Err(StoreError::Truncation {
                expected: 112,
                actual: 108
            })
        ));
    }

    #[test]
    fn truncated_header_is_rejected() {
        let bytes = sample().to_bytes();
        assert!(matches!(
            EmbeddingSet::from_bytes(&bytes[..30]),
            Err(StoreError::Truncation { .. })
        ));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            EmbeddingSet::from_bytes(&bytes),
            Err(StoreError::Format(_))
        ));
        let mut bytes = sample().to_bytes();
        bytes[4] = 2;
        assert!(matches!(
            EmbeddingSet::from_bytes(&bytes),
            Err(StoreError::Format(_))
        ));
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = sample().to_bytes();
        bytes.push(0);
        assert!(matches!(
            EmbeddingSet::from_bytes(&bytes),
            Err(StoreError::Format(_))
        ));
    }

    #[test]
    fn nan_row_is_named() {
        let mut bytes = sample().to_bytes();
        let off = HEADER_LEN + 4 * 4;
        bytes[off..off + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            EmbeddingSet::from_bytes(&bytes),
            Err(StoreError::Data { row: 1 })
        ));
    }

    #[test]
    fn nan_set_is_not_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.emb");
        let set = EmbeddingSet {
            data: vec![0.0, f32::NAN],
            ..sample()
        };
        let set = EmbeddingSet { dim: 1, ..set };
        assert!(matches!(
            write_embeddings(&set, &path),
            Err(StoreError::Data { row: 1 })
        ));
        assert!(!path.exists());
        assert!(matches!(
            EmbeddingSet::new("x", 0, 2, vec![0.0, f32::INFINITY]),
            Err(StoreError::Data { row: 0 })
        ));
    }

    #[test]
    fn long_extractor_id_is_rejected() {
        let id = "m".repeat(65);
        assert!(matches!(
            EmbeddingSet::new(id, 0, 1, vec![]),
            Err(StoreError::Format(_))
        ));
        assert!(EmbeddingSet::new("m".repeat(64), 0, 1, vec![]).is_ok());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_embeddings("/nonexistent/x.emb"),
            Err(StoreError::Io { .. })
        ));
    }
}
