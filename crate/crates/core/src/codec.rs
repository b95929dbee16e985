//! Little-endian byte codecs.
//!
//! Feature file layout:
//!
//! ```text
//! "MMF1" | u32 dim | u64 count | count × ( u16 id_len | id | u32 rows | rows×dim f32 )
//! ```

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureRecord;

pub const FEATURE_MAGIC: [u8; 4] = *b"MMF1";

/// Header bytes of a feature file: magic, dim, count.
pub const FEATURE_HEADER_LEN: usize = 16;

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }

    /// u16 length prefix followed by UTF-8 bytes.
    pub fn short_str(&mut self, s: &str) -> Result<()> {
        let len = u16::try_from(s.len())
            .map_err(|_| Error::Format(alloc::format!("string of {} bytes exceeds u16", s.len())))?;
        self.u16(len);
        self.bytes(s.as_bytes());
        Ok(())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated {
                offset: self.buf.len(),
                needed: n - self.remaining(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        self.array().map(u16::from_le_bytes)
    }

    pub fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }

    pub fn u64(&mut self) -> Result<u64> {
        self.array().map(u64::from_le_bytes)
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = n
            .checked_mul(4)
            .ok_or_else(|| Error::Format("payload size overflows".into()))?;
        let raw = self.take(bytes)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn short_str(&mut self) -> Result<String> {
        let len = usize::from(self.u16()?);
        let at = self.pos;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::Format(alloc::format!("invalid UTF-8 string at byte offset {at}")))
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let found = self.array::<4>()?;
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }
}

/// Serializes records sharing one `dim` into the feature file layout.
pub fn encode_feature_file(records: &[FeatureRecord], dim: usize) -> Result<Vec<u8>> {
    let dim32 = u32::try_from(dim).map_err(|_| Error::Format("dim exceeds u32".into()))?;
    if dim == 0 {
        return Err(Error::Format("dim must be positive".into()));
    }
    let mut seen = BTreeSet::new();
    for r in records {
        if r.dim != dim || r.data.is_empty() || r.data.len() % dim != 0 {
            return Err(Error::DimMismatch {
                expected: dim,
                found: r.dim,
                context: alloc::format!("record {:?}", r.sample_id),
            });
        }
        if !seen.insert(r.sample_id.as_str()) {
            return Err(Error::DuplicateId(r.sample_id.clone()));
        }
    }
    let mut w = Writer::new();
    w.bytes(&FEATURE_MAGIC);
    w.u32(dim32);
    w.u64(records.len() as u64);
    for r in records {
        w.short_str(&r.sample_id)?;
        let rows = u32::try_from(r.row_count()).map_err(|_| Error::Format("row count exceeds u32".into()))?;
        w.u32(rows);
        for &v in &r.data {
            w.f32(v);
        }
    }
    Ok(w.finish())
}

/// Parses a feature file, returning the header dim and records in file order.
pub fn decode_feature_file(bytes: &[u8]) -> Result<(usize, Vec<FeatureRecord>)> {
    let mut r = Reader::new(bytes);
    r.magic(FEATURE_MAGIC)?;
    let dim = r.u32()? as usize;
    let declared = r.u64()?;
    if dim == 0 {
        return Err(Error::Format("header dim is zero".into()));
    }
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    while (records.len() as u64) < declared {
        if r.remaining() == 0 {
            return Err(Error::CountMismatch {
                declared,
                found: records.len() as u64,
            });
        }
        let sample_id = r.short_str()?;
        if sample_id.is_empty() {
            return Err(Error::Format(alloc::format!("empty sample id before byte offset {}", r.offset())));
        }
        let rows = r.u32()? as usize;
        if rows == 0 {
            return Err(Error::Format(alloc::format!("record {sample_id:?} has zero rows")));
        }
        let data = r.f32s(rows * dim)?;
        if !seen.insert(sample_id.clone()) {
            return Err(Error::DuplicateId(sample_id));
        }
        records.push(FeatureRecord { sample_id, dim, data });
    }
    if r.remaining() != 0 {
        return Err(Error::TrailingBytes { trailing: r.remaining() });
    }
    Ok((dim, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn empty_file_is_header_only() {
        let bytes = encode_feature_file(&[], 4).unwrap();
        assert_eq!(bytes.len(), FEATURE_HEADER_LEN);
        assert_eq!(&bytes[..4], b"MMF1");
        assert_eq!(decode_feature_file(&bytes).unwrap(), (4, vec![]));
    }

    #[test]
    fn single_record_layout() {
        let rec = FeatureRecord::new("s1", 2, vec![1.0, 2.0]).unwrap();
        let bytes = encode_feature_file(core::slice::from_ref(&rec), 2).unwrap();
        // header, u16 len + "s1", u32 rows, 2 floats
        assert_eq!(bytes.len(), 16 + 2 + 2 + 4 + 8);
        assert_eq!(&bytes[16..18], &2u16.to_le_bytes());
        assert_eq!(&bytes[18..20], b"s1");
        assert_eq!(&bytes[20..24], &1u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &1.0f32.to_le_bytes());
        let (dim, back) = decode_feature_file(&bytes).unwrap();
        assert_eq!(dim, 2);
        assert!(back[0].bit_eq(&rec));
    }

    #[test]
    fn writer_rejects_dim_mismatch_and_duplicates() {
        let a = FeatureRecord::new("a", 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(encode_feature_file(core::slice::from_ref(&a), 3), Err(Error::DimMismatch { .. })));
        assert_eq!(
            encode_feature_file(&[a.clone(), a], 2),
            Err(Error::DuplicateId("a".into()))
        );
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_feature_file(&[], 4).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_feature_file(&bytes), Err(Error::BadMagic { found, .. }) if &found == b"XXXX"));
    }

    #[test]
    fn truncation_mid_row_names_offset() {
        let rec = FeatureRecord::new("s1", 3, vec![1.0; 6]).unwrap();
        let bytes = encode_feature_file(&[rec], 3).unwrap();
        let cut = bytes.len() - 6;
        match decode_feature_file(&bytes[..cut]) {
            Err(Error::Truncated { offset, needed }) => {
                assert_eq!(offset, cut);
                assert_eq!(needed, 6);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_and_trailing_bytes() {
        let rec = FeatureRecord::new("s1", 1, vec![1.0]).unwrap();
        let mut bytes = encode_feature_file(&[rec], 1).unwrap();
        bytes[8..16].copy_from_slice(&2u64.to_le_bytes());
        assert_eq!(
            decode_feature_file(&bytes),
            Err(Error::CountMismatch { declared: 2, found: 1 })
        );
        bytes[8..16].copy_from_slice(&0u64.to_le_bytes());
        assert!(matches!(decode_feature_file(&bytes), Err(Error::TrailingBytes { .. })));
    }
}
