//! MFCV feature files: `"MFCV"`, version 1, T, D, then T×D f32 LE row-major.

use std::path::Path;

use spkver_core::features::{FeatureSequence, FRAME_PERIOD};

use super::{malformed, read_file, write_file, Reader, Result};

const MAGIC: &[u8; 4] = b"MFCV";
const VERSION: u32 = 1;
const WHAT: &str = "MFCV";

/// Encodes `seq`; values are narrowed to f32.
pub fn write_mfcv(seq: &FeatureSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + seq.as_slice().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.len() as u32).to_le_bytes());
    out.extend_from_slice(&(seq.dim() as u32).to_le_bytes());
    for &v in seq.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn read_mfcv(bytes: &[u8], source_id: &str) -> Result<FeatureSequence> {
    let mut r = Reader::new(bytes, WHAT);
    if r.take(4)? != MAGIC {
        return Err(malformed(WHAT, "bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(malformed(WHAT, format!("unknown version {version}")));
    }
    let t = r.u32()? as usize;
    let d = r.u32()? as usize;
    if d == 0 {
        return Err(malformed(WHAT, "zero dimension"));
    }
    let n = t.checked_mul(d).filter(|&n| n.checked_mul(4) == Some(r.remaining()));
    let n = n.ok_or_else(|| malformed(WHAT, format!("{t}x{d} frames do not match {} payload bytes", r.remaining())))?;
    let data = (0..n).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(FeatureSequence::new(data, d, FRAME_PERIOD, source_id)?)
}

pub fn read_mfcv_file(path: &Path) -> Result<FeatureSequence> {
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_mfcv(&read_file(path)?, &id)
}

pub fn write_mfcv_file(path: &Path, seq: &FeatureSequence) -> Result<()> {
    write_file(path, &write_mfcv(seq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let seq = FeatureSequence::from_rows(vec![1.0, -2.5, 0.125, 3.0], 2, "x").unwrap();
        let bytes = write_mfcv(&seq);
        assert_eq!(&bytes[..4], b"MFCV");
        assert_eq!(bytes.len(), 16 + 16);
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
        let back = read_mfcv(&bytes, "x").unwrap();
        assert_eq!(back, seq);
        assert_eq!(write_mfcv(&back), bytes);
    }

    #[test]
    fn rejects_bad_files() {
        let seq = FeatureSequence::from_rows(vec![1.0, 2.0], 2, "x").unwrap();
        let bytes = write_mfcv(&seq);
        assert!(read_mfcv(&bytes[..bytes.len() - 1], "x").is_err());
        let mut v = bytes.clone();
        v[4] = 2;
        assert!(read_mfcv(&v, "x").is_err());
        let mut v = bytes.clone();
        v[0] = b'X';
        assert!(read_mfcv(&v, "x").is_err());
        let mut v = bytes;
        v[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(read_mfcv(&v, "x").is_err());
    }
}
