//! SVEC supervector sets: `"SVEC"`, version, count, dim, then per record the
//! speaker id (u32 length + UTF-8 bytes), partition index (u32) and `dim`
//! f32 LE values. Normalization and UBM fingerprint live in a JSON sidecar
//! next to the file (`<file>.meta.json`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spkver_core::adaptation::{Normalization, Supervector};

use super::{malformed, read_file, write_file, Reader, Result};

const MAGIC: &[u8; 4] = b"SVEC";
const VERSION: u32 = 1;
const WHAT: &str = "SVEC";

/// Set-wide properties shared by every record of an SVEC file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvecMeta {
    pub normalization: Normalization,
    pub ubm_fingerprint: u64,
}

#[derive(Serialize, Deserialize)]
struct MetaDoc {
    normalization: String,
    ubm_fingerprint: String,
}

/// Encodes a homogeneous set: equal dimensions, one normalization, one UBM.
pub fn write_svec(svs: &[Supervector]) -> Result<(Vec<u8>, Option<SvecMeta>)> {
    let dim = svs.first().map_or(0, Supervector::dim);
    for s in svs {
        svs[0].check_compatible(s)?;
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(svs.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for s in svs {
        out.extend_from_slice(&(s.speaker_id.len() as u32).to_le_bytes());
        out.extend_from_slice(s.speaker_id.as_bytes());
        out.extend_from_slice(&s.partition_index.to_le_bytes());
        for &v in &s.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let meta = svs.first().map(|s| SvecMeta { normalization: s.normalization, ubm_fingerprint: s.ubm_fingerprint });
    Ok((out, meta))
}

pub fn read_svec(bytes: &[u8], meta: SvecMeta) -> Result<Vec<Supervector>> {
    let mut r = Reader::new(bytes, WHAT);
    if r.take(4)? != MAGIC {
        return Err(malformed(WHAT, "bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(malformed(WHAT, format!("unknown version {version}")));
    }
    let count = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = r.u32()? as usize;
        let speaker_id = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| malformed(WHAT, "speaker id is not UTF-8"))?;
        let partition_index = r.u32()?;
        let values = (0..dim).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(malformed(WHAT, "non-finite value"));
        }
        out.push(Supervector {
            values,
            speaker_id,
            partition_index,
            normalization: meta.normalization,
            ubm_fingerprint: meta.ubm_fingerprint,
        });
    }
    r.finish()?;
    Ok(out)
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_svec_file(path: &Path, svs: &[Supervector]) -> Result<()> {
    let (bytes, meta) = write_svec(svs)?;
    let meta = meta.ok_or_else(|| malformed(WHAT, "refusing to write an empty supervector set"))?;
    write_file(path, &bytes)?;
    let doc = MetaDoc {
        normalization: meta.normalization.as_str().into(),
        ubm_fingerprint: format!("{:016x}", meta.ubm_fingerprint),
    };
    write_file(&meta_path(path), format!("{}\n", serde_json::to_string_pretty(&doc)?).as_bytes())
}

pub fn read_svec_file(path: &Path) -> Result<Vec<Supervector>> {
    let doc: MetaDoc = serde_json::from_slice(&read_file(&meta_path(path))?)?;
    let meta = SvecMeta {
        normalization: doc.normalization.parse()?,
        ubm_fingerprint: u64::from_str_radix(&doc.ubm_fingerprint, 16)
            .map_err(|_| malformed(WHAT, "bad fingerprint in sidecar"))?,
    };
    read_svec(&read_file(path)?, meta)
}
