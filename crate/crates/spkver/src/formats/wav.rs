//! 16-bit mono PCM WAV.

use std::path::Path;

use spkver_core::audio::AudioClip;

use super::{malformed, read_file, write_file, FormatError, Reader, Result};

const WHAT: &str = "WAV";

/// Parses a RIFF/WAVE container holding 16-bit mono PCM.
pub fn read_wav(bytes: &[u8]) -> Result<AudioClip> {
    let mut r = Reader::new(bytes, WHAT);
    if r.take(4)? != b"RIFF" {
        return Err(malformed(WHAT, "missing RIFF tag"));
    }
    r.u32()?;
    if r.take(4)? != b"WAVE" {
        return Err(malformed(WHAT, "missing WAVE tag"));
    }
    let mut format = None;
    let mut data = None;
    while r.remaining() >= 8 {
        let id = r.take(4)?;
        let len = r.u32()? as usize;
        let body = r.take(len)?;
        if len % 2 == 1 && r.remaining() > 0 {
            r.take(1)?;
        }
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(malformed(WHAT, "fmt chunk shorter than 16 bytes"));
                }
                let mut f = Reader::new(body, WHAT);
                let (tag, channels, rate) = (f.u16()?, f.u16()?, f.u32()?);
                f.u32()?;
                f.u16()?;
                let bits = f.u16()?;
                format = Some((tag, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
    }
    let (tag, channels, rate, bits) = format.ok_or_else(|| malformed(WHAT, "no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed(WHAT, "no data chunk"))?;
    let unsupported = |detail: String| FormatError::Unsupported { what: WHAT, detail };
    if tag != 1 {
        return Err(unsupported(format!("format tag {tag} (only PCM)")));
    }
    if channels != 1 {
        return Err(unsupported(format!("{channels} channels (only mono)")));
    }
    if bits != 16 {
        return Err(unsupported(format!("{bits}-bit samples (only 16-bit)")));
    }
    if rate == 0 {
        return Err(malformed(WHAT, "sample rate 0"));
    }
    if data.len() % 2 != 0 {
        return Err(malformed(WHAT, "odd data length"));
    }
    if data.is_empty() {
        return Err(FormatError::EmptyAudio);
    }
    let pcm: Vec<i16> = data.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect();
    Ok(AudioClip::from_pcm16(&pcm, rate)?)
}

/// Canonical 44-byte-header encoding.
pub fn write_wav(clip: &AudioClip) -> Vec<u8> {
    let pcm = clip.to_pcm16();
    let data_len = (pcm.len() * 2) as u32;
    let rate = clip.sample_rate();
    let mut out = Vec::with_capacity(44 + pcm.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in pcm {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn read_wav_file(path: &Path) -> Result<AudioClip> {
    read_wav(&read_file(path)?)
}

pub fn write_wav_file(path: &Path, clip: &AudioClip) -> Result<()> {
    write_file(path, &write_wav(clip))
}
