//! Normalized audio clips and energy-based speech detection.

use alloc::vec::Vec;

use crate::features::{frame_count, FRAME_HOP, FRAME_LEN};
use crate::{Error, Result};

/// Sample rate accepted by the front-end.
pub const SAMPLE_RATE: u32 = 8000;

/// Default speech floor relative to the clip's mean frame energy.
pub const DEFAULT_FLOOR_DB: f64 = -30.0;

/// Mono audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::InvalidArgument("amplitudes must lie in [-1, 1]".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    /// Normalizes 16-bit PCM by 1/32768.
    pub fn from_pcm16(pcm: &[i16], sample_rate: u32) -> Result<Self> {
        Self::new(pcm.iter().map(|&s| f64::from(s) / 32768.0).collect(), sample_rate)
    }

    /// Inverse of [`AudioClip::from_pcm16`]; exact for clips that came from PCM.
    pub fn to_pcm16(&self) -> Vec<i16> {
        self.samples
            .iter()
            .map(|&s| libm::round(s * 32768.0).clamp(-32768.0, 32767.0) as i16)
            .collect()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Per-frame speech flags on the framing grid of [`crate::features::frame_signal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeechMask(Vec<bool>);

impl SpeechMask {
    /// A mask that keeps every frame of `clip`.
    pub fn all_speech(clip: &AudioClip) -> Self {
        Self(alloc::vec![true; frame_count(clip.len())])
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        Self(flags)
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn speech_frames(&self) -> usize {
        self.0.iter().filter(|&&s| s).count()
    }
}

/// Mean squared amplitude of every frame on the analysis grid.
pub fn frame_energies(clip: &AudioClip) -> Vec<f64> {
    let n = frame_count(clip.len());
    (0..n)
        .map(|t| {
            let frame = &clip.samples[t * FRAME_HOP..t * FRAME_HOP + FRAME_LEN];
            frame.iter().map(|s| s * s).sum::<f64>() / FRAME_LEN as f64
        })
        .collect()
}

/// Marks a frame as speech when its energy exceeds the clip's mean frame
/// energy by more than `floor_db` (a negative number of decibels).
///
/// The comparison is done in the linear domain, which makes the mask exactly
/// invariant to power-of-two gain changes and invariant up to rounding for
/// any other gain. A clip shorter than one frame yields an empty mask.
pub fn detect_speech(clip: &AudioClip, floor_db: f64) -> Result<SpeechMask> {
    if clip.is_empty() {
        return Err(Error::Empty("audio clip"));
    }
    if !(floor_db < 0.0) {
        return Err(Error::InvalidArgument("speech floor must be negative dB".into()));
    }
    let energies = frame_energies(clip);
    if energies.is_empty() {
        return Ok(SpeechMask(Vec::new()));
    }
    let mean = energies.iter().sum::<f64>() / energies.len() as f64;
    let threshold = mean * libm::pow(10.0, floor_db / 10.0);
    Ok(SpeechMask(energies.iter().map(|&e| e > threshold).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn sine(n: usize, freq: f64, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|i| amp * libm::sin(2.0 * PI * freq * i as f64 / 8000.0))
            .collect()
    }

    #[test]
    fn silence_is_never_speech() {
        let clip = AudioClip::new(vec![0.0; 8000], 8000).unwrap();
        let mask = detect_speech(&clip, -30.0).unwrap();
        assert_eq!(mask.len(), 99);
        assert_eq!(mask.speech_frames(), 0);
    }

    #[test]
    fn steady_tone_is_all_speech() {
        let clip = AudioClip::new(sine(8000, 440.0, 1.0), 8000).unwrap();
        let mask = detect_speech(&clip, -30.0).unwrap();
        assert_eq!(mask.speech_frames(), mask.len());
    }

    #[test]
    fn tone_then_silence_matches_reference_energies() {
        let mut samples = sine(8000, 440.0, 1.0);
        samples.extend(core::iter::repeat(0.0).take(8000));
        let clip = AudioClip::new(samples.clone(), 8000).unwrap();
        let mask = detect_speech(&clip, -30.0).unwrap();

        // Reference: direct per-frame energy in dB against the dB threshold.
        let frames = (samples.len() - 160) / 80 + 1;
        let energies: Vec<f64> = (0..frames)
            .map(|t| samples[t * 80..t * 80 + 160].iter().map(|s| s * s).sum::<f64>() / 160.0)
            .collect();
        let ref_db = 10.0 * libm::log10(energies.iter().sum::<f64>() / frames as f64);
        let expected: Vec<bool> = energies
            .iter()
            .map(|&e| 10.0 * libm::log10(e) > ref_db - 30.0)
            .collect();
        assert_eq!(mask.flags(), expected.as_slice());
        // 99 frames inside the first second plus the one frame straddling the boundary.
        assert_eq!(mask.speech_frames(), 100);
        assert!(mask.flags()[..100].iter().all(|&s| s));
        assert!(mask.flags()[100..].iter().all(|&s| !s));
    }

    #[test]
    fn short_clip_gives_empty_mask() {
        let clip = AudioClip::new(vec![0.5; 100], 8000).unwrap();
        assert!(detect_speech(&clip, -30.0).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(AudioClip::new(vec![1.5], 8000).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
        let clip = AudioClip::new(vec![0.1; 400], 8000).unwrap();
        assert!(detect_speech(&clip, 3.0).is_err());
        let empty = AudioClip::new(Vec::new(), 8000).unwrap();
        assert_eq!(detect_speech(&empty, -30.0), Err(Error::Empty("audio clip")));
    }

    #[test]
    fn pcm_normalization() {
        let clip = AudioClip::from_pcm16(&[32767, -32768, 0], 8000).unwrap();
        assert!((clip.samples()[0] - 0.999_969_482_421_875).abs() < 1e-15);
        assert_eq!(clip.samples()[1], -1.0);
        assert_eq!(clip.to_pcm16(), vec![32767, -32768, 0]);
    }
}
