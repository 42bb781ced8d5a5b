//! Framing and MFCC extraction.
//!
//! 20 ms frames (160 samples at 8 kHz) with a 10 ms hop, a 256-point FFT,
//! 20 triangular mel filters over 0–4000 Hz and an orthonormal DCT-II whose
//! DC term is dropped, leaving 19 coefficients per frame.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use crate::audio::{AudioClip, SpeechMask, SAMPLE_RATE};
use crate::math::{cos, log, log10, pow, sin, sqrt};
use crate::{Error, Result};

pub const FRAME_LEN: usize = 160;
pub const FRAME_HOP: usize = 80;
/// Seconds between consecutive frames at 8 kHz.
pub const FRAME_PERIOD: f64 = 0.010;
/// Cepstral dimension after dropping c0.
pub const MFCC_DIM: usize = 19;

pub type Frame = [f64; FRAME_LEN];

/// Number of full frames a signal of `n_samples` yields; partial tails are dropped.
pub fn frame_count(n_samples: usize) -> usize {
    if n_samples < FRAME_LEN {
        0
    } else {
        (n_samples - FRAME_LEN) / FRAME_HOP + 1
    }
}

/// A `T × D` matrix of feature frames, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    data: Vec<f64>,
    dim: usize,
    frame_period: f64,
    source_id: String,
}

impl FeatureSequence {
    pub fn new(
        data: Vec<f64>,
        dim: usize,
        frame_period: f64,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} values do not form rows of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("feature values must be finite".into()));
        }
        if !(frame_period > 0.0) {
            return Err(Error::InvalidArgument("frame period must be positive".into()));
        }
        Ok(Self { data, dim, frame_period, source_id: source_id.into() })
    }

    /// Builds a sequence at the standard 10 ms frame period.
    pub fn from_rows(data: Vec<f64>, dim: usize, source_id: impl Into<String>) -> Result<Self> {
        Self::new(data, dim, FRAME_PERIOD, source_id)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 * self.frame_period
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copies the frames in `range` into a new sequence with the given id.
    pub fn slice(&self, range: Range<usize>, source_id: impl Into<String>) -> Self {
        Self {
            data: self.data[range.start * self.dim..range.end * self.dim].to_vec(),
            dim: self.dim,
            frame_period: self.frame_period,
            source_id: source_id.into(),
        }
    }
}

/// Cuts `clip` into 160-sample frames with an 80-sample hop and keeps those
/// flagged as speech. Frames beyond the end of `mask` are treated as silence.
pub fn frame_signal(clip: &AudioClip, mask: &SpeechMask) -> Result<Vec<Frame>> {
    if clip.sample_rate() != SAMPLE_RATE {
        return Err(Error::InvalidArgument(alloc::format!(
            "expected {SAMPLE_RATE} Hz audio, got {} Hz",
            clip.sample_rate()
        )));
    }
    let samples = clip.samples();
    let frames = (0..frame_count(samples.len()))
        .filter(|&t| mask.flags().get(t).copied().unwrap_or(false))
        .map(|t| {
            let mut frame = [0.0; FRAME_LEN];
            frame.copy_from_slice(&samples[t * FRAME_HOP..t * FRAME_HOP + FRAME_LEN]);
            frame
        })
        .collect();
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hamming,
    Hann,
    Rectangular,
}

/// MFCC front-end parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub n_filters: usize,
    pub n_ceps: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub log_floor: f64,
    pub pre_emphasis: Option<f64>,
    pub window: Window,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            sample_rate: SAMPLE_RATE,
            n_fft: 256,
            n_filters: 20,
            n_ceps: MFCC_DIM,
            low_hz: 0.0,
            high_hz: 4000.0,
            log_floor: 1e-10,
            pre_emphasis: None,
            window: Window::Hamming,
        }
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (pow(10.0, mel / 2595.0) - 1.0)
}

/// Precomputed MFCC pipeline (window, filterbank, DCT and FFT twiddles).
#[derive(Debug, Clone)]
pub struct Mfcc {
    config: MfccConfig,
    window: Vec<f64>,
    /// `n_filters` triangles, each `n_fft / 2 + 1` weights wide.
    filters: Vec<Vec<f64>>,
    centers_hz: Vec<f64>,
    /// Rows are cepstral indices 1..=n_ceps.
    dct: Vec<Vec<f64>>,
    fft: Fft,
}

impl Mfcc {
    pub fn new(config: MfccConfig) -> Result<Self> {
        if !config.n_fft.is_power_of_two() || config.n_fft < FRAME_LEN {
            return Err(Error::InvalidArgument("FFT length must be a power of two ≥ 160".into()));
        }
        if config.n_ceps == 0 || config.n_ceps >= config.n_filters {
            return Err(Error::InvalidArgument("need 0 < n_ceps < n_filters".into()));
        }
        let nyquist = f64::from(config.sample_rate) / 2.0;
        if !(0.0 <= config.low_hz && config.low_hz < config.high_hz && config.high_hz <= nyquist) {
            return Err(Error::InvalidArgument("mel range must lie inside [0, Nyquist]".into()));
        }
        if !(config.log_floor > 0.0) {
            return Err(Error::InvalidArgument("log floor must be positive".into()));
        }

        let window = (0..FRAME_LEN)
            .map(|n| {
                let phase = 2.0 * PI * n as f64 / (FRAME_LEN - 1) as f64;
                match config.window {
                    Window::Hamming => 0.54 - 0.46 * cos(phase),
                    Window::Hann => 0.5 - 0.5 * cos(phase),
                    Window::Rectangular => 1.0,
                }
            })
            .collect();

        let n_bins = config.n_fft / 2 + 1;
        let bin_hz = f64::from(config.sample_rate) / config.n_fft as f64;
        let mel_lo = hz_to_mel(config.low_hz);
        let mel_hi = hz_to_mel(config.high_hz);
        let edges: Vec<f64> = (0..config.n_filters + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (config.n_filters + 1) as f64))
            .collect();
        let filters = (0..config.n_filters)
            .map(|j| {
                let (lo, center, hi) = (edges[j], edges[j + 1], edges[j + 2]);
                (0..n_bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f >= lo && f <= center {
                            (f - lo) / (center - lo)
                        } else if f > center && f <= hi {
                            (hi - f) / (hi - center)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let centers_hz = edges[1..=config.n_filters].to_vec();

        let n = config.n_filters as f64;
        let scale = sqrt(2.0 / n);
        let dct = (1..=config.n_ceps)
            .map(|k| {
                (0..config.n_filters)
                    .map(|j| scale * cos(PI * k as f64 * (j as f64 + 0.5) / n))
                    .collect()
            })
            .collect();

        let fft = Fft::new(config.n_fft);
        Ok(Self { config, window, filters, centers_hz, dct, fft })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    /// Center frequency of every mel filter, in Hz.
    pub fn filter_centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Magnitude spectrum (bins `0..=n_fft/2`) of one windowed, zero-padded frame.
    pub fn magnitude_spectrum(&self, frame: &Frame) -> Vec<f64> {
        let n = self.config.n_fft;
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        let mut prev = 0.0;
        for (i, (&s, &w)) in frame.iter().zip(&self.window).enumerate() {
            let x = match self.config.pre_emphasis {
                Some(a) if i > 0 => s - a * prev,
                _ => s,
            };
            prev = s;
            re[i] = x * w;
        }
        self.fft.forward(&mut re, &mut im);
        (0..=n / 2).map(|k| sqrt(re[k] * re[k] + im[k] * im[k])).collect()
    }

    /// Linear (unlogged) mel filterbank outputs for one frame.
    pub fn filterbank_energies(&self, frame: &Frame) -> Vec<f64> {
        let spectrum = self.magnitude_spectrum(frame);
        self.filters
            .iter()
            .map(|weights| weights.iter().zip(&spectrum).map(|(w, m)| w * m).sum())
            .collect()
    }

    /// Cepstral coefficients 1..=n_ceps of one frame.
    pub fn compute_frame(&self, frame: &Frame) -> Vec<f64> {
        let log_energies: Vec<f64> = self
            .filterbank_energies(frame)
            .into_iter()
            .map(|e| log(e.max(self.config.log_floor)))
            .collect();
        self.dct
            .iter()
            .map(|row| row.iter().zip(&log_energies).map(|(c, l)| c * l).sum())
            .collect()
    }

    /// Extracts a feature sequence. Values are rounded to single precision so
    /// that the on-disk `f32` representation is lossless.
    pub fn extract(&self, frames: &[Frame], source_id: impl Into<String>) -> FeatureSequence {
        let mut data = Vec::with_capacity(frames.len() * self.config.n_ceps);
        for frame in frames {
            data.extend(self.compute_frame(frame).into_iter().map(|v| v as f32 as f64));
        }
        let period = FRAME_HOP as f64 / f64::from(self.config.sample_rate);
        FeatureSequence::new(data, self.config.n_ceps, period, source_id)
            .expect("MFCC output is finite by construction")
    }
}

/// MFCCs with the default configuration.
pub fn mfcc(frames: &[Frame]) -> FeatureSequence {
    Mfcc::new(MfccConfig::default())
        .expect("default MFCC configuration is valid")
        .extract(frames, "")
}

/// Iterative radix-2 complex FFT.
#[derive(Debug, Clone)]
struct Fft {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Fft {
    fn new(n: usize) -> Self {
        let half = n / 2;
        let angle = |k: usize| -2.0 * PI * k as f64 / n as f64;
        Self {
            n,
            cos: (0..half).map(|k| cos(angle(k))).collect(),
            sin: (0..half).map(|k| sin(angle(k))).collect(),
        }
    }

    fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let (wr, wi) = (self.cos[k * step], self.sin[k * step]);
                    let a = start + k;
                    let b = a + len / 2;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::SpeechMask;

    fn tone_frame(freq: f64, offset: usize) -> Frame {
        let mut f = [0.0; FRAME_LEN];
        for (i, v) in f.iter_mut().enumerate() {
            *v = sin(2.0 * PI * freq * (i + offset) as f64 / 8000.0);
        }
        f
    }

    #[test]
    fn framing_arithmetic() {
        assert_eq!(frame_count(8000), 99);
        assert_eq!(frame_count(160), 1);
        assert_eq!(frame_count(159), 0);
        assert_eq!(frame_count(120 * 8000), 11_999);

        let clip = AudioClip::new(vec![0.25; 8000], 8000).unwrap();
        let frames = frame_signal(&clip, &SpeechMask::all_speech(&clip)).unwrap();
        assert_eq!(frames.len(), 99);
        let one = AudioClip::new(vec![0.25; 160], 8000).unwrap();
        assert_eq!(frame_signal(&one, &SpeechMask::all_speech(&one)).unwrap().len(), 1);
    }

    #[test]
    fn masked_frames_are_dropped() {
        let clip = AudioClip::new((0..800).map(|i| i as f64 / 800.0).collect(), 8000).unwrap();
        let flags = (0..frame_count(800)).map(|t| t % 2 == 0).collect();
        let frames = frame_signal(&clip, &SpeechMask::from_flags(flags)).unwrap();
        assert_eq!(frames.len(), 5);
        assert_eq!(frames[1][0], clip.samples()[160]);
    }

    #[test]
    fn rejects_other_sample_rates() {
        let clip = AudioClip::new(vec![0.0; 1600], 16000).unwrap();
        assert!(frame_signal(&clip, &SpeechMask::all_speech(&clip)).is_err());
    }

    #[test]
    fn nineteen_coefficients() {
        let seq = mfcc(&[tone_frame(300.0, 0), tone_frame(1200.0, 3)]);
        assert_eq!(seq.dim(), 19);
        assert_eq!(seq.len(), 2);
    }

    #[test]
    fn identical_frames_identical_rows() {
        let f = tone_frame(700.0, 11);
        let seq = mfcc(&[f, f]);
        assert_eq!(seq.row(0), seq.row(1));
    }

    #[test]
    fn silent_frame_gives_zero_cepstrum() {
        let seq = mfcc(&[[0.0; FRAME_LEN]]);
        assert!(seq.row(0).iter().all(|c| c.abs() < 1e-9), "{:?}", seq.row(0));
    }

    #[test]
    fn period_shift_leaves_cepstrum_unchanged() {
        // 200 Hz has a 40-sample period.
        let m = Mfcc::new(MfccConfig::default()).unwrap();
        let a = m.compute_frame(&tone_frame(200.0, 0));
        let b = m.compute_frame(&tone_frame(200.0, 40));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn fft_matches_direct_dft() {
        let m = Mfcc::new(MfccConfig::default()).unwrap();
        let frame = tone_frame(1234.5, 7);
        let fast = m.magnitude_spectrum(&frame);
        let windowed: Vec<f64> = frame.iter().zip(&m.window).map(|(s, w)| s * w).collect();
        for (k, &mag) in fast.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, x) in windowed.iter().enumerate() {
                let a = -2.0 * PI * (k * n) as f64 / 256.0;
                re += x * cos(a);
                im += x * sin(a);
            }
            assert!((sqrt(re * re + im * im) - mag).abs() < 1e-9);
        }
    }

    #[test]
    fn mel_scale_round_trip() {
        for hz in [0.0, 100.0, 1000.0, 3999.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(1000.0) - 999.985_5).abs() < 1e-3);
    }

    /// Direct O(N²) DFT power into independently built triangular mel filters.
    fn reference_filterbank(frame: &Frame) -> Vec<f64> {
        let n_fft = 256;
        let x: Vec<f64> = (0..n_fft)
            .map(|i| if i < FRAME_LEN { frame[i] * (0.54 - 0.46 * cos(2.0 * PI * i as f64 / 159.0)) } else { 0.0 })
            .collect();
        let mag: Vec<f64> = (0..=n_fft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * i) as f64 / n_fft as f64;
                    re += v * cos(a);
                    im += v * sin(a);
                }
                sqrt(re * re + im * im)
            })
            .collect();
        let mel = |f: f64| 2595.0 * log10(1.0 + f / 700.0);
        let top = mel(4000.0);
        let edge = |i: usize| 700.0 * (pow(10.0, top * i as f64 / 21.0 / 2595.0) - 1.0);
        (0..20)
            .map(|j| {
                let (lo, c, hi) = (edge(j), edge(j + 1), edge(j + 2));
                mag.iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let f = k as f64 * 8000.0 / 256.0;
                        let w = if f < lo || f > hi { 0.0 } else if f <= c { (f - lo) / (c - lo) } else { (hi - f) / (hi - c) };
                        w * m
                    })
                    .sum()
            })
            .collect()
    }

    fn argmax(v: &[f64]) -> usize {
        (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
    }

    #[test]
    fn one_kilohertz_peaks_in_nearest_filter() {
        let m = Mfcc::new(MfccConfig::default()).unwrap();
        let frame = tone_frame(1000.0, 0);
        let reference = reference_filterbank(&frame);
        let energies = m.filterbank_energies(&frame);
        for (a, b) in energies.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-9 * b.max(1.0));
        }
        let centers = m.filter_centers_hz();
        let nearest = argmax(&centers.iter().map(|c| -(c - 1000.0).abs()).collect::<Vec<_>>());
        assert_eq!(argmax(&reference), nearest);
        assert_eq!(argmax(&energies), nearest);
    }
}
