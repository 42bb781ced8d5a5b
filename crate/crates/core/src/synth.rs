//! Seeded synthetic corpora in feature space, the 1-D trimodal demo and a
//! tone generator for exercising the audio front-end.
//!
//! Frames are drawn from a shared library of Gaussian "acoustic zones".
//! Every speaker perturbs each zone mean by a private offset; every
//! utterance adds a session offset and visits only a few zones per
//! five-second window, so short utterances cover few zones.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audio::AudioClip;
use crate::eval::Trial;
use crate::features::{FeatureSequence, FRAME_PERIOD, MFCC_DIM};
use crate::math::{exp, sin};
use crate::{Error, Result};

pub const FRAMES_PER_SECOND: usize = 100;
/// Frames per coverage window; each window visits `zones_per_utterance` zones.
pub const COVERAGE_WINDOW: usize = 500;

const STREAM_ZONES: u64 = 1;
const STREAM_SPEAKER: u64 = 2;
const STREAM_UTTERANCE: u64 = 3;
const STREAM_TRIALS: u64 = 4;
const STREAM_TRIMODAL: u64 = 5;

/// Independent generator for one `(kind, a, b)` sub-stream of `seed`.
fn sub_rng(seed: u64, kind: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 56) | ((a & 0xff_ffff) << 32) | (b & 0xffff_ffff));
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    /// Clients plus background speakers.
    pub n_speakers: usize,
    /// Speakers reserved for UBM training.
    pub n_background: usize,
    pub train_seconds: f64,
    /// Length of each background speaker's single utterance.
    pub background_seconds: f64,
    pub test_durations: Vec<f64>,
    /// Independent test sessions per client; each is cut into segments of every test duration.
    pub n_test_per_speaker: usize,
    pub zone_count: usize,
    /// Zones visited per five-second window.
    pub zones_per_utterance: usize,
    /// Spread of zone means around the origin.
    pub zone_spread: f64,
    pub speaker_shift_scale: f64,
    /// Offset shared by the speakers of one family (two families).
    pub family_shift_scale: f64,
    /// Per-utterance offset applied to every frame.
    pub session_shift_scale: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_speakers: 130,
            n_background: 30,
            train_seconds: 120.0,
            background_seconds: 20.0,
            test_durations: vec![20.0, 10.0, 5.0],
            n_test_per_speaker: 3,
            zone_count: 64,
            zones_per_utterance: 8,
            zone_spread: 2.0,
            speaker_shift_scale: 0.3,
            family_shift_scale: 0.25,
            session_shift_scale: 0.1,
            seed: 20,
        }
    }
}

fn frames_for(seconds: f64) -> usize {
    libm::round(seconds * FRAMES_PER_SECOND as f64) as usize
}

impl CorpusConfig {
    pub fn n_clients(&self) -> usize {
        self.n_speakers.saturating_sub(self.n_background)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.n_background == 0 || self.n_clients() == 0 {
            return bad("need at least one background and one client speaker");
        }
        if self.n_test_per_speaker == 0 || self.zone_count == 0 || self.zones_per_utterance == 0 {
            return bad("counts must be at least 1");
        }
        if self.zones_per_utterance > self.zone_count {
            return bad("zones_per_utterance exceeds zone_count");
        }
        if self.zone_count > u16::MAX as usize {
            return bad("zone_count too large");
        }
        if self.test_durations.is_empty() {
            return bad("no test durations");
        }
        for &d in self.test_durations.iter().chain([&self.train_seconds, &self.background_seconds]) {
            if !(d.is_finite() && frames_for(d) >= 1) {
                return bad("durations must be positive");
            }
        }
        for s in [
            self.zone_spread,
            self.speaker_shift_scale,
            self.family_shift_scale,
            self.session_shift_scale,
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return bad("scales must be finite and non-negative");
            }
        }
        Ok(())
    }

    /// Length of one test session: the longest test duration.
    pub fn session_seconds(&self) -> f64 {
        self.test_durations.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Background,
    Client,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Background => "background",
            Role::Client => "client",
        }
    }
}

/// The shared zone means and per-dimension standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneLibrary {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub dim: usize,
}

impl ZoneLibrary {
    pub fn len(&self) -> usize {
        self.means.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn mean(&self, z: usize) -> &[f64] {
        &self.means[z * self.dim..(z + 1) * self.dim]
    }

    pub fn std(&self, z: usize) -> &[f64] {
        &self.stds[z * self.dim..(z + 1) * self.dim]
    }
}

/// Generator parameters of one speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerTruth {
    pub id: String,
    pub role: Role,
    pub family: usize,
    /// Per-zone mean offsets including the family offset, `zone_count × dim`.
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UtteranceKind {
    Train,
    Test { session: usize, duration: f64, segment: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub speaker_id: String,
    pub kind: UtteranceKind,
    pub features: FeatureSequence,
    /// Generating zone of every frame.
    pub zones: Vec<u16>,
}

impl Utterance {
    pub fn is_test(&self) -> bool {
        matches!(self.kind, UtteranceKind::Test { .. })
    }

    pub fn test_duration(&self) -> Option<f64> {
        match self.kind {
            UtteranceKind::Test { duration, .. } => Some(duration),
            UtteranceKind::Train => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub config: CorpusConfig,
    pub zones: ZoneLibrary,
    pub speakers: Vec<SpeakerTruth>,
    /// Per speaker: the training utterance, then test segments by session,
    /// duration and segment.
    pub utterances: Vec<Utterance>,
}

impl SyntheticCorpus {
    pub fn speakers_with_role(&self, role: Role) -> impl Iterator<Item = &SpeakerTruth> {
        self.speakers.iter().filter(move |s| s.role == role)
    }

    pub fn client_ids(&self) -> Vec<&str> {
        self.speakers_with_role(Role::Client).map(|s| s.id.as_str()).collect()
    }

    pub fn background_ids(&self) -> Vec<&str> {
        self.speakers_with_role(Role::Background).map(|s| s.id.as_str()).collect()
    }

    pub fn utterance(&self, id: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.id == id)
    }

    pub fn train_utterance(&self, speaker: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.speaker_id == speaker && !u.is_test())
    }

    /// Training utterances of the background speakers.
    pub fn background_utterances(&self) -> Vec<&Utterance> {
        let bg = self.background_ids();
        self.utterances
            .iter()
            .filter(|u| !u.is_test() && bg.contains(&u.speaker_id.as_str()))
            .collect()
    }

    /// Test segments of the given duration, in corpus order.
    pub fn test_utterances(&self, duration: f64) -> Vec<&Utterance> {
        self.utterances.iter().filter(|u| u.test_duration() == Some(duration)).collect()
    }
}

fn zone_library(cfg: &CorpusConfig) -> ZoneLibrary {
    let d = MFCC_DIM;
    let mut rng = sub_rng(cfg.seed, STREAM_ZONES, 0, 0);
    let means = (0..cfg.zone_count * d).map(|_| cfg.zone_spread * normal(&mut rng)).collect();
    let stds = (0..cfg.zone_count * d).map(|_| exp(0.2 * normal(&mut rng))).collect();
    ZoneLibrary { means, stds, dim: d }
}

fn family_offsets(cfg: &CorpusConfig) -> [Vec<f64>; 2] {
    let n = cfg.zone_count * MFCC_DIM;
    let mut rng = sub_rng(cfg.seed, STREAM_SPEAKER, 0xff_ffff, 0);
    let mut draw = || (0..n).map(|_| cfg.family_shift_scale * normal(&mut rng)).collect::<Vec<_>>();
    [draw(), draw()]
}

fn speaker_truth(cfg: &CorpusConfig, index: usize, families: &[Vec<f64>; 2]) -> SpeakerTruth {
    let role = if index < cfg.n_background { Role::Background } else { Role::Client };
    let id = match role {
        Role::Background => format!("bkg{index:02}"),
        Role::Client => format!("spk{:03}", index - cfg.n_background),
    };
    let family = index % 2;
    let mut rng = sub_rng(cfg.seed, STREAM_SPEAKER, index as u64, 0);
    let offsets = families[family]
        .iter()
        .map(|f| f + cfg.speaker_shift_scale * normal(&mut rng))
        .collect();
    SpeakerTruth { id, role, family, offsets }
}

/// Zone label of every frame: each window of [`COVERAGE_WINDOW`] frames is cut
/// into `k` near-equal contiguous runs, one per distinct randomly chosen zone.
fn zone_sequence(rng: &mut ChaCha8Rng, frames: usize, zone_count: usize, k: usize) -> Vec<u16> {
    let mut all: Vec<u16> = (0..zone_count as u16).collect();
    let mut labels = Vec::with_capacity(frames);
    let mut start = 0;
    while start < frames {
        let len = COVERAGE_WINDOW.min(frames - start);
        let (picked, _) = all.partial_shuffle(rng, k);
        let runs = k.min(len);
        for (r, &z) in picked.iter().take(runs).enumerate() {
            let run_len = len / runs + usize::from(r < len % runs);
            labels.extend(core::iter::repeat_n(z, run_len));
        }
        start += len;
    }
    labels
}

fn render(
    cfg: &CorpusConfig,
    lib: &ZoneLibrary,
    spk: &SpeakerTruth,
    rng: &mut ChaCha8Rng,
    zones: &[u16],
) -> Vec<f64> {
    let d = lib.dim;
    let session: Vec<f64> = (0..d).map(|_| cfg.session_shift_scale * normal(rng)).collect();
    let mut data = Vec::with_capacity(zones.len() * d);
    for &z in zones {
        let z = z as usize;
        let (m, s, o) = (lib.mean(z), lib.std(z), &spk.offsets[z * d..(z + 1) * d]);
        for k in 0..d {
            let x = m[k] + o[k] + session[k] + s[k] * normal(rng);
            data.push(x as f32 as f64);
        }
    }
    data
}

fn sequence(data: Vec<f64>, id: &str) -> FeatureSequence {
    FeatureSequence::new(data, MFCC_DIM, FRAME_PERIOD, id).expect("generator emits finite rows")
}

fn speaker_utterances(cfg: &CorpusConfig, lib: &ZoneLibrary, spk: &SpeakerTruth, index: usize) -> Vec<Utterance> {
    let k = cfg.zones_per_utterance;
    let d = lib.dim;
    let train_frames = frames_for(match spk.role {
        Role::Background => cfg.background_seconds,
        Role::Client => cfg.train_seconds,
    });
    let mut rng = sub_rng(cfg.seed, STREAM_UTTERANCE, index as u64, 0);
    let zones = zone_sequence(&mut rng, train_frames, cfg.zone_count, k);
    let id = format!("{}_train", spk.id);
    let features = sequence(render(cfg, lib, spk, &mut rng, &zones), &id);
    let mut out = vec![Utterance { id, speaker_id: spk.id.clone(), kind: UtteranceKind::Train, features, zones }];
    if spk.role == Role::Background {
        return out;
    }

    let session_frames = frames_for(cfg.session_seconds());
    for session in 0..cfg.n_test_per_speaker {
        let mut rng = sub_rng(cfg.seed, STREAM_UTTERANCE, index as u64, session as u64 + 1);
        let zones = zone_sequence(&mut rng, session_frames, cfg.zone_count, k);
        let data = render(cfg, lib, spk, &mut rng, &zones);
        for &duration in &cfg.test_durations {
            let len = frames_for(duration);
            for segment in 0..session_frames / len {
                let range = segment * len..(segment + 1) * len;
                let id = format!("{}_s{session}_{}s_{segment}", spk.id, fmt_seconds(duration));
                out.push(Utterance {
                    features: sequence(data[range.start * d..range.end * d].to_vec(), &id),
                    zones: zones[range].to_vec(),
                    id,
                    speaker_id: spk.id.clone(),
                    kind: UtteranceKind::Test { session, duration, segment },
                });
            }
        }
    }
    out
}

/// Compact decimal rendering of a duration for identifiers: `5`, `2.5`.
pub fn fmt_seconds(s: f64) -> String {
    if s == libm::trunc(s) {
        format!("{}", s as i64)
    } else {
        format!("{s}")
    }
}

/// Generates the whole corpus. Each speaker and utterance draws from its own
/// sub-stream of `cfg.seed`, so the result does not depend on generation order.
pub fn make_corpus(cfg: &CorpusConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let zones = zone_library(cfg);
    let families = family_offsets(cfg);
    let speakers: Vec<SpeakerTruth> = (0..cfg.n_speakers).map(|i| speaker_truth(cfg, i, &families)).collect();
    let utterances = speakers
        .iter()
        .enumerate()
        .flat_map(|(i, s)| speaker_utterances(cfg, &zones, s, i))
        .collect();
    Ok(SyntheticCorpus { config: cfg.clone(), zones, speakers, utterances })
}

/// Trials for every test segment of `duration`: one target trial against the
/// segment's own speaker, plus nontarget trials against `impostors` other
/// clients chosen per segment (all other clients when `None`).
pub fn make_trials(corpus: &SyntheticCorpus, duration: f64, impostors: Option<usize>, seed: u64) -> Vec<Trial> {
    let clients = corpus.client_ids();
    let mut trials = Vec::new();
    for (u, utt) in corpus.test_utterances(duration).into_iter().enumerate() {
        let mut others: Vec<&str> = clients.iter().copied().filter(|c| *c != utt.speaker_id).collect();
        if let Some(k) = impostors {
            if k < others.len() {
                let mut rng = sub_rng(seed, STREAM_TRIALS, u as u64, libm::round(duration * 1000.0) as u64);
                others.shuffle(&mut rng);
                others.truncate(k);
                others.sort_unstable();
            }
        }
        for c in clients.iter().filter(|c| **c == utt.speaker_id).chain(others.iter()) {
            trials.push(Trial {
                target_speaker: (*c).into(),
                test_utterance: utt.id.clone(),
                is_target: *c == utt.speaker_id,
            });
        }
    }
    trials
}

/// Samples and generating parameters of the 1-D three-mode mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Trimodal {
    pub samples: Vec<f64>,
    pub means: [f64; 3],
    pub stds: [f64; 3],
    pub weights: [f64; 3],
}

impl Trimodal {
    pub fn mixture_mean(&self) -> f64 {
        self.means.iter().zip(&self.weights).map(|(m, w)| m * w).sum()
    }

    pub fn mixture_variance(&self) -> f64 {
        let mu = self.mixture_mean();
        (0..3)
            .map(|i| self.weights[i] * (self.stds[i] * self.stds[i] + (self.means[i] - mu) * (self.means[i] - mu)))
            .sum()
    }

    pub fn as_sequence(&self) -> FeatureSequence {
        FeatureSequence::new(self.samples.clone(), 1, FRAME_PERIOD, "trimodal").expect("finite samples")
    }
}

pub fn make_trimodal_1d(n: usize, seed: u64) -> Result<Trimodal> {
    if n < 300 {
        return Err(Error::InvalidArgument("trimodal demo needs at least 300 samples".into()));
    }
    let means = [-4.0, 0.0, 4.0];
    let stds = [0.5; 3];
    let weights = [0.3, 0.4, 0.3];
    let mut rng = sub_rng(seed, STREAM_TRIMODAL, 0, 0);
    let samples = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let c = if u < weights[0] { 0 } else if u < weights[0] + weights[1] { 1 } else { 2 };
            means[c] + stds[c] * normal(&mut rng)
        })
        .collect();
    Ok(Trimodal { samples, means, stds, weights })
}

/// One piece of a synthetic recording: a harmonic tone at `f0` Hz, or silence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneSegment {
    pub f0: Option<f64>,
    pub seconds: f64,
}

/// Renders tone and silence segments at 8 kHz. Tones are the first five
/// harmonics of `f0` with `1/h` amplitudes, scaled to peak `amplitude`.
pub fn tone_clip(segments: &[ToneSegment], amplitude: f64, sample_rate: u32) -> Result<AudioClip> {
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::InvalidArgument("amplitude must be in (0, 1]".into()));
    }
    let norm: f64 = (1..=5).map(|h| 1.0 / h as f64).sum();
    let mut samples = Vec::new();
    for seg in segments {
        let n = libm::round(seg.seconds * sample_rate as f64) as usize;
        match seg.f0 {
            None => samples.extend(core::iter::repeat_n(0.0, n)),
            Some(f0) => samples.extend((0..n).map(|i| {
                let t = i as f64 / sample_rate as f64;
                let s: f64 = (1..=5).map(|h| sin(2.0 * core::f64::consts::PI * f0 * h as f64 * t) / h as f64).sum();
                amplitude * s / norm
            })),
        }
    }
    AudioClip::new(samples, sample_rate)
}
