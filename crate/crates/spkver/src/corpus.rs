//! Synthetic corpora on disk: a JSON manifest, MFCV feature files, trial
//! lists per test duration and the generator's ground truth.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spkver_core::features::{FeatureSequence, FRAME_PERIOD, MFCC_DIM};
use spkver_core::synth::{fmt_seconds, make_trials, Role, SyntheticCorpus, UtteranceKind};

use crate::config::ExperimentConfig;
use crate::formats::mfcv::{read_mfcv, write_mfcv};
use crate::formats::trials::write_trials_file;
use crate::formats::{malformed, read_file, write_file, Result};

pub const MANIFEST: &str = "manifest.json";
pub const TRUTH: &str = "truth.json";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerEntry {
    pub id: String,
    pub role: String,
    pub family: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceEntry {
    pub id: String,
    pub speaker: String,
    /// `train` or `test`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<usize>,
    pub frames: usize,
    /// Relative to the corpus directory.
    pub path: String,
    pub sha256: String,
    /// Generating zone of every frame as `[zone, run length]` pairs.
    pub zones: Vec<[u32; 2]>,
}

impl UtteranceEntry {
    pub fn is_test(&self) -> bool {
        self.kind == "test"
    }

    /// Expands the run-length zone labels.
    pub fn zone_labels(&self) -> Vec<u16> {
        self.zones.iter().flat_map(|&[z, n]| std::iter::repeat_n(z as u16, n as usize)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFileEntry {
    pub duration: f64,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub version: u32,
    /// Canonical text of the configuration the corpus was generated with.
    pub config: String,
    pub dim: usize,
    pub frame_period: f64,
    pub speakers: Vec<SpeakerEntry>,
    pub utterances: Vec<UtteranceEntry>,
    pub trials: Vec<TrialFileEntry>,
}

#[derive(Serialize)]
struct Truth<'a> {
    zone_means: &'a [f64],
    zone_stds: &'a [f64],
    speaker_offsets: BTreeMap<&'a str, &'a [f64]>,
}

fn run_length(labels: &[u16]) -> Vec<[u32; 2]> {
    let mut out: Vec<[u32; 2]> = Vec::new();
    for &z in labels {
        match out.last_mut() {
            Some([last, n]) if *last == u32::from(z) => *n += 1,
            _ => out.push([u32::from(z), 1]),
        }
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn trial_file_name(duration: f64) -> String {
    format!("trials_{}s.tsv", fmt_seconds(duration))
}

/// Writes `corpus` under `dir` and returns its manifest.
pub fn write_corpus(dir: &Path, corpus: &SyntheticCorpus, cfg: &ExperimentConfig) -> Result<CorpusManifest> {
    let feature_dir = &cfg.feature_dir;
    let utterances = corpus
        .utterances
        .par_iter()
        .map(|u| {
            let bytes = write_mfcv(&u.features);
            let path = format!("{feature_dir}/{}.mfcv", u.id);
            write_file(&dir.join(&path), &bytes)?;
            let (kind, session, duration, segment) = match u.kind {
                UtteranceKind::Train => ("train", None, None, None),
                UtteranceKind::Test { session, duration, segment } => ("test", Some(session), Some(duration), Some(segment)),
            };
            Ok(UtteranceEntry {
                id: u.id.clone(),
                speaker: u.speaker_id.clone(),
                kind: kind.into(),
                session,
                duration,
                segment,
                frames: u.features.len(),
                path,
                sha256: sha256_hex(&bytes),
                zones: run_length(&u.zones),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trials = Vec::new();
    for &d in &corpus.config.test_durations {
        let path = trial_file_name(d);
        write_trials_file(&dir.join(&path), &make_trials(corpus, d, cfg.impostors, cfg.seed))?;
        trials.push(TrialFileEntry { duration: d, path });
    }

    let truth = Truth {
        zone_means: &corpus.zones.means,
        zone_stds: &corpus.zones.stds,
        speaker_offsets: corpus.speakers.iter().map(|s| (s.id.as_str(), s.offsets.as_slice())).collect(),
    };
    write_file(&dir.join(TRUTH), serde_json::to_string(&truth)?.as_bytes())?;

    let manifest = CorpusManifest {
        version: VERSION,
        config: cfg.to_text(),
        dim: MFCC_DIM,
        frame_period: FRAME_PERIOD,
        speakers: corpus
            .speakers
            .iter()
            .map(|s| SpeakerEntry { id: s.id.clone(), role: s.role.as_str().into(), family: s.family })
            .collect(),
        utterances,
        trials,
    };
    write_file(&dir.join(MANIFEST), (serde_json::to_string_pretty(&manifest)? + "\n").as_bytes())?;
    Ok(manifest)
}

/// A corpus directory opened through its manifest.
#[derive(Debug, Clone)]
pub struct DiskCorpus {
    pub dir: PathBuf,
    pub manifest: CorpusManifest,
    pub config: ExperimentConfig,
    index: BTreeMap<String, usize>,
}

impl DiskCorpus {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest: CorpusManifest = serde_json::from_slice(&read_file(&dir.join(MANIFEST))?)?;
        if manifest.version != VERSION {
            return Err(malformed("corpus manifest", format!("unknown version {}", manifest.version)));
        }
        let config = ExperimentConfig::parse(&manifest.config)
            .map_err(|e| malformed("corpus manifest", format!("embedded config: {e}")))?;
        let mut index = BTreeMap::new();
        for (i, u) in manifest.utterances.iter().enumerate() {
            if index.insert(u.id.clone(), i).is_some() {
                return Err(malformed("corpus manifest", format!("duplicate utterance {}", u.id)));
            }
            if !manifest.speakers.iter().any(|s| s.id == u.speaker) {
                return Err(malformed("corpus manifest", format!("utterance {} has unknown speaker {}", u.id, u.speaker)));
            }
        }
        Ok(Self { dir: dir.into(), manifest, config, index })
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(MANIFEST)
    }

    fn speakers_with_role(&self, role: Role) -> Vec<&str> {
        self.manifest.speakers.iter().filter(|s| s.role == role.as_str()).map(|s| s.id.as_str()).collect()
    }

    pub fn client_ids(&self) -> Vec<&str> {
        self.speakers_with_role(Role::Client)
    }

    pub fn background_ids(&self) -> Vec<&str> {
        self.speakers_with_role(Role::Background)
    }

    pub fn utterance(&self, id: &str) -> Option<&UtteranceEntry> {
        self.index.get(id).map(|&i| &self.manifest.utterances[i])
    }

    pub fn train_utterance(&self, speaker: &str) -> Option<&UtteranceEntry> {
        self.manifest.utterances.iter().find(|u| u.speaker == speaker && !u.is_test())
    }

    /// Loads an utterance's features, checking its hash and frame count.
    pub fn features(&self, id: &str) -> Result<FeatureSequence> {
        let u = self.utterance(id).ok_or_else(|| malformed("corpus", format!("unknown utterance {id}")))?;
        let bytes = read_file(&self.dir.join(&u.path))?;
        if sha256_hex(&bytes) != u.sha256 {
            return Err(malformed("corpus", format!("{} does not match its manifest hash", u.path)));
        }
        let seq = read_mfcv(&bytes, &u.id)?;
        if seq.len() != u.frames || seq.dim() != self.manifest.dim {
            return Err(malformed("corpus", format!("{} has an unexpected shape", u.path)));
        }
        Ok(seq)
    }

    pub fn train_features(&self, speaker: &str) -> Result<FeatureSequence> {
        let u = self
            .train_utterance(speaker)
            .ok_or_else(|| malformed("corpus", format!("speaker {speaker} has no training utterance")))?;
        self.features(&u.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spkver_core::synth::make_corpus;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.corpus.n_speakers = 5;
        cfg.corpus.n_background = 2;
        cfg.corpus.train_seconds = 4.0;
        cfg.corpus.background_seconds = 3.0;
        cfg.corpus.test_durations = vec![2.0, 1.0];
        cfg.impostors = None;
        cfg
    }

    #[test]
    fn written_corpus_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let corpus = make_corpus(&cfg.corpus_config()).unwrap();
        let manifest = write_corpus(dir.path(), &corpus, &cfg).unwrap();
        assert_eq!(manifest.speakers.len(), 5);
        let disk = DiskCorpus::open(dir.path()).unwrap();
        assert_eq!(disk.config, cfg);
        assert_eq!(disk.client_ids(), vec!["spk000", "spk001", "spk002"]);
        assert_eq!(disk.background_ids(), vec!["bkg00", "bkg01"]);
        for u in &corpus.utterances {
            assert_eq!(disk.features(&u.id).unwrap(), u.features);
            assert_eq!(disk.utterance(&u.id).unwrap().zone_labels(), u.zones);
        }
        assert_eq!(disk.train_features("spk001").unwrap().len(), 400);
        assert!(dir.path().join("trials_2s.tsv").exists());
        assert!(dir.path().join("trials_1s.tsv").exists());
    }

    #[test]
    fn tampered_features_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        write_corpus(dir.path(), &make_corpus(&cfg.corpus_config()).unwrap(), &cfg).unwrap();
        let path = dir.path().join("features/spk000_train.mfcv");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[20] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        assert!(DiskCorpus::open(dir.path()).unwrap().features("spk000_train").is_err());
    }

    #[test]
    fn run_length_encoding() {
        assert_eq!(run_length(&[3, 3, 1, 1, 1, 3]), vec![[3, 2], [1, 3], [3, 1]]);
        assert!(run_length(&[]).is_empty());
    }
}
