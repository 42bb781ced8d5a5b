//! Experiment configuration as plain `key = value` text.
//!
//! Every key has a default, so an empty file is a complete configuration.
//! Lines starting with `#` are comments. Unknown and repeated keys are errors.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use spkver_core::adaptation::{MapConfig, Normalization};
use spkver_core::features::{MfccConfig, Window};
use spkver_core::gmm::EmConfig;
use spkver_core::svm::SvmConfig;
use spkver_core::synth::CorpusConfig;

use crate::pipeline::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key {0:?} given twice")]
    DuplicateKey(String),
    #[error("bad value {value:?} for {key}: {detail}")]
    BadValue { key: String, value: String, detail: String },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] spkver_core::Error),
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Fully resolved settings of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Root seed: drives the corpus, EM respawns and trial sampling.
    pub seed: u64,
    pub corpus: CorpusConfig,
    /// Directory (inside the corpus) holding the MFCV feature files.
    pub feature_dir: String,
    pub mfcc: MfccConfig,
    pub em: EmConfig,
    pub map: MapConfig,
    pub normalization: Normalization,
    pub svm: SvmConfig,
    pub partitions: Vec<usize>,
    pub orders: Vec<usize>,
    pub epsilon: f64,
    /// Nontarget trials per test segment; `None` means every other client.
    pub impostors: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let corpus = CorpusConfig::default();
        let pipeline = PipelineConfig::default();
        Self {
            seed: corpus.seed,
            corpus,
            feature_dir: "features".into(),
            mfcc: MfccConfig::default(),
            em: pipeline.em,
            map: pipeline.map,
            normalization: pipeline.normalization,
            svm: pipeline.svm,
            partitions: pipeline.partitions,
            orders: vec![128, 256, 512],
            epsilon: pipeline.epsilon,
            impostors: pipeline.impostors,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue { key: key.into(), value: value.into(), detail: e.to_string() })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn parse_optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    if value == none {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn window_name(w: Window) -> &'static str {
    match w {
        Window::Hamming => "hamming",
        Window::Hann => "hann",
        Window::Rectangular => "rectangular",
    }
}

impl ExperimentConfig {
    /// Every key with its current value, in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.corpus;
        let m = &self.mfcc;
        vec![
            ("seed", self.seed.to_string()),
            ("corpus.n_speakers", c.n_speakers.to_string()),
            ("corpus.n_background", c.n_background.to_string()),
            ("corpus.train_seconds", c.train_seconds.to_string()),
            ("corpus.background_seconds", c.background_seconds.to_string()),
            ("corpus.test_durations", list(&c.test_durations)),
            ("corpus.n_test_per_speaker", c.n_test_per_speaker.to_string()),
            ("corpus.zone_count", c.zone_count.to_string()),
            ("corpus.zones_per_utterance", c.zones_per_utterance.to_string()),
            ("corpus.zone_spread", c.zone_spread.to_string()),
            ("corpus.speaker_shift_scale", c.speaker_shift_scale.to_string()),
            ("corpus.family_shift_scale", c.family_shift_scale.to_string()),
            ("corpus.session_shift_scale", c.session_shift_scale.to_string()),
            ("corpus.feature_dir", self.feature_dir.clone()),
            ("mfcc.sample_rate", m.sample_rate.to_string()),
            ("mfcc.n_fft", m.n_fft.to_string()),
            ("mfcc.n_filters", m.n_filters.to_string()),
            ("mfcc.n_ceps", m.n_ceps.to_string()),
            ("mfcc.low_hz", m.low_hz.to_string()),
            ("mfcc.high_hz", m.high_hz.to_string()),
            ("mfcc.log_floor", m.log_floor.to_string()),
            ("mfcc.pre_emphasis", m.pre_emphasis.map_or("none".into(), |v| v.to_string())),
            ("mfcc.window", window_name(m.window).into()),
            ("em.max_iterations", self.em.max_iterations.to_string()),
            ("em.ll_tolerance", self.em.ll_tolerance.to_string()),
            ("em.variance_floor_ratio", self.em.variance_floor_ratio.to_string()),
            ("em.split_iterations", self.em.split_iterations.to_string()),
            ("map.relevance_factor", self.map.relevance_factor.to_string()),
            ("normalization", self.normalization.as_str().into()),
            ("svm.c", self.svm.c.to_string()),
            ("svm.tolerance", self.svm.tolerance.to_string()),
            ("svm.max_iterations", self.svm.max_iterations.map_or("auto".into(), |v| v.to_string())),
            ("partitions", list(&self.partitions)),
            ("orders", list(&self.orders)),
            ("epsilon", self.epsilon.to_string()),
            ("trials.impostors", self.impostors.map_or("all".into(), |v| v.to_string())),
        ]
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let c = &mut self.corpus;
        let m = &mut self.mfcc;
        match key {
            "seed" => self.seed = parse_value(key, v)?,
            "corpus.n_speakers" => c.n_speakers = parse_value(key, v)?,
            "corpus.n_background" => c.n_background = parse_value(key, v)?,
            "corpus.train_seconds" => c.train_seconds = parse_value(key, v)?,
            "corpus.background_seconds" => c.background_seconds = parse_value(key, v)?,
            "corpus.test_durations" => c.test_durations = parse_list(key, v)?,
            "corpus.n_test_per_speaker" => c.n_test_per_speaker = parse_value(key, v)?,
            "corpus.zone_count" => c.zone_count = parse_value(key, v)?,
            "corpus.zones_per_utterance" => c.zones_per_utterance = parse_value(key, v)?,
            "corpus.zone_spread" => c.zone_spread = parse_value(key, v)?,
            "corpus.speaker_shift_scale" => c.speaker_shift_scale = parse_value(key, v)?,
            "corpus.family_shift_scale" => c.family_shift_scale = parse_value(key, v)?,
            "corpus.session_shift_scale" => c.session_shift_scale = parse_value(key, v)?,
            "corpus.feature_dir" => {
                if v.is_empty() || v.contains(['/', '\\']) || v == "." || v == ".." {
                    return Err(ConfigError::BadValue { key: key.into(), value: v.into(), detail: "must be a plain directory name".into() });
                }
                self.feature_dir = v.into()
            }
            "mfcc.sample_rate" => m.sample_rate = parse_value(key, v)?,
            "mfcc.n_fft" => m.n_fft = parse_value(key, v)?,
            "mfcc.n_filters" => m.n_filters = parse_value(key, v)?,
            "mfcc.n_ceps" => m.n_ceps = parse_value(key, v)?,
            "mfcc.low_hz" => m.low_hz = parse_value(key, v)?,
            "mfcc.high_hz" => m.high_hz = parse_value(key, v)?,
            "mfcc.log_floor" => m.log_floor = parse_value(key, v)?,
            "mfcc.pre_emphasis" => m.pre_emphasis = parse_optional(key, v, "none")?,
            "mfcc.window" => {
                m.window = match v {
                    "hamming" => Window::Hamming,
                    "hann" => Window::Hann,
                    "rectangular" => Window::Rectangular,
                    _ => {
                        return Err(ConfigError::BadValue { key: key.into(), value: v.into(), detail: "expected hamming, hann or rectangular".into() })
                    }
                }
            }
            "em.max_iterations" => self.em.max_iterations = parse_value(key, v)?,
            "em.ll_tolerance" => self.em.ll_tolerance = parse_value(key, v)?,
            "em.variance_floor_ratio" => self.em.variance_floor_ratio = parse_value(key, v)?,
            "em.split_iterations" => self.em.split_iterations = parse_value(key, v)?,
            "map.relevance_factor" => self.map.relevance_factor = parse_value(key, v)?,
            "normalization" => self.normalization = parse_value(key, v)?,
            "svm.c" => self.svm.c = parse_value(key, v)?,
            "svm.tolerance" => self.svm.tolerance = parse_value(key, v)?,
            "svm.max_iterations" => self.svm.max_iterations = parse_optional(key, v, "auto")?,
            "partitions" => self.partitions = parse_list(key, v)?,
            "orders" => self.orders = parse_list(key, v)?,
            "epsilon" => self.epsilon = parse_value(key, v)?,
            "trials.impostors" => self.impostors = parse_optional(key, v, "all")?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Defaults overridden by the settings in `text`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, detail: "expected key = value".into() })?;
            let key = key.trim();
            if !seen.insert(key.to_owned()) {
                return Err(ConfigError::DuplicateKey(key.into()));
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// `default` selects the built-in defaults; anything else is a file path.
    pub fn load(name: &str) -> Result<Self, ConfigError> {
        if name == "default" {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(name).map_err(|source| ConfigError::Io { path: name.into(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.corpus_config().validate()?;
        spkver_core::features::Mfcc::new(self.mfcc.clone())?;
        self.em.validate()?;
        self.map.validate()?;
        self.svm.validate()?;
        let invalid = |m: &str| Err(ConfigError::Invalid(spkver_core::Error::InvalidArgument(m.into())));
        if self.partitions.is_empty() || self.partitions.contains(&0) {
            return invalid("partitions must be a non-empty list of positive counts");
        }
        if self.orders.is_empty() || self.orders.contains(&0) {
            return invalid("orders must be a non-empty list of positive counts");
        }
        if !(self.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        if self.impostors == Some(0) {
            return invalid("trials.impostors must be at least 1");
        }
        Ok(())
    }

    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig { seed: self.seed, ..self.corpus.clone() }
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig { seed: self.seed, ..self.em.clone() }
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            em: self.em_config(),
            map: self.map,
            normalization: self.normalization,
            svm: self.svm,
            partitions: self.partitions.clone(),
            impostors: self.impostors,
            trial_seed: self.seed,
            epsilon: self.epsilon,
            score: true,
        }
    }

    /// Canonical text form; parsing it yields `self` again.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").expect("string write");
        }
        out
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::load(&path.to_string_lossy())
    }
}
