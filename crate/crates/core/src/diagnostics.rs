//! Between-class distance, acoustic-zone frame split and MAP mismatch.

use alloc::vec;
use alloc::vec::Vec;

use crate::adaptation::Supervector;
use crate::error::check_dim;
use crate::features::FeatureSequence;
use crate::gmm::DiagonalGmm;
use crate::math::sqrt;
use crate::{Error, Result};

/// Default LLR magnitude below which a frame counts as unseen.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Symmetric pairwise Euclidean distances between class supervectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Row-major `n × n` entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn distance_matrix(supervectors: &[&[f64]]) -> Result<DistanceMatrix> {
    let n = supervectors.len();
    if n < 2 {
        return Err(Error::InvalidArgument("distance matrix needs at least two classes".into()));
    }
    let dim = supervectors[0].len();
    for s in supervectors {
        check_dim(dim, s.len())?;
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(supervectors[i], supervectors[j]);
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, entries })
}

/// Sum of the strict upper triangle over `n(n−1)/2`.
pub fn avg_between_class_distance(d: &DistanceMatrix) -> Result<f64> {
    if d.n < 2 {
        return Err(Error::InvalidArgument("need at least two classes".into()));
    }
    let mut total = 0.0;
    for i in 0..d.n {
        for j in i + 1..d.n {
            total += d.get(i, j);
        }
    }
    Ok(total / (d.n * (d.n - 1) / 2) as f64)
}

/// Test frames split by whether the speaker model moved their likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSplit {
    pub seen_frames: Vec<usize>,
    pub unseen_frames: Vec<usize>,
    pub epsilon: f64,
}

impl ZoneSplit {
    /// `|unseen| / |seen|`, or `+inf` when no frame is seen.
    pub fn tau(&self) -> f64 {
        if self.seen_frames.is_empty() {
            f64::INFINITY
        } else {
            self.unseen_frames.len() as f64 / self.seen_frames.len() as f64
        }
    }

    pub fn tau_is_infinite(&self) -> bool {
        self.seen_frames.is_empty()
    }
}

/// Frame `t` is unseen iff `|log p(y_t|spk) − log p(y_t|ubm)| < epsilon`.
pub fn zone_split(spk: &DiagonalGmm, ubm: &DiagonalGmm, y: &FeatureSequence, epsilon: f64) -> Result<ZoneSplit> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if y.is_empty() {
        return Err(Error::Empty("test utterance"));
    }
    let llrs = crate::eval::frame_llrs(spk, ubm, y)?;
    Ok(split_llrs(&llrs, epsilon))
}

/// [`zone_split`] on precomputed per-frame LLRs.
pub fn split_llrs(llrs: &[f64], epsilon: f64) -> ZoneSplit {
    let (unseen_frames, seen_frames) = (0..llrs.len()).partition(|&t| llrs[t].abs() < epsilon);
    ZoneSplit { seen_frames, unseen_frames, epsilon }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMismatch {
    pub train_shift: f64,
    pub test_shift: f64,
    pub mismatch: f64,
}

pub fn map_mismatch(train_sv: &Supervector, test_sv: &Supervector, ubm_sv: &Supervector) -> Result<MapMismatch> {
    train_sv.check_compatible(test_sv)?;
    train_sv.check_compatible(ubm_sv)?;
    Ok(MapMismatch {
        train_shift: euclidean(&train_sv.values, &ubm_sv.values),
        test_shift: euclidean(&test_sv.values, &ubm_sv.values),
        mismatch: euclidean(&train_sv.values, &test_sv.values),
    })
}
