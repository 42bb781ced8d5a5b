//! Training-utterance partitioning and one-vs-rest training sets.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::adaptation::Supervector;
use crate::{Error, Result};

/// Contiguous split of `T` frames into `P` ranges whose lengths differ by at
/// most one; the first `T mod P` ranges take the extra frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    total_frames: usize,
    ranges: Vec<Range<usize>>,
}

impl PartitionPlan {
    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    pub fn partitions(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }
}

pub fn plan_partitions(total_frames: usize, partitions: usize) -> Result<PartitionPlan> {
    if partitions == 0 || partitions > total_frames {
        return Err(Error::InvalidArgument(alloc::format!(
            "cannot split {total_frames} frames into {partitions} partitions"
        )));
    }
    let base = total_frames / partitions;
    let extra = total_frames % partitions;
    let mut start = 0;
    let ranges = (0..partitions)
        .map(|p| {
            let len = base + usize::from(p < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect();
    Ok(PartitionPlan { total_frames, ranges })
}

/// Positive and negative supervectors for one target speaker.
#[derive(Debug, Clone)]
pub struct LabeledSupervectorSet<'a> {
    pub target_speaker: String,
    pub positives: Vec<&'a Supervector>,
    pub negatives: Vec<&'a Supervector>,
}

impl LabeledSupervectorSet<'_> {
    /// Number of positives and negatives.
    pub fn class_sizes(&self) -> (usize, usize) {
        (self.positives.len(), self.negatives.len())
    }

    /// All samples, positives first, with their ±1 labels.
    pub fn samples(&self) -> impl Iterator<Item = (&Supervector, f64)> + '_ {
        self.positives
            .iter()
            .map(|&s| (s, 1.0))
            .chain(self.negatives.iter().map(|&s| (s, -1.0)))
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One-vs-rest assembly: the target's `P` supervectors are positive, all
/// other speakers' `(N − 1)·P` supervectors are negative.
pub fn build_training_set<'a>(
    per_speaker: &'a BTreeMap<String, Vec<Supervector>>,
    target: &str,
) -> Result<LabeledSupervectorSet<'a>> {
    let positives = per_speaker
        .get(target)
        .ok_or_else(|| Error::UnknownId(target.into()))?;
    let p = positives.len();
    if p == 0 {
        return Err(Error::Empty("target supervectors"));
    }
    let mut reference = None;
    for (speaker, svs) in per_speaker {
        if svs.len() != p {
            return Err(Error::InvalidArgument(alloc::format!(
                "speaker {speaker} has {} supervectors, target has {p}",
                svs.len()
            )));
        }
        for sv in svs {
            match reference {
                None => reference = Some(sv),
                Some(r) => r.check_compatible(sv)?,
            }
        }
    }
    let negatives = per_speaker
        .iter()
        .filter(|(speaker, _)| speaker.as_str() != target)
        .flat_map(|(_, svs)| svs.iter())
        .collect();
    Ok(LabeledSupervectorSet {
        target_speaker: target.into(),
        positives: positives.iter().collect(),
        negatives,
    })
}
