//! Mean-only MAP adaptation of a UBM and GMM supervectors.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::check_dim;
use crate::features::FeatureSequence;
use crate::gmm::DiagonalGmm;
use crate::math::sqrt;
use crate::partition::PartitionPlan;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig {
    pub relevance_factor: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { relevance_factor: 16.0 }
    }
}

impl MapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.relevance_factor > 0.0 && self.relevance_factor.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument("relevance factor must be positive".into()))
        }
    }

    /// `α = n / (n + r)`.
    pub fn alpha(&self, occupancy: f64) -> f64 {
        occupancy / (occupancy + self.relevance_factor)
    }
}

/// Zeroth- and first-order Baum–Welch statistics against a UBM.
///
/// Statistics are additive, so the statistics of a partition can be summed
/// from those of its pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationStats {
    dim: usize,
    /// `n_i = Σ_t Pr(i | x_t)`.
    occupancy: Vec<f64>,
    /// `Σ_t Pr(i | x_t) x_t`, `M × D`.
    first_order: Vec<f64>,
    frames: usize,
}

impl AdaptationStats {
    pub fn zeros(n_components: usize, dim: usize) -> Self {
        Self {
            dim,
            occupancy: vec![0.0; n_components],
            first_order: vec![0.0; n_components * dim],
            frames: 0,
        }
    }

    /// Statistics of every frame of `seq`.
    pub fn collect(ubm: &DiagonalGmm, seq: &FeatureSequence) -> Result<Self> {
        Self::collect_range(ubm, seq, 0..seq.len())
    }

    /// Statistics of frames `range` of `seq`, accumulated in frame order.
    pub fn collect_range(ubm: &DiagonalGmm, seq: &FeatureSequence, range: Range<usize>) -> Result<Self> {
        check_dim(ubm.dim(), seq.dim())?;
        if range.end > seq.len() || range.start > range.end {
            return Err(Error::InvalidArgument(alloc::format!(
                "frame range {range:?} outside a {}-frame sequence",
                seq.len()
            )));
        }
        let mut stats = Self::zeros(ubm.n_components(), ubm.dim());
        let mut post = vec![0.0; ubm.n_components()];
        for t in range {
            stats.accumulate(ubm, seq.row(t), &mut post);
        }
        Ok(stats)
    }

    fn accumulate(&mut self, ubm: &DiagonalGmm, x: &[f64], post: &mut [f64]) {
        ubm.posteriors_unchecked(x, post);
        let d = self.dim;
        for (i, &g) in post.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            self.occupancy[i] += g;
            for (acc, &v) in self.first_order[i * d..(i + 1) * d].iter_mut().zip(x) {
                *acc += g * v;
            }
        }
        self.frames += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a += b;
        }
        for (a, b) in self.first_order.iter_mut().zip(&other.first_order) {
            *a += b;
        }
        self.frames += other.frames;
    }

    pub fn occupancy(&self) -> &[f64] {
        &self.occupancy
    }

    pub fn first_order(&self) -> &[f64] {
        &self.first_order
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_components(&self) -> usize {
        self.occupancy.len()
    }
}

/// Adapts UBM means from precollected statistics.
///
/// Components that received no responsibility keep the UBM mean bit-for-bit.
pub fn adapt_means(ubm: &DiagonalGmm, stats: &AdaptationStats, cfg: &MapConfig) -> Result<DiagonalGmm> {
    cfg.validate()?;
    check_dim(ubm.n_components(), stats.n_components())?;
    check_dim(ubm.dim(), stats.dim)?;
    if stats.frames == 0 {
        return Err(Error::Empty("adaptation data"));
    }
    let d = ubm.dim();
    let mut means = ubm.means().to_vec();
    for (i, &n) in stats.occupancy.iter().enumerate() {
        if n == 0.0 {
            continue;
        }
        let alpha = cfg.alpha(n);
        for k in 0..d {
            let expected = stats.first_order[i * d + k] / n;
            means[i * d + k] = alpha * expected + (1.0 - alpha) * means[i * d + k];
        }
    }
    ubm.with_means(means)
}

/// MAP-adapts the UBM means towards `x` with relevance factor `r`:
/// `μ_i ← α_i E_i(x) + (1 − α_i) μ_i`, `α_i = n_i / (n_i + r)`.
pub fn map_adapt_means(ubm: &DiagonalGmm, x: &FeatureSequence, cfg: &MapConfig) -> Result<DiagonalGmm> {
    check_dim(ubm.dim(), x.dim())?;
    if x.is_empty() {
        return Err(Error::Empty("adaptation data"));
    }
    adapt_means(ubm, &AdaptationStats::collect(ubm, x)?, cfg)
}

/// Statistics for every partition of several plans over the same sequence.
///
/// Posteriors are computed once per frame: frames are accumulated into the
/// segments between consecutive boundaries of all plans, and partitions are
/// assembled from those segments. Returns one vector per plan, in plan order.
pub fn partition_stats(
    ubm: &DiagonalGmm,
    x: &FeatureSequence,
    plans: &[PartitionPlan],
) -> Result<Vec<Vec<AdaptationStats>>> {
    check_dim(ubm.dim(), x.dim())?;
    let mut cuts = BTreeSet::new();
    for plan in plans {
        if plan.total_frames() != x.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "plan covers {} frames but the sequence has {}",
                plan.total_frames(),
                x.len()
            )));
        }
        for r in plan.ranges() {
            cuts.insert(r.start);
            cuts.insert(r.end);
        }
    }
    let cuts: Vec<usize> = cuts.into_iter().collect();
    let segments: Vec<(Range<usize>, AdaptationStats)> = cuts
        .windows(2)
        .map(|w| Ok((w[0]..w[1], AdaptationStats::collect_range(ubm, x, w[0]..w[1])?)))
        .collect::<Result<_>>()?;

    Ok(plans
        .iter()
        .map(|plan| {
            plan.ranges()
                .iter()
                .map(|r| {
                    let mut acc = AdaptationStats::zeros(ubm.n_components(), ubm.dim());
                    for (seg, stats) in &segments {
                        if seg.start >= r.start && seg.end <= r.end {
                            acc.merge(stats);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect())
}

/// How adapted means are scaled when concatenated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Normalization {
    /// Plain concatenation of the adapted means.
    Raw,
    /// Block `i` is `√w_i · Σ_i^{-1/2} μ_i`, the scaling under which the
    /// linear kernel approximates the KL divergence between adapted models.
    #[default]
    KlNormalized,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::KlNormalized => "kl_normalized",
        }
    }
}

impl core::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "kl_normalized" | "kl" => Ok(Self::KlNormalized),
            other => Err(Error::InvalidArgument(alloc::format!("unknown normalization {other:?}"))),
        }
    }
}

/// Concatenated adapted means of one (sub-)utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervector {
    pub values: Vec<f64>,
    pub speaker_id: String,
    pub partition_index: u32,
    pub normalization: Normalization,
    pub ubm_fingerprint: u64,
}

impl Supervector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn with_label(mut self, speaker_id: impl Into<String>, partition_index: u32) -> Self {
        self.speaker_id = speaker_id.into();
        self.partition_index = partition_index;
        self
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    /// Errors unless `other` lives in the same supervector space.
    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        check_dim(self.dim(), other.dim())?;
        if self.ubm_fingerprint != other.ubm_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.ubm_fingerprint,
                got: other.ubm_fingerprint,
            });
        }
        if self.normalization != other.normalization {
            return Err(Error::ModelMismatch("supervector normalizations differ"));
        }
        Ok(())
    }
}

/// Assembles the supervector of a mean-adapted copy of `ubm`.
pub fn build_supervector(adapted: &DiagonalGmm, ubm: &DiagonalGmm, mode: Normalization) -> Result<Supervector> {
    if adapted.n_components() != ubm.n_components() || !adapted.shares_structure(ubm) {
        return Err(Error::ModelMismatch(
            "adapted model must share M, D, weights and variances with the UBM",
        ));
    }
    Ok(supervector_from_means(adapted.means(), ubm, ubm.fingerprint(), mode))
}

pub(crate) fn supervector_from_means(
    means: &[f64],
    ubm: &DiagonalGmm,
    fingerprint: u64,
    mode: Normalization,
) -> Supervector {
    let values = match mode {
        Normalization::Raw => means.to_vec(),
        Normalization::KlNormalized => {
            let d = ubm.dim();
            means
                .iter()
                .zip(ubm.variances())
                .enumerate()
                .map(|(idx, (&mu, &var))| sqrt(ubm.weights()[idx / d]) * mu / sqrt(var))
                .collect()
        }
    };
    Supervector {
        values,
        speaker_id: String::new(),
        partition_index: 0,
        normalization: mode,
        ubm_fingerprint: fingerprint,
    }
}

/// Supervector of the UBM itself, the origin of every adaptation.
pub fn ubm_supervector(ubm: &DiagonalGmm, mode: Normalization) -> Supervector {
    supervector_from_means(ubm.means(), ubm, ubm.fingerprint(), mode)
}

/// Turns MAP statistics straight into a supervector, skipping the
/// intermediate model. `fingerprint` must be `ubm.fingerprint()`; callers
/// building many supervectors hash the UBM once.
pub fn supervector_from_stats(
    ubm: &DiagonalGmm,
    fingerprint: u64,
    stats: &AdaptationStats,
    cfg: &MapConfig,
    mode: Normalization,
) -> Result<Supervector> {
    let adapted = adapt_means(ubm, stats, cfg)?;
    Ok(supervector_from_means(adapted.means(), ubm, fingerprint, mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn relevance_arithmetic() {
        let ubm = DiagonalGmm::new(vec![1.0], vec![2.0], vec![1.0], 1).unwrap();
        let x = FeatureSequence::from_rows(vec![6.0; 16], 1, "x").unwrap();
        let adapted = map_adapt_means(&ubm, &x, &MapConfig::default()).unwrap();
        assert_abs_diff_eq!(adapted.means()[0], 4.0, epsilon = 1e-12);
        assert_eq!(adapted.weights(), ubm.weights());
        assert_eq!(adapted.variances(), ubm.variances());
    }

    #[test]
    fn unvisited_component_is_copied_exactly() {
        // The second component is ~1e4 standard deviations away: its posterior underflows to 0.
        let ubm = DiagonalGmm::new(vec![0.5, 0.5], vec![0.0, 1e4], vec![1.0, 1.0], 1).unwrap();
        let x = FeatureSequence::from_rows(vec![0.3, -0.2, 0.9], 1, "x").unwrap();
        let adapted = map_adapt_means(&ubm, &x, &MapConfig::default()).unwrap();
        assert_eq!(adapted.means()[1].to_bits(), ubm.means()[1].to_bits());
        assert_ne!(adapted.means()[0], 0.0);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let ubm = DiagonalGmm::new(vec![1.0], vec![0.0, 0.0], vec![1.0, 1.0], 2).unwrap();
        let empty = FeatureSequence::from_rows(Vec::new(), 2, "e").unwrap();
        assert_eq!(map_adapt_means(&ubm, &empty, &MapConfig::default()), Err(Error::Empty("adaptation data")));
        let wrong = FeatureSequence::from_rows(vec![0.0; 3], 3, "w").unwrap();
        assert!(map_adapt_means(&ubm, &wrong, &MapConfig::default()).is_err());
        assert!(MapConfig { relevance_factor: 0.0 }.validate().is_err());
    }

    #[test]
    fn kl_scaling_arithmetic() {
        // Second component carries w = 0.25, σ² = 4, μ = 6.
        let ubm = DiagonalGmm::new(vec![0.75, 0.25], vec![0.0, 6.0], vec![1.0, 4.0], 1).unwrap();
        let sv = build_supervector(&ubm, &ubm, Normalization::KlNormalized).unwrap();
        assert_abs_diff_eq!(sv.values[1], 1.5, epsilon = 1e-15);
        let single = DiagonalGmm::new(vec![1.0], vec![6.0], vec![4.0], 1).unwrap();
        let sv1 = build_supervector(&single, &single, Normalization::KlNormalized).unwrap();
        assert_abs_diff_eq!(sv1.values[0], 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ubm_supervector_is_concatenated_means() {
        let ubm = DiagonalGmm::new(vec![0.5, 0.5], vec![1.0, 2.0, 3.0, 4.0], vec![1.0; 4], 2).unwrap();
        let sv = build_supervector(&ubm, &ubm, Normalization::Raw).unwrap();
        assert_eq!(sv.values, ubm.means());
        assert_eq!(sv.ubm_fingerprint, ubm.fingerprint());
    }

    #[test]
    fn supervector_requires_shared_structure() {
        let ubm = DiagonalGmm::new(vec![1.0], vec![0.0], vec![1.0], 1).unwrap();
        let other = DiagonalGmm::new(vec![1.0], vec![0.0], vec![2.0], 1).unwrap();
        assert!(build_supervector(&other, &ubm, Normalization::Raw).is_err());
    }

    #[test]
    fn normalization_names() {
        for n in [Normalization::Raw, Normalization::KlNormalized] {
            assert_eq!(n.as_str().parse::<Normalization>().unwrap(), n);
        }
        assert!("whitened".parse::<Normalization>().is_err());
    }

    fn random_case(seed: u64, m: usize, d: usize, t: usize) -> (DiagonalGmm, FeatureSequence) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let ubm = DiagonalGmm::new(
            raw.iter().map(|w| w / total).collect(),
            (0..m * d).map(|_| rng.random_range(-3.0..3.0)).collect(),
            (0..m * d).map(|_| rng.random_range(0.5..2.0)).collect(),
            d,
        )
        .unwrap();
        let x = FeatureSequence::from_rows((0..t * d).map(|_| rng.random_range(-4.0..4.0)).collect(), d, "x").unwrap();
        (ubm, x)
    }

    /// Linear-space posteriors and a direct double loop over frames and components.
    fn oracle_means(ubm: &DiagonalGmm, x: &FeatureSequence, r: f64) -> Vec<f64> {
        let (m, d) = (ubm.n_components(), ubm.dim());
        let mut n = vec![0.0; m];
        let mut f = vec![0.0; m * d];
        for row in x.rows() {
            let dens: Vec<f64> = (0..m)
                .map(|i| {
                    let mut p = ubm.weights()[i];
                    for k in 0..d {
                        let (mu, var) = (ubm.mean(i)[k], ubm.variance(i)[k]);
                        p *= libm::exp(-(row[k] - mu) * (row[k] - mu) / (2.0 * var))
                            / libm::sqrt(2.0 * core::f64::consts::PI * var);
                    }
                    p
                })
                .collect();
            let total: f64 = dens.iter().sum();
            for i in 0..m {
                n[i] += dens[i] / total;
                for k in 0..d {
                    f[i * d + k] += dens[i] / total * row[k];
                }
            }
        }
        (0..m * d)
            .map(|j| {
                let i = j / d;
                let alpha = n[i] / (n[i] + r);
                alpha * f[j] / n[i] + (1.0 - alpha) * ubm.means()[j]
            })
            .collect()
    }

    #[test]
    fn adapted_means_match_double_loop_oracle() {
        for seed in 0..20 {
            let (ubm, x) = random_case(seed, 4, 2, 50);
            let adapted = map_adapt_means(&ubm, &x, &MapConfig::default()).unwrap();
            for (a, b) in adapted.means().iter().zip(oracle_means(&ubm, &x, 16.0)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn partition_stats_match_direct_collection() {
        let (ubm, x) = random_case(3, 4, 3, 103);
        let plans = [
            crate::partition::plan_partitions(103, 1).unwrap(),
            crate::partition::plan_partitions(103, 4).unwrap(),
            crate::partition::plan_partitions(103, 7).unwrap(),
        ];
        let stats = partition_stats(&ubm, &x, &plans).unwrap();
        for (plan, got) in plans.iter().zip(&stats) {
            assert_eq!(got.len(), plan.partitions());
            for (r, s) in plan.ranges().iter().zip(got) {
                let direct = AdaptationStats::collect_range(&ubm, &x, r.clone()).unwrap();
                assert_eq!(s.frames(), direct.frames());
                for (a, b) in s.occupancy().iter().zip(direct.occupancy()) {
                    assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
                }
                for (a, b) in s.first_order().iter().zip(direct.first_order()) {
                    assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
                }
            }
        }
    }
}
