//! End-to-end experiments on an in-memory synthetic corpus.

use std::collections::BTreeMap;

use rayon::prelude::*;
use spkver_core::adaptation::{
    adapt_means, partition_stats, supervector_from_stats, ubm_supervector, AdaptationStats, MapConfig, Normalization, Supervector,
};
use spkver_core::diagnostics::{avg_between_class_distance, distance_matrix, map_mismatch, split_llrs};
use spkver_core::eval::{compute_eer, LlrBatchScorer, ScoreRecord, ScoreSet, Trial};
use spkver_core::features::FeatureSequence;
use spkver_core::gmm::{pool_frames, train_em, DiagonalGmm, EmConfig};
use spkver_core::partition::plan_partitions;
use spkver_core::svm::{census, decision_value, train_with_gram, Gram, SvmConfig, SvmModel};
use spkver_core::synth::{make_trials, SyntheticCorpus};

/// Settings shared by every stage of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub em: EmConfig,
    pub map: MapConfig,
    pub normalization: Normalization,
    pub svm: SvmConfig,
    /// Partition counts to train SVMs with.
    pub partitions: Vec<usize>,
    /// Nontarget trials per test segment; `None` scores against every other client.
    pub impostors: Option<usize>,
    pub trial_seed: u64,
    pub epsilon: f64,
    /// Score trials (GMM-UBM and GMM-SVM); without it only training-side diagnostics run.
    pub score: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            em: EmConfig::default(),
            map: MapConfig::default(),
            normalization: Normalization::KlNormalized,
            svm: SvmConfig::default(),
            partitions: vec![1, 2, 4, 8],
            impostors: Some(20),
            trial_seed: 0,
            epsilon: spkver_core::diagnostics::DEFAULT_EPSILON,
            score: true,
        }
    }
}

/// SV census averaged over all client SVMs of one partition count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusSummary {
    pub partitions: usize,
    pub mean_positive_sv: f64,
    pub mean_negative_sv: f64,
    pub mean_margin_sv: f64,
    pub mean_bound_sv: f64,
    pub mean_misclassified: f64,
}

impl CensusSummary {
    pub fn mean_total_sv(&self) -> f64 {
        self.mean_positive_sv + self.mean_negative_sv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmRun {
    pub partitions: usize,
    pub scores: ScoreSet,
    pub eer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurationRun {
    pub duration: f64,
    pub gmm_ubm: ScoreSet,
    pub gmm_ubm_eer: f64,
    pub svm: Vec<SvmRun>,
    /// Mean τ over target trials.
    pub mean_tau: f64,
    /// Target trials with no seen frame.
    pub infinite_tau: usize,
    /// Mean supervector mismatch between each client's training utterance
    /// and its own test segments.
    pub mean_mismatch: f64,
    /// Per client, the mismatch of its first test segment.
    pub first_segment_mismatch: BTreeMap<String, f64>,
}

impl DurationRun {
    pub fn svm_eer(&self, partitions: usize) -> Option<f64> {
        self.svm.iter().find(|r| r.partitions == partitions).map(|r| r.eer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRun {
    pub order: usize,
    pub ubm: DiagonalGmm,
    /// Average between-class distance of full-utterance training supervectors.
    pub avg_distance_raw: f64,
    pub avg_distance_kl: f64,
    pub census: Vec<CensusSummary>,
    pub durations: Vec<DurationRun>,
}

impl OrderRun {
    pub fn duration(&self, d: f64) -> Option<&DurationRun> {
        self.durations.iter().find(|r| r.duration == d)
    }

    pub fn census_for(&self, partitions: usize) -> Option<&CensusSummary> {
        self.census.iter().find(|c| c.partitions == partitions)
    }
}

pub fn train_ubm(corpus: &SyntheticCorpus, order: usize, em: &EmConfig) -> spkver_core::Result<DiagonalGmm> {
    let parts: Vec<&FeatureSequence> = corpus.background_utterances().into_iter().map(|u| &u.features).collect();
    let pool = pool_frames(parts.iter().copied(), "ubm_pool")?;
    train_em(&pool, order, em)
}

/// Training supervectors for every client and partition count.
pub struct ClientModels {
    pub clients: Vec<String>,
    /// Per client, MAP statistics of the whole training utterance.
    pub full_stats: Vec<AdaptationStats>,
    /// `supervectors[p][client]`: the P supervectors of that client.
    pub supervectors: Vec<Vec<Vec<Supervector>>>,
}

pub fn client_models(
    corpus: &SyntheticCorpus,
    ubm: &DiagonalGmm,
    cfg: &PipelineConfig,
    mode: Normalization,
) -> spkver_core::Result<ClientModels> {
    let fp = ubm.fingerprint();
    let clients: Vec<String> = corpus.client_ids().into_iter().map(String::from).collect();
    let per_client: Vec<(AdaptationStats, Vec<Vec<Supervector>>)> = clients
        .par_iter()
        .map(|id| {
            let train = &corpus.train_utterance(id).expect("every client has training speech").features;
            let mut plans = vec![plan_partitions(train.len(), 1)?];
            for &p in &cfg.partitions {
                plans.push(plan_partitions(train.len(), p)?);
            }
            let mut stats = partition_stats(ubm, train, &plans)?;
            let full = stats.remove(0).remove(0);
            let svs = stats
                .iter()
                .map(|parts| {
                    parts
                        .iter()
                        .enumerate()
                        .map(|(i, s)| {
                            Ok(supervector_from_stats(ubm, fp, s, &cfg.map, mode)?.with_label(id.clone(), i as u32))
                        })
                        .collect::<spkver_core::Result<Vec<_>>>()
                })
                .collect::<spkver_core::Result<Vec<_>>>()?;
            Ok((full, svs))
        })
        .collect::<spkver_core::Result<_>>()?;

    let mut supervectors = vec![Vec::with_capacity(clients.len()); cfg.partitions.len()];
    let mut full_stats = Vec::with_capacity(clients.len());
    for (full, svs) in per_client {
        full_stats.push(full);
        for (slot, s) in supervectors.iter_mut().zip(svs) {
            slot.push(s);
        }
    }
    Ok(ClientModels { clients, full_stats, supervectors })
}

/// Linear Gram matrix, rows computed in parallel.
pub fn gram_matrix(samples: &[&Supervector]) -> spkver_core::Result<Gram> {
    let n = samples.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if j < i { 0.0 } else { samples[i].dot(&samples[j].values) }).collect())
        .collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            values[i * n + j] = rows[i][j];
            values[j * n + i] = rows[i][j];
        }
    }
    Gram::from_values(n, values)
}

/// One-vs-rest SVMs for every client, sharing one Gram matrix.
pub fn train_client_svms(
    clients: &[String],
    per_client: &[Vec<Supervector>],
    svm: &SvmConfig,
) -> spkver_core::Result<Vec<SvmModel>> {
    let samples: Vec<&Supervector> = per_client.iter().flatten().collect();
    let gram = gram_matrix(&samples)?;
    clients
        .par_iter()
        .map(|target| {
            let labels: Vec<f64> =
                samples.iter().map(|s| if &s.speaker_id == target { 1.0 } else { -1.0 }).collect();
            train_with_gram(target, &samples, &labels, &gram, svm)
        })
        .collect()
}

pub fn summarize_census(partitions: usize, models: &[SvmModel]) -> CensusSummary {
    let n = models.len() as f64;
    let mut s = CensusSummary {
        partitions,
        mean_positive_sv: 0.0,
        mean_negative_sv: 0.0,
        mean_margin_sv: 0.0,
        mean_bound_sv: 0.0,
        mean_misclassified: 0.0,
    };
    for m in models {
        let c = census(m);
        s.mean_positive_sv += c.positive_sv_count as f64;
        s.mean_negative_sv += c.negative_sv_count as f64;
        s.mean_margin_sv += c.margin_sv_count as f64;
        s.mean_bound_sv += c.bound_sv_count as f64;
        s.mean_misclassified += c.misclassified_sv_count as f64;
    }
    for v in [
        &mut s.mean_positive_sv,
        &mut s.mean_negative_sv,
        &mut s.mean_margin_sv,
        &mut s.mean_bound_sv,
        &mut s.mean_misclassified,
    ] {
        *v /= n;
    }
    s
}

fn avg_distance(per_client: &[Vec<Supervector>]) -> spkver_core::Result<f64> {
    let rows: Vec<&[f64]> = per_client.iter().map(|s| s[0].values.as_slice()).collect();
    avg_between_class_distance(&distance_matrix(&rows)?)
}

fn full_supervectors(
    ubm: &DiagonalGmm,
    fp: u64,
    models: &ClientModels,
    cfg: &PipelineConfig,
    mode: Normalization,
) -> spkver_core::Result<Vec<Vec<Supervector>>> {
    models
        .full_stats
        .iter()
        .zip(&models.clients)
        .map(|(s, id)| Ok(vec![supervector_from_stats(ubm, fp, s, &cfg.map, mode)?.with_label(id.clone(), 0)]))
        .collect()
}

/// Everything measured for one test segment.
struct SegmentResult {
    ubm_scores: Vec<f64>,
    svm_scores: Vec<Vec<f64>>,
    tau: f64,
    mismatch: f64,
}

/// Runs one model order: UBM, client models, SVMs per partition count,
/// diagnostics and, when `cfg.score`, all trials of every test duration.
pub fn run_order(corpus: &SyntheticCorpus, order: usize, cfg: &PipelineConfig) -> spkver_core::Result<OrderRun> {
    let ubm = train_ubm(corpus, order, &cfg.em)?;
    let fp = ubm.fingerprint();
    log::info!("M={order}: UBM trained");
    let models = client_models(corpus, &ubm, cfg, cfg.normalization)?;
    let other_mode = match cfg.normalization {
        Normalization::Raw => Normalization::KlNormalized,
        Normalization::KlNormalized => Normalization::Raw,
    };
    let full = full_supervectors(&ubm, fp, &models, cfg, cfg.normalization)?;
    let full_other = full_supervectors(&ubm, fp, &models, cfg, other_mode)?;
    let (avg_distance_raw, avg_distance_kl) = match cfg.normalization {
        Normalization::Raw => (avg_distance(&full)?, avg_distance(&full_other)?),
        Normalization::KlNormalized => (avg_distance(&full_other)?, avg_distance(&full)?),
    };

    let mut svms = Vec::with_capacity(cfg.partitions.len());
    let mut census = Vec::with_capacity(cfg.partitions.len());
    for (&p, per_client) in cfg.partitions.iter().zip(&models.supervectors) {
        let trained = train_client_svms(&models.clients, per_client, &cfg.svm)?;
        census.push(summarize_census(p, &trained));
        svms.push(trained);
    }
    log::info!("M={order}: SVMs trained");

    let mut durations = Vec::new();
    if cfg.score {
        let speaker_gmms: Vec<DiagonalGmm> =
            models.full_stats.iter().map(|s| adapt_means(&ubm, s, &cfg.map)).collect::<spkver_core::Result<_>>()?;
        let batch = LlrBatchScorer::new(&ubm, &speaker_gmms)?;
        let index: BTreeMap<&str, usize> = models.clients.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let ubm_sv = ubm_supervector(&ubm, cfg.normalization);

        for &duration in &corpus.config.test_durations {
            let trials = make_trials(corpus, duration, cfg.impostors, cfg.trial_seed);
            let mut by_utt: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, t) in trials.iter().enumerate() {
                by_utt.entry(t.test_utterance.as_str()).or_default().push(i);
            }
            let groups: Vec<(&str, Vec<usize>)> = by_utt.into_iter().collect();
            let results: Vec<SegmentResult> = groups
                .par_iter()
                .map(|(utt, idx)| {
                    let u = corpus.utterance(utt).expect("trials reference corpus utterances");
                    let targets: Vec<usize> = idx.iter().map(|&i| index[trials[i].target_speaker.as_str()]).collect();
                    let llrs = batch.frame_llrs_for(&u.features, &targets)?;
                    let t = u.features.len() as f64;
                    let ubm_scores = llrs.iter().map(|f| f.iter().sum::<f64>() / t).collect();
                    let own = index[u.speaker_id.as_str()];
                    let own_pos = targets.iter().position(|&k| k == own).expect("target trial present");
                    let tau = split_llrs(&llrs[own_pos], cfg.epsilon).tau();

                    let stats = AdaptationStats::collect(&ubm, &u.features)?;
                    let test_sv = supervector_from_stats(&ubm, fp, &stats, &cfg.map, cfg.normalization)?;
                    let mismatch = map_mismatch(&full[own][0], &test_sv, &ubm_sv)?.mismatch;
                    let svm_scores = svms
                        .iter()
                        .map(|set| targets.iter().map(|&k| decision_value(&set[k], &test_sv)).collect())
                        .collect::<spkver_core::Result<_>>()?;
                    Ok(SegmentResult { ubm_scores, svm_scores, tau, mismatch })
                })
                .collect::<spkver_core::Result<_>>()?;

            let mut ubm_scores = vec![0.0; trials.len()];
            let mut svm_scores = vec![vec![0.0; trials.len()]; svms.len()];
            let (mut tau_sum, mut tau_n, mut infinite_tau) = (0.0, 0usize, 0usize);
            let mut mismatch_sum = 0.0;
            let mut first_segment_mismatch = BTreeMap::new();
            for ((utt, idx), r) in groups.iter().zip(&results) {
                for (k, &i) in idx.iter().enumerate() {
                    ubm_scores[i] = r.ubm_scores[k];
                    for (p, s) in r.svm_scores.iter().enumerate() {
                        svm_scores[p][i] = s[k];
                    }
                }
                if r.tau.is_finite() {
                    tau_sum += r.tau;
                    tau_n += 1;
                } else {
                    infinite_tau += 1;
                }
                mismatch_sum += r.mismatch;
                let u = corpus.utterance(utt).expect("known utterance");
                if matches!(u.kind, spkver_core::synth::UtteranceKind::Test { session: 0, segment: 0, .. }) {
                    first_segment_mismatch.insert(u.speaker_id.clone(), r.mismatch);
                }
            }
            let gmm_ubm = score_set(&trials, ubm_scores)?;
            let svm = cfg
                .partitions
                .iter()
                .zip(svm_scores)
                .map(|(&partitions, s)| {
                    let scores = score_set(&trials, s)?;
                    Ok(SvmRun { partitions, eer: compute_eer(&scores)?, scores })
                })
                .collect::<spkver_core::Result<_>>()?;
            durations.push(DurationRun {
                duration,
                gmm_ubm_eer: compute_eer(&gmm_ubm)?,
                gmm_ubm,
                svm,
                mean_tau: if tau_n > 0 { tau_sum / tau_n as f64 } else { f64::INFINITY },
                infinite_tau,
                mean_mismatch: mismatch_sum / groups.len() as f64,
                first_segment_mismatch,
            });
            log::info!("M={order}: {duration} s trials scored");
        }
    }
    Ok(OrderRun { order, ubm, avg_distance_raw, avg_distance_kl, census, durations })
}

fn score_set(trials: &[Trial], scores: Vec<f64>) -> spkver_core::Result<ScoreSet> {
    ScoreSet::new(trials.iter().zip(scores).map(|(t, score)| ScoreRecord { trial: t.clone(), score }).collect())
}
