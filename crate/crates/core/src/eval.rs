//! Trial scoring for both classifiers, EER and DET curves.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::adaptation::{build_supervector, map_adapt_means, MapConfig, Normalization, Supervector};
use crate::error::check_dim;
use crate::features::FeatureSequence;
use crate::gmm::DiagonalGmm;
use crate::math::{log_sum_exp_sparse, probit};
use crate::svm::{decision_value, SvmModel};
use crate::{Error, Result};

/// Average per-frame log-likelihood ratio `(1/T) Σ_t [log p(y_t|spk) − log p(y_t|ubm)]`.
pub fn gmm_ubm_score(spk: &DiagonalGmm, ubm: &DiagonalGmm, y: &FeatureSequence) -> Result<f64> {
    check_dim(ubm.dim(), spk.dim())?;
    check_dim(ubm.dim(), y.dim())?;
    if y.is_empty() {
        return Err(Error::Empty("test utterance"));
    }
    let mut s_buf = vec![0.0; spk.n_components()];
    let mut u_buf = vec![0.0; ubm.n_components()];
    let total: f64 = y
        .rows()
        .map(|x| spk.log_pdf_unchecked(x, &mut s_buf) - ubm.log_pdf_unchecked(x, &mut u_buf))
        .sum();
    Ok(total / y.len() as f64)
}

/// Per-frame log-likelihood ratios of `y` under `spk` against `ubm`.
pub fn frame_llrs(spk: &DiagonalGmm, ubm: &DiagonalGmm, y: &FeatureSequence) -> Result<Vec<f64>> {
    check_dim(ubm.dim(), spk.dim())?;
    check_dim(ubm.dim(), y.dim())?;
    let mut s_buf = vec![0.0; spk.n_components()];
    let mut u_buf = vec![0.0; ubm.n_components()];
    Ok(y.rows()
        .map(|x| spk.log_pdf_unchecked(x, &mut s_buf) - ubm.log_pdf_unchecked(x, &mut u_buf))
        .collect())
}

/// A mean-adapted model rewritten as `log w_i N_i(x) = c_i + a_i·x + q_i(x)`,
/// where `q_i(x) = −½ Σ x_d² / σ²_id` depends only on the shared variances.
/// Scoring many models against one utterance then costs one dot product per
/// component and model, with `q` computed once per frame.
#[derive(Debug, Clone)]
struct LinearizedGmm {
    offsets: Vec<f64>,
    slopes: Vec<f64>,
}

impl LinearizedGmm {
    fn new(model: &DiagonalGmm) -> Self {
        let d = model.dim();
        let iv = model.inv_variances();
        let slopes: Vec<f64> = model.means().iter().zip(iv).map(|(m, v)| m * v).collect();
        let offsets = model
            .log_norms()
            .iter()
            .enumerate()
            .map(|(i, &ln)| {
                let quad: f64 = model.mean(i).iter().zip(&iv[i * d..(i + 1) * d]).map(|(m, v)| m * m * v).sum();
                ln - 0.5 * quad
            })
            .collect();
        Self { offsets, slopes }
    }

    fn log_pdf(&self, x: &[f64], q: &[f64], buf: &mut [f64]) -> f64 {
        let d = x.len();
        for (i, slot) in buf.iter_mut().enumerate() {
            let a = &self.slopes[i * d..(i + 1) * d];
            let mut dot = 0.0;
            for k in 0..d {
                dot += a[k] * x[k];
            }
            *slot = self.offsets[i] + dot + q[i];
        }
        log_sum_exp_sparse(buf)
    }
}

/// Scores one utterance against many mean-adapted models of the same UBM.
///
/// Mathematically identical to calling [`gmm_ubm_score`] per model; the
/// rounding differs at the 1e-12 level.
#[derive(Debug, Clone)]
pub struct LlrBatchScorer {
    ubm: DiagonalGmm,
    ubm_lin: LinearizedGmm,
    models: Vec<LinearizedGmm>,
}

impl LlrBatchScorer {
    pub fn new<'a>(ubm: &DiagonalGmm, models: impl IntoIterator<Item = &'a DiagonalGmm>) -> Result<Self> {
        let models = models
            .into_iter()
            .map(|m| {
                if ubm.shares_structure(m) {
                    Ok(LinearizedGmm::new(m))
                } else {
                    Err(Error::ModelMismatch("speaker model is not a mean adaptation of the UBM"))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { ubm: ubm.clone(), ubm_lin: LinearizedGmm::new(ubm), models })
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    /// Per-frame LLR of every frame under every model: `result[model][t]`.
    pub fn frame_llrs(&self, y: &FeatureSequence) -> Result<Vec<Vec<f64>>> {
        let all: Vec<usize> = (0..self.models.len()).collect();
        self.frame_llrs_for(y, &all)
    }

    /// Per-frame LLRs under the selected models only, in selection order.
    pub fn frame_llrs_for(&self, y: &FeatureSequence, models: &[usize]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.ubm.dim(), y.dim())?;
        if let Some(&bad) = models.iter().find(|&&i| i >= self.models.len()) {
            return Err(Error::InvalidArgument(alloc::format!("no model with index {bad}")));
        }
        let m = self.ubm.n_components();
        let d = self.ubm.dim();
        let iv = self.ubm.inv_variances();
        let mut q = vec![0.0; m];
        let mut buf = vec![0.0; m];
        let mut out = vec![Vec::with_capacity(y.len()); models.len()];
        for x in y.rows() {
            for (i, qi) in q.iter_mut().enumerate() {
                let v = &iv[i * d..(i + 1) * d];
                let mut s = 0.0;
                for k in 0..d {
                    s += x[k] * x[k] * v[k];
                }
                *qi = -0.5 * s;
            }
            let background = self.ubm_lin.log_pdf(x, &q, &mut buf);
            for (&i, frames) in models.iter().zip(out.iter_mut()) {
                frames.push(self.models[i].log_pdf(x, &q, &mut buf) - background);
            }
        }
        Ok(out)
    }

    /// Average LLR of `y` under every model, in model order.
    pub fn score(&self, y: &FeatureSequence) -> Result<Vec<f64>> {
        let all: Vec<usize> = (0..self.models.len()).collect();
        self.score_for(y, &all)
    }

    /// Average LLR of `y` under the selected models.
    pub fn score_for(&self, y: &FeatureSequence, models: &[usize]) -> Result<Vec<f64>> {
        if y.is_empty() {
            return Err(Error::Empty("test utterance"));
        }
        let t = y.len() as f64;
        Ok(self.frame_llrs_for(y, models)?.iter().map(|f| f.iter().sum::<f64>() / t).collect())
    }
}

/// One verification attempt: does `test_utterance` belong to `target_speaker`?
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Trial {
    pub target_speaker: String,
    pub test_utterance: String,
    pub is_target: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub trial: Trial,
    pub score: f64,
}

/// Scored trials in trial-list order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    records: Vec<ScoreRecord>,
}

impl ScoreSet {
    pub fn new(records: Vec<ScoreRecord>) -> Result<Self> {
        if records.iter().any(|r| !r.score.is_finite()) {
            return Err(Error::InvalidArgument("scores must be finite".into()));
        }
        Ok(Self { records })
    }

    /// Convenience constructor from bare target and nontarget scores.
    pub fn from_scores(targets: &[f64], nontargets: &[f64]) -> Result<Self> {
        let mk = |i: usize, s: f64, is_target: bool| ScoreRecord {
            trial: Trial {
                target_speaker: String::new(),
                test_utterance: alloc::format!("{}{i}", if is_target { "t" } else { "n" }),
                is_target,
            },
            score: s,
        };
        let records = targets
            .iter()
            .enumerate()
            .map(|(i, &s)| mk(i, s, true))
            .chain(nontargets.iter().enumerate().map(|(i, &s)| mk(i, s, false)))
            .collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn target_scores(&self) -> Vec<f64> {
        self.records.iter().filter(|r| r.trial.is_target).map(|r| r.score).collect()
    }

    pub fn nontarget_scores(&self) -> Vec<f64> {
        self.records.iter().filter(|r| !r.trial.is_target).map(|r| r.score).collect()
    }

    /// `(target, nontarget)` trial counts.
    pub fn counts(&self) -> (usize, usize) {
        let t = self.records.iter().filter(|r| r.trial.is_target).count();
        (t, self.records.len() - t)
    }
}

/// Something that can score a test utterance against named target models.
pub trait TrialScorer {
    /// Scores of `utterance` against each of `targets`, in order.
    fn score_utterance(&self, utterance: &str, targets: &[&str]) -> Result<Vec<f64>>;
}

/// Scores every trial. Trials sharing a test utterance are batched, and the
/// output keeps trial-list order.
pub fn run_trials(trials: &[Trial], scorer: &impl TrialScorer) -> Result<ScoreSet> {
    let mut by_utterance: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        by_utterance.entry(t.test_utterance.as_str()).or_default().push(i);
    }
    let mut scores = vec![0.0; trials.len()];
    for (utt, idx) in &by_utterance {
        let targets: Vec<&str> = idx.iter().map(|&i| trials[i].target_speaker.as_str()).collect();
        let s = scorer.score_utterance(utt, &targets)?;
        check_dim(idx.len(), s.len())?;
        for (&i, v) in idx.iter().zip(s) {
            scores[i] = v;
        }
    }
    ScoreSet::new(
        trials
            .iter()
            .zip(scores)
            .map(|(t, score)| ScoreRecord { trial: t.clone(), score })
            .collect(),
    )
}

/// GMM-UBM scorer over in-memory models and utterances.
pub struct GmmUbmScorer<'a> {
    batch: LlrBatchScorer,
    index: BTreeMap<&'a str, usize>,
    utterances: &'a BTreeMap<String, FeatureSequence>,
}

impl<'a> GmmUbmScorer<'a> {
    pub fn new(
        ubm: &DiagonalGmm,
        models: &'a BTreeMap<String, DiagonalGmm>,
        utterances: &'a BTreeMap<String, FeatureSequence>,
    ) -> Result<Self> {
        let batch = LlrBatchScorer::new(ubm, models.values())?;
        let index = models.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        Ok(Self { batch, index, utterances })
    }
}

impl TrialScorer for GmmUbmScorer<'_> {
    fn score_utterance(&self, utterance: &str, targets: &[&str]) -> Result<Vec<f64>> {
        let y = self.utterances.get(utterance).ok_or_else(|| Error::UnknownId(utterance.into()))?;
        let idx: Vec<usize> = targets
            .iter()
            .map(|t| self.index.get(t).copied().ok_or_else(|| Error::UnknownId((*t).into())))
            .collect::<Result<_>>()?;
        self.batch.score_for(y, &idx)
    }
}

/// MAP-adapts every test utterance (whole segment) and builds its supervector.
pub fn test_supervectors(
    ubm: &DiagonalGmm,
    utterances: &BTreeMap<String, FeatureSequence>,
    cfg: &MapConfig,
    mode: Normalization,
) -> Result<BTreeMap<String, Supervector>> {
    utterances
        .iter()
        .map(|(id, y)| {
            let adapted = map_adapt_means(ubm, y, cfg)?;
            Ok((id.clone(), build_supervector(&adapted, ubm, mode)?.with_label(id.clone(), 0)))
        })
        .collect()
}

/// GMM-SVM scorer: decision value of each target's SVM on the test supervector.
pub struct SvmScorer<'a> {
    models: &'a BTreeMap<String, SvmModel>,
    supervectors: &'a BTreeMap<String, Supervector>,
}

impl<'a> SvmScorer<'a> {
    pub fn new(models: &'a BTreeMap<String, SvmModel>, supervectors: &'a BTreeMap<String, Supervector>) -> Self {
        Self { models, supervectors }
    }
}

impl TrialScorer for SvmScorer<'_> {
    fn score_utterance(&self, utterance: &str, targets: &[&str]) -> Result<Vec<f64>> {
        let x = self.supervectors.get(utterance).ok_or_else(|| Error::UnknownId(utterance.into()))?;
        targets
            .iter()
            .map(|t| {
                let model = self.models.get(*t).ok_or_else(|| Error::UnknownId((*t).into()))?;
                decision_value(model, x)
            })
            .collect()
    }
}

/// One operating point of the threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    /// Accept iff `score ≥ threshold`; the final point uses `+inf`.
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

impl DetPoint {
    pub fn probit_far(&self) -> f64 {
        probit(self.far)
    }

    pub fn probit_frr(&self) -> f64 {
        probit(self.frr)
    }
}

/// Operating points ordered by increasing threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve {
    pub points: Vec<DetPoint>,
}

fn split_scores(scores: &ScoreSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut tar = scores.target_scores();
    let mut non = scores.nontarget_scores();
    if tar.is_empty() {
        return Err(Error::Empty("target scores"));
    }
    if non.is_empty() {
        return Err(Error::Empty("nontarget scores"));
    }
    tar.sort_by(f64::total_cmp);
    non.sort_by(f64::total_cmp);
    Ok((tar, non))
}

/// Sweeps the threshold over every distinct score, then `+inf`.
/// `FAR(θ) = P(nontarget ≥ θ)`, `FRR(θ) = P(target < θ)`.
pub fn det_points(scores: &ScoreSet) -> Result<DetCurve> {
    let (tar, non) = split_scores(scores)?;
    let (nt, nn) = (tar.len() as f64, non.len() as f64);
    let mut thresholds: Vec<f64> = tar.iter().chain(&non).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let (mut ti, mut ni) = (0, 0);
    let mut points = Vec::with_capacity(thresholds.len() + 1);
    for &th in &thresholds {
        while ti < tar.len() && tar[ti] < th {
            ti += 1;
        }
        while ni < non.len() && non[ni] < th {
            ni += 1;
        }
        points.push(DetPoint {
            threshold: th,
            far: (non.len() - ni) as f64 / nn,
            frr: ti as f64 / nt,
        });
    }
    points.push(DetPoint { threshold: f64::INFINITY, far: 0.0, frr: 1.0 });
    Ok(DetCurve { points })
}

/// Equal error rate: where FAR and FRR cross along the sweep, linearly
/// interpolated between the two bracketing operating points.
pub fn compute_eer(scores: &ScoreSet) -> Result<f64> {
    Ok(eer_from_curve(&det_points(scores)?))
}

pub fn eer_from_curve(curve: &DetCurve) -> f64 {
    let pts = &curve.points;
    // pts[0] has FRR = 0 and the last point has FAR = 0, so a crossing exists.
    let k = pts.iter().position(|p| p.far <= p.frr).unwrap_or(pts.len() - 1);
    if k == 0 {
        return pts[0].far;
    }
    let (a, b) = (pts[k - 1], pts[k]);
    let (da, db) = (a.far - a.frr, b.far - b.frr);
    let t = da / (da - db);
    a.far + t * (b.far - a.far)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seq(v: &[f64], d: usize) -> FeatureSequence {
        FeatureSequence::from_rows(v.to_vec(), d, "y").unwrap()
    }

    fn toy_models() -> (DiagonalGmm, DiagonalGmm) {
        let ubm = DiagonalGmm::new(vec![0.3, 0.7], vec![0.0, 0.0, 3.0, -1.0], vec![1.0, 2.0, 0.5, 1.5], 2).unwrap();
        let spk = ubm.with_means(vec![0.4, -0.2, 2.5, -0.7]).unwrap();
        (ubm, spk)
    }

    #[test]
    fn identical_models_score_zero() {
        let (ubm, _) = toy_models();
        let y = seq(&[0.1, 0.2, 3.0, -4.0, 1.0, 1.0], 2);
        assert_eq!(gmm_ubm_score(&ubm, &ubm, &y).unwrap(), 0.0);
        let batch = LlrBatchScorer::new(&ubm, [&ubm]).unwrap();
        assert_eq!(batch.score(&y).unwrap(), vec![0.0]);
    }

    #[test]
    fn single_frame_equals_direct_llr() {
        let (ubm, spk) = toy_models();
        let x = [0.7, -0.3];
        let direct = spk.log_pdf(&x).unwrap() - ubm.log_pdf(&x).unwrap();
        assert_abs_diff_eq!(gmm_ubm_score(&spk, &ubm, &seq(&x, 2)).unwrap(), direct, epsilon = 1e-14);
    }

    #[test]
    fn duplicated_frames_same_score() {
        let (ubm, spk) = toy_models();
        let y = seq(&[0.1, 0.2, 3.0, -4.0, 1.0, 1.0], 2);
        let yy = seq(&[0.1, 0.2, 0.1, 0.2, 3.0, -4.0, 3.0, -4.0, 1.0, 1.0, 1.0, 1.0], 2);
        assert_abs_diff_eq!(
            gmm_ubm_score(&spk, &ubm, &y).unwrap(),
            gmm_ubm_score(&spk, &ubm, &yy).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn batch_matches_direct() {
        let (ubm, spk) = toy_models();
        let y = seq(&[0.1, 0.2, 3.0, -4.0, 1.0, 1.0, -2.0, 0.5], 2);
        let batch = LlrBatchScorer::new(&ubm, [&spk, &ubm]).unwrap();
        let s = batch.score(&y).unwrap();
        assert_abs_diff_eq!(s[0], gmm_ubm_score(&spk, &ubm, &y).unwrap(), epsilon = 1e-12);
        assert_eq!(s[1], 0.0);
        let bad = DiagonalGmm::new(vec![1.0], vec![0.0, 0.0], vec![1.0, 1.0], 2).unwrap();
        assert!(LlrBatchScorer::new(&ubm, [&bad]).is_err());
    }

    #[test]
    fn empty_test_rejected() {
        let (ubm, spk) = toy_models();
        assert_eq!(gmm_ubm_score(&spk, &ubm, &seq(&[], 2)), Err(Error::Empty("test utterance")));
    }

    #[test]
    fn eer_examples() {
        let perfect = ScoreSet::from_scores(&[2.0, 3.0], &[0.0, 1.0]).unwrap();
        assert_eq!(compute_eer(&perfect).unwrap(), 0.0);
        let interleaved = ScoreSet::from_scores(&[1.0, 3.0], &[2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(compute_eer(&interleaved).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn eer_requires_both_classes() {
        assert!(compute_eer(&ScoreSet::from_scores(&[1.0], &[]).unwrap()).is_err());
        assert!(compute_eer(&ScoreSet::from_scores(&[], &[1.0]).unwrap()).is_err());
        assert!(ScoreSet::from_scores(&[f64::NAN], &[0.0]).is_err());
    }

    #[test]
    fn det_of_two_scores() {
        let s = ScoreSet::from_scores(&[1.0], &[0.0]).unwrap();
        let pts: Vec<(f64, f64)> = det_points(&s).unwrap().points.iter().map(|p| (p.far, p.frr)).collect();
        assert_eq!(pts, vec![(1.0, 0.0), (0.0, 0.0), (0.0, 1.0)]);
    }

    #[test]
    fn perfect_separation_reaches_origin() {
        let s = ScoreSet::from_scores(&[5.0, 6.0, 7.0], &[-1.0, 0.0, 2.0]).unwrap();
        assert!(det_points(&s).unwrap().points.iter().any(|p| p.far == 0.0 && p.frr == 0.0));
    }

    struct Fixed;
    impl TrialScorer for Fixed {
        fn score_utterance(&self, utterance: &str, targets: &[&str]) -> Result<Vec<f64>> {
            targets
                .iter()
                .map(|t| match (*t, utterance) {
                    ("a" | "b", "u1" | "u2") => Ok(if t.as_bytes()[0] - b'a' == utterance.as_bytes()[1] - b'1' { 1.0 } else { 0.0 }),
                    _ => Err(Error::UnknownId((*t).into())),
                })
                .collect()
        }
    }

    #[test]
    fn all_versus_all_trials() {
        let mut trials = Vec::new();
        for (u, owner) in [("u1", "a"), ("u2", "b")] {
            for t in ["a", "b"] {
                trials.push(Trial { target_speaker: t.into(), test_utterance: u.into(), is_target: t == owner });
            }
        }
        let scores = run_trials(&trials, &Fixed).unwrap();
        assert_eq!(scores.counts(), (2, 2));
        assert_eq!(scores.records()[0].trial, trials[0]);
        assert_eq!(scores.target_scores(), vec![1.0, 1.0]);
        assert_eq!(run_trials(&trials, &Fixed).unwrap(), scores);

        let bad = [Trial { target_speaker: "zed".into(), test_utterance: "u1".into(), is_target: false }];
        assert_eq!(run_trials(&bad, &Fixed).unwrap_err(), Error::UnknownId("zed".into()));
    }

    /// Counts every threshold from scratch and interpolates the first crossing.
    fn brute_force_eer(tar: &[f64], non: &[f64]) -> f64 {
        let mut thresholds: Vec<f64> = tar.iter().chain(non).copied().collect();
        thresholds.push(f64::INFINITY);
        let mut ops: Vec<(f64, f64, f64)> = Vec::new();
        for &th in &thresholds {
            if ops.iter().any(|o| o.0 == th) {
                continue;
            }
            let far = non.iter().filter(|&&s| s >= th).count() as f64 / non.len() as f64;
            let frr = tar.iter().filter(|&&s| s < th).count() as f64 / tar.len() as f64;
            ops.push((th, far, frr));
        }
        ops.sort_by(|a, b| a.0.total_cmp(&b.0));
        for k in 0..ops.len() {
            if ops[k].1 <= ops[k].2 {
                if k == 0 {
                    return ops[0].1;
                }
                let (_, fa, ra) = ops[k - 1];
                let (_, fb, rb) = ops[k];
                let t = (fa - ra) / ((fa - ra) - (fb - rb));
                return fa + t * (fb - fa);
            }
        }
        unreachable!()
    }

    fn random_scores(rng: &mut rand_chacha::ChaCha8Rng, ties: bool) -> (Vec<f64>, Vec<f64>) {
        use rand::Rng;
        let nt = rng.random_range(1..100);
        let nn = rng.random_range(1..100);
        let shift = rng.random_range(0.0..2.0);
        let mut draw = |offset: f64| {
            let v: f64 = rng.random_range(-2.0..2.0) + offset;
            if ties { (v * 2.0).round() } else { v }
        };
        let tar = (0..nt).map(|_| draw(shift)).collect();
        let non = (0..nn).map(|_| draw(0.0)).collect();
        (tar, non)
    }

    #[test]
    fn eer_matches_brute_force_sweep() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for i in 0..100 {
            let (tar, non) = random_scores(&mut rng, i % 3 == 0);
            let got = compute_eer(&ScoreSet::from_scores(&tar, &non).unwrap()).unwrap();
            assert_abs_diff_eq!(got, brute_force_eer(&tar, &non), epsilon = 1e-12);
        }
    }

    #[test]
    fn negating_and_swapping_classes_keeps_eer() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (tar, non) = random_scores(&mut rng, false);
            let flipped_tar: Vec<f64> = non.iter().map(|s| -s).collect();
            let flipped_non: Vec<f64> = tar.iter().map(|s| -s).collect();
            let a = compute_eer(&ScoreSet::from_scores(&tar, &non).unwrap()).unwrap();
            let b = compute_eer(&ScoreSet::from_scores(&flipped_tar, &flipped_non).unwrap()).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn eer_lies_on_det_polyline() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for i in 0..50 {
            let (tar, non) = random_scores(&mut rng, i % 2 == 0);
            let curve = det_points(&ScoreSet::from_scores(&tar, &non).unwrap()).unwrap();
            let eer = eer_from_curve(&curve);
            let on_segment = curve.points.windows(2).any(|w| {
                let (a, b) = (w[0], w[1]);
                let cross = (b.far - a.far) * (eer - a.frr) - (b.frr - a.frr) * (eer - a.far);
                let inside = eer >= a.far.min(b.far) - 1e-12
                    && eer <= a.far.max(b.far) + 1e-12
                    && eer >= a.frr.min(b.frr) - 1e-12
                    && eer <= a.frr.max(b.frr) + 1e-12;
                cross.abs() < 1e-12 && inside
            });
            assert!(on_segment, "eer {eer}");
        }
    }
}
