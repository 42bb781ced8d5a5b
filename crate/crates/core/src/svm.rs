//! Soft-margin linear SVM in supervector space.
//!
//! The dual
//!
//! ```text
//! min ½ αᵀQα − Σα   s.t.  Σ α_i y_i = 0,  0 ≤ α_i ≤ C,   Q_ij = y_i y_j ⟨x_i, x_j⟩
//! ```
//!
//! is solved by SMO: each step picks the maximal KKT-violating pair (ties go
//! to the lowest index) and solves the two-variable subproblem analytically.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::adaptation::{Normalization, Supervector};
use crate::error::check_dim;
use crate::partition::LabeledSupervectorSet;
use crate::{Error, Result};

/// `α_i` above this counts as a support vector.
pub const SV_THRESHOLD: f64 = 1e-8;
/// Slack at or below this is "on the margin".
pub const MARGIN_SLACK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Soft-margin penalty `C`.
    pub c: f64,
    /// Stop when the maximal KKT violation `m(α) − M(α)` drops below this.
    pub tolerance: f64,
    /// Iteration cap; `None` means `max(10⁷, 100·n)`.
    pub max_iterations: Option<usize>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, tolerance: 1e-3, max_iterations: None }
    }
}

impl SvmConfig {
    pub fn with_c(c: f64) -> Self {
        Self { c, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument("C must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("SMO tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Dense symmetric kernel matrix of a sample list.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    n: usize,
    values: Vec<f64>,
}

impl Gram {
    /// Linear-kernel Gram matrix. Entries are computed once per unordered pair.
    pub fn linear(samples: &[&[f64]]) -> Result<Self> {
        let n = samples.len();
        if let Some(first) = samples.first() {
            for s in samples {
                check_dim(first.len(), s.len())?;
            }
        }
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k: f64 = samples[i].iter().zip(samples[j]).map(|(a, b)| a * b).sum();
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        check_dim(n * n, values.len())?;
        Ok(Self { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Output of [`solve_dual`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// `y_i f(x_i)` for every training sample.
    pub margins: Vec<f64>,
    /// `½ αᵀQα − Σα` (minimization form).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the soft-margin dual for labels `±1` over a precomputed kernel.
pub fn solve_dual(gram: &Gram, labels: &[f64], cfg: &SvmConfig) -> Result<DualSolution> {
    cfg.validate()?;
    let n = gram.len();
    check_dim(n, labels.len())?;
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidArgument("labels must be ±1".into()));
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::SingleClass);
    }
    let c = cfg.c;
    let max_iter = cfg.max_iterations.unwrap_or_else(|| (100 * n).max(10_000_000));
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let y = labels;
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (ki, kj) = (gram.row(i), gram.row(j));
        let qii = ki[i];
        let qjj = kj[j];
        let qij = y[i] * y[j] * ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else {
                if ai < 0.0 {
                    ai = 0.0;
                    aj = -diff;
                }
                if aj > c {
                    aj = c;
                    ai = c + diff;
                }
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = sum;
                }
                if ai < 0.0 {
                    ai = 0.0;
                    aj = sum;
                }
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = ((ai - old_i) * y[i], (aj - old_j) * y[j]);
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tolerance");
    }

    let bias = -threshold(&alpha, &grad, y, c);
    let margins = (0..n).map(|t| grad[t] + 1.0 + y[t] * bias).collect();
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    Ok(DualSolution { alpha, bias, margins, objective, iterations, converged })
}

/// LIBSVM's ρ: mean of `y_i ∇_i` over free variables, else the midpoint of
/// the feasible interval.
fn threshold(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Per-training-sample record kept with the model.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub speaker_id: String,
    pub partition_index: u32,
    /// `+1` or `-1`.
    pub label: f64,
    pub alpha: f64,
    /// Functional margin `y_i f(x_i)`.
    pub margin: f64,
}

impl SampleRecord {
    pub fn is_support(&self) -> bool {
        self.alpha > SV_THRESHOLD
    }

    /// `ξ_i = max(0, 1 − y_i f(x_i))`.
    pub fn slack(&self) -> f64 {
        (1.0 - self.margin).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub target_speaker: String,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub ubm_fingerprint: u64,
    pub normalization: Normalization,
    pub samples: Vec<SampleRecord>,
}

impl SvmModel {
    pub fn dual_coefficients(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.alpha).collect()
    }

    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.samples.len()).filter(|&i| self.samples[i].is_support()).collect()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Trains a one-vs-rest model. Positives carry label `+1`.
pub fn train_soft_margin(set: &LabeledSupervectorSet<'_>, cfg: &SvmConfig) -> Result<SvmModel> {
    let samples: Vec<&Supervector> = set.samples().map(|(s, _)| s).collect();
    let labels: Vec<f64> = set.samples().map(|(_, y)| y).collect();
    if samples.is_empty() {
        return Err(Error::Empty("training set"));
    }
    for s in &samples {
        samples[0].check_compatible(s)?;
    }
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.values.as_slice()).collect();
    let gram = Gram::linear(&rows)?;
    train_with_gram(&set.target_speaker, &samples, &labels, &gram, cfg)
}

/// Trains against a precomputed Gram matrix whose rows follow `samples`.
///
/// Lets one Gram matrix serve every target speaker of a corpus, since only
/// the labels change between one-vs-rest problems.
pub fn train_with_gram(
    target_speaker: &str,
    samples: &[&Supervector],
    labels: &[f64],
    gram: &Gram,
    cfg: &SvmConfig,
) -> Result<SvmModel> {
    check_dim(gram.len(), samples.len())?;
    let first = samples.first().ok_or(Error::Empty("training set"))?;
    let sol = solve_dual(gram, labels, cfg)?;
    let dim = first.dim();
    let mut weights = vec![0.0; dim];
    for ((s, &y), &a) in samples.iter().zip(labels).zip(&sol.alpha) {
        if a > 0.0 {
            for (w, x) in weights.iter_mut().zip(&s.values) {
                *w += a * y * x;
            }
        }
    }
    let records = samples
        .iter()
        .zip(labels)
        .zip(sol.alpha.iter().zip(&sol.margins))
        .map(|((s, &label), (&alpha, &margin))| SampleRecord {
            speaker_id: s.speaker_id.clone(),
            partition_index: s.partition_index,
            label,
            alpha,
            margin,
        })
        .collect();
    Ok(SvmModel {
        target_speaker: target_speaker.into(),
        weights,
        bias: sol.bias,
        c: cfg.c,
        ubm_fingerprint: first.ubm_fingerprint,
        normalization: first.normalization,
        samples: records,
    })
}

/// `w·x + b`, refusing supervectors from a different UBM.
pub fn decision_value(model: &SvmModel, x: &Supervector) -> Result<f64> {
    check_dim(model.dim(), x.dim())?;
    if model.ubm_fingerprint != x.ubm_fingerprint {
        return Err(Error::FingerprintMismatch { expected: model.ubm_fingerprint, got: x.ubm_fingerprint });
    }
    if model.normalization != x.normalization {
        return Err(Error::ModelMismatch("supervector normalization differs from the model's"));
    }
    Ok(x.dot(&model.weights) + model.bias)
}

/// Support vectors by class and by slack regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SvCensus {
    pub positive_sv_count: usize,
    pub negative_sv_count: usize,
    /// `ξ = 0`: exactly on the margin.
    pub margin_sv_count: usize,
    /// `0 < ξ ≤ 1`: inside the margin, correctly classified.
    pub bound_sv_count: usize,
    /// `ξ > 1`: on the wrong side of the hyperplane.
    pub misclassified_sv_count: usize,
}

impl SvCensus {
    pub fn total(&self) -> usize {
        self.positive_sv_count + self.negative_sv_count
    }
}

/// Counts support vectors.
///
/// Free support vectors (`0 < α < C`) satisfy `y f(x) = 1` at the optimum, so
/// they are filed on the margin regardless of the solver's residual; bounded
/// ones (`α = C`) are filed by their slack.
pub fn census(model: &SvmModel) -> SvCensus {
    let mut out = SvCensus::default();
    for s in model.samples.iter().filter(|s| s.is_support()) {
        if s.label > 0.0 {
            out.positive_sv_count += 1;
        } else {
            out.negative_sv_count += 1;
        }
        let xi = if s.alpha < model.c { 0.0 } else { s.slack() };
        if xi <= MARGIN_SLACK_TOLERANCE {
            out.margin_sv_count += 1;
        } else if xi <= 1.0 {
            out.bound_sv_count += 1;
        } else {
            out.misclassified_sv_count += 1;
        }
    }
    out
}

/// Upper bound on the expected test error: `E[#SV] / #training samples`.
pub fn vapnik_bound(expected_sv_count: f64, training_samples: usize) -> Result<f64> {
    if training_samples == 0 {
        return Err(Error::InvalidArgument("need at least one training sample".into()));
    }
    if !(expected_sv_count >= 0.0) {
        return Err(Error::InvalidArgument("support-vector count must be nonnegative".into()));
    }
    Ok(expected_sv_count / training_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use approx::assert_abs_diff_eq;

    fn sv(speaker: &str, v: &[f64]) -> Supervector {
        Supervector {
            values: v.to_vec(),
            speaker_id: speaker.into(),
            partition_index: 0,
            normalization: Normalization::Raw,
            ubm_fingerprint: 1,
        }
    }

    fn two_point() -> SvmModel {
        let pos = sv("a", &[1.0]);
        let neg = sv("b", &[-1.0]);
        let set = LabeledSupervectorSet {
            target_speaker: "a".into(),
            positives: vec![&pos],
            negatives: vec![&neg],
        };
        train_soft_margin(&set, &SvmConfig::with_c(1000.0)).unwrap()
    }

    #[test]
    fn symmetric_pair_has_unit_weight() {
        let m = two_point();
        assert_abs_diff_eq!(m.weights[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m.bias, 0.0, epsilon = 1e-6);
        assert_eq!(m.support_indices(), vec![0, 1]);
        let c = census(&m);
        assert_eq!((c.positive_sv_count, c.negative_sv_count, c.margin_sv_count), (1, 1, 2));
    }

    #[test]
    fn decision_values_of_two_point_model() {
        let m = two_point();
        assert_abs_diff_eq!(decision_value(&m, &sv("a", &[1.0])).unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(decision_value(&m, &sv("b", &[-1.0])).unwrap(), -1.0, epsilon = 1e-6);
        let f1 = decision_value(&m, &sv("x", &[0.7])).unwrap();
        let f2 = decision_value(&m, &sv("x", &[1.4])).unwrap();
        assert_abs_diff_eq!(f2, 2.0 * m.weights[0] * 0.7 + m.bias, epsilon = 1e-12);
        assert!(f2 > f1);
    }

    #[test]
    fn zero_weights_return_bias() {
        let m = SvmModel {
            target_speaker: "t".into(),
            weights: vec![0.0; 3],
            bias: -0.25,
            c: 1.0,
            ubm_fingerprint: 1,
            normalization: Normalization::Raw,
            samples: Vec::new(),
        };
        assert_eq!(decision_value(&m, &sv("x", &[5.0, -2.0, 9.0])).unwrap(), -0.25);
    }

    #[test]
    fn foreign_ubm_rejected() {
        let m = two_point();
        let mut x = sv("x", &[1.0]);
        x.ubm_fingerprint = 2;
        assert!(matches!(decision_value(&m, &x), Err(Error::FingerprintMismatch { .. })));
        assert!(decision_value(&m, &sv("x", &[1.0, 2.0])).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let a = sv("a", &[1.0]);
        let b = sv("a", &[2.0]);
        let set = LabeledSupervectorSet { target_speaker: "a".into(), positives: vec![&a, &b], negatives: vec![] };
        assert_eq!(train_soft_margin(&set, &SvmConfig::default()).unwrap_err(), Error::SingleClass);
    }

    #[test]
    fn lone_positive_is_always_support() {
        let mut per: BTreeMap<String, Vec<Supervector>> = BTreeMap::new();
        for s in 0..10 {
            let id = alloc::format!("s{s}");
            let v = [s as f64 * 0.3, libm::sin(s as f64)];
            per.insert(id.clone(), vec![sv(&id, &v)]);
        }
        for target in per.keys() {
            let set = crate::partition::build_training_set(&per, target).unwrap();
            let m = train_soft_margin(&set, &SvmConfig::default()).unwrap();
            assert_eq!(census(&m).positive_sv_count, 1);
        }
    }

    #[test]
    fn vapnik_arithmetic() {
        assert_eq!(vapnik_bound(20.0, 100).unwrap(), 0.2);
        assert_eq!(vapnik_bound(0.0, 100).unwrap(), 0.0);
        assert_eq!(vapnik_bound(100.0, 100).unwrap(), 1.0);
        assert!(vapnik_bound(1.0, 0).is_err());
    }

    fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[piv][col].abs() < 1e-10 {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let tail: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - tail) / a[r][r];
        }
        Some(x)
    }

    fn dual_objective(q: &[Vec<f64>], alpha: &[f64]) -> f64 {
        let n = alpha.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += alpha[i] * q[i][j] * alpha[j];
            }
        }
        0.5 * quad - alpha.iter().sum::<f64>()
    }

    /// Minimum of the dual over every active set: each `α_i` is pinned at
    /// 0, pinned at `C`, or free, and the free block solves its stationarity
    /// system under `yᵀα = 0`.
    fn brute_force_dual(x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
        let n = x.len();
        let q: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| y[i] * y[j] * x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum::<f64>()).collect())
            .collect();
        let mut best = f64::INFINITY;
        for code in 0..3usize.pow(n as u32) {
            let mut state = vec![0u8; n];
            let mut k = code;
            for s in state.iter_mut() {
                *s = (k % 3) as u8;
                k /= 3;
            }
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
            let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
            let m = free.len();
            if m == 0 {
                if alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() > 1e-12 {
                    continue;
                }
            } else {
                let mut a = vec![vec![0.0; m + 1]; m + 1];
                let mut rhs = vec![0.0; m + 1];
                for (r, &i) in free.iter().enumerate() {
                    for (cc, &j) in free.iter().enumerate() {
                        a[r][cc] = q[i][j];
                    }
                    a[r][m] = y[i];
                    a[m][r] = y[i];
                    rhs[r] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q[i][j] * c).sum::<f64>();
                }
                rhs[m] = -(0..n).filter(|j| state[*j] == 1).map(|j| y[j] * c).sum::<f64>();
                let Some(sol) = solve_linear(a, rhs) else { continue };
                if sol[..m].iter().any(|&v| v < -1e-12 || v > c + 1e-12) {
                    continue;
                }
                for (r, &i) in free.iter().enumerate() {
                    alpha[i] = sol[r].clamp(0.0, c);
                }
            }
            best = best.min(dual_objective(&q, &alpha));
        }
        best
    }

    fn random_fixture(rng: &mut rand_chacha::ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        use rand::Rng;
        let mut y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        if n > 2 && rng.random_bool(0.5) {
            y[n - 1] = 1.0;
        }
        let x = y
            .iter()
            .map(|&l| (0..d).map(|k| rng.random_range(-1.5..1.5) + if k == 0 { 0.8 * l } else { 0.0 }).collect())
            .collect();
        (x, y)
    }

    fn fit(x: &[Vec<f64>], y: &[f64], c: f64) -> SvmModel {
        fit_with(x, y, &SvmConfig::with_c(c))
    }

    fn fit_with(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> SvmModel {
        let owned: Vec<Supervector> = x.iter().enumerate().map(|(i, v)| sv(&alloc::format!("s{i}"), v)).collect();
        let refs: Vec<&Supervector> = owned.iter().collect();
        let rows: Vec<&[f64]> = x.iter().map(|v| v.as_slice()).collect();
        train_with_gram("t", &refs, y, &Gram::linear(&rows).unwrap(), cfg).unwrap()
    }

    #[test]
    fn dual_objective_matches_brute_force_oracle() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let mut cases = 0;
        for n in 2..=8 {
            for d in 1..=3 {
                for &c in &[0.1, 1.0, 10.0] {
                    let (x, y) = random_fixture(&mut rng, n, d);
                    let rows: Vec<&[f64]> = x.iter().map(|v| v.as_slice()).collect();
                    let sol = solve_dual(&Gram::linear(&rows).unwrap(), &y, &SvmConfig::with_c(c)).unwrap();
                    assert!(sol.converged);
                    let oracle = brute_force_dual(&x, &y, c);
                    let rel = (sol.objective - oracle).abs() / oracle.abs().max(1e-12);
                    assert!(rel <= 1e-4, "n={n} d={d} C={c}: {} vs {oracle}", sol.objective);
                    cases += 1;
                }
            }
        }
        assert_eq!(cases, 63);
    }

    #[test]
    fn solutions_satisfy_kkt() {
        use rand::SeedableRng;
        let tol = 1e-3;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [2, 5, 8, 20, 40] {
            for &c in &[0.05, 1.0, 100.0] {
                let (x, y) = random_fixture(&mut rng, n, 3);
                let m = fit(&x, &y, c);
                let balance: f64 = m.samples.iter().map(|s| s.alpha * s.label).sum();
                assert!(balance.abs() < 1e-9 * c.max(1.0));
                for (s, xi) in m.samples.iter().zip(&x) {
                    assert!(s.alpha >= 0.0 && s.alpha <= c);
                    let f = decision_value(&m, &sv("x", xi)).unwrap();
                    assert_abs_diff_eq!(s.label * f, s.margin, epsilon = 1e-9);
                    if s.alpha <= SV_THRESHOLD {
                        assert!(s.margin >= 1.0 - tol, "α=0 but yf={}", s.margin);
                    } else if s.alpha >= c - SV_THRESHOLD {
                        assert!(s.margin <= 1.0 + tol, "α=C but yf={}", s.margin);
                    } else {
                        assert!((s.margin - 1.0).abs() <= tol, "free α but yf={}", s.margin);
                    }
                }
            }
        }
    }

    #[test]
    fn overlapping_points_become_misclassified_support_vectors() {
        // The last two points sit on the wrong side of the origin.
        let x = vec![vec![2.0], vec![-2.0], vec![-0.5], vec![0.5]];
        let y = [1.0, -1.0, 1.0, -1.0];
        let m = fit(&x, &y, 1.0);
        assert!(m.samples[2].slack() > 1.0 && m.samples[3].slack() > 1.0);
        let c = census(&m);
        assert_eq!(c.misclassified_sv_count, 2);
        assert_abs_diff_eq!(m.samples[2].alpha, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.samples[3].alpha, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn duplicated_samples_leave_separating_hyperplane_unchanged() {
        let x = vec![vec![2.0, 0.5], vec![1.5, -1.0], vec![3.0, 1.0], vec![-1.0, 0.0], vec![-2.0, 1.5], vec![-0.5, -2.0]];
        let y = vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let once = fit(&x, &y, 1000.0);
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        let twice = fit(&x2, &y2, 1000.0);
        for (a, b) in once.weights.iter().zip(&twice.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(once.bias, twice.bias, epsilon = 1e-6);
    }

    #[test]
    fn swapping_labels_negates_the_model() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for &c in &[0.1, 1.0, 10.0] {
            let (x, y) = random_fixture(&mut rng, 12, 4);
            let neg: Vec<f64> = y.iter().map(|l| -l).collect();
            let a = fit(&x, &y, c);
            let b = fit(&x, &neg, c);
            for (p, q) in a.weights.iter().zip(&b.weights) {
                assert_abs_diff_eq!(*p, -*q, epsilon = 1e-6);
            }
            assert_abs_diff_eq!(a.bias, -b.bias, epsilon = 1e-6);
        }
    }

    #[test]
    fn margin_support_vectors_score_unit_magnitude() {
        let x = vec![vec![2.0, 0.5], vec![1.5, -1.0], vec![3.0, 1.0], vec![-1.0, 0.0], vec![-2.0, 1.5], vec![-0.5, -2.0]];
        let y = vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let m = fit_with(&x, &y, &SvmConfig { c: 1000.0, tolerance: 1e-9, max_iterations: None });
        let mut seen = 0;
        for (s, xi) in m.samples.iter().zip(&x) {
            if s.is_support() {
                assert_abs_diff_eq!(decision_value(&m, &sv("x", xi)).unwrap(), s.label, epsilon = 1e-6);
                seen += 1;
            }
        }
        assert!(seen >= 2);
    }
}
