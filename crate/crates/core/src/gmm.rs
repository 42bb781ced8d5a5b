//! Diagonal-covariance Gaussian mixtures and EM training.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::check_dim;
use crate::features::FeatureSequence;
use crate::math::{exp, log, log_sum_exp, sqrt, LN_2PI, LSE_NEGLIGIBLE};
use crate::{Error, Result};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-10;

/// A mixture of `M` Gaussians with diagonal covariances in `D` dimensions.
///
/// Serves both as the UBM and as MAP-adapted speaker models.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGmm {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    // Derived, kept in sync by `new`.
    inv_variances: Vec<f64>,
    log_norms: Vec<f64>,
}

impl DiagonalGmm {
    /// Validates and builds a model. `means` and `variances` are `M × D`, row-major.
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>, dim: usize) -> Result<Self> {
        let m = weights.len();
        if m == 0 || dim == 0 {
            return Err(Error::InvalidModel("mixture needs M ≥ 1 and D ≥ 1".into()));
        }
        if means.len() != m * dim || variances.len() != m * dim {
            return Err(Error::InvalidModel(alloc::format!(
                "expected {m}×{dim} means and variances, got {} and {}",
                means.len(),
                variances.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidModel("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidModel(alloc::format!("weights sum to {total}, not 1")));
        }
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("means must be finite".into()));
        }
        if variances.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidModel("variances must be finite and positive".into()));
        }

        let inv_variances: Vec<f64> = variances.iter().map(|v| 1.0 / v).collect();
        let log_norms = weights
            .iter()
            .zip(variances.chunks_exact(dim))
            .map(|(&w, var)| {
                let log_det: f64 = var.iter().map(|&v| log(v)).sum();
                log(w) - 0.5 * (dim as f64 * LN_2PI + log_det)
            })
            .collect();
        Ok(Self { dim, weights, means, variances, inv_variances, log_norms })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// All means, `M × D` row-major.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, i: usize) -> &[f64] {
        &self.means[i * self.dim..(i + 1) * self.dim]
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn variance(&self, i: usize) -> &[f64] {
        &self.variances[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn inv_variances(&self) -> &[f64] {
        &self.inv_variances
    }

    /// `log w_i − ½(D log 2π + log |Σ_i|)` per component.
    pub(crate) fn log_norms(&self) -> &[f64] {
        &self.log_norms
    }

    /// Same weights and variances, new means.
    pub fn with_means(&self, means: Vec<f64>) -> Result<Self> {
        if means.len() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), got: means.len() });
        }
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("means must be finite".into()));
        }
        Ok(Self { means, ..self.clone() })
    }

    /// True when `other` has bit-identical weights and variances, i.e. it is a
    /// mean-only adaptation of `self` (or vice versa).
    pub fn shares_structure(&self, other: &Self) -> bool {
        self.dim == other.dim && self.weights == other.weights && self.variances == other.variances
    }

    /// `log w_i + log N(x; μ_i, Σ_i)` for every component, written into `out`.
    pub(crate) fn joint_log_densities(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, slot) in out.iter_mut().enumerate() {
            let mu = &self.means[i * d..(i + 1) * d];
            let iv = &self.inv_variances[i * d..(i + 1) * d];
            let mut q = 0.0;
            for k in 0..d {
                let z = x[k] - mu[k];
                q += z * z * iv[k];
            }
            *slot = self.log_norms[i] - 0.5 * q;
        }
    }

    /// `log Σ_i w_i N(x; μ_i, Σ_i)` in nats.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.log_pdf_unchecked(x, &mut vec![0.0; self.n_components()]))
    }

    pub(crate) fn log_pdf_unchecked(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.joint_log_densities(x, scratch);
        log_sum_exp(scratch)
    }

    /// Component posteriors `Pr(i | x)`.
    pub fn posteriors(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let mut post = vec![0.0; self.n_components()];
        self.posteriors_unchecked(x, &mut post);
        Ok(post)
    }

    /// Writes posteriors into `out` and returns `log p(x)`.
    pub(crate) fn posteriors_unchecked(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.joint_log_densities(x, out);
        let lse = log_sum_exp(out);
        for v in out.iter_mut() {
            *v = exp(*v - lse);
        }
        lse
    }

    /// Mean per-frame log-likelihood of `seq`.
    pub fn average_log_likelihood(&self, seq: &FeatureSequence) -> Result<f64> {
        check_dim(self.dim, seq.dim())?;
        if seq.is_empty() {
            return Err(Error::Empty("feature sequence"));
        }
        let mut scratch = vec![0.0; self.n_components()];
        let total: f64 = seq.rows().map(|x| self.log_pdf_unchecked(x, &mut scratch)).sum();
        Ok(total / seq.len() as f64)
    }

    /// A 64-bit digest of the parameters, used to tag supervectors with the
    /// UBM they were derived from.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.n_components() as u64).to_le_bytes());
        h.update((self.dim as u64).to_le_bytes());
        for v in self.weights.iter().chain(&self.means).chain(&self.variances) {
            h.update(v.to_bits().to_le_bytes());
        }
        let digest = h.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        u64::from_be_bytes(head)
    }
}

/// EM settings for UBM training.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    /// Iteration cap for the final stage (at the requested order).
    pub max_iterations: usize,
    /// Stop once the per-frame log-likelihood gain drops below this (nats).
    pub ll_tolerance: f64,
    /// Variance floor as a fraction of the global per-dimension variance.
    pub variance_floor_ratio: f64,
    /// EM iterations run after each intermediate binary split.
    pub split_iterations: usize,
    /// Seeds the perturbation used when a starved component is respawned.
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 25,
            ll_tolerance: 1e-5,
            variance_floor_ratio: 1e-3,
            split_iterations: 5,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be ≥ 1".into()));
        }
        if !(self.ll_tolerance > 0.0) {
            return Err(Error::InvalidArgument("ll_tolerance must be positive".into()));
        }
        if !(self.variance_floor_ratio > 0.0 && self.variance_floor_ratio < 1.0) {
            return Err(Error::InvalidArgument("variance_floor_ratio must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-iteration log-likelihoods for one mixture size.
#[derive(Debug, Clone, PartialEq)]
pub struct EmStage {
    pub components: usize,
    /// Mean per-frame log-likelihood at each E-step, in order.
    pub log_likelihoods: Vec<f64>,
}

/// What happened during [`train_em_traced`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmTrace {
    /// A new stage starts after every split and every respawn, since those
    /// change the model outside of EM and may lower the likelihood.
    pub stages: Vec<EmStage>,
    pub respawns: usize,
}

/// Trains an `m`-component UBM by binary splitting followed by EM.
pub fn train_em(data: &FeatureSequence, m: usize, cfg: &EmConfig) -> Result<DiagonalGmm> {
    train_em_traced(data, m, cfg).map(|(gmm, _)| gmm)
}

/// [`train_em`] that also returns the likelihood trace.
pub fn train_em_traced(
    data: &FeatureSequence,
    m: usize,
    cfg: &EmConfig,
) -> Result<(DiagonalGmm, EmTrace)> {
    cfg.validate()?;
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one component".into()));
    }
    if data.len() < m {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} frames cannot support {m} components",
            data.len()
        )));
    }
    let mut trainer = EmTrainer::new(data, cfg);
    let mut state = trainer.global_model();
    let mut trace = EmTrace::default();

    while state.n_components() < m {
        state = split(&state, m);
        if state.n_components() < m {
            state = trainer.run_stage(state, cfg.split_iterations, None, &mut trace)?;
        }
    }
    state = trainer.run_stage(state, cfg.max_iterations, Some(cfg.ll_tolerance), &mut trace)?;
    Ok((state.into_model()?, trace))
}

/// Mutable parameter set used while training. Variances may briefly be
/// unfloored between the M-step and flooring, so this is not a [`DiagonalGmm`].
#[derive(Debug, Clone)]
struct Params {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl Params {
    fn n_components(&self) -> usize {
        self.weights.len()
    }

    fn into_model(self) -> Result<DiagonalGmm> {
        // Renormalize away the rounding drift accumulated by M-steps.
        let total: f64 = self.weights.iter().sum();
        let weights = self.weights.iter().map(|w| w / total).collect();
        DiagonalGmm::new(weights, self.means, self.variances, self.dim)
    }
}

/// Splits the heaviest components (all of them, if that does not overshoot
/// `target`) along their highest-variance axis by ±0.1σ.
fn split(p: &Params, target: usize) -> Params {
    let m = p.n_components();
    let d = p.dim;
    let n_split = (target - m).min(m);
    let mut order: Vec<usize> = (0..m).collect();
    // Stable sort keeps lowest index first among equal weights.
    order.sort_by(|&a, &b| p.weights[b].total_cmp(&p.weights[a]));
    let mut chosen = vec![false; m];
    for &i in &order[..n_split] {
        chosen[i] = true;
    }

    let mut out = Params {
        dim: d,
        weights: Vec::with_capacity(m + n_split),
        means: Vec::with_capacity((m + n_split) * d),
        variances: Vec::with_capacity((m + n_split) * d),
    };
    for i in 0..m {
        let mu = &p.means[i * d..(i + 1) * d];
        let var = &p.variances[i * d..(i + 1) * d];
        if !chosen[i] {
            out.weights.push(p.weights[i]);
            out.means.extend_from_slice(mu);
            out.variances.extend_from_slice(var);
            continue;
        }
        let axis = (0..d).fold(0, |best, k| if var[k] > var[best] { k } else { best });
        let delta = 0.1 * sqrt(var[axis]);
        for sign in [-1.0, 1.0] {
            out.weights.push(p.weights[i] / 2.0);
            out.means.extend_from_slice(mu);
            let last = out.means.len() - d + axis;
            out.means[last] += sign * delta;
            out.variances.extend_from_slice(var);
        }
    }
    out
}

struct EmTrainer<'a> {
    data: &'a FeatureSequence,
    floor: Vec<f64>,
    global_mean: Vec<f64>,
    global_var: Vec<f64>,
    rng: ChaCha8Rng,
}

/// Below this responsibility mass a component is considered starved.
const MIN_COMPONENT_MASS: f64 = 1e-10;

impl<'a> EmTrainer<'a> {
    fn new(data: &'a FeatureSequence, cfg: &EmConfig) -> Self {
        let d = data.dim();
        let n = data.len() as f64;
        let mut mean = vec![0.0; d];
        for x in data.rows() {
            for k in 0..d {
                mean[k] += x[k];
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);
        let mut var = vec![0.0; d];
        for x in data.rows() {
            for k in 0..d {
                let z = x[k] - mean[k];
                var[k] += z * z;
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let floor = var.iter().map(|v| (cfg.variance_floor_ratio * v).max(1e-10)).collect();
        Self { data, floor, global_mean: mean, global_var: var, rng: ChaCha8Rng::seed_from_u64(cfg.seed) }
    }

    fn global_model(&self) -> Params {
        Params {
            dim: self.data.dim(),
            weights: vec![1.0],
            means: self.global_mean.clone(),
            variances: self.global_var.iter().zip(&self.floor).map(|(v, f)| v.max(*f)).collect(),
        }
    }

    /// Runs up to `iterations` EM steps. With a tolerance, stops early once
    /// the per-frame likelihood gain falls below it.
    fn run_stage(
        &mut self,
        mut p: Params,
        iterations: usize,
        tolerance: Option<f64>,
        trace: &mut EmTrace,
    ) -> Result<Params> {
        let mut stage = EmStage { components: p.n_components(), log_likelihoods: Vec::new() };
        for _ in 0..iterations {
            let model = p.clone().into_model()?;
            let (ll, stats) = self.e_step(&model);
            let prev = stage.log_likelihoods.last().copied();
            stage.log_likelihoods.push(ll);
            let starved = self.m_step(&mut p, &stats);
            if !starved.is_empty() {
                self.respawn(&mut p, &starved);
                trace.respawns += starved.len();
                trace.stages.push(core::mem::replace(
                    &mut stage,
                    EmStage { components: p.n_components(), log_likelihoods: Vec::new() },
                ));
                continue;
            }
            if let (Some(tol), Some(prev)) = (tolerance, prev) {
                if ll - prev < tol {
                    break;
                }
            }
        }
        trace.stages.push(stage);
        Ok(p)
    }

    fn e_step(&self, model: &DiagonalGmm) -> (f64, Stats) {
        let m = model.n_components();
        let d = model.dim();
        let mut stats = Stats { n: vec![0.0; m], s1: vec![0.0; m * d], s2: vec![0.0; m * d] };
        let mut buf = vec![0.0; m];
        let mut total_ll = 0.0;
        for x in self.data.rows() {
            model.joint_log_densities(x, &mut buf);
            let max = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in buf.iter_mut() {
                let diff = *v - max;
                *v = if diff > LSE_NEGLIGIBLE { exp(diff) } else { 0.0 };
                sum += *v;
            }
            total_ll += max + log(sum);
            for (i, &e) in buf.iter().enumerate() {
                if e == 0.0 {
                    continue;
                }
                let g = e / sum;
                stats.n[i] += g;
                let s1 = &mut stats.s1[i * d..(i + 1) * d];
                let s2 = &mut stats.s2[i * d..(i + 1) * d];
                for k in 0..d {
                    let gx = g * x[k];
                    s1[k] += gx;
                    s2[k] += gx * x[k];
                }
            }
        }
        (total_ll / self.data.len() as f64, stats)
    }

    /// Re-estimates parameters in place; returns indices of starved components.
    fn m_step(&self, p: &mut Params, stats: &Stats) -> Vec<usize> {
        let d = p.dim;
        let n_total = self.data.len() as f64;
        let mut starved = Vec::new();
        for i in 0..p.n_components() {
            let n = stats.n[i];
            if n < MIN_COMPONENT_MASS {
                starved.push(i);
                p.weights[i] = 0.0;
                continue;
            }
            p.weights[i] = n / n_total;
            for k in 0..d {
                let mu = stats.s1[i * d + k] / n;
                let var = stats.s2[i * d + k] / n - mu * mu;
                p.means[i * d + k] = mu;
                p.variances[i * d + k] = var.max(self.floor[k]);
            }
        }
        starved
    }

    /// Replaces each starved component by half of the heaviest one, nudged by
    /// ±0.1σ per dimension with seeded signs.
    fn respawn(&mut self, p: &mut Params, starved: &[usize]) {
        let d = p.dim;
        for &k in starved {
            let heaviest = (0..p.n_components())
                .fold(0, |best, i| if p.weights[i] > p.weights[best] { i } else { best });
            log::warn!("EM: component {k} lost all responsibility; respawning from component {heaviest}");
            let w = p.weights[heaviest] / 2.0;
            p.weights[heaviest] = w;
            p.weights[k] = w;
            for j in 0..d {
                let delta = 0.1 * sqrt(p.variances[heaviest * d + j]);
                let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
                let mu = p.means[heaviest * d + j];
                p.means[k * d + j] = mu + sign * delta;
                p.means[heaviest * d + j] = mu - sign * delta;
                p.variances[k * d + j] = p.variances[heaviest * d + j];
            }
        }
    }
}

struct Stats {
    n: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

/// Concatenates several sequences (e.g. all background speakers) into one pool.
pub fn pool_frames<'a>(
    parts: impl IntoIterator<Item = &'a FeatureSequence>,
    source_id: impl Into<String>,
) -> Result<FeatureSequence> {
    let mut data = Vec::new();
    let mut dim = None;
    for part in parts {
        match dim {
            None => dim = Some(part.dim()),
            Some(d) => check_dim(d, part.dim())?,
        }
        data.extend_from_slice(part.as_slice());
    }
    let dim = dim.ok_or(Error::Empty("frame pool"))?;
    FeatureSequence::from_rows(data, dim, source_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::LN_2PI;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, Normal};

    fn unit() -> DiagonalGmm {
        DiagonalGmm::new(vec![1.0], vec![0.0], vec![1.0], 1).unwrap()
    }

    #[test]
    fn standard_normal_at_mode() {
        assert_abs_diff_eq!(unit().log_pdf(&[0.0]).unwrap(), -0.5 * LN_2PI, epsilon = 1e-15);
        assert_abs_diff_eq!(unit().log_pdf(&[0.0]).unwrap(), -0.918_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn duplicated_component_collapses() {
        let twin = DiagonalGmm::new(vec![0.5, 0.5], vec![1.5, 1.5], vec![2.0, 2.0], 1).unwrap();
        let single = DiagonalGmm::new(vec![1.0], vec![1.5], vec![2.0], 1).unwrap();
        for x in [-3.0, 0.0, 1.5, 7.0] {
            assert_abs_diff_eq!(twin.log_pdf(&[x]).unwrap(), single.log_pdf(&[x]).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn symmetric_posteriors() {
        let g = DiagonalGmm::new(vec![0.5, 0.5], vec![-1.0, 1.0], vec![1.0, 1.0], 1).unwrap();
        let p = g.posteriors(&[0.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_eq!(unit().posteriors(&[4.2]).unwrap(), vec![1.0]);
    }

    #[test]
    fn dimension_checks() {
        assert_eq!(
            unit().log_pdf(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        );
        assert!(unit().posteriors(&[]).is_err());
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(DiagonalGmm::new(vec![0.5, 0.4], vec![0.0, 0.0], vec![1.0, 1.0], 1).is_err());
        assert!(DiagonalGmm::new(vec![1.0], vec![0.0], vec![0.0], 1).is_err());
        assert!(DiagonalGmm::new(vec![1.0], vec![f64::NAN], vec![1.0], 1).is_err());
        assert!(DiagonalGmm::new(vec![1.0], vec![0.0, 1.0], vec![1.0], 1).is_err());
    }

    #[test]
    fn fingerprint_tracks_parameters() {
        let a = unit();
        let b = a.with_means(vec![1e-12]).unwrap();
        assert_eq!(a.fingerprint(), unit().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert!(a.shares_structure(&b));
    }

    #[test]
    fn single_component_em_is_sample_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(3.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;

        let seq = FeatureSequence::from_rows(xs, 1, "n34").unwrap();
        let g = train_em(&seq, 1, &EmConfig::default()).unwrap();
        assert_abs_diff_eq!(g.means()[0], mean, epsilon = 1e-10);
        assert_abs_diff_eq!(g.variances()[0], var, epsilon = 1e-9);
        assert!((g.means()[0] - 3.0).abs() < 0.05);
        assert!((g.variances()[0] - 4.0).abs() < 0.1);
    }

    #[test]
    fn em_needs_enough_frames() {
        let seq = FeatureSequence::from_rows(vec![0.0, 1.0], 1, "tiny").unwrap();
        assert!(train_em(&seq, 3, &EmConfig::default()).is_err());
        assert!(train_em(&seq, 0, &EmConfig::default()).is_err());
    }

    #[test]
    fn split_reaches_non_power_of_two_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..600)
            .map(|i| (i % 3) as f64 * 6.0 + rng.random::<f64>())
            .collect();
        let seq = FeatureSequence::from_rows(xs, 1, "tri").unwrap();
        let g = train_em(&seq, 3, &EmConfig::default()).unwrap();
        assert_eq!(g.n_components(), 3);
    }

    #[test]
    fn starved_component_is_respawned() {
        // Two far-apart points and three components: the middle one starves.
        let mut p = Params {
            dim: 1,
            weights: vec![0.4, 0.2, 0.4],
            means: vec![0.0, 1e6, 10.0],
            variances: vec![1.0, 1e-6, 1.0],
        };
        let seq = FeatureSequence::from_rows(vec![0.0, 0.1, 10.0, 10.1], 1, "s").unwrap();
        let mut trainer = EmTrainer::new(&seq, &EmConfig::default());
        let mut trace = EmTrace::default();
        p = trainer.run_stage(p, 3, None, &mut trace).unwrap();
        assert!(trace.respawns >= 1);
        let g = p.into_model().unwrap();
        assert!(g.means().iter().all(|m| m.is_finite()));
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    fn random_model(rng: &mut ChaCha8Rng, m: usize, d: usize) -> DiagonalGmm {
        let n: Normal<f64> = Normal::new(0.0, 1.0).unwrap();
        let raw: Vec<f64> = (0..m).map(|_| 0.2 + n.sample(rng).abs()).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / total).collect();
        let means = (0..m * d).map(|_| 2.0 * n.sample(rng)).collect();
        let variances = (0..m * d).map(|_| 0.3 + n.sample(rng).abs()).collect();
        DiagonalGmm::new(weights, means, variances, d).unwrap()
    }

    /// Σ_i w_i Π_k N(x_k; μ_ik, σ²_ik), summed in linear space.
    fn naive_terms(g: &DiagonalGmm, x: &[f64]) -> Vec<f64> {
        (0..g.n_components())
            .map(|i| {
                let mut p = g.weights()[i];
                for (k, &xk) in x.iter().enumerate() {
                    let (mu, var) = (g.mean(i)[k], g.variance(i)[k]);
                    p *= libm::exp(-(xk - mu) * (xk - mu) / (2.0 * var)) / libm::sqrt(2.0 * core::f64::consts::PI * var);
                }
                p
            })
            .collect()
    }

    #[test]
    fn log_pdf_matches_naive_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = Normal::new(0.0, 2.0).unwrap();
        for _ in 0..50 {
            let g = random_model(&mut rng, 3, 2);
            let x = [n.sample(&mut rng), n.sample(&mut rng)];
            let direct = libm::log(naive_terms(&g, &x).iter().sum::<f64>());
            assert_abs_diff_eq!(g.log_pdf(&x).unwrap(), direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn posteriors_match_naive_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = Normal::new(0.0, 2.0).unwrap();
        for _ in 0..50 {
            let g = random_model(&mut rng, 3, 2);
            let x = [n.sample(&mut rng), n.sample(&mut rng)];
            let terms = naive_terms(&g, &x);
            let total: f64 = terms.iter().sum();
            for (p, t) in g.posteriors(&x).unwrap().iter().zip(&terms) {
                assert_abs_diff_eq!(*p, t / total, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn em_likelihood_never_decreases_within_a_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = Normal::new(0.0, 1.0).unwrap();
        let data: Vec<f64> = (0..4000).map(|i| n.sample(&mut rng) + [0.0, 4.0, -3.0, 8.0][i % 4]).collect();
        let seq = FeatureSequence::from_rows(data, 2, "mono").unwrap();
        let (_, trace) = train_em_traced(&seq, 8, &EmConfig::default()).unwrap();
        assert_eq!(trace.stages.len(), 3);
        for stage in &trace.stages {
            for w in stage.log_likelihoods.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn trimodal_fit_recovers_modes() {
        // The split start sits on a flat ridge for this data; run EM to convergence.
        let cfg = EmConfig { max_iterations: 300, ll_tolerance: 1e-9, ..EmConfig::default() };
        let t = crate::synth::make_trimodal_1d(3000, 1).unwrap();
        let g = train_em(&t.as_sequence(), 3, &cfg).unwrap();
        for truth in t.means {
            let closest = g.means().iter().map(|m| (m - truth).abs()).fold(f64::INFINITY, f64::min);
            assert!(closest < 0.5, "mode {truth} missed by {closest}");
        }
        let held_out = crate::synth::make_trimodal_1d(3000, 2).unwrap().as_sequence();
        let two = train_em(&t.as_sequence(), 2, &cfg).unwrap();
        assert!(g.average_log_likelihood(&held_out).unwrap() > two.average_log_likelihood(&held_out).unwrap());
    }
}
