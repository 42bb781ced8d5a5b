//! JSON model files for UBMs and SVMs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spkver_core::gmm::{DiagonalGmm, EmConfig};
use spkver_core::svm::{SampleRecord, SvmModel};

use super::{malformed, read_file, write_file, Result};

const GMM_VERSION: u32 = 1;
const SVM_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EmConfigDoc {
    max_iterations: usize,
    ll_tolerance: f64,
    variance_floor_ratio: f64,
    split_iterations: usize,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GmmDoc {
    version: u32,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "D")]
    d: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    em_config: Option<EmConfigDoc>,
}

pub fn gmm_to_json(gmm: &DiagonalGmm, em: Option<&EmConfig>) -> Result<String> {
    let rows = |flat: &[f64]| flat.chunks(gmm.dim()).map(<[f64]>::to_vec).collect();
    let doc = GmmDoc {
        version: GMM_VERSION,
        m: gmm.n_components(),
        d: gmm.dim(),
        weights: gmm.weights().to_vec(),
        means: rows(gmm.means()),
        variances: rows(gmm.variances()),
        em_config: em.map(|c| EmConfigDoc {
            max_iterations: c.max_iterations,
            ll_tolerance: c.ll_tolerance,
            variance_floor_ratio: c.variance_floor_ratio,
            split_iterations: c.split_iterations,
            seed: c.seed,
        }),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Parses and validates a model; returns the EM settings when recorded.
pub fn gmm_from_json(text: &str) -> Result<(DiagonalGmm, Option<EmConfig>)> {
    let doc: GmmDoc = serde_json::from_str(text)?;
    if doc.version != GMM_VERSION {
        return Err(malformed("GMM model", format!("unknown version {}", doc.version)));
    }
    let shape_ok = |rows: &[Vec<f64>]| rows.len() == doc.m && rows.iter().all(|r| r.len() == doc.d);
    if doc.weights.len() != doc.m || !shape_ok(&doc.means) || !shape_ok(&doc.variances) {
        return Err(malformed("GMM model", format!("arrays do not match M={} D={}", doc.m, doc.d)));
    }
    let gmm = DiagonalGmm::new(doc.weights, doc.means.concat(), doc.variances.concat(), doc.d)?;
    let em = doc.em_config.map(|c| EmConfig {
        max_iterations: c.max_iterations,
        ll_tolerance: c.ll_tolerance,
        variance_floor_ratio: c.variance_floor_ratio,
        split_iterations: c.split_iterations,
        seed: c.seed,
    });
    if let Some(c) = &em {
        c.validate()?;
    }
    Ok((gmm, em))
}

pub fn write_gmm_file(path: &Path, gmm: &DiagonalGmm, em: Option<&EmConfig>) -> Result<()> {
    write_file(path, gmm_to_json(gmm, em)?.as_bytes())
}

pub fn read_gmm_file(path: &Path) -> Result<(DiagonalGmm, Option<EmConfig>)> {
    let bytes = read_file(path)?;
    gmm_from_json(std::str::from_utf8(&bytes).map_err(|_| malformed("GMM model", "not UTF-8"))?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleDoc {
    speaker_id: String,
    partition_index: u32,
    label: f64,
    alpha: f64,
    margin: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvmDoc {
    version: u32,
    target_speaker: String,
    #[serde(rename = "C")]
    c: f64,
    normalization: String,
    ubm_fingerprint: String,
    w: Vec<f64>,
    b: f64,
    /// Every training sample; those with `alpha` above the SV threshold are the support vectors.
    samples: Vec<SampleDoc>,
}

pub fn svm_to_json(model: &SvmModel) -> Result<String> {
    let doc = SvmDoc {
        version: SVM_VERSION,
        target_speaker: model.target_speaker.clone(),
        c: model.c,
        normalization: model.normalization.as_str().into(),
        ubm_fingerprint: format!("{:016x}", model.ubm_fingerprint),
        w: model.weights.clone(),
        b: model.bias,
        samples: model
            .samples
            .iter()
            .map(|s| SampleDoc {
                speaker_id: s.speaker_id.clone(),
                partition_index: s.partition_index,
                label: s.label,
                alpha: s.alpha,
                margin: s.margin,
            })
            .collect(),
    };
    Ok(serde_json::to_string(&doc)? + "\n")
}

pub fn svm_from_json(text: &str) -> Result<SvmModel> {
    let doc: SvmDoc = serde_json::from_str(text)?;
    if doc.version != SVM_VERSION {
        return Err(malformed("SVM model", format!("unknown version {}", doc.version)));
    }
    if !(doc.c > 0.0) || !doc.b.is_finite() || doc.w.iter().any(|v| !v.is_finite()) {
        return Err(malformed("SVM model", "non-finite or invalid parameters"));
    }
    if doc.samples.iter().any(|s| s.label.abs() != 1.0 || !(s.alpha >= 0.0 && s.alpha <= doc.c * (1.0 + 1e-9))) {
        return Err(malformed("SVM model", "sample labels must be ±1 and 0 ≤ α ≤ C"));
    }
    Ok(SvmModel {
        target_speaker: doc.target_speaker,
        weights: doc.w,
        bias: doc.b,
        c: doc.c,
        ubm_fingerprint: u64::from_str_radix(&doc.ubm_fingerprint, 16)
            .map_err(|_| malformed("SVM model", "bad fingerprint"))?,
        normalization: doc.normalization.parse()?,
        samples: doc
            .samples
            .into_iter()
            .map(|s| SampleRecord {
                speaker_id: s.speaker_id,
                partition_index: s.partition_index,
                label: s.label,
                alpha: s.alpha,
                margin: s.margin,
            })
            .collect(),
    })
}

pub fn write_svm_file(path: &Path, model: &SvmModel) -> Result<()> {
    write_file(path, svm_to_json(model)?.as_bytes())
}

pub fn read_svm_file(path: &Path) -> Result<SvmModel> {
    let bytes = read_file(path)?;
    svm_from_json(std::str::from_utf8(&bytes).map_err(|_| malformed("SVM model", "not UTF-8"))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spkver_core::adaptation::Normalization;

    fn gmm() -> DiagonalGmm {
        DiagonalGmm::new(vec![0.1, 0.9], vec![0.1, 1.0 / 3.0, -2.0, 1e-300], vec![1.0, 0.7, 2.5, 1e-5], 2).unwrap()
    }

    #[test]
    fn gmm_round_trip_is_exact() {
        let em = EmConfig::default();
        let text = gmm_to_json(&gmm(), Some(&em)).unwrap();
        let (back, em_back) = gmm_from_json(&text).unwrap();
        assert_eq!(back, gmm());
        assert_eq!(em_back, Some(em));
        assert_eq!(back.fingerprint(), gmm().fingerprint());
        assert_eq!(gmm_to_json(&back, em_back.as_ref()).unwrap(), text);
    }

    #[test]
    fn gmm_validation_on_load() {
        let text = gmm_to_json(&gmm(), None).unwrap();
        assert!(gmm_from_json(&text.replace("0.9", "0.8")).is_err());
        assert!(gmm_from_json(&text.replace("\"version\": 1", "\"version\": 2")).is_err());
        assert!(gmm_from_json(&text.replace("\"D\": 2", "\"D\": 3")).is_err());
        assert!(gmm_from_json(&text.replace("2.5", "-2.5")).is_err());
        assert!(gmm_from_json("{").is_err());
    }

    #[test]
    fn svm_round_trip_is_exact() {
        let model = SvmModel {
            target_speaker: "spk001".into(),
            weights: vec![0.1, -7.25, 1.0 / 7.0],
            bias: -0.3,
            c: 1.0,
            ubm_fingerprint: u64::MAX - 5,
            normalization: Normalization::KlNormalized,
            samples: vec![
                SampleRecord { speaker_id: "spk001".into(), partition_index: 0, label: 1.0, alpha: 1.0, margin: -0.5 },
                SampleRecord { speaker_id: "spk002".into(), partition_index: 3, label: -1.0, alpha: 0.0, margin: 2.0 },
            ],
        };
        let text = svm_to_json(&model).unwrap();
        assert_eq!(svm_from_json(&text).unwrap(), model);
        assert!(svm_from_json(&text.replace("\"alpha\":1.0", "\"alpha\":2.0")).is_err());
    }
}
