//! Speaker-verification primitives for GMM-UBM and GMM-SVM systems.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs: file formats, CLI wiring and parallel execution
//! live in the `spkver` companion crate.
//!
//! Module map:
//!
//! * [`audio`]: speech/silence masking on normalized PCM.
//! * [`features`]: framing and 19-dimensional MFCC extraction.
//! * [`gmm`]: diagonal-covariance mixtures and EM training of the UBM.
//! * [`adaptation`]: mean-only MAP adaptation and supervector assembly.
//! * [`partition`]: training-utterance partitioning and one-vs-rest sets.
//! * [`svm`]: soft-margin linear SVM (SMO), support-vector census.
//! * [`eval`]: LLR scoring, trials, EER and DET curves.
//! * [`diagnostics`]: between-class distance, acoustic-zone split, MAP mismatch.
//! * [`synth`]: seeded synthetic corpora.
#![no_std]

extern crate alloc;

pub mod adaptation;
pub mod audio;
pub mod diagnostics;
mod error;
pub mod eval;
pub mod features;
pub mod gmm;
pub mod math;
pub mod partition;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
