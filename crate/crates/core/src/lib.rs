//! Incremental learning with ensembles of GA-tuned one-vs-one SVMs.
//!
//! Each data increment yields new multi-class units whose pairwise SVMs have
//! their kernel and cost picked by a genetic search, followed by a second
//! search over per-decision voting weights. Earlier units are never retrained,
//! so classes seen only in old increments keep their decision functions.
//! Learn++ and Learn++.MT with SVM weak learners are included for comparison.
//!
//! ```
//! use ilearn::{KernelSpec, SmoParams, train_smo};
//!
//! let x = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
//! let y = [-1.0, 1.0];
//! let m = train_smo(&x, &y, KernelSpec::Linear, 10.0, &SmoParams::default(), (0, 1)).unwrap();
//! assert_eq!(m.predict(&[2.0, 0.0]).unwrap(), 1);
//! ```

// `!(a < b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datasets;
pub mod error;
pub mod ga;
pub mod harness;
pub mod iluga;
pub mod kernels;
pub mod learnpp;
pub mod multiclass;
pub mod svm;

pub use datasets::{ClassCounts, ClassId, Dataset, IncrementSpec, Increments, Sample, Scaler, ScalerKind, TriSplit};
pub use error::{Error, Result};
pub use ga::{run_ga, GaConfig, GaOutcome, Gene, GeneSpec};
pub use harness::{ExperimentConfig, Method, Protocol, ReportFormat, RunReport};
pub use iluga::{classify, learn_increment, IlugaConfig};
pub use kernels::{gram_matrix, kernel_eval, KernelSpec};
pub use learnpp::{predict_learnpp, predict_learnpp_mt, train_increment_learnpp, LearnppConfig, LearnppState};
pub use multiclass::{vote, Ensemble, ModelFile, ModelPayload, MulticlassUnit, WeightedBinaryClassifier};
pub use svm::{train_smo, BinarySvmModel, SmoParams};

/// Derives an independent seed for sub-stream `stream` of `base` (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
