//! Attack bundling for L∞ robustness evaluation.
//!
//! Instead of reporting one error rate per attack and taking the maximum
//! across attacks, a bundle runs every attack on every clean example, keeps
//! the best adversarial candidate *per example*, and only then averages. The
//! resulting error rate is never below the worst single attack and can be far
//! above it.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: softmax regression and a one-hidden-layer MLP with input
//!   gradients, plus stochastic and ensemble wrappers.
//! - [`data`]: CSV ingestion and synthetic Gaussian blobs in the unit cube.
//! - [`attacks`]: FGSM, randomly restarted PGD and uniform noise under an L∞
//!   budget with clipping to `[0, 1]`.
//! - [`bundler`]: candidate scoring, preference criteria, budget-aware
//!   scheduling and the bundle itself.
//! - [`report`]: MAT/WAT/bundled tables, success-fail curves and
//!   error-vs-ε curves.
//! - [`experiment`]: the config file format and the end-to-end driver used by
//!   the `attack-bundle` binary.
//!
//! ```
//! use attack_bundle::prelude::*;
//!
//! let data = synth_dataset(60, 2, 2, 7).unwrap();
//! let cfg = TrainConfig { learning_rate: 0.5, epochs: 20, batch_size: 16, seed: 1 };
//! let model = train(&data, Architecture::SoftmaxLinear, &cfg).unwrap();
//! let attacks = [
//!     AttackConfig::fgsm("fgsm", 0.1),
//!     AttackConfig::pgd("pgd", 0.1, 0.05, 10, 2, true),
//! ];
//! let criterion = Criterion::Misclassify;
//! let result = bundle(&model, &data, &attacks, &criterion, &BudgetPolicy::exhaustive(), 0).unwrap();
//! for rate in &result.per_attack_error_rates {
//!     assert!(result.bundled_error_rate >= *rate);
//! }
//! ```

pub mod attacks;
pub mod bundler;
pub mod data;
pub mod error;
pub mod experiment;
pub mod model;
pub mod report;
pub mod seed;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::attacks::{
        fgsm, pgd, project, uniform_noise, Attack, AttackConfig, AttackVariant, Candidate,
    };
    pub use crate::bundler::{
        bundle, bundle_with, prefer, schedule, score, score_stochastic, select_by_ensemble,
        wat_gap_construction, BudgetPolicy, BundleResult, CandidateScore, Choice, Criterion, Goal,
        OutcomeMatrix, Scoring,
    };
    pub use crate::data::{synth_blobs, synth_dataset, BlobSpec};
    pub use crate::model::{
        ensemble_fooled_count, predict_stochastic, train, Architecture, Dataset, Ensemble, Example,
        ModelParams, Prediction, StochasticSpec, TrainConfig,
    };
    pub use crate::report::{
        linspace, make_tables, norm_curve, success_fail_curve, wat_underestimation_report, Tables,
    };
    pub use crate::{Error, Result};
}
