//! Screening of large pools of metric-space features for binary
//! classification.
//!
//! The central quantity is a symmetrized Kolmogorov–Smirnov-type divergence
//! computed on a metric space: for each feature, distances between samples
//! feed class-conditional empirical metric distribution functions, whose
//! largest gap — averaged over ball centers from each class — yields a score
//! `ω̂ ∈ [0, 2]` that is zero exactly when the feature is independent of the
//! label. Features are ranked by `ω̂` and selected either by a fixed model
//! size or by a data-splitting threshold that controls the false discovery
//! rate. A simulation harness reproduces the reference study designs, and a
//! k-NN classifier consumes the selected features downstream.
//!
//! Supported feature kinds: univariate empirical distributions under the
//! Wasserstein distance, SPD matrices under the Frobenius, Cholesky, or
//! Log-Cholesky metric, and externally precomputed distance matrices.
//!
//! ```
//! use mkfilter::{
//!     omega_hat, screen_all, EmpiricalDistribution, FeatureColumn, Label, LabeledDataset,
//! };
//!
//! // Four samples, one informative feature and one noise feature.
//! let informative = FeatureColumn::distributions(vec![
//!     EmpiricalDistribution::new(vec![0.0, 0.1])?,
//!     EmpiricalDistribution::new(vec![0.2, 0.3])?,
//!     EmpiricalDistribution::new(vec![5.0, 5.1])?,
//!     EmpiricalDistribution::new(vec![5.2, 5.3])?,
//! ])?;
//! let noise = FeatureColumn::distributions(vec![
//!     EmpiricalDistribution::new(vec![1.0, 2.0])?,
//!     EmpiricalDistribution::new(vec![1.1, 1.9])?,
//!     EmpiricalDistribution::new(vec![0.9, 2.1])?,
//!     EmpiricalDistribution::new(vec![1.0, 2.2])?,
//! ])?;
//! let labels = vec![Label::Pos, Label::Pos, Label::Neg, Label::Neg];
//! let ds = LabeledDataset::new(vec![informative, noise], labels)?;
//!
//! let result = screen_all(&ds)?;
//! assert_eq!(result.ranking[0], 0); // the separated feature wins
//! assert_eq!(result.omega_hat[0], 2.0);
//! # Ok::<(), mkfilter::Error>(())
//! ```

pub mod dataset;
pub mod emdf;
pub mod error;
pub mod knn;
pub mod metrics;
pub mod mks;
pub mod pool;
pub mod rng;
pub mod select;
pub mod simgen;

pub use dataset::{
    class_counts, FeatureColumn, Label, LabeledDataset, MetricObject, ObjectColumn, ObjectRef,
};
pub use emdf::{build_profiles, emdf_value, ClassFilter, DistanceProfile};
pub use error::{Error, Result};
pub use knn::{
    evaluate_split, knn_predict, knn_predict_within, product_distance, ClassificationReport,
    EvaluationSummary, KnnConfig, MetricStats, Strategy,
};
pub use metrics::{
    chol_lower, dist_cholesky, dist_frobenius, dist_log_cholesky, object_distance,
    pairwise_distances, wasserstein_empirical, CholeskyFactor, DistanceMatrix,
    EmpiricalDistribution, MetricKind, SpdMatrix,
};
pub use mks::{mks_hat_directed, omega_hat, omega_hat_naive, screen_all, ScreeningResult};
pub use pool::{
    binomial, build_submatrix_pool, load_dataset, sample_covariance, save_dataset, ColumnSpec,
    CovariancePool, DatasetManifest, ObjectKind,
};
pub use select::{
    adaptive_threshold, default_model_size, false_discovery_proportion, fdr_select,
    fdr_select_detailed, split_dataset, top_s, w_statistics, FdrSelection, SplitStatistics,
};
pub use simgen::{
    build_distributional_dataset, build_spd_dataset, cov_ar, cov_hc, mms, run_simulation,
    sample_gev, sample_wishart, ReplicateRecord, Scenario, SimulationConfig, SimulationReport,
    WishartSampler,
};

// The guide under book/ doubles as a doc-test suite: every Rust snippet in
// the chapters is compiled and run by `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/metric-spaces.md")]
    mod metric_spaces {}
    #[doc = include_str!("../../../book/src/screening.md")]
    mod screening {}
    #[doc = include_str!("../../../book/src/fdr-control.md")]
    mod fdr_control {}
    #[doc = include_str!("../../../book/src/simulations.md")]
    mod simulations {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/data-files.md")]
    mod data_files {}
}
