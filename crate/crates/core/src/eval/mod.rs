//! Experiment harness.
//!
//! Mislabeled-data detection (precision-recall sweeps and two-cluster F1),
//! point-removal curves with logistic-regression refits, principal-component
//! projections for plotting, and wall-clock benchmarks.

mod bench;
mod detection;
mod logistic;
mod pca;
mod removal;

pub use bench::{bench_timing, loglog_slope, BenchMethod, BenchRecord, BenchSpec};
pub use detection::{f1_detection, precision_recall_curve, two_means_1d, DetectionResult, PrCurve, PrPoint, TwoMeans};
pub use logistic::{logistic_fit, LogisticFit, LogisticModel};
pub use pca::{pca2_projection, Pca2};
pub use removal::{point_removal_curve, random_removal_curve, removal_curve_from_order, removal_grid, RemovalCurve};
