//! Comparison valuators.
//!
//! Closed-form KNN Shapley, Monte-Carlo semivalues (Data Shapley and Beta
//! Shapley) with Gelman–Rubin stopping, and average marginal effects
//! estimated by cross-validated LASSO. The sampling-based methods evaluate a
//! [`Utility`]: validation accuracy of a decision tree fit on a subset.

mod ame;
mod knn;
mod lasso;
mod semivalue;
mod utility;

pub use ame::{ame_design, ame_values, AmeDesign, AmeResult, SubsetDesign};
pub use knn::{default_k, knn_shapley};
pub use lasso::{lambda_grid, lambda_max, lasso_cv, lasso_fit, lasso_objective, Design, LassoFit, LassoPath};
pub use semivalue::{
    gelman_rubin, mc_marginal_chains, sample_marginal, semivalue_aggregate, semivalue_values, ChainSet, McConfig,
    MarginalSample, SemivalueWeights,
};
pub use utility::{FnUtility, TreeUtility, Utility};
