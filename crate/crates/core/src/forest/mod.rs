//! CART classification trees and a bagging ensemble that keeps its bootstrap
//! multiplicity vectors.

mod bootstrap;
mod ensemble;
mod tree;

pub use bootstrap::{draw_bootstrap_weights, BootstrapWeights};
pub use ensemble::{fit_ensemble, fit_ensemble_with_weights, predict_ensemble, BaggingEnsemble};
pub use tree::{fit_tree, predict_tree, ColumnMatrix, DecisionTree, Node, TreeConfig};

pub(crate) use bootstrap::draw_row;
pub(crate) use ensemble::tree_config;
