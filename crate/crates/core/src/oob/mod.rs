//! Out-of-bag data values.
//!
//! For a bagging ensemble `{(w_b, f_b)}` the value of training point `i` is
//! the average score `T(y_i, f_b(x_i))` over exactly those learners whose
//! bootstrap sample left `i` out (`w_bi = 0`). The mean of these values is
//! the classical out-of-bag estimate of generalization performance.
//!
//! Besides the values themselves this module computes the per-bootstrap
//! normalized out-of-bag scores `q_b` and their spread `V_B`, the
//! infinitesimal-jackknife influence of the out-of-bag estimate on each
//! point, and a checker for the order-consistency guarantee linking the two.

mod consistency;
mod influence;
mod score;
mod stream;
mod values;

pub use consistency::{order_consistency_report, ConsistencyOptions, ConsistencyReport};
pub use influence::{infinitesimal_jackknife, pairwise_decomposition, InfluenceVector, PairwiseTerms};
pub use score::{score_matrix, ScoreFunction, ScoreMatrix};
pub use stream::{fit_and_score, OobRun};
pub use values::{data_oob_values, oob_estimate, oob_scores, OobScores, ValueVector};
