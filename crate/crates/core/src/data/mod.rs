//! Dataset ingestion, synthesis, normalization, splitting and label corruption.

mod corrupt;
mod dataset;
mod ingest;
mod normalize;
pub mod openml;
mod split;
mod synthetic;

pub use corrupt::{flip_labels, CorruptionRecord};
pub use dataset::TabularDataset;
pub use ingest::{load_csv, read_csv, LabelColumn};
pub use normalize::{normalize, Normalizer};
pub use openml::{fetch_openml, OpenMlFetcher};
pub use split::{split, DataSplit, SplitSpec};
pub use synthetic::{generate_synthetic, SyntheticConfig};
