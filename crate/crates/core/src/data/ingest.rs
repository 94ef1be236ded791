use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::data::TabularDataset;
use crate::error::{Error, Result};

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl From<&str> for LabelColumn {
    /// A bare integer selects by position, anything else by header name.
    fn from(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<TabularDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, label)
}

/// Parses a headed, comma-separated table. Labels are re-encoded as dense
/// class indices in order of first appearance; every other column must be
/// numeric and finite.
pub fn read_csv<R: Read>(reader: R, label: &LabelColumn) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = match label {
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => return Err(Error::MissingLabelColumn(i.to_string())),
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
    };
    let n_features = headers.len() - 1;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut encoding: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: record.len(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (column, field) in record.iter().enumerate() {
            if column == label_idx {
                let next = encoding.len();
                let code = *encoding.entry(field.to_string()).or_insert_with(|| {
                    class_names.push(field.to_string());
                    next
                });
                labels.push(code);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column,
                message: format!("`{field}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite { row, column });
            }
            features.push(value);
        }
    }
    let class_count = class_names.len();
    if class_count < 2 {
        return Err(Error::SingleClass(class_count));
    }
    Ok(TabularDataset::new(features, n_features, labels, class_count)?
        .with_feature_names(feature_names)?
        .with_class_names(class_names))
}
