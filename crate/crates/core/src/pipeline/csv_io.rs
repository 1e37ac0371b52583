use std::collections::HashSet;
use std::path::Path;

use log::{info, warn};

use crate::error::{ClanError, Result};
use crate::numerics::Matrix;
use crate::pipeline::FlowDataset;

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub label_column: String,
    /// Label value of benign rows; mapped to class 0.
    pub benign_label: String,
    /// Columns excluded from the feature set (identifiers, timestamps).
    pub drop_columns: Vec<String>,
}

impl LoadOptions {
    pub fn new(label_column: impl Into<String>, benign_label: impl Into<String>) -> Self {
        LoadOptions {
            label_column: label_column.into(),
            benign_label: benign_label.into(),
            drop_columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub rejected: Vec<RejectedRow>,
    /// Columns skipped because no row holds a number in them.
    pub non_numeric_columns: Vec<String>,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.rejected.len()
    }
}

/// Reads a comma-separated flow table with a header row.
///
/// Benign rows get label 0; other label values are numbered in order of first
/// appearance. Rows with a missing, non-numeric or non-finite feature are
/// rejected and listed in the report. Columns that contain no number at all
/// are treated as identifiers and skipped.
pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<(FlowDataset, LoadReport)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_col = headers
        .iter()
        .position(|h| *h == options.label_column.trim())
        .ok_or_else(|| ClanError::MissingLabelColumn {
            path: path.to_path_buf(),
            column: options.label_column.clone(),
        })?;
    let dropped: HashSet<&str> = options.drop_columns.iter().map(|s| s.trim()).collect();
    let candidate_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != label_col && !dropped.contains(headers[j].as_str()))
        .collect();

    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec?);
    }
    if records.is_empty() {
        return Err(ClanError::EmptyFile { path: path.to_path_buf() });
    }

    let parse = |s: &str| s.trim().parse::<f64>().ok();
    let feature_cols: Vec<usize> = candidate_cols
        .iter()
        .copied()
        .filter(|&j| records.iter().any(|r| r.get(j).and_then(parse).is_some()))
        .collect();
    let mut report = LoadReport {
        non_numeric_columns: candidate_cols
            .iter()
            .filter(|j| !feature_cols.contains(j))
            .map(|&j| headers[j].clone())
            .collect(),
        ..Default::default()
    };
    if !report.non_numeric_columns.is_empty() {
        info!("skipping non-numeric columns: {:?}", report.non_numeric_columns);
    }

    let benign = options.benign_label.trim();
    let mut class_names: Vec<String> = vec![benign.to_string()];
    let mut saw_benign = false;
    let mut data = Vec::with_capacity(records.len() * feature_cols.len());
    let mut labels = Vec::with_capacity(records.len());

    'rows: for (i, rec) in records.iter().enumerate() {
        let line = rec.position().map_or(i as u64 + 2, |p| p.line());
        let Some(label) = rec.get(label_col).map(str::trim) else {
            report.rejected.push(RejectedRow { line, reason: "missing label".into() });
            continue;
        };
        let start = data.len();
        for &j in &feature_cols {
            let cell = rec.get(j).unwrap_or("");
            match parse(cell) {
                Some(v) if v.is_finite() && (v as f32).is_finite() => data.push(v as f32),
                _ => {
                    data.truncate(start);
                    report.rejected.push(RejectedRow {
                        line,
                        reason: format!("column `{}` holds `{}`", headers[j], cell.trim()),
                    });
                    continue 'rows;
                }
            }
        }
        let class = if label == benign {
            saw_benign = true;
            0
        } else {
            match class_names.iter().position(|c| c == label) {
                Some(c) => c,
                None => {
                    class_names.push(label.to_string());
                    class_names.len() - 1
                }
            }
        };
        labels.push(class);
    }

    if !report.rejected.is_empty() {
        warn!("{}: rejected {} rows", path.display(), report.rejected.len());
        for r in report.rejected.iter().take(10) {
            warn!("  line {}: {}", r.line, r.reason);
        }
    }
    if labels.is_empty() {
        return Err(ClanError::NoUsableRows { path: path.to_path_buf(), dropped: report.dropped() });
    }
    if !saw_benign {
        return Err(ClanError::BenignLabelMissing { value: benign.to_string() });
    }

    let features = Matrix::from_vec(labels.len(), feature_cols.len(), data)?;
    let feature_names = feature_cols.iter().map(|&j| headers[j].clone()).collect();
    let ds = FlowDataset::new(features, labels, class_names, feature_names)?;
    Ok((ds, report))
}

/// Writes features and a trailing `label_column` holding class names.
pub fn write_csv(dataset: &FlowDataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push(label_column);
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for (i, feats) in dataset.features.row_iter().enumerate() {
        row.clear();
        // `{}` on f32 prints the shortest string that parses back to the same value
        row.extend(feats.iter().map(|v| v.to_string()));
        row.push(dataset.class_names[dataset.labels[i]].clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), content).unwrap();
        f
    }

    fn opts() -> LoadOptions {
        LoadOptions::new("label", "benign")
    }

    #[test]
    fn small_file() {
        let f = write("a,b,label\n1,2,dos\n3,4,benign\n5,6,dos\n");
        let (ds, report) = load_csv(f.path(), &opts()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.labels, vec![1, 0, 1]);
        assert_eq!(ds.class_names, vec!["benign", "dos"]);
        assert_eq!(report.dropped(), 0);
    }

    #[test]
    fn nan_row_dropped() {
        let f = write("a,b,label\n1,2,benign\nNaN,4,benign\n5,6,dos\n");
        let (ds, report) = load_csv(f.path(), &opts()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(report.dropped(), 1);
        assert_eq!(report.rejected[0].line, 3);
    }

    #[test]
    fn missing_benign_value_named_in_error() {
        let f = write("a,label\n1,dos\n2,ddos\n");
        match load_csv(f.path(), &LoadOptions::new("label", "BENIGN")) {
            Err(ClanError::BenignLabelMissing { value }) => assert_eq!(value, "BENIGN"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_errors() {
        let f = write("a,b\n1,2\n");
        assert!(matches!(load_csv(f.path(), &opts()), Err(ClanError::MissingLabelColumn { .. })));
        let f = write("a,label\n");
        assert!(matches!(load_csv(f.path(), &opts()), Err(ClanError::EmptyFile { .. })));
        let f = write("a,b,label\n1,x,benign\n,2,benign\n");
        assert!(matches!(load_csv(f.path(), &opts()), Err(ClanError::NoUsableRows { dropped: 2, .. })));
    }

    #[test]
    fn identifier_columns_skipped() {
        let f = write(" src_ip ,bytes, label\n10.0.0.1,5,benign\n10.0.0.2,7,dos\n");
        let (ds, report) = load_csv(f.path(), &opts()).unwrap();
        assert_eq!(ds.feature_names, vec!["bytes"]);
        assert_eq!(report.non_numeric_columns, vec!["src_ip"]);
    }

    #[test]
    fn write_then_load_preserves_values() {
        let f = write("a,b,label\n0.1,-2.5e-7,benign\n3,4,dos\n");
        let (ds, _) = load_csv(f.path(), &opts()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path(), "label").unwrap();
        let (back, _) = load_csv(out.path(), &opts()).unwrap();
        assert_eq!(back, ds);
    }
}
