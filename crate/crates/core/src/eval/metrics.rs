use std::fmt;
use std::io::Write;
use std::path::Path;

use log::warn;

use crate::error::{ClanError, Result};
use crate::pipeline::{normalize_class_name, BENIGN};

/// Area under the ROC curve via the Mann-Whitney statistic with midranks.
///
/// `labels[i]` is 1 for the positive (malicious) class and 0 for benign;
/// higher scores mean more malicious. Equals
/// `P(s⁺ > s⁻) + ½·P(s⁺ = s⁻)`.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(ClanError::dim(
            "auroc",
            format!("{} scores, {} labels", scores.len(), labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(ClanError::Range(format!("auroc label {bad} is not 0 or 1")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(ClanError::Range("auroc scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ClanError::Degenerate {
            op: "auroc",
            detail: format!("needs both classes ({n_pos} positive, {n_neg} negative)"),
        });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // rank sum of positives with midranks; ranks are 1-based
    let mut rank_sum = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        let pos_in_tie = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += midrank * pos_in_tie as f64;
        i = j;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Unweighted mean of per-class F1 over `n_classes` classes. A class absent
/// from both predictions and labels contributes 0.
pub fn macro_f1(predictions: &[usize], labels: &[usize], n_classes: usize) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(ClanError::dim(
            "macro_f1",
            format!("{} predictions, {} labels", predictions.len(), labels.len()),
        ));
    }
    if n_classes == 0 {
        return Err(ClanError::Config("macro_f1 over zero classes".into()));
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        if p >= n_classes || y >= n_classes {
            return Err(ClanError::Range(format!("class index outside 0..{n_classes}")));
        }
        if p == y {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[y] += 1;
        }
    }
    let sum: f64 = (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(sum / n_classes as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAuroc {
    pub class_name: String,
    pub auroc: f64,
    pub n_benign: usize,
    pub n_class: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    /// One row per malicious class present in the test set.
    pub rows: Vec<ClassAuroc>,
    /// Unweighted mean of `rows`.
    pub mean_auroc: f64,
    pub macro_f1: Option<f64>,
    /// Free-form run metadata (seeds, configs, timings), in insertion order.
    pub metadata: Vec<(String, String)>,
}

impl EvalReport {
    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    /// Reorders rows to follow `reference` (lists of accepted aliases per
    /// row, first alias used as the display name). Unmatched rows follow in
    /// their original order.
    pub fn ordered_by(mut self, reference: &[&[&str]]) -> Self {
        let mut ordered = Vec::with_capacity(self.rows.len());
        for aliases in reference {
            let keys: Vec<String> = aliases.iter().map(|a| normalize_class_name(a)).collect();
            if let Some(pos) = self
                .rows
                .iter()
                .position(|r| keys.contains(&normalize_class_name(&r.class_name)))
            {
                let mut row = self.rows.remove(pos);
                row.class_name = aliases[0].to_string();
                ordered.push(row);
            }
        }
        ordered.append(&mut self.rows);
        self.rows = ordered;
        self
    }

    /// Columns: `class,auroc,n_benign,n_class`; the last row is `Mean`
    /// (with empty counts), followed by `macro_f1` when present.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn write_csv_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "class,auroc,n_benign,n_class")?;
        for r in &self.rows {
            writeln!(w, "{},{:.6},{},{}", csv_field(&r.class_name), r.auroc, r.n_benign, r.n_class)?;
        }
        writeln!(w, "Mean,{:.6},,", self.mean_auroc)?;
        if let Some(f1) = self.macro_f1 {
            writeln!(w, "macro_f1,{f1:.6},,")?;
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.class_name.len()).max().unwrap_or(0).max(5);
        writeln!(f, "{:<width$}  {:>8}  {:>8}  {:>8}", "class", "AUROC", "benign", "attack")?;
        writeln!(f, "{}", "-".repeat(width + 32))?;
        for r in &self.rows {
            writeln!(f, "{:<width$}  {:>8.6}  {:>8}  {:>8}", r.class_name, r.auroc, r.n_benign, r.n_class)?;
        }
        writeln!(f, "{}", "-".repeat(width + 32))?;
        write!(f, "{:<width$}  {:>8.6}", "Mean", self.mean_auroc)?;
        if let Some(f1) = self.macro_f1 {
            write!(f, "\n{:<width$}  {:>8.6}", "macro-F1", f1)?;
        }
        for (k, v) in &self.metadata {
            write!(f, "\n# {k} = {v}")?;
        }
        Ok(())
    }
}

/// One AUROC per malicious class: that class's test rows against every benign
/// test row. Classes without test rows are skipped with a warning.
pub fn per_class_auroc(labels: &[usize], class_names: &[String], scores: &[f64]) -> Result<EvalReport> {
    if labels.len() != scores.len() {
        return Err(ClanError::dim(
            "per_class_auroc",
            format!("{} labels, {} scores", labels.len(), scores.len()),
        ));
    }
    let benign: Vec<f64> = labels
        .iter()
        .zip(scores)
        .filter(|(&l, _)| l == BENIGN)
        .map(|(_, &s)| s)
        .collect();
    if benign.is_empty() {
        return Err(ClanError::Contract("test set holds no benign rows".into()));
    }
    let mut rows = Vec::new();
    for (c, name) in class_names.iter().enumerate().skip(1) {
        let attack: Vec<f64> = labels
            .iter()
            .zip(scores)
            .filter(|(&l, _)| l == c)
            .map(|(_, &s)| s)
            .collect();
        if attack.is_empty() {
            warn!("class `{name}` has no test rows; omitted from the report");
            continue;
        }
        let mut s = benign.clone();
        s.extend_from_slice(&attack);
        let mut y = vec![0u8; benign.len()];
        y.resize(s.len(), 1);
        rows.push(ClassAuroc {
            class_name: name.clone(),
            auroc: auroc(&s, &y)?,
            n_benign: benign.len(),
            n_class: attack.len(),
        });
    }
    if rows.is_empty() {
        return Err(ClanError::Contract("test set holds no malicious rows".into()));
    }
    let mean_auroc = rows.iter().map(|r| r.auroc).sum::<f64>() / rows.len() as f64;
    Ok(EvalReport { rows, mean_auroc, macro_f1: None, metadata: Vec::new() })
}
