//! Sample-averaged multi-label metrics over the articles that are both tagged
//! and in the test set.
//!
//! Metrics are generic over any numeric field type, so they can be computed
//! exactly with rationals as well as in floating point.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::corpus::GroundTruth;
use crate::error::{Error, Result};
use crate::fusion::TagAssignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T = f64> {
    pub method: String,
    pub intersection_size: usize,
    /// Share of articles with at least one correct tag.
    pub common_match: T,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub jaccard: T,
    pub hamming_loss: T,
    pub label_cardinality_pred: T,
    pub label_cardinality_test: T,
    pub cardinality_difference: T,
}

fn count<T: FromPrimitive>(n: usize) -> T {
    T::from_usize(n).expect("count is representable")
}

/// Evaluates one method against the ground truth.
///
/// Both predicted and true topic sets are restricted to `label_set`; an
/// article whose restricted prediction is empty counts as untagged.
pub fn evaluate<T>(
    method: &str,
    assignments: &[TagAssignment],
    truth: &GroundTruth,
    label_set: &[String],
) -> Result<EvalReport<T>>
where
    T: Num + FromPrimitive + Copy,
{
    if label_set.is_empty() {
        return Err(Error::invalid("label set is empty"));
    }
    let labels: HashSet<&str> = label_set.iter().map(String::as_str).collect();
    let mut seen = HashSet::with_capacity(assignments.len());
    let mut pairs: Vec<(BTreeSet<&str>, BTreeSet<&str>)> = Vec::new();
    for a in assignments {
        if !seen.insert(a.id.as_str()) {
            return Err(Error::DuplicateId(a.id.clone()));
        }
        let predicted: BTreeSet<&str> = a.topics().filter(|t| labels.contains(t)).collect();
        if predicted.is_empty() {
            continue;
        }
        let Some(true_set) = truth.get(&a.id) else { continue };
        let true_set: BTreeSet<&str> = true_set
            .iter()
            .map(String::as_str)
            .filter(|t| labels.contains(t))
            .collect();
        if true_set.is_empty() {
            continue;
        }
        pairs.push((predicted, true_set));
    }
    if pairs.is_empty() {
        return Err(Error::invalid(format!(
            "{method}: no article is both tagged and in the test set"
        )));
    }

    let zero = T::zero();
    let (mut hit, mut p, mut r, mut f, mut j, mut h, mut cp, mut ct) = (zero, zero, zero, zero, zero, zero, zero, zero);
    let l: T = count(labels.len());
    for (pred, tru) in &pairs {
        let inter = pred.intersection(tru).count();
        let union = pred.union(tru).count();
        let sym = union - inter;
        if inter > 0 {
            hit = hit + T::one();
        }
        p = p + count::<T>(inter) / count(pred.len());
        r = r + count::<T>(inter) / count(tru.len());
        f = f + count::<T>(2 * inter) / count(pred.len() + tru.len());
        j = j + count::<T>(inter) / count(union);
        h = h + count::<T>(sym) / l;
        cp = cp + count(pred.len());
        ct = ct + count(tru.len());
    }
    let n: T = count(pairs.len());
    let cardinality_pred = cp / n;
    let cardinality_test = ct / n;
    Ok(EvalReport {
        method: method.to_owned(),
        intersection_size: pairs.len(),
        common_match: hit / n,
        precision: p / n,
        recall: r / n,
        f1: f / n,
        jaccard: j / n,
        hamming_loss: h / n,
        label_cardinality_pred: cardinality_pred,
        label_cardinality_test: cardinality_test,
        cardinality_difference: cardinality_pred - cardinality_test,
    })
}

/// One report per method, in the order given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub reports: Vec<EvalReport<f64>>,
}

pub fn sweep(
    methods: &[(String, Vec<TagAssignment>)],
    truth: &GroundTruth,
    label_set: &[String],
) -> Result<SweepTable> {
    if methods.is_empty() {
        return Err(Error::invalid("sweep needs at least one method"));
    }
    let mut names = HashMap::new();
    for (name, _) in methods {
        if names.insert(name.as_str(), ()).is_some() {
            return Err(Error::invalid(format!("method {name:?} listed twice")));
        }
    }
    let reports = methods
        .iter()
        .map(|(name, a)| evaluate(name, a, truth, label_set))
        .collect::<Result<_>>()?;
    Ok(SweepTable { reports })
}

impl SweepTable {
    pub fn get(&self, method: &str) -> Option<&EvalReport<f64>> {
        self.reports.iter().find(|r| r.method == method)
    }

    /// Tab-separated plot series: label-cardinality difference, Jaccard,
    /// Hamming loss × 10 and F1 per method.
    pub fn plot_series(&self) -> String {
        let mut s = String::from("method\tcardinality_difference\tjaccard\thamming_loss_x10\tf1\n");
        for r in &self.reports {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                r.method,
                r.cardinality_difference,
                r.jaccard,
                r.hamming_loss * 10.0,
                r.f1
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.reports).expect("reports serialize") + "\n"
    }
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = [
            "Method",
            "Intersection",
            "Common-Match",
            "Recall",
            "Precision",
            "F1",
            "Jaccard",
            "Hamming",
            "LC(pred)",
            "LC(test)",
            "LC diff",
        ];
        let rows: Vec<Vec<String>> = self
            .reports
            .iter()
            .map(|r| {
                let mut row = vec![r.method.clone(), r.intersection_size.to_string()];
                row.extend(
                    [
                        r.common_match,
                        r.recall,
                        r.precision,
                        r.f1,
                        r.jaccard,
                        r.hamming_loss,
                        r.label_cardinality_pred,
                        r.label_cardinality_test,
                        r.cardinality_difference,
                    ]
                    .iter()
                    .map(|v| format!("{v:.4}")),
                );
                row
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                rows.iter()
                    .map(|r| r[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: Vec<&str>, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            for (c, cell) in cells.iter().enumerate() {
                if c == 0 {
                    write!(f, "{cell:<w$}", w = widths[c])?;
                } else {
                    write!(f, "  {cell:>w$}", w = widths[c])?;
                }
            }
            writeln!(f)
        };
        line(header.to_vec(), f)?;
        line(
            widths
                .iter()
                .map(|&w| "-".repeat(w))
                .collect::<Vec<_>>()
                .iter()
                .map(String::as_str)
                .collect(),
            f,
        )?;
        for r in &rows {
            line(r.iter().map(String::as_str).collect(), f)?;
        }
        Ok(())
    }
}

impl<T: ToPrimitive> EvalReport<T> {
    pub fn to_f64(&self) -> EvalReport<f64> {
        let c = |v: &T| v.to_f64().expect("metric converts to f64");
        EvalReport {
            method: self.method.clone(),
            intersection_size: self.intersection_size,
            common_match: c(&self.common_match),
            precision: c(&self.precision),
            recall: c(&self.recall),
            f1: c(&self.f1),
            jaccard: c(&self.jaccard),
            hamming_loss: c(&self.hamming_loss),
            label_cardinality_pred: c(&self.label_cardinality_pred),
            label_cardinality_test: c(&self.label_cardinality_test),
            cardinality_difference: c(&self.cardinality_difference),
        }
    }
}
