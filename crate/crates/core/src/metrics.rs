//! Confusion tables, Micro/Macro-F1, and mean/std aggregation over runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `K x K` counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTable {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionTable {
    pub fn new(num_classes: usize) -> Self {
        ConfusionTable {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_counts(rows: &[Vec<u64>]) -> Self {
        let k = rows.len();
        assert!(rows.iter().all(|r| r.len() == k), "confusion table must be square");
        ConfusionTable {
            num_classes: k,
            counts: rows.concat(),
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::shape(
                "confusion table",
                format!("{} labels vs {} predictions", truth.len(), predicted.len()),
            ));
        }
        let mut t = ConfusionTable::new(num_classes);
        for (&y, &p) in truth.iter().zip(predicted) {
            if y >= num_classes || p >= num_classes {
                return Err(Error::InvalidArgument(format!(
                    "class pair ({y}, {p}) outside [0, {num_classes})"
                )));
            }
            t.counts[y * num_classes + p] += 1;
        }
        Ok(t)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.num_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn accuracy(&self) -> Result<f64> {
        self.nonempty()?;
        Ok(self.trace() as f64 / self.total() as f64)
    }

    fn nonempty(&self) -> Result<()> {
        if self.total() == 0 {
            Err(Error::Empty("confusion table"))
        } else {
            Ok(())
        }
    }

    /// Per-class F1; a class with `precision + recall = 0` scores 0.
    pub fn per_class_f1(&self) -> Result<Vec<f64>> {
        self.nonempty()?;
        let k = self.num_classes;
        Ok((0..k)
            .map(|c| {
                let tp = self.get(c, c) as f64;
                let predicted: u64 = (0..k).map(|r| self.get(r, c)).sum();
                let actual: u64 = (0..k).map(|p| self.get(c, p)).sum();
                let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
                let recall = if actual > 0 { tp / actual as f64 } else { 0.0 };
                if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Relabels classes: entry `(i, j)` moves to `(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let k = self.num_classes;
        let mut out = ConfusionTable::new(k);
        for i in 0..k {
            for j in 0..k {
                out.counts[perm[i] * k + perm[j]] = self.get(i, j);
            }
        }
        out
    }
}

/// Micro-averaged F1. For single-label multiclass data this is the accuracy.
pub fn micro_f1(table: &ConfusionTable) -> Result<f64> {
    table.accuracy()
}

/// Unweighted mean of per-class F1 scores.
pub fn macro_f1(table: &ConfusionTable) -> Result<f64> {
    let f1 = table.per_class_f1()?;
    Ok(f1.iter().sum::<f64>() / f1.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for a single value.
    pub std: f64,
    pub n: usize,
}

pub fn aggregate(values: &[f64]) -> Result<MeanStd> {
    if values.is_empty() {
        return Err(Error::Empty("run list"));
    }
    // Welford's update keeps the mean exact for repeated values
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let d = v - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (v - mean);
    }
    let n = values.len();
    let std = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok(MeanStd { mean, std, n })
}
