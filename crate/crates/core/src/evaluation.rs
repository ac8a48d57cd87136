//! Binary classification metrics. The positive class is label 1 (Mild).

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};
use crate::nn::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_pos: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_neg + self.false_pos + self.false_neg + self.true_pos
    }

    /// Support of class `c` (number of true labels equal to `c`).
    pub fn support(&self, class: u8) -> usize {
        if class == 1 {
            self.true_pos + self.false_neg
        } else {
            self.true_neg + self.false_pos
        }
    }

    /// `(tp, fp, fn)` when `class` is treated as the positive class.
    fn one_vs_rest(&self, class: u8) -> (usize, usize, usize) {
        if class == 1 {
            (self.true_pos, self.false_pos, self.false_neg)
        } else {
            (self.true_neg, self.false_neg, self.false_pos)
        }
    }

    /// Rows are actual negative/positive, columns predicted negative/positive.
    pub fn to_tsv(&self) -> String {
        format!(
            "\tpredicted_negative\tpredicted_positive\nactual_negative\t{}\t{}\nactual_positive\t{}\t{}\n",
            self.true_neg, self.false_pos, self.false_neg, self.true_pos
        )
    }
}

/// Tallies predictions `score >= threshold` against `labels`.
pub fn confusion(labels: &[u8], scores: &[f64], threshold: f64) -> Result<ConfusionMatrix> {
    check_inputs(labels, scores)?;
    let mut cm = ConfusionMatrix::default();
    for (&y, &s) in labels.iter().zip(scores) {
        match (y, s >= threshold) {
            (1, true) => cm.true_pos += 1,
            (1, false) => cm.false_neg += 1,
            (_, true) => cm.false_pos += 1,
            (_, false) => cm.true_neg += 1,
        }
    }
    Ok(cm)
}

fn check_inputs(labels: &[u8], scores: &[f64]) -> Result<()> {
    if labels.len() != scores.len() {
        return Err(Error::Dimension(format!(
            "{} labels vs {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    if let Some(&y) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::invalid(format!("label {y} is not binary")));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::invalid(format!("score {s} is not a number")));
    }
    Ok(())
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasicRates {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
}

pub fn basic_rates(cm: &ConfusionMatrix) -> BasicRates {
    BasicRates {
        sensitivity: ratio(cm.true_pos, cm.true_pos + cm.false_neg),
        specificity: ratio(cm.true_neg, cm.true_neg + cm.false_pos),
        accuracy: ratio(cm.true_pos + cm.true_neg, cm.total()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    Positive,
    Macro,
    Weighted,
}

impl Convention {
    pub const ALL: [Convention; 3] = [Convention::Positive, Convention::Macro, Convention::Weighted];

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Positive => "positive",
            Convention::Macro => "macro",
            Convention::Weighted => "weighted",
        }
    }
}

/// Precision, recall and F1 of one class. Undefined values are stored as 0
/// and flagged in `undefined`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub undefined: bool,
}

pub fn class_metrics(cm: &ConfusionMatrix, class: u8) -> ClassMetrics {
    let (tp, fp, fn_) = cm.one_vs_rest(class);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
    ClassMetrics {
        precision: precision.unwrap_or(0.0),
        recall: recall.unwrap_or(0.0),
        f1: f1.unwrap_or(0.0),
        support: tp + fn_,
        undefined: precision.is_none() || recall.is_none() || f1.is_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Some contributing per-class value was undefined.
    pub degenerate: bool,
}

/// Combines per-class metrics. Macro averages the classes that occur in the
/// labels; weighted averages by support.
pub fn prf(cm: &ConfusionMatrix, convention: Convention) -> Prf {
    let classes = [class_metrics(cm, 0), class_metrics(cm, 1)];
    match convention {
        Convention::Positive => {
            let c = classes[1];
            Prf {
                precision: c.precision,
                recall: c.recall,
                f1: c.f1,
                degenerate: c.undefined,
            }
        }
        Convention::Macro | Convention::Weighted => {
            let present: Vec<&ClassMetrics> = classes.iter().filter(|c| c.support > 0).collect();
            let weight = |c: &ClassMetrics| match convention {
                Convention::Weighted => c.support as f64,
                _ => 1.0,
            };
            let total: f64 = present.iter().map(|c| weight(c)).sum();
            let mean = |f: fn(&ClassMetrics) -> f64| {
                if total == 0.0 {
                    0.0
                } else {
                    present.iter().map(|c| weight(c) * f(c)).sum::<f64>() / total
                }
            };
            Prf {
                precision: mean(|c| c.precision),
                recall: mean(|c| c.recall),
                f1: mean(|c| c.f1),
                degenerate: present.len() < 2 || present.iter().any(|c| c.undefined),
            }
        }
    }
}

/// Rank-based area under the ROC curve: the fraction of positive/negative
/// pairs in which the positive scores higher, ties counting one half.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    check_inputs(labels, scores)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::MissingClass(1));
    }
    if n_neg == 0 {
        return Err(Error::MissingClass(0));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of 1-based average ranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        let positives = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += avg_rank * positives as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub rates: BasicRates,
    pub classes: [ClassMetrics; 2],
    pub averaged: [(Convention, Prf); 3],
    /// `None` when the labels contain a single class.
    pub roc_auc: Option<f64>,
}

impl EvalReport {
    pub fn from_scores(labels: &[u8], scores: &[f64], threshold: f64) -> Result<Self> {
        let cm = confusion(labels, scores, threshold)?;
        let roc_auc = match roc_auc(labels, scores) {
            Ok(v) => Some(v),
            Err(Error::MissingClass(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self::assemble(cm, threshold, roc_auc))
    }

    /// Report from counts alone; ROC-AUC is unavailable.
    pub fn from_confusion(cm: ConfusionMatrix, threshold: f64) -> Self {
        Self::assemble(cm, threshold, None)
    }

    fn assemble(cm: ConfusionMatrix, threshold: f64, roc_auc: Option<f64>) -> Self {
        EvalReport {
            threshold,
            confusion: cm,
            rates: basic_rates(&cm),
            classes: [class_metrics(&cm, 0), class_metrics(&cm, 1)],
            averaged: Convention::ALL.map(|c| (c, prf(&cm, c))),
            roc_auc,
        }
    }

    pub fn averaged(&self, convention: Convention) -> Prf {
        self.averaged
            .iter()
            .find(|(c, _)| *c == convention)
            .map(|(_, p)| *p)
            .expect("all conventions present")
    }

    /// `(metric, convention, value)` rows; undefined values are `None`.
    pub fn rows(&self) -> Vec<(&'static str, String, Option<f64>)> {
        let mut rows = vec![
            ("accuracy", "overall".to_string(), self.rates.accuracy),
            ("sensitivity", "class_1".to_string(), self.rates.sensitivity),
            ("specificity", "class_0".to_string(), self.rates.specificity),
        ];
        for (conv, p) in &self.averaged {
            rows.push(("precision", conv.as_str().to_string(), Some(p.precision)));
            rows.push(("recall", conv.as_str().to_string(), Some(p.recall)));
            rows.push(("f1", conv.as_str().to_string(), Some(p.f1)));
        }
        for (class, c) in self.classes.iter().enumerate() {
            let name = format!("class_{class}");
            rows.push(("precision", name.clone(), Some(c.precision)));
            rows.push(("recall", name.clone(), Some(c.recall)));
            rows.push(("f1", name, Some(c.f1)));
        }
        rows.push(("roc_auc", "rank".to_string(), self.roc_auc));
        rows.push(("threshold", "-".to_string(), Some(self.threshold)));
        rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tconvention\tvalue\n");
        for (metric, conv, value) in self.rows() {
            let v = value.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(out, "{metric}\t{conv}\t{v}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
        let cm = &self.confusion;
        let mut out = String::new();
        let _ = writeln!(out, "samples      {}  (threshold {})", cm.total(), self.threshold);
        let _ = writeln!(out, "                 pred_neg  pred_pos");
        let _ = writeln!(out, "actual_neg  {:>10}{:>10}", cm.true_neg, cm.false_pos);
        let _ = writeln!(out, "actual_pos  {:>10}{:>10}", cm.false_neg, cm.true_pos);
        let _ = writeln!(out);
        let _ = writeln!(out, "accuracy     {}", fmt(self.rates.accuracy));
        let _ = writeln!(out, "sensitivity  {}", fmt(self.rates.sensitivity));
        let _ = writeln!(out, "specificity  {}", fmt(self.rates.specificity));
        let _ = writeln!(out, "roc_auc      {}", fmt(self.roc_auc));
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10}{:>10}{:>10}{:>10}", "", "precision", "recall", "f1");
        for (conv, p) in &self.averaged {
            let flag = if p.degenerate { "  (degenerate)" } else { "" };
            let _ = writeln!(
                out,
                "{:<10}{:>10.4}{:>10.4}{:>10.4}{flag}",
                conv.as_str(),
                p.precision,
                p.recall,
                p.f1
            );
        }
        out
    }
}

/// Infer-mode scores for every vector, in input order.
pub fn predict_scores(model: &Model<f32>, vectors: &[FeatureVector]) -> Result<Vec<f64>> {
    vectors
        .par_iter()
        .map(|v| model.predict(&v.values).map(f64::from))
        .collect()
}

pub fn evaluate(model: &Model<f32>, test: &[FeatureVector], threshold: f64) -> Result<(EvalReport, Vec<f64>)> {
    let scores = predict_scores(model, test)?;
    let labels: Vec<u8> = test.iter().map(|v| v.label).collect();
    Ok((EvalReport::from_scores(&labels, &scores, threshold)?, scores))
}
