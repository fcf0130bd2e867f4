//! Frame-wise detection metrics: precision/recall/F for the `on` label,
//! micro-averaged F over both labels, and ROC AUC.

use crate::error::{Error, Result};

/// Precision, recall and F-measure with respect to the positive label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a denominator was zero and the metric was reported as 0.
    pub undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    /// Counts with `positive` treated as the positive label.
    pub fn for_label(pred: &[bool], truth: &[bool], positive: bool) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::invalid(format!(
                "{} predictions for {} ground-truth labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut c = Counts::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == positive, t == positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                _ => {}
            }
        }
        Ok(c)
    }

    pub fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }

    pub fn prf(self) -> Prf {
        let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        let (precision, recall) = (p.unwrap_or(0.0), r.unwrap_or(0.0));
        let f = f_measure(precision, recall);
        Prf {
            precision,
            recall,
            f1: f.unwrap_or(0.0),
            undefined: p.is_none() || r.is_none() || f.is_none(),
        }
    }
}

/// Harmonic mean `2PR / (P + R)`; `None` when both are zero.
pub fn f_measure(precision: f64, recall: f64) -> Option<f64> {
    let den = precision + recall;
    (den > 0.0).then(|| 2.0 * precision * recall / den)
}

/// Precision, recall and F with `true` (pedal on) as the positive label.
pub fn prf(pred: &[bool], truth: &[bool]) -> Result<Prf> {
    Ok(Counts::for_label(pred, truth, true)?.prf())
}

/// Micro-averaged F: true/false positives and false negatives pooled over
/// both labels (each taken as positive in turn) and over all folds.
pub fn micro_f1(folds: &[(Vec<bool>, Vec<bool>)]) -> Result<f64> {
    if folds.is_empty() {
        return Err(Error::invalid("micro-F needs at least one fold"));
    }
    let mut total = Counts::default();
    for (pred, truth) in folds {
        for label in [true, false] {
            total = total.add(Counts::for_label(pred, truth, label)?);
        }
    }
    Ok(total.prf().f1)
}

/// ROC AUC via the Mann–Whitney rank statistic, ties counted half.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks (1-based) over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += order[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * avg_rank;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// ROC AUC by trapezoidal integration of the ROC curve.
pub fn auc_trapezoid(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tp, mut prev_fp) = (0usize, 0usize);
    let mut area2 = 0usize; // twice the area in count units
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - prev_fp) * (tp + prev_tp);
        prev_tp = tp;
        prev_fp = fp;
    }
    Ok(area2 as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    den += 1.0;
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / den
    }

    #[test]
    fn prf_definitions() {
        let p = prf(&[true, false, true], &[true, false, true]).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        // tp=3 fp=1 fn=2
        let pred = [true, true, true, true, false, false, false];
        let truth = [true, true, true, false, true, true, false];
        let p = prf(&pred, &truth).unwrap();
        assert!((p.precision - 0.75).abs() < 1e-12);
        assert!((p.recall - 0.6).abs() < 1e-12);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-6);
        assert!(!p.undefined);
    }

    #[test]
    fn undefined_denominators_flagged() {
        let p = prf(&[false, false], &[false, false]).unwrap();
        assert_eq!(p.f1, 0.0);
        assert!(p.undefined);
        assert!(prf(&[true], &[true, false]).is_err());
    }

    #[test]
    fn f_from_table_row() {
        let f = f_measure(0.9425, 0.9439).unwrap();
        assert!((f - 0.9432).abs() < 5e-4);
    }

    #[test]
    fn micro_f_cases() {
        let truth = vec![true, false, true, false];
        assert_eq!(micro_f1(&[(truth.clone(), truth.clone())]).unwrap(), 1.0);
        let all_on = vec![true; 4];
        // on: tp 2 fp 2; off: fn 2 -> P = R = 0.5
        assert!((micro_f1(&[(all_on, truth)]).unwrap() - 0.5).abs() < 1e-12);
        assert!(micro_f1(&[]).is_err());
    }

    #[test]
    fn auc_cases() {
        assert_eq!(auc_roc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        let s = [0.1, 0.4, 0.35, 0.8];
        let l = [false, false, true, true];
        assert_eq!(pairwise_auc(&s, &l), 0.75);
        assert_eq!(auc_roc(&s, &l).unwrap(), 0.75);
        assert!(matches!(auc_roc(&[0.1], &[true]), Err(Error::SingleClass)));
    }

    proptest::proptest! {
        #[test]
        fn rank_auc_equals_trapezoid(
            data in proptest::collection::vec((0u8..6, proptest::bool::ANY), 2..40)
        ) {
            let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 / 5.0).collect();
            let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
            if labels.iter().any(|&l| l) && labels.iter().any(|&l| !l) {
                let a = auc_roc(&scores, &labels).unwrap();
                let b = auc_trapezoid(&scores, &labels).unwrap();
                proptest::prop_assert!((a - b).abs() < 1e-12);
                proptest::prop_assert!((a - pairwise_auc(&scores, &labels)).abs() < 1e-12);
            }
        }
    }
}
