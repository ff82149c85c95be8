//! ROC curves, AUC and the discrimination verdict.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Discrimination is considered to hold when the AUC exceeds this value.
pub const DISCRIMINATION_THRESHOLD: f64 = 0.7;

/// ROC curve from `(0, 0)` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve<T> {
    /// `(false positive rate, true positive rate)` pairs.
    pub points: Vec<(T, T)>,
    /// Score cutoff for each point: observations with score `>=` cutoff are called positive.
    /// The first cutoff is `+∞`.
    pub thresholds: Vec<T>,
}

impl<T: Scalar> RocCurve<T> {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> T {
        self.points.windows(2).fold(T::zero(), |acc, w| {
            acc + (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * T::c(0.5)
        })
    }
}

fn validate<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            what: "labels",
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("scores must be finite".into()));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

fn cmp<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// One point per distinct score, tied scores forming a single diagonal segment.
pub fn roc_curve<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<RocCurve<T>> {
    let (pos, neg) = validate(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| cmp(scores[j], scores[i]));

    let (tp_total, fp_total) = (T::from_usize_lossy(pos), T::from_usize_lossy(neg));
    let mut points = vec![(T::zero(), T::zero())];
    let mut thresholds = vec![T::infinity()];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((
            T::from_usize_lossy(fp) / fp_total,
            T::from_usize_lossy(tp) / tp_total,
        ));
        thresholds.push(s);
    }
    Ok(RocCurve { points, thresholds })
}

/// Mann–Whitney AUC: `(#{pos > neg} + ½ #{ties}) / (n₁ n₀)`, via mid-ranks in `O(m log m)`.
pub fn auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<T> {
    let (pos, neg) = validate(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| cmp(scores[i], scores[j]));
    // Twice the rank sum of positives, so tied mid-ranks stay integral.
    let mut twice_rank_sum: u128 = 0;
    let mut k = 0;
    while k < order.len() {
        let start = k;
        let s = scores[order[k]];
        let mut pos_in_block = 0u128;
        while k < order.len() && scores[order[k]] == s {
            pos_in_block += u128::from(labels[order[k]]);
            k += 1;
        }
        // ranks start+1 ..= k, mid-rank (start + 1 + k) / 2
        twice_rank_sum += pos_in_block * (start as u128 + 1 + k as u128);
    }
    let p = pos as u128;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(T::from_u128(twice_u).unwrap()
        / (T::c(2.0) * T::from_usize_lossy(pos) * T::from_usize_lossy(neg)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Validated,
    NotValidated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Validated => "validated",
            Verdict::NotValidated => "not_validated",
        })
    }
}

/// `Validated` iff `auc > 0.7` (strict).
pub fn discrimination_verdict<T: Scalar>(auc_value: T) -> Verdict {
    if auc_value > T::c(DISCRIMINATION_THRESHOLD) {
        Verdict::Validated
    } else {
        Verdict::NotValidated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    if si > sj {
                        num += 1.0;
                    } else if si == sj {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn small_hand_example() {
        let scores = [0.8, 0.4, 0.6, 0.2];
        let labels = [1, 1, 0, 0];
        assert_eq!(auc(&scores, &labels).unwrap(), 0.75);
        let roc = roc_curve(&scores, &labels).unwrap();
        assert!(roc.points.contains(&(0.5, 0.5)));
        let i = roc.points.iter().position(|&p| p == (0.5, 0.5)).unwrap();
        assert_eq!(roc.thresholds[i], 0.6);
        assert_eq!(roc.area(), 0.75);
    }

    #[test]
    fn perfect_and_tied() {
        let labels = [0, 0, 1, 1];
        let roc = roc_curve(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap();
        assert!(roc.points.contains(&(0.0, 1.0)));
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 1.0);
        let flat = roc_curve(&[0.3; 4], &labels).unwrap();
        assert_eq!(flat.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&[0.3; 4], &labels).unwrap(), 0.5);
    }

    #[test]
    fn errors() {
        assert_eq!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass));
        assert!(roc_curve(&[0.1], &[1, 0]).is_err());
        assert!(auc(&[f64::NAN, 0.2], &[1, 0]).is_err());
    }

    #[test]
    fn verdicts() {
        assert_eq!(discrimination_verdict(0.708), Verdict::Validated);
        assert_eq!(discrimination_verdict(0.7), Verdict::NotValidated);
        assert_eq!(discrimination_verdict(0.533), Verdict::NotValidated);
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (2usize..50)
            .prop_flat_map(|m| {
                (
                    prop::collection::vec((0u8..6).prop_map(|v| v as f64 * 0.25), m),
                    prop::collection::vec(0u8..2, m),
                )
            })
            .prop_filter("both classes", |(_, y)| y.contains(&0) && y.contains(&1))
    }

    proptest! {
        #[test]
        fn sort_route_matches_pairs_and_trapezoid((scores, labels) in instance()) {
            let a = auc(&scores, &labels).unwrap();
            prop_assert!((a - pairwise(&scores, &labels)).abs() <= 1e-12);
            prop_assert!((a - roc_curve(&scores, &labels).unwrap().area()).abs() <= 1e-12);
            let flipped: Vec<u8> = labels.iter().map(|&y| 1 - y).collect();
            prop_assert!((auc(&scores, &flipped).unwrap() - (1.0 - a)).abs() <= 1e-12);
            let affine: Vec<f64> = scores.iter().map(|s| 2.0 * s + 1.0).collect();
            prop_assert_eq!(auc(&affine, &labels).unwrap(), a);
            let cubed: Vec<f64> = scores.iter().map(|s| (s + 0.1).powi(3)).collect();
            prop_assert_eq!(auc(&cubed, &labels).unwrap(), a);
        }

        #[test]
        fn roc_is_monotone((scores, labels) in instance()) {
            let roc = roc_curve(&scores, &labels).unwrap();
            prop_assert_eq!(roc.points[0], (0.0, 0.0));
            prop_assert_eq!(*roc.points.last().unwrap(), (1.0, 1.0));
            for w in roc.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
        }
    }
}
