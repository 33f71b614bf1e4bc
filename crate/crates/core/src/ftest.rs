//! Combined 5x2 cross-validation F-test for paired error rates.

use crate::error::{Error, Result};

/// Critical value of F(10, 5) at the 0.05 level.
pub const F_THRESHOLD: f64 = 4.74;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FTestResult {
    pub statistic: f64,
    pub threshold: f64,
    pub significant: bool,
}

impl FTestResult {
    fn new(statistic: f64) -> Self {
        FTestResult {
            statistic,
            threshold: F_THRESHOLD,
            significant: statistic > F_THRESHOLD,
        }
    }
}

/// Compares two methods from their error rates on the same folds, given
/// as one `(fold 1, fold 2)` pair per replication.
///
/// The statistic is the sum of squared fold differences over twice the sum
/// of per-replication variances. A zero denominator yields a statistic of
/// 0 (not significant).
pub fn f_test(errors_a: &[(f64, f64)], errors_b: &[(f64, f64)]) -> Result<FTestResult> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::shape(format!(
            "{} vs {} replications",
            errors_a.len(),
            errors_b.len()
        )));
    }
    if errors_a.is_empty() {
        return Err(Error::Empty("f-test replications"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in errors_a.iter().zip(errors_b) {
        let d = [a.0 - b.0, a.1 - b.1];
        if !d.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("non-finite error rate"));
        }
        let mean = (d[0] + d[1]) / 2.0;
        num += d[0] * d[0] + d[1] * d[1];
        den += (d[0] - mean).powi(2) + (d[1] - mean).powi(2);
    }
    if den == 0.0 {
        return Ok(FTestResult::new(0.0));
    }
    Ok(FTestResult::new(num / (2.0 * den)))
}

/// Pairs a flat list ordered replication-major into `(fold 1, fold 2)`.
pub fn pair_folds(errors: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !errors.len().is_multiple_of(2) {
        return Err(Error::shape(format!(
            "{} error rates cannot be paired into folds",
            errors.len()
        )));
    }
    Ok(errors.chunks_exact(2).map(|c| (c[0], c[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_methods() {
        let a = [(1.0, 2.0); 5];
        let r = f_test(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.significant);
    }

    #[test]
    fn hand_computed_statistic() {
        // differences (1, 3), (2, 2), (0, 4), (1, 1), (2, 4)
        let b = [(0.0, 0.0); 5];
        let a = [(1.0, 3.0), (2.0, 2.0), (0.0, 4.0), (1.0, 1.0), (2.0, 4.0)];
        // num = 10 + 8 + 16 + 2 + 20 = 56; den = 2 + 0 + 8 + 0 + 2 = 12
        let r = f_test(&a, &b).unwrap();
        assert!((r.statistic - 56.0 / 24.0).abs() < 1e-12);
        assert!(!r.significant);
    }

    #[test]
    fn large_offset_is_significant() {
        let b = [(0.10, 0.11), (0.12, 0.10), (0.11, 0.11), (0.09, 0.10), (0.10, 0.12)];
        let a: Vec<(f64, f64)> = b
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (x + 5.0 + 0.01 * i as f64, y + 5.0))
            .collect();
        let r = f_test(&a, &b).unwrap();
        assert!(r.significant, "{}", r.statistic);
    }

    #[test]
    fn threshold_is_strict() {
        assert!(!FTestResult::new(4.74).significant);
        assert!(FTestResult::new(4.740_000_1).significant);
    }

    #[test]
    fn shape_errors() {
        assert!(f_test(&[(0.0, 1.0)], &[]).is_err());
        assert!(f_test(&[], &[]).is_err());
        assert!(pair_folds(&[1.0, 2.0, 3.0]).is_err());
        assert_eq!(pair_folds(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![(1.0, 2.0), (3.0, 4.0)]);
    }

    proptest! {
        #[test]
        fn symmetric(a in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 5),
                     b in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 5)) {
            let ab = f_test(&a, &b).unwrap();
            let ba = f_test(&b, &a).unwrap();
            prop_assert!((ab.statistic - ba.statistic).abs() <= 1e-9 * ab.statistic.abs().max(1.0));
            prop_assert_eq!(ab.significant, ba.significant);
        }
    }
}
