//! Small statistical utilities: a two-sample rank-sum test and the normal
//! CDF it needs.
//!
//! The rank-sum (Mann-Whitney U) test is used to check that naive estimators
//! computed from postselected records cannot distinguish different true
//! states: if the two estimate samples come from the same distribution, the
//! test must not reject.

use crate::error::{Error, Result};

/// Two-sided rank-sum test result (normal approximation with tie correction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// U statistic of the first sample.
    pub u: f64,
    /// Normal-approximation z-score (0 when every value is tied).
    pub z: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

impl RankSumTest {
    /// True when the test rejects the equal-distribution hypothesis at
    /// significance `alpha`.
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Mann-Whitney U test with average ranks for ties and tie-corrected variance.
/// The normal approximation is adequate for the sample sizes used here
/// (dozens and up).  Completely tied data yields `z = 0`, `p = 1`.
pub fn rank_sum_test(xs: &[f64], ys: &[f64]) -> Result<RankSumTest> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidConfig {
            detail: "rank-sum test requires two non-empty samples".into(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "rank-sum samples",
        });
    }

    let n1 = xs.len() as f64;
    let n2 = ys.len() as f64;
    let n = n1 + n2;

    // Sort the pooled values, remembering group membership.
    let mut pooled: Vec<(f64, bool)> = xs
        .iter()
        .map(|&v| (v, true))
        .chain(ys.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("values checked finite"));

    // Average ranks within tied runs; accumulate the tie correction term.
    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let run = (j - i) as f64;
        // Ranks are 1-based; a run spanning positions i..j shares their mean.
        let avg_rank = ((i + 1) + j) as f64 / 2.0;
        for &(_, is_x) in &pooled[i..j] {
            if is_x {
                rank_sum_x += avg_rank;
            }
        }
        tie_term += run * run * run - run;
        i = j;
    }

    let u = rank_sum_x - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        // Every observation tied: the samples are indistinguishable.
        return Ok(RankSumTest {
            u,
            z: 0.0,
            p_value: 1.0,
        });
    }
    let z = (u - mean) / variance.sqrt();
    let p_value = (2.0 * (1.0 - normal_cdf(z.abs()))).min(1.0);
    Ok(RankSumTest { u, z, p_value })
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Complementary error function, rational Chebyshev approximation with
/// fractional error below 1.2e-7 everywhere -- ample for hypothesis tests.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277))))))));
    let ans = t * poly.exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_cdf_reference_points() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(normal_cdf(1.959964), 0.975, epsilon = 1e-4);
        assert_abs_diff_eq!(normal_cdf(-1.959964), 0.025, epsilon = 1e-4);
    }

    #[test]
    fn identical_samples_never_reject() {
        let xs = vec![3.0; 40];
        let ys = vec![3.0; 40];
        let test = rank_sum_test(&xs, &ys).unwrap();
        assert_eq!(test.z, 0.0);
        assert_eq!(test.p_value, 1.0);
        assert!(!test.rejects_at(0.05));
    }

    #[test]
    fn interleaved_samples_do_not_reject() {
        let xs: Vec<f64> = (0..50).map(|i| 2.0 * i as f64).collect();
        let ys: Vec<f64> = (0..50).map(|i| 2.0 * i as f64 + 1.0).collect();
        let test = rank_sum_test(&xs, &ys).unwrap();
        assert!(test.p_value > 0.5, "p = {}", test.p_value);
    }

    #[test]
    fn separated_samples_reject() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..50).map(|i| 100.0 + i as f64).collect();
        let test = rank_sum_test(&xs, &ys).unwrap();
        assert!(test.p_value < 1e-6, "p = {}", test.p_value);
        assert!(test.rejects_at(0.05));
    }

    #[test]
    fn swapping_samples_flips_the_sign() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..30).map(|i| i as f64 + 5.0).collect();
        let ab = rank_sum_test(&xs, &ys).unwrap();
        let ba = rank_sum_test(&ys, &xs).unwrap();
        assert_abs_diff_eq!(ab.z, -ba.z, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.p_value, ba.p_value, epsilon = 1e-12);
    }

    #[test]
    fn empty_samples_are_rejected() {
        assert!(rank_sum_test(&[], &[1.0]).is_err());
        assert!(rank_sum_test(&[1.0], &[f64::NAN]).is_err());
    }
}
