//! Order statistics shared by the depth and profile modules.

/// Median of an ascending slice; the mean of the two middle values for even
/// lengths.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Empirical quantile of an ascending slice by linear interpolation between
/// the closest order statistics (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0 && (0.0..=1.0).contains(&prob));
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Median of an unsorted slice, reordering it in place.
pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower_max + upper) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.25), 5.75);
        assert_eq!(quantile_sorted(&v, 0.75), 15.25);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 20.0);
        assert_eq!(median_sorted(&v), 10.5);
        assert_eq!(quantile_sorted(&[3.0], 0.4), 3.0);
    }

    #[test]
    fn in_place_median_agrees() {
        for n in 1..12 {
            let v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64).collect();
            let mut w = v.clone();
            assert_eq!(median_in_place(&mut w), median_sorted(&sorted_copy(&v)));
        }
    }
}
