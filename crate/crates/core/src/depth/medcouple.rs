use crate::error::{Error, Result};
use crate::stats::{median_in_place, median_sorted, sorted_copy};

/// Medcouple: the median of `h(a, b) = ((b − m) − (m − a)) / (b − a)` over
/// pairs of distinct observations `a ≤ m ≤ b`, `m` the sample median.
///
/// Distinct observations tied at the median contribute `sign(i + j − (k − 1))`,
/// where `i`, `j` index the `k` ties; an observation is never paired with
/// itself. Naive `O(n²)` enumeration.
pub fn medcouple(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::Input(format!(
            "medcouple needs at least 3 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("medcouple of non-finite values".into()));
    }
    let sorted = sorted_copy(values);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::DegenerateScale("medcouple of a constant sample".into()));
    }
    Ok(medcouple_sorted(&sorted))
}

/// [`medcouple`] on an ascending, finite, nonconstant slice.
pub(crate) fn medcouple_sorted(sorted: &[f64]) -> f64 {
    let m = median_sorted(sorted);
    // sorted[..lower_end] <= m, sorted[upper_start..] >= m
    let lower_end = sorted.partition_point(|&x| x <= m);
    let upper_start = sorted.partition_point(|&x| x < m);
    let ties = lower_end - upper_start;
    let lower = &sorted[..lower_end];
    let upper = &sorted[upper_start..];

    let mut kernel = Vec::with_capacity(lower.len() * upper.len());
    for (a_idx, &b) in upper.iter().enumerate() {
        for (l_idx, &a) in lower.iter().enumerate() {
            if a < b {
                kernel.push(((b - m) - (m - a)) / (b - a));
            } else {
                // Both tied at m: upper ties lead `upper`, lower ties trail `lower`.
                let i = a_idx;
                let j = l_idx - upper_start;
                if i != j {
                    let s = (i + j) as isize - (ties as isize - 1);
                    kernel.push(s.signum() as f64);
                }
            }
        }
    }
    median_in_place(&mut kernel)
}
