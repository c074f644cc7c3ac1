use serde::{Deserialize, Serialize};

use super::outlyingness::AdjustedBoxplot;
use crate::error::{Error, Result};

/// `1 / (1 + s)` for each nonnegative outlyingness score.
pub fn depth_from_outlyingness(scores: &[f64]) -> Result<Vec<f64>> {
    scores
        .iter()
        .map(|&s| {
            if s >= 0.0 && s.is_finite() {
                Ok(1.0 / (1.0 + s))
            } else {
                Err(Error::Input(format!("invalid outlyingness score {s}")))
            }
        })
        .collect()
}

/// `⌈n·γ⌉`, ignoring floating-point fuzz just above an integer.
pub fn central_size(n: usize, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Config(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let x = n as f64 * gamma;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
    Ok((k as usize).min(n))
}

/// Indices of the `⌈nγ⌉` least outlying devices, ascending. Equal scores
/// are taken in index order.
pub fn central_region(scores: &[f64], gamma: f64) -> Result<Vec<usize>> {
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Input("NaN outlyingness score".into()));
    }
    let k = central_size(scores.len(), gamma)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierFlags {
    pub flags: Vec<bool>,
    /// Upper adjusted-boxplot fence of the scores, when one exists.
    pub upper_fence: Option<f64>,
    pub warning: Option<String>,
}

/// Flags scores above the upper fence of their own adjusted boxplot. A score
/// distribution without spread yields no flags and a warning.
pub fn flag_outliers(scores: &[f64]) -> Result<OutlierFlags> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Input("non-finite outlyingness score".into()));
    }
    match AdjustedBoxplot::new(scores) {
        Ok(bp) => Ok(OutlierFlags {
            flags: scores.iter().map(|&s| s > bp.upper_fence).collect(),
            upper_fence: Some(bp.upper_fence),
            warning: None,
        }),
        Err(Error::DegenerateScale(msg)) | Err(Error::Input(msg)) => Ok(OutlierFlags {
            flags: vec![false; scores.len()],
            upper_fence: None,
            warning: Some(format!("no outliers flagged: {msg}")),
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn depth_transform() {
        assert_eq!(depth_from_outlyingness(&[0.0, 1.0, 3.0]).unwrap(), vec![1.0, 0.5, 0.25]);
        assert!(depth_from_outlyingness(&[-0.1]).is_err());
    }

    #[test]
    fn central_sizes() {
        assert_eq!(central_size(100, 0.5).unwrap(), 50);
        assert_eq!(central_size(100, 0.95).unwrap(), 95);
        assert_eq!(central_size(7, 0.5).unwrap(), 4);
        assert_eq!(central_size(3, 1.0).unwrap(), 3);
        assert!(central_size(3, 0.0).is_err());
        assert!(central_size(3, 1.5).is_err());
    }

    #[test]
    fn region_breaks_ties_by_index() {
        let s = [0.5, 0.1, 0.5, 0.5, 0.9];
        assert_eq!(central_region(&s, 0.6).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn flags_clear_outlier() {
        let mut s: Vec<f64> = (0..30).map(|i| 1.0 + 0.01 * i as f64).collect();
        s.push(10.0);
        let f = flag_outliers(&s).unwrap();
        assert_eq!(f.flags.iter().filter(|x| **x).count(), 1);
        assert!(f.flags[30]);
        let flat = flag_outliers(&[1.0; 8]).unwrap();
        assert!(flat.flags.iter().all(|x| !x) && flat.warning.is_some());
    }

    proptest! {
        #[test]
        fn region_is_nested(scores in prop::collection::vec(0.0f64..10.0, 1..60),
                            g1 in 0.01f64..1.0, g2 in 0.01f64..1.0) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let a = central_region(&scores, lo).unwrap();
            let b = central_region(&scores, hi).unwrap();
            prop_assert!(a.iter().all(|i| b.contains(i)));
            prop_assert_eq!(b.len(), central_size(scores.len(), hi).unwrap());
        }
    }
}
