//! Modified band depth and the functional boxplot built on it.

use serde::{Deserialize, Serialize};

use super::grid::EvaluationGrid;
use super::outlyingness::FENCE_FACTOR;
use super::region::central_size;
use crate::error::{Error, Result};

fn check_curves(curves: &[Vec<f64>], grid: &EvaluationGrid, min: usize) -> Result<()> {
    if curves.len() < min {
        return Err(Error::Input(format!(
            "need at least {min} curves, got {}",
            curves.len()
        )));
    }
    if curves.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::Input("curve length differs from grid size".into()));
    }
    if curves.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite curve value".into()));
    }
    Ok(())
}

fn choose2(k: usize) -> f64 {
    (k * k.saturating_sub(1) / 2) as f64
}

/// Modified band depth (bands of two curves): the time-averaged fraction of
/// curve pairs whose pointwise envelope contains the curve.
pub fn modified_band_depth(curves: &[Vec<f64>], grid: &EvaluationGrid) -> Result<Vec<f64>> {
    check_curves(curves, grid, 2)?;
    let n = curves.len();
    let pairs = choose2(n);
    let mut depth = vec![0.0; n];
    let mut column = vec![0.0; n];
    for (g, w) in grid.weights().iter().enumerate() {
        for (c, curve) in column.iter_mut().zip(curves) {
            *c = curve[g];
        }
        column.sort_by(f64::total_cmp);
        for (d, curve) in depth.iter_mut().zip(curves) {
            let x = curve[g];
            let below = column.partition_point(|&v| v < x);
            let above = n - column.partition_point(|&v| v <= x);
            let inside = pairs - choose2(below) - choose2(above);
            *d += w * inside / pairs;
        }
    }
    let span = grid.span();
    Ok(depth.into_iter().map(|d| d / span).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBoxplot {
    pub mbd: Vec<f64>,
    /// Curve indices from deepest to shallowest.
    pub depth_order: Vec<usize>,
    pub median_index: usize,
    pub central50_lower: Vec<f64>,
    pub central50_upper: Vec<f64>,
    pub fence_lower: Vec<f64>,
    pub fence_upper: Vec<f64>,
    pub central95_lower: Vec<f64>,
    pub central95_upper: Vec<f64>,
    /// Curves leaving the fences anywhere, ascending.
    pub outlier_indices: Vec<usize>,
}

fn envelope(curves: &[Vec<f64>], members: &[usize], g: usize) -> (f64, f64) {
    members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        (lo.min(curves[i][g]), hi.max(curves[i][g]))
    })
}

/// Functional boxplot of one coordinate evaluated on `grid`.
pub fn functional_boxplot(curves: &[Vec<f64>], grid: &EvaluationGrid) -> Result<FunctionalBoxplot> {
    check_curves(curves, grid, 4)?;
    let n = curves.len();
    let mbd = modified_band_depth(curves, grid)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mbd[b].total_cmp(&mbd[a]));
    let c50 = &order[..central_size(n, 0.5)?];
    let c95 = &order[..central_size(n, 0.95)?];
    let gsize = grid.len();
    let mut bp = FunctionalBoxplot {
        median_index: order[0],
        depth_order: order.clone(),
        mbd,
        central50_lower: Vec::with_capacity(gsize),
        central50_upper: Vec::with_capacity(gsize),
        fence_lower: Vec::with_capacity(gsize),
        fence_upper: Vec::with_capacity(gsize),
        central95_lower: Vec::with_capacity(gsize),
        central95_upper: Vec::with_capacity(gsize),
        outlier_indices: Vec::new(),
    };
    for g in 0..gsize {
        let (lo, hi) = envelope(curves, c50, g);
        let width = hi - lo;
        bp.central50_lower.push(lo);
        bp.central50_upper.push(hi);
        bp.fence_lower.push(lo - FENCE_FACTOR * width);
        bp.fence_upper.push(hi + FENCE_FACTOR * width);
        let (lo95, hi95) = envelope(curves, c95, g);
        bp.central95_lower.push(lo95);
        bp.central95_upper.push(hi95);
    }
    bp.outlier_indices = (0..n)
        .filter(|&i| {
            curves[i]
                .iter()
                .enumerate()
                .any(|(g, &x)| x < bp.fence_lower[g] || x > bp.fence_upper[g])
        })
        .collect();
    Ok(bp)
}
