//! Skew-adjusted projection outlyingness and its functional extensions.
//!
//! Univariate samples are scored against the adjusted boxplot, whose fences
//! are tilted by the medcouple. Multivariate points take the maximum over a
//! set of projection directions; curves average that pointwise score over
//! time (fAO) or split its signed version into a mean (MO) and a variation
//! (VO) part.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::EvaluationGrid;
use super::medcouple::medcouple_sorted;
use crate::error::{Error, Result};
use crate::fdcore::{FunctionalSample, GriddedValues};
use crate::stats::{median_in_place, median_sorted, quantile_sorted, sorted_copy};

/// Whisker multiplier of the (adjusted) boxplot.
pub const FENCE_FACTOR: f64 = 1.5;

// IQR below this fraction of the sample's magnitude is treated as zero.
const RELATIVE_SCALE_FLOOR: f64 = 1e-12;

/// Medcouple-adjusted boxplot of a univariate sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedBoxplot {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub medcouple: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Most extreme observations inside the fences.
    pub lower_whisker: f64,
    pub upper_whisker: f64,
}

impl AdjustedBoxplot {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.len() < 4 {
            return Err(Error::Input(format!(
                "adjusted boxplot needs at least 4 values, got {}",
                sample.len()
            )));
        }
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("adjusted boxplot of non-finite values".into()));
        }
        Self::from_sorted(&sorted_copy(sample))
    }

    pub(crate) fn from_sorted(sorted: &[f64]) -> Result<Self> {
        let n = sorted.len();
        let q1 = quantile_sorted(sorted, 0.25);
        let q3 = quantile_sorted(sorted, 0.75);
        let iqr = q3 - q1;
        let magnitude = sorted[0].abs().max(sorted[n - 1].abs());
        if !(iqr > RELATIVE_SCALE_FLOOR * magnitude) {
            return Err(Error::DegenerateScale(format!(
                "interquartile range {iqr} is zero at magnitude {magnitude}"
            )));
        }
        let median = median_sorted(sorted);
        let mc = medcouple_sorted(sorted);
        let (low_exp, high_exp) = if mc >= 0.0 { (-4.0 * mc, 3.0 * mc) } else { (-3.0 * mc, 4.0 * mc) };
        let lower_fence = q1 - FENCE_FACTOR * low_exp.exp() * iqr;
        let upper_fence = q3 + FENCE_FACTOR * high_exp.exp() * iqr;
        let lower_whisker = sorted[sorted.partition_point(|&x| x < lower_fence)];
        let upper_whisker = sorted[sorted.partition_point(|&x| x <= upper_fence) - 1];
        if !(upper_whisker > median && lower_whisker < median) {
            return Err(Error::DegenerateScale(
                "a whisker coincides with the median".into(),
            ));
        }
        Ok(Self {
            median,
            q1,
            q3,
            medcouple: mc,
            lower_fence,
            upper_fence,
            lower_whisker,
            upper_whisker,
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Distance from the median in units of the whisker on `z`'s side.
    pub fn outlyingness(&self, z: f64) -> f64 {
        if z > self.median {
            (z - self.median) / (self.upper_whisker - self.median)
        } else {
            (self.median - z) / (self.median - self.lower_whisker)
        }
    }
}

/// Adjusted outlyingness of `z` relative to a univariate sample.
pub fn adjusted_outlyingness_1d(z: f64, sample: &[f64]) -> Result<f64> {
    Ok(AdjustedBoxplot::new(sample)?.outlyingness(z))
}

/// How many projection directions to draw and from which seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionConfig {
    /// `None` selects `max(250, 50·p)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl ProjectionConfig {
    pub fn direction_count(&self, p: usize) -> usize {
        self.count.unwrap_or_else(|| (50 * p).max(250))
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == Some(0) {
            return Err(Error::Config("direction count must be positive".into()));
        }
        Ok(())
    }
}

/// Unit projection directions in `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    seed: u64,
    dim: usize,
    directions: Vec<f64>,
}

impl DirectionSet {
    /// Normalizes the given vectors; zero vectors are rejected.
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Input("empty direction set".into()))?;
        let mut directions = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            if v.len() != dim {
                return Err(Error::Input("directions of mixed dimension".into()));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Input("zero or non-finite direction".into()));
            }
            directions.extend(v.iter().map(|x| x / norm));
        }
        Ok(Self {
            seed: 0,
            dim,
            directions,
        })
    }

    /// `count` directions uniform on the unit sphere.
    pub fn uniform(dim: usize, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut directions = Vec::with_capacity(count * dim);
        for _ in 0..count {
            push_uniform(&mut rng, dim, &mut directions);
        }
        Self {
            seed,
            dim,
            directions,
        }
    }

    /// Half normalized differences of random point pairs of `cloud`
    /// (`n × dim`, row-major), half uniform on the sphere. `stream` selects
    /// an independent random stream for the same seed. In one dimension the
    /// sphere is `{+1, −1}` and exactly those two directions are returned.
    pub fn for_cloud(cloud: &[f64], dim: usize, count: usize, seed: u64, stream: u64) -> Self {
        if dim == 1 {
            return Self {
                seed,
                dim,
                directions: vec![1.0, -1.0],
            };
        }
        let n = cloud.len() / dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut directions = Vec::with_capacity(count * dim);
        let pair_count = if n >= 2 { count / 2 } else { 0 };
        for _ in 0..pair_count {
            let mut found = false;
            for _ in 0..16 {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n - 1);
                let b = if b >= a { b + 1 } else { b };
                let diff: Vec<f64> = (0..dim)
                    .map(|j| cloud[a * dim + j] - cloud[b * dim + j])
                    .collect();
                let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 && norm.is_finite() {
                    directions.extend(diff.iter().map(|x| x / norm));
                    found = true;
                    break;
                }
            }
            if !found {
                push_uniform(&mut rng, dim, &mut directions);
            }
        }
        for _ in pair_count..count {
            push_uniform(&mut rng, dim, &mut directions);
        }
        Self {
            seed,
            dim,
            directions,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.directions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.directions.chunks_exact(self.dim)
    }
}

fn push_uniform(rng: &mut ChaCha8Rng, dim: usize, out: &mut Vec<f64>) {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.extend(v.iter().map(|x| x / norm));
            return;
        }
    }
}

fn project(cloud: &[f64], dim: usize, direction: &[f64]) -> Vec<f64> {
    cloud
        .chunks_exact(dim)
        .map(|row| row.iter().zip(direction).map(|(x, a)| x * a).sum())
        .collect()
}

fn dot(x: &[f64], a: &[f64]) -> f64 {
    x.iter().zip(a).map(|(x, a)| x * a).sum()
}

/// Max-over-directions outlyingness of every point of `points` relative to
/// `cloud`; `Err(skipped)` when more than half the directions are degenerate.
fn projected_outlyingness(
    points: &[f64],
    cloud: &[f64],
    dirs: &DirectionSet,
) -> std::result::Result<Vec<f64>, usize> {
    let dim = dirs.dim();
    let mut scores = vec![0.0f64; points.len() / dim];
    let mut skipped = 0;
    for a in dirs.iter() {
        let mut proj = project(cloud, dim, a);
        proj.sort_by(f64::total_cmp);
        match AdjustedBoxplot::from_sorted(&proj) {
            Ok(bp) => {
                for (s, x) in scores.iter_mut().zip(points.chunks_exact(dim)) {
                    *s = s.max(bp.outlyingness(dot(x, a)));
                }
            }
            Err(_) => skipped += 1,
        }
    }
    if 2 * skipped > dirs.len() {
        Err(skipped)
    } else {
        Ok(scores)
    }
}

/// `max_a AO(aᵀx; aᵀcloud)` over the direction set; degenerate directions
/// are skipped.
pub fn adjusted_outlyingness_point(x: &[f64], cloud: &[f64], dirs: &DirectionSet) -> Result<f64> {
    let dim = dirs.dim();
    if x.len() != dim || cloud.len() % dim != 0 {
        return Err(Error::Input(format!(
            "point/cloud dimensions do not match directions of dimension {dim}"
        )));
    }
    let n = cloud.len() / dim;
    if n < 4 {
        return Err(Error::Input(format!("cloud needs at least 4 points, got {n}")));
    }
    projected_outlyingness(x, cloud, dirs)
        .map(|s| s[0])
        .map_err(|skipped| {
            Error::DegenerateScale(format!(
                "{skipped} of {} projection directions have zero spread",
                dirs.len()
            ))
        })
}

/// Pointwise outlyingness of every curve at every grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseOutlyingness {
    /// `ao[g][i]`.
    pub ao: Vec<Vec<f64>>,
    /// Coordinatewise cross-sectional median, `median[g][j]`.
    pub median: Vec<Vec<f64>>,
}

pub fn pointwise_outlyingness(
    values: &GriddedValues,
    config: &ProjectionConfig,
) -> Result<PointwiseOutlyingness> {
    config.validate()?;
    let (n, p) = (values.n(), values.p());
    if n < 4 {
        return Err(Error::Input(format!(
            "outlyingness needs at least 4 curves, got {n}"
        )));
    }
    let count = config.direction_count(p);
    let per_time: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..values.times().len())
        .into_par_iter()
        .map(|g| {
            let cloud = values.cross_section(g);
            let dirs = DirectionSet::for_cloud(cloud, p, count, config.seed, g as u64);
            let ao = projected_outlyingness(cloud, cloud, &dirs).map_err(|skipped| {
                Error::DegenerateCrossSection {
                    t: values.times()[g],
                    skipped,
                    total: dirs.len(),
                }
            })?;
            let median = (0..p)
                .map(|j| {
                    let mut col: Vec<f64> = (0..n).map(|i| cloud[i * p + j]).collect();
                    median_in_place(&mut col)
                })
                .collect();
            Ok((ao, median))
        })
        .collect();
    let mut ao = Vec::with_capacity(per_time.len());
    let mut median = Vec::with_capacity(per_time.len());
    for r in per_time {
        let (a, m) = r?;
        ao.push(a);
        median.push(m);
    }
    Ok(PointwiseOutlyingness { ao, median })
}

/// Time-averaged pointwise multivariate adjusted outlyingness per device.
pub fn functional_adjusted_outlyingness(
    sample: &FunctionalSample,
    grid: &EvaluationGrid,
    config: &ProjectionConfig,
) -> Result<Vec<f64>> {
    let values = sample.evaluate(grid.times())?;
    let pw = pointwise_outlyingness(&values, config)?;
    Ok(fao_from_gridded(&pw, grid, sample.len()))
}

pub(crate) fn fao_from_gridded(pw: &PointwiseOutlyingness, grid: &EvaluationGrid, n: usize) -> Vec<f64> {
    (0..n).map(|i| grid.time_average(|g| pw.ao[g][i])).collect()
}

/// Mean (MO), variation (VO) and total (FO) directional outlyingness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalOutlyingness {
    pub mo: Vec<f64>,
    pub vo: f64,
    pub fo: f64,
}

pub fn directional_outlyingness(
    sample: &FunctionalSample,
    grid: &EvaluationGrid,
    config: &ProjectionConfig,
) -> Result<Vec<DirectionalOutlyingness>> {
    let values = sample.evaluate(grid.times())?;
    let pw = pointwise_outlyingness(&values, config)?;
    Ok(directional_from_gridded(&pw, &values, grid))
}

/// Both score families from one pass over the grid.
pub fn outlyingness_scores(
    sample: &FunctionalSample,
    grid: &EvaluationGrid,
    config: &ProjectionConfig,
) -> Result<(Vec<f64>, Vec<DirectionalOutlyingness>)> {
    let values = sample.evaluate(grid.times())?;
    let pw = pointwise_outlyingness(&values, config)?;
    Ok((
        fao_from_gridded(&pw, grid, sample.len()),
        directional_from_gridded(&pw, &values, grid),
    ))
}

// o_i(t) = AO_i(t) · (x_i(t) − med(t)) / ‖x_i(t) − med(t)‖, zero at the median.
fn signed_outlyingness(pw: &PointwiseOutlyingness, values: &GriddedValues, g: usize, i: usize) -> Vec<f64> {
    let p = values.p();
    let diff: Vec<f64> = (0..p).map(|j| values.value(g, i, j) - pw.median[g][j]).collect();
    let norm = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; p];
    }
    diff.iter().map(|d| pw.ao[g][i] * d / norm).collect()
}

pub(crate) fn directional_from_gridded(
    pw: &PointwiseOutlyingness,
    values: &GriddedValues,
    grid: &EvaluationGrid,
) -> Vec<DirectionalOutlyingness> {
    let (n, p, gsize) = (values.n(), values.p(), grid.len());
    (0..n)
        .map(|i| {
            let signed: Vec<Vec<f64>> = (0..gsize).map(|g| signed_outlyingness(pw, values, g, i)).collect();
            let mo: Vec<f64> = (0..p).map(|j| grid.time_average(|g| signed[g][j])).collect();
            let vo = grid.time_average(|g| {
                signed[g].iter().zip(&mo).map(|(o, m)| (o - m) * (o - m)).sum()
            });
            let fo = grid.time_average(|g| signed[g].iter().map(|o| o * o).sum());
            DirectionalOutlyingness { mo, vo, fo }
        })
        .collect()
}
