//! Classical mission-profile summaries of a selected set of devices:
//! residence-time histograms, endpoint histograms and the comparison of a
//! functional central set with a pointwise quantile selection.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::EvaluationGrid;
use crate::error::{Error, Result};
use crate::fdcore::FunctionalSample;
use crate::stats::{quantile_sorted, sorted_copy};

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::Config("a histogram needs at least 2 edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "histogram edges must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `m` equal bins; the upper edge is nudged past `hi` so `hi` itself is
/// counted in the last bin.
pub fn uniform_edges(lo: f64, hi: f64, m: usize) -> Result<Vec<f64>> {
    if m == 0 || !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Config(format!("invalid uniform bins {lo}..{hi} × {m}")));
    }
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let top = hi + (hi - lo) * 1e-9;
    let mut edges: Vec<f64> = (0..=m).map(|k| lo + (top - lo) * k as f64 / m as f64).collect();
    edges[m] = top;
    Ok(edges)
}

#[derive(Debug, Clone, Copy)]
enum Bucket {
    Under,
    Bin(usize),
    Over,
}

// Bins are half-open [a_{m-1}, a_m).
fn bucket(edges: &[f64], x: f64) -> Bucket {
    if x < edges[0] {
        Bucket::Under
    } else if x >= edges[edges.len() - 1] {
        Bucket::Over
    } else {
        Bucket::Bin(edges.partition_point(|&e| e <= x) - 1)
    }
}

fn check_selection(sample: &FunctionalSample, selection: &[usize]) -> Result<()> {
    if selection.is_empty() {
        return Err(Error::Input("empty device selection".into()));
    }
    if let Some(&i) = selection.iter().find(|&&i| i >= sample.len()) {
        return Err(Error::Input(format!(
            "device index {i} out of range for {} devices",
            sample.len()
        )));
    }
    Ok(())
}

fn check_coordinate(sample: &FunctionalSample, coordinate: usize) -> Result<()> {
    if coordinate >= sample.p() {
        return Err(Error::Config(format!(
            "coordinate {coordinate} out of range for {} coordinates",
            sample.p()
        )));
    }
    Ok(())
}

/// Bins of one coordinate plus the quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSpec {
    coordinate: usize,
    edges: Vec<f64>,
    grid: EvaluationGrid,
}

impl HistogramSpec {
    pub fn new(coordinate: usize, edges: Vec<f64>, grid: EvaluationGrid) -> Result<Self> {
        check_edges(&edges)?;
        Ok(Self {
            coordinate,
            edges,
            grid,
        })
    }

    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn grid(&self) -> &EvaluationGrid {
        &self.grid
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Sum,
    PerDeviceAverage,
}

/// Time spent by the selected devices in each bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionProfileHistogram {
    pub coordinate: usize,
    pub edges: Vec<f64>,
    /// Summed over the devices.
    pub duration_sum: Vec<f64>,
    /// `duration_sum / device_count`.
    pub duration_avg: Vec<f64>,
    pub underflow_sum: f64,
    pub overflow_sum: f64,
    pub device_count: usize,
    /// Length of the integration window.
    pub total_time: f64,
    pub grid_size: usize,
    /// Normalization shown by default.
    pub display: Normalization,
}

impl MissionProfileHistogram {
    /// All time including the out-of-range buckets; equals
    /// `device_count · total_time` up to rounding.
    pub fn accounted_time(&self) -> f64 {
        self.duration_sum.iter().sum::<f64>() + self.underflow_sum + self.overflow_sum
    }

    pub fn conservation_error(&self) -> f64 {
        let expected = self.device_count as f64 * self.total_time;
        (self.accounted_time() - expected).abs() / expected
    }

    pub fn displayed(&self) -> &[f64] {
        match self.display {
            Normalization::Sum => &self.duration_sum,
            Normalization::PerDeviceAverage => &self.duration_avg,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Residence time of coordinate `spec.coordinate()` in each bin, summed
/// over the devices in `selection`.
pub fn residence_histogram(
    sample: &FunctionalSample,
    selection: &[usize],
    spec: &HistogramSpec,
) -> Result<MissionProfileHistogram> {
    check_selection(sample, selection)?;
    check_coordinate(sample, spec.coordinate)?;
    let m = spec.bins();
    let j = spec.coordinate;
    let times = spec.grid.times();
    let weights = spec.grid.weights();
    let per_device: Vec<Result<Vec<f64>>> = selection
        .par_iter()
        .map(|&i| {
            // [under, bins.., over]
            let mut acc = vec![0.0; m + 2];
            let datum = &sample.data()[i];
            for (&t, &w) in times.iter().zip(weights) {
                let slot = match bucket(&spec.edges, datum.eval_coordinate(j, t)?) {
                    Bucket::Under => 0,
                    Bucket::Bin(b) => b + 1,
                    Bucket::Over => m + 1,
                };
                acc[slot] += w;
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![0.0; m + 2];
    for acc in per_device {
        for (t, a) in total.iter_mut().zip(acc?) {
            *t += a;
        }
    }
    let count = selection.len();
    let duration_sum = total[1..=m].to_vec();
    Ok(MissionProfileHistogram {
        coordinate: j,
        edges: spec.edges.clone(),
        duration_avg: duration_sum.iter().map(|d| d / count as f64).collect(),
        duration_sum,
        underflow_sum: total[0],
        overflow_sum: total[m + 1],
        device_count: count,
        total_time: spec.grid.span(),
        grid_size: spec.grid.len(),
        display: Normalization::PerDeviceAverage,
    })
}

/// Device counts per bin of a coordinate's value at the end of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointHistogram {
    pub coordinate: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub underflow: usize,
    pub overflow: usize,
}

impl EndpointHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.underflow + self.overflow
    }
}

/// Every device's value of `coordinate` at the domain end.
pub fn endpoint_values(sample: &FunctionalSample, coordinate: usize) -> Result<Vec<f64>> {
    check_coordinate(sample, coordinate)?;
    let t = sample.domain_end();
    sample
        .data()
        .iter()
        .map(|d| d.eval_coordinate(coordinate, t))
        .collect()
}

pub fn endpoint_histogram(
    sample: &FunctionalSample,
    selection: &[usize],
    coordinate: usize,
    edges: &[f64],
) -> Result<EndpointHistogram> {
    check_selection(sample, selection)?;
    check_edges(edges)?;
    let values = endpoint_values(sample, coordinate)?;
    let mut hist = EndpointHistogram {
        coordinate,
        edges: edges.to_vec(),
        counts: vec![0; edges.len() - 1],
        underflow: 0,
        overflow: 0,
    };
    for &i in selection {
        match bucket(edges, values[i]) {
            Bucket::Under => hist.underflow += 1,
            Bucket::Bin(b) => hist.counts[b] += 1,
            Bucket::Over => hist.overflow += 1,
        }
    }
    Ok(hist)
}

/// Devices whose endpoint value lies in the closed interval between the
/// `lower_q` and `upper_q` empirical quantiles (linear interpolation between
/// order statistics, Hyndman–Fan type 7). Indices ascending.
pub fn pointwise_quantile_selection(
    sample: &FunctionalSample,
    coordinate: usize,
    lower_q: f64,
    upper_q: f64,
) -> Result<Vec<usize>> {
    if !(0.0 <= lower_q && lower_q < upper_q && upper_q <= 1.0) {
        return Err(Error::Config(format!(
            "quantile levels must satisfy 0 <= {lower_q} < {upper_q} <= 1"
        )));
    }
    if sample.is_empty() {
        return Err(Error::Input("empty sample".into()));
    }
    let values = endpoint_values(sample, coordinate)?;
    let sorted = sorted_copy(&values);
    let lo = quantile_sorted(&sorted, lower_q);
    let hi = quantile_sorted(&sorted, upper_q);
    Ok((0..values.len())
        .filter(|&i| lo <= values[i] && values[i] <= hi)
        .collect())
}

/// Endpoint histograms of two selections and their signed difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionComparison {
    pub pointwise: EndpointHistogram,
    pub functional: EndpointHistogram,
    /// `pointwise − functional` per bin.
    pub difference: Vec<i64>,
    pub underflow_difference: i64,
    pub overflow_difference: i64,
}

pub fn selection_comparison(
    sample: &FunctionalSample,
    functional: &[usize],
    pointwise: &[usize],
    coordinate: usize,
    edges: &[f64],
) -> Result<SelectionComparison> {
    let hp = endpoint_histogram(sample, pointwise, coordinate, edges)?;
    let hf = endpoint_histogram(sample, functional, coordinate, edges)?;
    let diff = |a: usize, b: usize| a as i64 - b as i64;
    Ok(SelectionComparison {
        difference: hp.counts.iter().zip(&hf.counts).map(|(&a, &b)| diff(a, b)).collect(),
        underflow_difference: diff(hp.underflow, hf.underflow),
        overflow_difference: diff(hp.overflow, hf.overflow),
        pointwise: hp,
        functional: hf,
    })
}

/// One row of a classical operating-hours table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
    pub duration_sum: f64,
    pub duration_avg: f64,
    /// Fraction of all accounted time.
    pub share: f64,
}

/// Histogram rows in bin order; out-of-range buckets get their own rows
/// (bounded by ±∞) when they hold any time. Shares sum to one.
pub fn classical_profile_export(
    hist: &MissionProfileHistogram,
    labels: Option<&[String]>,
) -> Result<Vec<ProfileRow>> {
    let m = hist.duration_sum.len();
    if let Some(l) = labels {
        if l.len() != m {
            return Err(Error::Input(format!("{} labels for {m} bins", l.len())));
        }
    }
    let total = hist.accounted_time();
    let share = |d: f64| if total > 0.0 { d / total } else { 0.0 };
    let avg = |d: f64| d / hist.device_count as f64;
    let mut rows = Vec::with_capacity(m + 2);
    if hist.underflow_sum > 0.0 {
        rows.push(ProfileRow {
            label: "underflow".into(),
            lower: f64::NEG_INFINITY,
            upper: hist.edges[0],
            duration_sum: hist.underflow_sum,
            duration_avg: avg(hist.underflow_sum),
            share: share(hist.underflow_sum),
        });
    }
    for b in 0..m {
        let (lower, upper) = (hist.edges[b], hist.edges[b + 1]);
        rows.push(ProfileRow {
            label: labels.map_or_else(|| format!("[{lower}, {upper})"), |l| l[b].clone()),
            lower,
            upper,
            duration_sum: hist.duration_sum[b],
            duration_avg: hist.duration_avg[b],
            share: share(hist.duration_sum[b]),
        });
    }
    if hist.overflow_sum > 0.0 {
        rows.push(ProfileRow {
            label: "overflow".into(),
            lower: hist.edges[m],
            upper: f64::INFINITY,
            duration_sum: hist.overflow_sum,
            duration_avg: avg(hist.overflow_sum),
            share: share(hist.overflow_sum),
        });
    }
    Ok(rows)
}

/// Header `bin_lower,bin_upper,duration_sum,duration_avg,share`.
pub fn write_profile_csv<W: Write>(rows: &[ProfileRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lower", "bin_upper", "duration_sum", "duration_avg", "share"])?;
    for r in rows {
        w.write_record([
            r.lower.to_string(),
            r.upper.to_string(),
            r.duration_sum.to_string(),
            r.duration_avg.to_string(),
            r.share.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn bin_bounds(edges: &[f64]) -> Vec<(f64, f64)> {
    let m = edges.len() - 1;
    let mut b = vec![(f64::NEG_INFINITY, edges[0])];
    b.extend((0..m).map(|k| (edges[k], edges[k + 1])));
    b.push((edges[m], f64::INFINITY));
    b
}

/// Header `bin_lower,bin_upper,count`, out-of-range rows included.
pub fn write_endpoint_csv<W: Write>(hist: &EndpointHistogram, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lower", "bin_upper", "count"])?;
    let mut counts = vec![hist.underflow];
    counts.extend(&hist.counts);
    counts.push(hist.overflow);
    for ((lo, hi), c) in bin_bounds(&hist.edges).into_iter().zip(counts) {
        w.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Header `bin_lower,bin_upper,pointwise,functional,difference`.
pub fn write_comparison_csv<W: Write>(cmp: &SelectionComparison, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lower", "bin_upper", "pointwise", "functional", "difference"])?;
    let (p, f) = (&cmp.pointwise, &cmp.functional);
    let mut rows = vec![(p.underflow, f.underflow, cmp.underflow_difference)];
    rows.extend((0..p.counts.len()).map(|b| (p.counts[b], f.counts[b], cmp.difference[b])));
    rows.push((p.overflow, f.overflow, cmp.overflow_difference));
    for ((lo, hi), (a, b, d)) in bin_bounds(&p.edges).into_iter().zip(rows) {
        w.write_record([lo.to_string(), hi.to_string(), a.to_string(), b.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
