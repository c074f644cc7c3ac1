//! Penalized least-squares smoothing of raw telemetry into basis coefficients.
//!
//! For one coordinate the fitted coefficients minimise
//! `‖y − Φc‖² + λ cᵀRc`, i.e. they solve `(ΦᵀΦ + λR) c = Φᵀy`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use crate::fdcore::{BasisSet, FunctionalDatum, FunctionalSample};

/// Observations of one parameter of one device.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    device_id: String,
    coordinate: usize,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl RawSeries {
    pub fn new(
        device_id: impl Into<String>,
        coordinate: usize,
        times: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let device_id = device_id.into();
        if times.len() != values.len() {
            return Err(Error::Input(format!(
                "device {device_id} coordinate {coordinate}: {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::Input(format!(
                "device {device_id} coordinate {coordinate}: need at least 2 observations"
            )));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "device {device_id} coordinate {coordinate}: non-finite observation"
            )));
        }
        if times[0] < 0.0 {
            return Err(Error::Input(format!(
                "device {device_id} coordinate {coordinate}: negative time {}",
                times[0]
            )));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!(
                "device {device_id} coordinate {coordinate}: times not strictly increasing at t = {}",
                w[1]
            )));
        }
        Ok(Self {
            device_id,
            coordinate,
            times,
            values,
        })
    }

    pub fn device_id(&self) -> &str {
        &self.device_id
    }

    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_penalty_order")]
    pub penalty_order: usize,
    /// When set, λ is chosen per coordinate by GCV over this grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_penalty_order() -> usize {
    2
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            penalty_order: default_penalty_order(),
            lambda_grid: None,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() {
                return Err(Error::Config("lambda grid is empty".into()));
            }
            if let Some(bad) = grid.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
                return Err(Error::Config(format!(
                    "lambda grid entries must be positive and finite, got {bad}"
                )));
            }
        }
        Ok(())
    }
}

// Smallest |diagonal| of the triangular factor, relative to the largest,
// below which the penalized system counts as singular.
const PIVOT_TOLERANCE: f64 = 1e-10;

/// Least-squares pieces shared by every λ for one series.
///
/// The penalized problem is solved as the stacked least-squares system
/// `[R_Φ; √λ B] c ≈ [Qᵀy; 0]`, where `Φ = Q R_Φ` and `BᵀB = R`. It has the
/// same minimiser as `(ΦᵀΦ + λR) c = Φᵀy` at the square root of its
/// condition number.
struct PenalizedSystem<'a> {
    phi: DMatrix<f64>,
    phi_r: DMatrix<f64>,
    projected: DVector<f64>,
    factor: &'a DMatrix<f64>,
}

/// Upper-triangular factor of `ΦᵀΦ + λR` and the solution at one λ.
struct PenalizedSolve {
    upper: DMatrix<f64>,
    coefficients: DVector<f64>,
}

impl<'a> PenalizedSystem<'a> {
    fn new(basis: &BasisSystem, series: &RawSeries, factor: &'a DMatrix<f64>) -> Result<Self> {
        if let Some(&t) = series.times.iter().find(|&&t| !basis.contains(t)) {
            return Err(Error::Domain {
                t,
                start: basis.domain_start(),
                end: basis.domain_end(),
            });
        }
        let phi = basis.design_matrix(&series.times)?;
        let mut qty = DVector::from_column_slice(&series.values);
        let qr = phi.clone().qr();
        qr.q_tr_mul(&mut qty);
        let phi_r = qr.r();
        let projected = qty.rows(0, phi_r.nrows()).into_owned();
        Ok(Self {
            phi,
            phi_r,
            projected,
            factor,
        })
    }

    fn solve(&self, lambda: f64, series: &RawSeries) -> Result<PenalizedSolve> {
        let k = self.phi.ncols();
        let (top, bottom) = (self.phi_r.nrows(), self.factor.nrows());
        let deficient = || {
            Error::RankDeficient(format!(
                "device {} coordinate {}: ΦᵀΦ + λR is singular for λ = {lambda}, q = {}, K = {k}",
                series.device_id,
                series.coordinate,
                series.len(),
            ))
        };
        let rows = if lambda > 0.0 { top + bottom } else { top };
        if rows < k {
            return Err(deficient());
        }
        let mut stacked = DMatrix::zeros(rows, k);
        stacked.rows_mut(0, top).copy_from(&self.phi_r);
        let mut rhs = DVector::zeros(rows);
        rhs.rows_mut(0, top).copy_from(&self.projected);
        if lambda > 0.0 {
            stacked.rows_mut(top, bottom).copy_from(&(self.factor * lambda.sqrt()));
        }
        let qr = stacked.qr();
        qr.q_tr_mul(&mut rhs);
        let upper = qr.r();
        let diag = upper.diagonal().abs();
        if !(diag.max() > 0.0) || diag.min() <= PIVOT_TOLERANCE * diag.max() {
            return Err(deficient());
        }
        let coefficients = upper
            .solve_upper_triangular(&rhs.rows(0, k).into_owned())
            .ok_or_else(deficient)?;
        Ok(PenalizedSolve {
            upper,
            coefficients,
        })
    }
}

/// Coefficients `c` solving `(ΦᵀΦ + λR) c = Φᵀy` with the basis' own penalty.
pub fn fit_coordinate(basis: &BasisSystem, series: &RawSeries, lambda: f64) -> Result<DVector<f64>> {
    fit_with_factor(basis, basis.penalty_factor(), series, lambda)
}

fn fit_with_factor(
    basis: &BasisSystem,
    factor: &DMatrix<f64>,
    series: &RawSeries,
    lambda: f64,
) -> Result<DVector<f64>> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    let system = PenalizedSystem::new(basis, series, factor)?;
    Ok(system.solve(lambda, series)?.coefficients)
}

/// Value of the penalized objective `‖y − Φc‖² + λ cᵀRc`.
pub fn penalized_objective(
    basis: &BasisSystem,
    series: &RawSeries,
    lambda: f64,
    coefficients: &DVector<f64>,
) -> Result<f64> {
    let phi = basis.design_matrix(&series.times)?;
    let resid = DVector::from_column_slice(&series.values) - phi * coefficients;
    let rough = coefficients.dot(&(basis.penalty() * coefficients));
    Ok(resid.norm_squared() + lambda * rough)
}

/// GCV score and effective degrees of freedom at one λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcvPoint {
    pub lambda: f64,
    pub score: f64,
    pub trace: f64,
}

/// `GCV(λ) = q‖y − ŷ‖² / (q − tr H)²` for every grid point; singular or
/// saturated (`tr H ≥ q`) points yield `None`.
pub fn gcv_curve(
    basis: &BasisSystem,
    series: &RawSeries,
    lambda_grid: &[f64],
) -> Result<Vec<Option<GcvPoint>>> {
    let system = PenalizedSystem::new(basis, series, basis.penalty_factor())?;
    let y = DVector::from_column_slice(&series.values);
    let q = series.len() as f64;
    Ok(lambda_grid
        .iter()
        .map(|&lambda| {
            let sol = system.solve(lambda, series).ok()?;
            let rss = (&y - &system.phi * &sol.coefficients).norm_squared();
            // tr Φ(UᵀU)⁻¹Φᵀ = ‖U⁻ᵀΦᵀ‖²_F
            let w = sol.upper.tr_solve_upper_triangular(&system.phi.transpose())?;
            let trace = w.norm_squared();
            let dof = q - trace;
            (dof > 0.0).then(|| GcvPoint {
                lambda,
                score: q * rss / (dof * dof),
                trace,
            })
        })
        .collect())
}

/// Grid element minimising GCV; near-ties resolve to the larger λ.
pub fn select_lambda_gcv(basis: &BasisSystem, series: &RawSeries, lambda_grid: &[f64]) -> Result<f64> {
    if lambda_grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    let curve = gcv_curve(basis, series, lambda_grid)?;
    let valid: Vec<GcvPoint> = curve.into_iter().flatten().collect();
    let best = valid
        .iter()
        .map(|p| p.score)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::RankDeficient(format!(
            "device {} coordinate {}: no grid λ gives a nonsingular, unsaturated fit",
            series.device_id, series.coordinate
        )));
    }
    // Scores below this are rounding noise relative to the data scale.
    let mean_sq = series.values.iter().map(|v| v * v).sum::<f64>() / series.len() as f64;
    let tol = 1e-12 * mean_sq + f64::MIN_POSITIVE;
    Ok(valid
        .iter()
        .filter(|p| p.score <= best + tol)
        .map(|p| p.lambda)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Per-coordinate outcome of [`smooth_device`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateFit {
    pub coordinate: usize,
    pub lambda: f64,
    /// Root mean squared residual at the observation times.
    pub rmse: f64,
}

/// Fits every coordinate of one device independently.
pub fn smooth_device(
    bases: &BasisSet,
    series_set: &[RawSeries],
    config: &SmoothingConfig,
) -> Result<FunctionalDatum> {
    smooth_device_with_summary(bases, series_set, config).map(|(d, _)| d)
}

pub fn smooth_device_with_summary(
    bases: &BasisSet,
    series_set: &[RawSeries],
    config: &SmoothingConfig,
) -> Result<(FunctionalDatum, Vec<CoordinateFit>)> {
    config.validate()?;
    let p = bases.p();
    let mut ordered: Vec<Option<&RawSeries>> = vec![None; p];
    for s in series_set {
        let slot = ordered.get_mut(s.coordinate).ok_or_else(|| {
            Error::Input(format!(
                "device {}: coordinate {} exceeds p = {p}",
                s.device_id, s.coordinate
            ))
        })?;
        if slot.replace(s).is_some() {
            return Err(Error::Input(format!(
                "device {}: coordinate {} given twice",
                s.device_id, s.coordinate
            )));
        }
    }
    let mut rows = Vec::with_capacity(p);
    let mut summary = Vec::with_capacity(p);
    for (j, slot) in ordered.into_iter().enumerate() {
        let series = slot.ok_or_else(|| {
            Error::Input(format!(
                "device {}: missing coordinate {j}",
                series_set.first().map(|s| s.device_id.as_str()).unwrap_or("?")
            ))
        })?;
        let basis = bases.coordinate(j);
        let (c, lambda) = fit_one(basis, series, config).map_err(|e| e.in_coordinate(j))?;
        let phi = basis.design_matrix(&series.times)?;
        let resid = DVector::from_column_slice(&series.values) - phi * &c;
        summary.push(CoordinateFit {
            coordinate: j,
            lambda,
            rmse: (resid.norm_squared() / series.len() as f64).sqrt(),
        });
        rows.push(c);
    }
    Ok((FunctionalDatum::new(bases.clone(), rows)?, summary))
}

fn fit_one(
    basis: &BasisSystem,
    series: &RawSeries,
    config: &SmoothingConfig,
) -> Result<(DVector<f64>, f64)> {
    let lambda = match &config.lambda_grid {
        Some(grid) => select_lambda_gcv(basis, series, grid)?,
        None => config.lambda,
    };
    let c = if config.penalty_order == basis.penalty_order() {
        fit_coordinate(basis, series, lambda)?
    } else {
        let factor = basis.penalty_factor_matrix(config.penalty_order)?;
        fit_with_factor(basis, &factor, series, lambda)?
    };
    Ok((c, lambda))
}

/// Smooths every device in parallel; `devices[i]` holds device `i`'s
/// coordinate series, all sharing one device id.
pub fn smooth_sample(
    bases: &BasisSet,
    devices: &[Vec<RawSeries>],
    config: &SmoothingConfig,
) -> Result<(FunctionalSample, Vec<Vec<CoordinateFit>>)> {
    if devices.is_empty() {
        return Err(Error::Input("no devices to smooth".into()));
    }
    let fits: Vec<Result<(FunctionalDatum, Vec<CoordinateFit>)>> = devices
        .par_iter()
        .map(|series| smooth_device_with_summary(bases, series, config))
        .collect();
    let mut ids = Vec::with_capacity(devices.len());
    let mut data = Vec::with_capacity(devices.len());
    let mut summaries = Vec::with_capacity(devices.len());
    for (series, fit) in devices.iter().zip(fits) {
        let id = series
            .first()
            .map(|s| s.device_id.clone())
            .ok_or_else(|| Error::Input("device without series".into()))?;
        let (datum, summary) = fit.map_err(|e| match e {
            Error::Input(msg) => Error::Input(format!("device {id}: {msg}")),
            other => other,
        })?;
        ids.push(id);
        data.push(datum);
        summaries.push(summary);
    }
    Ok((FunctionalSample::new(ids, data)?, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::make_bspline_basis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn uniform_times(q: usize, t_end: f64) -> Vec<f64> {
        (0..q).map(|l| t_end * l as f64 / (q - 1) as f64).collect()
    }

    fn fitted(basis: &BasisSystem, times: &[f64], c: &DVector<f64>) -> DVector<f64> {
        basis.design_matrix(times).unwrap() * c
    }

    #[test]
    fn raw_series_validation() {
        assert!(RawSeries::new("a", 0, vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(RawSeries::new("a", 0, vec![0.0], vec![1.0]).is_err());
        assert!(RawSeries::new("a", 0, vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(RawSeries::new("a", 0, vec![0.0, f64::NAN], vec![1.0, 2.0]).is_err());
        assert!(RawSeries::new("a", 0, vec![0.0, 0.5], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn lines_are_reproduced_for_any_lambda() {
        let basis = make_bspline_basis(1.0, 10, 4, 2).unwrap();
        let times = uniform_times(50, 1.0);
        let y: Vec<f64> = times.iter().map(|t| 3.0 - 2.0 * t).collect();
        let s = RawSeries::new("d", 0, times.clone(), y.clone()).unwrap();
        for lambda in [0.0, 1.0, 1e6] {
            let c = fit_coordinate(&basis, &s, lambda).unwrap();
            let f = fitted(&basis, &times, &c);
            let err = f.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "lambda={lambda}: {err}");
        }
    }

    #[test]
    fn square_system_interpolates() {
        let basis = make_bspline_basis(1.0, 12, 4, 2).unwrap();
        let times = uniform_times(12, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = times.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = RawSeries::new("d", 0, times.clone(), y.clone()).unwrap();
        let c = fit_coordinate(&basis, &s, 0.0).unwrap();
        let f = fitted(&basis, &times, &c);
        for (a, b) in f.iter().zip(&y) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn matches_explicit_normal_equations() {
        let basis = make_bspline_basis(1.0, 5, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let times: Vec<f64> = uniform_times(10, 1.0);
        let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = RawSeries::new("d", 0, times.clone(), y.clone()).unwrap();
        let c = fit_coordinate(&basis, &s, 0.1).unwrap();

        let rows: Vec<Vec<f64>> = times.iter().map(|&t| basis.eval_basis(t).unwrap()).collect();
        let phi = DMatrix::from_fn(10, 5, |i, k| rows[i][k]);
        let a = phi.transpose() * &phi + basis.penalty() * 0.1;
        let oracle = a.try_inverse().unwrap() * phi.transpose() * DVector::from_vec(y);
        assert!((&c - &oracle).abs().max() / oracle.abs().max() < 1e-10);
    }

    #[test]
    fn singular_systems_are_reported() {
        let basis = make_bspline_basis(1.0, 10, 4, 2).unwrap();
        // λ = 0 and fewer observations than basis functions
        let s = RawSeries::new("d", 0, uniform_times(6, 1.0), vec![1.0; 6]).unwrap();
        assert!(matches!(fit_coordinate(&basis, &s, 0.0), Err(Error::RankDeficient(_))));
        // all observations in one knot span
        let s = RawSeries::new("d", 0, vec![0.01, 0.02, 0.03, 0.04], vec![1.0; 4]).unwrap();
        assert!(matches!(fit_coordinate(&basis, &s, 0.0), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn out_of_domain_times_fail() {
        let basis = make_bspline_basis(1.0, 6, 4, 2).unwrap();
        let s = RawSeries::new("d", 0, vec![0.0, 0.5, 1.5], vec![0.0; 3]).unwrap();
        assert!(matches!(fit_coordinate(&basis, &s, 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn fitted_coefficients_minimise_objective() {
        let basis = make_bspline_basis(1.0, 12, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let times = uniform_times(80, 1.0);
        let y: Vec<f64> = times
            .iter()
            .map(|t| (6.0 * t).sin() + 0.3 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let s = RawSeries::new("d", 0, times, y).unwrap();
        let lambda = 1e-3;
        let c = fit_coordinate(&basis, &s, lambda).unwrap();
        let best = penalized_objective(&basis, &s, lambda, &c).unwrap();
        for _ in 0..50 {
            let dir = DVector::from_fn(12, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            let perturbed = &c + dir * 1e-3;
            assert!(penalized_objective(&basis, &s, lambda, &perturbed).unwrap() >= best);
        }
    }

    #[test]
    fn roughness_decreases_with_lambda() {
        let basis = make_bspline_basis(1.0, 15, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let times = uniform_times(100, 1.0);
        let y: Vec<f64> = times
            .iter()
            .map(|t| (9.0 * t).cos() + 0.2 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let s = RawSeries::new("d", 0, times, y).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4] {
            let c = fit_coordinate(&basis, &s, lambda).unwrap();
            let rough = c.dot(&(basis.penalty() * &c));
            assert!(rough <= last * (1.0 + 1e-9), "λ={lambda}");
            last = rough;
        }
    }

    #[test]
    fn huge_lambda_gives_least_squares_line() {
        let basis = make_bspline_basis(1.0, 10, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let times = uniform_times(60, 1.0);
        let y: Vec<f64> = times
            .iter()
            .map(|t| (5.0 * t).sin() + rng.gen_range(-0.5..0.5))
            .collect();
        let s = RawSeries::new("d", 0, times.clone(), y.clone()).unwrap();
        let c = fit_coordinate(&basis, &s, 1e12).unwrap();
        let f = fitted(&basis, &times, &c);
        // ordinary least-squares line
        let n = times.len() as f64;
        let tm = times.iter().sum::<f64>() / n;
        let ym = y.iter().sum::<f64>() / n;
        let slope = times.iter().zip(&y).map(|(t, v)| (t - tm) * (v - ym)).sum::<f64>()
            / times.iter().map(|t| (t - tm).powi(2)).sum::<f64>();
        let dev = times
            .iter()
            .zip(f.iter())
            .map(|(t, v)| (v - (ym + slope * (t - tm))).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-4, "{dev}");
    }

    #[test]
    fn gcv_single_grid_and_linear_data() {
        let basis = make_bspline_basis(1.0, 10, 4, 2).unwrap();
        let times = uniform_times(40, 1.0);
        let y: Vec<f64> = times.iter().map(|t| 1.0 + 4.0 * t).collect();
        let s = RawSeries::new("d", 0, times, y).unwrap();
        assert_eq!(select_lambda_gcv(&basis, &s, &[0.3]).unwrap(), 0.3);
        let grid = [1e-6, 1e-3, 1.0, 1e3];
        assert_eq!(select_lambda_gcv(&basis, &s, &grid).unwrap(), 1e3);
        assert!(select_lambda_gcv(&basis, &s, &[]).is_err());
    }

    #[test]
    fn gcv_matches_brute_force() {
        let basis = make_bspline_basis(1.0, 20, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let q = 200;
        let times = uniform_times(q, 1.0);
        let y: Vec<f64> = times
            .iter()
            .map(|t| (2.0 * std::f64::consts::PI * t).sin() + 0.2 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let s = RawSeries::new("d", 0, times.clone(), y.clone()).unwrap();
        let grid: Vec<f64> = (-8..=2).map(|e| 10f64.powi(e)).collect();
        let chosen = select_lambda_gcv(&basis, &s, &grid).unwrap();

        // explicit hat matrix per λ
        let phi = basis.design_matrix(&times).unwrap();
        let yv = DVector::from_vec(y);
        let mut scores = Vec::new();
        for &l in &grid {
            let inv = (phi.transpose() * &phi + basis.penalty() * l).try_inverse().unwrap();
            let hat = &phi * inv * phi.transpose();
            let rss = (&yv - &hat * &yv).norm_squared();
            scores.push(q as f64 * rss / (q as f64 - hat.trace()).powi(2));
        }
        let argmin = scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(chosen, grid[argmin]);
    }

    #[test]
    fn device_coordinates_fit_independently() {
        let bases = BasisSet::shared(make_bspline_basis(1.0, 10, 4, 2).unwrap(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let t1 = uniform_times(100, 1.0);
        let t2 = uniform_times(37, 1.0);
        let y1: Vec<f64> = t1.iter().map(|t| t * t + rng.gen_range(-0.1..0.1)).collect();
        let y2: Vec<f64> = t2.iter().map(|t| (3.0 * t).exp() + rng.gen_range(-0.1..0.1)).collect();
        let s1 = RawSeries::new("d", 0, t1, y1).unwrap();
        let s2 = RawSeries::new("d", 1, t2, y2).unwrap();
        let cfg = SmoothingConfig {
            lambda: 1e-4,
            ..Default::default()
        };
        let d = smooth_device(&bases, &[s2.clone(), s1.clone()], &cfg).unwrap();
        assert_eq!(d.coefficients()[0], fit_coordinate(bases.coordinate(0), &s1, 1e-4).unwrap());
        assert_eq!(d.coefficients()[1], fit_coordinate(bases.coordinate(1), &s2, 1e-4).unwrap());

        let single = BasisSet::shared(bases.coordinate(0).clone(), 1).unwrap();
        let d1 = smooth_device(&single, &[s1.clone()], &cfg).unwrap();
        assert_eq!(d1.coefficients()[0], fit_coordinate(bases.coordinate(0), &s1, 1e-4).unwrap());

        assert!(matches!(smooth_device(&bases, &[s1.clone()], &cfg), Err(Error::Input(_))));
        assert!(smooth_device(&bases, &[s1.clone(), s1], &cfg).is_err());
    }

    #[test]
    fn coordinate_errors_are_tagged() {
        let bases = BasisSet::shared(make_bspline_basis(1.0, 10, 4, 2).unwrap(), 2).unwrap();
        let ok = RawSeries::new("d", 0, uniform_times(50, 1.0), vec![1.0; 50]).unwrap();
        let thin = RawSeries::new("d", 1, uniform_times(4, 1.0), vec![1.0; 4]).unwrap();
        let cfg = SmoothingConfig {
            lambda: 0.0,
            ..Default::default()
        };
        match smooth_device(&bases, &[ok, thin], &cfg) {
            Err(Error::Coordinate { coordinate: 1, source }) => {
                assert!(matches!(*source, Error::RankDeficient(_)))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut c = SmoothingConfig::default();
        assert!(c.validate().is_ok());
        c.lambda = -1.0;
        assert!(c.validate().is_err());
        c.lambda = 1.0;
        c.lambda_grid = Some(vec![1.0, 0.0]);
        assert!(c.validate().is_err());
        c.lambda_grid = Some(vec![]);
        assert!(c.validate().is_err());
    }
}
