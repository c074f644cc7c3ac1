//! Geometry of multivariate functional data in basis-coefficient space.
//!
//! Every integral (inner products, the covariance operator) is evaluated
//! exactly through per-coordinate Gram matrices; nothing here runs quadrature.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisDescriptor, BasisSystem};
use crate::error::{Error, Result};

/// One basis system per coordinate, shared by every datum of a sample.
#[derive(Debug, Clone)]
pub struct BasisSet(Arc<[BasisSystem]>);

impl BasisSet {
    pub fn new(bases: Vec<BasisSystem>) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| Error::Input("a basis set needs at least one coordinate".into()))?;
        let end = first.domain_end();
        if let Some(b) = bases.iter().find(|b| b.domain_end() != end) {
            return Err(Error::BasisMismatch(format!(
                "coordinates span different domains: [0, {end}] and [0, {}]",
                b.domain_end()
            )));
        }
        Ok(Self(bases.into()))
    }

    /// The same basis for all `p` coordinates.
    pub fn shared(basis: BasisSystem, p: usize) -> Result<Self> {
        Self::new(vec![basis; p])
    }

    pub fn from_descriptors(descriptors: &[BasisDescriptor]) -> Result<Self> {
        Self::new(
            descriptors
                .iter()
                .map(BasisDescriptor::build)
                .collect::<Result<_>>()?,
        )
    }

    pub fn p(&self) -> usize {
        self.0.len()
    }

    pub fn coordinate(&self, j: usize) -> &BasisSystem {
        &self.0[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &BasisSystem> {
        self.0.iter()
    }

    pub fn domain_end(&self) -> f64 {
        self.0[0].domain_end()
    }

    pub fn descriptors(&self) -> Vec<BasisDescriptor> {
        self.0.iter().map(BasisSystem::descriptor).collect()
    }

    fn ensure_same(&self, other: &BasisSet) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch(
                "functions are expanded in different basis systems".into(),
            ))
        }
    }
}

impl PartialEq for BasisSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0[..] == other.0[..]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateLabel {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

/// A smoothed `p`-variate function: row `j` holds the coefficients of
/// coordinate `j` in its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDatum {
    bases: BasisSet,
    coefficients: Vec<DVector<f64>>,
}

impl FunctionalDatum {
    pub fn new(bases: BasisSet, coefficients: Vec<DVector<f64>>) -> Result<Self> {
        if coefficients.len() != bases.p() {
            return Err(Error::Input(format!(
                "expected {} coefficient rows, got {}",
                bases.p(),
                coefficients.len()
            )));
        }
        for (j, (row, b)) in coefficients.iter().zip(bases.iter()).enumerate() {
            if row.len() != b.n_basis() {
                return Err(Error::Input(format!(
                    "coordinate {j} has {} coefficients but its basis has {} functions",
                    row.len(),
                    b.n_basis()
                )));
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::Input(format!("coordinate {j} has non-finite coefficients")));
            }
        }
        Ok(Self {
            bases,
            coefficients,
        })
    }

    pub fn zeros(bases: BasisSet) -> Self {
        let coefficients = bases.iter().map(|b| DVector::zeros(b.n_basis())).collect();
        Self {
            bases,
            coefficients,
        }
    }

    pub fn bases(&self) -> &BasisSet {
        &self.bases
    }

    pub fn coefficients(&self) -> &[DVector<f64>] {
        &self.coefficients
    }

    pub fn p(&self) -> usize {
        self.coefficients.len()
    }

    pub fn domain_end(&self) -> f64 {
        self.bases.domain_end()
    }

    /// `(x̃_1(t), …, x̃_p(t))`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        (0..self.p()).map(|j| self.eval_coordinate(j, t)).collect()
    }

    pub fn eval_coordinate(&self, j: usize, t: f64) -> Result<f64> {
        let (first, local) = self.bases.coordinate(j).eval_local(t, 0)?;
        let c = &self.coefficients[j];
        Ok(local.iter().enumerate().map(|(o, v)| v * c[first + o]).sum())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &FunctionalDatum, b: f64) -> Result<FunctionalDatum> {
        self.bases.ensure_same(&other.bases)?;
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Ok(FunctionalDatum {
            bases: self.bases.clone(),
            coefficients,
        })
    }

    pub fn scale(&self, a: f64) -> FunctionalDatum {
        FunctionalDatum {
            bases: self.bases.clone(),
            coefficients: self.coefficients.iter().map(|c| c * a).collect(),
        }
    }
}

/// `⟨f, g⟩ = Σ_j c_fjᵀ G_j c_gj`.
pub fn inner_product(f: &FunctionalDatum, g: &FunctionalDatum) -> Result<f64> {
    f.bases.ensure_same(&g.bases)?;
    Ok(f.coefficients
        .iter()
        .zip(&g.coefficients)
        .zip(f.bases.iter())
        .map(|((cf, cg), b)| cf.dot(&(b.gram() * cg)))
        .sum())
}

pub fn norm(f: &FunctionalDatum) -> f64 {
    // ⟨f, f⟩ can dip below zero by rounding for tiny functions.
    inner_product(f, f).map(|v| v.max(0.0).sqrt()).unwrap_or(0.0)
}

/// A sample of `n` devices sharing one basis set.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    bases: BasisSet,
    device_ids: Vec<String>,
    data: Vec<FunctionalDatum>,
    labels: Option<Vec<CoordinateLabel>>,
}

impl FunctionalSample {
    pub fn new(device_ids: Vec<String>, data: Vec<FunctionalDatum>) -> Result<Self> {
        let first = data
            .first()
            .ok_or_else(|| Error::Input("a functional sample needs at least one device".into()))?;
        if device_ids.len() != data.len() {
            return Err(Error::Input(format!(
                "{} device ids for {} functions",
                device_ids.len(),
                data.len()
            )));
        }
        let bases = first.bases.clone();
        for (id, d) in device_ids.iter().zip(&data) {
            if d.bases != bases {
                return Err(Error::BasisMismatch(format!(
                    "device {id} uses a different basis set"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = device_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Input(format!("duplicate device id {dup}")));
        }
        Ok(Self {
            bases,
            device_ids,
            data,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<CoordinateLabel>) -> Result<Self> {
        if labels.len() != self.p() {
            return Err(Error::Input(format!(
                "{} coordinate labels for p = {}",
                labels.len(),
                self.p()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[CoordinateLabel]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn p(&self) -> usize {
        self.bases.p()
    }

    pub fn bases(&self) -> &BasisSet {
        &self.bases
    }

    pub fn domain_end(&self) -> f64 {
        self.bases.domain_end()
    }

    pub fn data(&self) -> &[FunctionalDatum] {
        &self.data
    }

    pub fn device_ids(&self) -> &[String] {
        &self.device_ids
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Input(format!("device index {i} out of range")));
        }
        let ids = indices.iter().map(|&i| self.device_ids[i].clone()).collect();
        let data = indices.iter().map(|&i| self.data[i].clone()).collect();
        let mut s = Self::new(ids, data)?;
        s.labels = self.labels.clone();
        Ok(s)
    }

    /// The same devices restricted to the listed coordinates, in that order.
    pub fn select_coordinates(&self, coordinates: &[usize]) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::Config("no coordinates selected".into()));
        }
        if let Some(&j) = coordinates.iter().find(|&&j| j >= self.p()) {
            return Err(Error::Config(format!(
                "coordinate {j} out of range for p = {}",
                self.p()
            )));
        }
        let bases = BasisSet::new(
            coordinates
                .iter()
                .map(|&j| self.bases.coordinate(j).clone())
                .collect(),
        )?;
        let data = self
            .data
            .iter()
            .map(|d| {
                FunctionalDatum::new(
                    bases.clone(),
                    coordinates.iter().map(|&j| d.coefficients[j].clone()).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut s = Self::new(self.device_ids.clone(), data)?;
        s.labels = self
            .labels
            .as_ref()
            .map(|l| coordinates.iter().map(|&j| l[j].clone()).collect());
        Ok(s)
    }

    /// Values `x̃_ij(t_g)` laid out as `[g][i][j]`.
    pub fn evaluate(&self, times: &[f64]) -> Result<GriddedValues> {
        let (n, p, g) = (self.len(), self.p(), times.len());
        let mut values = vec![0.0; g * n * p];
        for j in 0..p {
            let phi = self.bases.coordinate(j).design_matrix(times)?;
            for (i, d) in self.data.iter().enumerate() {
                let v = &phi * &d.coefficients[j];
                for (gi, x) in v.iter().enumerate() {
                    values[(gi * n + i) * p + j] = *x;
                }
            }
        }
        Ok(GriddedValues {
            times: times.to_vec(),
            n,
            p,
            values,
        })
    }
}

/// Evaluations of a sample on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedValues {
    times: Vec<f64>,
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl GriddedValues {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// The `n × p` cross-section at grid index `g`, row-major.
    pub fn cross_section(&self, g: usize) -> &[f64] {
        let len = self.n * self.p;
        &self.values[g * len..(g + 1) * len]
    }

    pub fn value(&self, g: usize, i: usize, j: usize) -> f64 {
        self.values[(g * self.n + i) * self.p + j]
    }

    /// Curve `i`, coordinate `j` across the grid.
    pub fn curve(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.times.len()).map(|g| self.value(g, i, j)).collect()
    }

    /// All `n` curves of coordinate `j`.
    pub fn coordinate_curves(&self, j: usize) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.curve(i, j)).collect()
    }
}

/// Coefficient-wise arithmetic mean.
pub fn mean_function(sample: &FunctionalSample) -> FunctionalDatum {
    let n = sample.len() as f64;
    let coefficients = (0..sample.p())
        .map(|j| {
            let mut acc = DVector::zeros(sample.bases.coordinate(j).n_basis());
            for d in &sample.data {
                acc += &d.coefficients[j];
            }
            acc / n
        })
        .collect();
    FunctionalDatum {
        bases: sample.bases.clone(),
        coefficients,
    }
}

/// Sample cross-covariance of the coefficient vectors, block `(j, k)` is
/// `K_j × K_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    bases: BasisSet,
    mean: FunctionalDatum,
    blocks: Vec<Vec<DMatrix<f64>>>,
}

pub fn covariance_function(sample: &FunctionalSample) -> Result<CovarianceModel> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Input(format!(
            "covariance needs at least two functions, got {n}"
        )));
    }
    let mean = mean_function(sample);
    let p = sample.p();
    let centered: Vec<Vec<DVector<f64>>> = sample
        .data
        .iter()
        .map(|d| {
            d.coefficients
                .iter()
                .zip(&mean.coefficients)
                .map(|(c, m)| c - m)
                .collect()
        })
        .collect();
    let denom = (n - 1) as f64;
    let mut blocks = Vec::with_capacity(p);
    for j in 0..p {
        let mut row = Vec::with_capacity(p);
        for k in 0..p {
            let kj = sample.bases.coordinate(j).n_basis();
            let kk = sample.bases.coordinate(k).n_basis();
            let mut acc = DMatrix::zeros(kj, kk);
            for c in &centered {
                acc.ger(1.0, &c[j], &c[k], 1.0);
            }
            row.push(acc / denom);
        }
        blocks.push(row);
    }
    Ok(CovarianceModel {
        bases: sample.bases.clone(),
        mean,
        blocks,
    })
}

impl CovarianceModel {
    pub fn new(mean: FunctionalDatum, blocks: Vec<Vec<DMatrix<f64>>>) -> Result<Self> {
        let bases = mean.bases.clone();
        let p = bases.p();
        if blocks.len() != p || blocks.iter().any(|r| r.len() != p) {
            return Err(Error::Input(format!("covariance needs {p}×{p} blocks")));
        }
        for (j, row) in blocks.iter().enumerate() {
            for (k, b) in row.iter().enumerate() {
                let shape = (bases.coordinate(j).n_basis(), bases.coordinate(k).n_basis());
                if b.shape() != shape {
                    return Err(Error::Input(format!(
                        "block ({j}, {k}) has shape {:?}, expected {shape:?}",
                        b.shape()
                    )));
                }
            }
        }
        Ok(Self { bases, mean, blocks })
    }

    pub fn bases(&self) -> &BasisSet {
        &self.bases
    }

    pub fn mean(&self) -> &FunctionalDatum {
        &self.mean
    }

    pub fn p(&self) -> usize {
        self.bases.p()
    }

    pub fn block(&self, j: usize, k: usize) -> &DMatrix<f64> {
        &self.blocks[j][k]
    }

    pub fn blocks(&self) -> &[Vec<DMatrix<f64>>] {
        &self.blocks
    }

    /// `Σ̂_jk(s, t) = φ_j(s)ᵀ Ĉ_jk φ_k(t)`.
    pub fn eval(&self, j: usize, k: usize, s: f64, t: f64) -> Result<f64> {
        let p = self.p();
        if j >= p || k >= p {
            return Err(Error::Input(format!(
                "coordinate indices ({j}, {k}) out of range for p = {p}"
            )));
        }
        let phi_s = DVector::from_vec(self.bases.coordinate(j).eval_basis(s)?);
        let phi_t = DVector::from_vec(self.bases.coordinate(k).eval_basis(t)?);
        Ok(phi_s.dot(&(&self.blocks[j][k] * phi_t)))
    }

    /// `(Γf)_j = Σ_k Ĉ_jk G_k c_fk`.
    pub fn apply(&self, f: &FunctionalDatum) -> Result<FunctionalDatum> {
        self.bases.ensure_same(&f.bases)?;
        let weighted: Vec<DVector<f64>> = f
            .coefficients
            .iter()
            .zip(self.bases.iter())
            .map(|(c, b)| b.gram() * c)
            .collect();
        let coefficients = self
            .blocks
            .iter()
            .zip(self.bases.iter())
            .map(|(row, bj)| {
                let mut acc = DVector::zeros(bj.n_basis());
                for (block, w) in row.iter().zip(&weighted) {
                    acc += block * w;
                }
                acc
            })
            .collect();
        Ok(FunctionalDatum {
            bases: self.bases.clone(),
            coefficients,
        })
    }
}

pub fn eval_covariance(cov: &CovarianceModel, j: usize, k: usize, s: f64, t: f64) -> Result<f64> {
    cov.eval(j, k, s, t)
}

pub fn apply_covariance_operator(
    cov: &CovarianceModel,
    f: &FunctionalDatum,
) -> Result<FunctionalDatum> {
    cov.apply(f)
}
