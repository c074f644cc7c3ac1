use serde::{Deserialize, Serialize};

use crate::basis::make_bspline_basis;
use crate::error::{Error, Result};
use crate::simgen::{DayConfig, FleetConfig};
use crate::smoothing::SmoothingConfig;

/// JSON Schema of [`PipelineConfig`].
pub const CONFIG_SCHEMA: &str = include_str!("../../schema/pipeline-config.schema.json");

/// Everything the commands need, in one JSON document. Unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Overrides the simulation and projection seeds when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub simulation: SimulationConfig,
    pub basis: BasisConfig,
    pub smoothing: SmoothingConfig,
    pub analysis: AnalysisConfig,
    pub profile: ProfileConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SimulationKind {
    #[default]
    Fleet,
    Day,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub kind: SimulationKind,
    pub fleet: FleetConfig,
    pub day: DayConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub n_basis: usize,
    pub order: usize,
    pub penalty_order: usize,
    /// Defaults to the largest observation time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_end: Option<f64>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            n_basis: 30,
            order: 4,
            penalty_order: 2,
            domain_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub grid_size: usize,
    pub gamma: f64,
    /// Defaults to `max(250, 50·p)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    pub seed: u64,
    /// Coordinates entering the analysis; all when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<usize>>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            grid_size: crate::depth::DEFAULT_GRID_SIZE,
            gamma: 0.5,
            directions: None,
            seed: 0,
            coordinates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramConfig {
    pub coordinate: usize,
    /// Explicit bin edges; otherwise `bins` equal bins over the sample range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// Residence histograms; one per coordinate with default bins when empty.
    pub histograms: Vec<HistogramConfig>,
    pub default_bins: usize,
    /// Defaults to the last coordinate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint_coordinate: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint_edges: Option<Vec<f64>>,
    pub pointwise_quantiles: [f64; 2],
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            histograms: Vec::new(),
            default_bins: 10,
            endpoint_coordinate: None,
            endpoint_edges: None,
            pointwise_quantiles: [0.025, 0.975],
        }
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "histogram edges must be at least 2 finite, strictly increasing values".into(),
        ));
    }
    Ok(())
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical compact JSON, the input of the manifest hash.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Pushes the top-level seed into the sections that consume one.
    pub fn resolve_seed(&mut self) {
        if let Some(seed) = self.seed {
            self.simulation.fleet.seed = seed;
            self.simulation.day.seed = seed;
            self.analysis.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.simulation.kind {
            SimulationKind::Fleet => self.simulation.fleet.validate()?,
            SimulationKind::Day => self.simulation.day.validate()?,
        }
        let b = &self.basis;
        if let Some(t) = b.domain_end {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("basis domain_end must be positive, got {t}")));
            }
        }
        make_bspline_basis(b.domain_end.unwrap_or(1.0), b.n_basis, b.order, b.penalty_order)?;
        self.smoothing.validate()?;
        if self.smoothing.penalty_order >= b.order {
            return Err(Error::Config(format!(
                "penalty order {} must be below the spline order {}",
                self.smoothing.penalty_order, b.order
            )));
        }
        let a = &self.analysis;
        if a.grid_size < 2 {
            return Err(Error::Config(format!("grid size must be at least 2, got {}", a.grid_size)));
        }
        if !(a.gamma > 0.0 && a.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", a.gamma)));
        }
        if a.directions == Some(0) {
            return Err(Error::Config("direction count must be positive".into()));
        }
        if a.coordinates.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::Config("coordinate selection is empty".into()));
        }
        let p = &self.profile;
        if p.default_bins == 0 {
            return Err(Error::Config("default_bins must be positive".into()));
        }
        for h in &p.histograms {
            if let Some(e) = &h.edges {
                check_edges(e)?;
            }
            if h.bins == Some(0) {
                return Err(Error::Config("histogram bins must be positive".into()));
            }
        }
        if let Some(e) = &p.endpoint_edges {
            check_edges(e)?;
        }
        let [lo, hi] = p.pointwise_quantiles;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Config(format!(
                "pointwise quantiles must satisfy 0 <= {lo} < {hi} <= 1"
            )));
        }
        Ok(())
    }
}
