use std::io::Write;

use serde::{Deserialize, Serialize};

use super::grid::EvaluationGrid;
use super::outlyingness::{
    directional_from_gridded, fao_from_gridded, pointwise_outlyingness, DirectionalOutlyingness,
    ProjectionConfig,
};
use super::region::{central_region, depth_from_outlyingness, flag_outliers};
use crate::error::{Error, Result};
use crate::fdcore::{FunctionalSample, GriddedValues};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceOutlyingness {
    pub device_id: String,
    pub fao: f64,
    pub depth: f64,
    pub mo: Vec<f64>,
    pub vo: f64,
    pub fo: f64,
    pub outlier_flag: bool,
    pub in_central_set: bool,
}

/// Per-device outlyingness scores with the central region and outlier flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlyingnessReport {
    pub gamma: f64,
    pub grid_size: usize,
    pub direction_count: usize,
    pub seed: u64,
    /// Indices into `devices`, ascending.
    pub central_set: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag_fence: Option<f64>,
    pub devices: Vec<DeviceOutlyingness>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

fn all_curves_identical(values: &GriddedValues) -> bool {
    let (n, p) = (values.n(), values.p());
    (0..values.times().len()).all(|g| {
        let cs = values.cross_section(g);
        (1..n).all(|i| cs[i * p..(i + 1) * p] == cs[..p])
    })
}

/// Scores every device of `sample` on `grid`. A sample whose curves all
/// coincide gets zero outlyingness and a warning instead of an error.
pub fn outlyingness_report(
    sample: &FunctionalSample,
    grid: &EvaluationGrid,
    config: &ProjectionConfig,
    gamma: f64,
) -> Result<OutlyingnessReport> {
    let values = sample.evaluate(grid.times())?;
    let (n, p) = (sample.len(), sample.p());
    let mut warnings = Vec::new();
    let (fao, directional) = if n >= 4 && all_curves_identical(&values) {
        warnings.push("all curves coincide; every device has zero outlyingness".to_string());
        let zero = DirectionalOutlyingness {
            mo: vec![0.0; p],
            vo: 0.0,
            fo: 0.0,
        };
        (vec![0.0; n], vec![zero; n])
    } else {
        let pw = pointwise_outlyingness(&values, config)?;
        (
            fao_from_gridded(&pw, grid, n),
            directional_from_gridded(&pw, &values, grid),
        )
    };
    let depth = depth_from_outlyingness(&fao)?;
    let central_set = central_region(&fao, gamma)?;
    let flags = flag_outliers(&fao)?;
    warnings.extend(flags.warning.clone());
    let devices = sample
        .device_ids()
        .iter()
        .enumerate()
        .zip(directional)
        .map(|((i, id), d)| DeviceOutlyingness {
            device_id: id.clone(),
            fao: fao[i],
            depth: depth[i],
            mo: d.mo,
            vo: d.vo,
            fo: d.fo,
            outlier_flag: flags.flags[i],
            in_central_set: central_set.binary_search(&i).is_ok(),
        })
        .collect();
    Ok(OutlyingnessReport {
        gamma,
        grid_size: grid.len(),
        direction_count: config.direction_count(p),
        seed: config.seed,
        central_set,
        flag_fence: flags.upper_fence,
        devices,
        warnings,
    })
}

impl OutlyingnessReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn p(&self) -> usize {
        self.devices.first().map_or(0, |d| d.mo.len())
    }

    /// Header `device_id,fao,depth,mo_0..mo_{p-1},vo,fo,outlier_flag,in_central_set`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let p = self.p();
        let mut header = vec!["device_id".to_string(), "fao".into(), "depth".into()];
        header.extend((0..p).map(|j| format!("mo_{j}")));
        header.extend(["vo", "fo", "outlier_flag", "in_central_set"].map(String::from));
        w.write_record(&header)?;
        for d in &self.devices {
            if d.mo.len() != p {
                return Err(Error::Invariant("ragged mean outlyingness vectors".into()));
            }
            let mut row = vec![d.device_id.clone(), d.fao.to_string(), d.depth.to_string()];
            row.extend(d.mo.iter().map(f64::to_string));
            row.extend([
                d.vo.to_string(),
                d.fo.to_string(),
                d.outlier_flag.to_string(),
                d.in_central_set.to_string(),
            ]);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
