use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{PipelineConfig, SimulationKind};
use super::telemetry::{max_time, read_telemetry, write_labels, write_telemetry};
use crate::basis::make_bspline_basis;
use crate::depth::{
    functional_boxplot, outlyingness_report, EvaluationGrid, OutlyingnessReport, ProjectionConfig,
};
use crate::error::{Error, Result};
use crate::exchange::{sample_from_json, sample_to_json};
use crate::fdcore::{BasisSet, FunctionalSample};
use crate::profile::{
    classical_profile_export, endpoint_values, pointwise_quantile_selection, residence_histogram,
    selection_comparison, uniform_edges, write_comparison_csv, write_endpoint_csv, write_profile_csv,
    HistogramSpec,
};
use crate::simgen::{gen_mileage_fleet, gen_temperature_day};
use crate::smoothing::smooth_sample;

pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const COEFFICIENTS_FILE: &str = "coefficients.json";
pub const SMOOTHING_SUMMARY_FILE: &str = "smoothing_summary.csv";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const BOXPLOT_OUTLIERS_FILE: &str = "boxplot_outliers.csv";
pub const MSPLOT_FILE: &str = "msplot.csv";
pub const ENDPOINT_FILE: &str = "endpoint.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Upper bound on the relative conservation error of residence histograms.
pub const CONSERVATION_TOLERANCE: f64 = 1e-12;

fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Collects the files a command writes below its output directory.
struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_context(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| io_context(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| io_context(&path, e))?;
        info!("wrote {}", path.display());
        self.written.push(path.clone());
        Ok(path)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        self.write_with(name, |w| {
            w.write_all(text.as_bytes())?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn projection(config: &PipelineConfig) -> ProjectionConfig {
    ProjectionConfig {
        count: config.analysis.directions,
        seed: config.analysis.seed,
    }
}

fn analysis_grid(config: &PipelineConfig, sample: &FunctionalSample) -> Result<EvaluationGrid> {
    EvaluationGrid::uniform(sample.domain_end(), config.analysis.grid_size)
}

/// Writes `telemetry.csv` and `labels.csv`.
pub fn cmd_simulate(kind: SimulationKind, config: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let data = match kind {
        SimulationKind::Fleet => gen_mileage_fleet(&config.simulation.fleet)?,
        SimulationKind::Day => gen_temperature_day(&config.simulation.day)?,
    };
    info!("simulated {} devices ({kind:?})", data.len());
    let mut o = Output::new(out)?;
    o.write_with(TELEMETRY_FILE, |w| write_telemetry(&data.series, w))?;
    o.write_with(LABELS_FILE, |w| write_labels(&data, w))?;
    Ok(o.written)
}

/// Fits every device of a telemetry CSV; writes `coefficients.json` and a
/// per-coordinate `smoothing_summary.csv` (`device_id,coordinate,lambda,rmse`).
pub fn cmd_smooth(input: &Path, config: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let file = File::open(input).map_err(|e| Error::Input(format!("cannot open {}: {e}", input.display())))?;
    let devices = read_telemetry(std::io::BufReader::new(file))?;
    let p = devices[0].len();
    let domain_end = config.basis.domain_end.unwrap_or_else(|| max_time(&devices));
    if devices.iter().flatten().any(|s| s.times().last().is_some_and(|&t| t > domain_end)) {
        return Err(Error::Input(format!("observations beyond the basis domain end {domain_end}")));
    }
    let b = &config.basis;
    let basis = make_bspline_basis(domain_end, b.n_basis, b.order, b.penalty_order)?;
    let bases = BasisSet::shared(basis, p)?;
    let (sample, fits) = smooth_sample(&bases, &devices, &config.smoothing)?;
    let worst = fits.iter().flatten().map(|f| f.rmse).fold(0.0, f64::max);
    info!("smoothed {} devices, p = {p}, largest rmse {worst}", sample.len());
    let mut o = Output::new(out)?;
    o.write_text(COEFFICIENTS_FILE, &sample_to_json(&sample)?)?;
    o.write_with(SMOOTHING_SUMMARY_FILE, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["device_id", "coordinate", "lambda", "rmse"])?;
        for (id, device) in sample.device_ids().iter().zip(&fits) {
            for f in device {
                csv.write_record([id.clone(), f.coordinate.to_string(), f.lambda.to_string(), f.rmse.to_string()])?;
            }
        }
        csv.flush()?;
        Ok(())
    })?;
    Ok(o.written)
}

fn load_sample(input: &Path) -> Result<FunctionalSample> {
    sample_from_json(&read_text(input)?)
}

/// Outlyingness report, functional boxplot bands per coordinate and MS-plot data.
pub fn cmd_analyze(input: &Path, config: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut sample = load_sample(input)?;
    if let Some(coords) = &config.analysis.coordinates {
        sample = sample.select_coordinates(coords)?;
    }
    if sample.len() < 4 {
        return Err(Error::Input(format!("analysis needs at least 4 devices, got {}", sample.len())));
    }
    let grid = analysis_grid(config, &sample)?;
    let report = outlyingness_report(&sample, &grid, &projection(config), config.analysis.gamma)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    let values = sample.evaluate(grid.times())?;
    let mut o = Output::new(out)?;
    o.write_text(REPORT_JSON_FILE, &report.to_json()?)?;
    o.write_with(REPORT_CSV_FILE, |w| report.write_csv(w))?;

    let mut outliers = Vec::new();
    for j in 0..sample.p() {
        let bp = functional_boxplot(&values.coordinate_curves(j), &grid)?;
        o.write_with(&format!("boxplot_c{j}.csv"), |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record([
                "t",
                "median",
                "central50_lower",
                "central50_upper",
                "fence_lower",
                "fence_upper",
                "central95_lower",
                "central95_upper",
            ])?;
            for (g, t) in grid.times().iter().enumerate() {
                csv.write_record([
                    *t,
                    values.value(g, bp.median_index, j),
                    bp.central50_lower[g],
                    bp.central50_upper[g],
                    bp.fence_lower[g],
                    bp.fence_upper[g],
                    bp.central95_lower[g],
                    bp.central95_upper[g],
                ]
                .map(|v| v.to_string()))?;
            }
            csv.flush()?;
            Ok(())
        })?;
        outliers.extend(bp.outlier_indices.iter().map(|&i| (j, i, bp.mbd[i])));
    }
    o.write_with(BOXPLOT_OUTLIERS_FILE, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["coordinate", "device_id", "mbd"])?;
        for (j, i, mbd) in &outliers {
            csv.write_record([j.to_string(), sample.device_ids()[*i].clone(), mbd.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    o.write_with(MSPLOT_FILE, |w| write_msplot(&report, w))?;
    info!(
        "analyzed {} devices: {} flagged, central set of {}",
        sample.len(),
        report.devices.iter().filter(|d| d.outlier_flag).count(),
        report.central_set.len()
    );
    Ok(o.written)
}

/// `device_id,mo_0..,mo_norm,vo,fo`.
fn write_msplot<W: Write>(report: &OutlyingnessReport, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let p = report.p();
    let mut header = vec!["device_id".to_string()];
    header.extend((0..p).map(|j| format!("mo_{j}")));
    header.extend(["mo_norm", "vo", "fo"].map(String::from));
    csv.write_record(&header)?;
    for d in &report.devices {
        let mut row = vec![d.device_id.clone()];
        row.extend(d.mo.iter().map(f64::to_string));
        row.push(d.mo.iter().map(|m| m * m).sum::<f64>().sqrt().to_string());
        row.push(d.vo.to_string());
        row.push(d.fo.to_string());
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Residence histograms of the central set, its endpoint histogram and the
/// comparison with the pointwise quantile selection.
pub fn cmd_profile(input: &Path, report_path: &Path, config: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let sample = load_sample(input)?;
    let report = OutlyingnessReport::from_json(&read_text(report_path)?)?;
    let report_ids: Vec<&str> = report.devices.iter().map(|d| d.device_id.as_str()).collect();
    if report_ids != sample.device_ids().iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Input("report devices do not match the coefficient file".into()));
    }
    let central = &report.central_set;
    if central.is_empty() {
        return Err(Error::Input("the report's central set is empty".into()));
    }
    let grid = analysis_grid(config, &sample)?;
    let values = sample.evaluate(grid.times())?;
    let pc = &config.profile;
    let histograms = if pc.histograms.is_empty() {
        (0..sample.p())
            .map(|coordinate| super::config::HistogramConfig {
                coordinate,
                edges: None,
                bins: None,
            })
            .collect()
    } else {
        pc.histograms.clone()
    };

    let mut o = Output::new(out)?;
    for h in &histograms {
        let j = h.coordinate;
        if j >= sample.p() {
            return Err(Error::Config(format!("histogram coordinate {j} out of range")));
        }
        let edges = match &h.edges {
            Some(e) => e.clone(),
            None => {
                let (lo, hi) = value_range(values.coordinate_curves(j).into_iter().flatten());
                uniform_edges(lo, hi, h.bins.unwrap_or(pc.default_bins))?
            }
        };
        let spec = HistogramSpec::new(j, edges, grid.clone())?;
        let hist = residence_histogram(&sample, central, &spec)?;
        let err = hist.conservation_error();
        if !(err <= CONSERVATION_TOLERANCE) {
            return Err(Error::Invariant(format!(
                "residence histogram of coordinate {j} loses time: relative error {err:e}"
            )));
        }
        let rows = classical_profile_export(&hist, None)?;
        o.write_with(&format!("profile_c{j}.csv"), |w| write_profile_csv(&rows, w))?;
        o.write_text(&format!("profile_c{j}.json"), &hist.to_json()?)?;
    }

    let k = pc.endpoint_coordinate.unwrap_or(sample.p() - 1);
    let edges = match &pc.endpoint_edges {
        Some(e) => e.clone(),
        None => {
            let (lo, hi) = value_range(endpoint_values(&sample, k)?.into_iter());
            uniform_edges(lo, hi, pc.default_bins)?
        }
    };
    let [lo_q, hi_q] = pc.pointwise_quantiles;
    let pointwise = pointwise_quantile_selection(&sample, k, lo_q, hi_q)?;
    let cmp = selection_comparison(&sample, central, &pointwise, k, &edges)?;
    if cmp.functional.total() != central.len() || cmp.pointwise.total() != pointwise.len() {
        return Err(Error::Invariant("endpoint histogram lost devices".into()));
    }
    o.write_with(ENDPOINT_FILE, |w| write_endpoint_csv(&cmp.functional, w))?;
    o.write_with(COMPARISON_FILE, |w| write_comparison_csv(&cmp, w))?;
    info!(
        "profiled {} central devices; pointwise selection keeps {}",
        central.len(),
        pointwise.len()
    );
    Ok(o.written)
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    seed: u64,
    simulation: SimulationKind,
    config: PipelineConfig,
    files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// simulate → smooth → analyze → profile in one directory, plus `manifest.json`.
pub fn cmd_pipeline(config: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let kind = config.simulation.kind;
    let mut written = cmd_simulate(kind, config, out)?;
    written.extend(cmd_smooth(&out.join(TELEMETRY_FILE), config, out)?);
    written.extend(cmd_analyze(&out.join(COEFFICIENTS_FILE), config, out)?);
    written.extend(cmd_profile(
        &out.join(COEFFICIENTS_FILE),
        &out.join(REPORT_JSON_FILE),
        config,
        out,
    )?);
    let mut files = written
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| io_context(p, e))?;
            Ok(ManifestEntry {
                path: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        tool: "mprof",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(config.canonical_json()?.as_bytes()),
        seed: config.analysis.seed,
        simulation: kind,
        config: config.clone(),
        files,
    };
    let mut o = Output::new(out)?;
    o.write_text(MANIFEST_FILE, &serde_json::to_string_pretty(&manifest)?)?;
    written.extend(o.written);
    Ok(written)
}
