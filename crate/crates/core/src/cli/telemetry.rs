//! Long-format telemetry CSV (`device_id,coordinate,t,value`) and the
//! `device_id,group` labels file.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::simgen::SimulatedData;
use crate::smoothing::RawSeries;

pub const TELEMETRY_HEADER: [&str; 4] = ["device_id", "coordinate", "t", "value"];
pub const LABELS_HEADER: [&str; 2] = ["device_id", "group"];

pub fn write_telemetry<W: Write>(devices: &[Vec<RawSeries>], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(TELEMETRY_HEADER)?;
    for series in devices.iter().flatten() {
        let coordinate = series.coordinate().to_string();
        for (t, v) in series.times().iter().zip(series.values()) {
            w.write_record([series.device_id(), &coordinate, &t.to_string(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_labels<W: Write>(data: &SimulatedData, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(LABELS_HEADER)?;
    for (id, g) in data.device_ids.iter().zip(&data.groups) {
        w.write_record([id, g])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(input: R) -> Result<Vec<(String, String)>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()? != LABELS_HEADER.as_slice() {
        return Err(Error::Input(format!("labels header must be {}", LABELS_HEADER.join(","))));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok((rec[0].to_string(), rec[1].to_string()))
        })
        .collect()
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<T> {
    rec[idx].trim().parse().map_err(|_| {
        Error::Input(format!(
            "line {line}: cannot parse {} value {:?}",
            TELEMETRY_HEADER[idx], &rec[idx]
        ))
    })
}

/// Devices in order of first appearance; within a device, one series per
/// coordinate `0..p`, where `p` is one more than the largest coordinate seen.
pub fn read_telemetry<R: Read>(input: R) -> Result<Vec<Vec<RawSeries>>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    if r.headers()? != TELEMETRY_HEADER.as_slice() {
        return Err(Error::Input(format!(
            "line 1: telemetry header must be {}",
            TELEMETRY_HEADER.join(",")
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    // per device, per coordinate: (times, values)
    let mut columns: Vec<Vec<(Vec<f64>, Vec<f64>)>> = Vec::new();
    let mut p = 0;
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |pos| pos.line());
        if rec.len() != 4 {
            return Err(Error::Input(format!("line {line}: expected 4 fields, found {}", rec.len())));
        }
        let id = rec[0].trim();
        if id.is_empty() {
            return Err(Error::Input(format!("line {line}: empty device_id")));
        }
        let j: usize = parse_field(&rec, 1, line)?;
        let t: f64 = parse_field(&rec, 2, line)?;
        let v: f64 = parse_field(&rec, 3, line)?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Input(format!("line {line}: time {t} must be finite and nonnegative")));
        }
        if !v.is_finite() {
            return Err(Error::Input(format!("line {line}: non-finite value")));
        }
        let d = *index.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            columns.push(Vec::new());
            order.len() - 1
        });
        let cols = &mut columns[d];
        if cols.len() <= j {
            cols.resize_with(j + 1, Default::default);
        }
        p = p.max(j + 1);
        let (times, values) = &mut cols[j];
        if let Some(&last) = times.last() {
            if t <= last {
                return Err(Error::Input(format!(
                    "line {line}: device {id} coordinate {j}: time {t} does not increase past {last}"
                )));
            }
        }
        times.push(t);
        values.push(v);
    }
    if order.is_empty() {
        return Err(Error::Input("telemetry contains no devices".into()));
    }
    order
        .into_iter()
        .zip(columns)
        .map(|(id, cols)| {
            if cols.len() < p || cols.iter().any(|(t, _)| t.is_empty()) {
                return Err(Error::Input(format!("device {id} lacks some of the {p} coordinates")));
            }
            cols.into_iter()
                .enumerate()
                .map(|(j, (t, v))| {
                    RawSeries::new(id.clone(), j, t, v).map_err(|e| Error::Input(format!("device {id}: {e}")))
                })
                .collect()
        })
        .collect()
}

/// Largest observation time over all series.
pub fn max_time(devices: &[Vec<RawSeries>]) -> f64 {
    devices
        .iter()
        .flatten()
        .filter_map(|s| s.times().last().copied())
        .fold(0.0, f64::max)
}
