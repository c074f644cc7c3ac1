//! JSON coefficient-exchange format.
//!
//! Smoothed functions are shared as basis descriptors plus coefficient
//! matrices; the raw telemetry never needs to leave its owner. Every
//! document carries a `schema` tag:
//!
//! ```json
//! {
//!   "schema": "mission-profile/functional-sample@1",
//!   "bases": [{"kind": "bspline", "domain_end": 24.0, "n_basis": 40, "order": 4, "penalty_order": 2}],
//!   "labels": [{"name": "temperature", "unit": "degC"}],
//!   "devices": [{"device_id": "dev0000", "coefficients": [[20.1, 19.8]]}]
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so a write/read cycle
//! reproduces coefficients bitwise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::BasisDescriptor;
use crate::error::{Error, Result};
use crate::fdcore::{BasisSet, CoordinateLabel, CovarianceModel, FunctionalDatum, FunctionalSample};

pub const SAMPLE_SCHEMA: &str = "mission-profile/functional-sample@1";
pub const DATUM_SCHEMA: &str = "mission-profile/functional-datum@1";
pub const COVARIANCE_SCHEMA: &str = "mission-profile/covariance@1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleDoc {
    schema: String,
    bases: Vec<BasisDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<CoordinateLabel>>,
    devices: Vec<DeviceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceDoc {
    device_id: String,
    coefficients: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatumDoc {
    schema: String,
    bases: Vec<BasisDescriptor>,
    coefficients: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CovarianceDoc {
    schema: String,
    bases: Vec<BasisDescriptor>,
    mean: Vec<Vec<f64>>,
    /// `blocks[j][k]` is `K_j × K_k`, row-major.
    blocks: Vec<Vec<Vec<Vec<f64>>>>,
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "unsupported document schema {found:?}, expected {expected:?}"
        )))
    }
}

fn rows_out(d: &FunctionalDatum) -> Vec<Vec<f64>> {
    d.coefficients().iter().map(|c| c.iter().copied().collect()).collect()
}

fn rows_in(bases: &BasisSet, rows: Vec<Vec<f64>>) -> Result<FunctionalDatum> {
    FunctionalDatum::new(bases.clone(), rows.into_iter().map(DVector::from_vec).collect())
}

pub fn sample_to_json(sample: &FunctionalSample) -> Result<String> {
    let doc = SampleDoc {
        schema: SAMPLE_SCHEMA.into(),
        bases: sample.bases().descriptors(),
        labels: sample.labels().map(<[_]>::to_vec),
        devices: sample
            .device_ids()
            .iter()
            .zip(sample.data())
            .map(|(id, d)| DeviceDoc {
                device_id: id.clone(),
                coefficients: rows_out(d),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn sample_from_json(text: &str) -> Result<FunctionalSample> {
    let doc: SampleDoc = serde_json::from_str(text)?;
    check_schema(&doc.schema, SAMPLE_SCHEMA)?;
    let bases = BasisSet::from_descriptors(&doc.bases)?;
    let mut ids = Vec::with_capacity(doc.devices.len());
    let mut data = Vec::with_capacity(doc.devices.len());
    for dev in doc.devices {
        data.push(rows_in(&bases, dev.coefficients).map_err(|e| {
            Error::Input(format!("device {}: {e}", dev.device_id))
        })?);
        ids.push(dev.device_id);
    }
    let sample = FunctionalSample::new(ids, data)?;
    match doc.labels {
        Some(labels) => sample.with_labels(labels),
        None => Ok(sample),
    }
}

pub fn datum_to_json(datum: &FunctionalDatum) -> Result<String> {
    let doc = DatumDoc {
        schema: DATUM_SCHEMA.into(),
        bases: datum.bases().descriptors(),
        coefficients: rows_out(datum),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn datum_from_json(text: &str) -> Result<FunctionalDatum> {
    let doc: DatumDoc = serde_json::from_str(text)?;
    check_schema(&doc.schema, DATUM_SCHEMA)?;
    let bases = BasisSet::from_descriptors(&doc.bases)?;
    rows_in(&bases, doc.coefficients)
}

pub fn covariance_to_json(cov: &CovarianceModel) -> Result<String> {
    let blocks = cov
        .blocks()
        .iter()
        .map(|row| {
            row.iter()
                .map(|b| {
                    (0..b.nrows())
                        .map(|r| b.row(r).iter().copied().collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let doc = CovarianceDoc {
        schema: COVARIANCE_SCHEMA.into(),
        bases: cov.bases().descriptors(),
        mean: rows_out(cov.mean()),
        blocks,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn covariance_from_json(text: &str) -> Result<CovarianceModel> {
    let doc: CovarianceDoc = serde_json::from_str(text)?;
    check_schema(&doc.schema, COVARIANCE_SCHEMA)?;
    let bases = BasisSet::from_descriptors(&doc.bases)?;
    let mean = rows_in(&bases, doc.mean)?;
    let blocks = doc
        .blocks
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|rows| {
                    let nrows = rows.len();
                    let ncols = rows.first().map_or(0, Vec::len);
                    if rows.iter().any(|r| r.len() != ncols) {
                        return Err(Error::Input("ragged covariance block".into()));
                    }
                    Ok(DMatrix::from_row_iterator(
                        nrows,
                        ncols,
                        rows.into_iter().flatten(),
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    CovarianceModel::new(mean, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::make_bspline_basis;
    use crate::fdcore::covariance_function;
    use proptest::prelude::*;

    fn sample_from(coefs: &[Vec<f64>]) -> FunctionalSample {
        let bases = BasisSet::new(vec![
            make_bspline_basis(24.0, 6, 4, 2).unwrap(),
            make_bspline_basis(24.0, 5, 3, 1).unwrap(),
        ])
        .unwrap();
        let data = coefs
            .iter()
            .map(|c| {
                FunctionalDatum::new(
                    bases.clone(),
                    vec![DVector::from_column_slice(&c[..6]), DVector::from_column_slice(&c[6..])],
                )
                .unwrap()
            })
            .collect();
        FunctionalSample::new((0..coefs.len()).map(|i| format!("dev{i:04}")).collect(), data)
            .unwrap()
    }

    proptest! {
        #[test]
        fn sample_round_trip_is_bitwise(coefs in prop::collection::vec(
            prop::collection::vec(-1e6f64..1e6, 11), 2..6)) {
            let s = sample_from(&coefs)
                .with_labels(vec![
                    CoordinateLabel { name: "temperature".into(), unit: Some("degC".into()) },
                    CoordinateLabel { name: "mileage".into(), unit: None },
                ])
                .unwrap();
            let back = sample_from_json(&sample_to_json(&s).unwrap()).unwrap();
            prop_assert_eq!(&back, &s);
            for (a, b) in back.data().iter().zip(s.data()) {
                for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
                    for (u, v) in x.iter().zip(y.iter()) {
                        prop_assert_eq!(u.to_bits(), v.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn covariance_and_datum_round_trip() {
        let s = sample_from(&[
            (0..11).map(|i| i as f64 * 0.1).collect(),
            (0..11).map(|i| (i as f64).sin()).collect(),
            (0..11).map(|i| 1.0 / (1.0 + i as f64)).collect(),
        ]);
        let cov = covariance_function(&s).unwrap();
        let back = covariance_from_json(&covariance_to_json(&cov).unwrap()).unwrap();
        assert_eq!(back, cov);
        let d = &s.data()[1];
        assert_eq!(&datum_from_json(&datum_to_json(d).unwrap()).unwrap(), d);
    }

    #[test]
    fn rejects_foreign_and_malformed_documents() {
        let s = sample_from(&[(0..11).map(|i| i as f64).collect()]);
        let text = sample_to_json(&s).unwrap();
        let wrong = text.replace(SAMPLE_SCHEMA, "something-else@9");
        assert!(matches!(sample_from_json(&wrong), Err(Error::Input(_))));
        let extra = text.replacen("\"schema\"", "\"bogus\": 1, \"schema\"", 1);
        assert!(sample_from_json(&extra).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["devices"][0]["coefficients"][0].as_array_mut().unwrap().push(1.0.into());
        assert!(matches!(sample_from_json(&v.to_string()), Err(Error::Input(_))));
        assert!(datum_from_json(&text).is_err());
    }
}
